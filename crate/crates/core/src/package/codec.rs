//! Wire format of a prompt package.
//!
//! ```text
//! "PDM1" | wire_version:u8
//! package_id:str | provider_id:str | version:u32 | start:u64 | duration:u64
//! element_count:u32
//! per element, sorted by element_id:
//!   element_id:str | modality:u8 | role:str | priority:u32 | mandatory:u8
//!   feature_tag:str | payload:blob
//! ```
//!
//! `str` and `blob` are a little-endian u32 length followed by the bytes.
//! A `semantics` payload is the canonical graph encoding.

use super::{Modality, PackageError, Payload, PromptPackage, Schedule, ServiceElement};
use crate::semdesc::{parse_graph, serialize_graph};
use crate::wire::{Reader, WireError, Writer};

pub const MAGIC: &[u8; 4] = b"PDM1";
pub const VERSION: u8 = 1;

pub fn encode_package(p: &PromptPackage) -> Vec<u8> {
    let mut elements: Vec<&ServiceElement> = p.elements.iter().collect();
    elements.sort_by(|a, b| a.element_id.as_bytes().cmp(b.element_id.as_bytes()));

    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u8(VERSION);
    w.str(&p.package_id);
    w.str(&p.provider_id);
    w.u32(p.version);
    w.u64(p.schedule.start);
    w.u64(p.schedule.duration);
    w.u32(elements.len() as u32);
    for e in elements {
        w.str(&e.element_id);
        w.u8(e.modality.code());
        w.str(&e.role);
        w.u32(e.priority);
        w.u8(e.mandatory as u8);
        w.str(&e.feature_tag);
        match &e.payload {
            Payload::Bytes(b) => w.blob(b),
            Payload::Graph(g) => w.blob(&serialize_graph(g)),
        }
    }
    w.finish()
}

pub fn package_wire_size(p: &PromptPackage) -> usize {
    encode_package(p).len()
}

pub fn decode_package(bytes: &[u8]) -> Result<PromptPackage, PackageError> {
    let codec = |e: WireError| PackageError::Codec {
        offset: e.offset,
        message: e.reason,
    };
    let mut r = Reader::new(bytes);
    if r.take(4).map_err(codec)? != MAGIC {
        return Err(PackageError::Codec {
            offset: 0,
            message: "bad magic, expected PDM1".into(),
        });
    }
    let version = r.u8().map_err(codec)?;
    if version != VERSION {
        return Err(PackageError::Version {
            found: version,
            expected: VERSION,
        });
    }
    read_body(&mut r).map_err(codec)
}

fn read_body(r: &mut Reader) -> Result<PromptPackage, WireError> {
    let package_id = r.str()?;
    let provider_id = r.str()?;
    let version = r.u32()?;
    let start = r.u64()?;
    let duration = r.u64()?;
    let count = r.u32()?;
    let mut elements: Vec<ServiceElement> = Vec::new();
    for _ in 0..count {
        let at = r.offset();
        let element_id = r.str()?;
        if let Some(prev) = elements.last() {
            if prev.element_id.as_bytes() >= element_id.as_bytes() {
                return Err(WireError {
                    offset: at,
                    reason: "elements not in canonical order".into(),
                });
            }
        }
        let code = r.u8()?;
        let modality =
            Modality::from_code(code).ok_or_else(|| r.error(format!("unknown modality {code}")))?;
        let role = r.str()?;
        let priority = r.u32()?;
        let mandatory = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(r.error(format!("bad mandatory flag {other}"))),
        };
        let feature_tag = r.str()?;
        let payload_at = r.offset() + 4;
        let raw = r.blob()?;
        let payload = if modality == Modality::Semantics {
            let g = parse_graph(raw).map_err(|e| WireError {
                offset: payload_at,
                reason: format!("embedded graph: {e}"),
            })?;
            Payload::Graph(g)
        } else {
            Payload::Bytes(raw.to_vec())
        };
        elements.push(ServiceElement {
            element_id,
            modality,
            role,
            priority,
            mandatory,
            payload,
            feature_tag,
        });
    }
    r.expect_end()?;
    Ok(PromptPackage {
        package_id,
        provider_id,
        elements,
        schedule: Schedule { start, duration },
        version,
    })
}
