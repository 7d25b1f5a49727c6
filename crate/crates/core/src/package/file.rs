//! Human-authored JSON package descriptions (see `schemas/package.schema.json`).

use serde::{Deserialize, Serialize};

use super::{Modality, PackageError, Payload, PromptPackage, Schedule, ServiceElement};
use crate::semdesc::{import_mpeg7, SemanticGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageFile {
    pub package_id: String,
    pub provider_id: String,
    #[serde(default = "default_version")]
    pub version: u32,
    pub schedule: ScheduleFile,
    pub elements: Vec<ElementFile>,
}

fn default_version() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub start_ms: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementFile {
    pub id: String,
    pub modality: Modality,
    pub role: String,
    #[serde(default)]
    pub priority: u32,
    #[serde(default)]
    pub mandatory: bool,
    #[serde(default)]
    pub feature_tag: String,
    pub payload: PayloadFile,
}

/// Exactly one payload source per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PayloadFile {
    /// UTF-8 text carried verbatim.
    Text(String),
    /// Hex-encoded opaque bytes.
    Hex(String),
    /// `n` bytes of deterministic filler, standing in for image or model data.
    Fill(usize),
    /// A semantic graph in its JSON form.
    Graph(SemanticGraph),
    /// An MPEG-7 semantic description document.
    Mpeg7(String),
}

impl PayloadFile {
    fn into_payload(self, element_id: &str) -> Result<Payload, PackageError> {
        let err = |msg: String| PackageError::File(format!("element {element_id:?}: {msg}"));
        Ok(match self {
            PayloadFile::Text(s) => Payload::Bytes(s.into_bytes()),
            PayloadFile::Hex(h) => Payload::Bytes(hex::decode(h).map_err(|e| err(e.to_string()))?),
            PayloadFile::Fill(n) => Payload::Bytes(filler(n)),
            PayloadFile::Graph(mut g) => {
                g.canonicalize();
                Payload::Graph(g)
            }
            PayloadFile::Mpeg7(doc) => {
                Payload::Graph(import_mpeg7(doc.as_bytes()).map_err(|e| err(e.to_string()))?)
            }
        })
    }

    fn from_payload(p: &Payload) -> Self {
        match p {
            Payload::Graph(g) => PayloadFile::Graph(g.clone()),
            Payload::Bytes(b) => match std::str::from_utf8(b) {
                Ok(s) if !s.chars().any(|c| c.is_control() && c != '\n') => {
                    PayloadFile::Text(s.to_string())
                }
                _ => PayloadFile::Hex(hex::encode(b)),
            },
        }
    }
}

/// Deterministic filler bytes.
pub fn filler(n: usize) -> Vec<u8> {
    (0..n)
        .map(|i| (i.wrapping_mul(31).wrapping_add(7) % 251) as u8)
        .collect()
}

impl PackageFile {
    pub fn from_json(text: &str) -> Result<Self, PackageError> {
        serde_json::from_str(text).map_err(|e| PackageError::File(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("package file serializes")
    }

    pub fn into_package(self) -> Result<PromptPackage, PackageError> {
        let elements = self
            .elements
            .into_iter()
            .map(|e| {
                let payload = e.payload.into_payload(&e.id)?;
                Ok(ServiceElement {
                    element_id: e.id,
                    modality: e.modality,
                    role: e.role,
                    priority: e.priority,
                    mandatory: e.mandatory,
                    payload,
                    feature_tag: e.feature_tag,
                })
            })
            .collect::<Result<Vec<_>, PackageError>>()?;
        let mut p = PromptPackage::new(
            self.package_id,
            self.provider_id,
            elements,
            Schedule::new(self.schedule.start_ms, self.schedule.duration_ms),
        );
        p.version = self.version;
        Ok(p)
    }

    pub fn from_package(p: &PromptPackage) -> Self {
        Self {
            package_id: p.package_id.clone(),
            provider_id: p.provider_id.clone(),
            version: p.version,
            schedule: ScheduleFile {
                start_ms: p.schedule.start,
                duration_ms: p.schedule.duration,
            },
            elements: p
                .elements
                .iter()
                .map(|e| ElementFile {
                    id: e.element_id.clone(),
                    modality: e.modality,
                    role: e.role.clone(),
                    priority: e.priority,
                    mandatory: e.mandatory,
                    feature_tag: e.feature_tag.clone(),
                    payload: PayloadFile::from_payload(&e.payload),
                })
                .collect(),
        }
    }
}

impl TryFrom<PackageFile> for PromptPackage {
    type Error = PackageError;

    fn try_from(f: PackageFile) -> Result<Self, Self::Error> {
        f.into_package()
    }
}
