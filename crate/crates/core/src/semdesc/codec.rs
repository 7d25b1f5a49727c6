//! Canonical compact encoding of a [`SemanticGraph`].
//!
//! ```text
//! "SDG1" | version:u8
//! strings   : count, (len, utf8)*                 sorted, deduplicated
//! nodes     : count, (id, kind:u8, label, n, (slot, text)*, free)*
//! relations : count, (source, relation, target)*
//! media     : count, (node, uri)*
//! ```
//!
//! Every integer except `kind` is an unsigned LEB128 varint in its shortest
//! form. Plain string fields are indices into the string table and node
//! fields are indices into the node table. A few fields pack a shortcut:
//!
//! - `id`: 0 when the id is the label in upper camel case (`Concert Hall`
//!   gives `ConcertHall`), otherwise 1 + string index.
//! - `free`: 0 for none, otherwise 1 + string index.
//! - `slot`: below [`KNOWN_SLOTS`]`.len()` names a known slot, otherwise
//!   that length + string index.
//! - `relation`: below [`KNOWN_RELATIONS`]`.len()` names a known relation,
//!   otherwise that length + string index.
//! - `target`: 2·node index for a declared node, 2·string index + 1 for a
//!   dangling target.
//!
//! Shortcuts are mandatory where they apply, so each graph has exactly one
//! encoding and the decoder rejects any other.

use std::collections::{BTreeMap, BTreeSet};

use super::graph::{MediaOccurrence, NodeKind, SemanticGraph, SemanticNode, SemanticRelation};
use super::script::KNOWN_RELATIONS;
use super::SemdescError;
use crate::wire::{Reader, WireError, Writer};

pub const MAGIC: &[u8; 4] = b"SDG1";
pub const VERSION: u8 = 1;

/// Structured-annotation slots coded without a string table entry.
pub const KNOWN_SLOTS: [&str; 8] = [
    "Who",
    "WhatObject",
    "WhatAction",
    "Where",
    "When",
    "Why",
    "How",
    "Background",
];

/// The id a node gets by default: its label in upper camel case.
pub fn derived_id(label: &str) -> String {
    label
        .split_whitespace()
        .flat_map(|w| {
            let mut c = w.chars();
            c.next()
                .into_iter()
                .flat_map(char::to_uppercase)
                .chain(c)
                .collect::<Vec<_>>()
        })
        .collect()
}

fn code_of(vocab: &[&str], s: &str) -> Option<u32> {
    vocab.iter().position(|v| *v == s).map(|i| i as u32)
}

pub fn serialize_graph(g: &SemanticGraph) -> Vec<u8> {
    let mut g = g.clone();
    g.canonicalize();
    // Edges and media sourced from an undeclared node are not representable;
    // such a graph fails validation and they are dropped here.
    let declared: BTreeSet<String> = g.nodes.iter().map(|n| n.id.clone()).collect();
    g.relations.retain(|r| declared.contains(&r.source));
    g.media_occurrences.retain(|m| declared.contains(&m.node));

    let mut strings = BTreeSet::new();
    for n in &g.nodes {
        if n.id != derived_id(&n.label) {
            strings.insert(n.id.as_str());
        }
        strings.insert(n.label.as_str());
        for (k, v) in n.structured_annotation.iter().flatten() {
            if code_of(&KNOWN_SLOTS, k).is_none() {
                strings.insert(k.as_str());
            }
            strings.insert(v.as_str());
        }
        if let Some(t) = &n.free_text {
            strings.insert(t.as_str());
        }
    }
    for r in &g.relations {
        if code_of(&KNOWN_RELATIONS, &r.relation).is_none() {
            strings.insert(r.relation.as_str());
        }
        if r.dangling {
            strings.insert(r.target.as_str());
        }
    }
    for m in &g.media_occurrences {
        strings.insert(m.uri.as_str());
    }
    let string_index: BTreeMap<&str, u32> = strings
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, i as u32))
        .collect();
    let node_index: BTreeMap<&str, u32> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i as u32))
        .collect();
    let sidx = |s: &str| string_index[s];
    let coded =
        |vocab: &[&str], s: &str| code_of(vocab, s).unwrap_or_else(|| vocab.len() as u32 + sidx(s));

    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u8(VERSION);

    w.var(strings.len() as u64);
    for s in &strings {
        w.var_str(s);
    }

    w.var(g.nodes.len() as u64);
    for n in &g.nodes {
        if n.id == derived_id(&n.label) {
            w.var(0u32);
        } else {
            w.var(1 + sidx(&n.id));
        }
        w.u8(n.kind.code());
        w.var(sidx(&n.label));
        let slots = n.structured_annotation.as_ref();
        w.var(slots.map_or(0, |m| m.len() as u64));
        for (k, v) in slots.into_iter().flatten() {
            w.var(coded(&KNOWN_SLOTS, k));
            w.var(sidx(v));
        }
        w.var(n.free_text.as_deref().map_or(0, |t| 1 + sidx(t)));
    }

    w.var(g.relations.len() as u64);
    for r in &g.relations {
        w.var(node_index[r.source.as_str()]);
        w.var(coded(&KNOWN_RELATIONS, &r.relation));
        match node_index.get(r.target.as_str()) {
            Some(&t) => w.var(2 * t as u64),
            None => w.var(2 * sidx(&r.target) as u64 + 1),
        }
    }

    w.var(g.media_occurrences.len() as u64);
    for m in &g.media_occurrences {
        w.var(node_index[m.node.as_str()]);
        w.var(sidx(&m.uri));
    }

    w.finish()
}

pub fn parse_graph(bytes: &[u8]) -> Result<SemanticGraph, SemdescError> {
    decode(bytes).map_err(|e| SemdescError::Decode {
        offset: e.offset,
        message: e.reason,
    })
}

/// Length of the canonical encoding.
pub fn graph_wire_size(g: &SemanticGraph) -> usize {
    serialize_graph(g).len()
}

fn string(r: &mut Reader, strings: &[String]) -> Result<String, WireError> {
    let i = r.var_u32()? as usize;
    strings
        .get(i)
        .cloned()
        .ok_or_else(|| r.error(format!("string index {i} out of range")))
}

/// Reads a field coded against `vocab`; spelling out a vocabulary word is
/// not canonical.
fn coded(r: &mut Reader, vocab: &[&str], strings: &[String]) -> Result<String, WireError> {
    let at = r.offset();
    let c = r.var_u32()? as usize;
    if let Some(word) = vocab.get(c) {
        return Ok(word.to_string());
    }
    let s = strings
        .get(c - vocab.len())
        .cloned()
        .ok_or_else(|| r.error(format!("string index {} out of range", c - vocab.len())))?;
    if vocab.contains(&s.as_str()) {
        return Err(WireError {
            offset: at,
            reason: format!("{s:?} must use its vocabulary code"),
        });
    }
    Ok(s)
}

fn decode(bytes: &[u8]) -> Result<SemanticGraph, WireError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(WireError {
            offset: 0,
            reason: "bad magic, expected SDG1".into(),
        });
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(WireError {
            offset: 4,
            reason: format!("unsupported graph version {version}"),
        });
    }

    let count = r.var_u32()?;
    let mut strings: Vec<String> = Vec::new();
    for _ in 0..count {
        let s = r.var_str()?;
        if let Some(prev) = strings.last() {
            if prev.as_bytes() >= s.as_bytes() {
                return Err(r.error("string table not sorted or not deduplicated"));
            }
        }
        strings.push(s);
    }

    let count = r.var_u32()?;
    let mut nodes: Vec<SemanticNode> = Vec::new();
    for _ in 0..count {
        let at = r.offset();
        let id_ref = r.var_u32()? as usize;
        let code = r.u8()?;
        let kind = NodeKind::from_code(code)
            .ok_or_else(|| r.error(format!("unknown node kind {code}")))?;
        let label = string(&mut r, &strings)?;
        let derived = derived_id(&label);
        let id = match id_ref {
            0 => derived,
            i => {
                let id = strings
                    .get(i - 1)
                    .cloned()
                    .ok_or_else(|| r.error(format!("string index {} out of range", i - 1)))?;
                if id == derived {
                    return Err(WireError {
                        offset: at,
                        reason: format!("id {id:?} must use the derived form"),
                    });
                }
                id
            }
        };
        if let Some(prev) = nodes.last() {
            if prev.id.as_bytes() >= id.as_bytes() {
                return Err(r.error("node table not in canonical order"));
            }
        }
        let slots = r.var_u32()?;
        let mut annotation = None;
        if slots > 0 {
            let mut map = BTreeMap::new();
            for _ in 0..slots {
                let k = coded(&mut r, &KNOWN_SLOTS, &strings)?;
                let v = string(&mut r, &strings)?;
                map.insert(k, v);
            }
            annotation = Some(map);
        }
        let free_text = match r.var_u32()? as usize {
            0 => None,
            i => Some(
                strings
                    .get(i - 1)
                    .cloned()
                    .ok_or_else(|| r.error(format!("string index {} out of range", i - 1)))?,
            ),
        };
        nodes.push(SemanticNode {
            id,
            kind,
            label,
            structured_annotation: annotation,
            free_text,
        });
    }

    let node_id = |r: &Reader, i: u64| -> Result<String, WireError> {
        nodes
            .get(i as usize)
            .map(|n| n.id.clone())
            .ok_or_else(|| r.error(format!("node index {i} out of range")))
    };

    let count = r.var_u32()?;
    let mut relations = Vec::new();
    for _ in 0..count {
        let src = r.var()?;
        let source = node_id(&r, src)?;
        let relation = coded(&mut r, &KNOWN_RELATIONS, &strings)?;
        let t = r.var()?;
        let target = if t % 2 == 0 {
            node_id(&r, t / 2)?
        } else {
            let s = strings
                .get((t / 2) as usize)
                .cloned()
                .ok_or_else(|| r.error(format!("string index {} out of range", t / 2)))?;
            if nodes.iter().any(|n| n.id == s) {
                return Err(r.error("dangling target names a declared node"));
            }
            s
        };
        relations.push(SemanticRelation::new(source, relation, target));
    }

    let count = r.var_u32()?;
    let mut media = Vec::new();
    for _ in 0..count {
        let i = r.var()?;
        let node = node_id(&r, i)?;
        let uri = string(&mut r, &strings)?;
        media.push(MediaOccurrence { node, uri });
    }
    r.expect_end()?;

    Ok(SemanticGraph::new(nodes, relations, media))
}
