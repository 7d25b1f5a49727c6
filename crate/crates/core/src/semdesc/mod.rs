//! MPEG-7-style semantic descriptions: import, canonical encoding, prompt
//! script compilation and validation.

mod codec;
mod graph;
mod mpeg7;
mod script;
mod validate;

pub use codec::{
    derived_id, graph_wire_size, parse_graph, serialize_graph, KNOWN_SLOTS, MAGIC, VERSION,
};
pub use graph::{MediaOccurrence, NodeKind, SemanticGraph, SemanticNode, SemanticRelation};
pub use mpeg7::{import_mpeg7, import_mpeg7_with_warnings, Import, ImportWarning};
pub use script::{compile_to_script, KNOWN_RELATIONS};
pub use validate::{validate_graph, GraphIssue, GraphReport};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SemdescError {
    #[error("parse error at line {line} (offset {offset}): {message}")]
    Parse {
        line: u32,
        offset: usize,
        message: String,
    },
    #[error("unsupported SemanticBase type {xsi_type:?} at line {line}")]
    UnsupportedKind { xsi_type: String, line: u32 },
    #[error("corrupt graph encoding at offset {offset}: {message}")]
    Decode { offset: usize, message: String },
    #[error("cannot compile an empty graph")]
    EmptyGraph,
}
