//! Template compiler from a semantic graph to a prompt script.
//!
//! One sentence per node, events first, then agents, places, objects,
//! concepts and times; ties by id. Outgoing relations become clauses of the
//! source node's sentence. Structured annotations follow as `Slot: text.`
//! sentences and free text is appended verbatim.

use super::graph::{NodeKind, SemanticGraph, SemanticNode, SemanticRelation};
use super::SemdescError;

/// Relation names with a dedicated clause template.
pub const KNOWN_RELATIONS: [&str; 4] = ["performedBy", "setting", "identity", "hasPerformed"];

pub fn compile_to_script(g: &SemanticGraph) -> Result<String, SemdescError> {
    if g.nodes.is_empty() {
        return Err(SemdescError::EmptyGraph);
    }
    let mut nodes: Vec<&SemanticNode> = g.nodes.iter().collect();
    nodes.sort_by(|a, b| {
        kind_rank(a.kind)
            .cmp(&kind_rank(b.kind))
            .then_with(|| a.id.as_bytes().cmp(b.id.as_bytes()))
    });

    let mut sentences = Vec::new();
    for node in nodes {
        let mut head = format!("{} {}", kind_lead(node.kind), node.label);
        let mut relations: Vec<&SemanticRelation> = g.relations_from(&node.id).collect();
        relations.sort_by(|a, b| (&a.relation, &a.target).cmp(&(&b.relation, &b.target)));
        for rel in relations {
            let target = g
                .node(&rel.target)
                .map(|n| n.label.clone())
                .unwrap_or_else(|| rel.target.clone());
            head.push_str(", ");
            head.push_str(&clause(&rel.relation, &target));
        }
        sentences.push(terminate(head));

        for (slot, text) in node.structured_annotation.iter().flatten() {
            sentences.push(terminate(format!("{slot}: {text}")));
        }
        if let Some(free) = &node.free_text {
            sentences.push(free.clone());
        }
    }
    Ok(sentences.join(" "))
}

fn kind_rank(kind: NodeKind) -> u8 {
    match kind {
        NodeKind::Event => 0,
        NodeKind::Agent => 1,
        NodeKind::Place => 2,
        NodeKind::Object => 3,
        NodeKind::Concept => 4,
        NodeKind::Time => 5,
    }
}

fn kind_lead(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Event => "Scene of",
        NodeKind::Agent => "Featuring",
        NodeKind::Place => "Set in",
        NodeKind::Object => "Showing",
        NodeKind::Concept => "Evoking",
        NodeKind::Time => "During",
    }
}

fn clause(relation: &str, target: &str) -> String {
    match relation {
        "performedBy" => format!("performed by {target}"),
        "setting" => format!("at {target}"),
        "identity" => format!("identified as {target}"),
        "hasPerformed" => format!("who has performed {target}"),
        other => format!("{} {target}", phrase(other)),
    }
}

/// `locatedNear` -> `located near`, `part_of` -> `part of`.
fn phrase(relation: &str) -> String {
    let mut out = String::new();
    for ch in relation.chars() {
        if ch == '_' || ch == '-' {
            out.push(' ');
        } else if ch.is_uppercase() {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

fn terminate(mut sentence: String) -> String {
    if !sentence.ends_with(['.', '!', '?']) {
        sentence.push('.');
    }
    sentence
}
