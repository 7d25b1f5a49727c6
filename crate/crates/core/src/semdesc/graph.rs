use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Semantic entity class. Maps onto the MPEG-7 `SemanticBase` subtypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Agent,
    Event,
    Place,
    Object,
    Concept,
    Time,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] = [
        NodeKind::Agent,
        NodeKind::Event,
        NodeKind::Place,
        NodeKind::Object,
        NodeKind::Concept,
        NodeKind::Time,
    ];

    /// Resolves an `xsi:type` value (an optional namespace prefix is ignored).
    pub fn from_xsi_type(ty: &str) -> Option<Self> {
        let local = ty.rsplit(':').next().unwrap_or(ty);
        match local {
            "AgentObjectType" => Some(NodeKind::Agent),
            "EventType" | "EventObjectType" => Some(NodeKind::Event),
            "PlaceObjectType" | "SemanticPlaceType" => Some(NodeKind::Place),
            "ObjectType" => Some(NodeKind::Object),
            "ConceptType" => Some(NodeKind::Concept),
            "SemanticTimeType" => Some(NodeKind::Time),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            NodeKind::Agent => 0,
            NodeKind::Event => 1,
            NodeKind::Place => 2,
            NodeKind::Object => 3,
            NodeKind::Concept => 4,
            NodeKind::Time => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticNode {
    pub id: String,
    pub kind: NodeKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structured_annotation: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_text: Option<String>,
}

impl SemanticNode {
    pub fn new(id: impl Into<String>, kind: NodeKind, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            label: label.into(),
            structured_annotation: None,
            free_text: None,
        }
    }

    pub fn with_annotation(mut self, slot: impl Into<String>, text: impl Into<String>) -> Self {
        self.structured_annotation
            .get_or_insert_with(BTreeMap::new)
            .insert(slot.into(), text.into());
        self
    }

    pub fn with_free_text(mut self, text: impl Into<String>) -> Self {
        self.free_text = Some(text.into());
        self
    }
}

/// Directed, named edge. `dangling` is set when the target names no node of
/// the owning graph; it is derived, never authored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticRelation {
    pub source: String,
    pub relation: String,
    pub target: String,
    #[serde(default)]
    pub dangling: bool,
}

impl SemanticRelation {
    pub fn new(
        source: impl Into<String>,
        relation: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Self {
            source: source.into(),
            relation: relation.into(),
            target: target.into(),
            dangling: false,
        }
    }

    fn sort_key(&self) -> (&str, &str, &str) {
        (&self.source, &self.relation, &self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MediaOccurrence {
    pub node: String,
    pub uri: String,
}

/// MPEG-7-style semantic description held in canonical order: nodes by id,
/// relations by (source, relation, target), media occurrences by (node, uri).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticGraph {
    pub nodes: Vec<SemanticNode>,
    pub relations: Vec<SemanticRelation>,
    #[serde(default)]
    pub media_occurrences: Vec<MediaOccurrence>,
}

impl SemanticGraph {
    pub fn new(
        nodes: Vec<SemanticNode>,
        relations: Vec<SemanticRelation>,
        media_occurrences: Vec<MediaOccurrence>,
    ) -> Self {
        let mut g = Self {
            nodes,
            relations,
            media_occurrences,
        };
        g.canonicalize();
        g
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts every table into canonical order and recomputes dangling flags.
    pub fn canonicalize(&mut self) {
        self.nodes
            .sort_by(|a, b| a.id.as_bytes().cmp(b.id.as_bytes()));
        self.relations
            .sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.media_occurrences.sort();
        for n in &mut self.nodes {
            if n.structured_annotation
                .as_ref()
                .is_some_and(|m| m.is_empty())
            {
                n.structured_annotation = None;
            }
        }
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        for rel in &mut self.relations {
            rel.dangling = !ids.contains(rel.target.as_str());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.relations.is_empty() && self.media_occurrences.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&SemanticNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn relations_from<'a>(
        &'a self,
        source: &'a str,
    ) -> impl Iterator<Item = &'a SemanticRelation> + 'a {
        self.relations.iter().filter(move |r| r.source == source)
    }

    /// Removes a node; relations pointing at it become dangling, relations
    /// and media occurrences sourced from it are dropped.
    pub fn without_node(&self, id: &str) -> Self {
        let nodes = self.nodes.iter().filter(|n| n.id != id).cloned().collect();
        let relations = self
            .relations
            .iter()
            .filter(|r| r.source != id)
            .cloned()
            .collect();
        let media = self
            .media_occurrences
            .iter()
            .filter(|m| m.node != id)
            .cloned()
            .collect();
        Self::new(nodes, relations, media)
    }
}
