use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::graph::SemanticGraph;
use super::script::KNOWN_RELATIONS;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "issue")]
pub enum GraphIssue {
    EmptyId,
    DuplicateId {
        id: String,
        count: usize,
    },
    UnknownSource {
        source: String,
        relation: String,
    },
    DanglingTarget {
        source: String,
        relation: String,
        target: String,
    },
    UnknownRelation {
        relation: String,
    },
}

impl GraphIssue {
    /// Dangling targets are explicitly flagged on the relation and unknown
    /// relation names are an open vocabulary, so both are warnings.
    pub fn is_error(&self) -> bool {
        !matches!(
            self,
            GraphIssue::DanglingTarget { .. } | GraphIssue::UnknownRelation { .. }
        )
    }
}

impl fmt::Display for GraphIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphIssue::EmptyId => write!(f, "node with empty id"),
            GraphIssue::DuplicateId { id, count } => write!(f, "id {id:?} declared {count} times"),
            GraphIssue::UnknownSource { source, relation } => {
                write!(
                    f,
                    "relation {relation:?} sourced from undeclared node {source:?}"
                )
            }
            GraphIssue::DanglingTarget {
                source,
                relation,
                target,
            } => write!(
                f,
                "relation ({source}, {relation}, {target}) targets an undeclared node"
            ),
            GraphIssue::UnknownRelation { relation } => {
                write!(
                    f,
                    "relation name {relation:?} is not in the known vocabulary"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphReport {
    pub issues: Vec<GraphIssue>,
}

impl GraphReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(GraphIssue::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &GraphIssue> {
        self.issues.iter().filter(|i| i.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &GraphIssue> {
        self.issues.iter().filter(|i| !i.is_error())
    }
}

impl fmt::Display for GraphReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "ok");
        }
        for issue in &self.issues {
            let level = if issue.is_error() { "error" } else { "warning" };
            writeln!(f, "{level}: {issue}")?;
        }
        Ok(())
    }
}

pub fn validate_graph(g: &SemanticGraph) -> GraphReport {
    let mut issues = Vec::new();

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for n in &g.nodes {
        if n.id.is_empty() {
            issues.push(GraphIssue::EmptyId);
        }
        *counts.entry(n.id.as_str()).or_default() += 1;
    }
    for (id, count) in &counts {
        if *count > 1 {
            issues.push(GraphIssue::DuplicateId {
                id: id.to_string(),
                count: *count,
            });
        }
    }

    let mut unknown = BTreeSet::new();
    for r in &g.relations {
        if !counts.contains_key(r.source.as_str()) {
            issues.push(GraphIssue::UnknownSource {
                source: r.source.clone(),
                relation: r.relation.clone(),
            });
        }
        if !counts.contains_key(r.target.as_str()) {
            issues.push(GraphIssue::DanglingTarget {
                source: r.source.clone(),
                relation: r.relation.clone(),
                target: r.target.clone(),
            });
        }
        if !KNOWN_RELATIONS.contains(&r.relation.as_str()) {
            unknown.insert(r.relation.clone());
        }
    }
    issues.extend(
        unknown
            .into_iter()
            .map(|relation| GraphIssue::UnknownRelation { relation }),
    );

    GraphReport { issues }
}
