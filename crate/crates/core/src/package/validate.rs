use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Modality, Payload, PromptPackage};
use crate::semdesc::{validate_graph, GraphIssue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum PackageIssue {
    NoElements,
    EmptyPackageId,
    DuplicateElement {
        element_id: String,
        count: usize,
    },
    EmptyPayload {
        element_id: String,
    },
    InvalidSchedule {
        start: u64,
        duration: u64,
    },
    PayloadMismatch {
        element_id: String,
        modality: Modality,
    },
    Graph {
        element_id: String,
        issue: GraphIssue,
    },
}

impl fmt::Display for PackageIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PackageIssue::NoElements => write!(f, "package has no service elements"),
            PackageIssue::EmptyPackageId => write!(f, "package id is empty"),
            PackageIssue::DuplicateElement { element_id, count } => {
                write!(f, "element id {element_id:?} used {count} times")
            }
            PackageIssue::EmptyPayload { element_id } => {
                write!(f, "element {element_id:?} has an empty payload")
            }
            PackageIssue::InvalidSchedule { start, duration } => {
                write!(
                    f,
                    "schedule start={start} duration={duration} is not positive"
                )
            }
            PackageIssue::PayloadMismatch {
                element_id,
                modality,
            } => write!(
                f,
                "element {element_id:?}: {modality} modality does not match its payload kind"
            ),
            PackageIssue::Graph { element_id, issue } => {
                write!(f, "element {element_id:?}: {issue}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PackageReport {
    pub issues: Vec<PackageIssue>,
}

impl PackageReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for PackageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "ok");
        }
        for issue in &self.issues {
            writeln!(f, "error: {issue}")?;
        }
        Ok(())
    }
}

pub fn validate_package(p: &PromptPackage) -> PackageReport {
    let mut issues = Vec::new();
    if p.package_id.is_empty() {
        issues.push(PackageIssue::EmptyPackageId);
    }
    if p.elements.is_empty() {
        issues.push(PackageIssue::NoElements);
    }
    if p.schedule.duration == 0 {
        issues.push(PackageIssue::InvalidSchedule {
            start: p.schedule.start,
            duration: p.schedule.duration,
        });
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in &p.elements {
        *counts.entry(e.element_id.as_str()).or_default() += 1;
    }
    for (id, count) in counts {
        if count > 1 {
            issues.push(PackageIssue::DuplicateElement {
                element_id: id.to_string(),
                count,
            });
        }
    }

    for e in &p.elements {
        let graph = matches!(e.payload, Payload::Graph(_));
        if graph != (e.modality == Modality::Semantics) {
            issues.push(PackageIssue::PayloadMismatch {
                element_id: e.element_id.clone(),
                modality: e.modality,
            });
        }
        if e.payload.is_empty() && e.modality != Modality::Metadata {
            issues.push(PackageIssue::EmptyPayload {
                element_id: e.element_id.clone(),
            });
        }
        if let Payload::Graph(g) = &e.payload {
            for issue in validate_graph(g).errors() {
                issues.push(PackageIssue::Graph {
                    element_id: e.element_id.clone(),
                    issue: issue.clone(),
                });
            }
        }
    }
    PackageReport { issues }
}
