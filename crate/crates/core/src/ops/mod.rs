//! Operation modes: single source, synchronous merge and asynchronous
//! timeline blending, plus package augmentation.

mod augment;
mod execute;
mod merge;
mod residual;
mod timeline;

use std::fmt;

use serde::Serialize;

use crate::cg::CgError;
use crate::package::{Millis, PromptPackage, Schedule, ServiceElement};

pub use augment::{
    apply_augmentation, AugmentationOutcome, AugmentationProfile, Directive, LocationProvider,
    MockLocationProvider, Refusal, Selector,
};
pub use execute::{execute, Event, EventKind, Execution, Replan};
pub use merge::{merge_m1, MergePolicy, DEFAULT_TOP_K};
pub use residual::{residual, residual_packages, ResidualPackage, RESIDUAL_ELEMENT_ID};
pub use timeline::{plan_timeline_at, plan_timeline_m2, TimeSegment, Timeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OperationMode {
    SingleSource,
    MultiSync,
    MultiAsync,
}

impl OperationMode {
    pub fn symbol(self) -> &'static str {
        match self {
            OperationMode::SingleSource => "O_S",
            OperationMode::MultiSync => "M1",
            OperationMode::MultiAsync => "M2",
        }
    }
}

impl fmt::Display for OperationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ElementRef {
    pub package_id: String,
    pub element_id: String,
}

impl ElementRef {
    pub fn new(package_id: impl Into<String>, element_id: impl Into<String>) -> Self {
        Self {
            package_id: package_id.into(),
            element_id: element_id.into(),
        }
    }
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.package_id, self.element_id)
    }
}

/// A service element together with the package it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedElement {
    pub origin: String,
    pub element: ServiceElement,
}

impl MergedElement {
    pub fn reference(&self) -> ElementRef {
        ElementRef::new(&self.origin, &self.element.element_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub role: String,
    pub winner: ElementRef,
    pub losers: Vec<ElementRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedPackage {
    pub main_package_id: String,
    /// Ordered by (schedule start, provider id, package id).
    pub sub_package_ids: Vec<String>,
    /// Main package elements first, then each sub package in order; within
    /// a package by element id.
    pub elements: Vec<MergedElement>,
    pub conflict_log: Vec<Conflict>,
    /// Span covering every input schedule.
    pub schedule: Schedule,
    pub top_k: usize,
    /// Packages whose mandatory elements alone exceeded `top_k`.
    pub mandatory_overflow: Vec<String>,
}

impl MergedPackage {
    pub fn package_ids(&self) -> Vec<&str> {
        std::iter::once(self.main_package_id.as_str())
            .chain(self.sub_package_ids.iter().map(String::as_str))
            .collect()
    }

    pub fn element(&self, r: &ElementRef) -> Option<&MergedElement> {
        self.elements
            .iter()
            .find(|m| m.origin == r.package_id && m.element.element_id == r.element_id)
    }

    pub fn exclusive(&self, role: &str) -> Option<&MergedElement> {
        self.elements.iter().find(|m| m.element.role == role)
    }

    /// Sorted, deduplicated visible feature tags.
    pub fn features(&self) -> Vec<String> {
        let mut tags: Vec<String> = self
            .elements
            .iter()
            .filter_map(|m| m.element.visible_feature().map(str::to_string))
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Feature tags of mandatory elements, exclusive roles included.
    pub fn mandatory_tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = self
            .elements
            .iter()
            .filter(|m| m.element.mandatory && !m.element.feature_tag.is_empty())
            .map(|m| m.element.feature_tag.clone())
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }

    pub fn end(&self) -> Millis {
        self.schedule.end()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OpsError {
    #[error("no prompt packages given")]
    NoPackages,
    #[error("top-k bound must be at least 1")]
    InvalidTopK,
    #[error("package id {0:?} appears more than once")]
    DuplicatePackage(String),
    #[error("main override {0:?} is not among the input packages")]
    UnknownMain(String),
    #[error("package {package_id:?} ends at {end} ms, not after the planning time {now} ms")]
    StaleArrival {
        package_id: String,
        end: Millis,
        now: Millis,
    },
    #[error("cut time {t_cut} ms is at or past the content end {end} ms")]
    NothingRemaining { t_cut: Millis, end: Millis },
    #[error("no element carries feature tag {0:?}")]
    UnknownFeature(String),
    #[error("events are not in time order at index {0}")]
    UnorderedEvents(usize),
    #[error("departure of {0:?}, which is not active")]
    UnknownDeparture(String),
    #[error("{mode} cannot run on {packages} package(s)")]
    ModeMismatch {
        mode: OperationMode,
        packages: usize,
    },
    #[error(transparent)]
    Cg(#[from] CgError),
}

/// Copy of `p` whose schedule starts no earlier than `now`.
pub(crate) fn clip_to(p: &PromptPackage, now: Millis) -> PromptPackage {
    let start = p.schedule.start.max(now);
    p.clone()
        .with_schedule(Schedule::span(start, p.schedule.end()))
}
