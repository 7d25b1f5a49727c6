//! Prompt packages and their service elements.

mod codec;
mod file;
mod select;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::semdesc::SemanticGraph;

pub use codec::{decode_package, encode_package, package_wire_size, MAGIC, VERSION};
pub use file::{ElementFile, PackageFile, PayloadFile, ScheduleFile};
pub use select::{select_top_k, TopK};
pub use validate::{validate_package, PackageIssue, PackageReport};

/// Milliseconds since the scenario epoch.
pub type Millis = u64;

pub const ROLE_BACKGROUND: &str = "background";
pub const ROLE_STYLE: &str = "style";
/// Roles of which a merged package may hold at most one element.
pub const EXCLUSIVE_ROLES: [&str; 2] = [ROLE_BACKGROUND, ROLE_STYLE];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
    Layout,
    Metadata,
    Api,
    Engine,
    Semantics,
}

impl Modality {
    pub const ALL: [Modality; 7] = [
        Modality::Text,
        Modality::Image,
        Modality::Layout,
        Modality::Metadata,
        Modality::Api,
        Modality::Engine,
        Modality::Semantics,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Layout => "layout",
            Modality::Metadata => "metadata",
            Modality::Api => "api",
            Modality::Engine => "engine",
            Modality::Semantics => "semantics",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Bytes(Vec<u8>),
    Graph(SemanticGraph),
}

impl Payload {
    pub fn text(s: &str) -> Self {
        Payload::Bytes(s.as_bytes().to_vec())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Payload::Bytes(b) => b.is_empty(),
            Payload::Graph(g) => g.is_empty(),
        }
    }

    /// Lossy UTF-8 view of an opaque payload; graphs render as their id list.
    pub fn as_text(&self) -> String {
        match self {
            Payload::Bytes(b) => String::from_utf8_lossy(b).into_owned(),
            Payload::Graph(g) => g
                .nodes
                .iter()
                .map(|n| n.label.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceElement {
    pub element_id: String,
    pub modality: Modality,
    /// Slot tag such as `object`, `background`, `style`, `narrative-hint`.
    pub role: String,
    /// 0 is the highest priority.
    pub priority: u32,
    pub mandatory: bool,
    pub payload: Payload,
    /// Visible feature contributed by the element; empty for none.
    pub feature_tag: String,
}

impl ServiceElement {
    pub fn new(
        element_id: impl Into<String>,
        modality: Modality,
        role: impl Into<String>,
        payload: Payload,
    ) -> Self {
        Self {
            element_id: element_id.into(),
            modality,
            role: role.into(),
            priority: 0,
            mandatory: false,
            payload,
            feature_tag: String::new(),
        }
    }

    pub fn priority(mut self, priority: u32) -> Self {
        self.priority = priority;
        self
    }

    pub fn mandatory(mut self, mandatory: bool) -> Self {
        self.mandatory = mandatory;
        self
    }

    pub fn feature(mut self, tag: impl Into<String>) -> Self {
        self.feature_tag = tag.into();
        self
    }

    pub fn is_exclusive(&self) -> bool {
        EXCLUSIVE_ROLES.contains(&self.role.as_str())
    }

    /// Tag of the on-screen object this element contributes, if any.
    /// Background and style elements shape the scene but are not objects.
    pub fn visible_feature(&self) -> Option<&str> {
        (!self.feature_tag.is_empty() && !self.is_exclusive()).then_some(self.feature_tag.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub start: Millis,
    pub duration: Millis,
}

impl Schedule {
    pub fn new(start: Millis, duration: Millis) -> Self {
        Self { start, duration }
    }

    pub fn span(start: Millis, end: Millis) -> Self {
        Self {
            start,
            duration: end.saturating_sub(start),
        }
    }

    pub fn end(&self) -> Millis {
        self.start + self.duration
    }

    pub fn contains(&self, t: Millis) -> bool {
        self.start <= t && t < self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPackage {
    pub package_id: String,
    pub provider_id: String,
    /// Kept sorted by `element_id` by every constructor in this crate.
    pub elements: Vec<ServiceElement>,
    pub schedule: Schedule,
    pub version: u32,
}

impl PromptPackage {
    pub fn new(
        package_id: impl Into<String>,
        provider_id: impl Into<String>,
        elements: Vec<ServiceElement>,
        schedule: Schedule,
    ) -> Self {
        let mut p = Self {
            package_id: package_id.into(),
            provider_id: provider_id.into(),
            elements,
            schedule,
            version: 1,
        };
        p.sort_elements();
        p
    }

    pub fn sort_elements(&mut self) {
        self.elements
            .sort_by(|a, b| a.element_id.as_bytes().cmp(b.element_id.as_bytes()));
    }

    pub fn element(&self, element_id: &str) -> Option<&ServiceElement> {
        self.elements.iter().find(|e| e.element_id == element_id)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// Visible feature tags, sorted and deduplicated.
    pub fn features(&self) -> Vec<String> {
        let mut tags: Vec<String> = self
            .elements
            .iter()
            .filter_map(|e| e.visible_feature().map(str::to_string))
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PackageError {
    #[error("invalid package encoding at offset {offset}: {message}")]
    Codec { offset: usize, message: String },
    #[error("unsupported package wire version {found} (expected {expected})")]
    Version { found: u8, expected: u8 },
    #[error("invalid package description: {0}")]
    File(String),
}
