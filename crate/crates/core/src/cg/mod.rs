//! Symbolic content generator: merged package, narrative, scene samples,
//! storyboards with continuity books, base scene snapshots, frames.

pub(crate) mod content;
mod narrative;
mod render;
mod scene;
mod storyboard;
mod trace;

use std::fmt;

use serde::Serialize;

use crate::ops::{ElementRef, OpsError};
use crate::package::Millis;

pub use content::{
    backtrack, check_invariants, frame_sequence_hash, generate_content, generate_unit, ContentUnit,
    GenerateOptions, GeneratedContent, InvariantViolation, DEFAULT_DENSITY, DEFAULT_FPS,
};
pub use narrative::{element_label, generate_narrative, Narrative, NarrativeFlag, MIN_FLAGS};
pub use render::{
    bss_intervals, compose_frames, render_bss, BaseSceneSnapshot, FrameDescriptor, FrameSequence,
    ENTER_TAIL_PERCENT,
};
pub use scene::{frame_cap, sample_scenes, SceneSample};
pub use storyboard::{
    build_storyboards, continuity_books, Action, ContinuityBook, ContinuityEntry, GridPos,
    Placement, Storyboard, BACKGROUND_PALETTE, GRID, STYLE_PALETTE,
};
pub use trace::{content_hash, ContentTrace};

/// Half-open presentation interval `[start, end)` in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Interval {
    pub start: Millis,
    pub end: Millis,
}

impl Interval {
    pub fn new(start: Millis, end: Millis) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> Millis {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: Millis) -> bool {
        self.start <= t && t < self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CgError {
    #[error("merged package has no elements")]
    EmptyInput,
    #[error("content runtime is empty")]
    EmptyRuntime,
    #[error("scene density must be a positive finite number, got {0}")]
    InvalidDensity(f64),
    #[error("frame rate must be within 1..=1000 fps, got {0}")]
    InvalidFps(u32),
    #[error("time {t} ms is outside the content runtime [{start}, {end})")]
    OutOfRange {
        t: Millis,
        start: Millis,
        end: Millis,
    },
    #[error("element {0} is not part of the merged package")]
    UnknownElement(ElementRef),
    #[error(transparent)]
    Ops(Box<OpsError>),
}

impl From<OpsError> for CgError {
    fn from(e: OpsError) -> Self {
        match e {
            OpsError::Cg(inner) => inner,
            other => CgError::Ops(Box::new(other)),
        }
    }
}

#[cfg(test)]
mod tests;
