use std::collections::BTreeSet;

use serde::Serialize;

use super::content::hash_json;
use super::{
    BaseSceneSnapshot, ContinuityBook, GeneratedContent, Interval, NarrativeFlag, SceneSample,
    Storyboard,
};
use crate::ops::{Conflict, ElementRef, OperationMode};
use crate::package::{package_wire_size, Millis, Modality, Schedule};

/// Serializable view of generated content. Frames are run-length encoded:
/// consecutive frames with identical descriptors (apart from time) form one
/// run, which keeps traces readable without losing any per-frame fact.
#[derive(Debug, Clone, Serialize)]
pub struct ContentTrace<'a> {
    pub mode: OperationMode,
    pub seed: u64,
    pub fps: u32,
    pub runtime: Interval,
    pub frame_sequence_hash: String,
    pub sources: Vec<SourceTrace<'a>>,
    pub units: Vec<UnitTrace<'a>>,
    pub narrative: &'a [NarrativeFlag],
    pub scene_samples: &'a [SceneSample],
    pub storyboards: &'a [Storyboard],
    pub continuity_books: &'a [ContinuityBook],
    pub bss: &'a [BaseSceneSnapshot],
    pub frames: Vec<FrameRunsTrace<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceTrace<'a> {
    pub package_id: &'a str,
    pub provider_id: &'a str,
    pub schedule: Schedule,
    pub features: Vec<String>,
    pub wire_bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitTrace<'a> {
    pub interval: Interval,
    pub main: &'a str,
    pub subs: &'a [String],
    pub first_storyboard: usize,
    pub storyboard_count: usize,
    pub elements: Vec<ElementTrace<'a>>,
    pub conflicts: &'a [Conflict],
    pub mandatory_overflow: &'a [String],
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementTrace<'a> {
    #[serde(rename = "ref")]
    pub reference: ElementRef,
    pub modality: Modality,
    pub role: &'a str,
    pub priority: u32,
    pub mandatory: bool,
    pub feature_tag: &'a str,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameRunsTrace<'a> {
    pub bss_index: usize,
    pub frame_count: usize,
    pub runs: Vec<FrameRun<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameRun<'a> {
    pub first_frame: usize,
    pub last_frame: usize,
    pub from: Millis,
    pub to: Millis,
    pub visible_objects: &'a BTreeSet<String>,
    pub background: &'a str,
    pub style: &'a str,
    pub motion_note: &'a str,
}

impl<'a> ContentTrace<'a> {
    pub fn new(c: &'a GeneratedContent) -> Self {
        Self {
            mode: c.mode,
            seed: c.seed,
            fps: c.fps,
            runtime: c.runtime(),
            frame_sequence_hash: super::frame_sequence_hash(c),
            sources: c
                .sources
                .iter()
                .map(|p| SourceTrace {
                    package_id: &p.package_id,
                    provider_id: &p.provider_id,
                    schedule: p.schedule,
                    features: p.features(),
                    wire_bytes: package_wire_size(p),
                })
                .collect(),
            units: c
                .units
                .iter()
                .map(|u| UnitTrace {
                    interval: u.interval,
                    main: &u.merged.main_package_id,
                    subs: &u.merged.sub_package_ids,
                    first_storyboard: u.first_storyboard,
                    storyboard_count: u.storyboard_count,
                    elements: u
                        .merged
                        .elements
                        .iter()
                        .map(|m| ElementTrace {
                            reference: m.reference(),
                            modality: m.element.modality,
                            role: &m.element.role,
                            priority: m.element.priority,
                            mandatory: m.element.mandatory,
                            feature_tag: &m.element.feature_tag,
                        })
                        .collect(),
                    conflicts: &u.merged.conflict_log,
                    mandatory_overflow: &u.merged.mandatory_overflow,
                })
                .collect(),
            narrative: &c.narrative.flags,
            scene_samples: &c.scene_samples,
            storyboards: &c.storyboards,
            continuity_books: &c.continuity_books,
            bss: &c.bss_list,
            frames: c
                .frames
                .iter()
                .map(|seq| {
                    let mut runs: Vec<FrameRun> = Vec::new();
                    for (i, f) in seq.frames.iter().enumerate() {
                        if let Some(r) = runs.last_mut() {
                            if r.visible_objects == &f.visible_objects
                                && r.background == f.background
                                && r.style == f.style
                                && r.motion_note == f.motion_note
                            {
                                r.last_frame = i;
                                r.to = f.time;
                                continue;
                            }
                        }
                        runs.push(FrameRun {
                            first_frame: i,
                            last_frame: i,
                            from: f.time,
                            to: f.time,
                            visible_objects: &f.visible_objects,
                            background: &f.background,
                            style: &f.style,
                            motion_note: &f.motion_note,
                        });
                    }
                    FrameRunsTrace {
                        bss_index: seq.bss_index,
                        frame_count: seq.frames.len(),
                        runs,
                    }
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Hash of the full canonical trace.
pub fn content_hash(c: &GeneratedContent) -> String {
    hash_json(&ContentTrace::new(c))
}
