use std::collections::BTreeSet;

use serde::Serialize;

use super::{Action, CgError, ContinuityBook, GridPos, Interval, Storyboard};
use crate::package::{Millis, Schedule};
use crate::seed::sha256_hex;

/// Share of a snapshot's frames, counted from the end, in which an
/// object announced by an Enters entry is already visible.
pub const ENTER_TAIL_PERCENT: u64 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseSceneSnapshot {
    pub index: usize,
    /// Hex SHA-256 of the canonical scene descriptor.
    pub descriptor: String,
    pub presentation_interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameDescriptor {
    pub time: Millis,
    pub visible_objects: BTreeSet<String>,
    pub background: String,
    pub style: String,
    pub motion_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameSequence {
    pub bss_index: usize,
    pub fps: u32,
    pub frames: Vec<FrameDescriptor>,
}

/// Storyboard n is presented from its timestamp until the next one; the
/// last runs to the end of `schedule`.
pub fn bss_intervals(boards: &[Storyboard], schedule: Schedule) -> Vec<Interval> {
    boards
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let end = boards.get(i + 1).map_or(schedule.end(), |n| n.timestamp);
            Interval::new(b.timestamp, end)
        })
        .collect()
}

#[derive(Serialize)]
struct Descriptor<'a> {
    objects: Vec<(&'a str, GridPos)>,
    background: &'a str,
    style: &'a str,
    seed: u64,
}

pub fn render_bss(s: &Storyboard, interval: Interval, seed: u64) -> BaseSceneSnapshot {
    let d = Descriptor {
        objects: s
            .objects
            .iter()
            .map(|p| (p.object_id.as_str(), p.position))
            .collect(),
        background: &s.background,
        style: &s.style,
        seed,
    };
    let canonical = serde_json::to_vec(&d).expect("descriptor serializes");
    BaseSceneSnapshot {
        index: s.index,
        descriptor: sha256_hex(&canonical),
        presentation_interval: interval,
    }
}

/// Expands a snapshot into `floor(len * fps / 1000)` frames at integer
/// millisecond times `start + floor(i * 1000 / fps)`.
///
/// The final `ceil(20%)` of frames carry the transitions of `book`:
/// entering objects become visible there, and exiting or moving objects
/// are annotated.
pub fn compose_frames(
    b: &BaseSceneSnapshot,
    s: &Storyboard,
    book: &ContinuityBook,
    fps: u32,
) -> Result<FrameSequence, CgError> {
    if fps == 0 || fps > 1000 {
        return Err(CgError::InvalidFps(fps));
    }
    let iv = b.presentation_interval;
    let count = (iv.len() as u128 * fps as u128 / 1000) as u64;
    let tail = (count * ENTER_TAIL_PERCENT).div_ceil(100);
    let tail_start = count - tail;

    let base: BTreeSet<String> = s.objects.iter().map(|p| p.object_id.clone()).collect();
    let mut with_entering = base.clone();
    let mut notes = Vec::new();
    for e in &book.entries {
        let verb = match e.action {
            Action::Enters if e.linked_storyboard == book.index + 1 => {
                with_entering.insert(e.object_id.clone());
                "entering"
            }
            Action::Exits => "exiting",
            Action::Moves => "moving",
            _ => continue,
        };
        notes.push(format!("{verb} {}", e.object_id));
    }
    let tail_note = if notes.is_empty() {
        "steady".to_string()
    } else {
        notes.join("; ")
    };

    let frames = (0..count)
        .map(|i| {
            let in_tail = i >= tail_start;
            FrameDescriptor {
                time: iv.start + (i as u128 * 1000 / fps as u128) as u64,
                visible_objects: if in_tail {
                    with_entering.clone()
                } else {
                    base.clone()
                },
                background: s.background.clone(),
                style: s.style.clone(),
                motion_note: if in_tail {
                    tail_note.clone()
                } else {
                    "steady".into()
                },
            }
        })
        .collect();
    Ok(FrameSequence {
        bss_index: b.index,
        fps,
        frames,
    })
}
