use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::{element_label, SceneSample};
use crate::ops::{ElementRef, MergedPackage};
use crate::package::{Millis, ROLE_BACKGROUND, ROLE_STYLE};
use crate::seed;

/// Side length of the square layout grid.
pub const GRID: u8 = 8;

pub const BACKGROUND_PALETTE: [&str; 8] = [
    "city street",
    "seaside",
    "living room",
    "forest trail",
    "rooftop at dusk",
    "subway platform",
    "studio set",
    "night market",
];

pub const STYLE_PALETTE: [&str; 6] = ["noir", "action", "comedy", "documentary", "anime", "pastel"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GridPos {
    pub x: u8,
    pub y: u8,
}

impl GridPos {
    pub fn in_bounds(self) -> bool {
        self.x < GRID && self.y < GRID
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub object_id: String,
    pub position: GridPos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Storyboard {
    pub index: usize,
    /// Sorted by object id; each object placed once.
    pub objects: Vec<Placement>,
    pub background: String,
    pub style: String,
    pub element_refs: Vec<ElementRef>,
    pub timestamp: Millis,
}

impl Storyboard {
    pub fn position(&self, object_id: &str) -> Option<GridPos> {
        self.objects
            .iter()
            .find(|p| p.object_id == object_id)
            .map(|p| p.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Action {
    Enters,
    Exits,
    Moves,
    Persists,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinuityEntry {
    pub object_id: String,
    pub action: Action,
    pub target_position: Option<GridPos>,
    pub linked_storyboard: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContinuityBook {
    pub index: usize,
    pub entries: Vec<ContinuityEntry>,
}

impl ContinuityBook {
    pub fn entering(&self) -> impl Iterator<Item = &ContinuityEntry> {
        self.entries
            .iter()
            .filter(move |e| e.action == Action::Enters && e.linked_storyboard == self.index + 1)
    }
}

fn scene_wide(m: &MergedPackage, role: &str) -> Option<String> {
    m.exclusive(role).map(element_label)
}

/// One storyboard and one continuity book per scene sample.
///
/// Objects are the visible features cited by the sample. An object already
/// on screen keeps its grid cell with probability 2/3.
pub fn build_storyboards(
    samples: &[SceneSample],
    m: &MergedPackage,
    seed: u64,
) -> (Vec<Storyboard>, Vec<ContinuityBook>) {
    let mut rng = seed::rng(seed);
    let background = scene_wide(m, ROLE_BACKGROUND).unwrap_or_else(|| {
        BACKGROUND_PALETTE[rng.random_range(0..BACKGROUND_PALETTE.len())].into()
    });
    let style = scene_wide(m, ROLE_STYLE)
        .unwrap_or_else(|| STYLE_PALETTE[rng.random_range(0..STYLE_PALETTE.len())].into());

    let mut boards: Vec<Storyboard> = Vec::with_capacity(samples.len());
    for s in samples {
        let mut tags: Vec<String> = s
            .element_refs
            .iter()
            .filter_map(|r| m.element(r))
            .filter_map(|e| e.element.visible_feature().map(str::to_string))
            .collect();
        tags.sort();
        tags.dedup();
        let prev = boards.last();
        let objects = tags
            .into_iter()
            .map(|tag| {
                let kept = prev
                    .and_then(|b| b.position(&tag))
                    .filter(|_| rng.random_ratio(2, 3));
                let position = kept.unwrap_or_else(|| GridPos {
                    x: rng.random_range(0..GRID),
                    y: rng.random_range(0..GRID),
                });
                Placement {
                    object_id: tag,
                    position,
                }
            })
            .collect();
        boards.push(Storyboard {
            index: s.index,
            objects,
            background: background.clone(),
            style: style.clone(),
            element_refs: s.element_refs.clone(),
            timestamp: s.timestamp,
        });
    }
    let books = continuity_books(&boards);
    (boards, books)
}

/// Continuity directives linking each storyboard to its successor.
///
/// For storyboard n followed by n+1:
/// kept in place → Persists (n); kept but relocated → Moves (n+1, new cell);
/// gone in n+1 → Exits (n); new in n+1 → Enters (n+1, its cell there).
/// The last storyboard only has Persists entries.
pub fn continuity_books(boards: &[Storyboard]) -> Vec<ContinuityBook> {
    boards
        .iter()
        .enumerate()
        .map(|(n, board)| {
            let mut entries = Vec::new();
            let next = boards.get(n + 1);
            for p in &board.objects {
                let entry = match next.map(|b| b.position(&p.object_id)) {
                    None => (Action::Persists, None, n),
                    Some(Some(pos)) if pos == p.position => (Action::Persists, None, n),
                    Some(Some(pos)) => (Action::Moves, Some(pos), n + 1),
                    Some(None) => (Action::Exits, None, n),
                };
                entries.push(ContinuityEntry {
                    object_id: p.object_id.clone(),
                    action: entry.0,
                    target_position: entry.1,
                    linked_storyboard: entry.2,
                });
            }
            if let Some(next) = next {
                let current: BTreeMap<&str, ()> = board
                    .objects
                    .iter()
                    .map(|p| (p.object_id.as_str(), ()))
                    .collect();
                for p in &next.objects {
                    if !current.contains_key(p.object_id.as_str()) {
                        entries.push(ContinuityEntry {
                            object_id: p.object_id.clone(),
                            action: Action::Enters,
                            target_position: Some(p.position),
                            linked_storyboard: n + 1,
                        });
                    }
                }
            }
            entries.sort_by(|a, b| (&a.object_id, a.action).cmp(&(&b.object_id, b.action)));
            ContinuityBook { index: n, entries }
        })
        .collect()
}
