use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::CgError;
use crate::ops::{ElementRef, MergedElement, MergedPackage};
use crate::package::Millis;
use crate::seed;

pub const MIN_FLAGS: usize = 3;

const NARRATIVE_HINT: &str = "narrative-hint";

const BEATS: [&str; 10] = [
    "comes into view",
    "takes the stage",
    "draws every eye",
    "returns unexpectedly",
    "lingers in the frame",
    "catches the light",
    "is finally revealed",
    "sets the pace",
    "shares a quiet moment",
    "turns the story",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NarrativeFlag {
    pub index: usize,
    pub text: String,
    pub element_refs: Vec<ElementRef>,
    pub time_hint: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Narrative {
    pub flags: Vec<NarrativeFlag>,
    pub seed: u64,
}

/// Short human label: the feature tag, else the payload text, else the id.
pub fn element_label(m: &MergedElement) -> String {
    let e = &m.element;
    if !e.feature_tag.is_empty() {
        return e.feature_tag.clone();
    }
    let text = e.payload.as_text();
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if text.is_empty() || text.chars().any(char::is_control) {
        return e.element_id.clone();
    }
    text.chars().take(48).collect()
}

/// Builds `max(3, |elements|)` beats over the merged schedule.
///
/// Every beat cites all mandatory elements plus one spotlight element taken
/// from a seeded permutation, so each element is cited at least once.
pub fn generate_narrative(m: &MergedPackage, seed: u64) -> Result<Narrative, CgError> {
    if m.elements.is_empty() {
        return Err(CgError::EmptyInput);
    }
    let n = m.elements.len();
    let count = n.max(MIN_FLAGS);
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mandatory: Vec<usize> = (0..n)
        .filter(|&i| m.elements[i].element.mandatory)
        .collect();
    let start = m.schedule.start;
    let duration = m.schedule.duration;

    let flags = (0..count)
        .map(|l| {
            let spot = order[l % n];
            let mut cited: Vec<usize> = mandatory.clone();
            if !cited.contains(&spot) {
                cited.push(spot);
            }
            cited.sort_unstable();
            let text = beat_text(m, spot, &mandatory, l, &mut rng);
            NarrativeFlag {
                index: l,
                text,
                element_refs: cited.iter().map(|&i| m.elements[i].reference()).collect(),
                time_hint: start + ((l as u128 * duration as u128) / count as u128) as u64,
            }
        })
        .collect();
    Ok(Narrative { flags, seed })
}

fn beat_text(
    m: &MergedPackage,
    spot: usize,
    mandatory: &[usize],
    l: usize,
    rng: &mut impl Rng,
) -> String {
    let spotlight = &m.elements[spot];
    if spotlight.element.role == NARRATIVE_HINT {
        let text = spotlight.element.payload.as_text();
        let lines: Vec<&str> = text.lines().filter(|s| !s.trim().is_empty()).collect();
        if !lines.is_empty() {
            return lines[l % lines.len()].trim().to_string();
        }
    }
    let verb = BEATS[rng.random_range(0..BEATS.len())];
    let mut text = format!("{} {}", element_label(spotlight), verb);
    let company: Vec<String> = mandatory
        .iter()
        .filter(|&&i| i != spot && m.elements[i].element.role != NARRATIVE_HINT)
        .map(|&i| element_label(&m.elements[i]))
        .collect();
    if !company.is_empty() {
        text.push_str(" alongside ");
        text.push_str(&company.join(" and "));
    }
    text
}
