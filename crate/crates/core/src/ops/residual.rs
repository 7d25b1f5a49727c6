use std::collections::BTreeMap;

use super::{MergedElement, OpsError};
use crate::cg::{GeneratedContent, NarrativeFlag, SceneSample};
use crate::package::{Millis, Modality, Payload, PromptPackage, Schedule, ServiceElement};

/// Id of the synthetic element carrying the unfinished story of an origin.
pub const RESIDUAL_ELEMENT_ID: &str = "~residual";

/// The not yet presented remainder of generated content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPackage {
    /// Main package of the content at the cut.
    pub origin_package_id: String,
    pub cut_time: Millis,
    /// Samples from the one on screen at the cut onwards, restamped so no
    /// timestamp precedes the cut.
    pub remaining_scene_samples: Vec<SceneSample>,
    pub remaining_flags: Vec<NarrativeFlag>,
    /// Every element cited by a remaining flag, with its origin.
    pub remaining_elements: Vec<MergedElement>,
}

pub fn residual(c: &GeneratedContent, t_cut: Millis) -> Result<ResidualPackage, OpsError> {
    let rt = c.runtime();
    if t_cut >= rt.end {
        return Err(OpsError::NothingRemaining { t_cut, end: rt.end });
    }
    // the sample on screen at the cut, or the next one when the cut falls
    // between units
    let first = c
        .bss_list
        .partition_point(|b| b.presentation_interval.end <= t_cut);
    let cut = t_cut.max(rt.start);

    let samples: Vec<SceneSample> = c.scene_samples[first..]
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.timestamp = s.timestamp.max(cut);
            s
        })
        .collect();
    let first_flag = samples[0].flag_range.0;

    let mut elements: BTreeMap<(String, String), MergedElement> = BTreeMap::new();
    let mut flags = Vec::new();
    for (k, s) in c.scene_samples.iter().enumerate().skip(first) {
        let unit = c.unit_of(k).expect("every storyboard has a unit");
        for f in &c.narrative.flags[s.flag_range.0..=s.flag_range.1] {
            for r in &f.element_refs {
                if let Some(m) = unit.merged.element(r) {
                    elements
                        .entry((r.package_id.clone(), r.element_id.clone()))
                        .or_insert_with(|| m.clone());
                }
            }
            let mut f = f.clone();
            f.time_hint = f.time_hint.max(cut);
            flags.push(f);
        }
    }
    debug_assert_eq!(flags.first().map(|f| f.index), Some(first_flag));

    let origin = c
        .unit_of(first)
        .map(|u| u.merged.main_package_id.clone())
        .unwrap_or_default();
    Ok(ResidualPackage {
        origin_package_id: origin,
        cut_time: cut,
        remaining_scene_samples: samples,
        remaining_flags: flags,
        remaining_elements: elements.into_values().collect(),
    })
}

/// Turns a residual into one synthetic package per origin, so it can be
/// merged like any received package.
///
/// Each keeps its origin's id, provider and version, runs from the cut to
/// the end given by `sources`, and gains a mandatory narrative-hint element
/// holding the remaining beats that cite that origin. Origins missing from
/// `sources`, or already over at the cut, are left out.
pub fn residual_packages(r: &ResidualPackage, sources: &[PromptPackage]) -> Vec<PromptPackage> {
    let mut by_origin: BTreeMap<&str, Vec<ServiceElement>> = BTreeMap::new();
    for m in &r.remaining_elements {
        if m.element.element_id != RESIDUAL_ELEMENT_ID {
            by_origin
                .entry(&m.origin)
                .or_default()
                .push(m.element.clone());
        }
    }
    by_origin
        .into_iter()
        .filter_map(|(origin, mut elements)| {
            let src = sources.iter().find(|p| p.package_id == origin)?;
            if src.schedule.end() <= r.cut_time {
                return None;
            }
            let beats: Vec<&str> = r
                .remaining_flags
                .iter()
                .filter(|f| f.element_refs.iter().any(|e| e.package_id == origin))
                .map(|f| f.text.as_str())
                .collect();
            elements.push(
                ServiceElement::new(
                    RESIDUAL_ELEMENT_ID,
                    Modality::Metadata,
                    "narrative-hint",
                    Payload::text(&beats.join("\n")),
                )
                .mandatory(true),
            );
            let mut p = PromptPackage::new(
                origin,
                src.provider_id.clone(),
                elements,
                Schedule::span(r.cut_time, src.schedule.end()),
            );
            p.version = src.version;
            Some(p)
        })
        .collect()
}
