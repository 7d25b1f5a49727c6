use serde::Serialize;

use super::{CgError, Narrative};
use crate::ops::ElementRef;
use crate::package::{Millis, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SceneSample {
    pub index: usize,
    /// Inclusive range of narrative flag indices.
    pub flag_range: (usize, usize),
    pub description: String,
    pub element_refs: Vec<ElementRef>,
    pub timestamp: Millis,
}

/// Partitions the flags into `max(1, round(density * L))` contiguous groups,
/// stamped uniformly over `schedule`.
///
/// The count is capped at the flag count and at the schedule length in
/// milliseconds so that ranges stay non-empty and timestamps strictly
/// increase.
pub fn sample_scenes(
    n: &Narrative,
    density: f64,
    schedule: Schedule,
) -> Result<Vec<SceneSample>, CgError> {
    sample_scenes_capped(n, density, schedule, usize::MAX)
}

/// Largest sample count for which every snapshot over `schedule` still
/// spans at least one frame at `fps`.
pub fn frame_cap(schedule: Schedule, fps: u32) -> usize {
    let period = 1000u64.div_ceil(fps.max(1) as u64);
    (schedule.duration / period).max(1).min(usize::MAX as u64) as usize
}

pub(crate) fn sample_scenes_capped(
    n: &Narrative,
    density: f64,
    schedule: Schedule,
    cap: usize,
) -> Result<Vec<SceneSample>, CgError> {
    if !(density.is_finite() && density > 0.0) {
        return Err(CgError::InvalidDensity(density));
    }
    if schedule.duration == 0 {
        return Err(CgError::EmptyRuntime);
    }
    let flags = n.flags.len();
    if flags == 0 {
        return Err(CgError::EmptyInput);
    }
    let wanted = ((density * flags as f64).round() as usize).max(1);
    let count = wanted
        .min(flags)
        .min(cap)
        .min(schedule.duration.min(usize::MAX as u64) as usize);

    Ok((0..count)
        .map(|k| {
            let lo = k * flags / count;
            let hi = (k + 1) * flags / count - 1;
            let group = &n.flags[lo..=hi];
            let mut refs: Vec<ElementRef> = group
                .iter()
                .flat_map(|f| f.element_refs.iter().cloned())
                .collect();
            refs.sort();
            refs.dedup();
            SceneSample {
                index: k,
                flag_range: (lo, hi),
                description: group
                    .iter()
                    .map(|f| f.text.as_str())
                    .collect::<Vec<_>>()
                    .join(" / "),
                element_refs: refs,
                timestamp: schedule.start
                    + ((k as u128 * schedule.duration as u128) / count as u128) as u64,
            }
        })
        .collect())
}
