use std::collections::BTreeSet;

use serde::Serialize;

use super::{clip_to, OpsError};
use crate::cg::{GeneratedContent, Interval};
use crate::package::{Millis, PromptPackage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimeSegment {
    pub interval: Interval,
    pub main_id: String,
    pub sub_ids: Vec<String>,
    pub features_present: BTreeSet<String>,
    /// Features that vanish at the end of this segment.
    pub fade_out: BTreeSet<String>,
}

impl TimeSegment {
    pub fn package_ids(&self) -> Vec<&str> {
        std::iter::once(self.main_id.as_str())
            .chain(self.sub_ids.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Timeline {
    pub segments: Vec<TimeSegment>,
}

impl Timeline {
    pub fn at(&self, t: Millis) -> Option<&TimeSegment> {
        self.segments.iter().find(|s| s.interval.contains(t))
    }

    /// Recomputes every `fade_out` set: a feature fades at the end of a
    /// segment when the following segment (if adjacent) no longer shows it.
    pub fn refresh_fade_out(&mut self) {
        let n = self.segments.len();
        for i in 0..n {
            let next: BTreeSet<String> = match self.segments.get(i + 1) {
                Some(s) if s.interval.start == self.segments[i].interval.end => {
                    s.features_present.clone()
                }
                _ => BTreeSet::new(),
            };
            let seg = &mut self.segments[i];
            seg.fade_out = seg.features_present.difference(&next).cloned().collect();
        }
    }

    /// Drops everything from `t` on, shortening the segment that spans it.
    pub fn truncate(&mut self, t: Millis) {
        self.segments.retain(|s| s.interval.start < t);
        if let Some(last) = self.segments.last_mut() {
            last.interval.end = last.interval.end.min(t);
        }
    }
}

fn main_key(p: &PromptPackage) -> (Millis, &str, &str) {
    (
        p.schedule.start,
        p.provider_id.as_str(),
        p.package_id.as_str(),
    )
}

/// Plans segments from `now` on for packages already active plus arrivals.
///
/// Boundaries sit at every schedule endpoint (clipped to `now`). Stretches
/// with no package scheduled produce no segment. The main of a segment is
/// the active package with the earliest original start.
pub fn plan_timeline_at(
    active: &[PromptPackage],
    arrivals: &[PromptPackage],
    now: Millis,
) -> Result<Timeline, OpsError> {
    for a in arrivals {
        if a.schedule.end() <= now {
            return Err(OpsError::StaleArrival {
                package_id: a.package_id.clone(),
                end: a.schedule.end(),
                now,
            });
        }
    }
    let live: Vec<&PromptPackage> = active
        .iter()
        .chain(arrivals)
        .filter(|p| p.schedule.end() > now && p.schedule.duration > 0)
        .collect();
    let clipped: Vec<PromptPackage> = live.iter().map(|p| clip_to(p, now)).collect();

    let mut points: BTreeSet<Millis> = BTreeSet::new();
    for p in &clipped {
        points.insert(p.schedule.start);
        points.insert(p.schedule.end());
    }
    let points: Vec<Millis> = points.into_iter().collect();

    let mut segments = Vec::new();
    for w in points.windows(2) {
        let iv = Interval::new(w[0], w[1]);
        let mut here: Vec<usize> = (0..live.len())
            .filter(|&i| {
                clipped[i].schedule.start <= iv.start && iv.end <= clipped[i].schedule.end()
            })
            .collect();
        if here.is_empty() {
            continue;
        }
        here.sort_by(|&a, &b| main_key(live[a]).cmp(&main_key(live[b])));
        let features = here.iter().flat_map(|&i| live[i].features()).collect();
        segments.push(TimeSegment {
            interval: iv,
            main_id: live[here[0]].package_id.clone(),
            sub_ids: here[1..]
                .iter()
                .map(|&i| live[i].package_id.clone())
                .collect(),
            features_present: features,
            fade_out: BTreeSet::new(),
        });
    }
    let mut t = Timeline { segments };
    t.refresh_fade_out();
    Ok(t)
}

/// Plans the blend of `arrivals` into `active`, from the start of its runtime.
pub fn plan_timeline_m2(
    active: &GeneratedContent,
    arrivals: &[PromptPackage],
) -> Result<Timeline, OpsError> {
    let mut arrivals = arrivals.to_vec();
    arrivals.sort_by(|a, b| main_key(a).cmp(&main_key(b)));
    plan_timeline_at(&active.sources, &arrivals, active.runtime().start)
}
