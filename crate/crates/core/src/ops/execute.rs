use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    clip_to, merge_m1, plan_timeline_at, residual, residual_packages, MergePolicy, OperationMode,
    OpsError, Timeline,
};
use crate::cg::content::{append, schedule_of, sorted_sources, truncate};
use crate::cg::{generate_unit, GenerateOptions, GeneratedContent};
use crate::package::{Millis, PromptPackage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// A package has been received; its schedule is taken as given.
    Arrival(PromptPackage),
    /// The package's source is gone; its schedule is cut at the event time.
    Departure(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Millis,
    pub kind: EventKind,
}

impl Event {
    pub fn arrival(time: Millis, p: PromptPackage) -> Self {
        Self {
            time,
            kind: EventKind::Arrival(p),
        }
    }

    pub fn departure(time: Millis, package_id: impl Into<String>) -> Self {
        Self {
            time,
            kind: EventKind::Departure(package_id.into()),
        }
    }
}

/// One planning step taken in response to a batch of simultaneous events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replan {
    pub time: Millis,
    pub arrivals: Vec<String>,
    pub departures: Vec<String>,
    pub plan: Timeline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub mode: OperationMode,
    /// Content as presented: every replan keeps what came before its time.
    pub content: Option<GeneratedContent>,
    pub timeline: Timeline,
    pub replans: Vec<Replan>,
}

/// Drives the generator through time-ordered arrival and departure events.
///
/// Events sharing a timestamp form one batch. A batch that changes the set
/// of scheduled packages triggers a replan at its time `t`: the content not
/// yet presented is turned into residual packages, a timeline is planned
/// from `t`, and each of its segments is generated from a synchronous merge
/// of the packages active there, with the segment's main as main prompt.
pub fn execute(events: &[Event], seed: u64, opts: &GenerateOptions) -> Result<Execution, OpsError> {
    if let Some(i) = (1..events.len()).find(|&i| events[i].time < events[i - 1].time) {
        return Err(OpsError::UnorderedEvents(i));
    }
    let mut registry: BTreeMap<String, PromptPackage> = BTreeMap::new();
    let mut content: Option<GeneratedContent> = None;
    let mut timeline = Timeline::default();
    let mut replans: Vec<Replan> = Vec::new();
    let mut unit_counter = 0usize;

    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        let batch_end = events[i..]
            .iter()
            .position(|e| e.time != t)
            .map_or(events.len(), |p| i + p);
        let mut arrivals = Vec::new();
        let mut departures = Vec::new();
        for e in &events[i..batch_end] {
            match &e.kind {
                EventKind::Arrival(p) => {
                    if p.schedule.end() <= t {
                        return Err(OpsError::StaleArrival {
                            package_id: p.package_id.clone(),
                            end: p.schedule.end(),
                            now: t,
                        });
                    }
                    registry.insert(p.package_id.clone(), p.clone());
                    arrivals.push(p.package_id.clone());
                }
                EventKind::Departure(id) => {
                    let p = registry
                        .get_mut(id)
                        .ok_or_else(|| OpsError::UnknownDeparture(id.clone()))?;
                    if p.schedule.end() > t {
                        p.schedule = crate::package::Schedule::span(p.schedule.start.min(t), t);
                        departures.push(id.clone());
                    }
                }
            }
        }
        i = batch_end;
        if arrivals.is_empty() && departures.is_empty() {
            continue;
        }

        let live: Vec<PromptPackage> = registry
            .values()
            .filter(|p| p.schedule.end() > t)
            .cloned()
            .collect();
        let plan = plan_timeline_at(&live, &[], t)?;

        let mut adapters: BTreeMap<String, PromptPackage> = BTreeMap::new();
        if let Some(c) = &content {
            if t < c.runtime().end {
                let r = residual(c, t)?;
                let fresh: Vec<&String> = arrivals.iter().collect();
                for p in residual_packages(&r, &live) {
                    // a package received again starts over from its new copy
                    if !fresh.contains(&&p.package_id) {
                        adapters.insert(p.package_id.clone(), p);
                    }
                }
            }
        }

        let mut next = content.take();
        if let Some(c) = &mut next {
            truncate(c, t)?;
            if c.storyboards.is_empty() {
                next = None;
            }
        }
        for seg in &plan.segments {
            let inputs: Vec<PromptPackage> = seg
                .package_ids()
                .into_iter()
                .map(|id| {
                    let p = adapters.get(id).unwrap_or(&registry[id]);
                    clip_to(p, seg.interval.start).with_schedule(schedule_of(seg.interval))
                })
                .collect();
            let policy = MergePolicy::with_k(opts.k).main(&seg.main_id);
            let mut merged = merge_m1(&inputs, &policy)?;
            merged.schedule = schedule_of(seg.interval);
            let unit = generate_unit(&merged, OperationMode::MultiAsync, seed, unit_counter, opts)?;
            unit_counter += 1;
            match &mut next {
                Some(c) => append(c, unit),
                None => next = Some(unit),
            }
        }
        content = next;

        timeline.truncate(t);
        timeline.segments.extend(plan.segments.iter().cloned());
        timeline.refresh_fade_out();
        replans.push(Replan {
            time: t,
            arrivals,
            departures,
            plan,
        });
    }

    let mode = if registry.len() <= 1 {
        OperationMode::SingleSource
    } else if replans.len() == 1 {
        OperationMode::MultiSync
    } else {
        OperationMode::MultiAsync
    };
    if let Some(c) = &mut content {
        c.mode = mode;
        c.sources = sorted_sources(&registry.values().cloned().collect::<Vec<_>>());
    }
    Ok(Execution {
        mode,
        content,
        timeline,
        replans,
    })
}
