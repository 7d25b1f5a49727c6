use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::geometry::{dwells, inside};
use super::{AgentMode, DedupePolicy, GrtAgent, NetsimError, Scenario};
use crate::cg::{content_hash, frame_sequence_hash, ContentTrace, Interval};
use crate::ops::{execute, Event, Execution, OperationMode};
use crate::package::{package_wire_size, Millis, PromptPackage, Schedule};

/// Ids of the broadcasters covering the agent at `t`.
pub fn visible_packages(s: &Scenario, agent: &GrtAgent, t: Millis) -> BTreeSet<String> {
    s.broadcasters
        .iter()
        .filter(|b| inside(&b.coverage, &agent.waypoints, t))
        .map(|b| b.id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZoneTransition {
    pub time: Millis,
    pub visible: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceptionOutcome {
    Accepted,
    /// Repeat tick within the same stay.
    Repeat,
    /// Rejected by the agent's accept filter.
    Filtered,
    /// Single-source agent already presenting another package.
    Busy,
    /// Schedule already over.
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reception {
    pub time: Millis,
    pub broadcaster: String,
    pub package_id: String,
    pub bytes: usize,
    pub outcome: ReceptionOutcome,
    pub visible: BTreeSet<String>,
}

/// One row per timeline segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Phase {
    pub interval: Interval,
    /// Broadcasters covering the agent when the segment starts.
    pub visible: BTreeSet<String>,
    pub main: String,
    pub subs: Vec<String>,
    /// Features the plan puts on screen.
    pub features: BTreeSet<String>,
    /// Features actually found in the frames of the segment.
    pub frame_features: BTreeSet<String>,
}

/// Cumulative traffic as seen by one agent up to `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CounterSample {
    pub time: Millis,
    pub prompt_bytes: u128,
    /// Bytes a conventional stream would have needed for the content
    /// presented so far.
    pub baseline_bytes: u128,
    pub model_transfer_bytes: u128,
}

#[derive(Debug, Clone)]
pub struct AgentTrace {
    pub agent: String,
    pub seed: u64,
    pub transitions: Vec<ZoneTransition>,
    pub receptions: Vec<Reception>,
    pub events: Vec<Event>,
    pub execution: Execution,
    pub phases: Vec<Phase>,
    pub counters: Vec<CounterSample>,
}

impl AgentTrace {
    pub fn mode(&self) -> OperationMode {
        self.execution.mode
    }

    /// Milliseconds of content presented within `[0, t]`.
    pub fn presented_until(&self, t: Millis) -> Millis {
        let Some(c) = &self.execution.content else {
            return 0;
        };
        c.bss_list
            .iter()
            .map(|b| {
                let iv = b.presentation_interval;
                iv.end.min(t).saturating_sub(iv.start)
            })
            .sum()
    }

    pub fn prompt_bytes(&self) -> u128 {
        self.receptions.iter().map(|r| r.bytes as u128).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub scenario: String,
    pub seed: u64,
    pub duration: Millis,
    pub bitrate_bps: u64,
    pub model_transfer_bytes: u128,
    pub agents: Vec<AgentTrace>,
}

#[derive(Serialize)]
struct AgentView<'a> {
    agent: &'a str,
    seed: u64,
    mode: OperationMode,
    prompt_bytes: u128,
    presented_ms: Millis,
    content_hash: Option<String>,
    frame_sequence_hash: Option<String>,
    transitions: &'a [ZoneTransition],
    receptions: &'a [Reception],
    replans: Vec<ReplanView<'a>>,
    phases: &'a [Phase],
    counters: &'a [CounterSample],
    content: Option<ContentTrace<'a>>,
}

#[derive(Serialize)]
struct ReplanView<'a> {
    time: Millis,
    arrivals: &'a [String],
    departures: &'a [String],
}

#[derive(Serialize)]
struct TraceView<'a> {
    scenario: &'a str,
    seed: u64,
    duration_ms: Millis,
    bitrate_bps: u64,
    model_transfer_bytes: u128,
    agents: Vec<AgentView<'a>>,
}

impl SimulationTrace {
    pub fn to_json(&self) -> String {
        let view = TraceView {
            scenario: &self.scenario,
            seed: self.seed,
            duration_ms: self.duration,
            bitrate_bps: self.bitrate_bps,
            model_transfer_bytes: self.model_transfer_bytes,
            agents: self
                .agents
                .iter()
                .map(|a| AgentView {
                    agent: &a.agent,
                    seed: a.seed,
                    mode: a.mode(),
                    prompt_bytes: a.prompt_bytes(),
                    presented_ms: a.presented_until(self.duration),
                    content_hash: a.execution.content.as_ref().map(content_hash),
                    frame_sequence_hash: a.execution.content.as_ref().map(frame_sequence_hash),
                    transitions: &a.transitions,
                    receptions: &a.receptions,
                    replans: a
                        .execution
                        .replans
                        .iter()
                        .map(|r| ReplanView {
                            time: r.time,
                            arrivals: &r.arrivals,
                            departures: &r.departures,
                        })
                        .collect(),
                    phases: &a.phases,
                    counters: &a.counters,
                    content: a.execution.content.as_ref().map(ContentTrace::new),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&view).expect("trace serializes")
    }
}

pub fn run_scenario(s: &Scenario) -> Result<SimulationTrace, NetsimError> {
    let problems = s.validate();
    if !problems.is_empty() {
        return Err(NetsimError::Invalid(problems.join("; ")));
    }
    let agents = s
        .agents
        .iter()
        .map(|a| run_agent(s, a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationTrace {
        scenario: s.name.clone(),
        seed: s.seed,
        duration: s.duration,
        bitrate_bps: s.baseline.bitrate_bps,
        model_transfer_bytes: s.model_transfer.bytes(),
        agents,
    })
}

struct Stay<'a> {
    enter: Millis,
    exit: Millis,
    b: &'a super::Broadcaster,
}

fn run_agent(s: &Scenario, a: &GrtAgent) -> Result<AgentTrace, NetsimError> {
    let horizon = s.duration;
    let mut stays: Vec<Stay> = Vec::new();
    let mut changes: BTreeSet<Millis> = BTreeSet::from([0]);
    for b in &s.broadcasters {
        for (enter, exit) in dwells(&b.coverage, &a.waypoints, horizon) {
            changes.insert(enter);
            if exit < horizon {
                changes.insert(exit);
            }
            stays.push(Stay { enter, exit, b });
        }
    }

    let mut transitions: Vec<ZoneTransition> = Vec::new();
    for &t in &changes {
        let visible = visible_packages(s, a, t);
        if transitions.last().is_none_or(|z| z.visible != visible) {
            transitions.push(ZoneTransition { time: t, visible });
        }
    }
    let visible_at = |t: Millis| -> BTreeSet<String> {
        let i = transitions.partition_point(|z| z.time <= t);
        transitions[i - 1].visible.clone()
    };

    // (time, broadcaster, first tick of the stay, stay exit)
    let mut ticks: Vec<(Millis, &super::Broadcaster, bool, Millis)> = Vec::new();
    for st in &stays {
        let mut t = st.b.next_tick(st.enter);
        let mut first = true;
        while t < st.exit {
            ticks.push((t, st.b, first, st.exit));
            first = false;
            if st.b.dedupe == DedupePolicy::PerDwell {
                break;
            }
            t += st.b.carousel_period;
        }
    }
    ticks.sort_by(|x, y| (x.0, &x.1.id).cmp(&(y.0, &y.1.id)));

    let mut receptions = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    // package id -> end of its current presentation
    let mut live: BTreeMap<String, Millis> = BTreeMap::new();
    for (t, b, first, exit) in ticks {
        live.retain(|_, end| *end > t);
        let p = &b.package;
        let outcome = if !first {
            ReceptionOutcome::Repeat
        } else if !accepts(a, p) {
            ReceptionOutcome::Filtered
        } else if p.schedule.end() <= t {
            ReceptionOutcome::Expired
        } else if a.mode == AgentMode::Os && live.keys().any(|id| id != &p.package_id) {
            ReceptionOutcome::Busy
        } else {
            ReceptionOutcome::Accepted
        };
        if outcome == ReceptionOutcome::Accepted {
            let mut copy = p.clone();
            copy.schedule = Schedule::span(p.schedule.start.max(t), p.schedule.end());
            let end = copy.schedule.end().min(exit).min(horizon);
            events.push(Event::arrival(t, copy));
            if end < p.schedule.end() {
                events.push(Event::departure(end, p.package_id.clone()));
            }
            live.insert(p.package_id.clone(), end);
        }
        receptions.push(Reception {
            time: t,
            broadcaster: b.id.clone(),
            package_id: p.package_id.clone(),
            bytes: package_wire_size(p),
            outcome,
            visible: visible_at(t),
        });
    }
    // departures sort before arrivals at equal times; both land in one batch
    events.sort_by_key(|e| (e.time, matches!(e.kind, crate::ops::EventKind::Arrival(_))));

    let seed = s.agent_seed(a);
    let execution =
        execute(&events, seed, &s.generate_options()).map_err(|source| NetsimError::Ops {
            agent: a.id.clone(),
            source,
        })?;

    let phases = execution
        .timeline
        .segments
        .iter()
        .map(|seg| Phase {
            interval: seg.interval,
            visible: visible_at(seg.interval.start),
            main: seg.main_id.clone(),
            subs: seg.sub_ids.clone(),
            features: seg.features_present.clone(),
            frame_features: execution
                .content
                .as_ref()
                .map(|c| c.features_in(seg.interval))
                .unwrap_or_default(),
        })
        .collect();

    let mut trace = AgentTrace {
        agent: a.id.clone(),
        seed,
        transitions,
        receptions,
        events,
        execution,
        phases,
        counters: Vec::new(),
    };
    trace.counters = counters(s, &trace);
    Ok(trace)
}

fn accepts(a: &GrtAgent, p: &PromptPackage) -> bool {
    match &a.accept {
        None => true,
        Some(acc) => {
            let f = p.features();
            !f.is_empty() && f.iter().all(|x| acc.contains(x))
        }
    }
}

fn counters(s: &Scenario, tr: &AgentTrace) -> Vec<CounterSample> {
    let mut times: BTreeSet<Millis> = BTreeSet::from([0, s.duration]);
    times.extend(tr.transitions.iter().map(|z| z.time));
    times.extend(tr.receptions.iter().map(|r| r.time));
    times.extend(
        tr.phases
            .iter()
            .flat_map(|p| [p.interval.start, p.interval.end]),
    );
    times.extend(s.model_transfer.at_ms.iter().copied());
    let per_model = s.model_transfer.bytes();
    times
        .into_iter()
        .filter(|&t| t <= s.duration)
        .map(|t| CounterSample {
            time: t,
            prompt_bytes: tr
                .receptions
                .iter()
                .filter(|r| r.time <= t)
                .map(|r| r.bytes as u128)
                .sum(),
            baseline_bytes: s.baseline.bitrate_bps as u128 * tr.presented_until(t) as u128 / 8000,
            model_transfer_bytes: per_model
                * s.model_transfer.at_ms.iter().filter(|&&m| m <= t).count() as u128,
        })
        .collect()
}

impl Phase {
    pub fn len(&self) -> Millis {
        self.interval.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interval.is_empty()
    }
}
