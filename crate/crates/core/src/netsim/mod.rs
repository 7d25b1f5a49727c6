//! Deterministic discrete-event simulation of broadcasters carouselling
//! prompt packages to moving receivers.

pub mod builtin;
mod geometry;
mod run;
mod traffic;


use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cg::{GenerateOptions, DEFAULT_DENSITY};
use crate::ops::{OpsError, DEFAULT_TOP_K};
use crate::package::{validate_package, Millis, PackageError, PackageFile, PromptPackage};

pub use geometry::{dwells, inside, position, Circle, Waypoint};
pub use run::{
    run_scenario, visible_packages, AgentTrace, CounterSample, Phase, Reception, ReceptionOutcome,
    SimulationTrace, ZoneTransition,
};
pub use traffic::{baseline_bytes, traffic_report, TrafficReport};

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("broadcaster {id}: {source}")]
    Package {
        id: String,
        #[source]
        source: PackageError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("agent {agent}: {source}")]
    Ops {
        agent: String,
        #[source]
        source: OpsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DedupePolicy {
    /// One reception per stay inside the coverage.
    #[default]
    PerDwell,
    /// Every carousel tick is received and counted; only the first of a
    /// stay is handed to the generator.
    EveryTick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Broadcaster {
    pub id: String,
    pub coverage: Circle,
    pub package: PromptPackage,
    pub carousel_period: Millis,
    pub carousel_offset: Millis,
    pub dedupe: DedupePolicy,
}

impl Broadcaster {
    /// First carousel tick at or after `t`.
    pub fn next_tick(&self, t: Millis) -> Millis {
        if t <= self.carousel_offset {
            return self.carousel_offset;
        }
        let k = (t - self.carousel_offset).div_ceil(self.carousel_period);
        self.carousel_offset + k * self.carousel_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Blend every accepted package.
    #[default]
    M2,
    /// Present one package at a time; arrivals while one is live are ignored.
    Os,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrtAgent {
    pub id: String,
    pub waypoints: Vec<Waypoint>,
    pub mode: AgentMode,
    /// Feature tags the agent accepts. A package passes when it shows at
    /// least one feature and all of them are accepted.
    pub accept: Option<BTreeSet<String>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub bitrate_bps: u64,
    pub fps: u32,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelTransfer {
    pub params: u64,
    pub bytes_per_param: u64,
    /// Times at which the model is shipped to every agent.
    #[serde(default)]
    pub at_ms: Vec<Millis>,
}

impl ModelTransfer {
    pub fn bytes(&self) -> u128 {
        self.params as u128 * self.bytes_per_param as u128
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub duration: Millis,
    pub seed: u64,
    pub baseline: Baseline,
    pub model_transfer: ModelTransfer,
    pub density: f64,
    pub k: usize,
    pub broadcasters: Vec<Broadcaster>,
    pub agents: Vec<GrtAgent>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, NetsimError> {
        let f: ScenarioFile = serde_json::from_str(text)?;
        f.into_scenario()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from_scenario(self))
            .expect("scenario serializes")
    }

    pub fn generate_options(&self) -> GenerateOptions {
        GenerateOptions {
            density: self.density,
            fps: self.baseline.fps,
            k: self.k,
        }
    }

    pub fn agent_seed(&self, a: &GrtAgent) -> u64 {
        a.seed.unwrap_or(self.seed)
    }

    /// Every problem found, empty when the scenario can run.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.duration == 0 {
            out.push("duration_ms must be positive".into());
        }
        if self.baseline.bitrate_bps == 0 {
            out.push("baseline bitrate must be positive".into());
        }
        if !(1..=1000).contains(&self.baseline.fps) {
            out.push(format!(
                "baseline fps {} outside 1..=1000",
                self.baseline.fps
            ));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            out.push(format!("density {} must be positive", self.density));
        }
        if self.k == 0 {
            out.push("k must be positive".into());
        }
        let mut ids = BTreeSet::new();
        let mut pkgs = BTreeSet::new();
        for b in &self.broadcasters {
            if !ids.insert(&b.id) {
                out.push(format!("duplicate broadcaster id {}", b.id));
            }
            if !pkgs.insert(&b.package.package_id) {
                out.push(format!(
                    "package {} carried by more than one broadcaster",
                    b.package.package_id
                ));
            }
            let r = b.coverage.radius;
            if !(r.is_finite() && r > 0.0) {
                out.push(format!("broadcaster {}: radius must be positive", b.id));
            }
            if !(b.coverage.center.0.is_finite() && b.coverage.center.1.is_finite()) {
                out.push(format!("broadcaster {}: center must be finite", b.id));
            }
            if b.carousel_period == 0 {
                out.push(format!(
                    "broadcaster {}: carousel period must be positive",
                    b.id
                ));
            }
            for issue in validate_package(&b.package).issues {
                out.push(format!("broadcaster {}: {issue}", b.id));
            }
        }
        if self.agents.is_empty() {
            out.push("no agents".into());
        }
        let mut agents = BTreeSet::new();
        for a in &self.agents {
            if !agents.insert(&a.id) {
                out.push(format!("duplicate agent id {}", a.id));
            }
            if a.waypoints.is_empty() {
                out.push(format!("agent {}: no waypoints", a.id));
            }
            if a.waypoints.windows(2).any(|w| w[1].t <= w[0].t) {
                out.push(format!(
                    "agent {}: waypoint times must strictly increase",
                    a.id
                ));
            }
            if a.waypoints
                .iter()
                .any(|w| !(w.x.is_finite() && w.y.is_finite()))
            {
                out.push(format!(
                    "agent {}: waypoint coordinates must be finite",
                    a.id
                ));
            }
        }
        out
    }
}

// On-disk form.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    description: String,
    duration_ms: Millis,
    #[serde(default)]
    seed: u64,
    baseline: Baseline,
    #[serde(default)]
    model_transfer: ModelTransfer,
    #[serde(default)]
    generation: GenerationFile,
    broadcasters: Vec<BroadcasterFile>,
    agents: Vec<AgentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerationFile {
    #[serde(default = "default_density")]
    density: f64,
    #[serde(default = "default_k")]
    k: usize,
}

impl Default for GenerationFile {
    fn default() -> Self {
        Self {
            density: DEFAULT_DENSITY,
            k: DEFAULT_TOP_K,
        }
    }
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}

fn default_k() -> usize {
    DEFAULT_TOP_K
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BroadcasterFile {
    id: String,
    center: (f64, f64),
    radius: f64,
    carousel_period_ms: Millis,
    #[serde(default)]
    carousel_offset_ms: Millis,
    #[serde(default)]
    dedupe: DedupePolicy,
    package: PackageFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentFile {
    id: String,
    /// `[t_ms, x, y]` triples.
    waypoints: Vec<(Millis, f64, f64)>,
    #[serde(default)]
    mode: AgentMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accept: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, NetsimError> {
        let broadcasters = self
            .broadcasters
            .into_iter()
            .map(|b| {
                let package = b
                    .package
                    .into_package()
                    .map_err(|source| NetsimError::Package {
                        id: b.id.clone(),
                        source,
                    })?;
                Ok(Broadcaster {
                    id: b.id,
                    coverage: Circle {
                        center: b.center,
                        radius: b.radius,
                    },
                    package,
                    carousel_period: b.carousel_period_ms,
                    carousel_offset: b.carousel_offset_ms,
                    dedupe: b.dedupe,
                })
            })
            .collect::<Result<Vec<_>, NetsimError>>()?;
        let agents = self
            .agents
            .into_iter()
            .map(|a| GrtAgent {
                id: a.id,
                waypoints: a
                    .waypoints
                    .into_iter()
                    .map(|(t, x, y)| Waypoint { t, x, y })
                    .collect(),
                mode: a.mode,
                accept: a.accept,
                seed: a.seed,
            })
            .collect();
        Ok(Scenario {
            name: self.name,
            description: self.description,
            duration: self.duration_ms,
            seed: self.seed,
            baseline: self.baseline,
            model_transfer: self.model_transfer,
            density: self.generation.density,
            k: self.generation.k,
            broadcasters,
            agents,
        })
    }

    fn from_scenario(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            description: s.description.clone(),
            duration_ms: s.duration,
            seed: s.seed,
            baseline: s.baseline.clone(),
            model_transfer: s.model_transfer.clone(),
            generation: GenerationFile {
                density: s.density,
                k: s.k,
            },
            broadcasters: s
                .broadcasters
                .iter()
                .map(|b| BroadcasterFile {
                    id: b.id.clone(),
                    center: b.coverage.center,
                    radius: b.coverage.radius,
                    carousel_period_ms: b.carousel_period,
                    carousel_offset_ms: b.carousel_offset,
                    dedupe: b.dedupe,
                    package: PackageFile::from_package(&b.package),
                })
                .collect(),
            agents: s
                .agents
                .iter()
                .map(|a| AgentFile {
                    id: a.id.clone(),
                    waypoints: a.waypoints.iter().map(|w| (w.t, w.x, w.y)).collect(),
                    mode: a.mode,
                    accept: a.accept.clone(),
                    seed: a.seed,
                })
                .collect(),
        }
    }
}
