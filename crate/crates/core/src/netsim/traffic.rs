use std::fmt;

use serde::Serialize;

use super::SimulationTrace;
use crate::package::Millis;

/// Bytes on the air for prompts against a conventional stream of the same
/// presented content.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficReport {
    pub prompt_bytes: u128,
    pub presented_ms: Millis,
    pub baseline_bytes: u128,
    pub model_transfer_bytes: u128,
    /// `prompt / baseline`; zero when degenerate.
    pub ratio: f64,
    /// Programs after which one model transfer has paid for itself, when
    /// prompts save anything at all.
    pub break_even_programs: Option<f64>,
    /// Nothing was presented, so no comparison is meaningful.
    pub degenerate: bool,
}

/// Baseline bytes for `ms` of video at `bitrate_bps`.
pub fn baseline_bytes(bitrate_bps: u64, ms: Millis) -> u128 {
    bitrate_bps as u128 * ms as u128 / 8000
}

pub fn traffic_report(trace: &SimulationTrace) -> TrafficReport {
    let prompt_bytes: u128 = trace.agents.iter().map(|a| a.prompt_bytes()).sum();
    let presented_ms: Millis = trace
        .agents
        .iter()
        .map(|a| a.presented_until(trace.duration))
        .sum();
    TrafficReport::from_totals(
        prompt_bytes,
        presented_ms,
        trace.bitrate_bps,
        trace.model_transfer_bytes,
    )
}

impl TrafficReport {
    /// Builds the report from raw totals, as recorded in a serialized trace.
    pub fn from_totals(
        prompt_bytes: u128,
        presented_ms: Millis,
        bitrate_bps: u64,
        model: u128,
    ) -> Self {
        let baseline = baseline_bytes(bitrate_bps, presented_ms);
        let degenerate = baseline == 0;
        let ratio = if degenerate {
            0.0
        } else {
            prompt_bytes as f64 / baseline as f64
        };
        let break_even_programs = (!degenerate && baseline > prompt_bytes)
            .then(|| model as f64 / (baseline - prompt_bytes) as f64);
        TrafficReport {
            prompt_bytes,
            presented_ms,
            baseline_bytes: baseline,
            model_transfer_bytes: model,
            ratio,
            break_even_programs,
            degenerate,
        }
    }
}

impl fmt::Display for TrafficReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "prompt bytes          {}", self.prompt_bytes)?;
        writeln!(f, "presented ms          {}", self.presented_ms)?;
        writeln!(f, "baseline bytes        {}", self.baseline_bytes)?;
        writeln!(f, "model transfer bytes  {}", self.model_transfer_bytes)?;
        if self.degenerate {
            return writeln!(f, "ratio                 n/a (nothing presented)");
        }
        writeln!(f, "ratio                 {:.6}", self.ratio)?;
        match self.break_even_programs {
            Some(b) => writeln!(f, "break-even programs   {b:.1}"),
            None => writeln!(f, "break-even programs   never"),
        }
    }
}
