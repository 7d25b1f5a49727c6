//! Trajectories and exact coverage crossing times.
//!
//! Membership is decided by one predicate evaluated at integer milliseconds.
//! Crossings are located analytically (line against circle) and then
//! snapped to the first millisecond at which the predicate flips, so the
//! result agrees with a dense per-millisecond scan.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::package::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Circle {
    /// Boundary inclusive.
    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: Millis,
    pub x: f64,
    pub y: f64,
}

/// Position at `t`: linear between waypoints, held before the first and
/// after the last.
pub fn position(waypoints: &[Waypoint], t: Millis) -> (f64, f64) {
    let Some(first) = waypoints.first() else {
        return (0.0, 0.0);
    };
    if t <= first.t {
        return (first.x, first.y);
    }
    let i = waypoints.partition_point(|w| w.t <= t);
    if i == waypoints.len() {
        let last = waypoints[i - 1];
        return (last.x, last.y);
    }
    let (a, b) = (waypoints[i - 1], waypoints[i]);
    let f = (t - a.t) as f64 / (b.t - a.t) as f64;
    (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)
}

pub fn inside(c: &Circle, waypoints: &[Waypoint], t: Millis) -> bool {
    c.contains(position(waypoints, t))
}

/// Maximal stretches `[enter, exit)` within `[0, horizon)` during which the
/// trajectory is inside `c`.
pub fn dwells(c: &Circle, waypoints: &[Waypoint], horizon: Millis) -> Vec<(Millis, Millis)> {
    if horizon == 0 {
        return Vec::new();
    }
    let mut probes: BTreeSet<Millis> = BTreeSet::new();
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b.t - a.t) as f64;
        let v = ((b.x - a.x) / span, (b.y - a.y) / span);
        let d = (a.x - c.center.0, a.y - c.center.1);
        let qa = v.0 * v.0 + v.1 * v.1;
        if qa == 0.0 {
            continue;
        }
        let qb = 2.0 * (v.0 * d.0 + v.1 * d.1);
        let qc = d.0 * d.0 + d.1 * d.1 - c.radius * c.radius;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for s in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
            let t = a.t as f64 + s;
            if t < a.t as f64 - 2.0 || t > b.t as f64 + 2.0 {
                continue;
            }
            let lo = (t.floor() as i128 - 2).max(1) as Millis;
            let hi = (t.ceil() as i128 + 2).max(0) as Millis;
            probes.extend(lo..=hi.min(horizon - 1));
        }
    }

    let mut out = Vec::new();
    let mut open = inside(c, waypoints, 0).then_some(0);
    for t in probes {
        let now = inside(c, waypoints, t);
        if now == inside(c, waypoints, t - 1) {
            continue;
        }
        match (open, now) {
            (None, true) => open = Some(t),
            (Some(s), false) => {
                out.push((s, t));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push((s, horizon));
    }
    out
}
