//! Scenarios bundled with the crate.

use super::{NetsimError, Scenario};

pub const NAMES: [&str; 5] = [
    "g1g2",
    "coverage-traverse",
    "transit-ads",
    "signage",
    "targeted-ad",
];

/// Bundled scenarios that deliver advertising.
pub const AD_SCENARIOS: [&str; 3] = ["transit-ads", "signage", "targeted-ad"];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "g1g2" => include_str!("../../scenarios/g1g2.json"),
        "coverage-traverse" => include_str!("../../scenarios/coverage-traverse.json"),
        "transit-ads" => include_str!("../../scenarios/transit-ads.json"),
        "signage" => include_str!("../../scenarios/signage.json"),
        "targeted-ad" => include_str!("../../scenarios/targeted-ad.json"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Option<Result<Scenario, NetsimError>> {
    source(name).map(Scenario::from_json)
}
