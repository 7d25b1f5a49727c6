use std::collections::BTreeSet;

use super::{Conflict, ElementRef, MergedElement, MergedPackage, OpsError};
use crate::package::{select_top_k, PromptPackage, Schedule, EXCLUSIVE_ROLES};

pub const DEFAULT_TOP_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergePolicy {
    pub k: usize,
    pub main_override: Option<String>,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            k: DEFAULT_TOP_K,
            main_override: None,
        }
    }
}

impl MergePolicy {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            main_override: None,
        }
    }

    pub fn main(mut self, package_id: impl Into<String>) -> Self {
        self.main_override = Some(package_id.into());
        self
    }
}

/// Key deciding the main prompt: earliest start, then provider, then id.
fn main_key(p: &PromptPackage) -> (u64, &str, &str) {
    (
        p.schedule.start,
        p.provider_id.as_str(),
        p.package_id.as_str(),
    )
}

/// Unifies simultaneously received packages into one merged package.
///
/// Each input is first reduced to its top-k elements. For every exclusive
/// role the element with the smallest `(priority, provider_id, package_id,
/// element_id)` survives and the others are logged as losers.
pub fn merge_m1(
    packages: &[PromptPackage],
    policy: &MergePolicy,
) -> Result<MergedPackage, OpsError> {
    if packages.is_empty() {
        return Err(OpsError::NoPackages);
    }
    if policy.k == 0 {
        return Err(OpsError::InvalidTopK);
    }
    let mut seen = BTreeSet::new();
    for p in packages {
        if !seen.insert(p.package_id.as_str()) {
            return Err(OpsError::DuplicatePackage(p.package_id.clone()));
        }
    }

    let mut ordered: Vec<&PromptPackage> = packages.iter().collect();
    ordered.sort_by(|a, b| main_key(a).cmp(&main_key(b)));
    let main_idx = match &policy.main_override {
        Some(id) => ordered
            .iter()
            .position(|p| &p.package_id == id)
            .ok_or_else(|| OpsError::UnknownMain(id.clone()))?,
        None => 0,
    };
    let main = ordered.remove(main_idx);
    ordered.insert(0, main);

    let mut overflow = Vec::new();
    let mut candidates: Vec<(&PromptPackage, MergedElement)> = Vec::new();
    for p in &ordered {
        let top = select_top_k(p, policy.k);
        if top.mandatory_overflow {
            overflow.push(p.package_id.clone());
        }
        candidates.extend(top.package.elements.into_iter().map(|e| {
            (
                *p,
                MergedElement {
                    origin: p.package_id.clone(),
                    element: e,
                },
            )
        }));
    }

    let mut conflict_log = Vec::new();
    let mut dropped: BTreeSet<ElementRef> = BTreeSet::new();
    for role in EXCLUSIVE_ROLES {
        let mut contenders: Vec<&(&PromptPackage, MergedElement)> = candidates
            .iter()
            .filter(|(_, m)| m.element.role == role)
            .collect();
        if contenders.len() < 2 {
            continue;
        }
        contenders.sort_by(|(pa, a), (pb, b)| {
            (
                a.element.priority,
                &pa.provider_id,
                &a.origin,
                &a.element.element_id,
            )
                .cmp(&(
                    b.element.priority,
                    &pb.provider_id,
                    &b.origin,
                    &b.element.element_id,
                ))
        });
        let losers: Vec<ElementRef> = contenders[1..].iter().map(|(_, m)| m.reference()).collect();
        dropped.extend(losers.iter().cloned());
        conflict_log.push(Conflict {
            role: role.to_string(),
            winner: contenders[0].1.reference(),
            losers,
        });
    }

    let elements: Vec<MergedElement> = candidates
        .into_iter()
        .map(|(_, m)| m)
        .filter(|m| !dropped.contains(&m.reference()))
        .collect();

    let start = packages.iter().map(|p| p.schedule.start).min().unwrap_or(0);
    let end = packages.iter().map(|p| p.schedule.end()).max().unwrap_or(0);
    Ok(MergedPackage {
        main_package_id: ordered[0].package_id.clone(),
        sub_package_ids: ordered[1..].iter().map(|p| p.package_id.clone()).collect(),
        elements,
        conflict_log,
        schedule: Schedule::span(start, end),
        top_k: policy.k,
        mandatory_overflow: overflow,
    })
}
