//! Pinpoint-targeted ads: one prompt package per user attribute, blended
//! for exactly the attributes a user has.

use std::collections::{BTreeMap, BTreeSet};

use pdm_core::netsim::builtin;
use pdm_core::ops::{merge_m1, MergePolicy, MergedPackage, OpsError};
use pdm_core::package::PromptPackage;
use thiserror::Error;

pub const ATTRIBUTES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("no attributes selected")]
    EmptySelection,
    #[error("no package prepared for attribute {0:?}")]
    MissingPackage(String),
    #[error(transparent)]
    Merge(#[from] OpsError),
}

/// Merges the packages keyed by the user's attributes, and nothing else.
pub fn targeted_ad_assemble(
    attributes: &BTreeSet<String>,
    packages: &BTreeMap<String, PromptPackage>,
) -> Result<MergedPackage, TargetError> {
    if attributes.is_empty() {
        return Err(TargetError::EmptySelection);
    }
    let chosen = attributes
        .iter()
        .map(|a| {
            packages
                .get(a)
                .cloned()
                .ok_or_else(|| TargetError::MissingPackage(a.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge_m1(&chosen, &MergePolicy::default())?)
}

/// The attribute-keyed packages of the bundled targeted-ad scenario.
pub fn bundled_ad_packages() -> BTreeMap<String, PromptPackage> {
    let s = builtin::load("targeted-ad")
        .expect("bundled")
        .expect("bundled scenario parses");
    s.broadcasters
        .into_iter()
        .filter_map(|b| {
            let key = b.package.features().into_iter().next()?;
            Some((key, b.package))
        })
        .collect()
}

/// Parses `a,b,d` style attribute lists.
pub fn parse_attributes(s: &str) -> BTreeSet<String> {
    s.split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(str::to_string)
        .collect()
}
