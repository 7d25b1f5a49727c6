use super::OpsError;
use crate::package::{
    validate_package, Modality, PackageReport, Payload, PromptPackage, ServiceElement,
    ROLE_BACKGROUND,
};

/// Element id used for the location-hooked backdrop.
const LOCATION_ELEMENT_ID: &str = "location-backdrop";

/// Source of the receiver's real-world position.
pub trait LocationProvider {
    fn location(&self) -> (f64, f64);
}

/// Fixed position, for tests and demos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MockLocationProvider {
    pub x: f64,
    pub y: f64,
}

impl LocationProvider for MockLocationProvider {
    fn location(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Role(String),
    Feature(String),
}

impl Selector {
    fn matches(&self, e: &ServiceElement) -> bool {
        match self {
            Selector::Role(r) => &e.role == r,
            Selector::Feature(f) => &e.feature_tag == f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Insert(ServiceElement),
    Remove(Selector),
    /// Rewrites every element tagged `from` to `to`, optionally swapping
    /// in a new payload.
    Replace {
        from: String,
        to: String,
        payload: Option<Payload>,
    },
    /// Inserts a background tagged `street-view:loc(x,y)` from the location
    /// provider, displacing optional backgrounds.
    LocationBackdrop,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentationProfile {
    pub directives: Vec<Directive>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refusal {
    pub directive: usize,
    pub element_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentationOutcome {
    pub package: PromptPackage,
    pub refusals: Vec<Refusal>,
    pub report: PackageReport,
}

/// Applies the profile's directives in order.
///
/// Mandatory elements are never removed; each such attempt is refused and
/// logged, and the rest of the directive still applies. The result is
/// validated again.
pub fn apply_augmentation(
    p: &PromptPackage,
    profile: &AugmentationProfile,
    location: &dyn LocationProvider,
) -> Result<AugmentationOutcome, OpsError> {
    let mut out = p.clone();
    let mut refusals = Vec::new();
    for (i, d) in profile.directives.iter().enumerate() {
        match d {
            Directive::Insert(e) => {
                if out.element(&e.element_id).is_some() {
                    refusals.push(Refusal {
                        directive: i,
                        element_id: e.element_id.clone(),
                        reason: "element id already present".into(),
                    });
                } else {
                    out.elements.push(e.clone());
                }
            }
            Directive::Remove(sel) => remove(&mut out, i, sel, &mut refusals),
            Directive::Replace { from, to, payload } => {
                let mut hit = false;
                for e in out.elements.iter_mut().filter(|e| &e.feature_tag == from) {
                    hit = true;
                    e.feature_tag = to.clone();
                    if let Some(p) = payload {
                        e.payload = p.clone();
                    }
                }
                if !hit {
                    return Err(OpsError::UnknownFeature(from.clone()));
                }
            }
            Directive::LocationBackdrop => {
                let (x, y) = location.location();
                remove(
                    &mut out,
                    i,
                    &Selector::Role(ROLE_BACKGROUND.into()),
                    &mut refusals,
                );
                out.elements.retain(|e| e.element_id != LOCATION_ELEMENT_ID);
                out.elements.push(
                    ServiceElement::new(
                        LOCATION_ELEMENT_ID,
                        Modality::Image,
                        ROLE_BACKGROUND,
                        Payload::text(&format!("street view around ({x}, {y})")),
                    )
                    .feature(format!("street-view:loc({x},{y})")),
                );
            }
        }
        out.sort_elements();
    }
    let report = validate_package(&out);
    Ok(AugmentationOutcome {
        package: out,
        refusals,
        report,
    })
}

fn remove(p: &mut PromptPackage, directive: usize, sel: &Selector, refusals: &mut Vec<Refusal>) {
    for e in p.elements.iter().filter(|e| sel.matches(e) && e.mandatory) {
        refusals.push(Refusal {
            directive,
            element_id: e.element_id.clone(),
            reason: "mandatory elements cannot be removed".into(),
        });
    }
    p.elements.retain(|e| !(sel.matches(e) && !e.mandatory));
}
