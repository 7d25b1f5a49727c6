use super::{PromptPackage, ServiceElement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopK {
    pub package: PromptPackage,
    /// Set when the mandatory elements alone exceed `k`; all of them are kept.
    pub mandatory_overflow: bool,
}

/// Keeps every mandatory element plus the best optional ones by
/// `(priority, element_id)` until `min(k, len)` elements are selected.
///
/// # Panics
///
/// Panics if `k == 0`.
pub fn select_top_k(p: &PromptPackage, k: usize) -> TopK {
    assert!(k >= 1, "top-k bound must be at least 1");
    let mandatory = p.elements.iter().filter(|e| e.mandatory).count();
    if mandatory > k {
        let mut package = p.clone();
        package.elements.retain(|e| e.mandatory);
        return TopK {
            package,
            mandatory_overflow: true,
        };
    }
    if k >= p.elements.len() {
        return TopK {
            package: p.clone(),
            mandatory_overflow: false,
        };
    }

    let mut optional: Vec<&ServiceElement> = p.elements.iter().filter(|e| !e.mandatory).collect();
    optional.sort_by(|a, b| {
        (a.priority, a.element_id.as_bytes()).cmp(&(b.priority, b.element_id.as_bytes()))
    });
    let keep: Vec<&str> = optional
        .iter()
        .take(k - mandatory)
        .map(|e| e.element_id.as_str())
        .collect();

    let mut package = p.clone();
    package
        .elements
        .retain(|e| e.mandatory || keep.contains(&e.element_id.as_str()));
    TopK {
        package,
        mandatory_overflow: false,
    }
}
