//! Resource caps shared by the search kernels.
//!
//! Every cap aborts with [`Error::ResourceCap`](crate::Error::ResourceCap)
//! instead of returning a partial answer. Defaults can be overridden from the
//! environment (see [`Limits::from_env`]).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Largest universe accepted by the exact width search.
    pub universe_cap: usize,
    /// Search nodes allowed per automorphism computation.
    pub node_budget: usize,
    /// Largest number of parameter tuples enumerated by `def_tuples`.
    pub tuple_cap: usize,
    /// Quantifier nesting accepted by the evaluator.
    pub quantifier_depth: usize,
    /// Rejections tolerated by the random poset generator.
    pub max_rejections: usize,
    /// Largest `d` tried by the breadth computation.
    pub breadth_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            universe_cap: 512,
            node_budget: 2_000_000,
            tuple_cap: 1_000_000,
            quantifier_depth: 12,
            max_rejections: 10_000,
            breadth_cap: 8,
        }
    }
}

impl Limits {
    /// Defaults overridden by `VCDLAB_UNIVERSE_CAP`, `VCDLAB_NODE_BUDGET`,
    /// `VCDLAB_TUPLE_CAP`, `VCDLAB_QUANTIFIER_DEPTH`, `VCDLAB_MAX_REJECTIONS`
    /// and `VCDLAB_BREADTH_CAP`. Unparsable values are ignored.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        let read = |key: &str, slot: &mut usize| {
            if let Some(v) = std::env::var(key).ok().and_then(|v| v.trim().parse().ok()) {
                *slot = v;
            }
        };
        read("VCDLAB_UNIVERSE_CAP", &mut limits.universe_cap);
        read("VCDLAB_NODE_BUDGET", &mut limits.node_budget);
        read("VCDLAB_TUPLE_CAP", &mut limits.tuple_cap);
        read("VCDLAB_QUANTIFIER_DEPTH", &mut limits.quantifier_depth);
        read("VCDLAB_MAX_REJECTIONS", &mut limits.max_rejections);
        read("VCDLAB_BREADTH_CAP", &mut limits.breadth_cap);
        limits
    }
}
