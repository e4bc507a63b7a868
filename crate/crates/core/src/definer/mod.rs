//! Constructive definitions of types in finite partial orders.
//!
//! Classes of elements with the same type over `∅` are the orbits of the
//! full automorphism group. In a poset each such class is an antichain, so a
//! poset of width `w` has classes of size at most `w`; with
//! `d = ⌊log₂ w⌋` every class fits under `2^{d+1} − 1` and the recursive
//! construction in [`lemma31_define`] yields definitions with at most `d`
//! parameters.

mod isolate;
mod lemma31;
mod vcd;

pub use isolate::{isolating_formula, Isolation};
pub use lemma31::{lemma31_define, DefinerResult, ParamStep, Termination};
pub use vcd::{vcd_certificate, vcd_exponent, CertificateKind, TypeCertificate, VcdOptions, VcdReport};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::limits::Limits;
use crate::model::{Element, PosetView};
use crate::symmetry::{orbits, refined_colours};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassInvariant {
    pub down: usize,
    pub up: usize,
    pub colour: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroTypePartition {
    /// Orbits of `Aut(M)`, ordered by least element.
    pub classes: Vec<Vec<Element>>,
    pub invariants: Vec<ClassInvariant>,
    class_of: Vec<usize>,
}

impl ZeroTypePartition {
    pub fn class_of(&self, e: Element) -> usize {
        self.class_of[e]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

pub fn zero_type_partition(p: &PosetView, limits: &Limits) -> Result<ZeroTypePartition> {
    let s = p.structure();
    let orb = orbits(s, &[], limits)?;
    let colours = refined_colours(s, &[])?;
    let mut classes = orb.orbits.clone();
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort();
    let mut class_of = vec![0; s.universe_size()];
    for (i, c) in classes.iter().enumerate() {
        for &e in c {
            class_of[e] = i;
        }
    }
    let invariants = classes
        .iter()
        .map(|c| ClassInvariant {
            down: p.down_set_size(c[0]),
            up: p.up_set_size(c[0]),
            colour: colours[c[0]],
        })
        .collect();
    Ok(ZeroTypePartition {
        classes,
        invariants,
        class_of,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lemma33Violation {
    /// Two comparable elements with the same type over `∅`.
    ComparableInClass { a: Element, b: Element },
    /// `a < b` but `|{x : x < a}| ≥ |{x : x < b}|`.
    DownSetNotMonotone { a: Element, b: Element },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma33Report {
    pub holds: bool,
    pub classes: usize,
    pub violation: Option<Lemma33Violation>,
}

/// Checks that every `∅`-type class is an antichain, and that down-set
/// sizes are strictly monotone along the order (the reason it holds: the
/// down-set size is an invariant, so comparable elements differ in type).
pub fn check_lemma33(p: &PosetView, limits: &Limits) -> Result<Lemma33Report> {
    let n = p.len();
    for a in 0..n {
        for b in 0..n {
            if p.lt(a, b) && p.down_set_size(a) >= p.down_set_size(b) {
                return Ok(Lemma33Report {
                    holds: false,
                    classes: 0,
                    violation: Some(Lemma33Violation::DownSetNotMonotone { a, b }),
                });
            }
        }
    }
    let part = zero_type_partition(p, limits)?;
    for class in &part.classes {
        for (i, &a) in class.iter().enumerate() {
            if let Some(&b) = class[i + 1..].iter().find(|&&b| p.comparable(a, b)) {
                return Ok(Lemma33Report {
                    holds: false,
                    classes: part.len(),
                    violation: Some(Lemma33Violation::ComparableInClass { a, b }),
                });
            }
        }
    }
    Ok(Lemma33Report {
        holds: true,
        classes: part.len(),
        violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_grid_order, make_hypercube_poset, GridOrderSpec, HypercubePosetSpec};
    use crate::model::{FiniteStructure, ORDER};

    #[test]
    fn hypercube_has_two_classes() {
        for d in 1..=3 {
            let h = make_hypercube_poset(HypercubePosetSpec { d }).unwrap();
            let part = zero_type_partition(&h.poset(), &Limits::default()).unwrap();
            let mut sizes = part.sizes();
            sizes.sort_unstable();
            assert_eq!(sizes, vec![2 * (d + 1), 1 << (d + 1)]);
            assert!(check_lemma33(&h.poset(), &Limits::default()).unwrap().holds);
        }
    }

    #[test]
    fn grid_classes_are_columns() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let part = zero_type_partition(&g.poset(), &Limits::default()).unwrap();
        assert_eq!(part.len(), 5);
        for x in 0..5 {
            let class = &part.classes[part.class_of(g.spec.index(x, 0))];
            assert_eq!(class, &(0..3).map(|i| g.spec.index(x, i)).collect::<Vec<_>>());
        }
        assert!(check_lemma33(&g.poset(), &Limits::default()).unwrap().holds);
    }

    #[test]
    fn chain_is_all_singletons() {
        let pairs: Vec<_> = (0..4)
            .flat_map(|a| (a + 1..4).map(move |b| vec![a, b]))
            .collect();
        let s = FiniteStructure::new(4).with_relation(ORDER, 2, pairs).unwrap();
        let p = s.poset(ORDER).unwrap();
        let part = zero_type_partition(&p, &Limits::default()).unwrap();
        assert_eq!(part.sizes(), vec![1; 4]);
        let r = check_lemma33(&p, &Limits::default()).unwrap();
        assert!(r.holds);
        assert_eq!(r.classes, 4);
    }
}
