use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::definability::DefinabilityContext;
use crate::definer::{isolating_formula, lemma31_define, zero_type_partition, DefinerResult, Isolation};
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::FormulaSet;
use crate::model::{Element, PosetView};
use crate::typespace::{enumerate_types, ParamSet, TypeTrace};

/// `⌊log₂ w⌋`, with 0 for the empty poset.
pub fn vcd_exponent(width: usize) -> usize {
    if width == 0 {
        0
    } else {
        (usize::BITS - 1 - width.leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcdOptions {
    /// Use this `d` instead of `⌊log₂ width⌋`.
    pub forced_d: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateKind {
    /// Explicit formulas from the recursive definer.
    Syntactic { result: DefinerResult },
    /// No formula, but an admissible tuple of length `d` exists.
    Semantic { tuple: Vec<Vec<Element>>, reason: String },
    Uncertified { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCertificate {
    pub trace: TypeTrace,
    pub witness: Element,
    pub class_size: usize,
    pub kind: CertificateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcdReport {
    pub width: usize,
    pub d: usize,
    pub types: Vec<TypeCertificate>,
    pub syntactic: usize,
    pub semantic: usize,
    pub uncertified: usize,
    /// Share of certified types that needed the semantic fallback.
    pub fallback_rate: f64,
}

impl VcdReport {
    pub fn all_certified(&self) -> bool {
        self.uncertified == 0
    }
}

/// Certifies every realized `Δ`-type over `B` with at most `d` parameters,
/// `d = ⌊log₂ width⌋` unless forced. Types whose class has an exact
/// isolating formula go through [`lemma31_define`]; the rest fall back to
/// the orbit criterion.
pub fn vcd_certificate(
    p: &PosetView,
    delta: &FormulaSet,
    params: &ParamSet,
    options: VcdOptions,
    limits: &Limits,
) -> Result<VcdReport> {
    let s = p.structure();
    let width = p.width(limits)?;
    let d = options.forced_d.unwrap_or_else(|| vcd_exponent(width));
    let cap = 1usize
        .checked_shl(d as u32 + 1)
        .map(|v| v - 1)
        .ok_or_else(|| Error::InvalidArgument(format!("d = {d} is too large")))?;
    let part = zero_type_partition(p, limits)?;
    let types = enumerate_types(s, delta, params, None, limits)?;

    let needed: BTreeSet<usize> = types
        .iter()
        .map(|t| part.class_of(t.realizers()[0]))
        .filter(|&k| part.classes[k].len() <= cap)
        .collect();
    let isolations: HashMap<usize, Isolation> = needed
        .into_par_iter()
        .map(|k| Ok((k, isolating_formula(p, &part.classes[k], limits)?)))
        .collect::<Result<_>>()?;

    let ctx = DefinabilityContext::new(s, delta, params, limits)?;
    let certs: Vec<TypeCertificate> = types
        .into_par_iter()
        .map(|trace| {
            let c = trace.realizers()[0];
            let k = part.class_of(c);
            let class_size = part.classes[k].len();
            let mut reason = if class_size > cap {
                format!("class of size {class_size} exceeds 2^(d+1) - 1 = {cap}")
            } else {
                String::new()
            };
            if let Some(iso) = isolations.get(&k) {
                if iso.exact {
                    match lemma31_define(s, &iso.formula, &iso.var, delta, c, params, d, limits) {
                        Ok(result) => {
                            return Ok(TypeCertificate {
                                trace,
                                witness: c,
                                class_size,
                                kind: CertificateKind::Syntactic { result },
                            })
                        }
                        Err(e) => reason = format!("definer failed: {e}"),
                    }
                } else {
                    reason = "isolating formula is over-approximate".into();
                }
            }
            let kind = match ctx.has_definition(&trace, d)? {
                Some(t) => CertificateKind::Semantic {
                    tuple: params.resolve(&t),
                    reason,
                },
                None => CertificateKind::Uncertified {
                    reason: format!("{reason}; no admissible tuple of length {d}"),
                },
            };
            Ok(TypeCertificate {
                trace,
                witness: c,
                class_size,
                kind,
            })
        })
        .collect::<Result<_>>()?;

    let count = |f: fn(&CertificateKind) -> bool| certs.iter().filter(|c| f(&c.kind)).count();
    let syntactic = count(|k| matches!(k, CertificateKind::Syntactic { .. }));
    let semantic = count(|k| matches!(k, CertificateKind::Semantic { .. }));
    let uncertified = count(|k| matches!(k, CertificateKind::Uncertified { .. }));
    let certified = syntactic + semantic;
    Ok(VcdReport {
        width,
        d,
        types: certs,
        syntactic,
        semantic,
        uncertified,
        fallback_rate: if certified == 0 {
            0.0
        } else {
            semantic as f64 / certified as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_grid_order, make_hypercube_poset, GridOrderSpec, HypercubePosetSpec};
    use crate::model::{FiniteStructure, ORDER};

    #[test]
    fn exponent_readings_agree() {
        for w in 1..200usize {
            // ⌈log₂(w + 1)⌉ - 1
            let mut c = 0;
            while (1usize << c) < w + 1 {
                c += 1;
            }
            assert_eq!(vcd_exponent(w), c - 1, "w = {w}");
        }
    }

    #[test]
    fn grid_width_three() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let b = ParamSet::elements(&[g.spec.index(0, 1), g.spec.index(2, 0), g.spec.index(4, 2)]).unwrap();
        let r = vcd_certificate(&g.poset(), &FormulaSet::order(), &b, VcdOptions::default(), &Limits::default())
            .unwrap();
        assert_eq!((r.width, r.d), (3, 1));
        assert!(r.all_certified());
        assert_eq!(r.semantic, 0);
        for t in &r.types {
            let CertificateKind::Syntactic { result } = &t.kind else { panic!() };
            assert!(result.param_count <= 1);
        }
    }

    #[test]
    fn chain_is_parameter_free() {
        let pairs: Vec<_> = (0..5)
            .flat_map(|a| (a + 1..5).map(move |b| vec![a, b]))
            .collect();
        let s = FiniteStructure::new(5).with_relation(ORDER, 2, pairs).unwrap();
        let b = ParamSet::elements(&[1, 3]).unwrap();
        let r = vcd_certificate(&s.poset(ORDER).unwrap(), &FormulaSet::order_and_equality(), &b, VcdOptions::default(), &Limits::default())
            .unwrap();
        assert_eq!(r.d, 0);
        assert_eq!(r.syntactic, r.types.len());
    }

    #[test]
    fn hypercube_forced_below_width() {
        let h = make_hypercube_poset(HypercubePosetSpec { d: 1 }).unwrap();
        let b = ParamSet::elements(&h.hyperplanes).unwrap();
        let lim = Limits::default();
        let natural = vcd_certificate(&h.poset(), &FormulaSet::order(), &b, VcdOptions::default(), &lim).unwrap();
        assert_eq!(natural.d, 2);
        assert!(natural.all_certified());
        let forced = vcd_certificate(&h.poset(), &FormulaSet::order(), &b, VcdOptions { forced_d: Some(1) }, &lim)
            .unwrap();
        assert!(forced.uncertified >= 1);
    }
}
