//! Δ-types of single elements over finite parameter sets.
//!
//! A trace records, for every formula `φ_i ∈ Δ` and parameter `b_j ∈ B`,
//! whether `φ_i(a; b_j)` holds. Only realized types are enumerated: in a
//! finite structure every complete type is realized.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{CompiledFormula, FormulaSet};
use crate::model::{Element, FiniteStructure};

/// An ordered list of distinct parameter tuples of a common length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSet {
    arity: usize,
    tuples: Vec<Vec<Element>>,
}

impl ParamSet {
    pub fn new(arity: usize, tuples: Vec<Vec<Element>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for t in &tuples {
            if t.len() != arity {
                return Err(Error::InvalidArgument(format!(
                    "parameter tuple {t:?} does not have length {arity}"
                )));
            }
            if !seen.insert(t) {
                return Err(Error::InvalidArgument(format!(
                    "parameter tuple {t:?} listed twice"
                )));
            }
        }
        Ok(ParamSet { arity, tuples })
    }

    /// Single-element parameters.
    pub fn elements(elements: &[Element]) -> Result<Self> {
        ParamSet::new(1, elements.iter().map(|&e| vec![e]).collect())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn get(&self, j: usize) -> &[Element] {
        &self.tuples[j]
    }

    pub fn tuples(&self) -> &[Vec<Element>] {
        &self.tuples
    }

    /// Positions in `B` resolved to their tuples.
    pub fn resolve(&self, positions: &[usize]) -> Vec<Vec<Element>> {
        positions.iter().map(|&j| self.tuples[j].clone()).collect()
    }

    pub fn index_of(&self, t: &[Element]) -> Option<usize> {
        self.tuples.iter().position(|u| u == t)
    }

    /// Every element occurring in some tuple, sorted.
    pub fn support(&self) -> Vec<Element> {
        let mut v: Vec<Element> = self.tuples.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn check_range(&self, s: &FiniteStructure) -> Result<()> {
        self.tuples
            .iter()
            .flatten()
            .try_for_each(|&e| s.check_element(e))
    }
}

/// A complete Δ-type over B, stored as its positive (formula, parameter)
/// pairs, together with the elements realizing it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeTrace {
    formulas: usize,
    params: usize,
    bits: Vec<bool>,
    realizers: Vec<Element>,
}

impl TypeTrace {
    pub fn from_bits(formulas: usize, params: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), formulas * params);
        TypeTrace {
            formulas,
            params,
            bits,
            realizers: Vec::new(),
        }
    }

    pub fn formula_count(&self) -> usize {
        self.formulas
    }

    pub fn param_count(&self) -> usize {
        self.params
    }

    /// Whether `φ_i(x; b_j)` belongs to the type.
    pub fn is_positive(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.params + j]
    }

    pub fn positive_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.formulas)
            .flat_map(|i| (0..self.params).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_positive(i, j))
            .collect()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn realizers(&self) -> &[Element] {
        &self.realizers
    }

    /// Same classification, ignoring realizers.
    pub fn same_type(&self, other: &TypeTrace) -> bool {
        self.formulas == other.formulas && self.params == other.params && self.bits == other.bits
    }
}

#[derive(Serialize, Deserialize)]
struct TraceRepr {
    positive: Vec<(usize, usize)>,
    realizers: Vec<Element>,
    formulas: usize,
    params: usize,
}

impl Serialize for TypeTrace {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        TraceRepr {
            positive: self.positive_pairs(),
            realizers: self.realizers.clone(),
            formulas: self.formulas,
            params: self.params,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for TypeTrace {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = TraceRepr::deserialize(de)?;
        let mut bits = vec![false; r.formulas * r.params];
        for (i, j) in r.positive {
            if i >= r.formulas || j >= r.params {
                return Err(serde::de::Error::custom("positive pair out of range"));
            }
            bits[i * r.params + j] = true;
        }
        Ok(TypeTrace {
            formulas: r.formulas,
            params: r.params,
            bits,
            realizers: r.realizers,
        })
    }
}

/// Compiled Δ over a fixed B, reusable across many realizers.
pub struct TraceEvaluator<'s> {
    compiled: Vec<CompiledFormula<'s>>,
    params: &'s ParamSet,
    object_arity: usize,
}

impl<'s> TraceEvaluator<'s> {
    pub fn new(
        s: &'s FiniteStructure,
        delta: &FormulaSet,
        params: &'s ParamSet,
        limits: &Limits,
    ) -> Result<Self> {
        if params.arity() != delta.param_vars.len() {
            return Err(Error::InvalidArgument(format!(
                "parameter tuples of length {} for {} parameter variables",
                params.arity(),
                delta.param_vars.len()
            )));
        }
        params.check_range(s)?;
        let free: Vec<&str> = delta
            .object_vars
            .iter()
            .chain(&delta.param_vars)
            .map(String::as_str)
            .collect();
        let compiled = delta
            .formulas
            .iter()
            .map(|f| CompiledFormula::new(s, f, &free, limits))
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceEvaluator {
            compiled,
            params,
            object_arity: delta.object_vars.len(),
        })
    }

    pub fn trace(&mut self, a: &[Element]) -> Result<TypeTrace> {
        if a.len() != self.object_arity {
            return Err(Error::InvalidArgument(format!(
                "object tuple of length {} for {} object variables",
                a.len(),
                self.object_arity
            )));
        }
        let params = self.params.len();
        let mut bits = Vec::with_capacity(self.compiled.len() * params);
        let mut values = a.to_vec();
        for c in &mut self.compiled {
            for b in self.params.tuples() {
                values.truncate(a.len());
                values.extend_from_slice(b);
                bits.push(c.eval(&values)?);
            }
        }
        Ok(TypeTrace {
            formulas: self.compiled.len(),
            params,
            bits,
            realizers: Vec::new(),
        })
    }
}

/// `tp_Δ(a / B)`
pub fn realize_type(
    s: &FiniteStructure,
    delta: &FormulaSet,
    a: &[Element],
    params: &ParamSet,
    limits: &Limits,
) -> Result<TypeTrace> {
    let mut t = TraceEvaluator::new(s, delta, params, limits)?.trace(a)?;
    t.realizers = vec![];
    Ok(t)
}

/// Distinct traces of single elements drawn from `over` (default: the whole
/// universe), each with its realizers, in lexicographic trace order.
pub fn enumerate_types(
    s: &FiniteStructure,
    delta: &FormulaSet,
    params: &ParamSet,
    over: Option<&[Element]>,
    limits: &Limits,
) -> Result<Vec<TypeTrace>> {
    if delta.object_vars.len() != 1 {
        return Err(Error::InvalidArgument(
            "type enumeration supports exactly one object variable".into(),
        ));
    }
    let all: Vec<Element>;
    let over = match over {
        Some(o) => o,
        None => {
            all = (0..s.universe_size()).collect();
            &all
        }
    };
    let mut eval = TraceEvaluator::new(s, delta, params, limits)?;
    let mut groups: BTreeMap<Vec<bool>, Vec<Element>> = BTreeMap::new();
    let mut seen = HashMap::new();
    for &a in over {
        s.check_element(a)?;
        if seen.insert(a, ()).is_some() {
            continue;
        }
        let t = eval.trace(&[a])?;
        groups.entry(t.bits).or_default().push(a);
    }
    Ok(groups
        .into_iter()
        .map(|(bits, mut realizers)| {
            realizers.sort_unstable();
            TypeTrace {
                formulas: delta.len(),
                params: params.len(),
                bits,
                realizers,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_grid_order, make_hypercube_poset, GridOrderSpec, HypercubePosetSpec};
    use crate::logic::{Formula, Term};
    use crate::model::ORDER;

    fn phi_y_below_x() -> FormulaSet {
        FormulaSet::new(&["x"], &["y"], vec![Formula::less(Term::var("y"), Term::var("x"))])
    }

    fn chain(n: usize) -> FiniteStructure {
        let pairs: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
            .collect();
        FiniteStructure::new(n).with_relation(ORDER, 2, pairs).unwrap()
    }

    #[test]
    fn empty_parameter_set() {
        let s = chain(3);
        let b = ParamSet::elements(&[]).unwrap();
        let t = realize_type(&s, &phi_y_below_x(), &[1], &b, &Limits::default()).unwrap();
        assert!(t.positive_pairs().is_empty());
        let all = enumerate_types(&s, &phi_y_below_x(), &b, None, &Limits::default()).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].realizers(), &[0, 1, 2]);
    }

    #[test]
    fn chain_cut() {
        let s = chain(3);
        let b = ParamSet::elements(&[1]).unwrap();
        let all = enumerate_types(&s, &phi_y_below_x(), &b, None, &Limits::default()).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all[0].positive_pairs().is_empty());
        assert_eq!(all[1].realizers(), &[2]);
    }

    #[test]
    fn grid_type_of_five_zero() {
        let g = make_grid_order(GridOrderSpec { n: 2, k: 3 }).unwrap();
        let b = ParamSet::elements(&g.params).unwrap();
        let a = g.spec.index(5, 0);
        let t = realize_type(&g.structure, &phi_y_below_x(), &[a], &b, &Limits::default()).unwrap();
        let positive: Vec<Element> = t.positive_pairs().iter().map(|&(_, j)| b.get(j)[0]).collect();
        let mut expected = vec![g.spec.index(0, 1), g.spec.index(0, 2), g.spec.index(4, 0)];
        expected.sort_unstable();
        assert_eq!(positive, expected);

        let types = enumerate_types(
            &g.structure,
            &phi_y_below_x(),
            &b,
            Some(&g.realizers),
            &Limits::default(),
        )
        .unwrap();
        assert_eq!(types.len(), 3);
    }

    #[test]
    fn hypercube_sign_vectors() {
        let h = make_hypercube_poset(HypercubePosetSpec { d: 1 }).unwrap();
        let b = ParamSet::elements(&h.hyperplanes).unwrap();
        let t = realize_type(&h.structure, &FormulaSet::order(), &[0], &b, &Limits::default()).unwrap();
        let positive: Vec<Element> = t.positive_pairs().iter().map(|&(_, j)| b.get(j)[0]).collect();
        assert_eq!(positive, vec![h.spec.hyperplane(0, 1), h.spec.hyperplane(1, 1)]);
        for d in 1..=3 {
            let h = make_hypercube_poset(HypercubePosetSpec { d }).unwrap();
            let b = ParamSet::elements(&h.hyperplanes).unwrap();
            let types =
                enumerate_types(&h.structure, &FormulaSet::order(), &b, Some(&h.points), &Limits::default())
                    .unwrap();
            assert_eq!(types.len(), 1 << (d + 1));
        }
    }

    #[test]
    fn arity_checks() {
        let s = chain(3);
        let b = ParamSet::elements(&[1]).unwrap();
        assert!(realize_type(&s, &phi_y_below_x(), &[0, 1], &b, &Limits::default()).is_err());
        let pairs = ParamSet::new(2, vec![vec![0, 1]]).unwrap();
        assert!(realize_type(&s, &phi_y_below_x(), &[0], &pairs, &Limits::default()).is_err());
        assert!(ParamSet::new(1, vec![vec![0], vec![0]]).is_err());
    }

    #[test]
    fn trace_serialization_round_trips() {
        let s = chain(4);
        let b = ParamSet::elements(&[0, 2]).unwrap();
        let types = enumerate_types(&s, &phi_y_below_x(), &b, None, &Limits::default()).unwrap();
        for t in types {
            let json = serde_json::to_string(&t).unwrap();
            let back: TypeTrace = serde_json::from_str(&json).unwrap();
            assert_eq!(back, t);
        }
    }
}
