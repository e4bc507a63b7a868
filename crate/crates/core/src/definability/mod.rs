//! Parameter definability of types over finite sets.
//!
//! In a finite structure a set is definable over `b̄` iff it is invariant
//! under `Aut(M / b̄)`. A defining formula for a type only has to agree with
//! the type on `B`, so `p` is definable over `b̄` iff `p` classifies any two
//! members of `B` in the same `Aut(M / b̄)`-orbit alike. That check is what
//! [`is_definable_over`] decides; failures carry a replayable automorphism.

mod breadth;
mod schemes;
mod search;

pub use breadth::{breadth, breadth_define, BreadthDefinition, BreadthReport, BreadthWitness};
pub use schemes::{min_scheme_count, SchemeBound, SchemeEntry};
pub use search::bounded_formula_search;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::FormulaSet;
use crate::model::{Element, FiniteStructure};
use crate::symmetry::{
    automorphism_generators, connecting_element, is_automorphism, tuple_orbit_classes, Permutation,
};
use crate::typespace::{ParamSet, TypeTrace};

/// `Aut(M / fixed)` together with its orbit classes on `B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stabilizer {
    pub fixed: Vec<Element>,
    pub generators: Vec<Permutation>,
    /// Orbit class of every member of `B`, by position in `B`.
    pub classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `p` is constant on every orbit class of `B`.
    Invariant {
        generators: Vec<Permutation>,
        classes: Vec<Vec<Vec<Element>>>,
    },
    /// `σ` fixes the parameters, maps `b` to `b′`, and `p` separates them.
    Violation {
        sigma: Permutation,
        formula: usize,
        b: Vec<Element>,
        b_prime: Vec<Element>,
        b_positive: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinabilityVerdict {
    /// The parameter tuple `b̄`, as members of `B`.
    pub params: Vec<Vec<Element>>,
    pub definable: bool,
    pub certificate: Certificate,
}

impl DefinabilityVerdict {
    /// Checks the certificate against the structure and the type without
    /// trusting the search that produced it. For positive verdicts this
    /// confirms the generators and the class invariance; completeness of the
    /// generating set is not replayable.
    pub fn replay(&self, s: &FiniteStructure, p: &TypeTrace, params: &ParamSet) -> Result<()> {
        let fixed: Vec<Element> = self.params.iter().flatten().copied().collect();
        let fail = |m: String| Err(Error::Replay(m));
        match &self.certificate {
            Certificate::Violation {
                sigma,
                formula,
                b,
                b_prime,
                b_positive,
            } => {
                if self.definable {
                    return fail("violation attached to a positive verdict".into());
                }
                if !is_automorphism(s, sigma)? {
                    return fail("sigma is not an automorphism".into());
                }
                if !sigma.fixes_all(&fixed) {
                    return fail("sigma moves a parameter".into());
                }
                if sigma.apply_tuple(b) != *b_prime {
                    return fail(format!("sigma does not map {b:?} to {b_prime:?}"));
                }
                let (Some(j), Some(k)) = (params.index_of(b), params.index_of(b_prime)) else {
                    return fail("conflicting pair not drawn from B".into());
                };
                if *formula >= p.formula_count() {
                    return fail(format!("formula index {formula} out of range"));
                }
                if p.is_positive(*formula, j) != *b_positive
                    || p.is_positive(*formula, k) == *b_positive
                {
                    return fail("the type does not separate the conflicting pair".into());
                }
                Ok(())
            }
            Certificate::Invariant {
                generators,
                classes,
            } => {
                if !self.definable {
                    return fail("invariance attached to a negative verdict".into());
                }
                for g in generators {
                    if !is_automorphism(s, g)? || !g.fixes_all(&fixed) {
                        return fail("generator is not an automorphism fixing the parameters".into());
                    }
                }
                let mut covered = 0;
                for class in classes {
                    let idx: Vec<usize> = class
                        .iter()
                        .map(|t| params.index_of(t).ok_or_else(|| Error::Replay(format!("{t:?} not in B"))))
                        .collect::<Result<_>>()?;
                    covered += idx.len();
                    for i in 0..p.formula_count() {
                        if idx.iter().any(|&j| p.is_positive(i, j) != p.is_positive(i, idx[0])) {
                            return fail(format!("type not constant on class {class:?}"));
                        }
                    }
                }
                if covered != params.len() {
                    return fail("classes do not cover B".into());
                }
                Ok(())
            }
        }
    }
}

/// Shared state for definability questions about one `(M, Δ, B)`:
/// stabilizers are cached by the set of fixed elements.
pub struct DefinabilityContext<'a> {
    s: &'a FiniteStructure,
    params: &'a ParamSet,
    formulas: usize,
    limits: Limits,
    cache: Mutex<HashMap<Vec<Element>, Arc<Stabilizer>>>,
}

impl<'a> DefinabilityContext<'a> {
    pub fn new(
        s: &'a FiniteStructure,
        delta: &FormulaSet,
        params: &'a ParamSet,
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
        Ok(DefinabilityContext {
            s,
            params,
            formulas: delta.len(),
            limits: *limits,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &ParamSet {
        self.params
    }

    fn fixed_key(&self, bbar: &[usize]) -> Vec<Element> {
        let set: BTreeSet<Element> = bbar
            .iter()
            .flat_map(|&j| self.params.get(j).iter().copied())
            .collect();
        set.into_iter().collect()
    }

    fn compute(&self, fixed: &[Element]) -> Result<Stabilizer> {
        let generators = automorphism_generators(self.s, fixed, &self.limits)?;
        let classes = tuple_orbit_classes(&generators, self.params.tuples());
        Ok(Stabilizer {
            fixed: fixed.to_vec(),
            generators,
            classes,
        })
    }

    /// `Aut(M / b̄)` for a tuple of positions in `B`.
    pub fn stabilizer(&self, bbar: &[usize]) -> Result<Arc<Stabilizer>> {
        self.check_positions(bbar)?;
        let key = self.fixed_key(bbar);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let st = Arc::new(self.compute(&key)?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, st.clone());
        Ok(st)
    }

    fn check_positions(&self, bbar: &[usize]) -> Result<()> {
        match bbar.iter().find(|&&j| j >= self.params.len()) {
            Some(j) => Err(Error::InvalidArgument(format!(
                "parameter position {j} outside B of size {}",
                self.params.len()
            ))),
            None => Ok(()),
        }
    }

    fn check_trace(&self, p: &TypeTrace) -> Result<()> {
        if p.formula_count() != self.formulas || p.param_count() != self.params.len() {
            return Err(Error::InvalidArgument(format!(
                "trace over {}x{} pairs does not match Δ of size {} and B of size {}",
                p.formula_count(),
                p.param_count(),
                self.formulas,
                self.params.len()
            )));
        }
        Ok(())
    }

    /// First pair `(i, j, k)` with `j, k` in one class and `p` separating
    /// `(i, j)` from `(i, k)`.
    fn conflict(p: &TypeTrace, classes: &[usize]) -> Option<(usize, usize, usize)> {
        let mut first_of: HashMap<usize, usize> = HashMap::new();
        for (j, &c) in classes.iter().enumerate() {
            let rep = *first_of.entry(c).or_insert(j);
            if let Some(i) = (0..p.formula_count()).find(|&i| p.is_positive(i, rep) != p.is_positive(i, j)) {
                return Some((i, rep, j));
            }
        }
        None
    }

    fn admissible(p: &TypeTrace, st: &Stabilizer) -> bool {
        Self::conflict(p, &st.classes).is_none()
    }

    pub fn verdict(&self, p: &TypeTrace, bbar: &[usize]) -> Result<DefinabilityVerdict> {
        self.check_trace(p)?;
        let st = self.stabilizer(bbar)?;
        let params = bbar.iter().map(|&j| self.params.get(j).to_vec()).collect();
        let certificate = match Self::conflict(p, &st.classes) {
            Some((i, j, k)) => {
                let (b, b_prime) = (self.params.get(j), self.params.get(k));
                let sigma = connecting_element(self.s.universe_size(), &st.generators, b, b_prime)
                    .expect("members of one orbit class are connected");
                Certificate::Violation {
                    sigma,
                    formula: i,
                    b: b.to_vec(),
                    b_prime: b_prime.to_vec(),
                    b_positive: p.is_positive(i, j),
                }
            }
            None => {
                let mut grouped: Vec<Vec<Vec<Element>>> = Vec::new();
                let mut slot: HashMap<usize, usize> = HashMap::new();
                for (j, &c) in st.classes.iter().enumerate() {
                    let at = *slot.entry(c).or_insert_with(|| {
                        grouped.push(Vec::new());
                        grouped.len() - 1
                    });
                    grouped[at].push(self.params.get(j).to_vec());
                }
                Certificate::Invariant {
                    generators: st.generators.clone(),
                    classes: grouped,
                }
            }
        };
        Ok(DefinabilityVerdict {
            params,
            definable: matches!(certificate, Certificate::Invariant { .. }),
            certificate,
        })
    }

    /// All ordered tuples of positions in `B` of length `d`, in
    /// lexicographic order. Repetitions are allowed. An empty `B` offers
    /// only the empty tuple, whatever `d` is.
    pub fn tuples(&self, d: usize) -> Result<Vec<Vec<usize>>> {
        let m = self.params.len();
        if m == 0 {
            return Ok(vec![Vec::new()]);
        }
        let count = (m as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if count > self.limits.tuple_cap as u128 {
            return Err(Error::ResourceCap(format!(
                "|B|^d = {m}^{d} exceeds the tuple cap {}",
                self.limits.tuple_cap
            )));
        }
        let mut out = vec![Vec::new()];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..m).map(move |j| {
                        let mut u = t.clone();
                        u.push(j);
                        u
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// Computes (in parallel) the stabilizers of every tuple in `tuples`.
    fn warm(&self, tuples: &[Vec<usize>]) -> Result<()> {
        let keys: BTreeSet<Vec<Element>> = tuples.iter().map(|t| self.fixed_key(t)).collect();
        let missing: Vec<Vec<Element>> = {
            let cache = self.cache.lock().expect("cache lock");
            keys.into_iter().filter(|k| !cache.contains_key(k)).collect()
        };
        let computed: Vec<Stabilizer> = missing
            .par_iter()
            .map(|k| self.compute(k))
            .collect::<Result<_>>()?;
        let mut cache = self.cache.lock().expect("cache lock");
        for st in computed {
            cache.insert(st.fixed.clone(), Arc::new(st));
        }
        Ok(())
    }

    /// `Def(p)` at tuple length `d`, as tuples of positions in `B`.
    pub fn def_tuples(&self, p: &TypeTrace, d: usize) -> Result<Vec<Vec<usize>>> {
        Ok(self.def_sets(std::slice::from_ref(p), d)?.remove(0))
    }

    /// `Def(p)` for every type, sharing stabilizer computations.
    pub fn def_sets(&self, types: &[TypeTrace], d: usize) -> Result<Vec<Vec<Vec<usize>>>> {
        for p in types {
            self.check_trace(p)?;
        }
        let tuples = self.tuples(d)?;
        self.warm(&tuples)?;
        let stabs: Vec<Arc<Stabilizer>> = tuples
            .iter()
            .map(|t| self.stabilizer(t))
            .collect::<Result<_>>()?;
        Ok(types
            .iter()
            .map(|p| {
                tuples
                    .iter()
                    .zip(&stabs)
                    .filter(|(_, st)| Self::admissible(p, st))
                    .map(|(t, _)| t.clone())
                    .collect()
            })
            .collect())
    }

    /// Whether some tuple of length `d` admits `p`, stopping at the first.
    pub fn has_definition(&self, p: &TypeTrace, d: usize) -> Result<Option<Vec<usize>>> {
        self.check_trace(p)?;
        for t in self.tuples(d)? {
            if Self::admissible(p, &*self.stabilizer(&t)?) {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }
}

/// Orbit-criterion verdict for `p` over the parameters at positions `bbar`
/// of `B`.
pub fn is_definable_over(
    s: &FiniteStructure,
    p: &TypeTrace,
    bbar: &[usize],
    delta: &FormulaSet,
    params: &ParamSet,
    limits: &Limits,
) -> Result<DefinabilityVerdict> {
    DefinabilityContext::new(s, delta, params, limits)?.verdict(p, bbar)
}

/// `Def(p) ⊆ B^d`, as tuples of positions in `B`.
pub fn def_tuples(
    s: &FiniteStructure,
    p: &TypeTrace,
    d: usize,
    delta: &FormulaSet,
    params: &ParamSet,
    limits: &Limits,
) -> Result<Vec<Vec<usize>>> {
    DefinabilityContext::new(s, delta, params, limits)?.def_tuples(p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_grid_order, make_hypercube_poset, GridOrderSpec, HypercubePosetSpec};
    use crate::logic::{Formula, Term};
    use crate::typespace::{enumerate_types, realize_type};

    fn below() -> FormulaSet {
        FormulaSet::new(&["x"], &["y"], vec![Formula::less(Term::var("y"), Term::var("x"))])
    }

    #[test]
    fn all_of_b_always_defines() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let b = ParamSet::elements(&g.params).unwrap();
        let p = realize_type(&g.structure, &below(), &[g.spec.index(3, 0)], &b, &Limits::default())
            .unwrap();
        let all: Vec<usize> = (0..b.len()).collect();
        let v = is_definable_over(&g.structure, &p, &all, &below(), &b, &Limits::default()).unwrap();
        assert!(v.definable);
        v.replay(&g.structure, &p, &b).unwrap();
    }

    #[test]
    fn grid_copy_parameter_fails() {
        let g = make_grid_order(GridOrderSpec { n: 2, k: 3 }).unwrap();
        let b = ParamSet::elements(&g.params).unwrap();
        let lim = Limits::default();
        let a = g.realizers[0];
        let p = realize_type(&g.structure, &below(), &[a], &b, &lim).unwrap();
        for i in 1..=2 {
            let j = b.index_of(&[g.spec.index(0, i)]).unwrap();
            let v = is_definable_over(&g.structure, &p, &[j], &below(), &b, &lim).unwrap();
            assert!(!v.definable);
            v.replay(&g.structure, &p, &b).unwrap();
            let Certificate::Violation { sigma, .. } = &v.certificate else { panic!() };
            assert!(sigma.fixes_all(&[g.spec.index(0, i)]));
        }
        let def = def_tuples(&g.structure, &p, 1, &below(), &b, &lim).unwrap();
        let mid = b.index_of(&[g.spec.midpoint()]).unwrap();
        assert_eq!(def, vec![vec![mid]]);
    }

    #[test]
    fn hypercube_needs_more_than_d() {
        for d in 1..=2 {
            let h = make_hypercube_poset(HypercubePosetSpec { d }).unwrap();
            let b = ParamSet::elements(&h.hyperplanes).unwrap();
            let lim = Limits::default();
            let delta = FormulaSet::order();
            let p = realize_type(&h.structure, &delta, &[h.constant_point()], &b, &lim).unwrap();
            let ctx = DefinabilityContext::new(&h.structure, &delta, &b, &lim).unwrap();
            assert!(ctx.def_tuples(&p, d).unwrap().is_empty());
            assert!(ctx.has_definition(&p, d + 1).unwrap().is_some());
            let v = ctx.verdict(&p, &vec![0; d]).unwrap();
            v.replay(&h.structure, &p, &b).unwrap();
        }
    }

    #[test]
    fn empty_b_has_the_empty_tuple() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 2 }).unwrap();
        let b = ParamSet::elements(&[]).unwrap();
        let lim = Limits::default();
        let types = enumerate_types(&g.structure, &below(), &b, None, &lim).unwrap();
        assert_eq!(types.len(), 1);
        for d in 0..3 {
            let def = def_tuples(&g.structure, &types[0], d, &below(), &b, &lim).unwrap();
            assert_eq!(def, vec![Vec::<usize>::new()]);
        }
    }

    #[test]
    fn tuple_cap_is_enforced() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let b = ParamSet::elements(&g.params).unwrap();
        let lim = Limits {
            tuple_cap: 100,
            ..Limits::default()
        };
        let ctx = DefinabilityContext::new(&g.structure, &below(), &b, &lim).unwrap();
        assert!(matches!(ctx.tuples(2), Err(Error::ResourceCap(_))));
    }
}
