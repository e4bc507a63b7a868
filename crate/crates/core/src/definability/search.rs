//! Search for explicit defining formulas in a small grammar.
//!
//! Terms are the parameter variables `y` and the constants `b̄`. Budget 1
//! offers the atoms over those terms; budget 2 adds counting features
//! `∃^{≥k} z (λ₁ ∧ λ₂)` where the `λ` are literals over the terms and `z`,
//! with `k` ranging over the counts observed on `B`. A defining formula is a
//! disjunction of conjunctions of features. Every feature is first order
//! with constants among `b̄`, so a find implies definability over `b̄`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{fresh_var, CompiledFormula, Formula, FormulaSet, Term};
use crate::model::{Element, FiniteStructure};
use crate::typespace::{ParamSet, TypeTrace};

const ATOM_CAP: usize = 256;
const BODY_CAP: usize = 4096;

fn tuples_over(terms: &[Term], arity: usize) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                terms.iter().map(move |u| {
                    let mut v = t.clone();
                    v.push(u.clone());
                    v
                })
            })
            .collect();
    }
    out
}

fn mentions(args: &[Term], names: &[String]) -> bool {
    args.iter()
        .any(|t| matches!(t, Term::Var(v) if names.contains(v)))
}

/// Atoms over `terms` that mention at least one of `required`.
fn atoms(s: &FiniteStructure, terms: &[Term], required: &[String]) -> Vec<Formula> {
    let mut out = Vec::new();
    for (name, arity) in s.signature() {
        for args in tuples_over(terms, arity) {
            if mentions(&args, required) {
                out.push(Formula::atom(&name, args));
            }
        }
    }
    for (i, a) in terms.iter().enumerate() {
        for b in &terms[i + 1..] {
            let pair = [a.clone(), b.clone()];
            if mentions(&pair, required) {
                out.push(Formula::eq(a.clone(), b.clone()));
            }
        }
    }
    out.truncate(ATOM_CAP);
    out
}

/// Looks for formulas `φ_#(y)` with constants among the parameters at
/// positions `bbar` of `B`, one per member of `Δ`, agreeing with `p` on all
/// of `B`. `None` proves nothing.
pub fn bounded_formula_search(
    s: &FiniteStructure,
    p: &TypeTrace,
    bbar: &[usize],
    delta: &FormulaSet,
    params: &ParamSet,
    budget: usize,
    limits: &Limits,
) -> Result<Option<Vec<Formula>>> {
    if budget == 0 {
        return Err(Error::InvalidArgument("depth budget must be >= 1".into()));
    }
    if delta.param_vars.is_empty() {
        return Err(Error::InvalidArgument("Δ has no parameter variables".into()));
    }
    if p.formula_count() != delta.len() || p.param_count() != params.len() {
        return Err(Error::InvalidArgument("trace does not match Δ and B".into()));
    }
    let ys = &delta.param_vars;
    let consts: BTreeSet<Element> = bbar
        .iter()
        .flat_map(|&j| params.get(j).iter().copied())
        .collect();
    let mut terms: Vec<Term> = ys.iter().map(|v| Term::var(v)).collect();
    terms.extend(consts.iter().map(|&c| Term::Const(c)));
    let free: Vec<&str> = ys.iter().map(String::as_str).collect();

    let mut features: Vec<Formula> = atoms(s, &terms, ys);
    if budget >= 2 {
        let avoid: BTreeSet<String> = ys.iter().chain(&delta.object_vars).cloned().collect();
        let z = fresh_var("z", &avoid);
        let mut with_z = terms.clone();
        with_z.push(Term::var(&z));
        let zs = vec![z.clone()];
        let literals: Vec<Formula> = atoms(s, &with_z, &zs)
            .into_iter()
            .flat_map(|a| [a.clone(), a.not()])
            .collect();
        let mut bodies: Vec<Formula> = Vec::new();
        for (i, a) in literals.iter().enumerate() {
            bodies.push(a.clone());
            for b in &literals[i + 1..] {
                bodies.push(a.clone().and(b.clone()));
            }
        }
        bodies.truncate(BODY_CAP);
        let mut body_free: Vec<&str> = vec![z.as_str()];
        body_free.extend(free.iter().copied());
        for body in bodies {
            if !body.free_vars().iter().any(|v| ys.contains(v)) {
                continue;
            }
            let mut c = CompiledFormula::new(s, &body, &body_free, limits)?;
            let mut counts = BTreeSet::new();
            for b in params.tuples() {
                let mut values = vec![0];
                values.extend_from_slice(b);
                let mut k = 0;
                for e in 0..s.universe_size() {
                    values[0] = e;
                    if c.eval(&values)? {
                        k += 1;
                    }
                }
                counts.insert(k);
            }
            if counts.len() > 1 {
                for &k in counts.iter().filter(|&&k| k > 0) {
                    features.push(Formula::count_exists(k, &z, body.clone()));
                }
            }
        }
    }

    let mut table: Vec<Vec<bool>> = Vec::with_capacity(features.len());
    for f in &features {
        let mut c = CompiledFormula::new(s, f, &free, limits)?;
        table.push(
            params
                .tuples()
                .iter()
                .map(|b| c.eval(b))
                .collect::<Result<_>>()?,
        );
    }
    let y0 = Term::var(&ys[0]);
    let mut out = Vec::with_capacity(delta.len());
    for i in 0..delta.len() {
        let labels: Vec<bool> = (0..params.len()).map(|j| p.is_positive(i, j)).collect();
        match separate(&table, &labels) {
            None => return Ok(None),
            Some(chosen) => {
                let f = dnf(&features, &table, &labels, &chosen, &y0)
                    .unwrap_or_else(|| Formula::eq(y0.clone(), y0.clone()).not());
                let mut c = CompiledFormula::new(s, &f, &free, limits)?;
                for (j, b) in params.tuples().iter().enumerate() {
                    if c.eval(b)? != labels[j] {
                        return Err(Error::Precondition(format!(
                            "search produced {f}, which misclassifies {b:?}"
                        )));
                    }
                }
                out.push(f);
            }
        }
    }
    Ok(Some(out))
}

/// Greedy choice of features separating every positive from every negative
/// member of `B`; `None` when two members with opposite labels agree on all
/// features.
fn separate(table: &[Vec<bool>], labels: &[bool]) -> Option<Vec<usize>> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&j| labels[j]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&j| !labels[j]).collect();
    let mut open: Vec<(usize, usize)> = pos
        .iter()
        .flat_map(|&a| neg.iter().map(move |&b| (a, b)))
        .collect();
    let mut chosen = Vec::new();
    while !open.is_empty() {
        let (best, hits) = (0..table.len())
            .map(|f| (f, open.iter().filter(|&&(a, b)| table[f][a] != table[f][b]).count()))
            .max_by_key(|&(f, h)| (h, std::cmp::Reverse(f)))?;
        if hits == 0 {
            return None;
        }
        chosen.push(best);
        open.retain(|&(a, b)| table[best][a] == table[best][b]);
    }
    chosen.sort_unstable();
    Some(chosen)
}

fn dnf(
    features: &[Formula],
    table: &[Vec<bool>],
    labels: &[bool],
    chosen: &[usize],
    y0: &Term,
) -> Option<Formula> {
    let mut rows: BTreeMap<Vec<bool>, ()> = BTreeMap::new();
    for (j, _) in labels.iter().enumerate().filter(|(_, &l)| l) {
        rows.insert(chosen.iter().map(|&f| table[f][j]).collect(), ());
    }
    let clauses = rows.into_keys().map(|row| {
        Formula::conjunction(chosen.iter().zip(row).map(|(&f, v)| {
            if v {
                features[f].clone()
            } else {
                features[f].clone().not()
            }
        }))
    });
    let clauses: Vec<Formula> = clauses
        .map(|c| c.unwrap_or_else(|| Formula::eq(y0.clone(), y0.clone())))
        .collect();
    Formula::disjunction(clauses)
}
