//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's evaluator, automorphism search, width or scheme solver.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use vcdlab::logic::{Formula, Term};
use vcdlab::{Element, FiniteStructure, ORDER};

/// Strict order as a dense matrix read straight from the relation tuples.
pub fn order_matrix(s: &FiniteStructure) -> Vec<Vec<bool>> {
    let n = s.universe_size();
    let mut m = vec![vec![false; n]; n];
    if let Some(r) = s.relation(ORDER) {
        for t in r.tuples() {
            m[t[0]][t[1]] = true;
        }
    }
    m
}

/// Width via Dilworth/König: `n` minus a maximum matching in the
/// comparability bipartite graph (Kuhn's algorithm).
pub fn dilworth_width(s: &FiniteStructure) -> usize {
    let lt = order_matrix(s);
    let n = lt.len();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    fn augment(a: usize, lt: &[Vec<bool>], seen: &mut [bool], mate: &mut [Option<usize>]) -> bool {
        for b in 0..lt.len() {
            if lt[a][b] && !seen[b] {
                seen[b] = true;
                if mate[b].is_none_or(|a2| augment(a2, lt, seen, mate)) {
                    mate[b] = Some(a);
                    return true;
                }
            }
        }
        false
    }
    let mut matching = 0;
    for a in 0..n {
        let mut seen = vec![false; n];
        if augment(a, &lt, &mut seen, &mut mate) {
            matching += 1;
        }
    }
    n - matching
}

/// Largest antichain by exhaustive subset search (`n ≤ 20`).
pub fn brute_width(s: &FiniteStructure) -> usize {
    let lt = order_matrix(s);
    let n = lt.len();
    assert!(n <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if members.len() > best
            && members
                .iter()
                .all(|&a| members.iter().all(|&b| !lt[a][b]))
        {
            best = members.len();
        }
    }
    best
}

/// Lexicographic successor; false after the last permutation.
pub fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every automorphism of `s` (as an image array) fixing `fixed` pointwise.
pub fn brute_automorphisms(s: &FiniteStructure, fixed: &[Element]) -> Vec<Vec<usize>> {
    let n = s.universe_size();
    assert!(n <= 9, "brute force on {n} elements");
    let rels: Vec<BTreeSet<Vec<usize>>> = s
        .relations()
        .map(|(_, r)| r.tuples().map(<[usize]>::to_vec).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    loop {
        if fixed.iter().all(|&e| perm[e] == e)
            && rels.iter().all(|r| {
                r.iter()
                    .all(|t| r.contains(&t.iter().map(|&e| perm[e]).collect::<Vec<_>>()))
            })
        {
            out.push(perm.clone());
        }
        if !next_permutation(&mut perm) {
            return out;
        }
    }
}

/// Orbits of the given permutations on points, sorted.
pub fn orbits_of(n: usize, group: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for a in 0..n {
        if seen[a] {
            continue;
        }
        let orbit: BTreeSet<usize> = group.iter().map(|g| g[a]).chain([a]).collect();
        for &b in &orbit {
            seen[b] = true;
        }
        out.push(orbit.into_iter().collect());
    }
    out
}

/// Textbook Tarski semantics over the raw relation tuples.
pub fn naive_eval(s: &FiniteStructure, f: &Formula, env: &mut BTreeMap<String, Element>) -> bool {
    let term = |t: &Term, env: &BTreeMap<String, Element>| match t {
        Term::Const(e) => *e,
        Term::Var(v) => *env.get(v).unwrap_or_else(|| panic!("unbound {v}")),
    };
    let n = s.universe_size();
    let with = |var: &str, e: Element, body: &Formula, env: &mut BTreeMap<String, Element>| {
        let old = env.insert(var.to_string(), e);
        let v = naive_eval(s, body, env);
        match old {
            Some(o) => env.insert(var.to_string(), o),
            None => env.remove(var),
        };
        v
    };
    match f {
        Formula::Atom { rel, args } => {
            let t: Vec<Element> = args.iter().map(|a| term(a, env)).collect();
            s.relation(rel).is_some_and(|r| r.tuples().any(|u| u == t.as_slice()))
        }
        Formula::Eq(a, b) => term(a, env) == term(b, env),
        Formula::Not(g) => !naive_eval(s, g, env),
        Formula::And(a, b) => naive_eval(s, a, env) && naive_eval(s, b, env),
        Formula::Or(a, b) => naive_eval(s, a, env) || naive_eval(s, b, env),
        Formula::Implies(a, b) => !naive_eval(s, a, env) || naive_eval(s, b, env),
        Formula::Iff(a, b) => naive_eval(s, a, env) == naive_eval(s, b, env),
        Formula::Exists { var, body } => (0..n).any(|e| with(var, e, body, env)),
        Formula::Forall { var, body } => (0..n).all(|e| with(var, e, body, env)),
        Formula::CountExists { k, var, body } => {
            (0..n).filter(|&e| with(var, e, body, env)).count() >= *k
        }
    }
}

pub fn naive_eval_at(s: &FiniteStructure, f: &Formula, bindings: &[(&str, Element)]) -> bool {
    let mut env: BTreeMap<String, Element> =
        bindings.iter().map(|&(v, e)| (v.to_string(), e)).collect();
    naive_eval(s, f, &mut env)
}

/// Minimal max load over every assignment of types to admissible tuples,
/// by exhaustive enumeration; `None` when some type has no tuple.
pub fn brute_min_load(defs: &[Vec<Vec<usize>>]) -> Option<usize> {
    if defs.iter().any(Vec::is_empty) {
        return None;
    }
    if defs.is_empty() {
        return Some(0);
    }
    let mut best = usize::MAX;
    let mut choice = vec![0usize; defs.len()];
    loop {
        let mut load: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
        for (i, &c) in choice.iter().enumerate() {
            *load.entry(&defs[i][c]).or_default() += 1;
        }
        best = best.min(*load.values().max().unwrap());
        let mut i = 0;
        loop {
            if i == defs.len() {
                return Some(best);
            }
            choice[i] += 1;
            if choice[i] < defs[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// A chain `0 < 1 < … < n-1`.
pub fn chain(n: usize) -> FiniteStructure {
    let pairs: Vec<Vec<usize>> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
        .collect();
    FiniteStructure::new(n).with_relation(ORDER, 2, pairs).unwrap()
}
