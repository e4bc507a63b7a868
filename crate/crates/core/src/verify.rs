//! The verification suite: every headline claim as an executable check.
//!
//! Claims about the infinite ordered structure are checked as growth
//! properties of its finite discretizations, together with exact replay of
//! every automorphism certificate.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::definability::{
    breadth, breadth_define, bounded_formula_search, min_scheme_count, Certificate,
    DefinabilityContext,
};
use crate::definer::{
    check_lemma33, isolating_formula, lemma31_define, vcd_certificate, vcd_exponent,
    zero_type_partition, VcdOptions,
};
use crate::error::{Error, Result};
use crate::gallery::{
    make_grid_order, make_hypercube_poset, random_width_poset, GridOrderSpec, HypercubePosetSpec,
};
use crate::limits::Limits;
use crate::logic::{eval_with, satisfier_set_with, Formula, FormulaSet, Term};
use crate::model::{Element, FiniteStructure, ORDER};
use crate::symmetry::{automorphism_generators, group_elements, is_automorphism, Permutation};
use crate::typespace::{enumerate_types, realize_type, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Every criterion at full size.
    Paper,
    /// Smaller instances of every criterion.
    Quick,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Suite::Paper),
            "quick" => Ok(Suite::Quick),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite {other:?} (expected paper or quick)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub measured: String,
    pub failures: Vec<String>,
    pub seconds: f64,
    pub time_budget: Option<f64>,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {}: {} ({:.2}s{})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured,
            self.seconds,
            self.time_budget
                .map(|b| format!(" / budget {b:.0}s"))
                .unwrap_or_default()
        )
    }
}

struct Check {
    failures: Vec<String>,
    measured: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            failures: Vec::new(),
            measured: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.measured.push(msg.into());
    }

    fn absorb<T>(&mut self, r: Result<T>, ctx: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("{ctx}: {e}"));
                None
            }
        }
    }
}

fn run(
    id: usize,
    title: &str,
    budget: Option<f64>,
    body: impl FnOnce(&mut Check),
) -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();
    body(&mut check);
    let seconds = start.elapsed().as_secs_f64();
    if let Some(b) = budget {
        check.expect(seconds < b, || format!("took {seconds:.2}s, budget {b}s"));
    }
    CriterionOutcome {
        id,
        title: title.to_string(),
        passed: check.failures.is_empty(),
        measured: check.measured.join("; "),
        failures: check.failures,
        seconds,
        time_budget: budget,
    }
}

/// Runs every criterion in order.
pub fn run_suite(suite: Suite, seed: u64, limits: &Limits) -> Vec<CriterionOutcome> {
    let quick = suite == Suite::Quick;
    vec![
        widths(limits),
        grid_mechanism(quick, limits),
        grid_growth(quick, limits),
        recursive_definer(quick, seed, limits),
        antichain_classes(quick, seed, limits),
        vcd_by_width(quick, seed, limits),
        hypercube_tightness(quick, limits),
        no_uniform_d(quick, limits),
        breadth_bound(quick, seed, limits),
        engine_soundness(quick, seed, limits),
    ]
}

fn grid_ns(quick: bool) -> Vec<usize> {
    if quick {
        vec![2, 3]
    } else {
        vec![2, 3, 4]
    }
}

fn hypercube_ds(quick: bool) -> Vec<usize> {
    if quick {
        vec![1, 2]
    } else {
        vec![1, 2, 3]
    }
}

fn below_formula() -> FormulaSet {
    FormulaSet::new(&["x"], &["y"], vec![Formula::less(Term::var("y"), Term::var("x"))])
}

/// Width of grid orders and hypercube posets.
pub fn widths(limits: &Limits) -> CriterionOutcome {
    run(1, "width of grid orders and hypercube posets", Some(5.0), |c| {
        let mut checked = 0;
        for n in 1..=3 {
            for k in 2..=5 {
                let Some(g) = c.absorb(make_grid_order(GridOrderSpec { n, k }), "grid") else {
                    continue;
                };
                if let Some(w) = c.absorb(g.poset().width(limits), "grid width") {
                    c.expect(w == k, || format!("width(grid({n},{k})) = {w}, expected {k}"));
                    checked += 1;
                }
            }
        }
        for d in 1..=3 {
            let Some(h) = c.absorb(make_hypercube_poset(HypercubePosetSpec { d }), "hypercube") else {
                continue;
            };
            if let Some(w) = c.absorb(h.poset().width(limits), "hypercube width") {
                c.expect(w == 1 << (d + 1), || format!("width(M({d})) = {w}, expected {}", 1 << (d + 1)));
                checked += 1;
            }
        }
        c.note(format!("{checked} instances, grid(n,k) = k, M(d) = 2^(d+1)"));
    })
}

/// Every grid type on `A` is definable over exactly the midpoint, and every
/// copy parameter is refuted by a replayed copy swap.
pub fn grid_mechanism(quick: bool, limits: &Limits) -> CriterionOutcome {
    run(2, "grid types need the distinguished parameter", Some(60.0), |c| {
        let mut replayed = 0;
        for n in grid_ns(quick) {
            let Some(g) = c.absorb(make_grid_order(GridOrderSpec { n, k: 3 }), "grid") else {
                continue;
            };
            let delta = below_formula();
            let Some(b) = c.absorb(ParamSet::elements(&g.params), "B") else { continue };
            let Some(types) = c.absorb(
                enumerate_types(&g.structure, &delta, &b, Some(&g.realizers), limits),
                "types",
            ) else {
                continue;
            };
            let Some(ctx) = c.absorb(DefinabilityContext::new(&g.structure, &delta, &b, limits), "ctx") else {
                continue;
            };
            let mid = b.index_of(&[g.spec.midpoint()]).expect("midpoint is in B");
            let Some(defs) = c.absorb(ctx.def_sets(&types, 1), "def sets") else { continue };
            for (p, def) in types.iter().zip(&defs) {
                c.expect(*def == vec![vec![mid]], || {
                    format!("n={n}: Def of type realized by {:?} is {def:?}", p.realizers())
                });
                for j in 0..b.len() {
                    let (x, copy) = g.spec.coords(b.get(j)[0]);
                    if copy == 0 {
                        continue;
                    }
                    let Some(v) = c.absorb(ctx.verdict(p, &[j]), "verdict") else { continue };
                    c.expect(!v.definable, || format!("n={n}: definable over ({x},{copy})"));
                    if let Some(()) = c.absorb(v.replay(&g.structure, p, &b), "replay") {
                        replayed += 1;
                    }
                    // The explicit argument: swapping copy 0 with the other
                    // non-parameter copy fixes b and separates the two
                    // midpoints.
                    let other = 3 - copy;
                    let sigma = g.copy_swap(0, other);
                    let moved = g.spec.index(2 * n, other);
                    let jm = b.index_of(&[moved]).expect("copy elements are in B");
                    let ok = is_automorphism(&g.structure, &sigma).unwrap_or(false)
                        && sigma.apply(b.get(j)[0]) == b.get(j)[0]
                        && sigma.apply(g.spec.midpoint()) == moved
                        && p.is_positive(0, mid)
                        && !p.is_positive(0, jm);
                    c.expect(ok, || format!("n={n}: copy swap argument fails at ({x},{copy})"));
                }
            }
            c.note(format!("n={n}: {} types, Def = {{({},0)}}", types.len(), 2 * n));
        }
        c.note(format!("{replayed} violation certificates replayed"));
    })
}

/// The scheme-count lower bound on the grid grows as `2n − 1`.
pub fn grid_growth(quick: bool, limits: &Limits) -> CriterionOutcome {
    run(3, "grid scheme-count lower bound is 2n-1", None, |c| {
        let mut bounds = Vec::new();
        for n in grid_ns(quick) {
            let Some(g) = c.absorb(make_grid_order(GridOrderSpec { n, k: 3 }), "grid") else {
                continue;
            };
            let delta = below_formula();
            let Some(b) = c.absorb(ParamSet::elements(&g.params), "B") else { continue };
            let Some(types) = c.absorb(
                enumerate_types(&g.structure, &delta, &b, Some(&g.realizers), limits),
                "types",
            ) else {
                continue;
            };
            let Some(ctx) = c.absorb(DefinabilityContext::new(&g.structure, &delta, &b, limits), "ctx") else {
                continue;
            };
            let Some(defs) = c.absorb(ctx.def_sets(&types, 1), "def sets") else { continue };
            let bound = min_scheme_count(types.into_iter().zip(defs).collect(), 1);
            let lb = bound.lower_bound;
            c.expect(lb == Some(2 * n - 1), || format!("n={n}: bound {lb:?}, expected {}", 2 * n - 1));
            c.expect(lb.is_some_and(|v| v > n), || format!("n={n}: bound {lb:?} not >= n+1"));
            bounds.push(lb.unwrap_or(0));
            c.note(format!("n={n}: {}", lb.map_or("inf".into(), |v| v.to_string())));
        }
        c.expect(bounds.windows(2).all(|w| w[0] < w[1]), || {
            format!("bounds {bounds:?} not strictly increasing")
        });
    })
}

pub(crate) fn random_poset(rng: &mut ChaCha8Rng, widths: std::ops::RangeInclusive<usize>, max_size: usize, limits: &Limits) -> Result<FiniteStructure> {
    let w = rng.random_range(widths);
    let size = rng.random_range(w..=max_size.max(w));
    random_width_poset(w, size, rng.random(), limits)
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<Element> {
    let mut all: Vec<Element> = (0..n).collect();
    all.shuffle(rng);
    let k = rng.random_range(1..=max.min(n).max(1));
    let mut out: Vec<Element> = all.into_iter().take(k.min(n)).collect();
    out.sort_unstable();
    out
}

fn random_delta(rng: &mut ChaCha8Rng) -> FormulaSet {
    let x = || Term::var("x");
    let y = || Term::var("y");
    match rng.random_range(0..4) {
        0 => FormulaSet::order(),
        1 => below_formula(),
        2 => FormulaSet::order_and_equality(),
        _ => FormulaSet::new(
            &["x"],
            &["y"],
            vec![Formula::exists(
                "z",
                Formula::less(Term::var("z"), x()).and(Formula::less(Term::var("z"), y())),
            )],
        ),
    }
}

/// A formula `ψ(x)` with `1 ≤ |ψ(M)| ≤ cap`: either an exact class
/// isolator or a conjunction of literals with constants from `B`.
fn random_psi(
    rng: &mut ChaCha8Rng,
    s: &FiniteStructure,
    b: &[Element],
    cap: usize,
    limits: &Limits,
) -> Result<Option<Formula>> {
    let p = s.poset(ORDER)?;
    if rng.random_bool(0.5) {
        let part = zero_type_partition(&p, limits)?;
        let mut fits: Vec<&Vec<Element>> = part.classes.iter().filter(|c| c.len() <= cap).collect();
        fits.shuffle(rng);
        for class in fits {
            let iso = isolating_formula(&p, class, limits)?;
            if iso.exact {
                return Ok(Some(iso.formula));
            }
        }
    }
    for _ in 0..20 {
        let mut psi: Option<Formula> = None;
        for _ in 0..8 {
            let a = Term::Const(b[rng.random_range(0..b.len())]);
            let lit = match rng.random_range(0..4) {
                0 => Formula::less(Term::var("x"), a),
                1 => Formula::less(a, Term::var("x")),
                2 => Formula::less(Term::var("x"), a).not(),
                _ => Formula::less(a, Term::var("x")).not(),
            };
            let next = match psi.take() {
                None => lit,
                Some(f) => f.and(lit),
            };
            let sat = satisfier_set_with(s, &next, "x", limits)?;
            if sat.is_empty() {
                break;
            }
            if sat.len() <= cap {
                return Ok(Some(next));
            }
            psi = Some(next);
        }
    }
    Ok(None)
}

/// The recursive definer on random inputs: replay and parameter bound.
pub fn recursive_definer(quick: bool, seed: u64, limits: &Limits) -> CriterionOutcome {
    let target = if quick { 30 } else { 120 };
    run(4, "recursive definer replays with at most m+d parameters", Some(120.0), |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
        let mut done = 0;
        let mut cases: BTreeMap<String, usize> = BTreeMap::new();
        let mut attempts = 0;
        while done < target && attempts < target * 20 {
            attempts += 1;
            let Some(s) = c.absorb(random_poset(&mut rng, 1..=7, 14, limits), "poset") else { return };
            let d = rng.random_range(0..=3);
            let cap = (1usize << (d + 1)) - 1;
            let b = random_subset(&mut rng, s.universe_size(), 8);
            let Some(Some(psi)) = c.absorb(random_psi(&mut rng, &s, &b, cap, limits), "psi") else {
                continue;
            };
            let Some(sat) = c.absorb(satisfier_set_with(&s, &psi, "x", limits), "sat") else { continue };
            let cpt = sat[rng.random_range(0..sat.len())];
            let delta = random_delta(&mut rng);
            let params = ParamSet::elements(&b).expect("distinct elements");
            let m = psi.param_count();
            let res = lemma31_define(&s, &psi, "x", &delta, cpt, &params, d, limits);
            let Some(res) = c.absorb(res, &format!("definer (d={d}, psi={psi})")) else { continue };
            let Some(tp) = c.absorb(realize_type(&s, &delta, &[cpt], &params, limits), "type") else {
                continue;
            };
            for (i, f) in res.formulas.iter().enumerate() {
                for (j, &bj) in b.iter().enumerate() {
                    let env = BTreeMap::from([("y".to_string(), bj)]);
                    let v = eval_with(&s, f, &env, limits).unwrap_or(!tp.is_positive(i, j));
                    c.expect(v == tp.is_positive(i, j), || format!("{f} misclassifies {bj}"));
                }
                c.expect(f.param_count() <= m + d, || {
                    format!("{f} uses {} parameters, bound {}", f.param_count(), m + d)
                });
            }
            c.expect(res.depth <= d, || format!("recursion depth {} > d = {d}", res.depth));
            let key = match res.termination {
                crate::definer::Termination::Base => "base",
                crate::definer::Termination::Counting { .. } => "counting",
            };
            *cases.entry(format!("{key}+{}steps", res.depth)).or_default() += 1;
            done += 1;
        }
        c.expect(done >= target, || format!("only {done} valid inputs generated"));
        c.note(format!("{done} inputs, 0 allowed failures, terminations {cases:?}"));
    })
}

/// `∅`-type classes are antichains on gallery and random posets.
pub fn antichain_classes(quick: bool, seed: u64, limits: &Limits) -> CriterionOutcome {
    let randoms = if quick { 50 } else { 200 };
    run(5, "type classes over the empty set are antichains", None, |c| {
        let mut structures: Vec<(String, FiniteStructure)> = Vec::new();
        for n in 1..=3 {
            for k in 2..=4 {
                if let Ok(g) = make_grid_order(GridOrderSpec { n, k }) {
                    structures.push((format!("grid({n},{k})"), g.structure));
                }
            }
        }
        for d in 1..=3 {
            if let Ok(h) = make_hypercube_poset(HypercubePosetSpec { d }) {
                structures.push((format!("M({d})"), h.structure));
            }
        }
        let gallery = structures.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5);
        for i in 0..randoms {
            if let Some(s) = c.absorb(random_poset(&mut rng, 1..=6, 16, limits), "poset") {
                structures.push((format!("random #{i}"), s));
            }
        }
        let mut pairs = 0usize;
        for (name, s) in &structures {
            let Some(p) = c.absorb(s.poset(ORDER), name) else { continue };
            if let Some(r) = c.absorb(check_lemma33(&p, limits), name) {
                c.expect(r.holds, || format!("{name}: {:?}", r.violation));
            }
            pairs += (0..p.len())
                .flat_map(|a| (0..p.len()).map(move |b| (a, b)))
                .filter(|&(a, b)| p.lt(a, b))
                .count();
        }
        c.note(format!(
            "{gallery} gallery + {} random posets, {pairs} comparable pairs checked",
            structures.len() - gallery
        ));
    })
}

/// Every realized type of a random poset of width `w ≤ 7` is certified with
/// `⌊log₂ w⌋` parameters.
pub fn vcd_by_width(quick: bool, seed: u64, limits: &Limits) -> CriterionOutcome {
    let instances = if quick { 10 } else { 30 };
    run(6, "finite posets of width w have VCd for d = floor(log2 w)", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
        let (mut types, mut syn, mut sem, mut bsets) = (0, 0, 0, 0);
        let mut widths = BTreeSet::new();
        for i in 0..instances {
            let w = 1 + i % 7;
            let size = rng.random_range(w..=14.max(w));
            let Some(s) = c.absorb(random_width_poset(w, size, rng.random(), limits), "poset") else {
                continue;
            };
            let p = s.poset(ORDER).expect("generated posets are valid");
            widths.insert(w);
            for _ in 0..2 {
                let b = random_subset(&mut rng, s.universe_size(), 6);
                let params = ParamSet::elements(&b).expect("distinct");
                let delta = if rng.random_bool(0.5) {
                    FormulaSet::order()
                } else {
                    FormulaSet::order_and_equality()
                };
                let Some(r) = c.absorb(
                    vcd_certificate(&p, &delta, &params, VcdOptions::default(), limits),
                    "vcd",
                ) else {
                    continue;
                };
                c.expect(r.d == vcd_exponent(w), || format!("instance {i}: d = {}", r.d));
                c.expect(r.all_certified(), || {
                    format!("instance {i}: {} uncertified types over {b:?}", r.uncertified)
                });
                for t in &r.types {
                    if let crate::definer::CertificateKind::Syntactic { result } = &t.kind {
                        c.expect(result.param_count <= r.d, || {
                            format!("instance {i}: {} parameters > d = {}", result.param_count, r.d)
                        });
                    }
                }
                types += r.types.len();
                syn += r.syntactic;
                sem += r.semantic;
                bsets += 1;
            }
        }
        let rate = if types == 0 { 0.0 } else { sem as f64 / types as f64 };
        c.note(format!(
            "{instances} posets (widths {widths:?}), {bsets} parameter sets, {types} types: {syn} syntactic, {sem} semantic (fallback rate {rate:.3})"
        ));
    })
}

/// On `M(d)` with `B = H` the constant point's type needs `d + 1`
/// parameters: every `d`-tuple misses some coordinate `i`, and the flip
/// `σ_i` fixes the tuple but swaps `H_{i,+}` and `H_{i,−}`.
pub fn hypercube_tightness(quick: bool, limits: &Limits) -> CriterionOutcome {
    run(7, "hypercube bound is tight", Some(60.0), |c| {
        for d in hypercube_ds(quick) {
            let Some(h) = c.absorb(make_hypercube_poset(HypercubePosetSpec { d }), "hypercube") else {
                continue;
            };
            let delta = FormulaSet::order();
            let b = ParamSet::elements(&h.hyperplanes).expect("distinct");
            let Some(p) = c.absorb(realize_type(&h.structure, &delta, &[h.constant_point()], &b, limits), "type") else {
                continue;
            };
            let Some(ctx) = c.absorb(DefinabilityContext::new(&h.structure, &delta, &b, limits), "ctx") else {
                continue;
            };
            let Some(tuples) = c.absorb(ctx.tuples(d), "tuples") else { continue };
            let mut replayed = 0;
            for t in &tuples {
                let Some(v) = c.absorb(ctx.verdict(&p, t), "verdict") else { continue };
                c.expect(!v.definable, || format!("d={d}: definable over {t:?}"));
                if c.absorb(v.replay(&h.structure, &p, &b), "replay").is_some() {
                    replayed += 1;
                }
                let fixed: Vec<Element> = t.iter().map(|&j| b.get(j)[0]).collect();
                let free = (0..=d).find(|&i| {
                    !fixed.contains(&h.spec.hyperplane(i, 1)) && !fixed.contains(&h.spec.hyperplane(i, -1))
                });
                let ok = free.is_some_and(|i| {
                    let sigma = h.coordinate_flip(i);
                    let plus = b.index_of(&[h.spec.hyperplane(i, 1)]).expect("in H");
                    let minus = b.index_of(&[h.spec.hyperplane(i, -1)]).expect("in H");
                    is_automorphism(&h.structure, &sigma).unwrap_or(false)
                        && sigma.fixes_all(&fixed)
                        && sigma.apply(h.spec.hyperplane(i, 1)) == h.spec.hyperplane(i, -1)
                        && p.is_positive(0, plus) != p.is_positive(0, minus)
                });
                c.expect(ok, || format!("d={d}: no coordinate flip refutes {t:?}"));
            }
            let longer = c.absorb(ctx.has_definition(&p, d + 1), "longer tuples").flatten();
            c.expect(longer.is_some(), || format!("d={d}: no definition with d+1 parameters"));
            c.note(format!(
                "d={d}: Def empty over {} tuples ({replayed} replayed), admissible (d+1)-tuple {:?}",
                tuples.len(),
                longer.map(|t| b.resolve(&t))
            ));
        }
    })
}

/// For each `d`, `M(d)` is a finite-width poset without VCd.
pub fn no_uniform_d(quick: bool, limits: &Limits) -> CriterionOutcome {
    run(8, "no single d works for all finite widths", None, |c| {
        let mut refuted = Vec::new();
        for d in hypercube_ds(quick) {
            let Some(h) = c.absorb(make_hypercube_poset(HypercubePosetSpec { d }), "hypercube") else {
                continue;
            };
            let delta = FormulaSet::order();
            let b = ParamSet::elements(&h.hyperplanes).expect("distinct");
            let Some(types) = c.absorb(enumerate_types(&h.structure, &delta, &b, None, limits), "types") else {
                continue;
            };
            let Some(ctx) = c.absorb(DefinabilityContext::new(&h.structure, &delta, &b, limits), "ctx") else {
                continue;
            };
            let mut fails_all = true;
            for e in 0..=d {
                let Some(defs) = c.absorb(ctx.def_sets(&types, e), "def sets") else { continue };
                let bound = min_scheme_count(types.iter().cloned().zip(defs).collect(), e);
                fails_all &= bound.is_infinite();
            }
            c.expect(fails_all, || format!("M({d}) has a type definable with {d} parameters"));
            let width = h.poset().width(limits).unwrap_or(0);
            let Some(r) = c.absorb(
                vcd_certificate(&h.poset(), &delta, &b, VcdOptions::default(), limits),
                "vcd",
            ) else {
                continue;
            };
            c.expect(r.all_certified() && r.d == d + 1, || {
                format!("M({d}) not certified at d = {}", r.d)
            });
            if fails_all {
                refuted.push(format!("M({d}) width {width} fails VC{d}"));
            }
        }
        c.note(refuted.join(", "));
    })
}

/// Down-set families of width-`n` posets have breadth at most `n`, and the
/// breadth scheme defines every `{x<y, x=y}`-type with at most `n`
/// parameters.
pub fn breadth_bound(quick: bool, seed: u64, limits: &Limits) -> CriterionOutcome {
    let per_width = if quick { 5 } else { 15 };
    run(9, "down-set breadth is at most the width", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9);
        let mut types = 0;
        let mut sampled = 0;
        for n in [2usize, 3] {
            for _ in 0..per_width {
                let size = rng.random_range(n + 2..=12);
                let Some(s) = c.absorb(random_width_poset(n, size, rng.random(), limits), "poset") else {
                    continue;
                };
                let family: Vec<Vec<Element>> = (0..s.universe_size())
                    .map(|b| {
                        let f = Formula::less(Term::var("x"), Term::Const(b));
                        satisfier_set_with(&s, &f, "x", limits).unwrap_or_default()
                    })
                    .collect();
                let report = breadth(&family, limits.breadth_cap);
                let d = report.breadth;
                c.expect(d.is_some_and(|d| d <= n), || format!("breadth {d:?} > width {n}"));
                c.expect(report.replay().is_ok(), || "breadth witnesses do not replay".into());
                if let Some(d) = d {
                    sampled += sample_collapse(&mut rng, &report.family, d + 2, 20, c);
                }
                let params = ParamSet::elements(&(0..s.universe_size()).collect::<Vec<_>>()).expect("distinct");
                let delta = FormulaSet::order_and_equality();
                let Some(all) = c.absorb(enumerate_types(&s, &delta, &params, None, limits), "types") else {
                    continue;
                };
                for p in &all {
                    if let Some(def) = c.absorb(breadth_define(&s, &delta, &params, p, n, limits), "breadth define") {
                        c.expect(def.params.len() <= n, || format!("{} parameters > {n}", def.params.len()));
                    }
                    types += 1;
                }
            }
        }
        c.note(format!("{} posets, {types} types defined, {sampled} (d+2)-intersections sampled", 2 * per_width));
    })
}

fn sample_collapse(rng: &mut ChaCha8Rng, family: &[Vec<Element>], size: usize, samples: usize, c: &mut Check) -> usize {
    if family.len() < size {
        return 0;
    }
    let mut done = 0;
    for _ in 0..samples {
        let mut idx: Vec<usize> = (0..family.len()).collect();
        idx.shuffle(rng);
        idx.truncate(size);
        let meet = |ids: &[usize]| -> BTreeSet<Element> {
            let mut it = ids.iter();
            let first: BTreeSet<Element> = family[*it.next().expect("nonempty")].iter().copied().collect();
            it.fold(first, |acc, &i| acc.intersection(&family[i].iter().copied().collect()).copied().collect())
        };
        let whole = meet(&idx);
        if whole.is_empty() {
            continue;
        }
        done += 1;
        let collapses = (0..size).any(|k| {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &m)| m).collect();
            meet(&rest) == whole
        });
        c.expect(collapses, || format!("{idx:?} does not collapse"));
    }
    done
}

/// `copies` disjoint, mutually incomparable copies of `s`.
pub fn disjoint_copies(s: &FiniteStructure, copies: usize) -> FiniteStructure {
    let n = s.universe_size();
    let mut out = FiniteStructure::new(n * copies);
    for (name, r) in s.relations() {
        let tuples: Vec<Vec<Element>> = (0..copies)
            .flat_map(|k| r.tuples().map(move |t| t.iter().map(|&e| e + k * n).collect()))
            .collect();
        out.add_relation(name, r.arity(), tuples).expect("shifted tuples are in range");
    }
    out
}

/// All automorphisms fixing `fixed`, by enumerating every bijection.
pub fn brute_force_automorphisms(s: &FiniteStructure, fixed: &[Element]) -> Result<Vec<Permutation>> {
    let n = s.universe_size();
    if n > 9 {
        return Err(Error::ResourceCap(format!("brute force on {n} elements")));
    }
    let mut out = Vec::new();
    let mut images: Vec<Element> = (0..n).collect();
    let mut used = vec![false; n];
    fn go(
        s: &FiniteStructure,
        fixed: &[Element],
        pos: usize,
        images: &mut Vec<Element>,
        used: &mut Vec<bool>,
        out: &mut Vec<Permutation>,
    ) -> Result<()> {
        let n = images.len();
        if pos == n {
            let p = Permutation::from_images(images.clone())?;
            if is_automorphism(s, &p)? {
                out.push(p);
            }
            return Ok(());
        }
        for v in 0..n {
            if used[v] || (fixed.contains(&pos) && v != pos) {
                continue;
            }
            used[v] = true;
            images[pos] = v;
            go(s, fixed, pos + 1, images, used, out)?;
            used[v] = false;
        }
        Ok(())
    }
    go(s, fixed, 0, &mut images, &mut used, &mut out)?;
    out.sort();
    Ok(out)
}

/// Automorphism search agrees with brute force on small structures, and the
/// formula search never defines what the orbit criterion rules out.
pub fn engine_soundness(quick: bool, seed: u64, limits: &Limits) -> CriterionOutcome {
    let (corpus, queries) = if quick { (20, 100) } else { (60, 500) };
    run(10, "automorphism and definability engines are sound", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA);
        let mut structures: Vec<FiniteStructure> = Vec::new();
        if let Ok(h) = make_hypercube_poset(HypercubePosetSpec { d: 1 }) {
            structures.push(h.structure);
        }
        for n in 1..=6 {
            let pairs: Vec<Vec<Element>> = (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).collect();
            if let Ok(s) = FiniteStructure::new(n).with_relation(ORDER, 2, pairs) {
                structures.push(s);
            }
        }
        if let Ok(s) = FiniteStructure::new(5).with_relation(ORDER, 2, Vec::<Vec<Element>>::new()) {
            structures.push(s);
        }
        while structures.len() < corpus {
            if let Some(s) = c.absorb(random_poset(&mut rng, 1..=4, 8, limits), "poset") {
                structures.push(s);
            }
        }
        let mut groups = 0;
        for s in &structures {
            let n = s.universe_size();
            for fixed in [vec![], vec![0], vec![0, n - 1]] {
                let fixed: Vec<Element> = fixed.into_iter().filter(|&e| e < n).collect();
                let Some(gens) = c.absorb(automorphism_generators(s, &fixed, limits), "generators") else {
                    continue;
                };
                let Some(group) = c.absorb(group_elements(n, &gens, 50_000), "group") else { continue };
                let Some(brute) = c.absorb(brute_force_automorphisms(s, &fixed), "brute force") else {
                    continue;
                };
                c.expect(group == brute, || {
                    format!("|group| = {} vs brute force {} (n = {n}, fixed {fixed:?})", group.len(), brute.len())
                });
                groups += 1;
            }
        }

        // Random posets are usually rigid, so queries come from disjoint
        // unions of copies, where small parameter tuples leave symmetry.
        let (mut negative, mut positive, mut found, mut attempts) = (0, 0, 0, 0);
        while negative < queries && attempts < queries * 20 {
            attempts += 1;
            let copies = rng.random_range(1..=3);
            let Some(s) = c.absorb(random_poset(&mut rng, 1..=3, 5, limits), "poset") else { break };
            let s = if copies > 1 { disjoint_copies(&s, copies) } else { s };
            let b = random_subset(&mut rng, s.universe_size(), 6);
            let params = ParamSet::elements(&b).expect("distinct");
            let delta = if rng.random_bool(0.5) { FormulaSet::order() } else { below_formula() };
            let Some(types) = c.absorb(enumerate_types(&s, &delta, &params, None, limits), "types") else {
                continue;
            };
            let Some(ctx) = c.absorb(DefinabilityContext::new(&s, &delta, &params, limits), "ctx") else {
                continue;
            };
            for p in &types {
                let len = rng.random_range(0..=2.min(b.len()));
                let bbar: Vec<usize> = (0..len).map(|_| rng.random_range(0..b.len())).collect();
                let Some(v) = c.absorb(ctx.verdict(p, &bbar), "verdict") else { continue };
                if v.definable && positive >= queries / 5 {
                    continue;
                }
                if let Certificate::Violation { .. } = v.certificate {
                    c.expect(v.replay(&s, p, &params).is_ok(), || "violation does not replay".into());
                }
                let Some(hit) = c.absorb(
                    bounded_formula_search(&s, p, &bbar, &delta, &params, 2, limits),
                    "search",
                ) else {
                    continue;
                };
                if v.definable {
                    positive += 1;
                    found += usize::from(hit.is_some());
                } else {
                    negative += 1;
                    c.expect(hit.is_none(), || format!("search defines a non-definable type over {bbar:?}"));
                }
            }
        }
        c.expect(negative >= queries, || format!("only {negative} non-definable queries sampled"));
        c.note(format!(
            "{} structures x 3 fixed sets = {groups} groups match brute force; {negative} non-definable queries, 0 search hits; search found {found} of {positive} definable queries",
            structures.len()
        ));
    })
}
