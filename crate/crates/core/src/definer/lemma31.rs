//! Recursive construction of defining formulas from a small formula `ψ`.
//!
//! Given `ψ(x)` with `|ψ(M)| ≤ 2^{d+1} − 1` and `c ∈ ψ(M)`, the type of `c`
//! over `B` is defined with at most `d` parameters beyond those of `ψ`:
//!
//! * `d = 0`: `ψ(M) = {c}` and `∃x (ψ(x) ∧ φ(x; y))` defines it.
//! * Case 1: some `a ∈ B` with `φ(c; a)` cuts `ψ(M)` down to at most
//!   `2^d − 1` elements; recurse on `ψ(x) ∧ φ(x; a)` with `d − 1`.
//! * Case 2: the same with `¬φ(c; a)` and `ψ(x) ∧ ¬φ(x; a)`.
//! * Case 3: otherwise `φ(c; a)` holds iff at least `2^d` elements of
//!   `ψ(M)` satisfy `φ(·; a)`, which `∃^{≥2^d} x (ψ(x) ∧ φ(x; y))` states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{eval_with, satisfier_set_with, CompiledFormula, Formula, FormulaSet};
use crate::model::{Element, FiniteStructure};
use crate::typespace::{realize_type, ParamSet};

/// A parameter added by case 1 or case 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamStep {
    /// Recursion level at which the parameter was added (0 = outermost).
    pub level: usize,
    pub case: u8,
    pub formula: usize,
    pub position: usize,
    pub tuple: Vec<Element>,
    /// `|ψ(M)|` after conjoining.
    pub size_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Base,
    Counting { threshold: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinerResult {
    /// One defining formula `F_i(y)` per member of `Δ`.
    pub formulas: Vec<Formula>,
    pub params_used: Vec<ParamStep>,
    pub termination: Termination,
    /// Number of recursive steps taken.
    pub depth: usize,
    /// `|ψ(M)|` at each level, outermost first.
    pub psi_sizes: Vec<usize>,
    /// Distinct constants over all formulas.
    pub param_count: usize,
    /// `m + d·|y|`.
    pub param_bound: usize,
    /// `verdicts[i][j]`: `F_i(b_j)`, equal to `φ_i(c; b_j)` for every `j`.
    pub verdicts: Vec<Vec<bool>>,
}

fn pow2(e: usize) -> Result<usize> {
    u32::try_from(e)
        .ok()
        .and_then(|e| 1usize.checked_shl(e))
        .ok_or_else(|| Error::InvalidArgument(format!("d = {e} is too large")))
}

/// Defines `tp_Δ(c / B)` from `ψ(psi_var)`, following the three cases.
/// Parameters are scanned case 1 before case 2, in ascending order of `B`
/// and then of `Δ`; the first witness wins.
#[allow(clippy::too_many_arguments)]
pub fn lemma31_define(
    s: &FiniteStructure,
    psi: &Formula,
    psi_var: &str,
    delta: &FormulaSet,
    c: Element,
    params: &ParamSet,
    d: usize,
    limits: &Limits,
) -> Result<DefinerResult> {
    if delta.object_vars.len() != 1 {
        return Err(Error::InvalidArgument(
            "Δ must have exactly one object variable".into(),
        ));
    }
    if params.arity() != delta.param_vars.len() {
        return Err(Error::InvalidArgument(format!(
            "parameter tuples of length {} for {} parameter variables",
            params.arity(),
            delta.param_vars.len()
        )));
    }
    s.check_element(c)?;
    params.check_range(s)?;
    let support = params.support();
    if let Some(k) = psi.constants().into_iter().find(|k| support.binary_search(k).is_err()) {
        return Err(Error::Precondition(format!(
            "ψ uses the constant {k}, which is not drawn from B"
        )));
    }
    let limit = pow2(d + 1)? - 1;
    let x = delta.object_vars[0].as_str();
    let m = psi.param_count();
    let target = realize_type(s, delta, &[c], params, limits)?;

    let free: Vec<&str> = delta
        .object_vars
        .iter()
        .chain(&delta.param_vars)
        .map(String::as_str)
        .collect();
    let mut compiled: Vec<CompiledFormula> = delta
        .formulas
        .iter()
        .map(|f| CompiledFormula::new(s, f, &free, limits))
        .collect::<Result<_>>()?;
    let mut holds = |i: usize, e: Element, b: &[Element]| -> Result<bool> {
        let mut v = Vec::with_capacity(1 + b.len());
        v.push(e);
        v.extend_from_slice(b);
        compiled[i].eval(&v)
    };

    let mut current = psi.rename(psi_var, x);
    let mut level_d = d;
    let mut steps = Vec::new();
    let mut sizes = Vec::new();
    let termination = loop {
        let sat = satisfier_set_with(s, &current, x, limits)?;
        let bound = pow2(level_d + 1)? - 1;
        if sat.binary_search(&c).is_err() {
            return Err(Error::Precondition(format!(
                "{c} does not satisfy ψ (|ψ(M)| = {})",
                sat.len()
            )));
        }
        if sat.len() > bound {
            let msg = if steps.is_empty() {
                format!("|ψ(M)| = {} exceeds 2^(d+1) - 1 = {limit} for d = {d}", sat.len())
            } else {
                format!("internal: |ψ(M)| = {} exceeds {bound} after a recursive step", sat.len())
            };
            return Err(Error::Precondition(msg));
        }
        sizes.push(sat.len());
        if level_d == 0 {
            break Termination::Base;
        }
        let half = pow2(level_d)? - 1;
        let mut counts: Vec<Vec<usize>> = vec![vec![0; params.len()]; delta.len()];
        for (j, b) in params.tuples().iter().enumerate() {
            for (i, row) in counts.iter_mut().enumerate() {
                for &e in &sat {
                    if holds(i, e, b)? {
                        row[j] += 1;
                    }
                }
            }
        }
        let mut pick = None;
        'cases: for case in [1u8, 2] {
            for j in 0..params.len() {
                for i in 0..delta.len() {
                    let positive = target.is_positive(i, j);
                    let size = if case == 1 { counts[i][j] } else { sat.len() - counts[i][j] };
                    if positive == (case == 1) && size <= half {
                        pick = Some((case, i, j, size));
                        break 'cases;
                    }
                }
            }
        }
        match pick {
            Some((case, i, j, size)) => {
                let inst = delta.member(i).with_params(params.get(j));
                current = current.and(if case == 1 { inst } else { inst.not() });
                steps.push(ParamStep {
                    level: steps.len(),
                    case,
                    formula: i,
                    position: j,
                    tuple: params.get(j).to_vec(),
                    size_after: size,
                });
                level_d -= 1;
            }
            None => {
                let threshold = half + 1;
                for (i, row) in counts.iter().enumerate() {
                    for (j, &k) in row.iter().enumerate() {
                        if target.is_positive(i, j) != (k >= threshold) {
                            return Err(Error::Precondition(format!(
                                "internal: counting dichotomy fails for formula {i} at {:?}",
                                params.get(j)
                            )));
                        }
                    }
                }
                break Termination::Counting { threshold };
            }
        }
    };

    let formulas: Vec<Formula> = delta
        .formulas
        .iter()
        .map(|phi| {
            let body = current.clone().and(phi.clone());
            match termination {
                Termination::Base => Formula::exists(x, body),
                Termination::Counting { threshold } => Formula::count_exists(threshold, x, body),
            }
        })
        .collect();

    let mut verdicts = vec![vec![false; params.len()]; delta.len()];
    for (i, f) in formulas.iter().enumerate() {
        for (j, b) in params.tuples().iter().enumerate() {
            let env: BTreeMap<String, Element> =
                delta.param_vars.iter().cloned().zip(b.iter().copied()).collect();
            let v = eval_with(s, f, &env, limits)?;
            if v != target.is_positive(i, j) {
                return Err(Error::Replay(format!(
                    "{f} misclassifies {b:?} for the type of {c}"
                )));
            }
            verdicts[i][j] = v;
        }
    }
    let param_count = formulas
        .iter()
        .flat_map(|f| f.constants())
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let param_bound = m + d * params.arity();
    if param_count > param_bound {
        return Err(Error::Replay(format!(
            "{param_count} parameters exceed the bound {param_bound}"
        )));
    }
    Ok(DefinerResult {
        formulas,
        depth: steps.len(),
        params_used: steps,
        termination,
        psi_sizes: sizes,
        param_count,
        param_bound,
        verdicts,
    })
}
