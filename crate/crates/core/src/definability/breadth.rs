use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{eval_with, Formula, FormulaSet, Term};
use crate::model::{Element, FiniteStructure};
use crate::typespace::{ParamSet, TypeTrace};

/// A `(d+1)`-subset of the family with nonempty intersection, and a
/// `d`-subset of it with the same intersection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreadthWitness {
    pub members: Vec<usize>,
    pub reduced: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreadthReport {
    /// The family with duplicates removed, each set sorted.
    pub family: Vec<Vec<Element>>,
    /// `None` when no `d` up to the cap works.
    pub breadth: Option<usize>,
    pub witnesses: Vec<BreadthWitness>,
}

impl BreadthReport {
    /// Recomputes every witnessed intersection.
    pub fn replay(&self) -> Result<()> {
        for w in &self.witnesses {
            let full = intersect(&self.family, &w.members);
            if full.is_empty() {
                return Err(Error::Replay(format!("{:?} has empty intersection", w.members)));
            }
            if !w.reduced.iter().all(|r| w.members.contains(r))
                || intersect(&self.family, &w.reduced) != full
            {
                return Err(Error::Replay(format!(
                    "{:?} does not reduce to {:?}",
                    w.members, w.reduced
                )));
            }
        }
        Ok(())
    }
}

fn intersect(family: &[Vec<Element>], members: &[usize]) -> Vec<Element> {
    let mut it = members.iter();
    let Some(&first) = it.next() else {
        return Vec::new();
    };
    let mut acc = family[first].clone();
    for &m in it {
        acc.retain(|e| family[m].binary_search(e).is_ok());
    }
    acc
}

fn bitsets(family: &[Vec<Element>]) -> Vec<FixedBitSet> {
    let n = family.iter().flatten().max().map_or(0, |&m| m + 1);
    family
        .iter()
        .map(|set| {
            let mut b = FixedBitSet::with_capacity(n);
            set.iter().for_each(|&e| b.insert(e));
            b
        })
        .collect()
}

/// Witnesses for every `(d+1)`-subset with nonempty intersection, or `None`
/// as soon as one does not collapse to a `d`-subset.
fn check(sets: &[FixedBitSet], d: usize) -> Option<Vec<BreadthWitness>> {
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(d + 1);
    let universe = sets.first().map_or(0, |s| s.len());
    let mut all = FixedBitSet::with_capacity(universe);
    all.insert_range(..);
    if walk(sets, d + 1, 0, &all, &mut chosen, &mut out) {
        Some(out)
    } else {
        None
    }
}

fn walk(
    sets: &[FixedBitSet],
    size: usize,
    start: usize,
    acc: &FixedBitSet,
    chosen: &mut Vec<usize>,
    out: &mut Vec<BreadthWitness>,
) -> bool {
    if chosen.len() == size {
        let reduced = (0..size).find_map(|drop| {
            let rest: Vec<usize> = chosen
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, &m)| m)
                .collect();
            let mut r = sets[rest[0]].clone();
            rest[1..].iter().for_each(|&m| r.intersect_with(&sets[m]));
            (r == *acc).then_some(rest)
        });
        return match reduced {
            Some(reduced) => {
                out.push(BreadthWitness {
                    members: chosen.clone(),
                    reduced,
                });
                true
            }
            None => false,
        };
    }
    for m in start..sets.len() {
        let mut next = acc.clone();
        next.intersect_with(&sets[m]);
        if next.is_clear() {
            continue;
        }
        chosen.push(m);
        let ok = walk(sets, size, m + 1, &next, chosen, out);
        chosen.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Least `d ≥ 1` such that every nonempty intersection of `d+1` distinct
/// members equals the intersection of `d` of them, trying `d` up to `cap`.
pub fn breadth(family: &[Vec<Element>], cap: usize) -> BreadthReport {
    let mut fam: Vec<Vec<Element>> = family
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    fam.sort();
    fam.dedup();
    let sets = bitsets(&fam);
    for d in 1..=cap.max(1) {
        if let Some(witnesses) = check(&sets, d) {
            return BreadthReport {
                family: fam,
                breadth: Some(d),
                witnesses,
            };
        }
    }
    BreadthReport {
        family: fam,
        breadth: None,
        witnesses: Vec::new(),
    }
}

/// Chosen parameters for a type, with per-parameter verdicts and one
/// defining formula per member of `Δ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreadthDefinition {
    /// `(formula index, position in B)` pairs whose satisfier sets are
    /// intersected.
    pub chosen: Vec<(usize, usize)>,
    pub params: Vec<Element>,
    /// `verdicts[i][j]`: the scheme's classification of `(φ_i, b_j)`.
    pub verdicts: Vec<Vec<bool>>,
    /// `∀x (⋀ chosen → φ_i(x; y))` for every `i`.
    pub formulas: Vec<Formula>,
}

/// Defines `p` through the breadth of the family `{φ_i(M; b)}`.
///
/// The intersection `I` of the satisfier sets over `p`'s positive pairs is
/// reduced to at most `d` members, and `(φ_i, b)` is classified positive iff
/// `I ⊆ φ_i(M; b)`. The empty positive set keeps `I = M` with no
/// parameters.
pub fn breadth_define(
    s: &FiniteStructure,
    delta: &FormulaSet,
    params: &ParamSet,
    p: &TypeTrace,
    d: usize,
    limits: &Limits,
) -> Result<BreadthDefinition> {
    if delta.object_vars.len() != 1 {
        return Err(Error::InvalidArgument(
            "breadth definitions need exactly one object variable".into(),
        ));
    }
    let n = s.universe_size();
    let x = delta.object_vars[0].as_str();
    let sat = |i: usize, j: usize| -> Result<FixedBitSet> {
        let f = delta.member(i).with_params(params.get(j));
        let mut set = FixedBitSet::with_capacity(n);
        let mut c = crate::logic::CompiledFormula::new(s, &f, &[x], limits)?;
        for a in 0..n {
            if c.eval(&[a])? {
                set.insert(a);
            }
        }
        Ok(set)
    };
    let members = p.positive_pairs();
    let sets: Vec<FixedBitSet> = members.iter().map(|&(i, j)| sat(i, j)).collect::<Result<_>>()?;
    let meet = |idx: &[usize]| -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(n);
        acc.insert_range(..);
        idx.iter().for_each(|&k| acc.intersect_with(&sets[k]));
        acc
    };

    let mut current: Vec<usize> = (0..members.len()).collect();
    let target = meet(&current);
    while current.len() > d {
        let head = &current[..=d];
        let whole = meet(head);
        let drop = (0..=d).find(|&k| {
            let rest: Vec<usize> = head.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &m)| m).collect();
            meet(&rest) == whole
        });
        match drop {
            Some(k) => {
                current.remove(k);
            }
            None => {
                return Err(Error::Precondition(format!(
                    "positive sets {:?} do not collapse to {d} members",
                    head.iter().map(|&k| members[k]).collect::<Vec<_>>()
                )))
            }
        }
    }
    let core = meet(&current);
    if core != target {
        return Err(Error::Precondition("reduced intersection changed".into()));
    }

    let mut verdicts = vec![vec![false; params.len()]; delta.len()];
    for (i, row) in verdicts.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = core.is_subset(&sat(i, j)?);
            if *v != p.is_positive(i, j) {
                return Err(Error::Precondition(format!(
                    "breadth scheme misclassifies formula {i} at parameter {:?}",
                    params.get(j)
                )));
            }
        }
    }

    let chosen: Vec<(usize, usize)> = current.iter().map(|&k| members[k]).collect();
    let hypothesis = Formula::conjunction(
        chosen
            .iter()
            .map(|&(i, j)| delta.member(i).with_params(params.get(j))),
    )
    .unwrap_or_else(|| Formula::eq(Term::var(x), Term::var(x)));
    let formulas = delta
        .formulas
        .iter()
        .map(|f| Formula::forall(x, hypothesis.clone().implies(f.clone())))
        .collect::<Vec<_>>();
    let mut param_elems: Vec<Element> = chosen
        .iter()
        .flat_map(|&(_, j)| params.get(j).iter().copied())
        .collect();
    param_elems.sort_unstable();
    param_elems.dedup();

    for (i, f) in formulas.iter().enumerate() {
        for j in 0..params.len() {
            let env = delta
                .param_vars
                .iter()
                .cloned()
                .zip(params.get(j).iter().copied())
                .collect();
            if eval_with(s, f, &env, limits)? != p.is_positive(i, j) {
                return Err(Error::Precondition(format!(
                    "emitted formula {f} misclassifies {:?}",
                    params.get(j)
                )));
            }
        }
    }
    Ok(BreadthDefinition {
        chosen,
        params: param_elems,
        verdicts,
        formulas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ORDER;
    use crate::typespace::enumerate_types;

    #[test]
    fn nested_family_has_breadth_one() {
        let r = breadth(&[vec![0], vec![0, 1], vec![0, 1, 2]], 4);
        assert_eq!(r.breadth, Some(1));
        r.replay().unwrap();
    }

    #[test]
    fn crossing_pair_has_breadth_two() {
        let r = breadth(&[vec![1, 2], vec![2, 3]], 4);
        assert_eq!(r.breadth, Some(2));
    }

    #[test]
    fn three_way_crossing() {
        // Pairwise intersections differ from each set and from the triple.
        let r = breadth(&[vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]], 4);
        assert_eq!(r.breadth, Some(3));
        assert_eq!(breadth(&[vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]], 2).breadth, None);
    }

    #[test]
    fn duplicates_are_removed() {
        let r = breadth(&[vec![2, 1], vec![1, 2], vec![1, 2, 2]], 4);
        assert_eq!(r.family, vec![vec![1, 2]]);
    }

    fn chain(n: usize) -> FiniteStructure {
        let pairs: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
            .collect();
        FiniteStructure::new(n).with_relation(ORDER, 2, pairs).unwrap()
    }

    #[test]
    fn chain_types_need_one_parameter() {
        let s = chain(6);
        let b = ParamSet::elements(&[1, 3, 4]).unwrap();
        let delta = FormulaSet::order_and_equality();
        let lim = Limits::default();
        for p in enumerate_types(&s, &delta, &b, None, &lim).unwrap() {
            let def = breadth_define(&s, &delta, &b, &p, 1, &lim).unwrap();
            assert!(def.params.len() <= 1);
            if p.positive_pairs().is_empty() {
                assert!(def.params.is_empty());
            }
        }
    }
}
