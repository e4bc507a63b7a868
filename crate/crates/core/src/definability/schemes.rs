use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::typespace::TypeTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeEntry {
    pub trace: TypeTrace,
    /// Admissible parameter tuples, as positions in `B`.
    pub def_set: Vec<Vec<usize>>,
    /// Number of distinct parameter sets among `def_set` (reported only).
    pub distinct_supports: usize,
    pub assigned: Option<Vec<usize>>,
}

/// Minimal max-load over assignments of types to admissible tuples.
///
/// Each (scheme, tuple) pair defines at most one type, so a family of `n`
/// schemes in `d` parameters over `B` yields an assignment with max-load at
/// most `n`: `lower_bound` is a lower bound on the number of schemes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeBound {
    pub d: usize,
    pub entries: Vec<SchemeEntry>,
    /// `None` when some type has no admissible tuple.
    pub lower_bound: Option<usize>,
}

impl SchemeBound {
    pub fn is_infinite(&self) -> bool {
        self.lower_bound.is_none()
    }
}

pub fn min_scheme_count(input: Vec<(TypeTrace, Vec<Vec<usize>>)>, d: usize) -> SchemeBound {
    let mut entries: Vec<SchemeEntry> = input
        .into_iter()
        .map(|(trace, def_set)| {
            let distinct_supports = def_set
                .iter()
                .map(|t| t.iter().copied().collect::<BTreeSet<usize>>())
                .collect::<BTreeSet<_>>()
                .len();
            SchemeEntry {
                trace,
                def_set,
                distinct_supports,
                assigned: None,
            }
        })
        .collect();
    if entries.iter().any(|e| e.def_set.is_empty()) {
        return SchemeBound {
            d,
            entries,
            lower_bound: None,
        };
    }
    if entries.is_empty() {
        return SchemeBound {
            d,
            entries,
            lower_bound: Some(0),
        };
    }

    let mut ids: HashMap<&[usize], usize> = HashMap::new();
    let adj: Vec<Vec<usize>> = entries
        .iter()
        .map(|e| {
            e.def_set
                .iter()
                .map(|t| {
                    let next = ids.len();
                    *ids.entry(t.as_slice()).or_insert(next)
                })
                .collect()
        })
        .collect();
    let slots = ids.len();

    let (mut lo, mut hi) = (1, entries.len());
    let mut best = assign(&adj, slots, hi).expect("load = #types is always feasible");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match assign(&adj, slots, mid) {
            Some(a) => {
                hi = mid;
                best = a;
            }
            None => lo = mid + 1,
        }
    }
    let picks: Vec<usize> = entries
        .iter()
        .zip(best)
        .map(|(e, t)| adj_position(&e.def_set, &ids, t))
        .collect();
    drop(ids);
    for (e, k) in entries.iter_mut().zip(picks) {
        e.assigned = Some(e.def_set[k].clone());
    }
    SchemeBound {
        d,
        entries,
        lower_bound: Some(lo),
    }
}

fn adj_position(def_set: &[Vec<usize>], ids: &HashMap<&[usize], usize>, slot: usize) -> usize {
    def_set
        .iter()
        .position(|t| ids[t.as_slice()] == slot)
        .expect("assigned slot comes from the def set")
}

/// Assignment of every left vertex to a neighbour with no neighbour used
/// more than `cap` times, by augmenting paths on the capacity expansion.
fn assign(adj: &[Vec<usize>], slots: usize, cap: usize) -> Option<Vec<usize>> {
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); slots];
    let mut owner: Vec<usize> = vec![usize::MAX; adj.len()];
    for u in 0..adj.len() {
        let mut seen = vec![false; slots];
        if !augment(u, adj, cap, &mut holders, &mut owner, &mut seen) {
            return None;
        }
    }
    Some(owner)
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    cap: usize,
    holders: &mut [Vec<usize>],
    owner: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for &t in &adj[u] {
        if seen[t] {
            continue;
        }
        seen[t] = true;
        if holders[t].len() < cap {
            holders[t].push(u);
            owner[u] = t;
            return true;
        }
        for k in 0..holders[t].len() {
            let v = holders[t][k];
            if augment(v, adj, cap, holders, owner, seen) {
                holders[t][k] = u;
                owner[u] = t;
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(bit: bool) -> TypeTrace {
        TypeTrace::from_bits(1, 1, vec![bit])
    }

    #[test]
    fn single_type() {
        let b = min_scheme_count(vec![(trace(true), vec![vec![0]])], 1);
        assert_eq!(b.lower_bound, Some(1));
        assert_eq!(b.entries[0].assigned, Some(vec![0]));
    }

    #[test]
    fn shared_tuple_forces_load() {
        let input = (0..3).map(|i| (trace(i % 2 == 0), vec![vec![4]])).collect();
        assert_eq!(min_scheme_count(input, 1).lower_bound, Some(3));
    }

    #[test]
    fn spread_over_tuples() {
        let input = vec![
            (trace(true), vec![vec![0], vec![1]]),
            (trace(false), vec![vec![0]]),
            (trace(true), vec![vec![1], vec![2]]),
            (trace(false), vec![vec![0], vec![2]]),
        ];
        let b = min_scheme_count(input, 1);
        assert_eq!(b.lower_bound, Some(2));
        let mut load: HashMap<Vec<usize>, usize> = HashMap::new();
        for e in &b.entries {
            let t = e.assigned.clone().unwrap();
            assert!(e.def_set.contains(&t));
            *load.entry(t).or_default() += 1;
        }
        assert!(load.values().all(|&l| l <= 2));
    }

    #[test]
    fn empty_def_set_is_infinite() {
        let b = min_scheme_count(vec![(trace(true), vec![vec![0]]), (trace(false), vec![])], 1);
        assert!(b.is_infinite());
    }

    #[test]
    fn capacity_requires_reassignment() {
        // The first type grabs tuple 0; the third can only use 0, forcing a swap.
        let input = vec![
            (trace(true), vec![vec![0], vec![1]]),
            (trace(false), vec![vec![2]]),
            (trace(true), vec![vec![0]]),
        ];
        assert_eq!(min_scheme_count(input, 1).lower_bound, Some(1));
    }
}
