//! Finite relational structures and strict partial orders over them.
//!
//! Elements are dense indices `0..universe_size`. Relations are stored as
//! tuple sets; binary relations additionally keep a bit matrix so that
//! membership tests are O(1).

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::limits::Limits;

pub type Element = usize;

/// Conventional name of the order relation; the formula DSL's infix `<`.
pub const ORDER: &str = "<";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Vec<Element>>,
    matrix: Option<Vec<FixedBitSet>>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[Element]> + '_ {
        self.tuples.iter().map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Element]) -> bool {
        match (&self.matrix, tuple) {
            (Some(m), [a, b]) => m.get(*a).is_some_and(|row| row.contains(*b)),
            _ => self.tuples.contains(tuple),
        }
    }

    /// Row `a` of a binary relation: `{b : R(a, b)}`.
    pub fn row(&self, a: Element) -> Option<&FixedBitSet> {
        self.matrix.as_ref().and_then(|m| m.get(a))
    }
}

/// A finite universe with named finite relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    universe_size: usize,
    relations: BTreeMap<String, Relation>,
    labels: BTreeMap<String, Element>,
}

impl FiniteStructure {
    pub fn new(universe_size: usize) -> Self {
        FiniteStructure {
            universe_size,
            relations: BTreeMap::new(),
            labels: BTreeMap::new(),
        }
    }

    /// Adds a relation, checking arity and range of every tuple.
    pub fn add_relation<I>(&mut self, name: &str, arity: usize, tuples: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<Element>>,
    {
        if name.is_empty() {
            return Err(Error::InvalidStructure("empty relation name".into()));
        }
        if self.relations.contains_key(name) {
            return Err(Error::InvalidStructure(format!(
                "duplicate relation `{name}`"
            )));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(Error::ArityMismatch {
                    name: name.to_string(),
                    expected: arity,
                    actual: t.len(),
                });
            }
            if let Some(&e) = t.iter().find(|&&e| e >= self.universe_size) {
                return Err(Error::ElementOutOfRange {
                    element: e,
                    size: self.universe_size,
                });
            }
            set.insert(t);
        }
        let matrix = (arity == 2).then(|| {
            let mut m = vec![FixedBitSet::with_capacity(self.universe_size); self.universe_size];
            for t in &set {
                m[t[0]].insert(t[1]);
            }
            m
        });
        self.relations.insert(
            name.to_string(),
            Relation {
                arity,
                tuples: set,
                matrix,
            },
        );
        Ok(())
    }

    pub fn with_relation<I>(mut self, name: &str, arity: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<Element>>,
    {
        self.add_relation(name, arity, tuples)?;
        Ok(self)
    }

    /// Attaches human-readable labels. Labels are auxiliary: they only feed
    /// the file format and the `@label` syntax of the formula DSL.
    pub fn set_labels(&mut self, labels: BTreeMap<String, Element>) -> Result<()> {
        if let Some(&e) = labels.values().find(|&&e| e >= self.universe_size) {
            return Err(Error::ElementOutOfRange {
                element: e,
                size: self.universe_size,
            });
        }
        self.labels = labels;
        Ok(())
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> + '_ {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn signature(&self) -> Vec<(String, usize)> {
        self.relations
            .iter()
            .map(|(k, v)| (k.clone(), v.arity))
            .collect()
    }

    pub fn labels(&self) -> &BTreeMap<String, Element> {
        &self.labels
    }

    pub fn label_of(&self, e: Element) -> Option<&str> {
        self.labels
            .iter()
            .find(|(_, &v)| v == e)
            .map(|(k, _)| k.as_str())
    }

    pub fn check_element(&self, e: Element) -> Result<()> {
        if e < self.universe_size {
            Ok(())
        } else {
            Err(Error::ElementOutOfRange {
                element: e,
                size: self.universe_size,
            })
        }
    }

    /// Views `rel` as a strict partial order; see [`validate_poset`].
    pub fn poset(&self, rel: &str) -> Result<PosetView<'_>> {
        validate_poset(self, rel)
    }
}

/// Transitive closure of a binary relation on `0..n`.
pub fn transitive_closure(n: usize, pairs: &[(Element, Element)]) -> Vec<(Element, Element)> {
    let mut rows = vec![FixedBitSet::with_capacity(n); n];
    for &(a, b) in pairs {
        rows[a].insert(b);
    }
    for k in 0..n {
        let row_k = rows[k].clone();
        for row in rows.iter_mut() {
            if row.contains(k) {
                row.union_with(&row_k);
            }
        }
    }
    rows.iter()
        .enumerate()
        .flat_map(|(a, row)| row.ones().map(move |b| (a, b)))
        .collect()
}

/// A binary relation of a structure checked to be a strict partial order.
#[derive(Debug, Clone)]
pub struct PosetView<'a> {
    structure: &'a FiniteStructure,
    order: String,
    up: Vec<FixedBitSet>,
    down: Vec<FixedBitSet>,
}

/// Checks irreflexivity, asymmetry and transitivity, in that order, and
/// reports the first violation found.
pub fn validate_poset<'a>(s: &'a FiniteStructure, rel: &str) -> Result<PosetView<'a>> {
    let relation = s
        .relation(rel)
        .ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
    if relation.arity() != 2 {
        return Err(Error::ArityMismatch {
            name: rel.to_string(),
            expected: 2,
            actual: relation.arity(),
        });
    }
    let n = s.universe_size();
    let up: Vec<FixedBitSet> = (0..n)
        .map(|a| relation.row(a).cloned().unwrap_or_else(|| FixedBitSet::with_capacity(n)))
        .collect();
    for (a, row) in up.iter().enumerate() {
        if row.contains(a) {
            return Err(Error::NotAPoset(format!(
                "irreflexivity violated at ({a},{a})"
            )));
        }
    }
    for t in relation.tuples() {
        let (a, b) = (t[0], t[1]);
        if up[b].contains(a) {
            return Err(Error::NotAPoset(format!(
                "asymmetry violated at ({a},{b}),({b},{a})"
            )));
        }
    }
    for t in relation.tuples() {
        let (a, b) = (t[0], t[1]);
        if let Some(c) = up[b].difference(&up[a]).next() {
            return Err(Error::NotAPoset(format!(
                "transitivity violated: ({a},{b}),({b},{c}) present but ({a},{c}) absent"
            )));
        }
    }
    let mut down = vec![FixedBitSet::with_capacity(n); n];
    for (a, row) in up.iter().enumerate() {
        for b in row.ones() {
            down[b].insert(a);
        }
    }
    Ok(PosetView {
        structure: s,
        order: rel.to_string(),
        up,
        down,
    })
}

impl<'a> PosetView<'a> {
    pub fn structure(&self) -> &'a FiniteStructure {
        self.structure
    }

    pub fn order_name(&self) -> &str {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn lt(&self, a: Element, b: Element) -> bool {
        self.up[a].contains(b)
    }

    pub fn comparable(&self, a: Element, b: Element) -> bool {
        a == b || self.lt(a, b) || self.lt(b, a)
    }

    /// `{x : x < a}`
    pub fn down_set(&self, a: Element) -> &FixedBitSet {
        &self.down[a]
    }

    /// `{x : a < x}`
    pub fn up_set(&self, a: Element) -> &FixedBitSet {
        &self.up[a]
    }

    pub fn down_set_size(&self, a: Element) -> usize {
        self.down[a].count_ones(..)
    }

    pub fn up_set_size(&self, a: Element) -> usize {
        self.up[a].count_ones(..)
    }

    pub fn is_antichain(&self, set: &[Element]) -> bool {
        set.iter().enumerate().all(|(i, &a)| {
            set[i + 1..]
                .iter()
                .all(|&b| a == b || !(self.lt(a, b) || self.lt(b, a)))
        })
    }

    pub fn width(&self, limits: &Limits) -> Result<usize> {
        Ok(self.maximum_antichain(limits)?.len())
    }

    /// A maximum antichain, found as a maximum clique of the
    /// incomparability graph by branch and bound with greedy-colouring
    /// bounds. Deterministic.
    pub fn maximum_antichain(&self, limits: &Limits) -> Result<Vec<Element>> {
        let n = self.len();
        if n > limits.universe_cap {
            return Err(Error::ResourceCap(format!(
                "width search on {n} elements exceeds universe cap {}",
                limits.universe_cap
            )));
        }
        let mut full = FixedBitSet::with_capacity(n);
        full.insert_range(..);
        let adj: Vec<FixedBitSet> = (0..n)
            .map(|a| {
                let mut row = full.clone();
                row.difference_with(&self.up[a]);
                row.difference_with(&self.down[a]);
                row.set(a, false);
                row
            })
            .collect();
        let mut search = CliqueSearch {
            adj: &adj,
            best: Vec::new(),
        };
        search.expand(&mut Vec::new(), full);
        let mut best = search.best;
        best.sort_unstable();
        Ok(best)
    }
}

struct CliqueSearch<'g> {
    adj: &'g [FixedBitSet],
    best: Vec<Element>,
}

impl CliqueSearch<'_> {
    fn expand(&mut self, current: &mut Vec<Element>, mut cand: FixedBitSet) {
        let (order, bounds) = self.colour_sort(&cand);
        for idx in (0..order.len()).rev() {
            if current.len() + bounds[idx] <= self.best.len() {
                return;
            }
            let v = order[idx];
            current.push(v);
            let mut next = cand.clone();
            next.intersect_with(&self.adj[v]);
            if next.is_clear() {
                if current.len() > self.best.len() {
                    self.best = current.clone();
                }
            } else {
                self.expand(current, next);
            }
            current.pop();
            cand.set(v, false);
        }
    }

    // Greedy colouring; bounds[i] is the number of colours used up to order[i].
    fn colour_sort(&self, cand: &FixedBitSet) -> (Vec<Element>, Vec<usize>) {
        let mut uncoloured = cand.clone();
        let mut order = Vec::with_capacity(cand.count_ones(..));
        let mut bounds = Vec::with_capacity(order.capacity());
        let mut colour = 0;
        while !uncoloured.is_clear() {
            colour += 1;
            let mut available = uncoloured.clone();
            while let Some(v) = available.minimum() {
                available.set(v, false);
                available.difference_with(&self.adj[v]);
                uncoloured.set(v, false);
                order.push(v);
                bounds.push(colour);
            }
        }
        (order, bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> FiniteStructure {
        let pairs: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
            .collect();
        FiniteStructure::new(n).with_relation(ORDER, 2, pairs).unwrap()
    }

    #[test]
    fn two_chain_is_a_poset() {
        let s = FiniteStructure::new(2)
            .with_relation(ORDER, 2, vec![vec![0, 1]])
            .unwrap();
        let p = s.poset(ORDER).unwrap();
        assert!(p.lt(0, 1));
        assert!(!p.lt(1, 0));
    }

    #[test]
    fn asymmetry_violation_is_reported() {
        let s = FiniteStructure::new(2)
            .with_relation(ORDER, 2, vec![vec![0, 1], vec![1, 0]])
            .unwrap();
        let err = s.poset(ORDER).unwrap_err();
        assert_eq!(
            err,
            Error::NotAPoset("asymmetry violated at (0,1),(1,0)".into())
        );
    }

    #[test]
    fn transitivity_violation_is_reported() {
        let s = FiniteStructure::new(3)
            .with_relation(ORDER, 2, vec![vec![0, 1], vec![1, 2]])
            .unwrap();
        match s.poset(ORDER).unwrap_err() {
            Error::NotAPoset(msg) => assert!(msg.starts_with("transitivity violated")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn irreflexivity_violation_is_reported() {
        let s = FiniteStructure::new(1)
            .with_relation(ORDER, 2, vec![vec![0, 0]])
            .unwrap();
        assert!(matches!(s.poset(ORDER), Err(Error::NotAPoset(_))));
    }

    #[test]
    fn relation_checks() {
        let s = FiniteStructure::new(2);
        assert!(matches!(
            s.clone().with_relation("R", 2, vec![vec![0]]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            s.clone().with_relation("R", 1, vec![vec![2]]),
            Err(Error::ElementOutOfRange { .. })
        ));
        let s = s.with_relation("R", 1, vec![vec![1]]).unwrap();
        assert!(matches!(
            s.clone().with_relation("R", 1, vec![]),
            Err(Error::InvalidStructure(_))
        ));
        assert!(matches!(s.poset("R"), Err(Error::ArityMismatch { .. })));
        assert!(matches!(s.poset("S"), Err(Error::UnknownRelation(_))));
    }

    #[test]
    fn chain_measurements() {
        let s = chain(5);
        let p = s.poset(ORDER).unwrap();
        assert_eq!(p.width(&Limits::default()).unwrap(), 1);
        assert_eq!(p.down_set_size(0), 0);
        assert_eq!(p.down_set_size(4), 4);
        assert!(p.is_antichain(&[]));
        assert!(!p.is_antichain(&[1, 3]));
        let three = chain(3);
        assert_eq!(three.poset(ORDER).unwrap().down_set_size(2), 2);
    }

    #[test]
    fn closure_of_cover() {
        let closed = transitive_closure(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(closed.len(), 6);
        assert!(closed.contains(&(0, 3)));
    }

    #[test]
    fn antichain_width() {
        let s = FiniteStructure::new(6)
            .with_relation(ORDER, 2, Vec::<Vec<usize>>::new())
            .unwrap();
        let p = s.poset(ORDER).unwrap();
        assert_eq!(p.width(&Limits::default()).unwrap(), 6);
        let tight = Limits {
            universe_cap: 5,
            ..Limits::default()
        };
        assert!(matches!(p.width(&tight), Err(Error::ResourceCap(_))));
    }
}
