//! Automorphism groups of finite structures, point stabilizers and orbits.
//!
//! Generators of `Aut(s / fixed)` are found by an exhaustive
//! individualization-refinement search. Colour refinement is only used to
//! prune; every leaf is checked with [`is_automorphism`], and every coset of
//! the base-point stabilizer is searched unless its representative is
//! already reachable from the generators found so far. The result therefore
//! generates the full pointwise stabilizer.
//!
//! In a finite structure two tuples have the same complete type over a set
//! `F` iff some automorphism fixing `F` pointwise maps one to the other, so
//! the orbits computed here are exactly the type classes over `F`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{Element, FiniteStructure};

/// A bijection of the universe, stored as its image array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(Vec<Element>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<Element>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &e in &images {
            if e >= n || std::mem::replace(&mut seen[e], true) {
                return Err(Error::InvalidArgument(format!(
                    "image array {images:?} is not a bijection"
                )));
            }
        }
        Ok(Permutation(images))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[Element] {
        &self.0
    }

    pub fn apply(&self, e: Element) -> Element {
        self.0[e]
    }

    pub fn apply_tuple(&self, t: &[Element]) -> Vec<Element> {
        t.iter().map(|&e| self.0[e]).collect()
    }

    /// `self` followed by `next`: `x ↦ next(self(x))`.
    pub fn then(&self, next: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&e| next.0[e]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &e) in self.0.iter().enumerate() {
            inv[e] = i;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &e)| i == e)
    }

    pub fn fixed_points(&self) -> Vec<Element> {
        (0..self.0.len()).filter(|&i| self.0[i] == i).collect()
    }

    pub fn fixes_all(&self, elements: &[Element]) -> bool {
        elements.iter().all(|&e| self.0.get(e) == Some(&e))
    }
}

/// True iff `pi` maps every relation onto itself.
pub fn is_automorphism(s: &FiniteStructure, pi: &Permutation) -> Result<bool> {
    if pi.len() != s.universe_size() {
        return Err(Error::InvalidArgument(format!(
            "permutation of length {} on universe of size {}",
            pi.len(),
            s.universe_size()
        )));
    }
    // A bijection maps distinct tuples to distinct tuples, so forward
    // preservation of a finite relation implies preservation both ways.
    Ok(s.relations().all(|(_, rel)| {
        rel.tuples()
            .all(|t| rel.contains(&pi.apply_tuple(t)))
    }))
}

/// Orbits of the group generated by a set of automorphisms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitPartition {
    /// The pointwise-stabilized elements.
    pub fixed: Vec<Element>,
    /// Orbits, each sorted, ordered by least element.
    pub orbits: Vec<Vec<Element>>,
    #[serde(skip)]
    orbit_of: Vec<usize>,
}

impl OrbitPartition {
    pub fn from_generators(n: usize, fixed: &[Element], gens: &[Permutation]) -> Self {
        let mut uf = UnionFind::new(n);
        for g in gens {
            for e in 0..n {
                uf.union(e, g.apply(e));
            }
        }
        let mut groups: BTreeMap<Element, Vec<Element>> = BTreeMap::new();
        for e in 0..n {
            groups.entry(uf.find(e)).or_default().push(e);
        }
        let mut orbits: Vec<Vec<Element>> = groups.into_values().collect();
        orbits.sort_by_key(|o| o[0]);
        let mut orbit_of = vec![0; n];
        for (i, o) in orbits.iter().enumerate() {
            for &e in o {
                orbit_of[e] = i;
            }
        }
        let mut fixed = fixed.to_vec();
        fixed.sort_unstable();
        fixed.dedup();
        OrbitPartition {
            fixed,
            orbits,
            orbit_of,
        }
    }

    pub fn orbit_of(&self, e: Element) -> &[Element] {
        &self.orbits[self.orbit_of[e]]
    }

    pub fn orbit_index(&self, e: Element) -> usize {
        self.orbit_of[e]
    }

    pub fn same_orbit(&self, a: Element, b: Element) -> bool {
        self.orbit_of[a] == self.orbit_of[b]
    }

    pub fn is_discrete(&self) -> bool {
        self.orbits.len() == self.orbit_of.len()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so roots are orbit minima.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Tuple incidences used by colour refinement.
struct Incidence {
    tuples: Vec<(u32, Vec<Element>)>,
    by_element: Vec<Vec<u32>>,
}

/// Own colour, then sorted (relation, position, co-member colours) incidences.
type Signature = (u32, Vec<(u32, u32, Vec<u32>)>);

impl Incidence {
    fn new(s: &FiniteStructure) -> Self {
        let mut tuples = Vec::new();
        let mut by_element = vec![Vec::new(); s.universe_size()];
        for (r, (_, rel)) in s.relations().enumerate() {
            for t in rel.tuples() {
                let idx = tuples.len() as u32;
                let mut seen: Vec<Element> = t.to_vec();
                seen.sort_unstable();
                seen.dedup();
                for e in seen {
                    by_element[e].push(idx);
                }
                tuples.push((r as u32, t.to_vec()));
            }
        }
        Incidence { tuples, by_element }
    }

    fn signature(&self, e: Element, colours: &[u32]) -> Signature {
        let mut items: Vec<(u32, u32, Vec<u32>)> = self.by_element[e]
            .iter()
            .map(|&ti| {
                let (rel, t) = &self.tuples[ti as usize];
                let mask = t
                    .iter()
                    .enumerate()
                    .filter(|&(_, &x)| x == e)
                    .fold(0u32, |m, (i, _)| m | (1 << i));
                (*rel, mask, t.iter().map(|&x| colours[x]).collect())
            })
            .collect();
        items.sort_unstable();
        (colours[e], items)
    }

    /// Refines all colourings jointly, naming colours by the sorted union of
    /// signatures so that colour ids are comparable across colourings.
    /// Returns false as soon as colour histograms disagree.
    fn refine_joint(&self, colourings: &mut [Vec<u32>]) -> bool {
        let n = self.by_element.len();
        loop {
            let before = distinct(&colourings[0]);
            let sigs: Vec<Vec<_>> = colourings
                .iter()
                .map(|c| (0..n).map(|e| self.signature(e, c)).collect())
                .collect();
            let mut table: Vec<&Signature> = sigs.iter().flatten().collect();
            table.sort_unstable();
            table.dedup();
            for (c, side) in colourings.iter_mut().zip(&sigs) {
                for (e, sig) in side.iter().enumerate() {
                    c[e] = table.binary_search(&sig).expect("signature in table") as u32;
                }
            }
            let first = histogram(&colourings[0]);
            if colourings[1..].iter().any(|c| histogram(c) != first) {
                return false;
            }
            if distinct(&colourings[0]) == before {
                return true;
            }
        }
    }
}

fn distinct(c: &[u32]) -> usize {
    let mut v = c.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn histogram(c: &[u32]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for &x in c {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

fn initial_colouring(n: usize, fixed: &[Element]) -> Vec<u32> {
    let mut c = vec![0u32; n];
    for (i, &e) in fixed.iter().enumerate() {
        if c[e] == 0 {
            c[e] = i as u32 + 1;
        }
    }
    c
}

fn individualize(c: &[u32], e: Element) -> Vec<u32> {
    let fresh = c.iter().max().map_or(0, |m| m + 1);
    let mut out = c.to_vec();
    out[e] = fresh;
    out
}

/// Smallest non-singleton colour class, as a sorted element list.
fn target_cell(c: &[u32]) -> Option<Vec<Element>> {
    let h = histogram(c);
    let colour = h.iter().find(|&(_, &count)| count > 1).map(|(&k, _)| k)?;
    Some((0..c.len()).filter(|&e| c[e] == colour).collect())
}

/// The equitable colouring obtained by individualizing `fixed` and refining.
/// Colours are canonical: an automorphism fixing `fixed` preserves them.
pub fn refined_colours(s: &FiniteStructure, fixed: &[Element]) -> Result<Vec<u32>> {
    for &e in fixed {
        s.check_element(e)?;
    }
    let inc = Incidence::new(s);
    let mut c = [initial_colouring(s.universe_size(), fixed)];
    inc.refine_joint(&mut c);
    let [c] = c;
    Ok(c)
}

struct Search<'a> {
    s: &'a FiniteStructure,
    inc: Incidence,
    nodes: usize,
    budget: usize,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(Error::ResourceCap(format!(
                "automorphism search exceeded node budget {}",
                self.budget
            )))
        } else {
            Ok(())
        }
    }

    fn stabilizer(&mut self, fixed: &[Element]) -> Result<Vec<Permutation>> {
        self.tick()?;
        let mut c = [initial_colouring(self.s.universe_size(), fixed)];
        self.inc.refine_joint(&mut c);
        let [colours] = c;
        let Some(cell) = target_cell(&colours) else {
            return Ok(Vec::new());
        };
        let v = cell[0];
        let mut next_fixed = fixed.to_vec();
        next_fixed.push(v);
        let mut gens = self.stabilizer(&next_fixed)?;
        let n = self.s.universe_size();
        let mut uf = UnionFind::new(n);
        for g in &gens {
            for e in 0..n {
                uf.union(e, g.apply(e));
            }
        }
        for &w in &cell[1..] {
            if uf.find(v) == uf.find(w) {
                continue;
            }
            let mut pair = [individualize(&colours, v), individualize(&colours, w)];
            if !self.inc.refine_joint(&mut pair) {
                continue;
            }
            let [left, right] = pair;
            if let Some(pi) = self.isomorphism(left, right)? {
                for e in 0..n {
                    uf.union(e, pi.apply(e));
                }
                gens.push(pi);
            }
        }
        Ok(gens)
    }

    /// Some automorphism mapping the left colouring onto the right one.
    fn isomorphism(&mut self, left: Vec<u32>, right: Vec<u32>) -> Result<Option<Permutation>> {
        self.tick()?;
        let Some(cell) = target_cell(&left) else {
            let mut by_colour = vec![0; left.len()];
            for (e, &c) in right.iter().enumerate() {
                by_colour[c as usize] = e;
            }
            let pi = Permutation(left.iter().map(|&c| by_colour[c as usize]).collect());
            return Ok(is_automorphism(self.s, &pi)?.then_some(pi));
        };
        let u = cell[0];
        let colour = left[u];
        let candidates: Vec<Element> = (0..right.len()).filter(|&e| right[e] == colour).collect();
        for r in candidates {
            let mut pair = [individualize(&left, u), individualize(&right, r)];
            if !self.inc.refine_joint(&mut pair) {
                continue;
            }
            let [l, rr] = pair;
            if let Some(pi) = self.isomorphism(l, rr)? {
                return Ok(Some(pi));
            }
        }
        Ok(None)
    }
}

/// Generators of the automorphisms of `s` fixing `fixed` pointwise, sorted by
/// image array. The empty list means the trivial group.
pub fn automorphism_generators(
    s: &FiniteStructure,
    fixed: &[Element],
    limits: &Limits,
) -> Result<Vec<Permutation>> {
    for &e in fixed {
        s.check_element(e)?;
    }
    let mut search = Search {
        s,
        inc: Incidence::new(s),
        nodes: 0,
        budget: limits.node_budget,
    };
    let mut gens = search.stabilizer(fixed)?;
    gens.sort();
    gens.dedup();
    Ok(gens)
}

pub fn orbits(s: &FiniteStructure, fixed: &[Element], limits: &Limits) -> Result<OrbitPartition> {
    let gens = automorphism_generators(s, fixed, limits)?;
    Ok(OrbitPartition::from_generators(
        s.universe_size(),
        fixed,
        &gens,
    ))
}

/// All elements of the group generated by `gens`, or a resource error once
/// more than `cap` elements are found.
pub fn group_elements(n: usize, gens: &[Permutation], cap: usize) -> Result<Vec<Permutation>> {
    let id = Permutation::identity(n);
    let mut seen = std::collections::HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(p) = queue.pop_front() {
        for g in gens {
            let q = p.then(g);
            if seen.insert(q.clone()) {
                if seen.len() > cap {
                    return Err(Error::ResourceCap(format!(
                        "group has more than {cap} elements"
                    )));
                }
                queue.push_back(q);
            }
        }
    }
    let mut all: Vec<_> = seen.into_iter().collect();
    all.sort();
    Ok(all)
}

/// Orbit classes of `tuples` under the group generated by `gens`, acting
/// coordinatewise. Two listed tuples share a class iff some group element
/// maps one to the other (intermediate tuples need not be listed).
pub fn tuple_orbit_classes(gens: &[Permutation], tuples: &[Vec<Element>]) -> Vec<usize> {
    let index: HashMap<&[Element], usize> = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_slice(), i))
        .collect();
    let mut class = vec![usize::MAX; tuples.len()];
    let mut next = 0;
    for start in 0..tuples.len() {
        if class[start] != usize::MAX {
            continue;
        }
        let mut seen = std::collections::HashSet::from([tuples[start].clone()]);
        let mut queue = VecDeque::from([tuples[start].clone()]);
        while let Some(t) = queue.pop_front() {
            if let Some(&i) = index.get(t.as_slice()) {
                class[i] = next;
            }
            for g in gens {
                let u = g.apply_tuple(&t);
                if seen.insert(u.clone()) {
                    queue.push_back(u);
                }
            }
        }
        next += 1;
    }
    class
}

/// A group element mapping tuple `from` to tuple `to`, if one exists.
pub fn connecting_element(
    n: usize,
    gens: &[Permutation],
    from: &[Element],
    to: &[Element],
) -> Option<Permutation> {
    let mut reached: HashMap<Vec<Element>, Permutation> =
        HashMap::from([(from.to_vec(), Permutation::identity(n))]);
    let mut queue = VecDeque::from([from.to_vec()]);
    while let Some(t) = queue.pop_front() {
        let p = reached[&t].clone();
        if t == to {
            return Some(p);
        }
        for g in gens {
            let u = g.apply_tuple(&t);
            if !reached.contains_key(&u) {
                reached.insert(u.clone(), p.then(g));
                queue.push_back(u);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{make_grid_order, make_hypercube_poset, GridOrderSpec, HypercubePosetSpec};
    use crate::model::ORDER;

    fn chain(n: usize) -> FiniteStructure {
        let pairs: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| vec![a, b]))
            .collect();
        FiniteStructure::new(n).with_relation(ORDER, 2, pairs).unwrap()
    }

    #[test]
    fn chain_is_rigid() {
        let s = chain(3);
        let gens = automorphism_generators(&s, &[], &Limits::default()).unwrap();
        assert!(gens.is_empty());
        let swap = Permutation::from_images(vec![2, 1, 0]).unwrap();
        assert!(!is_automorphism(&s, &swap).unwrap());
        assert!(is_automorphism(&s, &Permutation::identity(3)).unwrap());
        assert!(is_automorphism(&s, &Permutation::identity(2)).is_err());
    }

    #[test]
    fn hypercube_one_group_and_orbits() {
        let h = make_hypercube_poset(HypercubePosetSpec { d: 1 }).unwrap();
        let limits = Limits::default();
        let gens = automorphism_generators(&h.structure, &[], &limits).unwrap();
        assert_eq!(group_elements(8, &gens, 1000).unwrap().len(), 8);
        let orb = orbits(&h.structure, &[], &limits).unwrap();
        assert_eq!(orb.orbits, vec![h.points.clone(), h.hyperplanes.clone()]);
    }

    #[test]
    fn coordinate_flips_are_automorphisms() {
        for d in 1..=3 {
            let h = make_hypercube_poset(HypercubePosetSpec { d }).unwrap();
            for i in 0..=d {
                let sigma = h.coordinate_flip(i);
                assert!(is_automorphism(&h.structure, &sigma).unwrap());
                let fixed = sigma.fixed_points();
                assert!(fixed.iter().all(|e| h.hyperplanes.contains(e)));
                assert_eq!(fixed.len(), 2 * d);
            }
        }
    }

    #[test]
    fn grid_copy_permutations_are_in_the_group() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let gens = automorphism_generators(&g.structure, &[], &Limits::default()).unwrap();
        let group = group_elements(15, &gens, 100).unwrap();
        assert_eq!(group.len(), 6);
        for copies in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            assert!(group.contains(&g.copy_permutation(&copies)));
        }
        let orb = orbits(&g.structure, &[g.spec.index(2, 0)], &Limits::default()).unwrap();
        assert_eq!(
            orb.orbit_of(g.spec.index(0, 1)),
            &[g.spec.index(0, 1), g.spec.index(0, 2)]
        );
    }

    #[test]
    fn fixing_everything_gives_singletons() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 2 }).unwrap();
        let all: Vec<_> = (0..10).collect();
        let orb = orbits(&g.structure, &all, &Limits::default()).unwrap();
        assert!(orb.is_discrete());
    }

    #[test]
    fn node_budget_aborts() {
        let h = make_hypercube_poset(HypercubePosetSpec { d: 2 }).unwrap();
        let limits = Limits {
            node_budget: 3,
            ..Limits::default()
        };
        assert!(matches!(
            automorphism_generators(&h.structure, &[], &limits),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn tuple_orbits_and_connecting_elements() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        let gens = automorphism_generators(&g.structure, &[], &Limits::default()).unwrap();
        let tuples = vec![vec![0, 1], vec![1, 2], vec![0, 3]];
        let classes = tuple_orbit_classes(&gens, &tuples);
        assert_eq!(classes[0], classes[1]);
        assert_ne!(classes[0], classes[2]);
        let sigma = connecting_element(15, &gens, &[0, 1], &[1, 2]).unwrap();
        assert_eq!(sigma.apply_tuple(&[0, 1]), vec![1, 2]);
        assert!(connecting_element(15, &gens, &[0], &[3]).is_none());
    }
}
