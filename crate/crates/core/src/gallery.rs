//! Deterministic generators: the grid order (a discretization of three or
//! more offset copies of the real line), the hypercube membership poset, and
//! seeded random posets of prescribed width.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{transitive_closure, Element, FiniteStructure, PosetView, ORDER};
use crate::symmetry::Permutation;

const HYPERCUBE_MAX_D: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridOrderSpec {
    /// Grid granularity: the coordinate range is `0..=4n`.
    pub n: usize,
    /// Number of copies.
    pub k: usize,
}

/// `{0..4n} × {0..k}` with `(x,i) < (y,j)` iff `x < y` on the same copy,
/// or `x + 2n < y` across copies. Element `(x,i)` has index `x·k + i`.
#[derive(Debug, Clone)]
pub struct GridOrder {
    pub spec: GridOrderSpec,
    pub structure: FiniteStructure,
    /// Copies 1 and 2 in full plus the distinguished point `(2n, 0)`.
    pub params: Vec<Element>,
    /// `{(x, 0) : 2n < x < 4n}`.
    pub realizers: Vec<Element>,
}

impl GridOrderSpec {
    pub fn index(&self, x: usize, copy: usize) -> Element {
        x * self.k + copy
    }

    pub fn coords(&self, e: Element) -> (usize, usize) {
        (e / self.k, e % self.k)
    }

    pub fn less(&self, (x, i): (usize, usize), (y, j): (usize, usize)) -> bool {
        if i == j {
            x < y
        } else {
            x + 2 * self.n < y
        }
    }

    pub fn universe_size(&self) -> usize {
        (4 * self.n + 1) * self.k
    }

    /// The distinguished parameter `(2n, 0)`.
    pub fn midpoint(&self) -> Element {
        self.index(2 * self.n, 0)
    }
}

pub fn make_grid_order(spec: GridOrderSpec) -> Result<GridOrder> {
    if spec.n == 0 {
        return Err(Error::InvalidArgument("grid order needs n >= 1".into()));
    }
    if spec.k < 2 {
        return Err(Error::InvalidArgument("grid order needs k >= 2".into()));
    }
    let size = spec.universe_size();
    let top = 4 * spec.n;
    let mut pairs = Vec::new();
    let mut labels = BTreeMap::new();
    for a in 0..size {
        let ca = spec.coords(a);
        labels.insert(format!("g{}_{}", ca.0, ca.1), a);
        for b in 0..size {
            if spec.less(ca, spec.coords(b)) {
                pairs.push(vec![a, b]);
            }
        }
    }
    let mut structure = FiniteStructure::new(size).with_relation(ORDER, 2, pairs)?;
    structure.set_labels(labels)?;

    // With k = 2 only copy 1 is available.
    let mut params: Vec<Element> = (0..=top)
        .flat_map(|x| (1..spec.k.min(3)).map(move |c| spec.index(x, c)))
        .collect();
    params.push(spec.midpoint());
    params.sort_unstable();
    let realizers = (2 * spec.n + 1..top).map(|x| spec.index(x, 0)).collect();
    Ok(GridOrder {
        spec,
        structure,
        params,
        realizers,
    })
}

impl GridOrder {
    pub fn poset(&self) -> PosetView<'_> {
        self.structure
            .poset(ORDER)
            .expect("grid order is a strict partial order")
    }

    /// The map `(x, i) ↦ (x, copies[i])`.
    pub fn copy_permutation(&self, copies: &[usize]) -> Permutation {
        let spec = self.spec;
        let images = (0..spec.universe_size())
            .map(|e| {
                let (x, i) = spec.coords(e);
                spec.index(x, copies[i])
            })
            .collect();
        Permutation::from_images(images).expect("copy permutation is a bijection")
    }

    /// Exchanges copies `i` and `j`, fixing every other copy pointwise.
    pub fn copy_swap(&self, i: usize, j: usize) -> Permutation {
        let mut copies: Vec<usize> = (0..self.spec.k).collect();
        copies.swap(i, j);
        self.copy_permutation(&copies)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypercubePosetSpec {
    pub d: usize,
}

/// Points `{±1}^(d+1)` and half-spaces `H(i, ε) = {a : a_i = ε}` ordered by
/// membership.
///
/// Encoding: points come first, in lexicographic sign order with `+1` before
/// `-1` (so the all-`+1` point is element 0); then `H(0,+1), H(0,-1),
/// H(1,+1), ...`.
#[derive(Debug, Clone)]
pub struct HypercubePoset {
    pub spec: HypercubePosetSpec,
    pub structure: FiniteStructure,
    pub points: Vec<Element>,
    pub hyperplanes: Vec<Element>,
}

impl HypercubePosetSpec {
    pub fn dims(&self) -> usize {
        self.d + 1
    }

    pub fn point_count(&self) -> usize {
        1 << self.dims()
    }

    /// Sign of coordinate `i` of point `p`.
    pub fn sign(&self, p: Element, i: usize) -> i8 {
        if (p >> (self.d - i)) & 1 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn point(&self, signs: &[i8]) -> Element {
        assert_eq!(signs.len(), self.dims());
        signs
            .iter()
            .fold(0, |acc, &s| (acc << 1) | usize::from(s < 0))
    }

    pub fn hyperplane(&self, i: usize, eps: i8) -> Element {
        self.point_count() + 2 * i + usize::from(eps < 0)
    }

    pub fn universe_size(&self) -> usize {
        self.point_count() + 2 * self.dims()
    }
}

pub fn make_hypercube_poset(spec: HypercubePosetSpec) -> Result<HypercubePoset> {
    if spec.d == 0 {
        return Err(Error::InvalidArgument("hypercube poset needs d >= 1".into()));
    }
    if spec.d > HYPERCUBE_MAX_D {
        return Err(Error::ResourceCap(format!(
            "hypercube poset with d = {} exceeds d <= {HYPERCUBE_MAX_D}",
            spec.d
        )));
    }
    let points: Vec<Element> = (0..spec.point_count()).collect();
    let mut hyperplanes = Vec::new();
    let mut pairs = Vec::new();
    let mut labels = BTreeMap::new();
    for &p in &points {
        let name: String = (0..spec.dims())
            .map(|i| if spec.sign(p, i) > 0 { 'p' } else { 'm' })
            .collect();
        labels.insert(format!("p{name}"), p);
    }
    for i in 0..spec.dims() {
        for eps in [1i8, -1] {
            let h = spec.hyperplane(i, eps);
            hyperplanes.push(h);
            labels.insert(format!("h{i}{}", if eps > 0 { 'p' } else { 'm' }), h);
            for &p in &points {
                if spec.sign(p, i) == eps {
                    pairs.push(vec![p, h]);
                }
            }
        }
    }
    let mut structure =
        FiniteStructure::new(spec.universe_size()).with_relation(ORDER, 2, pairs)?;
    structure.set_labels(labels)?;
    Ok(HypercubePoset {
        spec,
        structure,
        points,
        hyperplanes,
    })
}

impl HypercubePoset {
    pub fn poset(&self) -> PosetView<'_> {
        self.structure
            .poset(ORDER)
            .expect("membership order is a strict partial order")
    }

    /// The all-`+1` point.
    pub fn constant_point(&self) -> Element {
        0
    }

    /// Flip coordinate `i` on points, swap `H(i,+1)` with `H(i,-1)`, fix the
    /// other half-spaces.
    pub fn coordinate_flip(&self, i: usize) -> Permutation {
        let spec = self.spec;
        let mut images: Vec<Element> = (0..spec.universe_size()).collect();
        for &p in &self.points {
            images[p] = p ^ (1 << (spec.d - i));
        }
        let (plus, minus) = (spec.hyperplane(i, 1), spec.hyperplane(i, -1));
        images[plus] = minus;
        images[minus] = plus;
        Permutation::from_images(images).expect("coordinate flip is a bijection")
    }
}

/// A seeded random poset of width exactly `width_target` on `size` elements.
///
/// Layered random DAG with layers of at most `width_target` elements (one
/// layer of exactly that size), edges between consecutive layers plus a few
/// long-range ones, transitively closed, then accepted only if its width is
/// exactly the target.
pub fn random_width_poset(
    width_target: usize,
    size: usize,
    seed: u64,
    limits: &Limits,
) -> Result<FiniteStructure> {
    if width_target == 0 {
        return Err(Error::InvalidArgument("width target must be >= 1".into()));
    }
    if size < width_target {
        return Err(Error::InvalidArgument(format!(
            "size {size} < width target {width_target}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..limits.max_rejections.max(1) {
        let s = random_layered(width_target, size, &mut rng)?;
        if s.poset(ORDER)?.width(limits)? == width_target {
            return Ok(s);
        }
    }
    Err(Error::ResourceCap(format!(
        "no poset of width {width_target} on {size} elements after {} rejections",
        limits.max_rejections
    )))
}

fn random_layered(width: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<FiniteStructure> {
    let mut layer_sizes = vec![width];
    let mut remaining = size - width;
    while remaining > 0 {
        let take = rng.random_range(1..=width.min(remaining));
        layer_sizes.push(take);
        remaining -= take;
    }
    layer_sizes.shuffle(rng);

    let mut layers: Vec<Vec<Element>> = Vec::new();
    let mut next = 0;
    for &len in &layer_sizes {
        layers.push((next..next + len).collect());
        next += len;
    }
    // Random relabelling so that index order does not leak the layering.
    let mut relabel: Vec<Element> = (0..size).collect();
    relabel.shuffle(rng);

    let mut pairs = Vec::new();
    for l in 1..layers.len() {
        for &b in &layers[l] {
            let prev = &layers[l - 1];
            let mut linked = false;
            for &a in prev {
                if rng.random_bool(0.6) {
                    pairs.push((a, b));
                    linked = true;
                }
            }
            if !linked {
                pairs.push((prev[rng.random_range(0..prev.len())], b));
            }
            for earlier in &layers[..l - 1] {
                for &a in earlier {
                    if rng.random_bool(0.15) {
                        pairs.push((a, b));
                    }
                }
            }
        }
    }
    let closed = transitive_closure(size, &pairs);
    FiniteStructure::new(size).with_relation(
        ORDER,
        2,
        closed.into_iter().map(|(a, b)| vec![relabel[a], relabel[b]]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes_and_sets() {
        let g = make_grid_order(GridOrderSpec { n: 1, k: 3 }).unwrap();
        assert_eq!(g.structure.universe_size(), 15);
        let g2 = make_grid_order(GridOrderSpec { n: 2, k: 3 }).unwrap();
        assert_eq!(g2.structure.universe_size(), 27);
        // 9 points on each of copies 1 and 2, plus (4, 0)
        assert_eq!(g2.params.len(), 19);
        assert!(g2.params.contains(&g2.spec.index(4, 0)));
        assert_eq!(
            g2.realizers,
            vec![g2.spec.index(5, 0), g2.spec.index(6, 0), g2.spec.index(7, 0)]
        );
    }

    #[test]
    fn grid_rejects_bad_specs() {
        assert!(make_grid_order(GridOrderSpec { n: 0, k: 3 }).is_err());
        assert!(make_grid_order(GridOrderSpec { n: 1, k: 1 }).is_err());
    }

    #[test]
    fn grid_widths() {
        let limits = Limits::default();
        for (n, k) in [(1, 3), (1, 2), (2, 4)] {
            let g = make_grid_order(GridOrderSpec { n, k }).unwrap();
            assert_eq!(g.poset().width(&limits).unwrap(), k);
        }
    }

    #[test]
    fn hypercube_encoding() {
        let h = make_hypercube_poset(HypercubePosetSpec { d: 1 }).unwrap();
        assert_eq!(h.structure.universe_size(), 8);
        let spec = h.spec;
        assert_eq!(spec.point(&[1, 1]), 0);
        assert_eq!(spec.point(&[-1, 1]), 2);
        assert_eq!(spec.hyperplane(0, 1), 4);
        assert_eq!(spec.hyperplane(1, -1), 7);
        let p = h.poset();
        assert!(p.lt(0, spec.hyperplane(0, 1)));
        assert!(!p.lt(0, spec.hyperplane(0, -1)));
        assert_eq!(p.down_set_size(0), 0);
        assert!(p.is_antichain(&h.points));
        assert_eq!(h.structure.labels()["ppm"], spec.point(&[1, -1]));
    }

    #[test]
    fn hypercube_guards() {
        assert!(make_hypercube_poset(HypercubePosetSpec { d: 0 }).is_err());
        assert!(matches!(
            make_hypercube_poset(HypercubePosetSpec { d: 11 }),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn random_poset_width_and_determinism() {
        let limits = Limits::default();
        let chain = random_width_poset(1, 6, 3, &limits).unwrap();
        assert_eq!(chain.relation(ORDER).unwrap().len(), 15);
        let a = random_width_poset(3, 12, 42, &limits).unwrap();
        let b = random_width_poset(3, 12, 42, &limits).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.poset(ORDER).unwrap().width(&limits).unwrap(), 3);
        assert!(random_width_poset(5, 4, 0, &limits).is_err());
    }
}
