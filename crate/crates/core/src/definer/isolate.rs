use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{satisfier_set_with, Formula, Term};
use crate::model::{Element, PosetView};

/// Largest formula (in AST nodes) built while refining.
const SIZE_CAP: usize = 200_000;

/// A parameter-free formula in the free variable `x` whose satisfier set
/// contains the class; `exact` iff it equals the class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Isolation {
    pub formula: Formula,
    pub var: String,
    pub exact: bool,
    pub satisfiers: Vec<Element>,
}

const X: &str = "x";

fn bound_var(round: usize) -> String {
    format!("z{round}")
}

fn below(v: &str, x: &str) -> Formula {
    Formula::less(Term::var(v), Term::var(x))
}

fn above(v: &str, x: &str) -> Formula {
    Formula::less(Term::var(x), Term::var(v))
}

/// Tries, in order: the exact number of elements below, the exact number
/// above, both, and then formulas for iterated colour refinement of the
/// order (colour of `a` refined by the colour counts below and above `a`),
/// stopping at the quantifier-depth cap.
pub fn isolating_formula(p: &PosetView, class: &[Element], limits: &Limits) -> Result<Isolation> {
    let s = p.structure();
    let mut target = class.to_vec();
    target.sort_unstable();
    target.dedup();
    let Some(&rep) = target.first() else {
        return Err(Error::InvalidArgument("empty class".into()));
    };
    for &e in &target {
        s.check_element(e)?;
    }
    let z = bound_var(0);
    let down = Formula::exactly(p.down_set_size(rep), &z, below(&z, X));
    let up = Formula::exactly(p.up_set_size(rep), &z, above(&z, X));
    let mut first = None;
    for f in [down.clone(), up, down.and(Formula::exactly(p.up_set_size(rep), &z, above(&z, X)))] {
        let sat = satisfier_set_with(s, &f, X, limits)?;
        if sat == target {
            return Ok(Isolation {
                formula: f,
                var: X.into(),
                exact: true,
                satisfiers: sat,
            });
        }
        if !target.iter().all(|e| sat.binary_search(e).is_ok()) {
            return Err(Error::InvalidArgument(format!(
                "{target:?} is not a union of invariant classes"
            )));
        }
        first.get_or_insert((f, sat));
    }

    // Round r formulas have quantifier depth r + 1; leave room for the
    // quantifier the definer wraps around them.
    let max_round = limits.quantifier_depth.saturating_sub(3);
    let mut refine = Refinement::new(p);
    loop {
        let r = refine.rounds() - 1;
        let colour = refine.colour(r, rep);
        if refine.members(r, colour) == target {
            if let Some(f) = refine.formula(r, colour) {
                let sat = satisfier_set_with(s, &f, X, limits)?;
                if sat == target {
                    return Ok(Isolation {
                        formula: f,
                        var: X.into(),
                        exact: true,
                        satisfiers: sat,
                    });
                }
            }
            break;
        }
        if r >= max_round || !refine.step() {
            break;
        }
    }
    let (formula, satisfiers) = first.expect("at least one candidate was tried");
    Ok(Isolation {
        formula,
        var: X.into(),
        exact: false,
        satisfiers,
    })
}

/// Colour refinement of the order alone. Round 0 colours by (down, up)
/// counts; round `r+1` by the round-`r` colour and the round-`r` colour
/// counts below and above.
struct Refinement<'p> {
    p: &'p PosetView<'p>,
    colours: Vec<Vec<usize>>,
    memo: HashMap<(usize, usize), Option<Formula>>,
}

type Profile = (usize, Vec<(usize, usize)>, Vec<(usize, usize)>);

impl<'p> Refinement<'p> {
    fn new(p: &'p PosetView<'p>) -> Self {
        let n = p.len();
        let keys: Vec<(usize, usize)> = (0..n).map(|a| (p.down_set_size(a), p.up_set_size(a))).collect();
        Refinement {
            p,
            colours: vec![canonical(&keys)],
            memo: HashMap::new(),
        }
    }

    fn rounds(&self) -> usize {
        self.colours.len()
    }

    fn colour(&self, r: usize, a: Element) -> usize {
        self.colours[r][a]
    }

    fn members(&self, r: usize, c: usize) -> Vec<Element> {
        (0..self.p.len()).filter(|&a| self.colours[r][a] == c).collect()
    }

    fn profile(&self, r: usize, a: Element) -> Profile {
        let col = &self.colours[r];
        let mut lo: BTreeMap<usize, usize> = BTreeMap::new();
        let mut hi: BTreeMap<usize, usize> = BTreeMap::new();
        for b in 0..self.p.len() {
            if self.p.lt(b, a) {
                *lo.entry(col[b]).or_default() += 1;
            } else if self.p.lt(a, b) {
                *hi.entry(col[b]).or_default() += 1;
            }
        }
        (col[a], lo.into_iter().collect(), hi.into_iter().collect())
    }

    /// One more round; false when the partition is already stable.
    fn step(&mut self) -> bool {
        let r = self.rounds() - 1;
        let keys: Vec<Profile> = (0..self.p.len()).map(|a| self.profile(r, a)).collect();
        let next = canonical(&keys);
        let stable = count(&next) == count(&self.colours[r]);
        self.colours.push(next);
        !stable
    }

    fn count_of(&self, r: usize, a: Element, below_a: bool, c: usize) -> usize {
        (0..self.p.len())
            .filter(|&b| self.colours[r][b] == c && if below_a { self.p.lt(b, a) } else { self.p.lt(a, b) })
            .count()
    }

    /// Formula in `x` for colour `c` of round `r`; `None` past the size cap.
    fn formula(&mut self, r: usize, c: usize) -> Option<Formula> {
        if let Some(f) = self.memo.get(&(r, c)) {
            return f.clone();
        }
        let rep = (0..self.p.len()).find(|&a| self.colours[r][a] == c)?;
        let f = if r == 0 {
            let z = bound_var(0);
            Some(
                Formula::exactly(self.p.down_set_size(rep), &z, below(&z, X))
                    .and(Formula::exactly(self.p.up_set_size(rep), &z, above(&z, X))),
            )
        } else {
            self.refined_formula(r, c, rep)
        };
        let f = f.filter(|f| f.size() <= SIZE_CAP);
        self.memo.insert((r, c), f.clone());
        f
    }

    fn refined_formula(&mut self, r: usize, c: usize, rep: Element) -> Option<Formula> {
        let parent = self.colours[r - 1][rep];
        let mut siblings: Vec<Element> = Vec::new();
        let mut seen = Vec::new();
        for a in 0..self.p.len() {
            let col = self.colours[r][a];
            if col != c && self.colours[r - 1][a] == parent && !seen.contains(&col) {
                seen.push(col);
                siblings.push(a);
            }
        }
        let prev_colours = count(&self.colours[r - 1]);
        let options: Vec<(bool, usize)> = (0..prev_colours)
            .flat_map(|c2| [(true, c2), (false, c2)])
            .collect();
        let mut chosen: Vec<(bool, usize)> = Vec::new();
        while !siblings.is_empty() {
            let best = options
                .iter()
                .copied()
                .map(|(dir, c2)| {
                    let mine = self.count_of(r - 1, rep, dir, c2);
                    let hits = siblings
                        .iter()
                        .filter(|&&s| self.count_of(r - 1, s, dir, c2) != mine)
                        .count();
                    ((dir, c2), hits)
                })
                .max_by_key(|&(_, h)| h)?;
            if best.1 == 0 {
                return None;
            }
            let (dir, c2) = best.0;
            let mine = self.count_of(r - 1, rep, dir, c2);
            siblings.retain(|&s| self.count_of(r - 1, s, dir, c2) == mine);
            chosen.push(best.0);
        }
        let mut f = self.formula(r - 1, parent)?;
        let z = bound_var(r);
        for (dir, c2) in chosen {
            let inner = self.formula(r - 1, c2)?.rename(X, &z);
            let rel = if dir { below(&z, X) } else { above(&z, X) };
            let k = self.count_of(r - 1, rep, dir, c2);
            f = f.and(Formula::exactly(k, &z, rel.and(inner)));
            if f.size() > SIZE_CAP {
                return None;
            }
        }
        Some(f)
    }
}

fn canonical<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut ids: BTreeMap<K, usize> = BTreeMap::new();
    for k in keys {
        let next = ids.len();
        ids.entry(k.clone()).or_insert(next);
    }
    keys.iter().map(|k| ids[k]).collect()
}

fn count(colours: &[usize]) -> usize {
    colours.iter().max().map_or(0, |&m| m + 1)
}
