use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::logic::ast::{fresh_var, Formula, Term};

/// Rewrites every `∃^{≥k} v. φ` into plain first-order logic:
/// `∃v1 … ∃vk. φ(v1) ∧ … ∧ φ(vk) ∧ ⋀_{i<j} vi ≠ vj`.
pub fn expand_counting(f: &Formula) -> Result<Formula> {
    let mut avoid = f.all_vars();
    expand(f, &mut avoid)
}

fn expand(f: &Formula, avoid: &mut BTreeSet<String>) -> Result<Formula> {
    Ok(match f {
        Formula::Atom { .. } | Formula::Eq(..) => f.clone(),
        Formula::Not(g) => expand(g, avoid)?.not(),
        Formula::And(a, b) => expand(a, avoid)?.and(expand(b, avoid)?),
        Formula::Or(a, b) => expand(a, avoid)?.or(expand(b, avoid)?),
        Formula::Implies(a, b) => expand(a, avoid)?.implies(expand(b, avoid)?),
        Formula::Iff(a, b) => Formula::Iff(Box::new(expand(a, avoid)?), Box::new(expand(b, avoid)?)),
        Formula::Exists { var, body } => Formula::exists(var, expand(body, avoid)?),
        Formula::Forall { var, body } => Formula::forall(var, expand(body, avoid)?),
        Formula::CountExists { k, var, body } => {
            let body = expand(body, avoid)?;
            match *k {
                0 => return Err(Error::VacuousCount),
                1 => Formula::exists(var, body),
                k => {
                    let witnesses: Vec<String> = (0..k)
                        .map(|_| {
                            let v = fresh_var(var, avoid);
                            avoid.insert(v.clone());
                            v
                        })
                        .collect();
                    let instances = witnesses.iter().map(|w| body.rename(var, w));
                    let distinct = witnesses.iter().enumerate().flat_map(|(i, a)| {
                        witnesses[i + 1..]
                            .iter()
                            .map(move |b| Formula::eq(Term::var(a), Term::var(b)).not())
                    });
                    let matrix = Formula::conjunction(instances.chain(distinct))
                        .expect("k >= 2 witnesses");
                    witnesses
                        .iter()
                        .rev()
                        .fold(matrix, |acc, w| Formula::exists(w, acc))
                }
            }
        }
    })
}
