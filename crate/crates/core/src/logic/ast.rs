use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Element, ORDER};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    /// An element of the structure used as a parameter.
    Const(Element),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }
}

/// First-order formulas with element constants and a counting quantifier
/// `∃^{≥k}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom { rel: String, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists { var: String, body: Box<Formula> },
    Forall { var: String, body: Box<Formula> },
    /// At least `k` distinct witnesses.
    CountExists { k: usize, var: String, body: Box<Formula> },
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<Term>) -> Formula {
        Formula::Atom {
            rel: rel.to_string(),
            args,
        }
    }

    /// `a < b` over the conventional order relation.
    pub fn less(a: Term, b: Term) -> Formula {
        Formula::atom(ORDER, vec![a, b])
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    /// `v = v`, the tautology used when an empty conjunction is needed.
    pub fn truth(var: &str) -> Formula {
        Formula::Eq(Term::var(var), Term::var(var))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn exists(var: &str, body: Formula) -> Formula {
        Formula::Exists {
            var: var.to_string(),
            body: Box::new(body),
        }
    }

    pub fn forall(var: &str, body: Formula) -> Formula {
        Formula::Forall {
            var: var.to_string(),
            body: Box::new(body),
        }
    }

    pub fn count_exists(k: usize, var: &str, body: Formula) -> Formula {
        Formula::CountExists {
            k,
            var: var.to_string(),
            body: Box::new(body),
        }
    }

    /// Exactly `k` witnesses, via the counting quantifier.
    pub fn exactly(k: usize, var: &str, body: Formula) -> Formula {
        let at_most = Formula::count_exists(k + 1, var, body.clone()).not();
        if k == 0 {
            Formula::exists(var, body).not()
        } else {
            Formula::count_exists(k, var, body).and(at_most)
        }
    }

    /// Left-nested conjunction; `None` for an empty iterator.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn disjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Option<Formula> {
        parts.into_iter().reduce(Formula::or)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term, bound: &Vec<String>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Atom { args, .. } => args.iter().for_each(|t| term(t, bound)),
            Formula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists { var, body }
            | Formula::Forall { var, body }
            | Formula::CountExists { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name occurring, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { args, .. } => args.iter().for_each(|t| {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }),
            Formula::Eq(a, b) => [a, b].into_iter().for_each(|t| {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }),
            Formula::Exists { var, .. }
            | Formula::Forall { var, .. }
            | Formula::CountExists { var, .. } => {
                out.insert(var.clone());
            }
            _ => {}
        });
        out
    }

    /// Distinct element constants, i.e. the parameters of the formula.
    pub fn constants(&self) -> BTreeSet<Element> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            let terms: Vec<&Term> = match f {
                Formula::Atom { args, .. } => args.iter().collect(),
                Formula::Eq(a, b) => vec![a, b],
                _ => vec![],
            };
            for t in terms {
                if let Term::Const(c) = t {
                    out.insert(*c);
                }
            }
        });
        out
    }

    pub fn param_count(&self) -> usize {
        self.constants().len()
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Formula::Exists { body, .. }
            | Formula::Forall { body, .. }
            | Formula::CountExists { body, .. } => 1 + body.quantifier_depth(),
        }
    }

    /// Largest counting-quantifier nesting.
    pub fn counting_depth(&self) -> usize {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Not(f) => f.counting_depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => a.counting_depth().max(b.counting_depth()),
            Formula::Exists { body, .. } | Formula::Forall { body, .. } => body.counting_depth(),
            Formula::CountExists { body, .. } => 1 + body.counting_depth(),
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => {}
            Formula::Not(g) => g.visit(f),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Exists { body, .. }
            | Formula::Forall { body, .. }
            | Formula::CountExists { body, .. } => body.visit(f),
        }
    }

    /// Capture-avoiding substitution of `term` for the free occurrences of
    /// `var`. Binders that would capture `term` are renamed.
    pub fn substitute(&self, var: &str, term: &Term) -> Formula {
        let sub = |t: &Term| match t {
            Term::Var(v) if v == var => term.clone(),
            other => other.clone(),
        };
        match self {
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(sub).collect(),
            },
            Formula::Eq(a, b) => Formula::Eq(sub(a), sub(b)),
            Formula::Not(f) => f.substitute(var, term).not(),
            Formula::And(a, b) => a.substitute(var, term).and(b.substitute(var, term)),
            Formula::Or(a, b) => a.substitute(var, term).or(b.substitute(var, term)),
            Formula::Implies(a, b) => a.substitute(var, term).implies(b.substitute(var, term)),
            Formula::Iff(a, b) => Formula::Iff(
                Box::new(a.substitute(var, term)),
                Box::new(b.substitute(var, term)),
            ),
            Formula::Exists { var: v, body }
            | Formula::Forall { var: v, body }
            | Formula::CountExists { var: v, body, .. } => {
                let (v, body) = if v == var {
                    (v.clone(), (**body).clone())
                } else if matches!(term, Term::Var(t) if t == v) && body.free_vars().contains(var) {
                    let mut avoid = body.all_vars();
                    avoid.insert(var.to_string());
                    let fresh = fresh_var(v, &avoid);
                    let renamed = body.substitute(v, &Term::Var(fresh.clone()));
                    (fresh, renamed.substitute(var, term))
                } else {
                    (v.clone(), body.substitute(var, term))
                };
                match self {
                    Formula::Exists { .. } => Formula::exists(&v, body),
                    Formula::Forall { .. } => Formula::forall(&v, body),
                    Formula::CountExists { k, .. } => Formula::count_exists(*k, &v, body),
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Renames the free variable `from` to `to`.
    pub fn rename(&self, from: &str, to: &str) -> Formula {
        self.substitute(from, &Term::var(to))
    }
}

/// A variable name based on `base` that does not occur in `avoid`.
pub fn fresh_var(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|v| !avoid.contains(v))
        .expect("infinitely many candidates")
}

/// A formula `φ(x; y)` with designated object and parameter variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionedFormula {
    pub formula: Formula,
    pub object_vars: Vec<String>,
    pub param_vars: Vec<String>,
}

impl PartitionedFormula {
    pub fn new(formula: Formula, object_vars: &[&str], param_vars: &[&str]) -> Self {
        PartitionedFormula {
            formula,
            object_vars: object_vars.iter().map(|s| s.to_string()).collect(),
            param_vars: param_vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// `φ(x; y)` with one variable on each side.
    pub fn unary(formula: Formula, x: &str, y: &str) -> Self {
        PartitionedFormula::new(formula, &[x], &[y])
    }

    /// Instantiates the parameter variables with element constants.
    pub fn with_params(&self, b: &[Element]) -> Formula {
        self.param_vars
            .iter()
            .zip(b)
            .fold(self.formula.clone(), |f, (v, &e)| f.substitute(v, &Term::Const(e)))
    }
}

/// `Δ(x; y)`: partitioned formulas sharing variable tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaSet {
    pub object_vars: Vec<String>,
    pub param_vars: Vec<String>,
    pub formulas: Vec<Formula>,
}

impl FormulaSet {
    pub fn new(object_vars: &[&str], param_vars: &[&str], formulas: Vec<Formula>) -> Self {
        FormulaSet {
            object_vars: object_vars.iter().map(|s| s.to_string()).collect(),
            param_vars: param_vars.iter().map(|s| s.to_string()).collect(),
            formulas,
        }
    }

    /// `{x < y}`
    pub fn order() -> Self {
        FormulaSet::new(&["x"], &["y"], vec![Formula::less(Term::var("x"), Term::var("y"))])
    }

    /// `{x < y, x = y}`
    pub fn order_and_equality() -> Self {
        FormulaSet::new(
            &["x"],
            &["y"],
            vec![
                Formula::less(Term::var("x"), Term::var("y")),
                Formula::eq(Term::var("x"), Term::var("y")),
            ],
        )
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn member(&self, i: usize) -> PartitionedFormula {
        PartitionedFormula {
            formula: self.formulas[i].clone(),
            object_vars: self.object_vars.clone(),
            param_vars: self.param_vars.clone(),
        }
    }
}

const PREC_IFF: u8 = 1;
const PREC_IMP: u8 = 2;
const PREC_OR: u8 = 3;
const PREC_AND: u8 = 4;
const PREC_UNARY: u8 = 5;

impl Formula {
    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => PREC_IFF,
            Formula::Implies(..) => PREC_IMP,
            Formula::Or(..) => PREC_OR,
            Formula::And(..) => PREC_AND,
            _ => PREC_UNARY,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        let binary = |f: &mut fmt::Formatter<'_>, a: &Formula, op: &str, b: &Formula, p: u8| {
            a.write_at(f, p)?;
            write!(f, " {op} ")?;
            b.write_at(f, p + 1)
        };
        match self {
            Formula::Atom { rel, args } if rel == ORDER && args.len() == 2 => {
                write!(f, "{} < {}", args[0], args[1])
            }
            Formula::Atom { rel, args } => {
                write!(f, "{rel}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(g) => {
                write!(f, "!")?;
                g.write_at(f, PREC_UNARY)
            }
            Formula::And(a, b) => binary(f, a, "&", b, PREC_AND),
            Formula::Or(a, b) => binary(f, a, "|", b, PREC_OR),
            Formula::Implies(a, b) => binary(f, a, "->", b, PREC_IMP),
            Formula::Iff(a, b) => binary(f, a, "<->", b, PREC_IFF),
            Formula::Exists { var, body } => {
                write!(f, "exists {var}. ")?;
                body.write_at(f, PREC_UNARY)
            }
            Formula::Forall { var, body } => {
                write!(f, "forall {var}. ")?;
                body.write_at(f, PREC_UNARY)
            }
            Formula::CountExists { k, var, body } => {
                write!(f, "exists[>={k}] {var}. ")?;
                body.write_at(f, PREC_UNARY)
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "@{c}"),
        }
    }
}

/// Canonical DSL text; parsing it back yields the same AST.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Term {
        Term::var("x")
    }
    fn y() -> Term {
        Term::var("y")
    }

    #[test]
    fn free_vars_respect_binding() {
        let f = Formula::exists("z", Formula::less(Term::var("z"), x()).and(Formula::less(Term::var("z"), y())));
        assert_eq!(
            f.free_vars().into_iter().collect::<Vec<_>>(),
            vec!["x".to_string(), "y".to_string()]
        );
        assert_eq!(f.quantifier_depth(), 1);
    }

    #[test]
    fn param_count_is_distinct_constants() {
        let f = Formula::less(Term::Const(3), x()).and(Formula::less(x(), Term::Const(3)));
        assert_eq!(f.param_count(), 1);
        let g = f.clone().and(Formula::less(x(), Term::Const(4)));
        assert!(g.param_count() <= f.param_count() + 1);
    }

    #[test]
    fn substitution_avoids_capture() {
        // exists y. x < y, substitute x := y
        let f = Formula::exists("y", Formula::less(x(), y()));
        let g = f.substitute("x", &y());
        assert_eq!(g.free_vars().into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
        match g {
            Formula::Exists { var, .. } => assert_ne!(var, "y"),
            _ => panic!(),
        }
    }

    #[test]
    fn printing_parenthesizes_by_precedence() {
        let f = Formula::less(x(), y()).or(Formula::less(y(), x())).and(Formula::eq(x(), x()));
        assert_eq!(f.to_string(), "(x < y | y < x) & x = x");
        let g = Formula::exists("z", Formula::less(Term::var("z"), x()).and(Formula::less(Term::var("z"), y())));
        assert_eq!(g.to_string(), "exists z. (z < x & z < y)");
        let h = Formula::less(x(), y()).and(Formula::less(y(), x()).and(Formula::eq(x(), y())));
        assert_eq!(h.to_string(), "x < y & (y < x & x = y)");
        assert_eq!(Formula::exactly(0, "z", Formula::less(Term::var("z"), x())).to_string(), "!exists z. z < x");
    }
}
