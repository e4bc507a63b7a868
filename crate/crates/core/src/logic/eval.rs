//! Exact Tarskian evaluation over a finite structure.
//!
//! Formulas are compiled into an arena where every bound variable gets its
//! own environment slot. Quantifier nodes are memoized on the values of
//! their free slots, which keeps nested counting formulas polynomial.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::ast::{Formula, Term};
use crate::model::{Element, FiniteStructure, Relation};

#[derive(Debug, Clone, Copy)]
enum Arg {
    Slot(usize),
    Const(Element),
}

#[derive(Debug)]
enum Node<'s> {
    Atom(&'s Relation, Vec<Arg>),
    Eq(Arg, Arg),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Iff(usize, usize),
    Exists(usize, usize),
    Forall(usize, usize),
    Count(usize, usize, usize),
}

/// A formula compiled against a structure, with its free variables bound to
/// the leading environment slots in the order given at compile time.
pub struct CompiledFormula<'s> {
    structure: &'s FiniteStructure,
    nodes: Vec<Node<'s>>,
    free_slots: Vec<Vec<usize>>,
    root: usize,
    slot_count: usize,
    free: Vec<String>,
    memo: HashMap<(usize, Vec<Element>), bool>,
}

impl<'s> CompiledFormula<'s> {
    /// Compiles `f`; `free` lists the variables supplied at evaluation time
    /// and must cover every free variable of `f`.
    pub fn new(s: &'s FiniteStructure, f: &Formula, free: &[&str], limits: &Limits) -> Result<Self> {
        let depth = f.quantifier_depth();
        if depth > limits.quantifier_depth {
            return Err(Error::QuantifierDepth {
                depth,
                cap: limits.quantifier_depth,
            });
        }
        if let Some(v) = f.free_vars().into_iter().find(|v| !free.contains(&v.as_str())) {
            return Err(Error::UnboundVariable(v));
        }
        for c in f.constants() {
            s.check_element(c)?;
        }
        let mut c = CompiledFormula {
            structure: s,
            nodes: Vec::new(),
            free_slots: Vec::new(),
            root: 0,
            slot_count: free.len(),
            free: free.iter().map(|v| v.to_string()).collect(),
            memo: HashMap::new(),
        };
        let mut scope: Vec<(String, usize)> = free
            .iter()
            .enumerate()
            .map(|(i, v)| (v.to_string(), i))
            .collect();
        c.root = c.compile(f, &mut scope)?;
        Ok(c)
    }

    fn arg(scope: &[(String, usize)], t: &Term) -> Result<Arg> {
        match t {
            Term::Const(e) => Ok(Arg::Const(*e)),
            Term::Var(v) => scope
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|&(_, slot)| Arg::Slot(slot))
                .ok_or_else(|| Error::UnboundVariable(v.clone())),
        }
    }

    fn push(&mut self, node: Node<'s>, free: Vec<usize>) -> usize {
        self.nodes.push(node);
        self.free_slots.push(free);
        self.nodes.len() - 1
    }

    fn union(&self, a: usize, b: usize) -> Vec<usize> {
        let mut v = self.free_slots[a].clone();
        v.extend(&self.free_slots[b]);
        v.sort_unstable();
        v.dedup();
        v
    }

    fn compile(&mut self, f: &Formula, scope: &mut Vec<(String, usize)>) -> Result<usize> {
        let slots_of = |args: &[Arg]| {
            let mut v: Vec<usize> = args
                .iter()
                .filter_map(|a| match a {
                    Arg::Slot(s) => Some(*s),
                    Arg::Const(_) => None,
                })
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        Ok(match f {
            Formula::Atom { rel, args } => {
                let relation = self
                    .structure
                    .relation(rel)
                    .ok_or_else(|| Error::UnknownRelation(rel.clone()))?;
                if relation.arity() != args.len() {
                    return Err(Error::ArityMismatch {
                        name: rel.clone(),
                        expected: relation.arity(),
                        actual: args.len(),
                    });
                }
                let args = args
                    .iter()
                    .map(|t| Self::arg(scope, t))
                    .collect::<Result<Vec<_>>>()?;
                let free = slots_of(&args);
                self.push(Node::Atom(relation, args), free)
            }
            Formula::Eq(a, b) => {
                let args = [Self::arg(scope, a)?, Self::arg(scope, b)?];
                let free = slots_of(&args);
                self.push(Node::Eq(args[0], args[1]), free)
            }
            Formula::Not(g) => {
                let g = self.compile(g, scope)?;
                let free = self.free_slots[g].clone();
                self.push(Node::Not(g), free)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                let (a, b) = (self.compile(a, scope)?, self.compile(b, scope)?);
                let free = self.union(a, b);
                let node = match f {
                    Formula::And(..) => Node::And(a, b),
                    Formula::Or(..) => Node::Or(a, b),
                    Formula::Implies(..) => Node::Implies(a, b),
                    _ => Node::Iff(a, b),
                };
                self.push(node, free)
            }
            Formula::Exists { var, body }
            | Formula::Forall { var, body }
            | Formula::CountExists { var, body, .. } => {
                let slot = self.slot_count;
                self.slot_count += 1;
                scope.push((var.clone(), slot));
                let body_id = self.compile(body, scope)?;
                scope.pop();
                let free: Vec<usize> = self.free_slots[body_id]
                    .iter()
                    .copied()
                    .filter(|&s| s != slot)
                    .collect();
                let node = match f {
                    Formula::Exists { .. } => Node::Exists(slot, body_id),
                    Formula::Forall { .. } => Node::Forall(slot, body_id),
                    Formula::CountExists { k, .. } => {
                        if *k == 0 {
                            return Err(Error::VacuousCount);
                        }
                        Node::Count(*k, slot, body_id)
                    }
                    _ => unreachable!(),
                };
                self.push(node, free)
            }
        })
    }

    /// Evaluates with the free variables bound positionally.
    pub fn eval(&mut self, values: &[Element]) -> Result<bool> {
        if values.len() != self.free.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values for {:?}, got {}",
                self.free.len(),
                self.free,
                values.len()
            )));
        }
        for &v in values {
            self.structure.check_element(v)?;
        }
        let mut env = vec![0; self.slot_count];
        env[..values.len()].copy_from_slice(values);
        Ok(self.eval_node(self.root, &mut env))
    }

    fn value(env: &[Element], a: Arg) -> Element {
        match a {
            Arg::Slot(s) => env[s],
            Arg::Const(c) => c,
        }
    }

    fn eval_node(&mut self, id: usize, env: &mut Vec<Element>) -> bool {
        match &self.nodes[id] {
            Node::Atom(rel, args) => {
                let rel: &Relation = rel;
                match args.as_slice() {
                    [a, b] => rel.contains(&[Self::value(env, *a), Self::value(env, *b)]),
                    _ => {
                        let t: Vec<Element> = args.iter().map(|&a| Self::value(env, a)).collect();
                        rel.contains(&t)
                    }
                }
            }
            Node::Eq(a, b) => Self::value(env, *a) == Self::value(env, *b),
            &Node::Not(g) => !self.eval_node(g, env),
            &Node::And(a, b) => self.eval_node(a, env) && self.eval_node(b, env),
            &Node::Or(a, b) => self.eval_node(a, env) || self.eval_node(b, env),
            &Node::Implies(a, b) => !self.eval_node(a, env) || self.eval_node(b, env),
            &Node::Iff(a, b) => self.eval_node(a, env) == self.eval_node(b, env),
            &Node::Exists(slot, body) | &Node::Forall(slot, body) | &Node::Count(_, slot, body) => {
                let key = (id, self.free_slots[id].iter().map(|&s| env[s]).collect());
                if let Some(&v) = self.memo.get(&key) {
                    return v;
                }
                let n = self.structure.universe_size();
                let saved = env[slot];
                let result = match self.nodes[id] {
                    Node::Exists(..) => (0..n).any(|e| {
                        env[slot] = e;
                        self.eval_node(body, env)
                    }),
                    Node::Forall(..) => (0..n).all(|e| {
                        env[slot] = e;
                        self.eval_node(body, env)
                    }),
                    Node::Count(k, ..) => {
                        let mut found = 0;
                        for e in 0..n {
                            env[slot] = e;
                            if self.eval_node(body, env) {
                                found += 1;
                                if found >= k {
                                    break;
                                }
                            }
                        }
                        found >= k
                    }
                    _ => unreachable!(),
                };
                env[slot] = saved;
                self.memo.insert(key, result);
                result
            }
        }
    }
}

/// Truth value of `f` under `env`, which must bind every free variable.
pub fn eval(s: &FiniteStructure, f: &Formula, env: &BTreeMap<String, Element>) -> Result<bool> {
    eval_with(s, f, env, &Limits::default())
}

pub fn eval_with(
    s: &FiniteStructure,
    f: &Formula,
    env: &BTreeMap<String, Element>,
    limits: &Limits,
) -> Result<bool> {
    let names: Vec<&str> = env.keys().map(String::as_str).collect();
    let values: Vec<Element> = env.values().copied().collect();
    CompiledFormula::new(s, f, &names, limits)?.eval(&values)
}

/// `{a : s ⊨ f(a)}`. Any free variable of `f` other than `var` is an error.
pub fn satisfier_set(s: &FiniteStructure, f: &Formula, var: &str) -> Result<Vec<Element>> {
    satisfier_set_with(s, f, var, &Limits::default())
}

pub fn satisfier_set_with(
    s: &FiniteStructure,
    f: &Formula,
    var: &str,
    limits: &Limits,
) -> Result<Vec<Element>> {
    let free = f.free_vars();
    if free.iter().any(|v| v != var) {
        return Err(Error::FreeVariables {
            expected: vec![var.to_string()],
            found: free.into_iter().collect(),
        });
    }
    let mut c = CompiledFormula::new(s, f, &[var], limits)?;
    let mut out = Vec::new();
    for a in 0..s.universe_size() {
        if c.eval(&[a])? {
            out.push(a);
        }
    }
    Ok(out)
}
