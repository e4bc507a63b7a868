//! First-order formulas over finite structures: AST, DSL parser, evaluator
//! and counting-quantifier expansion.

mod ast;
mod eval;
mod expand;
mod parser;

pub use ast::{fresh_var, Formula, FormulaSet, PartitionedFormula, Term};
pub use eval::{eval, eval_with, satisfier_set, satisfier_set_with, CompiledFormula};
pub use expand::expand_counting;
pub use parser::{parse_formula, Vocabulary};
