//! Computational checks for uniform definability of types over finite sets
//! (UDTFS) and the VCd property on finite partial orders.
//!
//! * [`model`]: finite structures, posets, width.
//! * [`gallery`]: grid orders, hypercube posets, random posets.
//! * [`logic`]: formulas, parser, evaluator.
//! * [`symmetry`]: automorphisms, stabilizers, orbits.
//! * [`typespace`]: Δ-types over parameter sets.
//! * [`definability`]: orbit criterion, Def-sets, scheme-count bounds, breadth.
//! * [`definer`]: ∅-type classes and constructive defining formulas.

pub mod cli;
pub mod definability;
pub mod definer;
pub mod error;
pub mod gallery;
pub mod io;
pub mod limits;
pub mod logic;
pub mod model;
pub mod report;
pub mod symmetry;
pub mod typespace;
pub mod verify;

pub use error::{Error, Result};
pub use limits::Limits;
pub use model::{Element, FiniteStructure, PosetView, ORDER};
