//! Restricted-chase termination analysis for existential rules.
//!
//! The crate decides membership in the k-safe hierarchy: a rule set is
//! accepted at level `k` when every k-cycle whose rules fail a chosen
//! acyclicity condition is inactive on every database. Activeness is tested
//! on restricted critical databases, optionally after merging indexed
//! constants with index-lowering renamings.

pub mod acyclicity;
pub mod activeness;
pub mod bounded;
pub mod chase;
pub mod critdb;
pub mod cycles;
pub mod deps;
pub mod dlgp;
pub mod fixtures;
pub mod gen;
pub mod hom;
pub mod model;

pub use model::{Atom, Instance, Position, Rule, RuleSet, Sym, Term};
