//! A small CDCL SAT solver with assumption-selector unsat cores.
//!
//! Formulas are [`Cnf`] values whose clauses belong to groups; [`solve`]
//! reports either a model or the set of groups used in the refutation, and
//! [`minimize_core`] shrinks such a set to a deletion-minimal one.

pub mod cnf;
pub mod core;
pub mod dimacs;
pub mod external;
pub mod lit;
pub mod solver;

pub use crate::cnf::{Cnf, GroupId};
pub use crate::core::{minimize_core, solve, GroupSolver, MinimizedCore, SolveOptions, Tracking, Verdict};
pub use crate::dimacs::{export_dimacs, import_dimacs, DimacsError};
pub use crate::external::{external_solver_from_env, solve_external, ExternalVerdict};
pub use crate::lit::{Lit, Var};
pub use crate::solver::{SolveResult, Solver};
