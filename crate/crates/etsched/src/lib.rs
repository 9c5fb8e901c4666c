//! Exact solvers for single-machine scheduling around a common due date.
//!
//! Every task `j` has an integer processing time `p[j]` and per-unit penalties
//! `alpha[j]` (earliness) and `beta[j]` (tardiness) against a shared due date
//! `d`. The goal is a non-preemptive single-machine schedule minimizing
//!
//! ```text
//! sum_j alpha[j] * max(0, d - C[j]) + beta[j] * max(0, C[j] - d)
//! ```
//!
//! where `C[j]` is the completion time of task `j`. The crate provides
//!
//! * exact integer instance handling and the OR-Library benchmark format
//!   ([`instance`]),
//! * schedules as exact rational completion-time vectors together with the
//!   coordinate maps into earliness/tardiness variable space ([`schedule`]),
//! * the dominance-based decoders that turn an early/tardy partition into its
//!   best block schedule ([`dominance`]),
//! * three linear descriptions of the problem and their subset inequalities
//!   ([`polytope`]),
//! * an exact minimum-cut separation routine for those inequalities built on a
//!   Gomory-Hu tree ([`separation`]),
//! * a self-contained two-phase simplex with a cutting-plane driver ([`lp`]),
//! * branch-and-cut and enumeration solvers ([`solver`]), and
//! * the command line entry points ([`cli`]).
//!
//! Start with the `examples/` directory; each example exercises one of these
//! capabilities end to end.

pub mod cli;
pub mod dominance;
pub mod gen;
pub mod instance;
pub mod lp;
pub mod polytope;
pub mod schedule;
pub mod separation;
pub mod solver;

/// Exact scalar used for schedule data, cut coefficients, and objective
/// values. Instance data is small-integer, so `i64` numerators never
/// overflow at the sizes this crate accepts.
pub type Rat = num_rational::Ratio<i64>;

/// Shorthand for an integer-valued [`Rat`].
pub fn rat(v: i64) -> Rat {
    Rat::from_integer(v)
}

/// Nearest floating-point value of an exact scalar, for the LP layer.
pub fn rat_f64(v: Rat) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}
