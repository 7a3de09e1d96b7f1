//! Exact-rational probability and small-dimension quantum machinery.

pub mod dist;
pub mod quantum;
pub mod rational;

pub use dist::{all_assignments, ConditionalDist, DistError, JointDistribution};
pub use quantum::{born_probability, CMatrix, Effect, QuantumError, QuantumState, StateBody};
pub use rational::{fmt_rational, parse_rational, rat, rat_int, snap_to_rational, Rational};

/// Denominator bound used when snapping post-selected quantum weights.
pub const SNAP_MAX_DEN: u64 = 1 << 20;
/// Comparison tolerance for double-precision quantum quantities.
pub const QUANTUM_TOL: f64 = 1e-9;
