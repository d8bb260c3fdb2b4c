//! Symbolic and numerical calculus on graded nilpotent Lie groups.
//!
//! The crate has two halves. The symbolic half works in the universal
//! enveloping algebra of a graded nilpotent Lie algebra: PBW normal
//! ordering, dilations, formal adjoints, frozen coefficients and principal
//! parts of variable-coefficient operators. The numerical half checks, at
//! desk scale, the representation-theoretic ellipticity criterion on the
//! Heisenberg group, covering/partition-of-unity bounds, and spectral
//! Sobolev estimates on periodic lattices.

pub mod algebra;
pub mod covering;
pub mod diffop;
pub mod error;
pub mod expr;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod poly;
pub mod repr;
pub mod uea;

pub use algebra::{GradedLieAlgebra, GroupElement};
pub use diffop::DiffOp;
pub use error::CoreError;
pub use expr::CoeffExpr;
pub use uea::{UeaElement, Word};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
