//! Numerical engine for Temperley-Lieb subproduct systems.
//!
//! Starting from an m×m coefficient matrix A with AĀ unitary, the crate
//! builds the associated subproduct-system fibers H_n in compressed
//! coordinates, represents left/right creation operators on the truncated
//! Fock space, and verifies the operator identities and decay estimates
//! that the construction satisfies:
//!
//! - [`numerics`]: dense complex linear algebra (Kronecker products,
//!   operator norms, orthonormal kernel bases) — the shared kernel.
//! - [`qarith`]: q-integers, the multiplier φ(n) and the fiber-dimension
//!   recursion d_{n+1} = m·d_n − d_{n−1}.
//! - [`tlpoly`]: validation and normalization of coefficient matrices,
//!   the projection e onto the defining vector, and the transpose
//!   involution.
//! - [`chain`]: recursive construction of the fibers with right, left and
//!   full embeddings, splitting maps and a brute-force oracle.
//! - [`fock`]: graded creation/annihilation operators and the relation
//!   and commutator-decay suites.
//! - [`duality`]: the bi-graded partial isometry on the doubled Fock
//!   space, its defect identities, the index-(-1) specialization and the
//!   K-group lookup table.
//! - [`kms`]: the gauge-invariant state, its closed forms and the
//!   KMS_{-1} condition.
//! - [`gnsfred`]: the graded GNS model, the isometry V, the symmetry
//!   F = 2VV*−1 and the quantitative commutator-decay checks.
//! - [`par`]: data-parallel map helpers with a sequential fallback
//!   (feature `parallel`, on by default).

#![forbid(unsafe_code)]

pub mod chain;
pub mod duality;
mod error;
pub mod fock;
pub mod gnsfred;
pub mod kms;
pub mod numerics;
pub mod par;
pub mod qarith;
#[cfg(test)]
pub(crate) mod testutil;
pub mod tlpoly;

pub use error::{Error, Result};
