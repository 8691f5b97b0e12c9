//! Shared fixtures for unit tests.

use crate::numerics::{C64, CMat};
use crate::tlpoly::{tl_validate, TLData, DEFAULT_TOL};

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Anti-diagonal 2×2 matrix for P = q^{-1/2}X₁X₂ − q^{1/2}X₂X₁.
pub(crate) fn q_family(q: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            c(0.0, 0.0),
            c(q.powf(-0.5), 0.0),
            c(-q.sqrt(), 0.0),
            c(0.0, 0.0),
        ],
    )
}

pub(crate) fn q_family_data(q: f64) -> TLData {
    tl_validate(&q_family(q), DEFAULT_TOL).unwrap()
}

/// Anti-diagonal 3×3 matrix with unimodular entries; its deformation
/// parameter is the root of q + q⁻¹ = 3.
pub(crate) fn standard_m3() -> CMat {
    CMat::from_row_slice(
        3,
        3,
        &[
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 1.0),
            c(0.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
    )
}

pub(crate) fn standard_m3_data() -> TLData {
    tl_validate(&standard_m3(), DEFAULT_TOL).unwrap()
}
