//! q-deformed integer arithmetic and the fiber-dimension recursion.
//!
//! The q-integer [n]_q = (qⁿ − q⁻ⁿ)/(q − q⁻¹) degenerates to n at q = 1;
//! it is evaluated as the geometric sum Σ_j q^{n−1−2j} to avoid the
//! catastrophic cancellation of the quotient form near q = 1. Fiber
//! dimensions follow the recursion d_{n+1} = m·d_n − d_{n−1} in exact
//! checked 64-bit arithmetic because they grow exponentially for m ≥ 3.
//!
//! All functions here are pure.

use crate::{Error, Result};

/// Deformation parameter q ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && 0.0 < q && q <= 1.0 {
            Ok(QParam(q))
        } else {
            Err(Error::Range(format!("q must lie in (0, 1], got {q}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }
}

/// q-integer [n]_q, evaluated as Σ_{j=0}^{n-1} q^{n-1-2j}; equals n at q = 1.
///
/// Relative accuracy 1e-12 (a sum of positive terms).
pub fn q_int(n: u32, q: QParam) -> f64 {
    if q.is_one() {
        return f64::from(n);
    }
    let q = q.get();
    (0..n).map(|j| q.powi(n as i32 - 1 - 2 * j as i32)).sum()
}

/// The multiplier φ(n) = [n]_q/[n+1]_q ∈ [0, 1); nondecreasing in n with
/// limit q for q < 1 and limit 1 for q = 1.
pub fn phi(n: u32, q: QParam) -> f64 {
    if n == 0 {
        return 0.0;
    }
    q_int(n, q) / q_int(n + 1, q)
}

/// Fiber dimensions d_0..d_N: d_0 = 1, d_1 = m, d_{n+1} = m·d_n − d_{n−1}.
///
/// Exact integer arithmetic; overflow of the 64-bit range is an error.
pub fn fiber_dims(m: u32, n_max: usize) -> Result<Vec<u64>> {
    if m < 2 {
        return Err(Error::Range(format!("need m >= 2 generators, got {m}")));
    }
    let mut dims = Vec::with_capacity(n_max + 1);
    dims.push(1u64);
    if n_max >= 1 {
        dims.push(u64::from(m));
    }
    for n in 1..n_max {
        let next = u64::from(m)
            .checked_mul(dims[n])
            .and_then(|p| p.checked_sub(dims[n - 1]))
            .ok_or_else(|| {
                Error::DimensionOverflow(format!("fiber dimension d_{} exceeds u64", n + 1))
            })?;
        dims.push(next);
    }
    Ok(dims)
}
