//! Dense complex linear algebra: Kronecker products, operator norms and
//! orthonormal kernel bases.
//!
//! Singular-value decomposition is the single primitive: the operator norm
//! is the largest singular value, kernels are spanned by right singular
//! vectors below a relative threshold. Complex numbers are pairs of 64-bit
//! floats throughout; accuracy targets are stated per function.
//!
//! Matrices are [`nalgebra`] dynamic matrices over `Complex<f64>`. All
//! values are immutable after construction and all operations are pure, so
//! everything here is safe to evaluate in parallel.

use nalgebra::{Complex, DMatrix};

use crate::{Error, Result};

/// Complex scalar used everywhere.
pub type C64 = Complex<f64>;

/// Dense complex matrix used everywhere.
pub type CMat = DMatrix<C64>;

/// Builds a matrix from a row-major slice of entries, rejecting NaN and
/// infinite values.
pub fn cmat_from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMat> {
    if entries.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{rows}x{cols} matrix needs {} entries, got {}",
            rows * cols,
            entries.len()
        )));
    }
    if let Some(z) = entries.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(format!("entry {z}")));
    }
    Ok(CMat::from_row_slice(rows, cols, entries))
}

/// Identity matrix of size n.
pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product a⊗b with the left factor most significant:
/// entry ((i1,i2),(j1,j2)) = a(i1,j1)·b(i2,j2), row index i1·b.rows + i2.
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    let rows = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or_else(|| Error::DimensionOverflow("kron rows".into()))?;
    let cols = a
        .ncols()
        .checked_mul(b.ncols())
        .ok_or_else(|| Error::DimensionOverflow("kron cols".into()))?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::DimensionOverflow("kron entry count".into()))?;
    Ok(a.kronecker(b))
}

fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let svd = a.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    sv
}

/// Operator norm: the largest singular value (0 for empty matrices).
///
/// Accurate to relative 1e-12 on matrices of dimension up to 10^4.
pub fn opnorm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the null space of `a`.
///
/// "Null" means singular value at most `tol` times the largest singular
/// value (or 1 if `a` is zero): the threshold is relative, so rescaling a
/// matrix does not change its computed kernel. The returned columns `r`
/// satisfy r*·r = I to 1e-12 and opnorm(a·r) ≤ 10·tol·opnorm(a). An empty
/// kernel yields a matrix with zero columns.
pub fn kernel_onb(a: &CMat, tol: f64) -> CMat {
    assert!(tol > 0.0, "kernel threshold must be positive");
    let n = a.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return identity(n);
    }
    // The thin SVD of a wide matrix omits the right singular vectors that
    // span the co-range; padding with zero rows makes V square without
    // changing singular values.
    let padded = if a.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0_f64, f64::max);
    let threshold = tol * if sigma_max > 0.0 { sigma_max } else { 1.0 };
    let kernel_cols: Vec<usize> = (0..n)
        .filter(|&i| sigma.get(i).copied().unwrap_or(0.0) <= threshold)
        .collect();
    let mut basis = CMat::zeros(n, kernel_cols.len());
    for (out, &i) in kernel_cols.iter().enumerate() {
        for j in 0..n {
            basis[(j, out)] = v_t[(i, j)].conj();
        }
    }
    basis
}

/// max(opnorm(u*u − I), opnorm(uu* − I)), with the identity sized to each
/// side; zero exactly for unitaries, and the co-defect dominates for
/// proper isometries.
pub fn unitary_defect(u: &CMat) -> f64 {
    let gram = u.adjoint() * u - identity(u.ncols());
    let cogram = u * u.adjoint() - identity(u.nrows());
    opnorm(&gram).max(opnorm(&cogram))
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    debug_assert!(blocks.iter().all(|b| b.ncols() == cols));
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}
