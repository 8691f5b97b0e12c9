//! Fibers of the subproduct system in compressed coordinates.
//!
//! The n-th fiber H_n ⊆ (C^m)^{⊗n} is the joint kernel of the maps
//! contracting adjacent tensor slots against P. Working in ambient
//! m^n-dimensional coordinates is exponential in n, so every fiber is
//! carried in its own d_n-dimensional coordinates:
//!
//! - the right embedding J_n realizes H_n ⊆ H_{n−1}⊗C^m,
//! - the left embedding K_n realizes H_n ⊆ C^m⊗H_{n−1},
//! - the full embedding ι_n ∈ C^{m^n×d_n} recovers ambient coordinates,
//!   kept only while the entry budget allows.
//!
//! Only J_n is computed from scratch (one new orthogonality constraint
//! per level); ι_n and K_n are derived from it. [`bruteforce_fiber`]
//! recomputes the ambient projection onto H_n directly from the defining
//! constraints and serves as an independent oracle for the recursion.

use crate::numerics::{identity, kernel_onb, kron, opnorm, vstack, CMat};
use crate::qarith::fiber_dims;
use crate::tlpoly::TLData;
use crate::{Error, Result};

/// Relative threshold for numerical rank decisions in the level recursion.
const RANK_TOL: f64 = 1e-10;

/// Default cap on the entry count m^n·d_n of a full embedding.
pub const DEFAULT_BUDGET: u64 = 8_000_000;

/// Hard cap on ambient dimension m^n in brute-force computations.
const BRUTE_CAP: u64 = 1_000_000;

/// The fiber tower up to a truncation level, with all three embeddings.
#[derive(Debug, Clone)]
pub struct Chain {
    /// The validated coefficient data.
    pub t: TLData,
    /// Truncation level N: right embeddings exist for n = 1..=N.
    pub n_max: usize,
    /// Largest level with a full embedding within the entry budget;
    /// left embeddings exist for n = 1..=n_full.
    pub n_full: usize,
    /// Fiber dimensions d_0..d_N.
    pub dims: Vec<u64>,
    right_emb: Vec<CMat>,
    left_emb: Vec<CMat>,
    full_emb: Vec<CMat>,
}

impl Chain {
    /// Fiber dimension d_n as a usize.
    pub fn dim(&self, n: usize) -> usize {
        self.dims[n] as usize
    }

    /// Right embedding J_n : H_n → H_{n−1}⊗C^m, for 1 ≤ n ≤ n_max.
    pub fn j(&self, n: usize) -> &CMat {
        assert!((1..=self.n_max).contains(&n), "right embedding out of range: {n}");
        &self.right_emb[n - 1]
    }

    /// Left embedding K_n : H_n → C^m⊗H_{n−1}, for 1 ≤ n ≤ n_full.
    pub fn k(&self, n: usize) -> &CMat {
        assert!((1..=self.n_full).contains(&n), "left embedding out of range: {n}");
        &self.left_emb[n - 1]
    }

    /// Full embedding ι_n : H_n → (C^m)^{⊗n}, for 0 ≤ n ≤ n_full.
    pub fn iota(&self, n: usize) -> &CMat {
        assert!(n <= self.n_full, "full embedding out of range: {n}");
        &self.full_emb[n]
    }
}

/// Rows {b·m + s : b} of `mat`: the coefficient of letter s in the
/// trailing tensor slot, when rows are indexed by H_{n−1}⊗C^m.
pub(crate) fn slot_rows(mat: &CMat, m: usize, s: usize) -> CMat {
    let blocks = mat.nrows() / m;
    let cols = mat.ncols();
    let mut out = CMat::zeros(blocks, cols);
    for b in 0..blocks {
        for c in 0..cols {
            out[(b, c)] = mat[(b * m + s, c)];
        }
    }
    out
}

/// The constraint matrix whose kernel is the next fiber: the map
/// C^{d_n·m} → C^{d_{n−1}} given by x ↦ (I⊗v*)(J_n⊗I_m)x, assembled
/// without materializing the Kronecker factors.
fn next_constraint(j_n: &CMat, v: &CMat, m: usize) -> CMat {
    let d_prev = j_n.nrows() / m;
    let d_n = j_n.ncols();
    let mut mat = CMat::zeros(d_prev, d_n * m);
    for s in 0..m {
        let mut acc = CMat::zeros(d_prev, d_n);
        for t in 0..m {
            acc += slot_rows(j_n, m, t) * v[(t * m + s, 0)].conj();
        }
        for b in 0..d_prev {
            for c in 0..d_n {
                mat[(b, c * m + s)] = acc[(b, c)];
            }
        }
    }
    mat
}

/// ι_n = (ι_{n−1}⊗I_m)·J_n, assembled per trailing letter.
fn extend_full(iota_prev: &CMat, j_next: &CMat, m: usize) -> CMat {
    let rows_prev = iota_prev.nrows();
    let d_next = j_next.ncols();
    let mut out = CMat::zeros(rows_prev * m, d_next);
    for s in 0..m {
        let g = iota_prev * slot_rows(j_next, m, s);
        for r in 0..rows_prev {
            for c in 0..d_next {
                out[(r * m + s, c)] = g[(r, c)];
            }
        }
    }
    out
}

/// K_n = (I_m⊗ι_{n−1})*·ι_n, assembled per leading letter.
fn left_from_full(iota_prev: &CMat, iota_next: &CMat, m: usize) -> CMat {
    let rows_prev = iota_prev.nrows();
    let blocks: Vec<CMat> = (0..m)
        .map(|s| iota_prev.adjoint() * iota_next.rows(s * rows_prev, rows_prev).clone_owned())
        .collect();
    vstack(&blocks)
}

/// Builds the fiber tower to level `n_max`, keeping full embeddings while
/// m^n·d_n stays within `budget` entries.
///
/// Each step extracts J_{n+1} as an orthonormal kernel basis of the single
/// new constraint (orthogonality to H_{n−1}⊗P — all others are inherited
/// from H_n). A kernel dimension different from m·d_n − d_{n−1} aborts
/// with a fusion-mismatch error rather than repairing the rank.
pub fn build_chain(t: &TLData, n_max: usize, budget: u64) -> Result<Chain> {
    if n_max < 1 {
        return Err(Error::Range("truncation level must be at least 1".into()));
    }
    let m = t.m;
    let dims = fiber_dims(m as u32, n_max)?;
    let v = t.p_unit();

    let mut right_emb = vec![identity(m)];
    let mut full_emb = vec![identity(1), identity(m)];
    let mut left_emb = vec![identity(m)];
    let mut n_full = 1usize;

    for n in 1..n_max {
        let mat = next_constraint(&right_emb[n - 1], &v, m);
        let ker = kernel_onb(&mat, RANK_TOL);
        let expected = dims[n + 1] as usize;
        if ker.ncols() != expected {
            return Err(Error::FusionMismatch(format!(
                "level {}: kernel dimension {} but fusion rule gives {}",
                n + 1,
                ker.ncols(),
                expected
            )));
        }
        right_emb.push(ker);

        if n_full == n {
            let cost = (m as u64)
                .checked_pow(n as u32 + 1)
                .and_then(|p| p.checked_mul(dims[n + 1]));
            if let Some(cost) = cost {
                if cost <= budget {
                    let iota_next = extend_full(&full_emb[n], &right_emb[n], m);
                    left_emb.push(left_from_full(&full_emb[n], &iota_next, m));
                    full_emb.push(iota_next);
                    n_full = n + 1;
                }
            }
        }
    }

    if n_max >= 2 && n_full < 2 {
        return Err(Error::Budget(format!(
            "budget {budget} cannot hold the level-2 embedding ({} entries)",
            m * m * dims[2] as usize
        )));
    }

    Ok(Chain {
        t: t.clone(),
        n_max,
        n_full,
        dims,
        right_emb,
        left_emb,
        full_emb,
    })
}

/// Ambient m^n×m^n orthogonal projection onto H_n, from the defining
/// constraints only: stack the n−1 contraction maps I^{⊗i}⊗v*⊗I^{⊗(n−2−i)}
/// and project onto their joint kernel.
pub fn bruteforce_fiber(t: &TLData, n: usize) -> Result<CMat> {
    let m = t.m;
    let full = (m as u64)
        .checked_pow(n as u32)
        .filter(|&d| d <= BRUTE_CAP)
        .ok_or_else(|| Error::Budget(format!("ambient dimension {m}^{n} exceeds {BRUTE_CAP}")))?
        as usize;
    if n == 0 {
        return Ok(identity(1));
    }
    if n == 1 {
        return Ok(identity(m));
    }
    let v = t.p_unit();
    let block_rows = full / (m * m);
    let mut stack = CMat::zeros((n - 1) * block_rows, full);
    for i in 0..=(n - 2) {
        let inner = m.pow((n - 2 - i) as u32);
        let outer = m.pow(i as u32);
        for p in 0..outer {
            for w in 0..m * m {
                let z = v[(w, 0)].conj();
                for r in 0..inner {
                    stack[(i * block_rows + p * inner + r, (p * m * m + w) * inner + r)] = z;
                }
            }
        }
    }
    let g = kernel_onb(&stack, RANK_TOL);
    Ok(&g * g.adjoint())
}

/// opnorm(ι_n·ι_n* − bruteforce_fiber(n)): cross-validation of the
/// recursive construction against the ambient one.
pub fn oracle_compare(c: &Chain, n: usize) -> Result<f64> {
    let within_cap = (c.t.m as u64)
        .checked_pow(n as u32)
        .is_some_and(|d| d <= BRUTE_CAP);
    if n > c.n_full || !within_cap {
        return Err(Error::Range(format!(
            "level {n} outside full embeddings (n_full = {}) or brute-force cap",
            c.n_full
        )));
    }
    let f = bruteforce_fiber(&c.t, n)?;
    let io = c.iota(n);
    Ok(opnorm(&(io * io.adjoint() - f)))
}

/// The d_k·d_{n−k} × d_n isometry (ι_k⊗ι_{n−k})*·ι_n giving the
/// coordinates of H_n inside H_k⊗H_{n−k}.
pub fn sweedler_split(c: &Chain, n: usize, k: usize) -> Result<CMat> {
    if n > c.n_full || k > n {
        return Err(Error::Range(format!(
            "split ({n},{k}) outside full embeddings (n_full = {})",
            c.n_full
        )));
    }
    let kr = kron(c.iota(k), c.iota(n - k))?;
    Ok(kr.adjoint() * c.iota(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::C64;
    use crate::testutil::{q_family, q_family_data, standard_m3_data};
    use crate::tlpoly::{tl_validate, DEFAULT_TOL};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const BUDGET: u64 = DEFAULT_BUDGET;

    fn isometry_defect(a: &CMat) -> f64 {
        opnorm(&(a.adjoint() * a - identity(a.ncols())))
    }

    #[test]
    fn classical_chain_dims_and_invariants() {
        let t = q_family_data(1.0);
        let c = build_chain(&t, 5, BUDGET).unwrap();
        assert_eq!(c.dims, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(c.n_full, 5);
        for n in 1..=5 {
            assert!(isometry_defect(c.j(n)) <= 1e-10);
            assert!(isometry_defect(c.k(n)) <= 1e-10);
            assert!(isometry_defect(c.iota(n)) <= 1e-10);
            // Right and left factorizations agree: both recover ι_n.
            let via_j = kron(c.iota(n - 1), &identity(2)).unwrap() * c.j(n);
            let via_k = kron(&identity(2), c.iota(n - 1)).unwrap() * c.k(n);
            assert!(opnorm(&(&via_j - c.iota(n))) <= 1e-10);
            assert!(opnorm(&(&via_k - c.iota(n))) <= 1e-10);
        }
    }

    #[test]
    fn m3_dims_and_oracle() {
        let t = standard_m3_data();
        let c = build_chain(&t, 5, BUDGET).unwrap();
        assert_eq!(c.dims, vec![1, 3, 8, 21, 55, 144]);
        for n in 0..=5 {
            assert!(oracle_compare(&c, n).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn second_level_spans_the_complement_of_p() {
        let t = q_family_data(0.5);
        let c = build_chain(&t, 2, BUDGET).unwrap();
        let j2 = c.j(2);
        assert_eq!(j2.ncols(), 3);
        assert!(opnorm(&(t.p_unit().adjoint() * j2)) <= 1e-10);
        let f2 = bruteforce_fiber(&t, 2).unwrap();
        assert!(opnorm(&(f2 - (identity(4) - &t.e_proj))) <= 1e-10);
    }

    #[test]
    fn bruteforce_base_cases_and_rank() {
        let t = q_family_data(1.0);
        assert_eq!(bruteforce_fiber(&t, 0).unwrap(), identity(1));
        assert_eq!(bruteforce_fiber(&t, 1).unwrap(), identity(2));
        let f3 = bruteforce_fiber(&t, 3).unwrap();
        assert_abs_diff_eq!(f3.trace().re, 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(f3.trace().im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_through_level_six() {
        let t = q_family_data(0.5);
        let c = build_chain(&t, 6, BUDGET).unwrap();
        assert_eq!(oracle_compare(&c, 0).unwrap(), 0.0);
        for n in 1..=6 {
            assert!(oracle_compare(&c, n).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn sweedler_splits_are_isometries() {
        let t = q_family_data(0.5);
        let c = build_chain(&t, 6, BUDGET).unwrap();
        for n in 0..=6 {
            for k in 0..=n {
                let s = sweedler_split(&c, n, k).unwrap();
                assert!(isometry_defect(&s) <= 1e-10, "split ({n},{k})");
            }
            // Trivial splits are exactly the identity.
            let left = sweedler_split(&c, n, 0).unwrap();
            let right = sweedler_split(&c, n, n).unwrap();
            assert!(opnorm(&(left - identity(c.dim(n)))) <= 1e-12);
            assert!(opnorm(&(right - identity(c.dim(n)))) <= 1e-12);
        }
        // A single left letter is the left embedding in the same coordinates.
        for n in 1..=6 {
            let s = sweedler_split(&c, n, 1).unwrap();
            assert!(opnorm(&(s - c.k(n))) <= 1e-12);
        }
    }

    #[test]
    fn out_of_range_levels_are_rejected() {
        let t = q_family_data(0.5);
        let c = build_chain(&t, 3, BUDGET).unwrap();
        assert!(matches!(oracle_compare(&c, 4), Err(Error::Range(_))));
        assert!(matches!(sweedler_split(&c, 4, 1), Err(Error::Range(_))));
        assert!(matches!(sweedler_split(&c, 2, 3), Err(Error::Range(_))));
    }

    #[test]
    fn starving_budget_is_an_error() {
        let t = q_family_data(0.5);
        assert!(matches!(build_chain(&t, 5, 10), Err(Error::Budget(_))));
    }

    #[test]
    fn budget_truncates_full_embeddings_only() {
        let t = q_family_data(0.5);
        // m^n·d_n = 12, 32, 80, 192, 448 for n = 2..6: a budget of 200
        // stops the full embeddings at level 5.
        let c = build_chain(&t, 6, 200).unwrap();
        assert_eq!(c.n_max, 6);
        assert_eq!(c.n_full, 5);
        assert_eq!(c.j(6).ncols(), 7);
        assert!(matches!(oracle_compare(&c, 6), Err(Error::Range(_))));
    }

    #[test]
    fn trivial_truncation_has_no_kernel_step() {
        let t = q_family_data(0.5);
        let c = build_chain(&t, 1, BUDGET).unwrap();
        assert_eq!(c.dims, vec![1, 2]);
        assert_eq!(c.n_full, 1);
        assert_eq!(c.j(1), &identity(2));
    }

    #[test]
    fn classical_point_three_generators() {
        // AĀ unitary with A = I₃: the classical point for m = 3.
        let t = tl_validate(&identity(3), DEFAULT_TOL).unwrap();
        let c = build_chain(&t, 4, BUDGET).unwrap();
        assert_eq!(c.dims, vec![1, 3, 8, 21, 55]);
        for n in 0..=4 {
            assert!(oracle_compare(&c, n).unwrap() <= 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn chain_invariants_hold_across_q(qv in 0.25f64..1.0) {
            let t = tl_validate(&q_family(qv), DEFAULT_TOL).unwrap();
            let c = build_chain(&t, 4, BUDGET).unwrap();
            for n in 1..=4 {
                prop_assert!(isometry_defect(c.j(n)) <= 1e-10);
                prop_assert!(isometry_defect(c.k(n)) <= 1e-10);
                prop_assert!(oracle_compare(&c, n).unwrap() <= 1e-8);
            }
        }

        #[test]
        fn splits_recompose_norms(qv in 0.25f64..1.0) {
            let t = tl_validate(&q_family(qv), DEFAULT_TOL).unwrap();
            let c = build_chain(&t, 4, BUDGET).unwrap();
            // Splitting preserves inner products: S*S = I on H_n.
            for k in 0..=4usize {
                let s = sweedler_split(&c, 4, k).unwrap();
                let gram = s.adjoint() * &s;
                prop_assert!(opnorm(&(gram - identity(c.dim(4)))) <= 1e-10);
            }
        }
    }

    #[test]
    fn slot_rows_extracts_interleaved_rows() {
        let mat = CMat::from_row_slice(
            4,
            1,
            &[
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(3.0, 0.0),
                C64::new(4.0, 0.0),
            ],
        );
        let s0 = slot_rows(&mat, 2, 0);
        let s1 = slot_rows(&mat, 2, 1);
        assert_eq!(s0[(0, 0)].re, 1.0);
        assert_eq!(s0[(1, 0)].re, 3.0);
        assert_eq!(s1[(0, 0)].re, 2.0);
        assert_eq!(s1[(1, 0)].re, 4.0);
    }
}
