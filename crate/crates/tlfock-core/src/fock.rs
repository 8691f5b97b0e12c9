//! Graded operators on the truncated Fock space and the relation suites.
//!
//! The Fock space ⊕_n H_n is carried level by level; an operator of
//! degree s is the family of its blocks H_n → H_{n+s} in compressed
//! coordinates. Every identity below holds on the full Fock space, so on
//! a truncation it holds exactly on an interior interval of levels; the
//! interval is tracked as mandatory metadata and compositions narrow it
//! automatically. Levels below the vacuum are the zero space: blocks
//! with a zero dimension make vacuum-crossing products exact zeros
//! instead of special cases.
//!
//! Two creation families act on the same space: left tensoring
//! L_i ξ = f_{n+1}(ξ_i⊗ξ) and right tensoring R_i ξ = f_{n+1}(ξ⊗ξ_i).
//! The L-family satisfies the defining relations of the coefficient
//! matrix A, the R-family those of Aᵗ. [`relation_suite`] verifies both;
//! [`commutator_norms`] measures the exact commutation [L_i, R_j] = 0 and
//! the geometric decay of [L_i*, R_j].

use std::collections::BTreeMap;

use crate::chain::{slot_rows, Chain};
use crate::numerics::{identity, opnorm, C64, CMat};
use crate::par::par_map;
use crate::qarith::phi;

/// A degree-homogeneous operator between levels of the truncated Fock
/// space: block at source level n maps H_n → H_{n+shift}.
///
/// `valid_lo..=valid_hi` is the source-level interval on which the
/// operator's blocks agree with the untruncated operator; a block exists
/// for every level of the interval. Levels < 0 have dimension zero.
#[derive(Debug, Clone)]
pub struct GradedOp {
    pub shift: i64,
    blocks: BTreeMap<i64, CMat>,
    pub valid_lo: i64,
    pub valid_hi: i64,
}

impl GradedOp {
    /// The block at source level n, if n is within validity.
    pub fn block(&self, n: i64) -> Option<&CMat> {
        self.blocks.get(&n)
    }

    /// Blockwise conjugate transpose: degree −shift, block at level
    /// n+shift is block(n)*.
    pub fn adjoint(&self) -> GradedOp {
        let blocks = self
            .blocks
            .iter()
            .map(|(&n, b)| (n + self.shift, b.adjoint()))
            .collect();
        GradedOp {
            shift: -self.shift,
            blocks,
            valid_lo: self.valid_lo + self.shift,
            valid_hi: self.valid_hi + self.shift,
        }
    }

    /// Operator product self∘g (g acts first). The validity interval is
    /// the largest one on which both factors are valid.
    pub fn compose(&self, g: &GradedOp) -> GradedOp {
        let lo = g.valid_lo.max(self.valid_lo - g.shift);
        let hi = g.valid_hi.min(self.valid_hi - g.shift);
        let levels: Vec<i64> = (lo..=hi).collect();
        let computed = par_map(&levels, |&n| {
            self.blocks[&(n + g.shift)].clone() * &g.blocks[&n]
        });
        GradedOp {
            shift: self.shift + g.shift,
            blocks: levels.into_iter().zip(computed).collect(),
            valid_lo: lo,
            valid_hi: hi,
        }
    }

    /// Sum of two operators of the same degree, on the common interval.
    pub fn add(&self, other: &GradedOp) -> GradedOp {
        assert_eq!(self.shift, other.shift, "cannot add different degrees");
        let lo = self.valid_lo.max(other.valid_lo);
        let hi = self.valid_hi.min(other.valid_hi);
        let blocks = (lo..=hi)
            .map(|n| (n, &self.blocks[&n] + &other.blocks[&n]))
            .collect();
        GradedOp {
            shift: self.shift,
            blocks,
            valid_lo: lo,
            valid_hi: hi,
        }
    }

    pub fn sub(&self, other: &GradedOp) -> GradedOp {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> GradedOp {
        GradedOp {
            shift: self.shift,
            blocks: self.blocks.iter().map(|(&n, b)| (n, b * z)).collect(),
            valid_lo: self.valid_lo,
            valid_hi: self.valid_hi,
        }
    }

    /// Largest block operator norm over source levels lo..=hi. The range
    /// must lie within validity: residuals outside it are not claims.
    pub fn sup_norm(&self, lo: i64, hi: i64) -> f64 {
        assert!(
            lo >= self.valid_lo && hi <= self.valid_hi && lo <= hi,
            "norm requested on [{lo},{hi}] outside validity [{},{}]",
            self.valid_lo,
            self.valid_hi
        );
        let levels: Vec<i64> = (lo..=hi).collect();
        par_map(&levels, |n| opnorm(&self.blocks[n]))
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Right creation R_i (1-based): ξ ↦ f_{n+1}(ξ⊗ξ_i), degree +1, valid on
/// source levels −1..=n_max−1 (level −1 is the zero space).
pub fn creation_right(c: &Chain, i: usize) -> GradedOp {
    let m = c.t.m;
    assert!((1..=m).contains(&i), "generator index {i} out of 1..={m}");
    let mut blocks = BTreeMap::new();
    blocks.insert(-1, CMat::zeros(1, 0));
    for n in 0..c.n_max {
        // In H_n⊗C^m coordinates, ξ⊗ξ_i occupies the slot-(i−1) rows;
        // projecting onto H_{n+1} is J_{n+1}* on those rows.
        blocks.insert(n as i64, slot_rows(c.j(n + 1), m, i - 1).adjoint());
    }
    GradedOp {
        shift: 1,
        blocks,
        valid_lo: -1,
        valid_hi: c.n_max as i64 - 1,
    }
}

/// Left creation L_i (1-based): ξ ↦ f_{n+1}(ξ_i⊗ξ), degree +1, valid on
/// source levels −1..=n_full−1 (left embeddings stop at n_full).
pub fn creation_left(c: &Chain, i: usize) -> GradedOp {
    let m = c.t.m;
    assert!((1..=m).contains(&i), "generator index {i} out of 1..={m}");
    let mut blocks = BTreeMap::new();
    blocks.insert(-1, CMat::zeros(1, 0));
    for n in 0..c.n_full {
        let d_n = c.dim(n);
        // In C^m⊗H_n coordinates, ξ_i⊗ξ occupies the contiguous block of
        // rows starting at (i−1)·d_n.
        let slice = c.k(n + 1).rows((i - 1) * d_n, d_n).clone_owned();
        blocks.insert(n as i64, slice.adjoint());
    }
    GradedOp {
        shift: 1,
        blocks,
        valid_lo: -1,
        valid_hi: c.n_full as i64 - 1,
    }
}

/// Degree-0 multiplier n ↦ f(n)·I on levels 0..=n_hi.
pub fn diag_symbol<F: Fn(usize) -> C64>(c: &Chain, f: F, n_hi: usize) -> GradedOp {
    let blocks = (0..=n_hi as i64)
        .map(|n| (n, identity(c.dim(n as usize)) * f(n as usize)))
        .collect();
    GradedOp {
        shift: 0,
        blocks,
        valid_lo: 0,
        valid_hi: n_hi as i64,
    }
}

/// Residuals of the defining relations for one creation family.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RelationReport {
    /// "left" or "right".
    pub family: String,
    /// Largest level the family is valid for (n_full for left, n_max for
    /// right).
    pub cap: usize,
    /// sup‖Σ_{ij} c_{ij} S_iS_j‖ on [0, cap−2]: the defining quadratic.
    pub quadratic: f64,
    /// sup‖Σ_i S_iS_i* − (1 − e₀)‖ on [0, cap].
    pub completeness: f64,
    /// max_{ij} sup‖S_i*S_j + φ·Σ_{kl} c_{ik}c̄_{jl} S_kS_l* − δ_{ij}‖ on
    /// [0, cap−1]: the deformed commutation relation.
    pub ccr: f64,
    /// max over f ∈ {φ, 1_{{0}}} and i of sup‖f·S_i − S_i·γ(f)‖ on
    /// [0, cap−1], where γ(f)(n) = f(n+1).
    pub gauge: f64,
}

fn family_report<F: Fn(usize, usize) -> C64 + Sync>(
    c: &Chain,
    ops: &[GradedOp],
    coeff: F,
    family: &str,
    cap: usize,
) -> RelationReport {
    let m = c.t.m;
    let one = C64::new(1.0, 0.0);
    let q = c.t.q;

    let quadratic = {
        let mut sum: Option<GradedOp> = None;
        for i in 0..m {
            for j in 0..m {
                let term = ops[i].compose(&ops[j]).scale(coeff(i, j));
                sum = Some(match sum {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
        }
        sum.unwrap().sup_norm(0, cap as i64 - 2)
    };

    let completeness = {
        let mut sum: Option<GradedOp> = None;
        for op in ops {
            let term = op.compose(&op.adjoint());
            sum = Some(match sum {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        let target = diag_symbol(c, |n| if n == 0 { C64::ZERO } else { one }, cap);
        sum.unwrap().sub(&target).sup_norm(0, cap as i64)
    };

    let ccr = {
        let phi_op = diag_symbol(c, |n| C64::new(phi(n as u32, q), 0.0), cap);
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .collect();
        let outer: Vec<GradedOp> = pairs
            .iter()
            .map(|&(k, l)| ops[k].compose(&ops[l].adjoint()))
            .collect();
        let residuals = par_map(&pairs, |&(i, j)| {
            let mut sum: Option<GradedOp> = None;
            for (idx, &(k, l)) in pairs.iter().enumerate() {
                let z = coeff(i, k) * coeff(j, l).conj();
                let term = outer[idx].scale(z);
                sum = Some(match sum {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
            let mut rel = ops[i].adjoint().compose(&ops[j]).add(&phi_op.compose(&sum.unwrap()));
            if i == j {
                rel = rel.sub(&diag_symbol(c, |_| one, cap));
            }
            rel.sup_norm(0, cap as i64 - 1)
        });
        residuals.into_iter().fold(0.0, f64::max)
    };

    let gauge = {
        let symbols: [&dyn Fn(usize) -> C64; 2] = [
            &|n| C64::new(phi(n as u32, q), 0.0),
            &|n| if n == 0 { one } else { C64::ZERO },
        ];
        let mut worst = 0.0_f64;
        for f in symbols {
            let f_op = diag_symbol(c, f, cap);
            let shifted = diag_symbol(c, |n| f(n + 1), cap - 1);
            for op in ops {
                let diff = f_op.compose(op).sub(&op.compose(&shifted));
                worst = worst.max(diff.sup_norm(0, cap as i64 - 1));
            }
        }
        worst
    };

    RelationReport {
        family: family.to_string(),
        cap,
        quadratic,
        completeness,
        ccr,
        gauge,
    }
}

/// Verifies the defining relations for both creation families: the
/// L-family against the coefficients a_{ij}, the R-family against the
/// transpose. All residuals are exact-identity claims on the stated
/// interior intervals, so they should sit at rounding level.
pub fn relation_suite(c: &Chain) -> Vec<RelationReport> {
    assert!(c.n_full >= 3, "relation suite needs n_full >= 3");
    let m = c.t.m;
    let left: Vec<GradedOp> = (1..=m).map(|i| creation_left(c, i)).collect();
    let right: Vec<GradedOp> = (1..=m).map(|i| creation_right(c, i)).collect();
    let a = c.t.a.clone();
    vec![
        family_report(c, &left, |i, j| a[(i, j)], "left", c.n_full),
        family_report(c, &right, |i, j| a[(j, i)], "right", c.n_max),
    ]
}

/// Mixed commutators at one level.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CommutatorRow {
    pub level: usize,
    /// max_{ij} ‖[L_i, R_j]‖ at this level; None where the degree-+2
    /// block would cross the truncation.
    pub zero_resid: Option<f64>,
    /// max_{ij} ‖[L_i*, R_j]‖ at this level.
    pub star_norm: f64,
}

/// Evaluates [L_i, R_j] (exactly zero) and [L_i*, R_j] (geometrically
/// small) per level on 1..=n_full−1.
pub fn commutator_norms(c: &Chain) -> Vec<CommutatorRow> {
    assert!(c.n_full >= 2, "commutator table needs n_full >= 2");
    let m = c.t.m;
    let left: Vec<GradedOp> = (1..=m).map(|i| creation_left(c, i)).collect();
    let right: Vec<GradedOp> = (1..=m).map(|i| creation_right(c, i)).collect();

    let mut zero_worst: BTreeMap<i64, f64> = BTreeMap::new();
    let mut star_worst: BTreeMap<i64, f64> = BTreeMap::new();
    for l in &left {
        for r in &right {
            let comm = l.compose(r).sub(&r.compose(l));
            let star_comm = l.adjoint().compose(r).sub(&r.compose(&l.adjoint()));
            for n in comm.valid_lo.max(0)..=comm.valid_hi {
                let v = opnorm(comm.block(n).unwrap());
                let e = zero_worst.entry(n).or_insert(0.0);
                *e = e.max(v);
            }
            for n in star_comm.valid_lo.max(0)..=star_comm.valid_hi {
                let v = opnorm(star_comm.block(n).unwrap());
                let e = star_worst.entry(n).or_insert(0.0);
                *e = e.max(v);
            }
        }
    }

    (1..c.n_full)
        .map(|n| CommutatorRow {
            level: n,
            zero_resid: zero_worst.get(&(n as i64)).copied(),
            star_norm: star_worst[&(n as i64)],
        })
        .collect()
}

/// Fits a geometric envelope to a decay table: C_hat = max value/qⁿ, and
/// whether value/qⁿ is nonincreasing on the last half of the range (with
/// a 1e−9 relative rounding guard).
pub fn fit_decay(table: &[(usize, f64)], q: crate::qarith::QParam) -> (f64, bool) {
    assert!(!table.is_empty(), "decay fit needs at least one entry");
    let ratios: Vec<f64> = table
        .iter()
        .map(|&(n, v)| v / q.get().powi(n as i32))
        .collect();
    let c_hat = ratios.iter().copied().fold(0.0, f64::max);
    let tail = &ratios[ratios.len() / 2..];
    let monotone_tail = tail
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + f64::MIN_POSITIVE);
    (c_hat, monotone_tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, DEFAULT_BUDGET};
    use crate::qarith::QParam;
    use crate::testutil::{q_family_data, standard_m3_data};
    use approx::assert_abs_diff_eq;

    #[test]
    fn creation_on_vacuum_is_the_basis_column() {
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        for i in 1..=2 {
            let r = creation_right(&c, i);
            let l = creation_left(&c, i);
            let rb = r.block(0).unwrap();
            let lb = l.block(0).unwrap();
            assert_eq!(rb.shape(), (2, 1));
            for s in 0..2 {
                let expect = if s == i - 1 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(rb[(s, 0)].re, expect, epsilon = 1e-12);
            }
            // One letter: left and right tensoring agree.
            assert!(opnorm(&(rb - lb)) <= 1e-12);
        }
    }

    #[test]
    fn annihilation_of_distinct_letters_is_orthonormal() {
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                let l_i = creation_left(&c, i);
                let l_j = creation_left(&c, j);
                let prod = l_i.adjoint().compose(&l_j);
                let b = prod.block(0).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(b[(0, 0)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(b[(0, 0)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn classical_left_creation_halves_the_mixed_word() {
        // At q = 1, f₂(ξ₁⊗ξ₂) = (ξ₁ξ₂ + ξ₂ξ₁)/2 has squared norm 1/2.
        let c = build_chain(&q_family_data(1.0), 4, DEFAULT_BUDGET).unwrap();
        let l1 = creation_left(&c, 1);
        let col = l1.block(1).unwrap().column(1).clone_owned();
        assert_abs_diff_eq!(col.norm_squared(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_is_blockwise_conjugate_transpose() {
        let c = build_chain(&q_family_data(0.5), 5, DEFAULT_BUDGET).unwrap();
        let r = creation_right(&c, 2);
        let ra = r.adjoint();
        assert_eq!(ra.shift, -1);
        for n in 0..=4i64 {
            assert_eq!(ra.block(n + 1).unwrap(), &r.block(n).unwrap().adjoint());
        }
        assert_eq!(ra.valid_lo, 0);
        assert_eq!(ra.valid_hi, 5);
    }

    #[test]
    fn composition_tracks_validity() {
        let c = build_chain(&q_family_data(0.5), 5, DEFAULT_BUDGET).unwrap();
        let l = creation_left(&c, 1);
        let two_up = l.compose(&l);
        assert_eq!(two_up.shift, 2);
        assert_eq!(two_up.valid_lo, -1);
        assert_eq!(two_up.valid_hi, 3);
        let number_like = l.adjoint().compose(&l);
        assert_eq!(number_like.shift, 0);
        assert_eq!(number_like.valid_lo, -1);
        assert_eq!(number_like.valid_hi, 4);
        // The annihilate-then-create composite still covers the vacuum.
        let create_annihilate = l.compose(&l.adjoint());
        assert_eq!(create_annihilate.valid_lo, 0);
        assert_eq!(create_annihilate.valid_hi, 5);
    }

    #[test]
    fn vacuum_crossing_products_vanish_exactly() {
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        let l = creation_left(&c, 1);
        let prod = l.compose(&l.adjoint());
        // L L* at level 0 annihilates the vacuum: a true zero, via the
        // dimension-zero intermediate level.
        let b = prod.block(0).unwrap();
        assert_eq!(b.shape(), (1, 1));
        assert_eq!(b[(0, 0)], C64::ZERO);
    }

    #[test]
    fn diag_symbol_cases() {
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        let one = diag_symbol(&c, |_| C64::new(1.0, 0.0), 4);
        for n in 0..=4i64 {
            assert_eq!(one.block(n).unwrap(), &identity(c.dim(n as usize)));
        }
        let e0 = diag_symbol(&c, |n| if n == 0 { C64::new(1.0, 0.0) } else { C64::ZERO }, 4);
        assert_eq!(e0.block(0).unwrap()[(0, 0)].re, 1.0);
        assert_eq!(opnorm(e0.block(3).unwrap()), 0.0);
    }

    #[test]
    fn relation_residuals_vanish_for_two_generators() {
        for &qv in &[0.5, 1.0] {
            let c = build_chain(&q_family_data(qv), 10, DEFAULT_BUDGET).unwrap();
            for report in relation_suite(&c) {
                assert!(report.quadratic <= 1e-8, "{} {}", report.family, report.quadratic);
                assert!(report.completeness <= 1e-8, "{}", report.completeness);
                assert!(report.ccr <= 1e-8, "{}", report.ccr);
                assert!(report.gauge <= 1e-12, "{}", report.gauge);
            }
        }
    }

    #[test]
    fn relation_residuals_vanish_for_three_generators() {
        let c = build_chain(&standard_m3_data(), 5, DEFAULT_BUDGET).unwrap();
        for report in relation_suite(&c) {
            assert!(report.quadratic <= 1e-8);
            assert!(report.completeness <= 1e-8);
            assert!(report.ccr <= 1e-8);
            assert!(report.gauge <= 1e-12);
        }
    }

    #[test]
    fn quadratic_relation_on_vacuum_reaches_the_removed_vector() {
        // Σ a_ij L_iL_j applied to the vacuum lands on f₂(P) = 0.
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        let l: Vec<GradedOp> = (1..=2).map(|i| creation_left(&c, i)).collect();
        let mut sum: Option<GradedOp> = None;
        for i in 0..2 {
            for j in 0..2 {
                let term = l[i].compose(&l[j]).scale(c.t.a[(i, j)]);
                sum = Some(match sum {
                    None => term,
                    Some(acc) => acc.add(&term),
                });
            }
        }
        assert!(opnorm(sum.unwrap().block(0).unwrap()) <= 1e-10);
    }

    #[test]
    fn mixed_commutators_vanish_and_starred_ones_decay() {
        let c = build_chain(&q_family_data(0.5), 8, DEFAULT_BUDGET).unwrap();
        let rows = commutator_norms(&c);
        assert_eq!(rows.len(), 7);
        for row in &rows {
            if let Some(z) = row.zero_resid {
                assert!(z <= 1e-10, "level {}: {}", row.level, z);
            }
            assert!(row.star_norm.is_finite());
        }
        // The last level's degree-+2 block crosses the truncation.
        assert!(rows.last().unwrap().zero_resid.is_none());
        let table: Vec<(usize, f64)> = rows.iter().map(|r| (r.level, r.star_norm)).collect();
        let (c_hat, _) = fit_decay(&table, c.t.q);
        assert!(c_hat.is_finite());
        // Geometric decay: the envelope constant is modest.
        assert!(c_hat <= 4.0, "C_hat = {c_hat}");
    }

    #[test]
    fn three_generator_star_commutators_decay_geometrically() {
        let c = build_chain(&standard_m3_data(), 6, DEFAULT_BUDGET).unwrap();
        let rows = commutator_norms(&c);
        let table: Vec<(usize, f64)> = rows.iter().map(|r| (r.level, r.star_norm)).collect();
        let (c_hat, _) = fit_decay(&table, c.t.q);
        assert!(c_hat <= 4.0, "C_hat = {c_hat}");
        for row in &rows {
            if let Some(z) = row.zero_resid {
                assert!(z <= 1e-10);
            }
        }
    }

    #[test]
    fn classical_star_commutators_decay_like_inverse_sqrt() {
        let c = build_chain(&q_family_data(1.0), 10, DEFAULT_BUDGET).unwrap();
        let rows = commutator_norms(&c);
        for row in &rows {
            let bound = 4.0 / (row.level as f64).sqrt();
            assert!(row.star_norm <= bound, "level {}: {}", row.level, row.star_norm);
        }
    }

    #[test]
    fn decay_fit_reference_cases() {
        let q1 = QParam::new(1.0).unwrap();
        let (c_hat, monotone) = fit_decay(&[(1, 0.7), (2, 0.7), (3, 0.7)], q1);
        assert_abs_diff_eq!(c_hat, 0.7, epsilon = 1e-15);
        assert!(monotone);

        let qh = QParam::new(0.5).unwrap();
        let table: Vec<(usize, f64)> = (1..=6).map(|n| (n, 0.5f64.powi(n as i32))).collect();
        let (c_hat, monotone) = fit_decay(&table, qh);
        assert_abs_diff_eq!(c_hat, 1.0, epsilon = 1e-12);
        assert!(monotone);

        let rising: Vec<(usize, f64)> = (1..=6).map(|n| (n, 0.8f64.powi(n as i32))).collect();
        let (c_hat, monotone) = fit_decay(&rising, qh);
        assert!(c_hat > 1.0);
        assert!(!monotone);
    }

    #[test]
    fn left_creation_matches_ambient_tensoring() {
        // Independent oracle: compare L_i against ι-conjugated ambient
        // tensoring x ↦ f_{n+1}(e_i⊗x).
        let c = build_chain(&standard_m3_data(), 4, DEFAULT_BUDGET).unwrap();
        let m = c.t.m;
        for i in 1..=m {
            let l = creation_left(&c, i);
            for n in 0..4usize {
                let io_n = c.iota(n);
                let io_next = c.iota(n + 1);
                // e_i ⊗ ι_n x in ambient coordinates, then compress.
                let mut lift = CMat::zeros(m * io_n.nrows(), c.dim(n));
                lift.view_mut(((i - 1) * io_n.nrows(), 0), (io_n.nrows(), c.dim(n)))
                    .copy_from(io_n);
                let ambient = io_next.adjoint() * lift;
                assert!(opnorm(&(ambient - l.block(n as i64).unwrap())) <= 1e-10);
            }
        }
    }

    #[test]
    fn sup_norm_rejects_ranges_outside_validity() {
        let c = build_chain(&q_family_data(0.5), 4, DEFAULT_BUDGET).unwrap();
        let l = creation_left(&c, 1);
        let result = std::panic::catch_unwind(|| l.sup_norm(0, 10));
        assert!(result.is_err());
    }
}
