//! Suite orchestration: one shared fiber chain, suites executed in
//! dependency order, every result (including module errors) surfaced as
//! a structured report entry.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tlfock_core::chain::{build_chain, bruteforce_fiber, oracle_compare, Chain};
use tlfock_core::duality::{build_wtilde, counit_index, defect_check, k_groups, wtilde_standard};
use tlfock_core::fock::{commutator_norms, fit_decay, relation_suite};
use tlfock_core::gnsfred::{
    build_v, compact_commutator_report, fred_commutator_decay, projection_estimate,
};
use tlfock_core::kms::{kms_check, letter_tuples, omega, KmsConfig, Word};
use tlfock_core::numerics::identity;
use tlfock_core::qarith::fiber_dims;
use tlfock_core::tlpoly::{dagger, tl_defect, tl_validate, TLData};
use tlfock_core::Result as CoreResult;

use crate::config::{RunSpec, Suite, SCHEMA_VERSION};
use crate::report::{decay_csv, overall_status, Report, SuiteEntry};

/// Residual ceiling for identities that hold exactly (zero commutators,
/// isometry defects, F² = 1, the KMS window); stricter than the general
/// tolerance because no truncation error enters them.
const EXACT_TOL: f64 = 1e-10;
/// Structural zeros (gauge-unbalanced state values) must vanish outright.
const STRUCTURAL_TOL: f64 = 1e-12;
/// Seed for the randomized KMS pair check, recorded in the report.
const KMS_PAIR_SEED: u64 = 20_260_814;
const KMS_PAIRS: usize = 100;

pub struct RunOutcome {
    pub report: Report,
    pub csv: Option<String>,
}

struct Ctx {
    t: TLData,
    chain: Chain,
    tol: f64,
    budget: u64,
    explicit: bool,
}

fn entry(suite: Suite, started: Instant, outcome: CoreResult<(bool, Value)>) -> SuiteEntry {
    let (status, detail) = match outcome {
        Ok((true, detail)) => ("pass", detail),
        Ok((false, detail)) => ("fail", detail),
        Err(e) => ("error", json!({ "error": e.to_string() })),
    };
    SuiteEntry {
        suite: suite.name(),
        status,
        wall_ms: started.elapsed().as_millis(),
        detail,
    }
}

fn skipped(suite: Suite, reason: &str) -> SuiteEntry {
    SuiteEntry {
        suite: suite.name(),
        status: "skipped",
        wall_ms: 0,
        detail: json!({ "reason": reason }),
    }
}

/// Runs the selected suites against a parsed spec. The coefficient
/// matrix is validated and the chain built once; a validation failure
/// produces a single-entry error report (exit 2) without running
/// anything else.
pub fn run(spec: &RunSpec, m_override: Option<usize>) -> RunOutcome {
    let mut entries: Vec<SuiteEntry> = Vec::new();
    let started = Instant::now();

    let validated = tl_validate(&spec.a, spec.tolerance)
        .and_then(|t| build_chain(&t, spec.n, spec.budget).map(|c| (t, c)));
    let (t, chain) = match validated {
        Ok(pair) => pair,
        Err(e) => {
            entries.push(SuiteEntry {
                suite: Suite::Validate.name(),
                status: "error",
                wall_ms: started.elapsed().as_millis(),
                detail: json!({ "error": e.to_string() }),
            });
            return finish(spec, None, None, entries, None);
        }
    };
    let q = t.q.get();
    let n_full = chain.n_full;
    let ctx = Ctx {
        t,
        chain,
        tol: spec.tolerance,
        budget: spec.budget,
        explicit: spec.suites_explicit,
    };

    let mut csv: Option<String> = None;
    for &suite in &spec.suites {
        let started = Instant::now();
        let e = match suite {
            Suite::Validate => entry(suite, started, suite_validate(&ctx)),
            Suite::Dims => entry(suite, started, suite_dims(&ctx)),
            Suite::Relations => entry(suite, started, suite_relations(&ctx)),
            Suite::Commutators => {
                let out = suite_commutators(&ctx);
                if let Ok((_, detail)) = &out {
                    csv.get_or_insert_with(|| commutator_csv(detail, q));
                }
                entry(suite, started, out)
            }
            Suite::Wtilde => entry(suite, started, suite_wtilde(&ctx)),
            Suite::Index => match index_skip_reason(&ctx) {
                Some(reason) => skipped(suite, &reason),
                None => entry(suite, started, suite_index(&ctx)),
            },
            Suite::Kms => match kms_skip_reason(&ctx) {
                Some(reason) => skipped(suite, &reason),
                None => entry(suite, started, suite_kms(&ctx)),
            },
            Suite::Fredholm => match fredholm_skip_reason(&ctx) {
                Some(reason) => skipped(suite, &reason),
                None => {
                    let out = suite_fredholm(&ctx);
                    if csv.is_none() {
                        if let Ok((_, detail)) = &out {
                            csv = Some(fredholm_csv(detail, q));
                        }
                    }
                    entry(suite, started, out)
                }
            },
            Suite::Kgroups => entry(suite, started, suite_kgroups(&ctx, m_override)),
        };
        entries.push(e);
    }

    finish(spec, Some(q), Some(n_full), entries, csv)
}

fn finish(
    spec: &RunSpec,
    q: Option<f64>,
    n_full: Option<usize>,
    entries: Vec<SuiteEntry>,
    csv: Option<String>,
) -> RunOutcome {
    let overall = overall_status(&entries);
    RunOutcome {
        report: Report {
            schema_version: SCHEMA_VERSION,
            m: spec.m,
            q,
            n: spec.n,
            n_full,
            budget: spec.budget,
            tolerance: spec.tolerance,
            threads: tlfock_core::par::thread_count(),
            suites: entries,
            overall,
        },
        csv,
    }
}

// Preconditions of individual suites. A defaulted selection skips the
// suite with the reason; an explicit one lets it run into the module's
// own error (input error, exit 2).

fn index_skip_reason(ctx: &Ctx) -> Option<String> {
    if ctx.explicit {
        return None;
    }
    (!ctx.t.standard_form)
        .then(|| "scalar index specialization needs a standard-form matrix".into())
}

fn kms_skip_reason(ctx: &Ctx) -> Option<String> {
    if ctx.explicit {
        return None;
    }
    (!ctx.t.standard_form)
        .then(|| "the invariant state's density needs a standard-form matrix".into())
}

fn fredholm_skip_reason(ctx: &Ctx) -> Option<String> {
    if ctx.explicit {
        return None;
    }
    (ctx.t.q.get() >= 1.0 - 1e-12)
        .then(|| "the coupling isometry needs a strictly deformed system (q < 1)".into())
}

fn suite_validate(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let (lambda, residual) = tl_defect(&ctx.t)?;
    let pass = residual <= ctx.tol;
    Ok((
        pass,
        json!({
            "m": ctx.t.m,
            "q": ctx.t.q.get(),
            "standard_form": ctx.t.standard_form,
            "exchange_scalar": lambda,
            "exchange_residual": residual,
        }),
    ))
}

fn suite_dims(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let c = &ctx.chain;
    let cap = c.n_full.min(6);
    let recursion = fiber_dims(ctx.t.m as u32, cap)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for n in 0..=cap {
        // The brute-force fiber is an ambient orthogonal projection;
        // its rank is its trace.
        let trace = bruteforce_fiber(&ctx.t, n)?.trace().re;
        let brute_rank = trace.round() as u64;
        let residual = oracle_compare(c, n)?;
        pass &= (trace - trace.round()).abs() <= 1e-6
            && brute_rank == c.dims[n]
            && c.dims[n] == recursion[n]
            && residual <= ctx.tol;
        rows.push(json!({
            "n": n,
            "dim": c.dims[n],
            "brute_rank": brute_rank,
            "oracle_residual": residual,
        }));
    }
    Ok((pass, json!({ "levels": rows })))
}

fn suite_relations(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let reports = relation_suite(&ctx.chain);
    let worst = reports
        .iter()
        .flat_map(|r| [r.quadratic, r.completeness, r.ccr, r.gauge])
        .fold(0.0f64, f64::max);
    let pass = worst <= ctx.tol;
    Ok((
        pass,
        json!({ "families": reports, "worst_residual": worst }),
    ))
}

fn suite_commutators(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let rows = commutator_norms(&ctx.chain);
    let q = ctx.t.q;
    let zero_worst = rows
        .iter()
        .filter_map(|r| r.zero_resid)
        .fold(0.0f64, f64::max);
    // At q = 1 the starred commutators decay like n^{-1/2} instead of
    // geometrically; fit the appropriate envelope.
    let classical = q.is_one();
    let table: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| {
            let scale = if classical {
                (r.level as f64).sqrt()
            } else {
                1.0
            };
            (r.level, r.star_norm * scale)
        })
        .collect();
    let (c_hat, monotone_tail) = fit_decay(&table, q);
    let pass = zero_worst <= EXACT_TOL && c_hat.is_finite();
    Ok((
        pass,
        json!({
            "levels": rows,
            "zero_commutator_max": zero_worst,
            "envelope": if classical { "inverse_sqrt" } else { "q_power" },
            "envelope_constant": c_hat,
            "envelope_tail_nonincreasing": monotone_tail,
        }),
    ))
}

fn wtilde_cap(m: usize) -> usize {
    match m {
        2 => 8,
        3 => 4,
        _ => 3,
    }
}

fn suite_wtilde(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let n_w = ctx.chain.n_max.min(wtilde_cap(ctx.t.m));
    let capped;
    let c = if n_w == ctx.chain.n_max {
        &ctx.chain
    } else {
        capped = build_chain(&ctx.t, n_w, ctx.budget)?;
        &capped
    };
    let w = build_wtilde(c)?;
    let defects = defect_check(&w);
    let standard_cross = if ctx.t.standard_form {
        let ws = wtilde_standard(&ctx.t, c)?;
        Some(w.sub(&ws).sup_norm())
    } else {
        None
    };
    let pass = defects.source <= ctx.tol
        && defects.range <= ctx.tol
        && defects.isometry <= ctx.tol
        && standard_cross.is_none_or(|x| x <= ctx.tol);
    Ok((
        pass,
        json!({
            "n": n_w,
            "defects": defects,
            "standard_cross_residual": standard_cross,
        }),
    ))
}

fn suite_index(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let report = counit_index(&ctx.t, &ctx.chain)?;
    let pass = report.kernel_dim == 1
        && report.cokernel_dim == 0
        && report.index == -1
        && report.sv_gap >= 1e3
        && report.source_defect <= ctx.tol
        && report.range_defect <= ctx.tol;
    Ok((pass, serde_json::to_value(&report).expect("plain numbers")))
}

fn suite_kms(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let c = &ctx.chain;
    let m = ctx.t.m;
    // Window: levels degree+k_margin ..= degree+k_margin+span−1 must
    // stay within the fully embedded range.
    let cfg = if c.n_full >= 7 {
        KmsConfig::default()
    } else {
        KmsConfig {
            k_margin: 1,
            stabilization_span: 2,
        }
    };
    let window = cfg.k_margin + cfg.stabilization_span - 1;
    let sweep_deg = 3.min(c.n_full.saturating_sub(window));
    let pair_deg = 3.min(c.n_full.saturating_sub(window) / 2);

    // Exhaustive monomial sweep: closed forms, window drift, structural
    // zeros.
    let mut closed_max = 0.0f64;
    let mut stab_max = 0.0f64;
    let mut unbalanced_max = 0.0f64;
    let mut count = 0usize;
    for p in 0..=sweep_deg {
        for r in 0..=sweep_deg - p {
            for xi in letter_tuples(m, p) {
                for eta in letter_tuples(m, r) {
                    let w = Word::monomial(c, &xi, &eta)?;
                    let rep = omega(c, &w, &cfg)?;
                    stab_max = stab_max.max(rep.stabilization);
                    if let Some(res) = rep.closed_form_residual {
                        closed_max = closed_max.max(res);
                    }
                    if p != r {
                        unbalanced_max = unbalanced_max.max(rep.value.norm());
                    }
                    count += 1;
                }
            }
        }
    }

    // State normalization: Σᵢ ω(sᵢsᵢ*) = 1.
    let mut total = 0.0f64;
    for i in 1..=m {
        let w = Word::monomial(c, &[i], &[i])?;
        total += omega(c, &w, &cfg)?.value.re;
    }
    let completeness_residual = (total - 1.0).abs();

    // Twisted trace identity on seeded random pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(KMS_PAIR_SEED);
    let draw = |rng: &mut ChaCha8Rng| -> CoreResult<Word> {
        let p = rng.random_range(0..=pair_deg);
        let r = rng.random_range(0..=pair_deg - p);
        let cre: Vec<usize> = (0..p).map(|_| rng.random_range(1..=m)).collect();
        let ann: Vec<usize> = (0..r).map(|_| rng.random_range(1..=m)).collect();
        Word::monomial(c, &cre, &ann)
    };
    let mut kms_max = 0.0f64;
    for _ in 0..KMS_PAIRS {
        let x = draw(&mut rng)?;
        let y = draw(&mut rng)?;
        kms_max = kms_max.max(kms_check(c, &x, &y, &cfg)?);
    }

    let pass = closed_max <= EXACT_TOL
        && stab_max <= EXACT_TOL
        && unbalanced_max <= STRUCTURAL_TOL
        && completeness_residual <= EXACT_TOL
        && kms_max <= EXACT_TOL;
    Ok((
        pass,
        json!({
            "window": { "k_margin": cfg.k_margin, "stabilization_span": cfg.stabilization_span },
            "sweep_degree": sweep_deg,
            "monomials": count,
            "closed_form_max": closed_max,
            "stabilization_max": stab_max,
            "unbalanced_max": unbalanced_max,
            "completeness_residual": completeness_residual,
            "pair_seed": KMS_PAIR_SEED,
            "pairs": KMS_PAIRS,
            "pair_degree": pair_deg,
            "kms_residual_max": kms_max,
        }),
    ))
}

fn fredholm_cap(m: usize) -> usize {
    match m {
        2 => 10,
        3 => 5,
        _ => 3,
    }
}

fn suite_fredholm(ctx: &Ctx) -> CoreResult<(bool, Value)> {
    let c = &ctx.chain;
    let n_v = c.n_full.min(fredholm_cap(ctx.t.m));
    let c_dag = build_chain(&dagger(&ctx.t), n_v, ctx.budget)?;
    let v = build_v(c, &c_dag, n_v)?;

    let isometry_max = (0..=n_v)
        .map(|n| {
            let vn = v.stacked(n);
            (vn.adjoint() * &vn - identity(c.dims[n] as usize)).norm()
        })
        .fold(0.0f64, f64::max);

    let decay = fred_commutator_decay(&v, c, &c_dag)?;
    let bounded = decay
        .left
        .iter()
        .chain(decay.right.iter())
        .all(|r| r.c_n <= r.bound_n);
    let witnessed = decay.left.last().is_some_and(|r| r.c_n < decay.left[1].c_n)
        && decay.right.last().is_some_and(|r| r.c_n < decay.right[1].c_n);

    let projection = projection_estimate(c)?;
    let compact = compact_commutator_report(&v, c, &c_dag, n_v - 1)?;
    // Compactness proxy: commutator norms shrink with the degree once
    // past the low-degree transient.
    let tail: Vec<f64> = compact.rows.iter().skip(2).map(|&(_, r)| r).collect();
    let compact_decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
        && compact.rows.last().is_some_and(|&(_, r)| r < compact.rows[2].1);

    let pass = isometry_max <= EXACT_TOL
        && bounded
        && witnessed
        && projection.c1_hat.is_finite()
        && compact.f_square_defect <= EXACT_TOL
        && compact_decreasing;
    Ok((
        pass,
        json!({
            "n_v": n_v,
            "isometry_max": isometry_max,
            "decay": decay,
            "defects_bounded": bounded,
            "decay_witnessed": witnessed,
            "projection": projection,
            "compact": compact,
            "compact_decreasing": compact_decreasing,
        }),
    ))
}

fn suite_kgroups(ctx: &Ctx, m_override: Option<usize>) -> CoreResult<(bool, Value)> {
    let m = m_override.unwrap_or(ctx.t.m);
    let (algebra, k_homology) = k_groups(m)?;
    Ok((
        true,
        json!({ "m": m, "algebra": algebra, "k_homology": k_homology }),
    ))
}

fn commutator_csv(detail: &Value, q: f64) -> String {
    let rows: Vec<(usize, f64)> = detail["levels"]
        .as_array()
        .map(|rows| {
            rows.iter()
                .map(|r| {
                    (
                        r["level"].as_u64().unwrap_or(0) as usize,
                        r["star_norm"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    decay_csv(&rows, q)
}

fn fredholm_csv(detail: &Value, q: f64) -> String {
    let rows: Vec<(usize, f64)> = detail["decay"]["left"]
        .as_array()
        .map(|rows| {
            rows.iter()
                .map(|r| {
                    (
                        r["n"].as_u64().unwrap_or(0) as usize,
                        r["c_n"].as_f64().unwrap_or(f64::NAN),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    decay_csv(&rows, q)
}
