//! Order-sweep execution: build per order, extract (C_k, nu_k), evaluate,
//! diagnose, and mark the recommended order by the minimal
//! successive-difference rule.

use std::time::{SystemTime, UNIX_EPOCH};

use selfsim::borel::{
    asymptotics_from_transform, borel_sum_transform, select_u, transform_approximant,
    BorelError, Observable, UGrid,
};
use selfsim::difflog::exponent_estimate;
use selfsim::factor::{build, AsymptoticForm, BuildError, FactorApproximant, Validity};
use selfsim::numerics::{Prec, QuadOptions, Real};
use selfsim::oracles;
use selfsim::series::PowerSeries;

use crate::job::{JobInput, Method, ResummationJob, UObservable, UPolicy};
use crate::report::{DiagRow, EvalRow, ExactRow, JobReport, OrderRow, SCHEMA};

const SIG: u32 = 30; // significant digits in reports

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("input series could not be generated: {0}")]
    Input(String),
    #[error("internal numeric failure: {0}")]
    Internal(String),
}

pub fn run_job(job: &ResummationJob) -> Result<JobReport, RunError> {
    let max_order = *job.orders.iter().max().unwrap();
    let series = crate::job::realize_series(job, series_order_needed(job, max_order))
        .map_err(RunError::Input)?;
    let mut rows = Vec::with_capacity(job.orders.len());
    let mut warnings = Vec::new();
    for &k in &job.orders {
        let row = match job.method {
            Method::Factor => factor_row(job, &series, k, &mut warnings),
            Method::Borel => borel_row(job, &series, k, &mut warnings),
            Method::Difflog => difflog_row(&series, k),
        };
        rows.push(row);
    }
    let recommended = recommend(&rows, job.precision);
    let exact = exact_row(job).map_err(RunError::Internal)?;
    Ok(JobReport {
        schema: SCHEMA,
        generated_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        precision: job.precision.digits(),
        method: match job.method {
            Method::Factor => "factor",
            Method::Borel => "borel",
            Method::Difflog => "difflog",
        }
        .into(),
        job: job.canonical.clone(),
        orders: rows,
        recommended_order: recommended,
        exact,
        warnings,
    })
}

/// difflog builds at k-1 from a series truncated at k, so it needs one more
/// input coefficient than the largest requested order.
fn series_order_needed(job: &ResummationJob, max_order: usize) -> usize {
    match job.method {
        Method::Difflog => max_order,
        _ => max_order,
    }
}

fn fmt(v: &Real) -> String {
    v.to_decimal_string(SIG)
}

fn factor_row(
    job: &ResummationJob,
    series: &PowerSeries,
    k: usize,
    warnings: &mut Vec<String>,
) -> OrderRow {
    if k > series.order() {
        return OrderRow::skipped(
            k,
            "skipped-singular",
            format!("order {k} exceeds available coefficients ({})", series.order()),
        );
    }
    match build(series, k) {
        Ok(fa) => {
            let asy = fa.asymptotics();
            let evaluations = evaluate_points(job, &fa, warnings, k);
            let diagnostics = Some(diag_row(job, &fa));
            OrderRow {
                k,
                status: "ok".into(),
                u: None,
                u_strategy: None,
                c: Some(fmt(&asy.amplitude)),
                nu: Some(fmt(&asy.exponent)),
                validity: Some(validity_str(&asy)),
                note: asy.reason,
                evaluations,
                diagnostics,
            }
        }
        Err(e) => OrderRow::skipped(k, build_error_status(&e), e.to_string()),
    }
}

fn build_error_status(e: &BuildError) -> &'static str {
    match e {
        BuildError::NonRealResult { .. } => "skipped-nonreal",
        _ => "skipped-singular",
    }
}

fn borel_error_status(e: &BorelError) -> &'static str {
    match e {
        BorelError::Build(b) => build_error_status(b),
        BorelError::NoAdmissibleU { .. } => "skipped-nonreal",
        BorelError::NonSummableDirection { .. } => "skipped-nonreal",
        _ => "skipped-singular",
    }
}

fn validity_str(asy: &AsymptoticForm) -> String {
    match asy.validity {
        Validity::Clean => "clean".into(),
        Validity::Flagged => "flagged".into(),
    }
}

fn borel_row(
    job: &ResummationJob,
    series: &PowerSeries,
    k: usize,
    warnings: &mut Vec<String>,
) -> OrderRow {
    if k > series.order() {
        return OrderRow::skipped(
            k,
            "skipped-singular",
            format!("order {k} exceeds available coefficients ({})", series.order()),
        );
    }
    let p = job.precision;
    let (u, strategy_name, note): (Real, String, Option<String>) = match &job.u_policy {
        UPolicy::Fixed(u) => (u.clone(), "fixed".into(), None),
        UPolicy::Grid {
            min,
            max,
            step,
            observable,
        } => match grid_select(series, k, *min, *max, *step, observable, p) {
            Ok((u, note)) => (u, "grid-optimized".into(), note),
            Err(e) => return OrderRow::skipped(k, borel_error_status(&e), e.to_string()),
        },
        UPolicy::FixedGridFallback {
            fixed,
            min,
            max,
            step,
            observable,
        } => {
            // fixed u when it yields a clean real power law, else the grid
            let fixed_ok = transform_approximant(series, k, fixed)
                .ok()
                .and_then(|t| asymptotics_from_transform(&t, fixed).ok())
                .map(|a| a.validity == Validity::Clean)
                .unwrap_or(false);
            if fixed_ok {
                (fixed.clone(), "fixed".into(), None)
            } else {
                match grid_select(series, k, *min, *max, *step, observable, p) {
                    Ok((u, note)) => (
                        u,
                        "grid-optimized".into(),
                        Some(
                            note.map(|n| format!("fixed u failed realness; {n}"))
                                .unwrap_or_else(|| "fixed u failed realness".into()),
                        ),
                    ),
                    Err(e) => return OrderRow::skipped(k, borel_error_status(&e), e.to_string()),
                }
            }
        }
    };

    let transform = match transform_approximant(series, k, &u) {
        Ok(t) => t,
        Err(e) => return OrderRow::skipped(k, borel_error_status(&e), e.to_string()),
    };
    let asy = match asymptotics_from_transform(&transform, &u) {
        Ok(a) => a,
        Err(e) => return OrderRow::skipped(k, borel_error_status(&e), e.to_string()),
    };
    if asy.validity != Validity::Clean {
        return OrderRow::skipped(
            k,
            "skipped-nonreal",
            format!(
                "no real-valued strong-coupling form at u = {}: {}",
                fmt(&u),
                asy.reason.unwrap_or_default()
            ),
        );
    }
    let mut evaluations = Vec::new();
    for (x, label) in job.eval_points.iter().zip(&job.eval_labels) {
        let quad = QuadOptions::default();
        match borel_sum_transform(&transform, series, &u, x, &quad) {
            Ok(v) => evaluations.push(EvalRow {
                x: label.clone(),
                value: Some(fmt(&v)),
                note: None,
            }),
            Err(e) => {
                if !job.extrapolate {
                    warnings.push(format!(
                        "k={k}: eval point {label} not summable and extrapolate=false: {e}"
                    ));
                }
                evaluations.push(EvalRow {
                    x: label.clone(),
                    value: None,
                    note: Some(e.to_string()),
                });
            }
        }
    }
    let diagnostics = Some(diag_row(job, &transform));
    OrderRow {
        k,
        status: "ok".into(),
        u: Some(fmt(&u)),
        u_strategy: Some(strategy_name),
        c: Some(fmt(&asy.amplitude)),
        nu: Some(fmt(&asy.exponent)),
        validity: Some("clean".into()),
        note,
        evaluations,
        diagnostics,
    }
}

fn grid_select(
    series: &PowerSeries,
    k: usize,
    min: f64,
    max: f64,
    step: f64,
    observable: &UObservable,
    _p: Prec,
) -> Result<(Real, Option<String>), BorelError> {
    let grid = UGrid { min, max, step };
    let obs = match observable {
        UObservable::Exponent => Observable::Exponent,
        UObservable::ValueAt(x) => Observable::ValueAt(x.clone()),
    };
    if k >= 3 {
        let cp = select_u(series, k, &grid, &obs)?;
        Ok((cp.u, None))
    } else {
        // k = 2 has no predecessor; anchor on the (3, 2) successive pair
        let cp = select_u(series, 3, &grid, &obs)?;
        Ok((
            cp.u,
            Some("k=2 uses the u optimized for the (3,2) pair".into()),
        ))
    }
}

fn difflog_row(series: &PowerSeries, k: usize) -> OrderRow {
    if k > series.order() {
        return OrderRow::skipped(
            k,
            "skipped-singular",
            format!("order {k} exceeds available coefficients ({})", series.order()),
        );
    }
    match exponent_estimate(series, k) {
        Ok(est) => OrderRow {
            k,
            status: "ok".into(),
            u: None,
            u_strategy: None,
            c: None,
            nu: Some(fmt(&est.nu)),
            validity: Some(if est.admissible {
                "admissible".into()
            } else {
                "inadmissible".into()
            }),
            note: est.note,
            evaluations: vec![],
            diagnostics: None,
        },
        Err(e) => OrderRow::skipped(k, build_error_status(&e), e.to_string()),
    }
}

fn evaluate_points(
    job: &ResummationJob,
    fa: &FactorApproximant,
    warnings: &mut Vec<String>,
    k: usize,
) -> Vec<EvalRow> {
    let mut out = Vec::new();
    for (x, label) in job.eval_points.iter().zip(&job.eval_labels) {
        match fa.evaluate(x) {
            Ok(v) => out.push(EvalRow {
                x: label.clone(),
                value: Some(fmt(&v)),
                note: None,
            }),
            Err(e) => {
                if !job.extrapolate {
                    warnings.push(format!(
                        "k={k}: eval point {label} outside the admissible domain and extrapolate=false: {e}"
                    ));
                }
                out.push(EvalRow {
                    x: label.clone(),
                    value: None,
                    note: Some(e.to_string()),
                });
            }
        }
    }
    out
}

fn diag_row(job: &ResummationJob, fa: &FactorApproximant) -> DiagRow {
    let probes: Vec<Real> = if job.eval_points.is_empty() {
        ["0.5", "1", "2"]
            .iter()
            .filter_map(|s| Real::parse(s, job.precision))
            .collect()
    } else {
        job.eval_points.clone()
    };
    let d = fa.diagnostics(&probes);
    DiagRow {
        s_k: fmt(&d.s_k),
        max_pair_product: fmt(&d.max_pair_product),
        hankel_condition: d.hankel_condition.to_decimal_string(6),
        effective_rank: d.effective_rank,
        residual: fa.residual().to_decimal_string(6),
        reduced_from: fa.reduced_from(),
        s_probes: d
            .s_values
            .iter()
            .map(|(x, v)| (x.to_decimal_string(8), v.as_ref().map(fmt)))
            .collect(),
    }
}

/// Recommended order: smallest |nu_k - nu_{k-1}| over consecutive ok pairs,
/// ties toward larger k.
fn recommend(rows: &[OrderRow], p: Prec) -> Option<usize> {
    let mut best: Option<(Real, usize)> = None;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.k != a.k + 1 || a.status != "ok" || b.status != "ok" {
            continue;
        }
        let (Some(na), Some(nb)) = (&a.nu, &b.nu) else {
            continue;
        };
        let (Some(va), Some(vb)) = (Real::parse(na, p), Real::parse(nb, p)) else {
            continue;
        };
        let delta = (&vb - &va).abs();
        let better = match &best {
            None => true,
            Some((bd, bk)) => delta < *bd || (delta == *bd && b.k > *bk),
        };
        if better {
            best = Some((delta, b.k));
        }
    }
    best.map(|(_, k)| k)
}

fn exact_row(job: &ResummationJob) -> Result<Option<ExactRow>, String> {
    let p = job.precision;
    Ok(match &job.input {
        JobInput::Oscillator => {
            // strong-coupling amplitude from the diagonalization oracle
            let e = oracles::oscillator_energy(1e6, 1e-9, 2048).map_err(|e| e.to_string())?;
            let c = &e.value / &Real::from_i64(100, p);
            Some(ExactRow {
                source: "harmonic-basis diagonalization, E(g)/g^(1/3) at g = 10^6".into(),
                c: Some(c.to_decimal_string(6)),
                nu: Some("0.333333".into()),
            })
        }
        JobInput::ZPartition => {
            let c = oracles::z_strong_amplitude(p);
            Some(ExactRow {
                source: "Gamma(1/4)/(2 sqrt(pi)), exact strong-coupling limit".into(),
                c: Some(c.to_decimal_string(12)),
                nu: Some("-0.25".into()),
            })
        }
        JobInput::BetaSym { .. } => Some(ExactRow {
            source: "exact reduced form (1 - y)^(-1)".into(),
            c: Some("1".into()),
            nu: Some("-1".into()),
        }),
        JobInput::Soliton { equation, .. } => {
            let (c, nu, src) = match equation {
                selfsim::ode::SolitonEquation::Kink => {
                    ("2", "0", "exact z-form 2z/(1+z), boundary phi(inf) = 1")
                }
                selfsim::ode::SolitonEquation::Bell => (
                    "2.8284271247461900976",
                    "-1",
                    "exact z-form 2 sqrt(2) z/(1+z^2)",
                ),
            };
            Some(ExactRow {
                source: src.into(),
                c: Some(c.into()),
                nu: Some(nu.into()),
            })
        }
        JobInput::Inline { .. } => None,
    })
}
