//! Weighted quadrature on the half line.
//!
//! Double-exponential transformation t = exp(c sinh tau) with trapezoidal
//! refinement: each level halves the step and reuses previous nodes, so the
//! node set is fixed-rule + adaptive refinement. The weight e^(-t) t^u is
//! folded in analytically (ln t = c sinh tau is available for free, so t^u
//! costs one exp).

use super::prec::{Prec, Real};
use super::NumericsError;

#[derive(Clone, Debug)]
pub struct QuadOptions {
    /// Target relative tolerance as a power of ten (default 1e-20).
    pub rel_tol_log10: i64,
    pub max_levels: usize,
    pub initial_step: f64,
    /// Coefficient of t in the exponential decay of the full integrand
    /// (1 for the plain Borel weight; 1 - cx when the transform carries an
    /// exponential factor e^(cxt)).
    pub decay_rate: f64,
    /// Assumed cap on power-law growth of the profile function, used only to
    /// place the initial upper truncation point.
    pub power_cap: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol_log10: -20,
            max_levels: 10,
            initial_step: 0.5,
            decay_rate: 1.0,
            power_cap: 64.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: Real,
    pub error_estimate: Real,
    pub levels: usize,
    pub evaluations: usize,
}

/// integral over (0, inf) of e^(-t) t^u f(t) dt for u > -1.
pub fn integrate_halfline<F>(
    mut f: F,
    u: &Real,
    p: Prec,
    opts: &QuadOptions,
) -> Result<QuadResult, NumericsError>
where
    F: FnMut(&Real) -> Result<Real, NumericsError>,
{
    let minus_one = Real::from_i64(-1, p);
    if !(u > &minus_one) {
        return Err(NumericsError::InvalidInput(format!(
            "weight exponent u = {u} must exceed -1"
        )));
    }
    let uf = u.to_f64();
    let u = u.clone();
    de_integrate(
        move |t: &Real, ln_t: &Real| -> Result<Real, NumericsError> {
            let fv = f(t)?;
            if fv.is_nan() {
                return Err(NumericsError::QuadratureSingularity {
                    t: t.to_decimal_string(8),
                    detail: "integrand returned NaN".into(),
                });
            }
            // e^(-t) t^u = exp(u ln t - t)
            let w = (&(&u * ln_t) - t).exp();
            Ok(&w * &fv)
        },
        uf,
        p,
        opts,
    )
}

/// integral over (0, inf) of g(t) dt for integrands decaying at least
/// exponentially at infinity and integrable at zero.
pub fn integrate_halfline_raw<F>(
    mut g: F,
    p: Prec,
    opts: &QuadOptions,
) -> Result<QuadResult, NumericsError>
where
    F: FnMut(&Real) -> Result<Real, NumericsError>,
{
    de_integrate(move |t: &Real, _ln_t: &Real| g(t), 0.0, p, opts)
}

/// Core rule: sum over tau of  G(t(tau)) * dt/dtau, t = exp(c sinh tau).
fn de_integrate<G>(
    mut g: G,
    u_hint: f64,
    p: Prec,
    opts: &QuadOptions,
) -> Result<QuadResult, NumericsError>
where
    G: FnMut(&Real, &Real) -> Result<Real, NumericsError>,
{
    let c = std::f64::consts::FRAC_PI_2;
    let digits = p.digits().min((-opts.rel_tol_log10).max(10) as u32 + 15) as f64;
    let ln10 = std::f64::consts::LN_10;

    // lower truncation: t^(u+1) below 10^-(digits+8)
    let u_eff = u_hint.max(-0.95) + 1.0;
    let ln_t_min = -(digits + 8.0) * ln10 / u_eff;
    let tau_lo = -((-ln_t_min / c).asinh());
    // upper truncation: decay*t - power_cap*ln t above (digits+8)*ln 10
    let decay = opts.decay_rate.max(1e-6);
    let d_target = (digits + 8.0) * ln10;
    let mut t_max = (d_target + opts.power_cap.max(0.0)) / decay;
    for _ in 0..40 {
        t_max = (d_target + opts.power_cap.max(0.0) * t_max.max(2.0).ln()) / decay;
    }
    let tau_hi = (t_max.ln() / c).asinh();

    // dyadic grid bounds for exact node positions across levels
    let tau_lo = (tau_lo * 16.0).floor() / 16.0;
    let mut tau_hi = (tau_hi * 16.0).ceil() / 16.0;
    let h0 = opts.initial_step;

    let half = Real::from_f64(0.5, p);
    let c_r = &Real::pi(p) * &half;
    let tol = Real::pow10(opts.rel_tol_log10, p);
    let tiny = Real::pow10(-(2 * p.digits() as i64), p);

    let mut evaluations = 0usize;
    let mut node = |tau_f: f64| -> Result<Real, NumericsError> {
        let tau = Real::from_f64(tau_f, p);
        let e = tau.exp();
        let sinh = &(&e - &e.recip()) * &half;
        let cosh = &(&e + &e.recip()) * &half;
        let ln_t = &c_r * &sinh;
        let t = ln_t.exp();
        let gv = g(&t, &ln_t)?;
        evaluations += 1;
        // dt/dtau = t * c * cosh(tau)
        Ok(&gv * &(&(&t * &c_r) * &cosh))
    };

    // level 0 with tail extension: keep pushing the upper bound out while the
    // boundary term is not negligible relative to the running sum
    let mut sum = Real::zero(p);
    let mut tau = tau_lo;
    let mut last_mag = Real::zero(p);
    let mut growth_strikes = 0u32;
    while tau <= tau_hi + 1e-12 {
        let w = node(tau)?;
        let mag = w.abs();
        sum = &sum + &w;
        if tau + h0 > tau_hi {
            let scale = &(&sum.abs() + &tiny) * &tol;
            if mag > scale {
                if mag > last_mag && !last_mag.is_zero() {
                    growth_strikes += 1;
                } else {
                    growth_strikes = 0;
                }
                if growth_strikes >= 3 || tau_hi > 14.0 {
                    return Err(NumericsError::QuadratureDivergence {
                        tail: mag.to_decimal_string(6),
                    });
                }
                tau_hi += 1.0;
            }
        }
        last_mag = mag;
        tau += h0;
    }
    let mut value = &sum * &Real::from_f64(h0, p);

    let mut err = value.abs();
    let mut h = h0;
    let mut level = 0usize;
    while level < opts.max_levels {
        level += 1;
        h /= 2.0;
        let mut mids = Real::zero(p);
        let mut tau = tau_lo + h;
        while tau < tau_hi + 1e-12 {
            mids = &mids + &node(tau)?;
            tau += 2.0 * h;
        }
        let refined = &(&value * &half) + &(&mids * &Real::from_f64(h, p));
        err = (&refined - &value).abs();
        value = refined;
        if level >= 2 && err <= &tol * &(&value.abs() + &tiny) {
            return Ok(QuadResult {
                value,
                error_estimate: err.max(&tiny),
                levels: level,
                evaluations,
            });
        }
    }
    Err(NumericsError::QuadratureNoConvergence {
        estimate: err.to_decimal_string(6),
    })
}
