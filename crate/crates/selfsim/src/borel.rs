//! Self-similar Borel summation.
//!
//! The series is transformed by dividing coefficient n by Gamma(n+1+u), the
//! transform is resummed with a factor approximant, and the sum is recovered
//! by integrating against the weight e^(-t) t^u. The control parameter u is
//! free; `select_u` stabilizes it by minimizing the difference of successive
//! orders of the chosen observable over a grid.

use thiserror::Error;

use crate::factor::{
    build, AsymptoticForm, BuildError, Factor, FactorApproximant, Validity,
};
use crate::numerics::{
    gamma, integrate_halfline, NumericsError, Prec, QuadOptions, Real,
};
use crate::series::{PowerSeries, SeriesError};

#[derive(Error, Debug, Clone)]
pub enum BorelError {
    #[error("control parameter u = {u} must exceed -1")]
    InvalidU { u: String },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("direction not Borel-summable: {factor} vanishes on the integration ray at t = {t_star}")]
    NonSummableDirection { factor: String, t_star: String },
    #[error("no admissible u on the grid {grid}")]
    NoAdmissibleU { grid: String },
    #[error("evaluation failed: {0}")]
    Eval(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UStrategy {
    Fixed,
    GridOptimized,
}

#[derive(Clone, Debug)]
pub struct ControlParameter {
    pub u: Real,
    pub strategy: UStrategy,
}

/// Scan grid for the control parameter (inclusive of both ends up to step
/// rounding). Grid points are enumerated by index for determinism.
#[derive(Clone, Copy, Debug)]
pub struct UGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl UGrid {
    /// The published default: u > -1 is the hard bound and moderate u is
    /// where self-similar Borel practice lives.
    pub fn default_grid() -> Self {
        UGrid {
            min: -0.9,
            max: 10.0,
            step: 0.01,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = if self.step > 0.0 {
            ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
        } else {
            1
        };
        (0..n).map(move |i| self.min + i as f64 * self.step)
    }
}

/// Which quantity successive orders are compared on when optimizing u.
#[derive(Clone, Debug)]
pub enum Observable {
    /// Strong-coupling exponent nu (the reported quantity).
    Exponent,
    /// Value of the summed function at a probe point.
    ValueAt(Real),
}

#[derive(Clone, Debug)]
pub struct BorelResult {
    pub approximant: FactorApproximant,
    pub u: ControlParameter,
    pub asymptotic: AsymptoticForm,
}

fn check_u(u: &Real, p: Prec) -> Result<(), BorelError> {
    if !(u > &Real::from_i64(-1, p)) || !u.is_finite() {
        return Err(BorelError::InvalidU {
            u: u.to_decimal_string(8),
        });
    }
    Ok(())
}

/// Divide coefficient n by Gamma(n+1+u).
pub fn borel_transform(f: &PowerSeries, u: &Real) -> Result<PowerSeries, BorelError> {
    let p = f.prec();
    check_u(u, p)?;
    let one = Real::one(p);
    // Gamma(n+1+u) by upward recurrence from Gamma(1+u)
    let mut g = gamma(&(&one + u), p)?;
    let mut coeffs = Vec::with_capacity(f.order() + 1);
    for n in 0..=f.order() {
        if n > 0 {
            let nf = Real::from_u64(n as u64, p);
            g = &g * &(&nf + u);
        }
        coeffs.push(&f.coeff(n) / &g);
    }
    Ok(PowerSeries::with_gap(coeffs, f.gap(), p)?.with_label(f.label()))
}

/// Factor approximant of the Borel transform at order k.
pub fn transform_approximant(
    f: &PowerSeries,
    k: usize,
    u: &Real,
) -> Result<FactorApproximant, BorelError> {
    let transform = borel_transform(f, u)?;
    Ok(build(&transform, k)?)
}

pub fn borel_build(f: &PowerSeries, k: usize, u: ControlParameter) -> Result<BorelResult, BorelError> {
    let approximant = transform_approximant(f, k, &u.u)?;
    let asymptotic = asymptotics_from_transform(&approximant, &u.u)?;
    Ok(BorelResult {
        approximant,
        u,
        asymptotic,
    })
}

/// Summability of the weighted integral along t in (0, inf) for fixed x:
/// every real factor base must keep a constant sign on the ray unless its
/// exponent is a positive integer, and an exponential factor must decay
/// against the weight. Returns the effective decay rate for the quadrature.
fn check_summable(
    transform: &FactorApproximant,
    x: &Real,
    p: Prec,
) -> Result<f64, BorelError> {
    let g = transform.gap();
    let w = if g == 1 {
        x.clone()
    } else {
        x.powi(g as i64)
    };
    let mut decay = 1.0f64;
    for (idx, f) in transform.factors().iter().enumerate() {
        match f {
            Factor::RealPower { a, n } => {
                let aw = a * &w;
                if aw.is_negative() {
                    let n_int = n.is_integer() || {
                        let r = Real::from_i64(n.round_i64(), p);
                        (n - &r).abs() <= p.tol(2)
                    };
                    let n_pos = n.is_positive();
                    if !(n_int && n_pos) {
                        // base 1 + (a w) t^g vanishes at t* = (-1/(a w))^(1/g)
                        let t_star_g = aw.recip().neg();
                        let t_star = if g == 1 {
                            t_star_g
                        } else {
                            t_star_g.pow(&Real::ratio(1, g as i64, p))
                        };
                        return Err(BorelError::NonSummableDirection {
                            factor: format!(
                                "factor {idx} (amplitude {})",
                                a.to_decimal_string(8)
                            ),
                            t_star: t_star.to_decimal_string(8),
                        });
                    }
                }
            }
            Factor::ConjPower { .. } => {}
            Factor::Exponential { rate } => {
                let rw = (rate * &w).to_f64();
                if g == 1 {
                    decay -= rw;
                } else if rw > 0.0 {
                    decay = -1.0; // super-linear growth: hopeless
                }
                if decay <= 0.0 {
                    return Err(BorelError::Numerics(NumericsError::QuadratureDivergence {
                        tail: format!("exponential factor rate*x = {rw}"),
                    }));
                }
            }
        }
    }
    Ok(decay)
}

/// Full self-similar Borel sum at real x; exact a0 at x = 0.
pub fn borel_sum(
    f: &PowerSeries,
    k: usize,
    u: &ControlParameter,
    x: &Real,
    quad: &QuadOptions,
) -> Result<Real, BorelError> {
    let transform = transform_approximant(f, k, &u.u)?;
    borel_sum_transform(&transform, f, &u.u, x, quad)
}

/// Same, reusing an already-built transform approximant.
pub fn borel_sum_transform(
    transform: &FactorApproximant,
    f: &PowerSeries,
    u: &Real,
    x: &Real,
    quad: &QuadOptions,
) -> Result<Real, BorelError> {
    let p = f.prec();
    check_u(u, p)?;
    if x.is_zero() {
        return Ok(f.coeff(0));
    }
    let decay = check_summable(transform, x, p)?;
    let mut opts = quad.clone();
    opts.decay_rate = decay;
    // cap on power-law growth of the profile for tail placement
    let asy = transform.asymptotics();
    let nu_f64 = asy.exponent.to_f64().abs();
    opts.power_cap = (nu_f64 + u.to_f64().abs() + 8.0).max(opts.power_cap.min(64.0));
    let result = integrate_halfline(
        |t| {
            let arg = x * t;
            transform.evaluate(&arg).map_err(|e| {
                NumericsError::QuadratureSingularity {
                    t: t.to_decimal_string(8),
                    detail: e.to_string(),
                }
            })
        },
        u,
        p,
        &opts,
    )?;
    Ok(result.value)
}

/// Strong-coupling form of the Borel sum (Gamma-ratio amplitude): with the
/// transform behaving like C_B x^nu at infinity, the weighted integral gives
/// C = C_B Gamma(1+u+nu) x^nu.
pub fn borel_asymptotics(
    f: &PowerSeries,
    k: usize,
    u: &Real,
) -> Result<AsymptoticForm, BorelError> {
    let transform = transform_approximant(f, k, u)?;
    asymptotics_from_transform(&transform, u)
}

pub fn asymptotics_from_transform(
    transform: &FactorApproximant,
    u: &Real,
) -> Result<AsymptoticForm, BorelError> {
    let p = transform.prec();
    check_u(u, p)?;
    let base = transform.asymptotics();
    let one = Real::one(p);
    let arg = &(&one + u) + &base.exponent;
    match gamma(&arg, p) {
        Ok(gratio) => {
            let amplitude = &base.amplitude * &gratio;
            Ok(AsymptoticForm {
                amplitude,
                exponent: base.exponent,
                validity: base.validity,
                reason: base.reason,
            })
        }
        Err(NumericsError::GammaPole(at)) => Ok(AsymptoticForm {
            amplitude: base.amplitude,
            exponent: base.exponent,
            validity: Validity::Flagged,
            reason: Some(format!(
                "gamma-ratio amplitude undefined: 1+u+nu = {at} is a pole"
            )),
        }),
        Err(e) => Err(BorelError::Numerics(e)),
    }
}

/// Scan the grid for the u minimizing the successive-order difference of the
/// observable; ties break toward smaller |u|, then smaller grid index.
/// Grid points where either order fails to produce a real-valued result are
/// skipped.
pub fn select_u(
    f: &PowerSeries,
    k: usize,
    grid: &UGrid,
    observable: &Observable,
) -> Result<ControlParameter, BorelError> {
    if k < 3 {
        return Err(BorelError::Build(BuildError::InsufficientOrder {
            needed: 3,
            got: k,
        }));
    }
    let p = f.prec();
    let mut best: Option<(Real, Real)> = None; // (delta, u)
    for uf in grid.points() {
        let u = Real::from_f64(uf, p);
        if !(u > Real::from_i64(-1, p)) {
            continue;
        }
        let delta = match observable_delta(f, k, &u, observable) {
            Some(d) => d,
            None => continue,
        };
        let better = match &best {
            None => true,
            Some((bd, bu)) => {
                delta < *bd || (delta == *bd && u.abs() < bu.abs())
            }
        };
        if better {
            best = Some((delta, u));
        }
    }
    match best {
        Some((_, u)) => Ok(ControlParameter {
            u,
            strategy: UStrategy::GridOptimized,
        }),
        None => Err(BorelError::NoAdmissibleU {
            grid: format!("[{}, {}] step {}", grid.min, grid.max, grid.step),
        }),
    }
}

fn observable_delta(
    f: &PowerSeries,
    k: usize,
    u: &Real,
    observable: &Observable,
) -> Option<Real> {
    match observable {
        Observable::Exponent => {
            let hi = admissible_nu(f, k, u)?;
            let lo = admissible_nu(f, k - 1, u)?;
            Some((&hi - &lo).abs())
        }
        Observable::ValueAt(x) => {
            let quad = QuadOptions::default();
            let cp = ControlParameter {
                u: u.clone(),
                strategy: UStrategy::Fixed,
            };
            let hi = borel_sum(f, k, &cp, x, &quad).ok()?;
            let lo = borel_sum(f, k - 1, &cp, x, &quad).ok()?;
            Some((&hi - &lo).abs())
        }
    }
}

/// nu_k(u) when the order builds and has a clean (real-valued) power law.
fn admissible_nu(f: &PowerSeries, k: usize, u: &Real) -> Option<Real> {
    let asy = borel_asymptotics(f, k, u).ok()?;
    if asy.validity == Validity::Clean {
        Some(asy.exponent)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p60() -> Prec {
        Prec::new(60)
    }

    fn series(vals: &[f64]) -> PowerSeries {
        PowerSeries::from_f64s(vals, p60()).unwrap()
    }

    fn fixed(u: f64, p: Prec) -> ControlParameter {
        ControlParameter {
            u: Real::from_f64(u, p),
            strategy: UStrategy::Fixed,
        }
    }

    #[test]
    fn transform_divides_by_factorials() {
        let p = p60();
        let t = borel_transform(&series(&[1.0, 1.0, 1.0, 1.0]), &Real::zero(p)).unwrap();
        let expect = [
            Real::one(p),
            Real::one(p),
            Real::ratio(1, 2, p),
            Real::ratio(1, 6, p),
        ];
        for (i, e) in expect.iter().enumerate() {
            assert!((&t.coeff(i) - e).abs() < p.tol(2), "coeff {i}");
        }
    }

    #[test]
    fn transform_coefficient_with_half_u() {
        // a2 = 2, u = 0.5 -> 2 / Gamma(3.5)
        let p = p60();
        let t = borel_transform(&series(&[1.0, 0.0, 2.0]), &Real::from_f64(0.5, p)).unwrap();
        let g35 = gamma(&Real::from_f64(3.5, p), p).unwrap();
        let expect = &Real::from_i64(2, p) / &g35;
        assert!((&t.coeff(2) - &expect).abs() < p.tol(2));
        // sanity against the quoted decimal value 0.6018...
        assert!((&t.coeff(2) - &Real::parse("0.6018", p).unwrap()).abs() < Real::parse("0.0001", p).unwrap());
    }

    #[test]
    fn transform_prefactor_invariant() {
        let p = p60();
        let u = Real::from_f64(0.7, p);
        let f = series(&[2.0, 3.0, 5.0, 7.0]);
        let b = borel_build(&f, 3, ControlParameter { u: u.clone(), strategy: UStrategy::Fixed })
            .unwrap();
        let g = gamma(&(&Real::one(p) + &u), p).unwrap();
        let expect = &Real::from_i64(2, p) / &g;
        let rel = (&(b.approximant.prefactor() - &expect) / &expect).abs();
        assert!(rel < p.tol(2), "prefactor {}", b.approximant.prefactor());
    }

    #[test]
    fn geometric_sum_recovered() {
        // f = [1,1,1,1]: transform at u=0 is truncated e^y, detected as the
        // exponential factor; the weighted integral gives 1/(1-x) for x < 1
        let p = p60();
        let f = series(&[1.0, 1.0, 1.0, 1.0]);
        let quad = QuadOptions::default();
        for (num, den) in [(1i64, 4i64), (1, 2), (3, 4), (9, 10)] {
            let x = Real::ratio(num, den, p);
            let got = borel_sum(&f, 3, &fixed(0.0, p), &x, &quad).unwrap();
            let expect = (&Real::one(p) - &x).recip();
            let rel = (&(&got - &expect) / &expect).abs();
            assert!(rel < Real::pow10(-10, p), "x = {num}/{den}: rel {rel}");
        }
    }

    #[test]
    fn sum_at_zero_is_exact() {
        let p = p60();
        let f = series(&[0.75, -3.0, 18.0]);
        let got = borel_sum(&f, 2, &fixed(1.3, p), &Real::zero(p), &QuadOptions::default())
            .unwrap();
        assert_eq!(got, Real::from_f64(0.75, p));
    }

    #[test]
    fn divergent_direction_rejected() {
        // geometric at x > 1: e^{xt} outruns the weight
        let p = p60();
        let f = series(&[1.0, 1.0, 1.0, 1.0]);
        let r = borel_sum(
            &f,
            3,
            &fixed(0.0, p),
            &Real::from_f64(1.5, p),
            &QuadOptions::default(),
        );
        assert!(
            matches!(
                r,
                Err(BorelError::Numerics(NumericsError::QuadratureDivergence { .. }))
            ),
            "{r:?}"
        );
    }

    #[test]
    fn pole_on_ray_rejected() {
        // choose coefficients whose transform at u=0 is the geometric series:
        // a_n = n! -> B = [1,1,1,1] -> (1 - y)^(-1), pole at t = 1/x
        let p = p60();
        let f = series(&[1.0, 1.0, 2.0, 6.0]);
        let r = borel_sum(
            &f,
            3,
            &fixed(0.0, p),
            &Real::from_i64(2, p),
            &QuadOptions::default(),
        );
        match r {
            Err(BorelError::NonSummableDirection { t_star, .. }) => {
                assert!(t_star.starts_with("0.5"), "t* = {t_star}");
            }
            other => panic!("expected non-summable, got {other:?}"),
        }
    }

    #[test]
    fn alternating_geometric_summable_everywhere() {
        // f = [1,-1,1,-1] -> 1/(1+x), summable for all x > 0
        let p = p60();
        let f = series(&[1.0, -1.0, 1.0, -1.0]);
        for x in [1i64, 3, 10] {
            let xv = Real::from_i64(x, p);
            let got = borel_sum(&f, 3, &fixed(0.0, p), &xv, &QuadOptions::default()).unwrap();
            let expect = (&Real::one(p) + &xv).recip();
            let rel = (&(&got - &expect) / &expect).abs();
            assert!(rel < Real::pow10(-10, p), "x = {x}: rel {rel}");
        }
    }

    #[test]
    fn gamma_ratio_reduces_for_constant() {
        let p = p60();
        let f = series(&[5.0, 0.0, 0.0]);
        let asy = borel_asymptotics(&f, 2, &Real::from_f64(0.8, p)).unwrap();
        assert!((&asy.exponent).abs() < p.tol(2));
        let rel = (&(&asy.amplitude - &Real::from_i64(5, p)) / &Real::from_i64(5, p)).abs();
        assert!(rel < p.tol(2), "amplitude {}", asy.amplitude);
        assert_eq!(asy.validity, Validity::Clean);
    }

    #[test]
    fn degenerate_grid_returns_fixed_point() {
        // chosen so the u = 0 transform is the binomial series of
        // (1+y)^(1/2): a clean factor with nu = 1/2 away from gamma poles
        let f = series(&[1.0, 0.5, -0.25, 0.375]);
        let grid = UGrid {
            min: 0.0,
            max: 0.0,
            step: 0.0,
        };
        let cp = select_u(&f, 3, &grid, &Observable::Exponent).unwrap();
        assert!(cp.u.is_zero());
        assert_eq!(cp.strategy, UStrategy::GridOptimized);
    }

    #[test]
    fn select_u_minimizes_exponent_gap() {
        // dense-scan oracle: recompute deltas over the same grid and check
        // the returned u attains the minimum
        let p = p60();
        let f = series(&[1.0, -1.0, 2.0, -6.0, 24.0]);
        let grid = UGrid {
            min: 0.0,
            max: 2.0,
            step: 0.25,
        };
        let cp = select_u(&f, 4, &grid, &Observable::Exponent).unwrap();
        let mut best: Option<(Real, f64)> = None;
        for uf in grid.points() {
            let u = Real::from_f64(uf, p);
            let nu4 = borel_asymptotics(&f, 4, &u).unwrap();
            let nu3 = borel_asymptotics(&f, 3, &u).unwrap();
            if nu4.validity != Validity::Clean || nu3.validity != Validity::Clean {
                continue;
            }
            let d = (&nu4.exponent - &nu3.exponent).abs();
            if best.as_ref().map(|(b, _)| &d < b).unwrap_or(true) {
                best = Some((d, uf));
            }
        }
        let (_, expect_u) = best.unwrap();
        assert_eq!(cp.u.to_f64(), expect_u);
    }
}
