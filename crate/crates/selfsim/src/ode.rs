//! Small-z expansions of the two singular soliton equations.
//!
//! The exponential change of variable turns each equation into an
//! equidimensional ODE in z whose power-series coefficients follow from an
//! exact recurrence. The n = 1 coefficient is free (translation invariance);
//! it is pinned by a normalization matching the known exact solutions.
//!
//! Kink:  (eps/2) phi'' + phi - phi^3 = 0,  phi(+-inf) = +-1,
//!        x = (sqrt(eps)/2) ln z, u = phi + 1:
//!        2 z^2 u'' + 2 z u' - 2u + 3u^2 - u^3 = 0
//!        => 2(n^2-1) c_n = -(3 (u^2)_n - (u^3)_n)
//!
//! Bell:  (eps/2) phi'' - phi + phi^3 = 0,  phi(+-inf) = 0,
//!        x = sqrt(eps/2) ln z:
//!        z^2 phi'' + z phi' - phi + phi^3 = 0
//!        => (n^2-1) c_n = -(phi^3)_n

use thiserror::Error;

use crate::factor::{EvalError, FactorApproximant};
use crate::numerics::{Prec, Real};
use crate::series::{PowerSeries, SeriesError};

#[derive(Error, Debug, Clone)]
pub enum OdeError {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(String),
    #[error("order must be at least 3, got {0}")]
    OrderTooSmall(usize),
    #[error("recurrence self-check failed: residual {residual} at order {order}")]
    ResidualCheck { residual: String, order: usize },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolitonEquation {
    Kink,
    Bell,
}

#[derive(Clone, Debug)]
pub struct OdeSpec {
    pub equation: SolitonEquation,
    pub epsilon: Real,
    pub order: usize,
    pub normalization: Real,
}

impl OdeSpec {
    /// Kink with the normalization matching tanh((1/2) ln z) = (z-1)/(z+1).
    pub fn kink(epsilon: Real, order: usize, p: Prec) -> Self {
        OdeSpec {
            equation: SolitonEquation::Kink,
            epsilon,
            order,
            normalization: Real::from_i64(2, p),
        }
    }

    /// Bell with the normalization matching sqrt(2) sech(ln z).
    pub fn bell(epsilon: Real, order: usize, p: Prec) -> Self {
        OdeSpec {
            equation: SolitonEquation::Bell,
            epsilon,
            order,
            normalization: &Real::from_i64(2, p) * &Real::from_i64(2, p).sqrt(),
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        if !self.epsilon.is_positive() {
            return Err(OdeError::NonPositiveEpsilon(
                self.epsilon.to_decimal_string(8),
            ));
        }
        if self.order < 3 {
            return Err(OdeError::OrderTooSmall(self.order));
        }
        Ok(())
    }
}

/// z-expansion of u = phi + 1 for the kink equation; coefficients are
/// epsilon-independent (epsilon lives in the variable map).
pub fn kink_series(spec: &OdeSpec, p: Prec) -> Result<PowerSeries, OdeError> {
    spec.validate()?;
    let k = spec.order;
    let mut c = vec![Real::zero(p); k + 1];
    c[1] = spec.normalization.clone();
    for n in 2..=k {
        let sq = convolution2(&c, n);
        let cu = convolution3(&c, n);
        // 2 (n^2 - 1) c_n = -(3 (u^2)_n - (u^3)_n)
        let rhs = &cu - &(&Real::from_i64(3, p) * &sq);
        let denom = Real::from_i64(2 * ((n * n) as i64 - 1), p);
        c[n] = &rhs / &denom;
    }
    // substitute back: 2(n^2-1) c_n + 3(u^2)_n - (u^3)_n must vanish
    let mut worst = Real::zero(p);
    let mut scale = Real::one(p);
    for n in 1..=k {
        let sq = convolution2(&c, n);
        let cu = convolution3(&c, n);
        let lin = &Real::from_i64(2 * ((n * n) as i64 - 1), p) * &c[n];
        let resid = (&(&lin + &(&Real::from_i64(3, p) * &sq)) - &cu).abs();
        scale = scale.max(&lin.abs()).max(&sq.abs()).max(&cu.abs());
        if resid > worst {
            worst = resid;
        }
    }
    if worst > &p.tol(2) * &scale {
        return Err(OdeError::ResidualCheck {
            residual: worst.to_decimal_string(6),
            order: k,
        });
    }
    Ok(PowerSeries::new(c, p)?.with_label("z"))
}

/// z-expansion of phi for the bell equation; only odd powers appear.
pub fn bell_series(spec: &OdeSpec, p: Prec) -> Result<PowerSeries, OdeError> {
    spec.validate()?;
    let k = spec.order;
    let mut c = vec![Real::zero(p); k + 1];
    c[1] = spec.normalization.clone();
    for n in 2..=k {
        let cu = convolution3(&c, n);
        // (n^2 - 1) c_n = -(phi^3)_n
        let denom = Real::from_i64((n * n) as i64 - 1, p);
        c[n] = &cu.neg() / &denom;
    }
    let mut worst = Real::zero(p);
    let mut scale = Real::one(p);
    for n in 1..=k {
        let cu = convolution3(&c, n);
        let lin = &Real::from_i64((n * n) as i64 - 1, p) * &c[n];
        let resid = (&lin + &cu).abs();
        scale = scale.max(&lin.abs()).max(&cu.abs());
        if resid > worst {
            worst = resid;
        }
    }
    if worst > &p.tol(2) * &scale {
        return Err(OdeError::ResidualCheck {
            residual: worst.to_decimal_string(6),
            order: k,
        });
    }
    Ok(PowerSeries::new(c, p)?.with_label("z"))
}

/// (u^2)_n for a series with zero constant term.
fn convolution2(c: &[Real], n: usize) -> Real {
    let p = Prec::default();
    let mut s = Real::zero(p);
    for i in 1..n {
        s = &s + &(&c[i] * &c[n - i]);
    }
    s
}

/// (u^3)_n for a series with zero constant term.
fn convolution3(c: &[Real], n: usize) -> Real {
    let p = Prec::default();
    let mut s = Real::zero(p);
    for i in 1..n {
        for j in 1..n - i {
            let l = n - i - j;
            if l >= 1 {
                s = &s + &(&(&c[i] * &c[j]) * &c[l]);
            }
        }
    }
    s
}

/// Evaluate the factor approximant of a soliton z-series at physical x.
pub fn map_back(
    fa: &FactorApproximant,
    spec: &OdeSpec,
    x: &Real,
) -> Result<Real, EvalError> {
    let p = fa.prec();
    let z = match spec.equation {
        SolitonEquation::Kink => {
            // z = exp(2 x / sqrt(eps))
            let arg = &(&Real::from_i64(2, p) * x) / &spec.epsilon.sqrt();
            arg.exp()
        }
        SolitonEquation::Bell => {
            // z = exp(x sqrt(2/eps))
            let arg = x * &(&Real::from_i64(2, p) / &spec.epsilon).sqrt();
            arg.exp()
        }
    };
    let v = fa.evaluate(&z)?;
    Ok(match spec.equation {
        SolitonEquation::Kink => &v - &Real::one(p),
        SolitonEquation::Bell => v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::build;

    fn p60() -> Prec {
        Prec::new(60)
    }

    #[test]
    fn kink_coefficients() {
        let p = p60();
        let spec = OdeSpec::kink(Real::one(p), 6, p);
        let s = kink_series(&spec, p).unwrap();
        // u = 2z - 2z^2 + 2z^3 - ... from (z-1)/(z+1) + 1
        for n in 1..=6usize {
            let expect = Real::from_i64(if n % 2 == 1 { 2 } else { -2 }, p);
            assert!(
                (&s.coeff(n) - &expect).abs() < p.tol(2),
                "c_{n} = {}",
                s.coeff(n)
            );
        }
        assert!(s.coeff(0).is_zero());
    }

    #[test]
    fn bell_coefficients() {
        let p = p60();
        let spec = OdeSpec::bell(Real::one(p), 7, p);
        let s = bell_series(&spec, p).unwrap();
        let amp = &Real::from_i64(2, p) * &Real::from_i64(2, p).sqrt();
        // 2 sqrt(2) (z - z^3 + z^5 - z^7)
        for n in 1..=7usize {
            let expect = if n % 2 == 0 {
                Real::zero(p)
            } else if n % 4 == 1 {
                amp.clone()
            } else {
                amp.neg()
            };
            assert!(
                (&s.coeff(n) - &expect).abs() < p.tol(2),
                "c_{n} = {}",
                s.coeff(n)
            );
        }
    }

    #[test]
    fn kink_reconstruction_and_boundaries() {
        let p = p60();
        let spec = OdeSpec::kink(Real::one(p), 5, p);
        let s = kink_series(&spec, p).unwrap();
        let fa = build(&s, 5).unwrap();
        // x = 0 -> phi = 0 (odd solution)
        let at0 = map_back(&fa, &spec, &Real::zero(p)).unwrap();
        assert!(at0.abs() < Real::pow10(-40, p), "phi(0) = {at0}");
        // x -> +inf boundary: phi -> 1
        let far = map_back(&fa, &spec, &Real::from_i64(40, p)).unwrap();
        assert!(
            (&far - &Real::one(p)).abs() < Real::pow10(-10, p),
            "phi(40) = {far}"
        );
        // against tanh(x / sqrt(eps)) at x = 1
        let got = map_back(&fa, &spec, &Real::one(p)).unwrap();
        let expect = Real::one(p).tanh();
        assert!(
            (&got - &expect).abs() < Real::pow10(-40, p),
            "phi(1) = {got} vs {expect}"
        );
    }

    #[test]
    fn bell_reconstruction_and_peak() {
        let p = p60();
        let eps = Real::from_i64(2, p);
        let spec = OdeSpec::bell(eps, 5, p);
        let s = bell_series(&spec, p).unwrap();
        let fa = build(&s, 5).unwrap();
        // phi(0) = sqrt(2)
        let at0 = map_back(&fa, &spec, &Real::zero(p)).unwrap();
        let expect = Real::from_i64(2, p).sqrt();
        assert!(
            (&at0 - &expect).abs() < Real::pow10(-40, p),
            "phi(0) = {at0}"
        );
        // sech form at x = 1.5, eps = 2: sqrt(2) sech(1.5)
        let x = Real::parse("1.5", p).unwrap();
        let got = map_back(&fa, &spec, &x).unwrap();
        let sech = {
            let e = x.exp();
            &Real::from_i64(2, p) / &(&e + &e.recip())
        };
        let want = &Real::from_i64(2, p).sqrt() * &sech;
        assert!(
            (&got - &want).abs() < Real::pow10(-40, p),
            "phi = {got} vs {want}"
        );
    }

    #[test]
    fn normalization_freedom_is_translation() {
        // c1 = 2 lambda reconstructs tanh((x - x0)/sqrt(eps)) with
        // x0 = -(sqrt(eps)/2) ln lambda
        let p = p60();
        for lambda in [0.5f64, 2.0] {
            let mut spec = OdeSpec::kink(Real::one(p), 5, p);
            spec.normalization = &Real::from_i64(2, p) * &Real::from_f64(lambda, p);
            let s = kink_series(&spec, p).unwrap();
            let fa = build(&s, 5).unwrap();
            let x0 = {
                let half_sqrt_eps = &spec.epsilon.sqrt() / &Real::from_i64(2, p);
                (&half_sqrt_eps * &Real::from_f64(lambda, p).ln()).neg()
            };
            for xi in [-1.0f64, 0.0, 0.7, 2.0] {
                let x = Real::from_f64(xi, p);
                let got = map_back(&fa, &spec, &x).unwrap();
                let want = (&(&x - &x0) / &spec.epsilon.sqrt()).tanh();
                assert!(
                    (&got - &want).abs() < Real::pow10(-35, p),
                    "lambda {lambda}, x {xi}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let p = p60();
        let bad_eps = OdeSpec::kink(Real::zero(p), 5, p);
        assert!(matches!(
            kink_series(&bad_eps, p),
            Err(OdeError::NonPositiveEpsilon(_))
        ));
        let bad_order = OdeSpec::bell(Real::one(p), 2, p);
        assert!(matches!(
            bell_series(&bad_order, p),
            Err(OdeError::OrderTooSmall(2))
        ));
    }
}
