//! Large-variable exponent extraction through the diff-log transform.
//!
//! The series of D = f'/f is resummed with a factor approximant D*. When the
//! total power of D* at infinity is -1 (it is whenever f itself has a power
//! law), the limit of x D*(x) is finite and equals the exponent of f.

use crate::factor::{build, BuildError, Factor, FactorApproximant, Validity};
use crate::numerics::{Prec, Real};
use crate::series::PowerSeries;

#[derive(Clone, Debug)]
pub struct ExponentEstimate {
    pub nu: Real,
    /// True when the diff-log approximant's own exponents sum to -1 within
    /// tolerance, making the limit construction exact.
    pub admissible: bool,
    pub order_used: usize,
    /// Set when the estimate is degraded (exponential factor, probe
    /// fallback, flagged asymptotics).
    pub note: Option<String>,
}

const ADMISSIBLE_TOL_LOG10: i64 = -6;
const PROBE_X: f64 = 1e6;

pub fn exponent_estimate(f: &PowerSeries, k: usize) -> Result<ExponentEstimate, BuildError> {
    let p = f.prec();
    if k < 3 || k > f.order() {
        return Err(BuildError::InsufficientOrder {
            needed: 3,
            got: k.min(f.order()),
        });
    }
    if f.a0().is_zero() {
        return Err(BuildError::ZeroSeries);
    }
    let d = f.truncated(k).difflog_series()?;
    let approx = build(&d, k - 1)?;
    Ok(estimate_from(&approx, k, p))
}

fn estimate_from(approx: &FactorApproximant, k: usize, p: Prec) -> ExponentEstimate {
    let asy = approx.asymptotics();
    let has_exponential = approx
        .factors()
        .iter()
        .any(|f| matches!(f, Factor::Exponential { .. }));
    let sum_plus_one = (&asy.exponent + &Real::one(p)).abs();
    let tol = Real::pow10(ADMISSIBLE_TOL_LOG10, p);

    if !has_exponential && sum_plus_one <= tol {
        // limit of x D*(x) is the asymptotic amplitude
        let note = match asy.validity {
            Validity::Clean => None,
            Validity::Flagged => asy.reason.clone(),
        };
        return ExponentEstimate {
            nu: asy.amplitude,
            admissible: true,
            order_used: k,
            note,
        };
    }

    // fallback: probe x D*(x) at large x
    let probe = Real::from_f64(PROBE_X, p);
    let (nu, note) = match approx.evaluate(&probe) {
        Ok(v) => (
            &v * &probe,
            Some(if has_exponential {
                "diff-log approximant has an exponential factor: no power-law limit".to_string()
            } else {
                format!(
                    "diff-log exponent sum {} differs from -1; probe value reported",
                    asy.exponent.to_decimal_string(8)
                )
            }),
        ),
        Err(e) => (
            asy.amplitude.clone(),
            Some(format!(
                "probe evaluation failed ({e}); asymptotic amplitude reported"
            )),
        ),
    };
    ExponentEstimate {
        nu,
        admissible: false,
        order_used: k,
        note,
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

    #[test]
    fn cubic_binomial_exponent() {
        // (1+x)^3 truncated to order 4 -> nu = 3
        let f = series(&[1.0, 3.0, 3.0, 1.0, 0.0]);
        let est = exponent_estimate(&f, 4).unwrap();
        assert!(est.admissible);
        let err = (&est.nu - &Real::from_i64(3, p60())).abs();
        assert!(err < Real::pow10(-30, p60()), "nu = {}", est.nu);
    }

    #[test]
    fn geometric_exponent() {
        let f = series(&[1.0, 1.0, 1.0, 1.0]);
        let est = exponent_estimate(&f, 3).unwrap();
        assert!(est.admissible);
        let err = (&est.nu + &Real::one(p60())).abs();
        assert!(err < Real::pow10(-30, p60()), "nu = {}", est.nu);
    }

    #[test]
    fn exponential_input_not_power_law() {
        let p = p60();
        let f = PowerSeries::new(
            vec![
                Real::one(p),
                Real::one(p),
                Real::ratio(1, 2, p),
                Real::ratio(1, 6, p),
            ],
            p,
        )
        .unwrap();
        let est = exponent_estimate(&f, 3).unwrap();
        assert!(!est.admissible);
        assert!(est.note.is_some());
    }

    #[test]
    fn order_too_small_rejected() {
        let f = series(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            exponent_estimate(&f, 2),
            Err(BuildError::InsufficientOrder { .. })
        ));
    }
}
