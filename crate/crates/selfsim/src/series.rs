//! Truncated power series and the algebra the factor builder needs:
//! logarithm, diff-log, products, argument scaling and moment extraction.

use thiserror::Error;

use crate::numerics::{Prec, Real};

#[derive(Error, Debug, Clone)]
pub enum SeriesError {
    #[error("series must have at least one coefficient")]
    Empty,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("leading coefficient must be positive for the series logarithm, got {a0}")]
    NonPositiveLeading { a0: String },
    #[error("leading coefficient must be nonzero, got zero")]
    ZeroLeading,
    #[error("gap {gap} inconsistent: coefficient {index} is nonzero")]
    GapViolation { gap: usize, index: usize },
}

/// Truncated expansion sum a_n x^n with extended-precision coefficients.
#[derive(Clone, Debug)]
pub struct PowerSeries {
    coeffs: Vec<Real>,
    gap: usize,
    label: String,
    prec: Prec,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<Real>, prec: Prec) -> Result<Self, SeriesError> {
        Self::with_gap(coeffs, 1, prec)
    }

    pub fn with_gap(coeffs: Vec<Real>, gap: usize, prec: Prec) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_finite() {
                return Err(SeriesError::NonFinite { index: i });
            }
        }
        let gap = gap.max(1);
        if gap > 1 {
            for (i, c) in coeffs.iter().enumerate() {
                if i % gap != 0 && !c.is_zero() {
                    return Err(SeriesError::GapViolation { gap, index: i });
                }
            }
        }
        Ok(PowerSeries {
            coeffs,
            gap,
            label: "x".into(),
            prec,
        })
    }

    pub fn from_f64s(values: &[f64], prec: Prec) -> Result<Self, SeriesError> {
        Self::new(values.iter().map(|v| Real::from_f64(*v, prec)).collect(), prec)
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> Real {
        self.coeffs
            .get(n)
            .cloned()
            .unwrap_or_else(|| Real::zero(self.prec))
    }

    pub fn coeffs(&self) -> &[Real] {
        &self.coeffs
    }

    pub fn a0(&self) -> &Real {
        &self.coeffs[0]
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn prec(&self) -> Prec {
        self.prec
    }

    pub fn truncated(&self, k: usize) -> PowerSeries {
        let mut out = self.clone();
        out.coeffs.truncate(k + 1);
        out
    }

    /// Plain evaluation of the truncated polynomial (no resummation).
    pub fn eval_poly(&self, x: &Real) -> Real {
        let mut acc = Real::zero(self.prec);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Taylor coefficients of ln f through the same order; requires a0 > 0.
    pub fn log_series(&self) -> Result<PowerSeries, SeriesError> {
        let a0 = self.a0();
        if !a0.is_positive() {
            return Err(SeriesError::NonPositiveLeading {
                a0: a0.to_decimal_string(8),
            });
        }
        let p = self.prec;
        let k = self.order();
        // normalized f/a0 so the recurrence runs with f_0 = 1
        let f: Vec<Real> = self.coeffs.iter().map(|c| c / a0).collect();
        let mut l = vec![Real::zero(p); k + 1];
        l[0] = a0.ln();
        for n in 1..=k {
            // n f_n = sum_{m=1..n} m l_m f_{n-m}
            let mut s = &Real::from_u64(n as u64, p) * &f[n];
            for m in 1..n {
                s = &s - &(&(&Real::from_u64(m as u64, p) * &l[m]) * &f[n - m]);
            }
            l[n] = &s / &Real::from_u64(n as u64, p);
        }
        PowerSeries::new(l, p)
    }

    /// exp of a series with zero constant term (used to re-expand factor
    /// products when verifying accuracy-through-order).
    pub fn exp_series(&self) -> PowerSeries {
        let p = self.prec;
        let k = self.order();
        let mut g = vec![Real::zero(p); k + 1];
        g[0] = self.coeffs[0].exp();
        for n in 1..=k {
            // n g_n = sum_{m=1..n} m h_m g_{n-m}
            let mut s = Real::zero(p);
            for m in 1..=n {
                s = &s + &(&(&Real::from_u64(m as u64, p) * &self.coeffs[m]) * &g[n - m]);
            }
            g[n] = &s / &Real::from_u64(n as u64, p);
        }
        PowerSeries::new(g, p).expect("exp series coefficients finite")
    }

    /// Coefficients of f'(x)/f(x) through order k-1; requires a0 != 0.
    pub fn difflog_series(&self) -> Result<PowerSeries, SeriesError> {
        if self.a0().is_zero() {
            return Err(SeriesError::ZeroLeading);
        }
        let p = self.prec;
        let k = self.order();
        let fp = self.derivative();
        // divide fp by f: d_n = (fp_n - sum_{m<n} d_m f_{n-m}) / f_0
        let len = if k == 0 { 1 } else { k };
        let mut d = vec![Real::zero(p); len];
        for n in 0..len {
            let mut s = fp.coeff(n);
            for m in 0..n {
                s = &s - &(&d[m] * &self.coeffs[n - m]);
            }
            d[n] = &s / &self.coeffs[0];
        }
        PowerSeries::new(d, p)
    }

    pub fn derivative(&self) -> PowerSeries {
        let p = self.prec;
        if self.coeffs.len() == 1 {
            return PowerSeries::new(vec![Real::zero(p)], p).unwrap();
        }
        let d: Vec<Real> = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| &Real::from_u64(i as u64 + 1, p) * c)
            .collect();
        PowerSeries::new(d, p).expect("derivative coefficients finite")
    }

    /// a_n -> a_n lambda^n.
    pub fn scale_argument(&self, lambda: &Real) -> PowerSeries {
        let p = self.prec;
        let mut pow = Real::one(p);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c * &pow;
                pow = &pow * lambda;
                v
            })
            .collect();
        PowerSeries::new(coeffs, p).expect("scaled coefficients finite")
    }

    /// Cauchy product truncated at the shorter order.
    pub fn multiply(&self, other: &PowerSeries) -> PowerSeries {
        let p = self.prec;
        let k = self.order().min(other.order());
        let mut out = vec![Real::zero(p); k + 1];
        for n in 0..=k {
            let mut s = Real::zero(p);
            for m in 0..=n {
                s = &s + &(&self.coeffs[m] * &other.coeffs[n - m]);
            }
            out[n] = s;
        }
        PowerSeries::new(out, p).expect("product coefficients finite")
    }

    /// Moment vector b_m = (-1)^(m+1) m c_m  with c = ln(f/a0); the training
    /// conditions in power-sum form: sum_j n_j A_j^m = b_m.
    pub fn moments(&self) -> Result<MomentVector, SeriesError> {
        if self.a0().is_zero() {
            return Err(SeriesError::ZeroLeading);
        }
        let normalized = self.normalized().1;
        let log = normalized.log_series()?;
        let p = self.prec;
        let k = self.order();
        let mut b = Vec::with_capacity(k);
        for m in 1..=k {
            let v = &Real::from_u64(m as u64, p) * &log.coeff(m);
            b.push(if m % 2 == 1 { v } else { v.neg() });
        }
        Ok(MomentVector {
            b,
            source_order: k,
        })
    }

    /// Split off the leading value: (a0, f/a0). The log-series precondition
    /// a0 > 0 is then met by the normalized part regardless of sign.
    pub fn normalized(&self) -> (Real, PowerSeries) {
        let a0 = self.coeffs[0].clone();
        let coeffs: Vec<Real> = self.coeffs.iter().map(|c| c / &a0).collect();
        (
            a0,
            PowerSeries {
                coeffs,
                gap: self.gap,
                label: self.label.clone(),
                prec: self.prec,
            },
        )
    }
}

/// Power sums of the factor parameters implied by a series.
#[derive(Clone, Debug)]
pub struct MomentVector {
    b: Vec<Real>,
    source_order: usize,
}

impl MomentVector {
    pub fn values(&self) -> &[Real] {
        &self.b
    }

    pub fn source_order(&self) -> usize {
        self.source_order
    }
}
