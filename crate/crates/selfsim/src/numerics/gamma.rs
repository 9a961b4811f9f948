//! Gamma function at working precision.
//!
//! Spouge's expansion evaluated with guard digits; the coefficient table is
//! computed once per (order, precision) and cached for the thread. Negative
//! arguments go through the reflection formula.

use std::cell::RefCell;
use std::collections::HashMap;

use super::prec::{Prec, Real};
use super::NumericsError;

thread_local! {
    static SPOUGE: RefCell<HashMap<(u32, u32), SpougeTable>> = RefCell::new(HashMap::new());
}

struct SpougeTable {
    prec: Prec,
    a: u32,
    coeffs: Vec<Real>, // c_1 .. c_{a-1}
    sqrt_two_pi: Real,
}

impl SpougeTable {
    fn build(a: u32, prec: Prec) -> Self {
        let one = Real::one(prec);
        let mut coeffs = Vec::with_capacity(a as usize - 1);
        // c_k = (-1)^(k-1) / (k-1)! * (a-k)^(k-1/2) * e^(a-k)
        let mut fact = one.clone(); // (k-1)!
        for k in 1..a {
            if k > 1 {
                fact = &fact * &Real::from_u64(k as u64 - 1, prec);
            }
            let amk = Real::from_u64((a - k) as u64, prec);
            let half = Real::from_f64(0.5, prec);
            let expo = &Real::from_u64(k as u64, prec) - &half; // k - 1/2
            let term = &(&amk.pow(&expo) * &amk.exp()) / &fact;
            coeffs.push(if k % 2 == 1 { term } else { term.neg() });
        }
        let two_pi = &Real::pi(prec) * &Real::from_i64(2, prec);
        SpougeTable {
            prec,
            a,
            coeffs,
            sqrt_two_pi: two_pi.sqrt(),
        }
    }

    /// Gamma(z + 1) for z >= 0.
    fn gamma_zp1(&self, z: &Real) -> Real {
        let p = self.prec;
        let mut sum = self.sqrt_two_pi.clone();
        for (k, c) in self.coeffs.iter().enumerate() {
            sum = &sum + &(c / &(z + &Real::from_u64(k as u64 + 1, p)));
        }
        let za = z + &Real::from_u64(self.a as u64, p);
        let half = Real::from_f64(0.5, p);
        let pow = za.pow(&(z + &half));
        &(&pow * &za.neg().exp()) * &sum
    }
}

fn working_table(p: Prec) -> (Prec, u32) {
    // evaluate with ~19 extra digits; Spouge order from the relative error
    // bound a^(-1/2) (2 pi)^(-(a+1/2))
    let digits = p.digits() + 19;
    let guarded = Prec::new(digits + 10);
    let a = (digits as f64 * std::f64::consts::LN_10 / (2.0 * std::f64::consts::PI).ln()).ceil()
        as u32
        + 2;
    (guarded, a)
}

/// Gamma(x) for real x not equal to a nonpositive integer.
pub fn gamma(x: &Real, p: Prec) -> Result<Real, NumericsError> {
    if !x.is_finite() {
        return Err(NumericsError::InvalidInput(format!(
            "gamma argument not finite: {x}"
        )));
    }
    if x.is_integer() && !x.is_positive() {
        return Err(NumericsError::GammaPole(x.to_decimal_string(8)));
    }
    let (gp, a) = working_table(p);
    let key = (a, gp.digits());
    let result = SPOUGE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let table = cache.entry(key).or_insert_with(|| SpougeTable::build(a, gp));
        gamma_at(table, x, gp)
    });
    Ok(&result * &Real::one(p))
}

fn gamma_at(table: &SpougeTable, x: &Real, gp: Prec) -> Real {
    let one = Real::one(gp);
    let x = &x.clone() * &one; // lift to guarded precision
    if x.is_positive() {
        if x >= one {
            table.gamma_zp1(&(&x - &one))
        } else {
            // Gamma(x) = Gamma(x+1)/x
            &table.gamma_zp1(&x) / &x
        }
    } else {
        // reflection: Gamma(x) = pi / (sin(pi x) * Gamma(1 - x))
        let pi = Real::pi(gp);
        let sin_pix = sin_pi(&x, gp);
        let g1mx = gamma_at(table, &(&one - &x), gp);
        &pi / &(&sin_pix * &g1mx)
    }
}

/// sin(pi x) with the argument reduced to [-1/2, 1/2) before multiplying by
/// pi, which keeps accuracy away from the zeros.
fn sin_pi(x: &Real, p: Prec) -> Real {
    let half = Real::from_f64(0.5, p);
    let n = (x + &half).floor();
    let r = x - &n;
    let s = (&r * &Real::pi(p)).sin();
    let n_i = n.round_i64();
    if n_i % 2 == 0 {
        s
    } else {
        s.neg()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p60() -> Prec {
        Prec::new(60)
    }

    #[test]
    fn factorial_identity() {
        let p = p60();
        let g = gamma(&Real::from_i64(5, p), p).unwrap();
        let err = (&g - &Real::from_i64(24, p)).abs();
        assert!(err < p.tol(2), "gamma(5) = {g}");
    }

    #[test]
    fn half_integer_sqrt_pi() {
        let p = p60();
        let g = gamma(&Real::from_f64(0.5, p), p).unwrap();
        let sqrt_pi = Real::pi(p).sqrt();
        let err = (&(&g - &sqrt_pi) / &sqrt_pi).abs();
        assert!(err < Real::pow10(-(p.digits() as i64) + 5, p), "gamma(1/2) = {g}");
    }

    #[test]
    fn reference_value_1_25() {
        let p = p60();
        let g = gamma(&Real::parse("1.25", p).unwrap(), p).unwrap();
        let reference = Real::parse("0.90640247705", p).unwrap();
        assert!((&g - &reference).abs() < Real::pow10(-10, p));
    }

    #[test]
    fn recurrence_on_grid() {
        let p = p60();
        let tol = Real::pow10(1 - (p.digits() / 2) as i64, p);
        let mut x = Real::parse("0.1", p).unwrap();
        let step = Real::parse("2.47", p).unwrap();
        while x < Real::from_i64(50, p) {
            let lhs = gamma(&(&x + &Real::one(p)), p).unwrap();
            let rhs = &x * &gamma(&x, p).unwrap();
            let rel = (&(&lhs - &rhs) / &rhs).abs();
            assert!(rel < tol, "recurrence failed at {x}: {rel}");
            x = &x + &step;
        }
    }

    #[test]
    fn negative_argument_reflection() {
        let p = p60();
        // Gamma(-0.5) = -2 sqrt(pi)
        let g = gamma(&Real::from_f64(-0.5, p), p).unwrap();
        let expect = &Real::from_i64(-2, p) * &Real::pi(p).sqrt();
        let rel = (&(&g - &expect) / &expect).abs();
        assert!(rel < Real::pow10(-(p.digits() as i64) + 5, p));
    }

    #[test]
    fn pole_rejected() {
        let p = p60();
        assert!(matches!(
            gamma(&Real::from_i64(0, p), p),
            Err(NumericsError::GammaPole(_))
        ));
        assert!(matches!(
            gamma(&Real::from_i64(-3, p), p),
            Err(NumericsError::GammaPole(_))
        ));
    }

    #[test]
    fn large_argument_factorial() {
        let p = p60();
        let mut f = Real::one(p);
        for i in 2..20i64 {
            f = &f * &Real::from_i64(i, p);
        }
        let g = gamma(&Real::from_i64(20, p), p).unwrap();
        let rel = (&(&g - &f) / &f).abs();
        assert!(rel < Real::pow10(-(p.digits() as i64) + 5, p));
    }
}
