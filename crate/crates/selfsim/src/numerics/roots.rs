//! Polynomial root finding at working precision.
//!
//! Aberth-Ehrlich simultaneous iteration seeded on a circle (or from caller
//! supplied starting points when scanning parameter families), followed by a
//! Newton polish and a conjugate pairing pass for real input.

use super::prec::{Complex, Prec, Real};
use super::NumericsError;

/// All complex roots of `p(z) = coeffs[0] + coeffs[1] z + ... + coeffs[d] z^d`.
///
/// The returned roots of a real polynomial come in exact conjugate pairs and
/// are sorted by (re, im). Each root is iterated until the relative residual
/// |p(z)| / sum |c_i z^i| drops below 10^(-digits/2).
pub fn polynomial_roots(coeffs: &[Real], p: Prec) -> Result<Vec<Complex>, NumericsError> {
    polynomial_roots_with_init(coeffs, p, None)
}

pub fn polynomial_roots_with_init(
    coeffs: &[Real],
    p: Prec,
    init: Option<&[Complex]>,
) -> Result<Vec<Complex>, NumericsError> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Err(NumericsError::InvalidInput("degree zero polynomial".into()));
    }
    if coeffs[d].is_zero() {
        return Err(NumericsError::InvalidInput(
            "leading coefficient is zero".into(),
        ));
    }
    let c: Vec<Complex> = coeffs.iter().map(|v| Complex::from_real(v.clone())).collect();

    let mut z: Vec<Complex> = match init {
        Some(start) if start.len() == d => start.to_vec(),
        _ => initial_circle(coeffs, d, p),
    };

    let eps = Real::pow10(-(p.digits() as i64) - 5, p);
    let one = Real::one(p);
    let max_iter = 60 + 20 * d;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut max_step = Real::zero(p);
        for j in 0..d {
            let (pv, dv) = horner_with_derivative(&c, &z[j]);
            if pv.abs().is_zero() {
                continue;
            }
            let newton = if dv.abs().is_zero() {
                // sitting on a critical point: nudge off
                Complex::new(Real::pow10(-(p.digits() as i64) / 3, p), Real::zero(p))
            } else {
                &pv / &dv
            };
            let mut sum = Complex::zero(p);
            for i in 0..d {
                if i != j {
                    let diff = &z[j] - &z[i];
                    if diff.abs().is_zero() {
                        continue;
                    }
                    sum = &sum + &diff.recip();
                }
            }
            let denom = &Complex::from_real(one.clone()) - &(&newton * &sum);
            let step = if denom.abs().is_zero() { newton } else { &newton / &denom };
            let rel = &step.abs() / &(&one + &z[j].abs());
            if rel > max_step {
                max_step = rel.clone();
            }
            z[j] = &z[j] - &step;
        }
        if max_step < eps {
            converged = true;
            break;
        }
    }

    // Newton polish
    for zj in z.iter_mut() {
        for _ in 0..3 {
            let (pv, dv) = horner_with_derivative(&c, zj);
            if dv.abs().is_zero() || pv.abs().is_zero() {
                break;
            }
            *zj = &*zj - &(&pv / &dv);
        }
    }

    // residual acceptance per root
    let res_tol = p.tol(2);
    let mut worst = Real::zero(p);
    for zj in &z {
        let scale = residual_scale(coeffs, zj, p);
        let (pv, _) = horner_with_derivative(&c, zj);
        let rel = &pv.abs() / &scale;
        if rel > worst {
            worst = rel;
        }
    }
    if worst > res_tol || (!converged && worst > p.tol(3)) {
        return Err(NumericsError::RootNonConvergence {
            residual: worst.to_decimal_string(6),
        });
    }

    Ok(pair_conjugates(z, p))
}

fn initial_circle(coeffs: &[Real], d: usize, p: Prec) -> Vec<Complex> {
    // Cauchy-style bound on root magnitude
    let lead = coeffs[d].abs();
    let mut m = Real::zero(p);
    for c in &coeffs[..d] {
        let r = &c.abs() / &lead;
        if r > m {
            m = r;
        }
    }
    let radius = &Real::one(p) + &m;
    let two_pi = &Real::pi(p) * &Real::from_i64(2, p);
    (0..d)
        .map(|j| {
            // offset angle so starting points avoid the real axis symmetry
            let frac = Real::ratio(2 * j as i64 + 1, 2 * d as i64, p);
            let theta = &(&two_pi * &frac) + &Real::from_f64(0.45, p);
            Complex::new(&radius * &theta.cos(), &radius * &theta.sin())
        })
        .collect()
}

fn horner_with_derivative(c: &[Complex], z: &Complex) -> (Complex, Complex) {
    let n = c.len();
    let mut pv = c[n - 1].clone();
    let mut dv = Complex::zero(Prec::from_bits(64));
    for k in (0..n - 1).rev() {
        dv = &(&dv * z) + &pv;
        pv = &(&pv * z) + &c[k];
    }
    (pv, dv)
}

fn residual_scale(coeffs: &[Real], z: &Complex, p: Prec) -> Real {
    // backward-error scale: |p(z)| <= eps * sum |c_i| max(|z|,1)^i certifies z
    // as an exact root of a relatively perturbed polynomial, and stays away
    // from zero for roots at the origin
    let az = z.abs().max(&Real::one(p));
    let mut pow = Real::one(p);
    let mut s = Real::zero(p);
    for c in coeffs {
        s = &s + &(&c.abs() * &pow);
        pow = &pow * &az;
    }
    if s.is_zero() {
        Real::one(p)
    } else {
        s
    }
}

/// Zero out numerically-real imaginary parts and force exact conjugate pairs.
fn pair_conjugates(mut roots: Vec<Complex>, p: Prec) -> Vec<Complex> {
    let tol = p.tol(2);
    let one = Real::one(p);
    for z in roots.iter_mut() {
        if z.im.abs() <= &tol * &(&one + &z.abs()) {
            z.im = Real::zero(p);
        }
    }
    let mut paired: Vec<Complex> = Vec::with_capacity(roots.len());
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] || roots[i].is_real() {
            continue;
        }
        // find the closest conjugate partner
        let mut best: Option<(usize, Real)> = None;
        for j in 0..roots.len() {
            if j == i || used[j] || roots[j].is_real() {
                continue;
            }
            // partner must be on the opposite half-plane
            if roots[j].im.is_positive() == roots[i].im.is_positive() {
                continue;
            }
            let dist = (&roots[i] - &roots[j].conj()).abs();
            if best.as_ref().map(|(_, b)| &dist < b).unwrap_or(true) {
                best = Some((j, dist));
            }
        }
        if let Some((j, _)) = best {
            let avg = {
                let s = &roots[i] + &roots[j].conj();
                Complex::new(
                    &s.re / &Real::from_i64(2, p),
                    &s.im / &Real::from_i64(2, p),
                )
            };
            roots[i] = avg.clone();
            roots[j] = avg.conj();
            used[i] = true;
            used[j] = true;
        }
    }
    paired.extend(roots);
    paired.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    paired
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p60() -> Prec {
        Prec::new(60)
    }

    fn rv(v: i64, p: Prec) -> Real {
        Real::from_i64(v, p)
    }

    #[test]
    fn quadratic_real_roots() {
        let p = p60();
        // z^2 - 1
        let roots = polynomial_roots(&[rv(-1, p), rv(0, p), rv(1, p)], p).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((&roots[0].re + &Real::one(p)).abs() < p.tol(2));
        assert!((&roots[1].re - &Real::one(p)).abs() < p.tol(2));
        assert!(roots[0].im.is_zero() && roots[1].im.is_zero());
    }

    #[test]
    fn quadratic_conjugate_pair() {
        let p = p60();
        // z^2 + 1
        let roots = polynomial_roots(&[rv(1, p), rv(0, p), rv(1, p)], p).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0].re.is_zero() || roots[0].re.abs() < p.tol(2));
        // exact conjugates after the pairing pass
        assert_eq!(roots[0].re, roots[1].re);
        assert_eq!(roots[0].im, roots[1].im.neg());
        assert!((&roots[1].im.abs() - &Real::one(p)).abs() < p.tol(2));
    }

    #[test]
    fn cubic_integer_roots() {
        let p = p60();
        // z^3 - 6z^2 + 11z - 6 = (z-1)(z-2)(z-3)
        let roots =
            polynomial_roots(&[rv(-6, p), rv(11, p), rv(-6, p), rv(1, p)], p).unwrap();
        let expect = [1i64, 2, 3];
        for (r, e) in roots.iter().zip(expect) {
            assert!((&r.re - &rv(e, p)).abs() < p.tol(2), "{:?} vs {e}", r);
            assert!(r.im.is_zero());
        }
    }

    #[test]
    fn reconstruction_matches_input() {
        let p = p60();
        // degree 5 with mixed scale coefficients
        let coeffs = [
            Real::parse("0.375", p).unwrap(),
            rv(-2, p),
            Real::parse("1.5", p).unwrap(),
            rv(7, p),
            Real::parse("-0.125", p).unwrap(),
            rv(1, p),
        ];
        let roots = polynomial_roots(&coeffs, p).unwrap();
        // rebuild monic polynomial from roots, compare against input / lead
        let mut rebuilt = vec![Complex::from_real(Real::one(p))];
        for r in &roots {
            let mut next = vec![Complex::zero(p); rebuilt.len() + 1];
            for (i, c) in rebuilt.iter().enumerate() {
                next[i + 1] = &next[i + 1] + c;
                next[i] = &next[i] - &(c * r);
            }
            rebuilt = next;
        }
        let tol = p.tol(2);
        for (i, c) in coeffs.iter().enumerate() {
            let want = c / &coeffs[5];
            let got = &rebuilt[i];
            assert!(
                (&got.re - &want).abs() < &tol * &(&Real::one(p) + &want.abs()),
                "coeff {i}: {:?} vs {want}",
                got
            );
            assert!(got.im.abs() < tol);
        }
    }

    #[test]
    fn near_zero_root_found() {
        let p = p60();
        // z^2 + z*1e-40 ~ roots {0, -1e-40}; Prony-style degenerate case is z^2 + 0z
        let roots = polynomial_roots(&[Real::zero(p), Real::zero(p), rv(1, p)], p).unwrap();
        for r in &roots {
            assert!(r.abs() < p.tol(3));
        }
    }

    #[test]
    fn warm_start_converges_fast() {
        let p = p60();
        let coeffs = [rv(-6, p), rv(11, p), rv(-6, p), rv(1, p)];
        let init = vec![
            Complex::new(Real::parse("0.99", p).unwrap(), Real::zero(p)),
            Complex::new(Real::parse("2.01", p).unwrap(), Real::zero(p)),
            Complex::new(Real::parse("3.02", p).unwrap(), Real::zero(p)),
        ];
        let roots = polynomial_roots_with_init(&coeffs, p, Some(&init)).unwrap();
        assert!((&roots[0].re - &Real::one(p)).abs() < p.tol(2));
    }
}
