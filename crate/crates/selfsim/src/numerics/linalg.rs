//! Structured linear solves for the moment systems.
//!
//! Gaussian elimination with complete pivoting at working precision. Systems
//! here are tiny (N <= 10), so the condition number is computed from the
//! explicit inverse rather than estimated.

use super::prec::{Complex, Prec, Real};
use super::NumericsError;

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x: Vec<Real>,
    pub condition: Real,
    pub rank: usize,
}

/// Solve the N x N Hankel system over the moment list `b = [b_1 .. b_{2N}]`:
///
///   sum_i H[m][i] q_i = -b_{m+N+1},   H[m][i] = b_{m+i+1}   (m, i = 0..N-1)
///
/// which is the linear-recurrence form of the Prony problem: the returned
/// `q_0..q_{N-1}` complete the monic polynomial q(z) = z^N + q_{N-1} z^(N-1)
/// + ... + q_0 whose roots are the factor amplitudes.
pub fn solve_hankel(moments: &[Real], n: usize, p: Prec) -> Result<LinearSolution, NumericsError> {
    if moments.len() < 2 * n {
        return Err(NumericsError::InvalidInput(format!(
            "need {} moments for size {n}, got {}",
            2 * n,
            moments.len()
        )));
    }
    let a: Vec<Vec<Real>> = (0..n)
        .map(|m| (0..n).map(|i| moments[m + i].clone()).collect())
        .collect();
    let rhs: Vec<Real> = (0..n).map(|m| moments[m + n].neg()).collect();
    solve_dense(&a, &rhs, p)
}

/// Dense solve with complete pivoting and rank detection. Returns
/// `SingularSystem { rank, .. }` when the effective rank is below n.
pub fn solve_dense(a: &[Vec<Real>], b: &[Real], p: Prec) -> Result<LinearSolution, NumericsError> {
    let n = a.len();
    if n == 0 {
        return Ok(LinearSolution {
            x: vec![],
            condition: Real::one(p),
            rank: 0,
        });
    }
    // augmented with the rhs plus the identity for the inverse
    let width = n + 1 + n;
    let mut m: Vec<Vec<Real>> = (0..n)
        .map(|i| {
            let mut row: Vec<Real> = a[i].to_vec();
            row.push(b[i].clone());
            for j in 0..n {
                row.push(if i == j { Real::one(p) } else { Real::zero(p) });
            }
            row
        })
        .collect();

    let norm_a = one_norm(a, p);
    let rank_tol = p.tol(2);
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = n;
    let mut first_pivot = Real::zero(p);

    for k in 0..n {
        // complete pivot search over the remaining square block
        let mut best = (k, k, Real::zero(p));
        for i in k..n {
            for j in k..n {
                let v = m[i][j].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, pmag) = best;
        if k == 0 {
            first_pivot = pmag.clone();
        }
        let threshold = &rank_tol * &first_pivot;
        if pmag.is_zero() || pmag <= threshold {
            rank = k;
            break;
        }
        m.swap(k, pi);
        if pj != k {
            for row in m.iter_mut() {
                row.swap(k, pj);
            }
            col_perm.swap(k, pj);
        }
        let pivot = m[k][k].clone();
        for i in 0..n {
            if i == k {
                continue;
            }
            if m[i][k].is_zero() {
                continue;
            }
            let factor = &m[i][k] / &pivot;
            for j in k..width {
                let upd = &m[i][j] - &(&factor * &m[k][j]);
                m[i][j] = upd;
            }
            m[i][k] = Real::zero(p);
        }
    }

    if rank < n {
        return Err(NumericsError::SingularSystem { rank, size: n });
    }

    // back out solution and inverse (diagonalized by full elimination)
    let mut x = vec![Real::zero(p); n];
    let mut inv = vec![vec![Real::zero(p); n]; n];
    for k in 0..n {
        let pivot = m[k][k].clone();
        x[col_perm[k]] = &m[k][n] / &pivot;
        for j in 0..n {
            inv[col_perm[k]][j] = &m[k][n + 1 + j] / &pivot;
        }
    }
    let norm_inv = one_norm(&inv, p);
    Ok(LinearSolution {
        x,
        condition: &norm_a * &norm_inv,
        rank: n,
    })
}

fn one_norm(a: &[Vec<Real>], p: Prec) -> Real {
    let n = a.len();
    let mut best = Real::zero(p);
    for j in 0..a.first().map(|r| r.len()).unwrap_or(0).min(n) {
        let mut s = Real::zero(p);
        for row in a {
            s = &s + &row[j].abs();
        }
        if s > best {
            best = s;
        }
    }
    best
}

/// Dense complex solve with partial pivoting (used for the exponent systems,
/// whose generalized Vandermonde matrices are well scaled after pivoting).
pub fn solve_dense_complex(
    a: &[Vec<Complex>],
    b: &[Complex],
    p: Prec,
) -> Result<Vec<Complex>, NumericsError> {
    let n = a.len();
    let mut m: Vec<Vec<Complex>> = (0..n)
        .map(|i| {
            let mut row = a[i].to_vec();
            row.push(b[i].clone());
            row
        })
        .collect();
    let tol = p.tol(2);
    let mut scale0 = Real::zero(p);
    for k in 0..n {
        let mut pi = k;
        let mut pmag = m[k][k].abs();
        for i in k + 1..n {
            let v = m[i][k].abs();
            if v > pmag {
                pi = i;
                pmag = v;
            }
        }
        if k == 0 {
            scale0 = pmag.clone();
        }
        if pmag.is_zero() || pmag <= &tol * &scale0 {
            return Err(NumericsError::SingularSystem { rank: k, size: n });
        }
        m.swap(k, pi);
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            if m[i][k].abs().is_zero() {
                continue;
            }
            let factor = &m[i][k] / &pivot;
            for j in k..=n {
                let upd = &m[i][j] - &(&factor * &m[k][j]);
                m[i][j] = upd;
            }
        }
    }
    let mut x = vec![Complex::zero(p); n];
    for k in (0..n).rev() {
        let mut acc = m[k][n].clone();
        for j in k + 1..n {
            acc = &acc - &(&m[k][j] * &x[j]);
        }
        x[k] = &acc / &m[k][k];
    }
    Ok(x)
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
    fn hankel_identity_like() {
        let p = p60();
        // N=1, b=[1,0]: 1*q0 = -0 -> q0 = 0, rank 1
        let sol = solve_hankel(&[rv(1, p), rv(0, p)], 1, p).unwrap();
        assert_eq!(sol.rank, 1);
        assert!(sol.x[0].is_zero());
    }

    #[test]
    fn hankel_rank_deficient_single_pair() {
        let p = p60();
        // moments of (A, n) = (1, 2): b = [2,2,2,2]; N=2 is singular
        let b = [rv(2, p), rv(2, p), rv(2, p), rv(2, p)];
        match solve_hankel(&b, 2, p) {
            Err(NumericsError::SingularSystem { rank, size }) => {
                assert_eq!(rank, 1);
                assert_eq!(size, 2);
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn hankel_two_pairs() {
        let p = p60();
        // pairs {(1,2), (-1,1)}: b_m = 2*1^m + (-1)^m -> [1,3,1,3]
        let b = [rv(1, p), rv(3, p), rv(1, p), rv(3, p)];
        let sol = solve_hankel(&b, 2, p).unwrap();
        // q(z) = z^2 + q1 z + q0 with roots {1,-1}: q0 = -1, q1 = 0
        assert!((&sol.x[0] + &Real::one(p)).abs() < p.tol(2));
        assert!(sol.x[1].abs() < p.tol(2));
        assert!(sol.condition >= Real::one(p));
    }

    #[test]
    fn dense_solve_and_condition() {
        let p = p60();
        let a = vec![
            vec![rv(4, p), rv(1, p)],
            vec![rv(1, p), rv(3, p)],
        ];
        let b = vec![rv(9, p), rv(5, p)];
        let sol = solve_dense(&a, &b, p).unwrap();
        assert!((&sol.x[0] - &rv(2, p)).abs() < p.tol(2));
        assert!((&sol.x[1] - &Real::one(p)).abs() < p.tol(2));
        // cond_1 of [[4,1],[1,3]] is 25/11 * ... compute loosely
        assert!(sol.condition > Real::one(p));
        assert!(sol.condition < rv(10, p));
    }

    #[test]
    fn complex_vandermonde() {
        let p = p60();
        // nodes i, -i: solve n1*A1^m + n2*A2^m = b_m with b = [0, -2]
        // (comes from the pair (i, 1), (-i, 1): b_1 = i - i = 0, b_2 = -1 - 1 = -2)
        let i = Complex::new(Real::zero(p), Real::one(p));
        let mi = i.conj();
        let a = vec![
            vec![i.clone(), mi.clone()],
            vec![&i * &i, &mi * &mi],
        ];
        let b = vec![Complex::zero(p), Complex::from_real(rv(-2, p))];
        let x = solve_dense_complex(&a, &b, p).unwrap();
        for v in &x {
            assert!((&v.re - &Real::one(p)).abs() < p.tol(2));
            assert!(v.im.abs() < p.tol(2));
        }
    }
}
