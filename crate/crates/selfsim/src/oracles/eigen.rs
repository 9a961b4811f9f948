//! Lowest eigenvalue of a symmetric banded matrix by inertia bisection.
//!
//! The Hamiltonians diagonalized here have bandwidth 4 (harmonic basis with
//! an x^4 coupling), so an LDL^T factorization of A - sigma*I counts the
//! eigenvalues below sigma in O(n b^2) time and bisection pins the lowest
//! one to machine accuracy.

/// Symmetric banded matrix: `band[d][i]` is the entry A[i][i+d], d = 0..=bw.
pub struct Banded {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<Vec<f64>>,
}

impl Banded {
    pub fn new(n: usize, bw: usize) -> Self {
        Banded {
            n,
            bw,
            band: (0..=bw).map(|d| vec![0.0; n.saturating_sub(d)]).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.band[d][lo]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bw, "outside band");
        self.band[d][lo] = v;
    }

    /// Number of eigenvalues strictly below sigma (Sylvester inertia of the
    /// LDL^T pivots of A - sigma I, computed on a dense band window).
    fn count_below(&self, sigma: f64) -> usize {
        let n = self.n;
        let bw = self.bw;
        let width = 2 * bw + 1;
        // rows stored as windows [i-bw, i+bw]
        let mut work: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..width)
                    .map(|w| {
                        let j = i as isize + w as isize - bw as isize;
                        if j < 0 || j >= n as isize {
                            0.0
                        } else {
                            let v = self.get(i, j as usize);
                            if w == bw {
                                v - sigma
                            } else {
                                v
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        let mut negatives = 0usize;
        for k in 0..n {
            let mut pivot = work[k][bw];
            if pivot == 0.0 {
                pivot = f64::EPSILON * (1.0 + sigma.abs());
            }
            if pivot < 0.0 {
                negatives += 1;
            }
            let last = (k + bw).min(n - 1);
            let row_k = work[k].clone();
            for i in k + 1..=last {
                // A[i][k] sits in row i at window offset k - i + bw
                let off = (k + bw) - i;
                let lik = work[i][off] / pivot;
                if lik == 0.0 {
                    continue;
                }
                for j in k..=last {
                    let oij = (j + bw) - i;
                    let okj = (j + bw) - k;
                    work[i][oij] -= lik * row_k[okj];
                }
            }
        }
        negatives
    }

    /// Smallest eigenvalue to absolute tolerance `tol`.
    pub fn lowest_eigenvalue(&self, tol: f64) -> f64 {
        // Gershgorin bounds
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let d = self.get(i, i);
            let mut r = 0.0;
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n) {
                if j != i {
                    r += self.get(i, j).abs();
                }
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        let mut a = lo;
        let mut b = hi;
        // find an upper bound with at least one eigenvalue below it
        while self.count_below(b) == 0 {
            b += (b - a).abs().max(1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.count_below(mid) >= 1 {
                b = mid;
            } else {
                a = mid;
            }
            if (b - a).abs() < tol * 0.25 {
                break;
            }
        }
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_toeplitz() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(pi k/(n+1))
        let n = 50;
        let mut m = Banded::new(n, 1);
        for i in 0..n {
            m.set(i, i, 2.0);
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        let expect = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let got = m.lowest_eigenvalue(1e-12);
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn diagonal_matrix() {
        let mut m = Banded::new(5, 2);
        for (i, v) in [3.0, -1.5, 7.0, 0.25, 9.0].iter().enumerate() {
            m.set(i, i, *v);
        }
        assert!((m.lowest_eigenvalue(1e-13) + 1.5).abs() < 1e-11);
    }
}
