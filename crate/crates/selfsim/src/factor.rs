//! Self-similar factor approximants.
//!
//! A truncated series sum a_n x^n is resummed into the product form
//!
//! ```text
//! f*(x) = a_p x^p  prod_j (1 + A_j x^g)^(n_j)
//! ```
//!
//! whose parameters are trained so the re-expansion reproduces the input
//! coefficients exactly through the build order. The construction runs
//! through the log-series moments b_m = sum_j n_j A_j^m: a Hankel solve
//! yields the Prony polynomial whose roots are the amplitudes, a generalized
//! Vandermonde solve yields the exponents. Rank-deficient moment systems
//! trigger automatic order reduction (the signature of an input that is
//! exactly a lower-order factor form), and near-zero amplitudes degenerate
//! into exponential factors e^(c x^g) with the rate read from the moments.

use thiserror::Error;

use crate::numerics::{
    polynomial_roots, solve_dense, solve_dense_complex, solve_hankel, Complex, NumericsError,
    Prec, Real,
};
use crate::series::{PowerSeries, SeriesError};

#[derive(Error, Debug, Clone)]
pub enum BuildError {
    #[error("order {got} too small: factor construction needs at least {needed} usable conditions")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("series is identically zero")]
    ZeroSeries,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("singular moment system (rank {rank}) with no consistent reduction")]
    SingularHankel { rank: usize },
    #[error("factor parameters could not be made real: {detail}")]
    NonRealResult { detail: String },
    #[error("re-expansion mismatch: accuracy-through-order residual {residual}")]
    AccuracyLoss { residual: String },
}

#[derive(Error, Debug, Clone)]
pub enum EvalError {
    #[error("factor {factor} undefined at x = {x}: base vanishes at x = {boundary}")]
    Domain {
        factor: String,
        x: String,
        boundary: String,
    },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// One trained factor of the product.
#[derive(Clone, Debug)]
pub enum Factor {
    /// (1 + a y)^n with real a, n.
    RealPower { a: Real, n: Real },
    /// (1 + a y)^n (1 + conj(a) y)^conj(n): a conjugate pair stored once,
    /// evaluated as exp(2 Re(n ln(1 + a y))) so results are real by
    /// construction. Im(a) > 0 canonically.
    ConjPower { a: Complex, n: Complex },
    /// e^(rate y): the A -> 0 degeneracy of a factor pair with n A -> rate.
    Exponential { rate: Real },
}

/// Spec-facing view of a single factor pair.
#[derive(Clone, Debug)]
pub struct FactorPair {
    pub amplitude: Complex,
    pub exponent: Complex,
    pub kind: FactorKind,
    pub rate: Option<Real>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Power,
    Exponential,
}

#[derive(Clone, Debug)]
pub struct OddFix {
    /// Amplitude the odd-order closure pinned.
    pub pinned_amplitude: Real,
    /// Whether the pinned factor survived (a zero trained exponent drops it).
    pub retained: bool,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Amplitude pinned for odd orders (the parameter count exceeds the
    /// condition count by one; scaling freedom makes the choice free).
    pub pinned_amplitude: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            pinned_amplitude: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validity {
    Clean,
    Flagged,
}

/// Strong-coupling form C x^nu.
#[derive(Clone, Debug)]
pub struct AsymptoticForm {
    pub amplitude: Real,
    pub exponent: Real,
    pub validity: Validity,
    pub reason: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    /// S(x) = sum_j n_j ln(1 + A_j x) at each probe (None when a probe falls
    /// outside a factor's domain).
    pub s_values: Vec<(Real, Option<Real>)>,
    /// s = sum_j |n_j A_j|, the scaling-invariant convergence indicator.
    pub s_k: Real,
    pub max_pair_product: Real,
    pub hankel_condition: Real,
    pub effective_rank: usize,
}

#[derive(Clone, Debug)]
pub struct FactorApproximant {
    prefactor: Real,
    leading_power: usize,
    gap: usize,
    factors: Vec<Factor>,
    order: usize,
    effective_order: usize,
    planned_pairs: usize,
    reduced_from: Option<usize>,
    odd_fix: Option<OddFix>,
    residual: Real,
    hankel_condition: Real,
    effective_rank: usize,
    prec: Prec,
}

/// Number of factor pairs at order k: k/2 for even k, (k+1)/2 for odd.
pub fn pair_count(k: usize) -> usize {
    if k % 2 == 0 {
        k / 2
    } else {
        k.div_ceil(2)
    }
}

pub fn build(f: &PowerSeries, k: usize) -> Result<FactorApproximant, BuildError> {
    build_with(f, k, &BuildOptions::default())
}

pub fn build_with(
    f: &PowerSeries,
    k: usize,
    opts: &BuildOptions,
) -> Result<FactorApproximant, BuildError> {
    let p = f.prec();
    if k < 2 || k > f.order() {
        return Err(BuildError::InsufficientOrder {
            needed: 2,
            got: k.min(f.order()),
        });
    }
    let coeffs: Vec<Real> = (0..=k).map(|i| f.coeff(i)).collect();

    // leading power: first nonzero coefficient
    let lead = coeffs
        .iter()
        .position(|c| !c.is_zero())
        .ok_or(BuildError::ZeroSeries)?;
    let reduced: Vec<Real> = coeffs[lead..].to_vec();

    // gap: gcd of the nonzero indices of the tail (they are exactly zero for
    // series in a power of the variable by the PowerSeries invariant)
    let mut gap = 0usize;
    for (i, c) in reduced.iter().enumerate().skip(1) {
        if !c.is_zero() {
            gap = gcd(gap, i);
        }
    }
    if gap == 0 {
        // constant * x^lead
        let mut fa = FactorApproximant {
            prefactor: reduced[0].clone(),
            leading_power: lead,
            gap: 1,
            factors: vec![],
            order: k,
            effective_order: 0,
            planned_pairs: 0,
            reduced_from: None,
            odd_fix: None,
            residual: Real::zero(p),
            hankel_condition: Real::one(p),
            effective_rank: 0,
            prec: p,
        };
        fa.residual = verify_against(&fa, &coeffs);
        return Ok(fa);
    }

    let k_eff = (reduced.len() - 1) / gap;
    if k_eff < 2 {
        return Err(BuildError::InsufficientOrder {
            needed: 2,
            got: k_eff,
        });
    }
    let y_coeffs: Vec<Real> = (0..=k_eff).map(|j| reduced[j * gap].clone()).collect();
    let y_series = PowerSeries::new(y_coeffs, p)?;
    let (prefactor, normalized) = y_series.normalized();
    let moments = normalized.moments()?;
    let b = moments.values();

    let planned = pair_count(k_eff);
    let mut k_c = k_eff;
    let mut first_rank: Option<usize> = None;
    let mut first_condition: Option<Real> = None;

    loop {
        let attempt = solve_prony(b, k_c, p, opts);
        match attempt {
            Ok(sol) => {
                if first_rank.is_none() {
                    first_rank = Some(sol.rank);
                    first_condition = Some(sol.condition.clone());
                }
                match assemble(
                    sol,
                    b,
                    &prefactor,
                    lead,
                    gap,
                    k,
                    k_eff,
                    k_c,
                    planned,
                    first_rank.unwrap(),
                    first_condition.clone().unwrap(),
                    &coeffs,
                    p,
                ) {
                    Ok(fa) => return Ok(fa),
                    Err(e @ BuildError::NonRealResult { .. }) => return Err(e),
                    Err(e) => {
                        // a reduced representation that fails verification is
                        // final: lower orders cannot match more conditions
                        return Err(e);
                    }
                }
            }
            Err(SolveFailure::Singular { rank }) => {
                if first_rank.is_none() {
                    first_rank = Some(rank);
                    first_condition = Some(Real::zero(p));
                }
                let next = if k_c % 2 == 0 { 2 * rank } else { k_c - 1 };
                if next < 2 {
                    // all information fits in fewer than one pair: constant
                    let mut fa = FactorApproximant {
                        prefactor: prefactor.clone(),
                        leading_power: lead,
                        gap,
                        factors: vec![],
                        order: k,
                        effective_order: 0,
                        planned_pairs: planned,
                        reduced_from: Some(k_eff),
                        odd_fix: None,
                        residual: Real::zero(p),
                        hankel_condition: first_condition.clone().unwrap(),
                        effective_rank: first_rank.unwrap(),
                        prec: p,
                    };
                    fa.residual = verify_against(&fa, &coeffs);
                    let tol = p.tol(3);
                    if fa.residual > tol {
                        return Err(BuildError::AccuracyLoss {
                            residual: fa.residual.to_decimal_string(6),
                        });
                    }
                    return Ok(fa);
                }
                if next >= k_c {
                    return Err(BuildError::SingularHankel { rank });
                }
                k_c = next;
            }
            Err(SolveFailure::Numerics(e)) => return Err(BuildError::Numerics(e)),
        }
    }
}

enum SolveFailure {
    Singular { rank: usize },
    Numerics(NumericsError),
}

struct PronySolution {
    roots: Vec<Complex>,
    rank: usize,
    condition: Real,
    pinned: Option<Real>,
}

/// Hankel (even order) or pinned-amplitude (odd order) Prony solve at
/// effective order `k_c` over the moments `b`.
fn solve_prony(
    b: &[Real],
    k_c: usize,
    p: Prec,
    opts: &BuildOptions,
) -> Result<PronySolution, SolveFailure> {
    let n = pair_count(k_c);
    if k_c % 2 == 0 {
        match solve_hankel(&b[..2 * n], n, p) {
            Ok(sol) => {
                let mut poly = sol.x.clone();
                poly.push(Real::one(p));
                let roots = polynomial_roots(&poly, p)
                    .map_err(SolveFailure::Numerics)?;
                Ok(PronySolution {
                    roots,
                    rank: sol.rank,
                    condition: sol.condition,
                    pinned: None,
                })
            }
            Err(NumericsError::SingularSystem { rank, .. }) => {
                Err(SolveFailure::Singular { rank })
            }
            Err(e) => Err(SolveFailure::Numerics(e)),
        }
    } else {
        // q(z) = (z - a0) r(z), monic r of degree n-1; conditions m = 1..n-1
        let pin = Real::from_f64(opts.pinned_amplitude, p);
        let dim = n - 1;
        let diff = |idx: usize| -> Real {
            // b_{idx+1} - pin * b_{idx}, 1-based moment indices
            &b[idx] - &(&pin * &b[idx - 1])
        };
        let a: Vec<Vec<Real>> = (1..=dim)
            .map(|m| (0..dim).map(|i| diff(m + i)).collect())
            .collect();
        let rhs: Vec<Real> = (1..=dim).map(|m| diff(m + dim).neg()).collect();
        match solve_dense(&a, &rhs, p) {
            Ok(sol) => {
                let mut poly = sol.x.clone();
                poly.push(Real::one(p));
                let mut roots = polynomial_roots(&poly, p)
                    .map_err(SolveFailure::Numerics)?;
                roots.push(Complex::from_real(pin.clone()));
                Ok(PronySolution {
                    roots,
                    rank: sol.rank + 1,
                    condition: sol.condition,
                    pinned: Some(pin),
                })
            }
            Err(NumericsError::SingularSystem { rank, .. }) => {
                Err(SolveFailure::Singular { rank: rank + 1 })
            }
            Err(e) => Err(SolveFailure::Numerics(e)),
        }
    }
}

struct Slot {
    root: Complex,
    level: usize, // confluent level: basis m^level * root^m
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    sol: PronySolution,
    b: &[Real],
    prefactor: &Real,
    lead: usize,
    gap: usize,
    k: usize,
    k_eff: usize,
    k_c: usize,
    planned: usize,
    first_rank: usize,
    first_condition: Real,
    original: &[Real],
    p: Prec,
) -> Result<FactorApproximant, BuildError> {
    let zero_tol = p.tol(4);
    let merge_tol = p.tol(4);
    let one = Real::one(p);

    // classify roots: near-zero roots collapse into one exponential slot,
    // coincident roots merge with confluent basis columns
    let mut has_exponential = false;
    let mut clusters: Vec<(Complex, usize)> = Vec::new();
    for r in &sol.roots {
        if r.abs() <= zero_tol {
            has_exponential = true;
            continue;
        }
        let mut merged = false;
        for (c, mult) in clusters.iter_mut() {
            let scale = c.abs().max(&one);
            if (&*c - r).abs() <= &merge_tol * &scale {
                *mult += 1;
                merged = true;
                break;
            }
        }
        if !merged {
            clusters.push((r.clone(), 1));
        }
    }

    let mut slots: Vec<Slot> = Vec::new();
    for (root, mult) in &clusters {
        for level in 0..*mult {
            slots.push(Slot {
                root: root.clone(),
                level,
            });
        }
    }
    let n_exp = usize::from(has_exponential);
    let m_total = slots.len() + n_exp;
    if m_total > b.len() {
        return Err(BuildError::SingularHankel { rank: m_total });
    }

    // moment-matching system: sum_slots coeff * basis(m) = b_m, m = 1..M
    let mut a: Vec<Vec<Complex>> = Vec::with_capacity(m_total);
    for m in 1..=m_total {
        let mut row: Vec<Complex> = Vec::with_capacity(m_total);
        for s in &slots {
            let mut v = s.root.powi(m as i64);
            if s.level > 0 {
                let f = Real::from_u64(m as u64, p).powi(s.level as i64);
                v = v.scale(&f);
            }
            row.push(v);
        }
        if has_exponential {
            row.push(if m == 1 {
                Complex::from_real(one.clone())
            } else {
                Complex::zero(p)
            });
        }
        a.push(row);
    }
    let rhs: Vec<Complex> = (1..=m_total)
        .map(|m| Complex::from_real(b[m - 1].clone()))
        .collect();
    let x = match solve_dense_complex(&a, &rhs, p) {
        Ok(x) => x,
        Err(NumericsError::SingularSystem { rank, .. }) => {
            return Err(BuildError::SingularHankel { rank })
        }
        Err(e) => return Err(BuildError::Numerics(e)),
    };

    // confluent corrections have no representation in the factor vocabulary;
    // they must vanish (they do whenever coincident roots mean a genuinely
    // merged factor)
    let b_scale = b
        .iter()
        .fold(Real::one(p), |acc, v| acc.max(&v.abs()));
    let conf_tol = &p.tol(4) * &b_scale;
    for (s, coeff) in slots.iter().zip(&x) {
        if s.level > 0 && coeff.abs() > conf_tol {
            return Err(BuildError::AccuracyLoss {
                residual: coeff.abs().to_decimal_string(6),
            });
        }
    }

    // pair exponents with conjugate roots, enforce realness
    let pair_tol = p.tol(4);
    let mut factors: Vec<Factor> = Vec::new();
    let base_slots: Vec<(usize, &Slot)> = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.level == 0)
        .collect();
    let mut used = vec![false; base_slots.len()];
    for i in 0..base_slots.len() {
        if used[i] {
            continue;
        }
        let (xi, si) = base_slots[i];
        let n_i = &x[xi];
        if si.root.is_real() {
            let scale = &one + &n_i.abs();
            if n_i.im.abs() > &pair_tol * &scale {
                return Err(BuildError::NonRealResult {
                    detail: format!(
                        "real amplitude {} got complex exponent {:?}",
                        si.root.re, n_i
                    ),
                });
            }
            used[i] = true;
            factors.push(Factor::RealPower {
                a: si.root.re.clone(),
                n: n_i.re.clone(),
            });
        } else {
            // find conjugate partner
            let mut partner: Option<usize> = None;
            for j in i + 1..base_slots.len() {
                if used[j] {
                    continue;
                }
                let (_, sj) = base_slots[j];
                if (&sj.root - &si.root.conj()).abs() <= &pair_tol * &si.root.abs().max(&one) {
                    partner = Some(j);
                    break;
                }
            }
            let Some(j) = partner else {
                return Err(BuildError::NonRealResult {
                    detail: format!("unpaired complex amplitude {:?}", si.root),
                });
            };
            let (xj, _) = base_slots[j];
            let n_j = &x[xj];
            let asym = (&n_j.conj() - n_i).abs();
            if asym > &pair_tol * &(&one + &n_i.abs()) {
                return Err(BuildError::NonRealResult {
                    detail: format!(
                        "conjugate exponents mismatch: {:?} vs {:?}",
                        n_i, n_j
                    ),
                });
            }
            used[i] = true;
            used[j] = true;
            let half = Real::from_f64(0.5, p);
            let n_avg = Complex::new(
                &(&n_i.re + &n_j.re) * &half,
                &(&n_i.im - &n_j.im) * &half,
            );
            let (a_can, n_can) = if si.root.im.is_positive() {
                (si.root.clone(), n_avg)
            } else {
                (si.root.conj(), n_avg.conj())
            };
            factors.push(Factor::ConjPower { a: a_can, n: n_can });
        }
    }
    let mut odd_fix = sol.pinned.as_ref().map(|pin| OddFix {
        pinned_amplitude: pin.clone(),
        retained: true,
    });
    if has_exponential {
        let rate = x[slots.len()].clone();
        if rate.im.abs() > &pair_tol * &(&one + &rate.abs()) {
            return Err(BuildError::NonRealResult {
                detail: format!("complex exponential rate {rate:?}"),
            });
        }
        factors.push(Factor::Exponential { rate: rate.re });
    }

    // drop factors whose trained exponent vanished (e.g. an odd-order pinned
    // amplitude the series did not need)
    let n_scale = factors.iter().fold(Real::one(p), |acc, f| match f {
        Factor::RealPower { n, .. } => acc.max(&n.abs()),
        Factor::ConjPower { n, .. } => acc.max(&n.abs()),
        Factor::Exponential { rate } => acc.max(&rate.abs()),
    });
    let drop_tol = &p.tol(2) * &n_scale;
    let before = factors.len();
    factors.retain(|f| match f {
        Factor::RealPower { n, .. } => n.abs() > drop_tol,
        Factor::ConjPower { n, .. } => n.abs() > drop_tol,
        Factor::Exponential { rate } => rate.abs() > drop_tol,
    });
    if factors.len() != before {
        if let (Some(fix), Some(pin)) = (odd_fix.as_mut(), sol.pinned.as_ref()) {
            let still_there = factors.iter().any(|f| match f {
                Factor::RealPower { a, .. } => (a - pin).abs() <= &pair_tol * &one,
                _ => false,
            });
            fix.retained = still_there;
        }
    }

    sort_factors(&mut factors);

    let mut fa = FactorApproximant {
        prefactor: prefactor.clone(),
        leading_power: lead,
        gap,
        factors,
        order: k,
        effective_order: k_c,
        planned_pairs: planned,
        reduced_from: if k_c < k_eff { Some(k_eff) } else { None },
        odd_fix,
        residual: Real::zero(p),
        hankel_condition: first_condition,
        effective_rank: first_rank,
        prec: p,
    };
    fa.residual = verify_against(&fa, original);
    let tol = p.tol(3);
    if fa.residual > tol {
        return Err(BuildError::AccuracyLoss {
            residual: fa.residual.to_decimal_string(6),
        });
    }
    Ok(fa)
}

fn sort_factors(factors: &mut [Factor]) {
    factors.sort_by(|l, r| {
        let key = |f: &Factor| -> (u8, f64, f64) {
            match f {
                Factor::RealPower { a, .. } => (0, a.to_f64(), 0.0),
                Factor::ConjPower { a, .. } => (1, a.re.to_f64(), a.im.to_f64()),
                Factor::Exponential { rate } => (2, rate.to_f64(), 0.0),
            }
        };
        let (kl, al, bl) = key(l);
        let (kr, ar, br) = key(r);
        kl.cmp(&kr)
            .then(al.partial_cmp(&ar).unwrap_or(std::cmp::Ordering::Equal))
            .then(bl.partial_cmp(&br).unwrap_or(std::cmp::Ordering::Equal))
    });
}

fn gcd(a: usize, b: usize) -> usize {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

/// Max scaled coefficient mismatch between the re-expansion of `fa` and the
/// given source coefficients.
fn verify_against(fa: &FactorApproximant, coeffs: &[Real]) -> Real {
    let p = fa.prec;
    let k = coeffs.len() - 1;
    let expansion = fa.taylor(k);
    let mut worst = Real::zero(p);
    for (i, c) in coeffs.iter().enumerate() {
        let scale = Real::one(p).max(&c.abs());
        let err = &(&expansion.coeff(i) - c).abs() / &scale;
        if err > worst {
            worst = err;
        }
    }
    worst
}

impl FactorApproximant {
    pub fn prefactor(&self) -> &Real {
        &self.prefactor
    }

    pub fn leading_power(&self) -> usize {
        self.leading_power
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Conditions actually used in the reduced variable (equals the build
    /// order unless rank reduction fired).
    pub fn effective_order(&self) -> usize {
        self.effective_order
    }

    /// N_k implied by the parity rule for the requested order.
    pub fn planned_pairs(&self) -> usize {
        self.planned_pairs
    }

    /// When rank reduction fired: the effective order originally requested.
    /// The input is then exactly a factor form of the reduced order.
    pub fn reduced_from(&self) -> Option<usize> {
        self.reduced_from
    }

    pub fn odd_fix(&self) -> Option<&OddFix> {
        self.odd_fix.as_ref()
    }

    /// Accuracy-through-order residual recorded at build time.
    pub fn residual(&self) -> &Real {
        &self.residual
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn prec(&self) -> Prec {
        self.prec
    }

    /// Spec-vocabulary pair list (conjugate factors expanded to both
    /// members).
    pub fn pairs(&self) -> Vec<FactorPair> {
        let p = self.prec;
        let mut out = Vec::new();
        for f in &self.factors {
            match f {
                Factor::RealPower { a, n } => out.push(FactorPair {
                    amplitude: Complex::from_real(a.clone()),
                    exponent: Complex::from_real(n.clone()),
                    kind: FactorKind::Power,
                    rate: None,
                }),
                Factor::ConjPower { a, n } => {
                    out.push(FactorPair {
                        amplitude: a.clone(),
                        exponent: n.clone(),
                        kind: FactorKind::Power,
                        rate: None,
                    });
                    out.push(FactorPair {
                        amplitude: a.conj(),
                        exponent: n.conj(),
                        kind: FactorKind::Power,
                        rate: None,
                    });
                }
                Factor::Exponential { rate } => out.push(FactorPair {
                    amplitude: Complex::zero(p),
                    exponent: Complex::zero(p),
                    kind: FactorKind::Exponential,
                    rate: Some(rate.clone()),
                }),
            }
        }
        out
    }

    /// Evaluate at real x.
    pub fn evaluate(&self, x: &Real) -> Result<Real, EvalError> {
        let p = self.prec;
        let y = if self.gap == 1 {
            x.clone()
        } else {
            x.powi(self.gap as i64)
        };
        let one = Real::one(p);
        let mut acc = self.prefactor.clone();
        if self.leading_power > 0 {
            acc = &acc * &x.powi(self.leading_power as i64);
        }
        for (idx, f) in self.factors.iter().enumerate() {
            match f {
                Factor::RealPower { a, n } => {
                    let base = &one + &(a * &y);
                    if base.is_positive() {
                        acc = &acc * &base.pow(n);
                    } else if is_near_integer(n, p) {
                        let e = n.round_i64();
                        if base.is_zero() {
                            if e > 0 {
                                acc = Real::zero(p);
                            } else {
                                return Err(self.domain_err(idx, a, x));
                            }
                        } else {
                            acc = &acc * &base.powi(e);
                        }
                    } else {
                        return Err(self.domain_err(idx, a, x));
                    }
                }
                Factor::ConjPower { a, n } => {
                    let base = Complex::new(&one + &(&a.re * &y), &a.im * &y);
                    if base.norm_sqr().is_zero() {
                        return Err(EvalError::Domain {
                            factor: format!("factor {idx} (conjugate pair)"),
                            x: x.to_decimal_string(8),
                            boundary: x.to_decimal_string(8),
                        });
                    }
                    let w = &base.ln() * n;
                    let two = Real::from_i64(2, p);
                    acc = &acc * &(&two * &w.re).exp();
                }
                Factor::Exponential { rate } => {
                    acc = &acc * &(rate * &y).exp();
                }
            }
        }
        if !acc.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(acc)
    }

    fn domain_err(&self, idx: usize, a: &Real, x: &Real) -> EvalError {
        let p = self.prec;
        let boundary_y = a.recip().neg();
        let boundary = if self.gap == 1 {
            boundary_y
        } else if boundary_y.is_negative() && self.gap % 2 == 0 {
            Real::from_f64(f64::NAN, p)
        } else {
            boundary_y.abs().pow(&Real::ratio(1, self.gap as i64, p))
        };
        EvalError::Domain {
            factor: format!("factor {idx} (amplitude {})", a.to_decimal_string(8)),
            x: x.to_decimal_string(8),
            boundary: boundary.to_decimal_string(8),
        }
    }

    /// Large-x power law C x^nu. Exponential factors and negative real
    /// amplitudes flag the form instead of failing.
    pub fn asymptotics(&self) -> AsymptoticForm {
        let p = self.prec;
        let mut nu = Real::from_u64(self.leading_power as u64, p);
        let g = Real::from_u64(self.gap as u64, p);
        let mut c = self.prefactor.clone();
        let mut flagged: Option<String> = None;
        let flag = |reason: String, current: &mut Option<String>| {
            if current.is_none() {
                *current = Some(reason);
            }
        };
        for (idx, f) in self.factors.iter().enumerate() {
            match f {
                Factor::RealPower { a, n } => {
                    nu = &nu + &(&g * n);
                    if a.is_positive() {
                        c = &c * &a.pow(n);
                    } else {
                        // principal branch real part |a|^n cos(pi n)
                        let mag = a.abs().pow(n);
                        let ang = (&Real::pi(p) * n).cos();
                        c = &c * &(&mag * &ang);
                        let boundary = a.recip().neg();
                        flag(
                            format!(
                                "factor {idx}: amplitude {} < 0 puts a zero or pole at finite argument (reduced variable {})",
                                a.to_decimal_string(6),
                                boundary.to_decimal_string(6),
                            ),
                            &mut flagged,
                        );
                    }
                }
                Factor::ConjPower { a, n } => {
                    let two = Real::from_i64(2, p);
                    nu = &nu + &(&g * &(&two * &n.re));
                    let w = &a.ln() * n;
                    c = &c * &(&two * &w.re).exp();
                }
                Factor::Exponential { rate } => {
                    flag(
                        format!(
                            "factor {idx}: exponential factor with rate {} grows faster than any power",
                            rate.to_decimal_string(6)
                        ),
                        &mut flagged,
                    );
                }
            }
        }
        AsymptoticForm {
            amplitude: c,
            exponent: nu,
            validity: if flagged.is_some() {
                Validity::Flagged
            } else {
                Validity::Clean
            },
            reason: flagged,
        }
    }

    /// Convergence diagnostics: the log-sum S(x) at each probe, the
    /// scaling-invariant sum s = sum |n_j A_j| and the largest single
    /// product, plus the conditioning of the moment solve.
    pub fn diagnostics(&self, probe_xs: &[Real]) -> DiagnosticsReport {
        let p = self.prec;
        let one = Real::one(p);
        let mut s_values = Vec::with_capacity(probe_xs.len());
        for x in probe_xs {
            let y = if self.gap == 1 {
                x.clone()
            } else {
                x.powi(self.gap as i64)
            };
            let mut total = Real::zero(p);
            let mut ok = true;
            for f in &self.factors {
                match f {
                    Factor::RealPower { a, n } => {
                        let base = &one + &(a * &y);
                        if !base.is_positive() {
                            ok = false;
                            break;
                        }
                        total = &total + &(n * &base.ln());
                    }
                    Factor::ConjPower { a, n } => {
                        let base = Complex::new(&one + &(&a.re * &y), &a.im * &y);
                        let w = &base.ln() * n;
                        total = &total + &(&Real::from_i64(2, p) * &w.re);
                    }
                    Factor::Exponential { rate } => {
                        total = &total + &(rate * &y);
                    }
                }
            }
            s_values.push((x.clone(), if ok { Some(total) } else { None }));
        }
        let mut s_k = Real::zero(p);
        let mut max_pp = Real::zero(p);
        for f in &self.factors {
            match f {
                Factor::RealPower { a, n } => {
                    let v = (n * a).abs();
                    if v > max_pp {
                        max_pp = v.clone();
                    }
                    s_k = &s_k + &v;
                }
                Factor::ConjPower { a, n } => {
                    let v = (n * a).abs();
                    if v > max_pp {
                        max_pp = v.clone();
                    }
                    s_k = &s_k + &(&Real::from_i64(2, p) * &v);
                }
                Factor::Exponential { rate } => {
                    let v = rate.abs();
                    if v > max_pp {
                        max_pp = v.clone();
                    }
                    s_k = &s_k + &v;
                }
            }
        }
        DiagnosticsReport {
            s_values,
            s_k,
            max_pair_product: max_pp,
            hankel_condition: self.hankel_condition.clone(),
            effective_rank: self.effective_rank,
        }
    }

    /// Taylor re-expansion through order `upto` in the original variable.
    pub fn taylor(&self, upto: usize) -> PowerSeries {
        let p = self.prec;
        let k_y = if upto >= self.leading_power {
            (upto - self.leading_power) / self.gap
        } else {
            0
        };
        // log expansion in the reduced variable:
        //   sum_j n_j ln(1 + A_j y) + rate*y
        //   = sum_m [ (-1)^(m+1)/m sum_j n_j A_j^m + rate delta_{m,1} ] y^m
        let mut log_coeffs = vec![Real::zero(p); k_y + 1];
        for f in &self.factors {
            match f {
                Factor::RealPower { a, n } => {
                    let mut pw = Real::one(p);
                    for (m, lc) in log_coeffs.iter_mut().enumerate().skip(1) {
                        pw = &pw * a;
                        let term = &(n * &pw) / &Real::from_u64(m as u64, p);
                        *lc = if m % 2 == 1 { &*lc + &term } else { &*lc - &term };
                    }
                }
                Factor::ConjPower { a, n } => {
                    let mut pw = Complex::from_real(Real::one(p));
                    let two = Real::from_i64(2, p);
                    for (m, lc) in log_coeffs.iter_mut().enumerate().skip(1) {
                        pw = &pw * a;
                        let re = (n * &pw).re;
                        let term = &(&two * &re) / &Real::from_u64(m as u64, p);
                        *lc = if m % 2 == 1 { &*lc + &term } else { &*lc - &term };
                    }
                }
                Factor::Exponential { rate } => {
                    if k_y >= 1 {
                        log_coeffs[1] = &log_coeffs[1] + rate;
                    }
                }
            }
        }
        let log_series = PowerSeries::new(log_coeffs, p).expect("log expansion finite");
        let y_exp = log_series.exp_series();
        let mut out = vec![Real::zero(p); upto + 1];
        for j in 0..=k_y {
            let idx = self.leading_power + j * self.gap;
            if idx <= upto {
                out[idx] = &self.prefactor * &y_exp.coeff(j);
            }
        }
        PowerSeries::new(out, p).expect("taylor coefficients finite")
    }
}

fn is_near_integer(n: &Real, p: Prec) -> bool {
    let r = Real::from_i64(n.round_i64(), p);
    (n - &r).abs() <= p.tol(2)
}

/// s = sum |n_j A_j| over a raw pair list (both members of conjugate pairs
/// included), for scaling-invariance checks.
pub fn s_sum_from_pairs(pairs: &[(Complex, Complex)], p: Prec) -> Real {
    let mut s = Real::zero(p);
    for (a, n) in pairs {
        s = &s + &(a * n).abs();
    }
    s
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

    fn assert_close(a: &Real, b: f64, tol_log10: i64) {
        let p = p60();
        let expect = Real::from_f64(b, p);
        let err = (a - &expect).abs();
        assert!(
            err < Real::pow10(tol_log10, p),
            "{a} vs {b} (err {err})"
        );
    }

    #[test]
    fn geometric_is_exact() {
        // [1,1,1] -> (1 - x)^(-1)
        let fa = build(&series(&[1.0, 1.0, 1.0]), 2).unwrap();
        assert_eq!(fa.factors().len(), 1);
        match &fa.factors()[0] {
            Factor::RealPower { a, n } => {
                assert_close(a, -1.0, -50);
                assert_close(n, -1.0, -50);
            }
            other => panic!("unexpected factor {other:?}"),
        }
        let v = fa.evaluate(&Real::from_f64(0.5, p60())).unwrap();
        assert_close(&v, 2.0, -50);
    }

    #[test]
    fn binomial_is_exact() {
        // [1,2,1] -> (1 + x)^2
        let fa = build(&series(&[1.0, 2.0, 1.0]), 2).unwrap();
        match &fa.factors()[0] {
            Factor::RealPower { a, n } => {
                assert_close(a, 1.0, -50);
                assert_close(n, 2.0, -50);
            }
            other => panic!("unexpected factor {other:?}"),
        }
        let v = fa.evaluate(&Real::from_i64(2, p60())).unwrap();
        assert_close(&v, 9.0, -48);
    }

    #[test]
    fn truncated_exponential_degenerates() {
        // [1, 1, 1/2] -> e^x
        let p = p60();
        let f = PowerSeries::new(
            vec![Real::one(p), Real::one(p), Real::ratio(1, 2, p)],
            p,
        )
        .unwrap();
        let fa = build(&f, 2).unwrap();
        assert_eq!(fa.factors().len(), 1);
        match &fa.factors()[0] {
            Factor::Exponential { rate } => assert_close(rate, 1.0, -50),
            other => panic!("expected exponential factor, got {other:?}"),
        }
        let v = fa.evaluate(&Real::from_i64(10, p)).unwrap();
        let expect = Real::from_i64(10, p).exp();
        let rel = (&(&v - &expect) / &expect).abs();
        assert!(rel < Real::pow10(-50, p));
    }

    #[test]
    fn truncated_exponential_all_orders() {
        // e^x truncations at k = 2..6 all collapse to the exponential factor
        let p = p60();
        for k in 2..=6usize {
            let mut c = vec![Real::one(p)];
            let mut fact = Real::one(p);
            for n in 1..=k {
                fact = &fact * &Real::from_u64(n as u64, p);
                c.push(fact.recip());
            }
            let f = PowerSeries::new(c, p).unwrap();
            let fa = build(&f, k).unwrap_or_else(|e| panic!("k={k}: {e}"));
            assert!(
                matches!(fa.factors(), [Factor::Exponential { .. }]),
                "k = {k}: factors {:?}",
                fa.factors()
            );
        }
    }

    #[test]
    fn conjugate_pair_input() {
        // (1 + x^2)^(-1) expanded: 1 - x^2 + x^4 (gap 2 triggers reduction
        // to y = x^2 with a single real factor)
        let fa = build(&series(&[1.0, 0.0, -1.0, 0.0, 1.0]), 4).unwrap();
        assert_eq!(fa.gap(), 2);
        let p = p60();
        let v = fa.evaluate(&Real::from_f64(3.0, p)).unwrap();
        let expect = Real::ratio(1, 10, p);
        assert!((&v - &expect).abs() < Real::pow10(-40, p), "{v}");
    }

    #[test]
    fn complex_pair_without_gap() {
        // f = (1 - x + x^2)... pick series of (1 + x + x^2)^1 = exp path?
        // use [1, 1, 1, 1, 1] order 4: (1-x)^(-1) via rank reduction
        let fa = build(&series(&[1.0, 1.0, 1.0, 1.0, 1.0]), 4).unwrap();
        assert_eq!(fa.reduced_from(), Some(4));
        let p = p60();
        let v = fa.evaluate(&Real::ratio(9, 10, p)).unwrap();
        let expect = Real::from_i64(10, p);
        assert!((&v - &expect).abs() < Real::pow10(-40, p), "{v}");
    }

    #[test]
    fn leading_power_factored() {
        // 2x/(1+x): [0, 2, -2, 2]
        let fa = build(&series(&[0.0, 2.0, -2.0, 2.0]), 3).unwrap();
        assert_eq!(fa.leading_power(), 1);
        let asy = fa.asymptotics();
        assert_eq!(asy.validity, Validity::Clean);
        assert_close(&asy.exponent, 0.0, -45);
        assert_close(&asy.amplitude, 2.0, -45);
    }

    #[test]
    fn asymptotics_flags_negative_amplitude() {
        let fa = build(&series(&[1.0, 1.0, 1.0]), 2).unwrap();
        let asy = fa.asymptotics();
        assert_eq!(asy.validity, Validity::Flagged);
        assert!(asy.reason.unwrap().contains("< 0"));
        // exponent still reported: nu = -1
        assert_close(&asy.exponent, -1.0, -45);
    }

    #[test]
    fn asymptotics_binomial() {
        let fa = build(&series(&[1.0, 2.0, 1.0]), 2).unwrap();
        let asy = fa.asymptotics();
        assert_eq!(asy.validity, Validity::Clean);
        assert_close(&asy.amplitude, 1.0, -45);
        assert_close(&asy.exponent, 2.0, -45);
    }

    #[test]
    fn evaluate_domain_error() {
        let fa = build(&series(&[1.0, 1.0, 1.0]), 2).unwrap();
        // (1-x)^(-1) has its boundary at x = 1
        match fa.evaluate(&Real::from_i64(2, p60())) {
            Err(EvalError::Domain { boundary, .. }) => {
                assert!(boundary.starts_with('1'), "boundary {boundary}");
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_values() {
        let p = p60();
        let fa = build(&series(&[1.0, 1.0, 1.0]), 2).unwrap();
        let report = fa.diagnostics(&[Real::from_f64(0.5, p)]);
        // S = -ln(1 - 0.5) = ln 2
        let ln2 = Real::from_i64(2, p).ln();
        let s = report.s_values[0].1.clone().unwrap();
        assert!((&s - &ln2).abs() < p.tol(2));
        assert_close(&report.s_k, 1.0, -45);
        assert_close(&report.max_pair_product, 1.0, -45);
        assert_eq!(report.effective_rank, 1);
    }

    #[test]
    fn diagnostics_binomial_products() {
        let fa = build(&series(&[1.0, 2.0, 1.0]), 2).unwrap();
        let report = fa.diagnostics(&[]);
        assert_close(&report.s_k, 2.0, -45);
        assert_close(&report.max_pair_product, 2.0, -45);
    }

    #[test]
    fn diagnostics_exponential_rate_contribution() {
        let p = p60();
        let f = PowerSeries::new(
            vec![Real::one(p), Real::one(p), Real::ratio(1, 2, p)],
            p,
        )
        .unwrap();
        let fa = build(&f, 2).unwrap();
        let report = fa.diagnostics(&[]);
        assert_close(&report.s_k, 1.0, -45);
    }

    #[test]
    fn odd_order_pins_amplitude() {
        // order 3 geometric: still exactly (1-x)^(-1), pinned factor dropped
        let fa = build(&series(&[1.0, 1.0, 1.0, 1.0]), 3).unwrap();
        let v = fa.evaluate(&Real::from_f64(0.5, p60())).unwrap();
        assert_close(&v, 2.0, -45);
        assert!(fa.odd_fix().is_some());
    }

    #[test]
    fn polynomial_product_reproduced() {
        // (1+2x)^(3/2) (1+x)^(-1): expand to order 6 and rebuild
        let p = p60();
        let k = 6;
        let a1 = Complex::from_real(Real::from_i64(2, p));
        let n1 = Complex::from_real(Real::ratio(3, 2, p));
        let a2 = Complex::from_real(Real::one(p));
        let n2 = Complex::from_real(Real::from_i64(-1, p));
        let expansion = expand_pairs(&[(a1, n1), (a2, n2)], k, p);
        let fa = build(&expansion, k).unwrap();
        // values must match the closed form on [0, 2]
        for xi in [0.0, 0.3, 0.9, 1.7, 2.0] {
            let x = Real::from_f64(xi, p);
            let got = fa.evaluate(&x).unwrap();
            let expect = {
                let b1 = (&Real::one(p) + &(&Real::from_i64(2, p) * &x)).pow(&Real::ratio(3, 2, p));
                let b2 = (&Real::one(p) + &x).powi(-1);
                &b1 * &b2
            };
            let rel = (&(&got - &expect) / &expect).abs();
            assert!(rel < Real::pow10(-40, p), "x = {xi}: rel {rel}");
        }
    }

    #[test]
    fn accuracy_through_order_random() {
        // deterministic pseudo-random coefficient vectors; every successful
        // build re-expands to the input within tol(3)
        let p = p60();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        let mut built = 0;
        for k in 2..=8usize {
            for _ in 0..6 {
                let mut c = vec![1.0f64];
                for _ in 0..k {
                    c.push(rnd());
                }
                if let Ok(fa) = build(&series(&c), k) {
                    built += 1;
                    assert!(
                        fa.residual() < &p.tol(3),
                        "k = {k}: residual {}",
                        fa.residual()
                    );
                }
            }
        }
        assert!(built > 20, "only {built} random builds succeeded");
    }

    #[test]
    fn s_sum_scaling_invariance() {
        let p = p60();
        let pairs = vec![
            (
                Complex::from_real(Real::from_f64(0.7, p)),
                Complex::from_real(Real::from_f64(-2.3, p)),
            ),
            (
                Complex::new(Real::from_f64(0.2, p), Real::from_f64(1.1, p)),
                Complex::new(Real::from_f64(0.4, p), Real::from_f64(-0.9, p)),
            ),
        ];
        let s0 = s_sum_from_pairs(&pairs, p);
        // powers of two scale exactly in binary floats
        let lambdas = [4.0f64, 0.03125];
        let scaled: Vec<(Complex, Complex)> = pairs
            .iter()
            .zip(lambdas)
            .map(|((a, n), l)| {
                let lam = Real::from_f64(l, p);
                (a.scale(&lam), n.scale(&lam.recip()))
            })
            .collect();
        let s1 = s_sum_from_pairs(&scaled, p);
        assert_eq!(s0, s1);
    }

    /// Expand prod (1 + A_j x)^(n_j) to the requested order (test oracle).
    pub(crate) fn expand_pairs(
        pairs: &[(Complex, Complex)],
        k: usize,
        p: Prec,
    ) -> PowerSeries {
        let mut log_coeffs = vec![Real::zero(p); k + 1];
        for (a, n) in pairs {
            let mut pw = Complex::from_real(Real::one(p));
            for (m, lc) in log_coeffs.iter_mut().enumerate().skip(1) {
                pw = &pw * a;
                let term = (n * &pw).re;
                let term = &term / &Real::from_u64(m as u64, p);
                *lc = if m % 2 == 1 { &*lc + &term } else { &*lc - &term };
            }
        }
        PowerSeries::new(log_coeffs, p)
            .unwrap()
            .exp_series()
    }
}
