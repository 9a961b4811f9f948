//! Extended-precision real and complex scalars.
//!
//! Every value carries its own mantissa width, fixed at construction from a
//! [`Prec`]. Arithmetic takes the wider of the two operand precisions, so a
//! computation seeded entirely from one `Prec` stays at that precision and is
//! deterministic for it.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Working precision in decimal digits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Prec {
    digits: u32,
}

/// Default working precision: moment systems built from high-order expansions
/// are too ill-conditioned for double precision beyond order ~8.
pub const DEFAULT_DIGITS: u32 = 60;

impl Prec {
    pub fn new(digits: u32) -> Self {
        Self {
            digits: digits.clamp(15, 100_000),
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa width in bits: the requested digits plus guard bits, rounded
    /// up to a whole word.
    pub fn bits(&self) -> usize {
        let raw = (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as usize;
        (raw + 32).div_ceil(64) * 64
    }

    /// 10^(-digits/divisor), the standard tolerance ladder used throughout.
    pub fn tol(&self, divisor: u32) -> Real {
        Real::pow10(-((self.digits / divisor) as i64), *self)
    }
}

impl Default for Prec {
    fn default() -> Self {
        Prec::new(DEFAULT_DIGITS)
    }
}

/// Extended-precision real scalar.
#[derive(Clone)]
pub struct Real(BigFloat);

impl Real {
    fn bits(&self) -> usize {
        // zero values made by astro-float carry precision 0; never let that
        // propagate into an operation precision
        self.0.mantissa_max_bit_len().unwrap_or(128).max(64)
    }

    fn op_bits(&self, other: &Real) -> usize {
        self.bits().max(other.bits())
    }

    pub fn zero(p: Prec) -> Self {
        Real(BigFloat::from_i8(0, p.bits()))
    }

    pub fn one(p: Prec) -> Self {
        Real(BigFloat::from_i8(1, p.bits()))
    }

    pub fn from_i64(v: i64, p: Prec) -> Self {
        Real(BigFloat::from_i64(v, p.bits()))
    }

    pub fn from_u64(v: u64, p: Prec) -> Self {
        Real(BigFloat::from_u64(v, p.bits()))
    }

    pub fn from_f64(v: f64, p: Prec) -> Self {
        if v == 0.0 {
            return Real::zero(p);
        }
        Real(BigFloat::from_f64(v, p.bits()))
    }

    /// Ratio of two machine integers, exact until the final division.
    pub fn ratio(num: i64, den: i64, p: Prec) -> Self {
        &Real::from_i64(num, p) / &Real::from_i64(den, p)
    }

    /// Parse a decimal string ("-1.25", "3e-4", "0.75000000000000000001").
    pub fn parse(s: &str, p: Prec) -> Option<Self> {
        let t = s.trim();
        if t.is_empty()
            || !t
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | '+' | '-' | 'e' | 'E' | '_'))
        {
            return None;
        }
        let v = with_consts(|cc| BigFloat::parse(t, Radix::Dec, p.bits(), RM, cc));
        if v.is_nan() {
            None
        } else {
            Some(Real(v))
        }
    }

    pub fn pi(p: Prec) -> Self {
        Real(with_consts(|cc| cc.pi(p.bits(), RM)))
    }

    /// 10^e at precision `p`.
    pub fn pow10(e: i64, p: Prec) -> Self {
        let ten = Real::from_i64(10, p);
        ten.powi(e)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_nan(&self) -> bool {
        self.0.is_nan()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive() && !self.0.is_zero()
    }

    /// True when the value is an integer (exactly representable).
    pub fn is_integer(&self) -> bool {
        self.0.is_int()
    }

    pub fn abs(&self) -> Self {
        Real(self.0.abs())
    }

    pub fn neg(&self) -> Self {
        let mut v = self.0.clone();
        v.inv_sign();
        Real(v)
    }

    pub fn recip(&self) -> Self {
        Real(self.0.reciprocal(self.bits(), RM))
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.sqrt(self.bits(), RM))
    }

    pub fn exp(&self) -> Self {
        Real(with_consts(|cc| self.0.exp(self.bits(), RM, cc)))
    }

    pub fn ln(&self) -> Self {
        Real(with_consts(|cc| self.0.ln(self.bits(), RM, cc)))
    }

    pub fn sin(&self) -> Self {
        Real(with_consts(|cc| self.0.sin(self.bits(), RM, cc)))
    }

    pub fn cos(&self) -> Self {
        Real(with_consts(|cc| self.0.cos(self.bits(), RM, cc)))
    }

    pub fn sinh(&self) -> Self {
        Real(with_consts(|cc| self.0.sinh(self.bits(), RM, cc)))
    }

    pub fn cosh(&self) -> Self {
        Real(with_consts(|cc| self.0.cosh(self.bits(), RM, cc)))
    }

    pub fn tanh(&self) -> Self {
        Real(with_consts(|cc| self.0.tanh(self.bits(), RM, cc)))
    }

    pub fn atan(&self) -> Self {
        Real(with_consts(|cc| self.0.atan(self.bits(), RM, cc)))
    }

    /// Four-quadrant arctangent of `self / x`.
    pub fn atan2(&self, x: &Real) -> Self {
        let p = Prec::from_bits(self.op_bits(x));
        let pi = Real::pi(p);
        if x.is_positive() {
            (self / x).atan()
        } else if x.is_negative() {
            let base = (self / x).atan();
            if self.is_negative() {
                &base - &pi
            } else {
                &base + &pi
            }
        } else {
            // x == 0
            if self.is_positive() {
                &pi / &Real::from_i64(2, p)
            } else if self.is_negative() {
                &(&pi / &Real::from_i64(2, p)).neg() + &Real::zero(p)
            } else {
                Real::zero(p)
            }
        }
    }

    /// Integer power by binary exponentiation (negative exponents allowed).
    ///
    /// astro-float's own pow/powi re-round in a loop that does not terminate
    /// when the true result is exactly representable, so powers are composed
    /// here from plain multiplications.
    pub fn powi(&self, e: i64) -> Self {
        let p = Prec::from_bits(self.bits());
        if e == 0 {
            return Real::one(p);
        }
        let mut base = self.clone();
        let mut n = e.unsigned_abs();
        let mut acc = Real::one(p);
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        if e < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    /// Real power `self^n`: integer exponents multiply out, the rest goes
    /// through exp(n ln self) and needs a positive base.
    pub fn pow(&self, n: &Real) -> Self {
        if n.is_integer() {
            let e = n.round_i64();
            if Real::from_i64(e, Prec::from_bits(n.bits())) == *n {
                return self.powi(e);
            }
        }
        (n * &self.ln()).exp()
    }

    pub fn floor(&self) -> Self {
        Real(self.0.floor())
    }

    /// Nearest integer as i64 (saturating through f64 for huge values).
    pub fn round_i64(&self) -> i64 {
        let half = Real::from_f64(0.5, Prec::from_bits(self.bits()));
        let shifted = if self.is_negative() {
            self - &half
        } else {
            self + &half
        };
        shifted.floor().to_f64() as i64
    }

    pub fn max(&self, other: &Real) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn min(&self, other: &Real) -> Self {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Lossy conversion for reporting, plotting and coarse logic.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        self.to_decimal_string(19).parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Decimal string with the requested number of significant digits.
    pub fn to_decimal_string(&self, sig_digits: u32) -> String {
        if self.0.is_nan() {
            return "nan".to_string();
        }
        if self.0.is_inf_pos() {
            return "inf".to_string();
        }
        if self.0.is_inf_neg() {
            return "-inf".to_string();
        }
        if self.0.is_zero() {
            return "0".to_string();
        }
        let p = Prec::new(sig_digits.max(15));
        let mut v = self.0.clone();
        // round to the target before formatting so digits beyond sig are not shown
        if v.mantissa_max_bit_len().unwrap_or(0) > p.bits() {
            let _ = v.set_precision(p.bits(), RM);
        }
        let s = with_consts(|cc| v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "nan".into());
        trim_decimal(&s, sig_digits)
    }

    /// Decimal string at full working precision.
    pub fn to_full_string(&self) -> String {
        let d = (self.bits() as f64 / std::f64::consts::LOG2_10) as u32;
        self.to_decimal_string(d)
    }

    fn from_bigfloat(v: BigFloat) -> Self {
        Real(v)
    }
}

impl Prec {
    /// Recover a `Prec` whose `bits()` is at least `bits` (used when the
    /// precision must be inferred from an existing value).
    pub fn from_bits(bits: usize) -> Prec {
        let digits = ((bits.saturating_sub(32)) as f64 / std::f64::consts::LOG2_10) as u32;
        Prec {
            digits: digits.max(15),
        }
    }
}

/// Trim astro-float's verbose scientific output ("1.2340000...e+5") down to
/// `sig` significant digits with trailing zeros removed.
fn trim_decimal(s: &str, sig: u32) -> String {
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, Some(e)),
        None => (s, None),
    };
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let dot = mant.find('.').map(|i| if neg { i - 1 } else { i }).unwrap_or(digits.len());
    let kept: String = digits.chars().take(sig as usize).collect();
    let kept = kept.trim_end_matches('0');
    let kept = if kept.is_empty() { "0" } else { kept };
    // decimal exponent of the leading digit
    let e10: i64 = exp.and_then(|e| e.parse::<i64>().ok()).unwrap_or(0) + dot as i64 - 1;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-4..=(sig as i64).min(17)).contains(&e10) {
        // plain notation
        if e10 >= 0 {
            let e = e10 as usize;
            if kept.len() > e + 1 {
                out.push_str(&kept[..=e]);
                out.push('.');
                out.push_str(&kept[e + 1..]);
            } else {
                out.push_str(kept);
                out.push_str(&"0".repeat(e + 1 - kept.len()));
            }
        } else {
            out.push_str("0.");
            out.push_str(&"0".repeat((-e10 - 1) as usize));
            out.push_str(kept);
        }
    } else {
        out.push_str(&kept[..1]);
        if kept.len() > 1 {
            out.push('.');
            out.push_str(&kept[1..]);
        }
        out.push('e');
        out.push_str(&e10.to_string());
    }
    out
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string(25))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string(25))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|s| s.cmp(&0))
    }
}

macro_rules! real_binop {
    ($trait:ident, $fn:ident, $method:ident) => {
        impl std::ops::$trait for &Real {
            type Output = Real;
            fn $fn(self, rhs: &Real) -> Real {
                let b = self.op_bits(rhs);
                Real::from_bigfloat(self.0.$method(&rhs.0, b, RM))
            }
        }
        impl std::ops::$trait for Real {
            type Output = Real;
            fn $fn(self, rhs: Real) -> Real {
                (&self).$fn(&rhs)
            }
        }
        impl std::ops::$trait<&Real> for Real {
            type Output = Real;
            fn $fn(self, rhs: &Real) -> Real {
                (&self).$fn(rhs)
            }
        }
    };
}

real_binop!(Add, add, add);
real_binop!(Sub, sub, sub);
real_binop!(Mul, mul, mul);
real_binop!(Div, div, div);

impl std::ops::Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::neg(self)
    }
}

impl std::ops::Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::neg(&self)
    }
}

/// Extended-precision complex scalar built from two [`Real`] parts.
#[derive(Clone, PartialEq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }

    pub fn from_real(re: Real) -> Self {
        let p = Prec::from_bits(re.bits());
        let im = Real::zero(p);
        Complex { re, im }
    }

    pub fn zero(p: Prec) -> Self {
        Complex::new(Real::zero(p), Real::zero(p))
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Complex::new(self.re.clone(), Real::neg(&self.im))
    }

    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn arg(&self) -> Real {
        self.im.atan2(&self.re)
    }

    pub fn scale(&self, s: &Real) -> Self {
        Complex::new(&self.re * s, &self.im * s)
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        Complex::new(&self.re / &n, &Real::neg(&self.im) / &n)
    }

    /// Principal natural logarithm.
    pub fn ln(&self) -> Self {
        // ln|z| via 0.5*ln(norm_sqr) avoids a sqrt
        let half = Real::from_f64(0.5, Prec::from_bits(self.re.bits().max(self.im.bits())));
        Complex::new(&self.norm_sqr().ln() * &half, self.arg())
    }

    pub fn exp(&self) -> Self {
        let r = self.re.exp();
        Complex::new(&r * &self.im.cos(), &r * &self.im.sin())
    }

    /// Principal power z^w = exp(w ln z).
    pub fn powc(&self, w: &Complex) -> Self {
        (&self.ln() * w).exp()
    }

    pub fn powi(&self, e: i64) -> Self {
        let p = Prec::from_bits(self.re.bits().max(self.im.bits()));
        if e == 0 {
            return Complex::new(Real::one(p), Real::zero(p));
        }
        let mut base = if e < 0 { self.recip() } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = Complex::new(Real::one(p), Real::zero(p));
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} {:+?}i)", self.re, self.im)
    }
}

impl std::ops::Add for &Complex {
    type Output = Complex;
    fn add(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl std::ops::Sub for &Complex {
    type Output = Complex;
    fn sub(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl std::ops::Mul for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        Complex::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl std::ops::Div for &Complex {
    type Output = Complex;
    fn div(self, rhs: &Complex) -> Complex {
        let n = rhs.norm_sqr();
        let num = self * &rhs.conj();
        Complex::new(&num.re / &n, &num.im / &n)
    }
}

impl std::ops::Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(Real::neg(&self.re), Real::neg(&self.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p60() -> Prec {
        Prec::new(60)
    }

    #[test]
    fn values_are_send_and_sync() {
        // callers may evaluate independent jobs in parallel; the constants
        // cache is thread-local, values themselves move freely
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Real>();
        assert_send_sync::<Complex>();
        assert_send_sync::<crate::series::PowerSeries>();
        assert_send_sync::<crate::factor::FactorApproximant>();
    }

    #[test]
    fn arithmetic_round_trip() {
        let p = p60();
        let a = Real::parse("1.5", p).unwrap();
        let b = Real::parse("-0.25", p).unwrap();
        let c = &a + &b;
        assert_eq!(c, Real::parse("1.25", p).unwrap());
        assert_eq!(&a * &b, Real::parse("-0.375", p).unwrap());
        assert_eq!((&a / &b).to_f64(), -6.0);
    }

    #[test]
    fn parse_preserves_long_decimals() {
        let p = p60();
        let v = Real::parse("0.7500000000000000000001", p).unwrap();
        let w = Real::parse("0.75", p).unwrap();
        assert!(v > w);
        let d = &v - &w;
        let expect = Real::pow10(-22, p);
        assert!((&d - &expect).abs() < Real::pow10(-70, p));
    }

    #[test]
    fn tolerances() {
        let p = p60();
        let t = p.tol(2);
        assert!((t.to_f64().log10() + 30.0).abs() < 1e-9);
    }

    #[test]
    fn string_round_trip() {
        let p = p60();
        for s in ["1", "-2.5", "0.1", "12345.6789", "1e-30", "7.25e12"] {
            let v = Real::parse(s, p).unwrap();
            let t = v.to_decimal_string(40);
            let w = Real::parse(&t, p).unwrap();
            assert_eq!(v, w, "{s} -> {t}");
        }
    }

    #[test]
    fn to_f64_small_and_large() {
        let p = p60();
        assert_eq!(Real::from_f64(0.5, p).to_f64(), 0.5);
        assert_eq!(Real::from_i64(-3, p).to_f64(), -3.0);
        let big = Real::pow10(100, p);
        assert!((big.to_f64().log10() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn complex_ops() {
        let p = p60();
        let i = Complex::new(Real::zero(p), Real::one(p));
        let sq = &i * &i;
        assert_eq!(sq.re, Real::from_i64(-1, p));
        assert!(sq.im.is_zero());
        // ln(i) = i pi/2
        let l = i.ln();
        assert!(l.re.abs() < p.tol(2));
        let half_pi = &Real::pi(p) / &Real::from_i64(2, p);
        assert!((&l.im - &half_pi).abs() < p.tol(2));
    }

    #[test]
    fn atan2_quadrants() {
        let p = p60();
        let one = Real::one(p);
        let m1 = one.neg();
        let pi = Real::pi(p);
        let q2 = m1.atan2(&m1); // (-1,-1) -> -3pi/4
        let expect = &(&pi * &Real::from_f64(-3.0, p)) / &Real::from_i64(4, p);
        assert!((&q2 - &expect).abs() < p.tol(2));
    }

    #[test]
    fn powi_negative() {
        let p = p60();
        let two = Real::from_i64(2, p);
        assert_eq!(two.powi(-3).to_f64(), 0.125);
    }
}
