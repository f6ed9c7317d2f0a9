//! Multi-precision helpers shared by the numeric modules: a complex type
//! built on MPFR floats, decimal/exponent formatting, and exact rational
//! summation by binary splitting.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn ln2(prec: u32) -> Float {
    Float::with_val(prec, Constant::Log2)
}

/// `2^e` at the given precision.
pub fn pow2(prec: u32, e: i64) -> Float {
    let mut x = Float::with_val(prec, 1);
    x <<= e as i32;
    x
}

/// Base-2 exponent `e` with `|x| < 2^e`; `None` for zero.
pub fn exp2_bound(x: &Float) -> Option<i64> {
    x.get_exp().map(i64::from)
}

/// Natural log of |x| as f64, finite for any nonzero MPFR value
/// (MPFR exponents overflow f64 long before they overflow MPFR).
pub fn ln_abs_f64(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let e = x.get_exp().unwrap();
    let mut m = x.clone().abs();
    m >>= e;
    m.to_f64().ln() + f64::from(e) * std::f64::consts::LN_2
}

/// Scientific-notation decimal with enough digits to represent `x`'s
/// precision.
pub fn to_decimal(x: &Float) -> String {
    let digits = ((f64::from(x.prec()) * std::f64::consts::LOG10_2).ceil() as usize).max(2);
    to_decimal_digits(x, digits)
}

pub fn to_decimal_digits(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let s = x.to_string_radix(10, Some(digits));
    // MPFR writes "1.234e5"; keep that shape, but normalise the exponent
    // marker so output does not depend on the rug version.
    s.replace('@', "e")
}

/// Ceiling of log2 of a nonnegative float, as the exponent reported next to
/// error bounds (`err <= 2^err2exp`).
pub fn err2exp(err: &Float) -> i64 {
    match err.get_exp() {
        Some(e) => i64::from(e),
        None => i64::MIN / 4,
    }
}

/// Σ num_i / den_i computed exactly by binary splitting, then reduced once.
pub fn sum_fractions(terms: &[(Integer, Integer)]) -> Rational {
    fn split(terms: &[(Integer, Integer)]) -> (Integer, Integer) {
        match terms.len() {
            0 => (Integer::new(), Integer::from(1)),
            1 => terms[0].clone(),
            len => {
                let (l, r) = terms.split_at(len / 2);
                let (ln, ld) = split(l);
                let (rn, rd) = split(r);
                (Integer::from(&ln * &rd) + &rn * &ld, ld * rd)
            }
        }
    }
    let (n, d) = split(terms);
    Rational::from((n, d))
}

/// Complex number with MPFR real and imaginary parts at a common precision.
#[derive(Clone, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} {:+}i)",
            to_decimal_digits(&self.re, 20),
            self.im.to_f64()
        )
    }
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex::new(Float::new(prec), Float::new(prec))
    }

    pub fn one(prec: u32) -> Self {
        BigComplex::from_f64(prec, 1.0, 0.0)
    }

    pub fn i(prec: u32) -> Self {
        BigComplex::from_f64(prec, 0.0, 1.0)
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        BigComplex::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn from_real(re: Float) -> Self {
        let prec = re.prec();
        BigComplex::new(re, Float::new(prec))
    }

    pub fn from_int(prec: u32, n: i64) -> Self {
        BigComplex::new(Float::with_val(prec, n), Float::new(prec))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, &self.re), Float::with_val(prec, &self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        BigComplex::new(self.re.clone(), -self.im.clone())
    }

    pub fn neg(&self) -> Self {
        BigComplex::new(-self.re.clone(), -self.im.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        BigComplex::new(
            Float::with_val(self.prec(), &self.re + &o.re),
            Float::with_val(self.prec(), &self.im + &o.im),
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        BigComplex::new(
            Float::with_val(self.prec(), &self.re - &o.re),
            Float::with_val(self.prec(), &self.im - &o.im),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let p = self.prec();
        let ac = Float::with_val(p, &self.re * &o.re);
        let bd = Float::with_val(p, &self.im * &o.im);
        let ad = Float::with_val(p, &self.re * &o.im);
        let bc = Float::with_val(p, &self.im * &o.re);
        BigComplex::new(ac - bd, ad + bc)
    }

    pub fn mul_assign(&mut self, o: &Self) {
        *self = self.mul(o);
    }

    pub fn scale(&self, s: &Float) -> Self {
        BigComplex::new(
            Float::with_val(self.prec(), &self.re * s),
            Float::with_val(self.prec(), &self.im * s),
        )
    }

    pub fn scale_i64(&self, s: i64) -> Self {
        BigComplex::new(
            Float::with_val(self.prec(), &self.re * s),
            Float::with_val(self.prec(), &self.im * s),
        )
    }

    pub fn add_real(&self, s: &Float) -> Self {
        BigComplex::new(Float::with_val(self.prec(), &self.re + s), self.im.clone())
    }

    pub fn add_i64(&self, s: i64) -> Self {
        BigComplex::new(Float::with_val(self.prec(), &self.re + s), self.im.clone())
    }

    /// `i * self`
    pub fn mul_i(&self) -> Self {
        BigComplex::new(-self.im.clone(), self.re.clone())
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        self.re.clone().hypot(&self.im)
    }

    /// Principal argument in (−π, π]; the sign of a zero imaginary part
    /// selects the bank of the negative real axis.
    pub fn arg(&self) -> Float {
        self.im.clone().atan2(&self.re)
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        BigComplex::new(
            Float::with_val(self.prec(), &self.re / &n),
            Float::with_val(self.prec(), -(self.im.clone()) / &n),
        )
    }

    pub fn div(&self, o: &Self) -> Self {
        let p = self.prec();
        let n = o.norm_sqr();
        let re = Float::with_val(p, &self.re * &o.re) + Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.im * &o.re) - Float::with_val(p, &self.re * &o.im);
        BigComplex::new(re / &n, im / &n)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        BigComplex::new(self.abs().ln(), self.arg())
    }

    pub fn exp(&self) -> Self {
        let m = self.re.clone().exp();
        let (s, c) = self.im.clone().sin_cos(Float::new(self.prec()));
        BigComplex::new(Float::with_val(self.prec(), &m * &c), m * s)
    }

    /// Principal square root, `exp(log(z)/2)`.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut l = self.ln();
        l.re /= 2;
        l.im /= 2;
        l.exp()
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.re.clone().sin_cos(Float::new(self.prec()));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(self.prec()));
        BigComplex::new(s * ch, c * sh)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.re.clone().sin_cos(Float::new(self.prec()));
        let (sh, ch) = self.im.clone().sinh_cosh(Float::new(self.prec()));
        BigComplex::new(c * ch, -(s * sh))
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = BigComplex::one(self.prec());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// Exact `n!` as an `Integer`.
pub fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// Exact `base^e`.
pub fn ipow(base: u64, e: u32) -> Integer {
    Integer::from(base).pow(e)
}

/// Compare two floats, treating NaN as an error-free "unordered" result.
pub fn cmp(a: &Float, b: &Float) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}
