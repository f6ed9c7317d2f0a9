//! Parameter tuples `(k, q, r, n)`, the arithmetic facts every other module
//! leans on, and the precision policy threaded through numeric code.

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which divisibility condition on `n` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NMode {
    /// `q!` divides `n`.
    #[default]
    Strict,
    /// `n` even and `(p − 1) | n` for every prime `p | q`.
    Relaxed,
}

/// A validated tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    k: u32,
    q: u32,
    r: u32,
    n: u32,
    mode: NMode,
}

impl Params {
    /// Checks every predicate and reports the first one violated.
    pub fn validate(k: u32, q: u32, r: u32, n: u32, mode: NMode) -> Result<Params> {
        validate_kqr(k, q, r)?;
        if n == 0 {
            return Err(Error::params("n >= 1"));
        }
        match mode {
            NMode::Strict => {
                let qf = crate::num::factorial(q);
                if !Integer::from(n).is_divisible(&qf) {
                    return Err(Error::params(format!("q! = {qf} divides n = {n}")));
                }
            }
            NMode::Relaxed => {
                if n % 2 != 0 {
                    return Err(Error::params(format!("n = {n} is even")));
                }
                for p in prime_divisors(q as u64) {
                    if n as u64 % (p - 1) != 0 {
                        return Err(Error::params(format!("(p-1) = {} divides n = {n} for p = {p}", p - 1)));
                    }
                }
            }
        }
        Ok(Params { k, q, r, n, mode })
    }

    pub fn strict(k: u32, q: u32, r: u32, n: u32) -> Result<Params> {
        Params::validate(k, q, r, n, NMode::Strict)
    }

    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn mode(&self) -> NMode {
        self.mode
    }
    pub fn strict_n(&self) -> bool {
        self.mode == NMode::Strict
    }
    /// 1 iff k is odd.
    pub fn delta_k(&self) -> u32 {
        self.k % 2
    }
    /// 1 iff q is odd.
    pub fn delta_q(&self) -> u32 {
        self.q % 2
    }
    pub fn qn(&self) -> u64 {
        self.q as u64 * self.n as u64
    }
    pub fn rn(&self) -> u64 {
        self.r as u64 * self.n as u64
    }
    pub fn rqn(&self) -> u64 {
        self.r as u64 * self.qn()
    }
    pub fn prime_divisors(&self) -> Vec<u64> {
        prime_divisors(self.q as u64)
    }

    /// Same `(k, q, r)` with a different `n`, revalidated.
    pub fn with_n(&self, n: u32) -> Result<Params> {
        Params::validate(self.k, self.q, self.r, n, self.mode)
    }

    /// `deg R_n = −δ_k − (r − 2k)qn`.
    pub fn degree_r(&self) -> i64 {
        -(self.delta_k() as i64) - (self.r as i64 - 2 * self.k as i64) * self.qn() as i64
    }
}

/// The `(k, q, r)` predicates alone; used by modules that never see `n`.
pub fn validate_kqr(k: u32, q: u32, r: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::params(format!("k = {k} >= 2")));
    }
    if q < 3 {
        return Err(Error::params(format!("q = {q} >= 3")));
    }
    if r <= 2 * k {
        return Err(Error::params(format!("r = {r} > 2k = {}", 2 * k)));
    }
    Ok(())
}

/// `d_m = lcm(1, …, m)`, built from prime powers.
pub fn lcm_upto(m: u64) -> Integer {
    let mut acc = Integer::from(1);
    for p in primes_upto(m) {
        let mut pk = p;
        while pk <= m / p {
            pk *= p;
        }
        acc *= pk;
    }
    acc
}

pub fn primes_upto(m: u64) -> Vec<u64> {
    if m < 2 {
        return Vec::new();
    }
    let m = m as usize;
    let mut sieve = vec![true; m + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= m {
        if sieve[i] {
            let mut j = i * i;
            while j <= m {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i as u64))
        .collect()
}

/// Distinct primes dividing `q`, ascending.
pub fn prime_divisors(q: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut rest = q;
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            out.push(p);
            while rest % p == 0 {
                rest /= p;
            }
        }
        p += 1;
    }
    if rest > 1 {
        out.push(rest);
    }
    out
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && prime_divisors(p) == [p]
}

/// Working precision for a numeric call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    /// Bits the caller wants certified.
    pub bits: u32,
    /// Extra bits carried internally.
    pub guard: u32,
}

impl PrecisionPolicy {
    pub const MIN_BITS: u32 = 64;
    pub const DEFAULT_GUARD: u32 = 64;

    pub fn new(bits: u32) -> Self {
        PrecisionPolicy { bits: bits.max(Self::MIN_BITS), guard: Self::DEFAULT_GUARD }
    }

    pub fn with_guard(bits: u32, guard: u32) -> Self {
        PrecisionPolicy { bits: bits.max(Self::MIN_BITS), guard }
    }

    /// MPFR precision used for intermediate values.
    pub fn working(&self) -> u32 {
        self.bits + self.guard
    }
}

/// Bits needed for `S_n ≈ e^{−αn}` to survive cancellation among
/// coefficients of size `e^{βn}`. Negative hints (forms that grow rather
/// than decay) are clamped to zero.
pub fn required_precision(params: &Params, alpha_hint: f64, beta_hint: f64) -> PrecisionPolicy {
    let a = alpha_hint.max(0.0);
    let b = beta_hint.max(0.0);
    let cancel = ((a + b) * params.n() as f64 / std::f64::consts::LN_2).ceil() as u32;
    PrecisionPolicy::new(PrecisionPolicy::MIN_BITS + cancel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_examples() {
        assert!(Params::strict(2, 3, 5, 6).is_ok());
        let e = Params::strict(2, 3, 4, 6).unwrap_err();
        assert!(matches!(e, Error::InvalidParams { ref predicate } if predicate.contains("r = 4")));
        // relaxed: p ∈ {2, 3}, (p-1) ∈ {1, 2} both divide 4, 4 even.
        assert!(Params::validate(2, 6, 5, 4, NMode::Relaxed).is_ok());
        // 6! = 720 does not divide 4.
        assert!(Params::validate(2, 6, 5, 4, NMode::Strict).is_err());
        // relaxed needs n even.
        assert!(Params::validate(2, 3, 5, 3, NMode::Relaxed).is_err());
        // q = 7: (7-1) = 6 must divide n.
        assert!(Params::validate(2, 7, 5, 4, NMode::Relaxed).is_err());
        assert!(Params::validate(2, 7, 5, 6, NMode::Relaxed).is_ok());
    }

    #[test]
    fn validate_rejects_small_k_q_n() {
        assert!(Params::strict(1, 3, 5, 6).is_err());
        assert!(Params::strict(2, 2, 5, 2).is_err());
        assert!(Params::strict(2, 3, 5, 0).is_err());
    }

    #[test]
    fn parity_flags() {
        let p = Params::strict(3, 4, 7, 24).unwrap();
        assert_eq!(p.delta_k(), 1);
        assert_eq!(p.delta_q(), 0);
        assert_eq!(p.degree_r(), -1 - (7 - 6) * 96);
    }

    #[test]
    fn lcm_small_values() {
        assert_eq!(lcm_upto(1), 1);
        assert_eq!(lcm_upto(6), 60);
        let folded = (1..=20u64).fold(Integer::from(1), |acc, m| acc.lcm(&Integer::from(m)));
        assert_eq!(lcm_upto(20), folded);
        assert_eq!(lcm_upto(20), 232_792_560u64);
    }

    #[test]
    fn lcm_jumps_are_one_or_prime() {
        let mut prev = Integer::from(1);
        for m in 1..=10_000u64 {
            let cur = lcm_upto(m + 1);
            let ratio = Integer::from(&cur / &prev);
            let _ = m;
            assert!(ratio == 1 || (ratio.to_u64().map(is_prime).unwrap_or(false)));
            prev = cur;
        }
    }

    #[test]
    fn log_lcm_over_m_near_one() {
        let d = lcm_upto(10_000);
        let ln = d.significant_bits() as f64 * std::f64::consts::LN_2;
        assert!((ln / 10_000.0 - 1.0).abs() < 0.15);
    }

    #[test]
    fn prime_divisor_examples() {
        assert_eq!(prime_divisors(3), vec![3]);
        assert_eq!(prime_divisors(12), vec![2, 3]);
        assert_eq!(prime_divisors(30), vec![2, 3, 5]);
        assert_eq!(prime_divisors(1_000_000), vec![2, 5]);
    }

    #[test]
    fn precision_floor_and_linearity() {
        let p = Params::strict(2, 3, 5, 6).unwrap();
        let pol = required_precision(&p, 0.0, 0.0);
        assert_eq!(pol.bits, 64);
        assert_eq!(pol.working(), 64 + PrecisionPolicy::DEFAULT_GUARD);

        let beta = 45.33;
        let one = required_precision(&p, 0.0, beta).bits - 64;
        let two = required_precision(&p.with_n(12).unwrap(), 0.0, beta).bits - 64;
        assert!((two as i64 - 2 * one as i64).abs() <= 1);
        assert!(one >= (beta * 6.0 / std::f64::consts::LN_2) as u32);
    }

    #[test]
    fn validate_is_pure() {
        for _ in 0..3 {
            assert_eq!(Params::strict(2, 3, 5, 6), Params::strict(2, 3, 5, 6));
            assert_eq!(Params::strict(2, 3, 4, 6), Params::strict(2, 3, 4, 6));
        }
    }
}
