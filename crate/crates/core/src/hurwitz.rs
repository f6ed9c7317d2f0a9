//! Hurwitz zeta values ζ(k, a/q) for integer k ≥ 2 by Euler–Maclaurin
//! summation, with a certified absolute error, plus the even/odd parts and
//! the distribution relations between moduli.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num;
use crate::params::is_prime;

/// Past this cutoff we give up rather than silently truncate.
const MAX_CUTOFF: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct ZetaValue {
    pub k: u32,
    pub a: u64,
    pub q: u64,
    pub value: Float,
    /// Absolute error bound, `< 2^{-bits}`.
    pub error_bound: Float,
}

#[derive(Debug, Clone)]
pub struct ZetaPair {
    pub plus: Float,
    pub minus: Float,
    pub error_bound: Float,
}

/// `{"value": "...", "err2exp": e}` with `|error| ≤ 2^e`.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ZetaJson {
    pub k: u32,
    pub a: u64,
    pub q: u64,
    pub value: String,
    pub err2exp: i64,
}

impl ZetaValue {
    pub fn to_json(&self) -> ZetaJson {
        ZetaJson {
            k: self.k,
            a: self.a,
            q: self.q,
            value: num::to_decimal(&self.value),
            err2exp: num::err2exp(&self.error_bound),
        }
    }
}

// ---------------------------------------------------------------------------
// Bernoulli numbers

fn bernoulli_cache() -> &'static RwLock<Vec<Rational>> {
    static CACHE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(Vec::new()))
}

/// `B_2, B_4, …, B_{2m}` from the tangent numbers.
fn bernoulli_even_table(m: usize) -> Vec<Rational> {
    // Tangent numbers T_1..T_m in place (Brent–Harvey).
    let mut t = vec![Integer::new(); m + 1];
    if m >= 1 {
        t[1] = Integer::from(1);
    }
    for k in 2..=m {
        t[k] = Integer::from(&t[k - 1] * (k as u64 - 1));
    }
    for k in 2..=m {
        for j in k..=m {
            let a = Integer::from(&t[j - 1] * (j as u64 - k as u64));
            t[j] *= (j - k + 2) as u64;
            t[j] += a;
        }
    }
    (1..=m)
        .map(|n| {
            let two2n = Integer::from(1) << (2 * n as u32);
            let den = Integer::from(&two2n - 1) * &two2n;
            let mut num = Integer::from(&t[n] * (2 * n as u64));
            if n % 2 == 0 {
                num = -num;
            }
            Rational::from((num, den))
        })
        .collect()
}

/// Exact `B_j` for even `j ≥ 2`.
pub fn bernoulli(j: u32) -> Result<Rational> {
    if j < 2 || j % 2 != 0 {
        return Err(Error::InvalidInput(format!("bernoulli index {j} must be even and >= 2")));
    }
    let idx = (j / 2) as usize;
    ensure_bernoulli(idx);
    Ok(bernoulli_cache().read().unwrap()[idx - 1].clone())
}

fn ensure_bernoulli(m: usize) {
    if bernoulli_cache().read().unwrap().len() >= m {
        return;
    }
    let mut w = bernoulli_cache().write().unwrap();
    if w.len() < m {
        // grow geometrically: the table is rebuilt from scratch each time
        *w = bernoulli_even_table(m.max(2 * w.len()));
    }
}

// ---------------------------------------------------------------------------
// ζ(k, x)

type Key = (u32, u64, u64, u32);

fn zeta_cache() -> &'static RwLock<HashMap<Key, ZetaValue>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, ZetaValue>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// ζ(k, a/q) with absolute error `< 2^{-bits}`.
pub fn hurwitz_zeta(k: u32, a: u64, q: u64, bits: u32) -> Result<ZetaValue> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k = {k} must be >= 2")));
    }
    if q == 0 || a == 0 || a > q {
        return Err(Error::InvalidInput(format!("need 1 <= a <= q, got a = {a}, q = {q}")));
    }
    let g = gcd(a, q);
    let key = (k, a / g, q / g, bits);
    if let Some(v) = zeta_cache().read().unwrap().get(&key) {
        return Ok(ZetaValue { a, q, ..v.clone() });
    }
    let (value, error_bound) = euler_maclaurin(k, key.1, key.2, bits)?;
    let v = ZetaValue { k, a: key.1, q: key.2, value, error_bound };
    zeta_cache().write().unwrap().entry(key).or_insert_with(|| v.clone());
    Ok(ZetaValue { a, q, ..v })
}

fn euler_maclaurin(k: u32, a: u64, q: u64, bits: u32) -> Result<(Float, Float)> {
    // The largest summand is x^{-k} ≤ q^k; carry that many extra bits plus
    // room for the rounding of ~2^20 additions.
    let w = bits + k * (64 - q.leading_zeros()) + 48;
    let x = Float::with_val(w, Rational::from((a, q)));
    let target = num::pow2(w, -(bits as i64) - 2);
    let mut cutoff = (2 * k as u64).max((0.18 * bits as f64).ceil() as u64);

    loop {
        if cutoff > MAX_CUTOFF {
            return Err(Error::PrecisionUnreachable(format!(
                "zeta({k}, {a}/{q}) at {bits} bits needs cutoff > {MAX_CUTOFF}"
            )));
        }
        let nx = Float::with_val(w, &x + cutoff);
        let nx_f = nx.to_f64();
        let y = Float::with_val(w, nx.recip_ref());
        let y2 = Float::with_val(w, y.square_ref());

        // Σ_{j≥1} B_{2j}/(2j)! · (k)_{2j-1} · y^{k+2j-1}
        let mut corr = Float::new(w);
        let mut fac = Float::with_val(w, k) / 2u32;
        let mut pw = Float::with_val(w, y.clone().pow(k + 1));
        let mut omitted = None;
        let mut j: u32 = 1;
        while f64::from(2 * j + k) < nx_f {
            ensure_bernoulli(j as usize);
            let b = bernoulli_cache().read().unwrap()[j as usize - 1].clone();
            let t = Float::with_val(w, &fac * &pw) * &b;
            if t.clone().abs() < target {
                omitted = Some((t.abs(), j));
                break;
            }
            corr += &t;
            let (m1, m2) = (k + 2 * j - 1, k + 2 * j);
            fac *= m1;
            fac *= m2;
            fac /= (2 * j + 1) * (2 * j + 2);
            pw *= &y2;
            j += 1;
        }
        let Some((omit, nterms)) = omitted else {
            cutoff *= 2;
            continue;
        };

        let mut direct = Float::new(w);
        for m in 0..cutoff {
            let base = Float::with_val(w, &x + m);
            direct += base.pow(-(k as i32));
        }
        let tail = Float::with_val(w, nx.clone().pow(1 - k as i32)) / (k - 1)
            + Float::with_val(w, y.clone().pow(k)) / 2u32;
        let value = direct + tail + corr;

        // 2× the first omitted term, plus a generous rounding allowance on
        // a sum whose largest entry is x^{-k}.
        let xk = Float::with_val(w, x.clone().pow(-(k as i32))) + 2u32;
        let rounding = xk * (cutoff + nterms as u64 + 8) * num::pow2(w, -(w as i64) + 1);
        let err = Float::with_val(w, &omit * 2u32) + rounding;
        return Ok((value, err));
    }
}

/// ζ⁺(k, a/q) and ζ⁻(k, a/q).
pub fn zeta_pair(k: u32, a: u64, q: u64, bits: u32) -> Result<ZetaPair> {
    if a == 0 || a >= q {
        return Err(Error::InvalidInput(format!("need 1 <= a < q, got a = {a}, q = {q}")));
    }
    let z = hurwitz_zeta(k, a, q, bits)?;
    let zc = hurwitz_zeta(k, q - a, q, bits)?;
    let w = z.value.prec();
    let (plus, minus) = if k % 2 == 0 {
        (Float::with_val(w, &z.value + &zc.value), Float::with_val(w, &z.value - &zc.value))
    } else {
        (Float::with_val(w, &z.value - &zc.value), Float::with_val(w, &z.value + &zc.value))
    };
    Ok(ZetaPair { plus, minus, error_bound: z.error_bound + zc.error_bound })
}

/// `|p^k ζ(k, a/q′) − Σ_{j<p} ζ(k, (a + jq′)/(pq′))|`.
pub fn verify_distribution(k: u32, qprime: u64, p: u64, a: u64, bits: u32) -> Result<Float> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("p = {p} is not prime")));
    }
    if qprime < 2 || a == 0 || a >= qprime || gcd(a, qprime) != 1 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= a < q' with gcd(a, q') = 1, got a = {a}, q' = {qprime}"
        )));
    }
    // p^k amplifies the left side's error; pay for it up front.
    let inner = bits + k * (64 - p.leading_zeros()) + 8;
    let q = p * qprime;
    let lhs = hurwitz_zeta(k, a, qprime, inner)?;
    let w = lhs.value.prec();
    let mut resid = Float::with_val(w, &lhs.value * num::ipow(p, k));
    for j in 0..p {
        resid -= &hurwitz_zeta(k, a + j * qprime, q, inner)?.value;
    }
    Ok(resid.abs())
}

/// ζ(k) for odd k, reconstructed as `Σ_{a<q} ζ⁻(k, a/q) / (2(q^k − 1))`.
pub fn zeta_via_odd_parts(k: u32, q: u64, bits: u32) -> Result<Float> {
    if k % 2 == 0 {
        return Err(Error::InvalidInput(format!("k = {k} must be odd")));
    }
    if q < 2 {
        return Err(Error::InvalidInput(format!("q = {q} must be >= 2")));
    }
    let inner = bits + 8;
    let mut acc: Option<Float> = None;
    for a in 1..q {
        let m = zeta_pair(k, a, q, inner)?.minus;
        match acc.as_mut() {
            Some(s) => *s += &m,
            None => acc = Some(m),
        }
    }
    let s = acc.unwrap();
    let den = (num::ipow(q, k) - 1u32) * 2u32;
    Ok(s / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Akiyama–Tanigawa: an independent route to B_m (with B_1 = +1/2).
    fn akiyama_tanigawa(m: usize) -> Vec<Rational> {
        let mut out = Vec::with_capacity(m + 1);
        let mut a: Vec<Rational> = Vec::new();
        for i in 0..=m {
            a.push(Rational::from((1, i as u64 + 1)));
            for j in (1..=i).rev() {
                let d = Rational::from(&a[j - 1] - &a[j]) * j as u64;
                a[j - 1] = d;
            }
            out.push(a[0].clone());
        }
        out
    }

    #[test]
    fn small_bernoulli() {
        assert_eq!(bernoulli(2).unwrap(), Rational::from((1, 6)));
        assert_eq!(bernoulli(4).unwrap(), Rational::from((-1, 30)));
        assert_eq!(bernoulli(12).unwrap(), Rational::from((-691, 2730)));
        assert!(bernoulli(3).is_err());
        assert!(bernoulli(0).is_err());
    }

    #[test]
    fn tangent_route_matches_akiyama_tanigawa() {
        let at = akiyama_tanigawa(60);
        for j in (2..=60).step_by(2) {
            assert_eq!(bernoulli(j).unwrap(), at[j as usize], "B_{j}");
        }
    }

    #[test]
    fn bernoulli_defining_identity() {
        // Σ_{i=0}^{m} binom(m+1, i) B_i = 0, with B_1 = −1/2 and odd B_i = 0.
        for m in 1..=40u32 {
            let mut s = Rational::from(1);
            s += Rational::from((-(m as i64 + 1), 2));
            for i in (2..=m).step_by(2) {
                s += bernoulli(i).unwrap() * Integer::from(Integer::binomial_u(m + 1, i));
            }
            assert_eq!(s, 0, "m = {m}");
        }
    }

    fn zeta2(w: u32) -> Float {
        let pi = num::pi(w);
        Float::with_val(w, pi.square_ref()) / 6u32
    }

    #[test]
    fn zeta2_against_closed_form() {
        for bits in [64u32, 256, 1024] {
            let z = hurwitz_zeta(2, 1, 1, bits).unwrap();
            assert!(z.error_bound < num::pow2(bits, -(bits as i64)));
            let d = Float::with_val(z.value.prec(), &z.value - zeta2(z.value.prec() + 20)).abs();
            assert!(d <= z.error_bound, "bits {bits}");
        }
    }

    #[test]
    fn zeta2_bracketed_by_partial_sums() {
        // Σ_{m≤M} m^{-2} + 1/(M+1) < ζ(2) < Σ_{m≤M} m^{-2} + 1/M
        let m = 2000u32;
        let w = 128;
        let mut s = Float::new(w);
        for i in 1..=m {
            s += Float::with_val(w, i).pow(-2i32);
        }
        let lo = Float::with_val(w, &s + Float::with_val(w, m + 1).recip());
        let hi = Float::with_val(w, &s + Float::with_val(w, m).recip());
        let z = hurwitz_zeta(2, 1, 1, 100).unwrap().value;
        assert!(lo < z && z < hi);
    }

    #[test]
    fn half_argument_and_unit_argument() {
        for k in 2..=6u32 {
            let bits = 256;
            let zk = hurwitz_zeta(k, 1, 1, bits).unwrap();
            let half = hurwitz_zeta(k, 1, 2, bits).unwrap();
            let want = Float::with_val(zk.value.prec(), &zk.value * ((1u64 << k) - 1));
            let d = (half.value.clone() - want).abs();
            assert!(d < num::pow2(64, -(bits as i64) + 2 + k as i64), "k = {k}");
            let one = hurwitz_zeta(k, 7, 7, bits).unwrap();
            assert_eq!(one.value, zk.value);
        }
    }

    #[test]
    fn pair_parts() {
        let bits = 200;
        for k in [2u32, 4] {
            let p = zeta_pair(k, 1, 2, bits).unwrap();
            assert!(p.minus.clone().abs() < Float::with_val(64, &p.error_bound * 2u32));
        }
        for k in 2..=5u32 {
            let p = zeta_pair(k, 2, 7, bits).unwrap();
            let m = zeta_pair(k, 5, 7, bits).unwrap();
            let sign = if k % 2 == 1 { 1 } else { -1 };
            let d = Float::with_val(400, &m.minus - Float::with_val(400, &p.minus * sign)).abs();
            assert!(d <= Float::with_val(64, &p.error_bound + &m.error_bound) * 2u32);
            let z = hurwitz_zeta(k, 2, 7, bits).unwrap();
            let two = Float::with_val(300, &p.plus + &p.minus);
            let d = (two - Float::with_val(300, &z.value * 2u32)).abs();
            assert!(d <= Float::with_val(64, &p.error_bound * 4u32));
        }
    }

    #[test]
    fn distribution_examples() {
        let bits = 256;
        let thr = |p: u64| num::pow2(64, -(bits as i64)) * (p + 2);
        assert!(verify_distribution(2, 3, 2, 1, bits).unwrap() < thr(2));
        assert!(verify_distribution(3, 2, 3, 1, bits).unwrap() < thr(3));
        assert!(verify_distribution(2, 3, 1, 1, bits).is_err());
        assert!(verify_distribution(2, 4, 2, 2, bits).is_err());
    }

    #[test]
    fn odd_part_reconstruction() {
        let bits = 256;
        let z3 = hurwitz_zeta(3, 1, 1, bits).unwrap().value;
        for q in [3u64, 4, 5] {
            let r = zeta_via_odd_parts(3, q, bits).unwrap();
            assert!((r - &z3).abs() < num::pow2(64, -(bits as i64) + 4));
        }
        assert!(zeta_via_odd_parts(2, 3, bits).is_err());
    }

    #[test]
    fn refinement_stays_in_previous_bracket() {
        let coarse = hurwitz_zeta(3, 2, 9, 100).unwrap();
        let fine = hurwitz_zeta(3, 2, 9, 400).unwrap();
        let d = Float::with_val(500, &fine.value - &coarse.value).abs();
        assert!(d <= coarse.error_bound);
    }

    #[test]
    fn json_export_shape() {
        let z = hurwitz_zeta(2, 1, 3, 64).unwrap();
        let j = serde_json::to_value(z.to_json()).unwrap();
        let v: f64 = j["value"].as_str().unwrap().parse().unwrap();
        assert!((v - 10.095597125427094).abs() < 1e-12);
        assert!(j["err2exp"].as_i64().unwrap() <= -64);
    }
}
