//! The rational function `R_n(t)`, its partial-fraction coefficients
//! `C_{n,j}` and the linear form
//! `S_n = ρ_0 + ρ_1 δ_k ζ(k) + Σ_{1≤a<q/2} ρ_{a/q} ζ⁻(k, a/q)`.
//!
//! Everything except `S_n` itself is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hurwitz;
use crate::num::{self, BigComplex};
use crate::params::{lcm_upto, Params};

/// A value with an absolute error bound.
#[derive(Debug, Clone)]
pub struct Certified {
    pub value: Float,
    pub error: Float,
}

impl Certified {
    /// Do `[a ± ea]` and `[b ± eb]` overlap?
    pub fn agrees_with(&self, other: &Certified) -> bool {
        let p = self.value.prec().max(other.value.prec());
        let d = Float::with_val(p, &self.value - &other.value).abs();
        d <= Float::with_val(p, &self.error + &other.error)
    }

    /// Number of leading decimal digits two values share (relative).
    pub fn matching_digits(a: &Float, b: &Float) -> f64 {
        let p = a.prec().max(b.prec());
        let d = Float::with_val(p, a - b).abs();
        if d.is_zero() {
            return f64::INFINITY;
        }
        (num::ln_abs_f64(a) - num::ln_abs_f64(&d)) / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub params: Params,
    /// `C_{n,j}` for `j = 0..=rqn`.
    pub c: Vec<Integer>,
    pub a_factor: Vec<Integer>,
    pub b_factor: Vec<Integer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub params: Params,
    pub rho0: Rational,
    pub rho1: Rational,
    /// `a ↦ ρ_{a/q}` for `1 ≤ a < q/2`.
    pub rho_a: BTreeMap<u64, Rational>,
}

fn prod_range<I: Iterator<Item = i64> + Clone>(it: I) -> Integer {
    let v: Vec<i64> = it.collect();
    fn go(v: &[i64]) -> Integer {
        match v.len() {
            0 => Integer::from(1),
            1 => Integer::from(v[0]),
            n => go(&v[..n / 2]) * go(&v[n / 2..]),
        }
    }
    go(&v)
}

/// `Π_{p|q} p^{qn/(p−1)}`.
fn prime_prefactor(params: &Params) -> Integer {
    let qn = params.qn();
    params
        .prime_divisors()
        .into_iter()
        .fold(Integer::from(1), |acc, p| acc * num::ipow(p, (qn / (p - 1)) as u32))
}

/// Builds every `C_{n,j}` through the `A`/`B` factorisation. Each factor's
/// division by `(qn)!` is checked; a remainder is reported, never dropped.
pub fn build_coefficients(params: &Params) -> Result<CoefficientTable> {
    let (q, n) = (params.q() as i64, params.n() as i64);
    let qn = params.qn() as i64;
    let rqn = params.rqn() as i64;
    let k = params.k();
    let pre = prime_prefactor(params);
    let qnf = num::factorial(qn as u32);

    let ab: Vec<(Integer, Integer)> = (0..=rqn)
        .into_par_iter()
        .map(|j| -> Result<(Integer, Integer)> {
            let a_raw = prod_range((0..qn).map(|nu| -j - q * q * n + q * nu));
            let b_raw = prod_range((0..qn).map(|nu| -j + rqn + q * q * n - q * nu));
            let mut out = [Integer::new(), Integer::new()];
            for (slot, raw) in out.iter_mut().zip([a_raw, b_raw]) {
                let (quo, rem) = (raw * &pre).div_rem(qnf.clone());
                if rem != 0 {
                    let den = Rational::from((rem, qnf.clone())).into_numer_denom().1;
                    return Err(Error::NonIntegral { j: j as usize, denominator: den.to_string() });
                }
                *slot = quo;
            }
            let [a, b] = out;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;

    // binom(rqn, j) by the multiplicative recurrence
    let mut binom = Vec::with_capacity(rqn as usize + 1);
    let mut b = Integer::from(1);
    for j in 0..=rqn {
        binom.push(b.clone());
        b *= rqn - j;
        b /= j + 1;
    }

    let odd_k = params.delta_k() == 1;
    let c: Vec<Integer> = ab
        .par_iter()
        .zip(binom.par_iter())
        .enumerate()
        .map(|(j, ((a, b), bin))| {
            let mut v = Integer::from(a * b).pow(k) * bin;
            if !odd_k {
                v *= rqn - 2 * j as i64;
            }
            if j % 2 == 1 {
                v = -v;
            }
            v
        })
        .collect();

    let (a_factor, b_factor) = ab.into_iter().unzip();
    Ok(CoefficientTable { params: params.clone(), c, a_factor, b_factor })
}

/// Symmetry `C_j = (−1)^{k−1} C_{rqn−j}` and the factorisation identity.
pub fn verify_table(table: &CoefficientTable) -> Result<()> {
    let p = &table.params;
    let rqn = p.rqn() as usize;
    let k_even = p.k() % 2 == 0;
    for j in 0..=rqn {
        let mirror = &table.c[rqn - j];
        let ok = if k_even { table.c[j] == Integer::from(-mirror) } else { table.c[j] == *mirror };
        if !ok {
            return Err(Error::Verification(format!("symmetry fails at j = {j}")));
        }
    }
    if k_even && table.c[rqn / 2] != 0 {
        return Err(Error::Verification("centre coefficient is nonzero for even k".into()));
    }
    Ok(())
}

fn sign_km1(k: u32) -> i32 {
    if k % 2 == 1 {
        1
    } else {
        -1
    }
}

/// ρ_{a/q} for `1 ≤ a < q`, as the exact numerator sum (before `/q`).
fn rho_a_sum(table: &CoefficientTable, a: u64) -> Integer {
    let q = table.params.q() as u64;
    let rn = table.params.rn();
    (0..rn).map(|j| &table.c[(q * j + a) as usize]).sum()
}

/// The exact linear form.
pub fn rho(table: &CoefficientTable) -> LinearForm {
    let p = &table.params;
    let (k, q) = (p.k(), p.q() as u64);
    let s = sign_km1(k);
    let over_q = |x: Integer| Rational::from((x * s, Integer::from(q)));

    let mut rho_a = BTreeMap::new();
    for a in 1..q {
        if 2 * a < q {
            rho_a.insert(a, over_q(rho_a_sum(table, a)));
        }
    }

    let base: Integer = (0..=p.rn()).map(|j| &table.c[(q * j) as usize]).sum();
    let mut rho1 = over_q(base);
    if q % 2 == 0 {
        let half = over_q(rho_a_sum(table, q / 2));
        rho1 += half * ((1u32 << k) - 1);
    }

    // ρ_0 = (−1)^k q^{k−1} Σ_{u=1}^{rqn} W_u / u^k with W_u the sum of C_j
    // over j ≥ u in u's residue class mod q.
    let rqn = p.rqn() as usize;
    let mut w = vec![Integer::new(); rqn + 1];
    for u in (1..=rqn).rev() {
        let mut acc = table.c[u].clone();
        if u + q as usize <= rqn {
            acc += &w[u + q as usize];
        }
        w[u] = acc;
    }
    let terms: Vec<(Integer, Integer)> = (1..=rqn)
        .filter_map(|u| {
            let v = std::mem::take(&mut w[u]);
            (v != 0).then(|| (v, Integer::from(u).pow(k)))
        })
        .collect();
    let rho0 = num::sum_fractions(&terms) * num::ipow(q, k - 1) * -s;

    LinearForm { params: p.clone(), rho0, rho1, rho_a }
}

/// Outcome of the divisibility lemma checks.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct DivisibilityReport {
    pub q_rho1_integral: bool,
    pub q_rho_a_integral: bool,
    pub d_rho0_integral: bool,
}

impl DivisibilityReport {
    pub fn all(&self) -> bool {
        self.q_rho1_integral && self.q_rho_a_integral && self.d_rho0_integral
    }
}

pub fn verify_divisibility(form: &LinearForm) -> DivisibilityReport {
    let p = &form.params;
    let q = Integer::from(p.q());
    let is_int = |r: Rational| *r.denom() == 1;
    let d = lcm_upto(p.rqn()).pow(p.k());
    DivisibilityReport {
        q_rho1_integral: is_int(Rational::from(&form.rho1 * &q)),
        q_rho_a_integral: form.rho_a.values().all(|r| is_int(Rational::from(r * &q))),
        d_rho0_integral: is_int(Rational::from(&form.rho0 * &d)),
    }
}

/// `β = rq log 2 + k((2q + r) log(q + r/2) − r log(r/2) + 2q Σ_{p|q} log p/(p − 1))`.
pub fn beta_value(k: u32, q: u64, r: u64, prec: u32) -> Float {
    let ln = |x: Float| x.ln();
    let qf = Float::with_val(prec, q);
    let rf = Float::with_val(prec, r);
    let half_r = Float::with_val(prec, &rf / 2u32);
    let mut primes = Float::new(prec);
    for p in crate::params::prime_divisors(q) {
        primes += ln(Float::with_val(prec, p)) / (p - 1);
    }
    let inner = Float::with_val(prec, Float::with_val(prec, &qf * 2u32) + &rf) * ln(Float::with_val(prec, &qf + &half_r))
        - Float::with_val(prec, &rf * ln(half_r))
        + Float::with_val(prec, &qf * 2u32) * primes;
    Float::with_val(prec, r * q) * num::ln2(prec) + inner * k
}

/// `(n, log max_j |C_{n,j}| / n)` for each table, in input order.
pub fn coefficient_growth(tables: &[CoefficientTable]) -> Vec<(u32, f64)> {
    tables
        .iter()
        .map(|t| {
            let m = t.c.iter().map(|c| c.clone().abs()).max().unwrap_or_default();
            let l = num::ln_abs_f64(&Float::with_val(64, &m));
            (t.params.n(), l / t.params.n() as f64)
        })
        .collect()
}

/// `R_n^{(k−1)}(m)/(k−1)! = (−1)^{k−1} q^{k−1} Σ_j C_j/(qm + j)^k`, exactly.
pub fn eval_r_derivative_term(table: &CoefficientTable, m: u64) -> Result<Rational> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be >= 1".into()));
    }
    let p = &table.params;
    let (k, q) = (p.k(), p.q() as u64);
    let terms: Vec<(Integer, Integer)> = table
        .c
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(j, c)| (c.clone(), Integer::from(q * m + j as u64).pow(k)))
        .collect();
    Ok(num::sum_fractions(&terms) * num::ipow(q, k - 1) * sign_km1(k))
}

/// `(rqn)!/(qn)!^{2k} · q^{2kqn} · Π_{p|q} p^{2kqn/(p−1)}` at `prec`.
pub fn r_n_constant(params: &Params, prec: u32) -> Float {
    let k = params.k();
    let qn = params.qn() as u32;
    let top = num::factorial(params.rqn() as u32)
        * num::ipow(params.q() as u64, 2 * k * qn)
        * prime_prefactor(params).pow(2 * k);
    let bottom = num::factorial(qn).pow(2 * k);
    Float::with_val(prec, Rational::from((top, bottom)))
}

/// `ln K` where `K` is [`r_n_constant`], without forming `K`'s digits.
pub fn r_n_constant_ln(params: &Params, prec: u32) -> Float {
    r_n_constant(params, prec).ln()
}

/// `R_n(t)` at a complex point, by its product definition.
pub fn r_n_eval(params: &Params, konst: &Float, t: &BigComplex) -> BigComplex {
    let prec = t.prec();
    let (k, q) = (params.k(), params.q() as i64);
    let (qn, rn, rqn) = (params.qn() as i64, params.rn() as i64, params.rqn() as i64);
    let mut num_ = BigComplex::from_real(Float::with_val(prec, konst));
    for nu in 0..qn {
        let a = t.add_i64(nu - qn);
        let b = t.add_i64(rn + 1 + nu);
        num_ = num_.mul(&a.mul(&b).powi(k));
    }
    if params.delta_k() == 0 {
        num_ = num_.mul(&t.scale_i64(2 * q).add_i64(rqn));
    }
    let qt = t.scale_i64(q);
    let mut den = BigComplex::one(prec);
    for i in 0..=rqn {
        den = den.mul(&qt.add_i64(i));
    }
    num_.div(&den)
}

// ---------------------------------------------------------------------------
// S_n: the series route

/// Explicit majorant for `Σ_{m>M} |R_n^{(k−1)}(m)|/(k−1)!`.
///
/// Cauchy's estimate on the unit circle around `m` bounds the term by
/// `max_{|t−m|=1} |R_n(t)| ≤ K · (2q(m+1) + rqn)^{1−δ_k} Π(m+1−qn+ν)^k
/// (m+rn+2+ν)^k / Π(q(m−1)+i)`. For `m ≥ M` every linear factor is compared
/// with `m`, giving `Cst · m^{−D}` with `D = (r−2k)qn + δ_k`, and the tail
/// sum is at most `Cst · M^{1−D}/(D−1)`.
pub fn series_tail_bound(params: &Params, terms: u64) -> Float {
    let prec = 128;
    let (k, q) = (params.k(), params.q() as u64);
    let (qn, rn, rqn) = (params.qn(), params.rn(), params.rqn());
    let m = Float::with_val(prec, terms);
    let inv_m = Float::with_val(prec, m.recip_ref());
    let mut cst = r_n_constant(params, prec);
    // numerator factors (m + c) ≤ m(1 + c⁺/M)
    let grow = |c: u64| Float::with_val(prec, &inv_m * c) + 1u32;
    for nu in 0..qn {
        if 1 + nu > qn {
            cst *= grow(1 + nu - qn).pow(k);
        }
        cst *= grow(rn + 2 + nu).pow(k);
    }
    if params.delta_k() == 0 {
        // 2q(m+1) + rqn ≤ m(2q + (2q + rqn)/M)
        cst *= Float::with_val(prec, &inv_m * (2 * q + rqn)) + 2 * q;
    }
    // denominator factors q(m−1) + i ≥ q·m·(1 − 1/M)
    let shrink = Float::with_val(prec, 1u32 - Float::with_val(prec, &inv_m)) * q;
    cst /= shrink.pow(rqn + 1);
    let d = (params.r() as u64 - 2 * k as u64) * qn + params.delta_k() as u64;
    let tail = cst * m.pow(1 - d as i64) / (d - 1);
    // outward rounding allowance
    tail * Float::with_val(prec, 1.0 + 1e-20)
}

/// Smallest `M ≥ qn` (on a ×1.25 grid) whose tail bound is below `target`.
pub fn terms_for_tail(params: &Params, target: &Float) -> u64 {
    let mut m = params.qn().max(16);
    while series_tail_bound(params, m) > *target {
        m += m / 4 + 1;
    }
    m
}

/// Exact partial sum `Σ_{m≤M} R_n^{(k−1)}(m)/(k−1)!` and the tail bound.
pub fn s_n_truncated(table: &CoefficientTable, terms: u64) -> Result<(Rational, Float)> {
    let p = &table.params;
    if terms < p.qn() {
        return Err(Error::InvalidInput(format!("terms = {terms} < qn = {}", p.qn())));
    }
    let (k, q) = (p.k(), p.q() as u64);
    let rqn = p.rqn();
    // Σ_{m=1}^{M} Σ_j C_j q^k/(qm + j)^k regrouped by u = qm + j:
    // V_u = Σ_{j ≡ u (q), u − qM ≤ j ≤ u − q} C_j.
    let umax = rqn + q * terms;
    let terms_v: Vec<(Integer, Integer)> = (q..=umax)
        .into_par_iter()
        .filter_map(|u| {
            let lo = u.saturating_sub(q * terms);
            let hi = (u - q).min(rqn);
            if lo > hi {
                return None;
            }
            // first j ≥ lo with j ≡ u (mod q)
            let start = lo + (u + q - lo % q) % q;
            let mut v = Integer::new();
            let mut j = start;
            while j <= hi {
                v += &table.c[j as usize];
                j += q;
            }
            (v != 0).then(|| (v, Integer::from(u).pow(k)))
        })
        .collect();
    let partial = num::sum_fractions(&terms_v) * num::ipow(q, k - 1) * sign_km1(k);
    Ok((partial, series_tail_bound(p, terms)))
}

// ---------------------------------------------------------------------------
// S_n: the zeta-combination route

/// `ζ(k)` and `ζ⁻(k, a/q)` for `1 ≤ a < q/2`, each with absolute error.
#[derive(Debug, Clone)]
pub struct ZetaBasis {
    pub zeta_k: Certified,
    pub minus: BTreeMap<u64, Certified>,
}

pub fn zeta_basis(params: &Params, bits: u32) -> Result<ZetaBasis> {
    let (k, q) = (params.k(), params.q() as u64);
    let z = hurwitz::hurwitz_zeta(k, 1, 1, bits)?;
    let mut minus = BTreeMap::new();
    for a in 1..q {
        if 2 * a < q {
            let pr = hurwitz::zeta_pair(k, a, q, bits)?;
            minus.insert(a, Certified { value: pr.minus, error: pr.error_bound });
        }
    }
    Ok(ZetaBasis { zeta_k: Certified { value: z.value, error: z.error_bound }, minus })
}

fn rat_abs_log2(r: &Rational) -> i64 {
    if *r == 0 {
        return i64::MIN / 4;
    }
    r.numer().significant_bits() as i64 - r.denom().significant_bits() as i64 + 1
}

/// `S_n` from the form and supplied zeta values. Fails if the requested
/// relative precision `2^{−bits}` is not met by the propagated error.
pub fn s_n_via_zeta(form: &LinearForm, basis: &ZetaBasis, bits: u32) -> Result<Certified> {
    let p = &form.params;
    let wp = basis.zeta_k.value.prec().max(bits + 64);
    let mut s = Float::with_val(wp, &form.rho0);
    let mut err = Float::new(64);
    let mut add = |rho: &Rational, z: &Certified| {
        s += Float::with_val(wp, &z.value * rho);
        let r = Float::with_val(64, rho).abs();
        err += Float::with_val(64, &r * &z.error) * (1.0 + 1e-15);
    };
    if p.delta_k() == 1 {
        add(&form.rho1, &basis.zeta_k);
    }
    for (a, rho) in &form.rho_a {
        let z = basis
            .minus
            .get(a)
            .ok_or_else(|| Error::InvalidInput(format!("zeta basis lacks a = {a}")))?;
        add(rho, z);
    }
    // rounding of the (at most q + 1) products and sums
    let big = [&form.rho0, &form.rho1].into_iter().chain(form.rho_a.values()).map(rat_abs_log2).max().unwrap();
    err += num::pow2(64, big + 8 - wp as i64);
    if form.rho0 == 0 && form.rho1 == 0 && form.rho_a.values().all(|r| *r == 0) {
        return Ok(Certified { value: Float::new(wp), error: Float::new(64) });
    }
    let rel = num::pow2(64, -(bits as i64));
    if err > Float::with_val(64, s.abs_ref()) * &rel {
        return Err(Error::PrecisionUnreachable(format!(
            "S_n error 2^{} exceeds the requested relative 2^-{bits}",
            num::err2exp(&err)
        )));
    }
    Ok(Certified { value: s, error: err })
}

/// Convenience: picks zeta precision from the size of the ρ's and retries
/// once if cancellation ate more than expected.
pub fn s_n_zeta_route(form: &LinearForm, bits: u32) -> Result<Certified> {
    let big = [&form.rho0, &form.rho1].into_iter().chain(form.rho_a.values()).map(rat_abs_log2).max().unwrap();
    let mut extra = big.max(0) as u32 + 32;
    for _ in 0..3 {
        let basis = zeta_basis(&form.params, bits + extra)?;
        match s_n_via_zeta(form, &basis, bits) {
            Err(Error::PrecisionUnreachable(_)) => extra *= 2,
            other => return other,
        }
    }
    Err(Error::PrecisionUnreachable("S_n via zeta values: cancellation too severe".into()))
}

// ---------------------------------------------------------------------------
// export

impl CoefficientTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,C\n");
        for (j, c) in self.c.iter().enumerate() {
            let _ = writeln!(s, "{j},{c}");
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "params": self.params,
            "coefficients": self.c.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl LinearForm {
    pub fn to_json(&self) -> serde_json::Value {
        let rho_a: BTreeMap<String, String> =
            self.rho_a.iter().map(|(a, r)| (a.to_string(), r.to_string())).collect();
        serde_json::json!({
            "params": self.params,
            "rho0": self.rho0.to_string(),
            "rho1": self.rho1.to_string(),
            "rho_a": rho_a,
        })
    }
}
