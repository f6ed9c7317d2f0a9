//! `cot_k(z) = ((−1)^{k−1}/(k−1)!) · d^{k−1}/dz^{k−1} cot z`.
//!
//! `sin^k(z)·cot_k(z)` is a polynomial `V_k` in `cos z`, and re-expanded in
//! multiple angles it becomes a finite cosine series `Σ c_l cos(l z)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{self, BigComplex};

/// Dense polynomial, `coeffs[i]` multiplies `X^i`.
pub type Poly = Vec<Rational>;

#[derive(Debug, Clone, PartialEq)]
pub struct CotkExpansion {
    pub k: u32,
    pub vk: Poly,
    /// `l ↦ c_l` for `0 ≤ l ≤ k−2`, `l ≡ k (mod 2)`.
    pub c: BTreeMap<u32, Rational>,
}

#[derive(Debug, Serialize)]
pub struct CotkJson {
    pub k: u32,
    pub c: BTreeMap<String, String>,
}

impl CotkExpansion {
    pub fn to_json(&self) -> CotkJson {
        CotkJson {
            k: self.k,
            c: self.c.iter().map(|(l, v)| (l.to_string(), v.to_string())).collect(),
        }
    }
}

fn trim(p: &mut Poly) {
    while p.len() > 1 && p.last().map_or(false, |c| *c == 0) {
        p.pop();
    }
}

/// `V_1 = X`, `V_{k+1} = ((1 − X²)V_k′ + kX·V_k)/k`.
pub fn vk_polynomial(k: u32) -> Result<Poly> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let mut v: Poly = vec![Rational::new(), Rational::from(1)];
    for m in 1..k {
        let deg = v.len();
        let mut next = vec![Rational::new(); deg + 2];
        // (1 − X²) V′
        for i in 1..deg {
            let d = Rational::from(&v[i] * i as u32);
            next[i - 1] += &d;
            next[i + 1] -= d;
        }
        // m X V
        for (i, c) in v.iter().enumerate() {
            next[i + 1] += Rational::from(c * m);
        }
        for c in next.iter_mut() {
            *c /= m;
        }
        trim(&mut next);
        v = next;
    }
    Ok(v)
}

/// Chebyshev change of basis: `cos^l θ = 2^{−l} Σ_j binom(l, j) cos((l − 2j)θ)`.
pub fn cosine_expansion(k: u32, vk: &Poly) -> CotkExpansion {
    let mut c: BTreeMap<u32, Rational> = BTreeMap::new();
    for (l, coef) in vk.iter().enumerate() {
        if *coef == 0 {
            continue;
        }
        let l = l as u32;
        for j in 0..=l {
            let freq = (l as i64 - 2 * j as i64).unsigned_abs() as u32;
            let b = Integer::from(Integer::binomial_u(l, j));
            let term = Rational::from((b, Integer::from(1) << l)) * coef;
            *c.entry(freq).or_insert_with(Rational::new) += term;
        }
    }
    c.retain(|_, v| *v != 0);
    CotkExpansion { k, vk: vk.clone(), c }
}

/// Cached expansion for weight `k`.
pub fn expansion(k: u32) -> Result<Arc<CotkExpansion>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<CotkExpansion>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(e) = cache.read().unwrap().get(&k) {
        return Ok(e.clone());
    }
    let e = Arc::new(cosine_expansion(k, &vk_polynomial(k)?));
    Ok(cache.write().unwrap().entry(k).or_insert(e).clone())
}

/// Horner evaluation of an exact polynomial at a complex point.
pub fn eval_poly(p: &Poly, x: &BigComplex) -> BigComplex {
    let prec = x.prec();
    let mut acc = BigComplex::zero(prec);
    for c in p.iter().rev() {
        acc = acc.mul(x).add_real(&Float::with_val(prec, c));
    }
    acc
}

/// Distance from `z` to the nearest integer, and that integer.
pub fn dist_to_integers(z: &BigComplex) -> (Float, Integer) {
    let prec = z.prec();
    let m = z.re.clone().round().to_integer().unwrap_or_default();
    let d = BigComplex::new(Float::with_val(prec, &z.re - &m), z.im.clone()).abs();
    (d, m)
}

/// `cot_k(πz) = V_k(cos πz) / sin^k(πz)`.
pub fn cotk_eval(k: u32, z: &BigComplex, prec: u32) -> Result<BigComplex> {
    let z = z.with_prec(prec);
    let (d, _) = dist_to_integers(&z);
    if d < num::pow2(prec, -(prec as i64) / 2) {
        return Err(Error::PoleProximity { distance: d.to_f64() });
    }
    let e = expansion(k)?;
    let pz = z.scale(&num::pi(prec));
    let v = eval_poly(&e.vk, &pz.cos());
    Ok(v.div(&pz.sin().powi(k)))
}

/// Symmetric lattice sum `Σ_{|m|≤M} (z − m)^{−k}` (which tends to
/// `π^k cot_k(πz)`) with a bound on the omitted tail.
pub fn cotk_lattice_sum(k: u32, z: &BigComplex, terms: u64, prec: u32) -> Result<(BigComplex, Float)> {
    if k < 2 {
        return Err(Error::InvalidInput("lattice sum converges only for k >= 2".into()));
    }
    let z = z.with_prec(prec);
    let zabs = z.abs().to_f64();
    if (terms as f64) <= zabs + 1.0 {
        return Err(Error::InvalidInput("lattice sum needs M > |z| + 1".into()));
    }
    let mut s = BigComplex::zero(prec);
    for m in -(terms as i64)..=(terms as i64) {
        let w = z.add_i64(-m);
        s = s.add(&w.powi(k).recip());
    }
    // |z − m| ≥ |m| − |z|: two tails each ≤ ∫_{M−|z|}^∞ t^{−k} dt.
    let t = Float::with_val(prec, terms as f64 - zabs);
    let tail = Float::with_val(prec, t.pow(1 - k as i32)) * 2u32 / (k - 1);
    Ok((s, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    /// Symbolic oracle: cot^{(m)} = P_m(cot) with `P_{m+1} = P_m′(y)(−1 − y²)`,
    /// then `sin^k · y^i = X^i (1 − X²)^{(k−i)/2}` for `X = cos`.
    fn symbolic_vk(k: u32) -> Poly {
        let mut p: Poly = vec![Rational::new(), Rational::from(1)];
        for _ in 1..k {
            let mut d = vec![Rational::new(); p.len() + 2];
            for i in 1..p.len() {
                let c = Rational::from(&p[i] * i as u32);
                d[i - 1] -= &c;
                d[i + 1] -= c;
            }
            trim(&mut d);
            p = d;
        }
        let mut v = vec![Rational::new(); k as usize + 1];
        for (i, pi) in p.iter().enumerate() {
            if *pi == 0 {
                continue;
            }
            let e = (k as usize - i) / 2;
            assert_eq!((k as usize - i) % 2, 0);
            for t in 0..=e {
                let b = Integer::from(Integer::binomial_u(e as u32, t as u32));
                let sgn = if t % 2 == 0 { 1 } else { -1 };
                v[i + 2 * t] += Rational::from(pi * b) * sgn;
            }
        }
        let scale = Rational::from((1, num::factorial(k - 1)));
        let sgn = if k % 2 == 1 { 1 } else { -1 };
        for c in v.iter_mut() {
            *c *= &scale;
            *c *= sgn;
        }
        trim(&mut v);
        v
    }

    #[test]
    fn recurrence_matches_symbolic_oracle() {
        for k in 1..=10 {
            assert_eq!(vk_polynomial(k).unwrap(), symbolic_vk(k), "k = {k}");
        }
    }

    #[test]
    fn small_k_values() {
        assert_eq!(vk_polynomial(2).unwrap(), vec![r(1, 1)]);
        assert_eq!(vk_polynomial(3).unwrap(), vec![r(0, 1), r(1, 1)]);
        // V_4 = (1 + 2X²)/3 — the sin^4 cot_4 identity is (2 + 4cos²)/6.
        assert_eq!(vk_polynomial(4).unwrap(), vec![r(1, 3), r(0, 1), r(2, 3)]);
        let c = |k| expansion(k).unwrap().c.clone();
        assert_eq!(c(2), BTreeMap::from([(0, r(1, 1))]));
        assert_eq!(c(3), BTreeMap::from([(1, r(1, 1))]));
        assert_eq!(c(4), BTreeMap::from([(0, r(2, 3)), (2, r(1, 3))]));
    }

    #[test]
    fn structural_invariants() {
        for k in 2..=12u32 {
            let e = expansion(k).unwrap();
            assert_eq!(e.vk.len() as u32, k - 1, "deg V_k = k − 2");
            for (i, c) in e.vk.iter().enumerate() {
                if (i as u32 + k) % 2 == 1 {
                    assert_eq!(*c, 0, "parity of V_{k}");
                }
            }
            assert!(e.c.get(&(k - 2)).map_or(false, |c| *c != 0));
            assert!(e.c.keys().all(|l| *l <= k - 2 && (l + k) % 2 == 0));
        }
    }

    #[test]
    fn cosine_series_equals_vk_at_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let prec = 128;
        for k in 2..=9u32 {
            let e = expansion(k).unwrap();
            for _ in 0..10 {
                let th = Float::with_val(prec, rng.gen_range(-3.0..3.0));
                let x = BigComplex::from_real(th.clone().cos());
                let lhs = eval_poly(&e.vk, &x).re;
                let mut rhs = Float::new(prec);
                for (l, c) in &e.c {
                    rhs += Float::with_val(prec, &th * *l).cos() * c;
                }
                assert!((lhs - rhs).abs() < num::pow2(prec, -110));
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let half = BigComplex::from_f64(128, 0.5, 0.0);
        let v = cotk_eval(2, &half, 128).unwrap();
        assert!(v.sub(&BigComplex::one(128)).abs() < num::pow2(128, -120));
        let z = BigComplex::from_f64(128, 3.0, 0.0);
        assert!(matches!(cotk_eval(2, &z, 128), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn finite_difference_step() {
        // cot_{k+1} = −cot_k′ / k by central differences at 512 bits.
        let prec = 512;
        let z = BigComplex::from_f64(prec, 0.31, 0.42);
        let h = BigComplex::from_real(num::pow2(prec, -(prec as i64) / 4));
        for k in 1..=8u32 {
            let f = |w: &BigComplex| -> BigComplex {
                if k == 1 {
                    let p = w.scale(&num::pi(prec));
                    p.cos().div(&p.sin())
                } else {
                    cotk_eval(k, w, prec).unwrap()
                }
            };
            let d = f(&z.add(&h)).sub(&f(&z.sub(&h))).div(&h.scale_i64(2));
            // d/dz of cot_k(πz) is π·cot_k′(πz)
            let want = cotk_eval(k + 1, &z, prec).unwrap().scale_i64(-(k as i64)).scale(&num::pi(prec));
            let rel = d.sub(&want).abs() / want.abs();
            assert!(rel < num::pow2(64, -200), "k = {k}");
        }
    }

    #[test]
    fn lattice_sum_agrees_with_closed_form() {
        let prec = 128;
        for k in 2..=5u32 {
            for (x, y) in [(0.25, 0.0), (0.4, 0.7), (-0.3, -1.1)] {
                let z = BigComplex::from_f64(prec, x, y);
                let (s, tail) = cotk_lattice_sum(k, &z, 20_000, prec).unwrap();
                let pk = num::pi(prec).pow(k);
                let closed = cotk_eval(k, &z, prec).unwrap().scale(&pk);
                assert!(s.sub(&closed).abs() <= tail, "k = {k}, z = {x}+{y}i");
            }
        }
    }

    #[test]
    fn conjugation_and_periodicity() {
        let prec = 128;
        let z = BigComplex::from_f64(prec, 0.37, 0.81);
        for k in 2..=6 {
            let v = cotk_eval(k, &z, prec).unwrap();
            let vc = cotk_eval(k, &z.conj(), prec).unwrap();
            assert!(v.conj().sub(&vc).abs() < num::pow2(64, -110));
            let vs = cotk_eval(k, &z.add_i64(1), prec).unwrap();
            assert!(v.sub(&vs).abs() < num::pow2(64, -100));
        }
    }

    #[test]
    fn json_uses_exact_fractions() {
        let j = serde_json::to_value(expansion(4).unwrap().to_json()).unwrap();
        assert_eq!(j["c"]["0"], "2/3");
        assert_eq!(j["c"]["2"], "1/3");
    }
}
