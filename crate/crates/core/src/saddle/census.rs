//! Roots of `P(z) = (z+r)^{q+k}(z−q)^k − z^{q+k}(z+q+r)^k` by Aberth–Ehrlich
//! simultaneous iteration, and their distribution about `Re z = −r/2`.

use rug::ops::Pow;
use rug::{Float, Integer};
use serde_json::json;

use super::Kqr;
use crate::error::{Error, Result};
use crate::num::{self, BigComplex};

/// Census of the roots of `P`.
#[derive(Debug, Clone)]
pub struct CensusReport {
    pub kqr: Kqr,
    pub degree: usize,
    pub on_line: usize,
    pub right: usize,
    pub left: usize,
    pub min_distance: Float,
    pub max_residual: Float,
    pub roots: Vec<BigComplex>,
}

impl CensusReport {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.on_line, self.right, self.left)
    }

    /// Roots with `Re z > −r/2`, as the census classified them.
    pub fn right_roots(&self) -> Vec<&BigComplex> {
        let half = Float::with_val(self.roots[0].prec(), self.kqr.r()) / -2i32;
        let tol = line_tol(self.roots[0].prec());
        self.roots
            .iter()
            .filter(|z| Float::with_val(z.prec(), &z.re - &half) > tol)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.kqr.k(), "q": self.kqr.q(), "r": self.kqr.r(),
            "degree": self.degree,
            "on_line": self.on_line, "right": self.right, "left": self.left,
            "min_distance": num::to_decimal_digits(&self.min_distance, 20),
            "max_residual_err2exp": num::err2exp(&self.max_residual),
            "roots": self.roots.iter().map(|z| [
                num::to_decimal_digits(&z.re, 30),
                num::to_decimal_digits(&z.im, 30),
            ]).collect::<Vec<_>>(),
        })
    }
}

fn line_tol(prec: u32) -> Float {
    num::pow2(64, -(prec as i64) / 4)
}

/// Ascending coefficients of `(z + shift)^e`.
fn binom_poly(shift: i64, e: u32) -> Vec<Integer> {
    (0..=e).map(|i| Integer::from(Integer::binomial_u(e, i)) * Integer::from(shift).pow(e - i)).collect()
}

fn poly_mul(a: &[Integer], b: &[Integer]) -> Vec<Integer> {
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Integer::from(x * y);
        }
    }
    out
}

/// Coefficients of `P`, ascending, with the cancelled top term removed.
pub fn p_coefficients(kqr: &Kqr) -> Vec<Integer> {
    let (k, q, r) = (kqr.k(), kqr.q(), kqr.r());
    let lhs = poly_mul(&binom_poly(r as i64, q + k), &binom_poly(-(q as i64), k));
    let mut zpow = vec![Integer::new(); (q + k) as usize];
    zpow.push(Integer::from(1));
    let rhs = poly_mul(&zpow, &binom_poly((q + r) as i64, k));
    let mut out: Vec<Integer> = lhs.iter().zip(&rhs).map(|(a, b)| Integer::from(a - b)).collect();
    while out.last().is_some_and(|c| *c == 0) {
        out.pop();
    }
    out
}

fn horner(coef: &[Float], z: &BigComplex) -> (BigComplex, BigComplex) {
    let prec = z.prec();
    let n = coef.len() - 1;
    let mut p = BigComplex::from_real(coef[n].clone());
    let mut dp = BigComplex::zero(prec);
    for c in coef[..n].iter().rev() {
        dp = dp.mul(z).add(&p);
        p = p.mul(z).add_real(c);
    }
    (p, dp)
}

/// `Σ|a_j| r^j`.
fn horner_abs(abs_coef: &[Float], r: &Float) -> Float {
    let mut acc = abs_coef[abs_coef.len() - 1].clone();
    for c in abs_coef[..abs_coef.len() - 1].iter().rev() {
        acc = Float::with_val(acc.prec(), &acc * r) + c;
    }
    acc
}

/// All complex roots of an integer polynomial (ascending coefficients).
pub fn aberth(coeffs: &[Integer], prec: u32) -> Result<Vec<BigComplex>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let coef: Vec<Float> = coeffs.iter().map(|c| Float::with_val(prec, c)).collect();
    // Start on a circle at the geometric mean of the root moduli.
    let lead = num::ln_abs_f64(&coef[n]);
    let low = coeffs.iter().position(|c| *c != 0).unwrap();
    let radius = ((num::ln_abs_f64(&coef[low]) - lead) / (n - low) as f64).exp().max(1.0);
    let mut z: Vec<BigComplex> = (0..n)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64 + 0.4;
            BigComplex::from_f64(prec, radius * t.cos(), radius * t.sin())
        })
        .collect();
    // Root i is done once |P(z_i)| is within rounding of Σ|a_j||z_i|^j, or
    // its step is negligible; done roots are frozen.
    let abs_coef: Vec<Float> = coef.iter().map(|c| Float::with_val(prec, c.abs_ref())).collect();
    let eps = num::pow2(64, 16 - prec as i64);
    let step_tol = num::pow2(64, 40 - prec as i64);
    let mut done = vec![false; n];
    for _ in 0..2000 {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(&coef, &z[i]);
            let scale = horner_abs(&abs_coef, &z[i].abs());
            if Float::with_val(64, p.abs()) <= Float::with_val(64, &scale * &eps) {
                done[i] = true;
                continue;
            }
            let ratio = p.div(&dp);
            let mut s = BigComplex::zero(prec);
            for j in 0..n {
                if j != i {
                    s = s.add(&z[i].sub(&z[j]).recip());
                }
            }
            let denom = BigComplex::one(prec).sub(&ratio.mul(&s));
            let step = ratio.div(&denom);
            let size = Float::with_val(64, z[i].abs()).max(&Float::with_val(64, 1));
            if Float::with_val(64, step.abs() / size) <= step_tol {
                done[i] = true;
            }
            z[i] = z[i].sub(&step);
        }
        if done.iter().all(|d| *d) {
            return Ok(z);
        }
    }
    Err(Error::StrategyFailure { strategy: "aberth".into(), diagnostics: format!("degree {n} did not converge") })
}

/// All roots of `P`, classified relative to `Re z = −r/2`.
pub fn p_roots_census(kqr: &Kqr, prec: u32) -> Result<CensusReport> {
    let coeffs = p_coefficients(kqr);
    let degree = coeffs.len() - 1;
    if degree > 200 {
        return Err(Error::InvalidInput(format!("deg P = {degree} exceeds 200")));
    }
    let mut roots = aberth(&coeffs, prec)?;
    roots.sort_by(|a, b| num::cmp(&a.re, &b.re).then(num::cmp(&a.im, &b.im)));

    let half = Float::with_val(prec, kqr.r()) / -2i32;
    let tol = line_tol(prec);
    let (mut on_line, mut right, mut left) = (0, 0, 0);
    for z in &roots {
        let d = Float::with_val(prec, &z.re - &half);
        if Float::with_val(64, d.abs_ref()) <= tol {
            on_line += 1;
        } else if d > 0 {
            right += 1;
        } else {
            left += 1;
        }
    }
    let mut min_distance = Float::with_val(64, f64::INFINITY);
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let d = Float::with_val(64, roots[i].sub(&roots[j]).abs());
            if d < min_distance {
                min_distance = d;
            }
        }
    }
    let coef: Vec<Float> = coeffs.iter().map(|c| Float::with_val(prec, c)).collect();
    let max_residual = roots
        .iter()
        .map(|z| {
            // residual relative to the derivative: the Newton correction
            let (p, dp) = horner(&coef, z);
            Float::with_val(64, p.div(&dp).abs())
        })
        .fold(Float::new(64), |a, b| a.max(&b));

    let report = CensusReport { kqr: kqr.clone(), degree, on_line, right, left, min_distance, max_residual, roots };
    let (q, k) = (kqr.q() as usize, kqr.k() as usize);
    if report.counts() != (q - 1, k, k) || report.min_distance <= tol {
        return Err(Error::CensusMismatch(format!(
            "counts (line, right, left) = {:?}, expected {:?}; min distance {}",
            report.counts(),
            (q - 1, k, k),
            report.min_distance.to_f64()
        )));
    }
    Ok(report)
}
