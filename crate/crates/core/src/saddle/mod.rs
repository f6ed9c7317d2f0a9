//! Saddle-point data for the contour integrals: the phase `f`, amplitude
//! `g`, the saddle points `τ_λ` solving `f′(z) = λπi`, and the constants
//! `α`, `ω`, `φ` governing `|S_n|`.
//!
//! The h-plane (`w`, with `z = r(w−1)/2`) lives in [`hplane`]; the root
//! census of the auxiliary polynomial `P` in [`census`].

pub mod census;
pub mod hplane;

use rug::{Float, Rational};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::num::{self, BigComplex};
use crate::params::{self, Params};

pub use census::{p_coefficients, p_roots_census, CensusReport};
pub use hplane::{Bank, CurvePoint, EtaRoots, HCase, HSolution, HSolutionSet, PhaseContext, Plane};

/// `(k, q, r)` without `n`: everything here is independent of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Kqr {
    k: u32,
    q: u32,
    r: u32,
}

impl Kqr {
    pub fn new(k: u32, q: u32, r: u32) -> Result<Kqr> {
        params::validate_kqr(k, q, r)?;
        Ok(Kqr { k, q, r })
    }

    /// `r = ⌊log² q⌋`, the choice that makes the bound grow like `log q`.
    pub fn log_squared(k: u32, q: u32) -> Result<Kqr> {
        let l = (q as f64).ln();
        Kqr::new(k, q, (l * l).floor() as u32)
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
    pub fn delta_k(&self) -> u32 {
        self.k % 2
    }

    /// The h-plane parameters `a = q`, `b = k`, `s = 2q/r`.
    pub fn phase(&self) -> PhaseContext {
        PhaseContext::new(self.q, self.k, Rational::from((2 * self.q, self.r))).expect("r > 2k gives a > sb")
    }

    /// `z = r(w − 1)/2`.
    pub fn w_to_z(&self, w: &Float) -> Float {
        Float::with_val(w.prec(), w - 1u32) * self.r / 2u32
    }

    pub fn z_to_w(&self, z: &Float) -> Float {
        Float::with_val(z.prec(), z * 2u32) / self.r + 1u32
    }
}

impl From<&Params> for Kqr {
    fn from(p: &Params) -> Kqr {
        Kqr { k: p.k(), q: p.q(), r: p.r() }
    }
}

// ---------------------------------------------------------------------------
// f-plane functions

struct Logs {
    lz: BigComplex,
    lzr: BigComplex,
    lzrq: BigComplex,
    lqz: BigComplex,
}

fn on_cut(kqr: &Kqr, z: &BigComplex) -> bool {
    z.im.is_zero() && (z.re <= 0 || z.re >= kqr.q)
}

fn logs(kqr: &Kqr, z: &BigComplex) -> Result<Logs> {
    if z.re.is_nan() || z.im.is_nan() {
        return Err(Error::BranchCut("NaN argument".into()));
    }
    if on_cut(kqr, z) {
        return Err(Error::BranchCut(format!("z = {} on (−∞,0] ∪ [q,∞)", z.re.to_f64())));
    }
    let (q, r) = (kqr.q as i64, kqr.r as i64);
    Ok(Logs {
        lz: z.ln(),
        lzr: z.add_i64(r).ln(),
        lzrq: z.add_i64(r + q).ln(),
        lqz: z.neg().add_i64(q).ln(),
    })
}

/// `rq log r + 2kq Σ_{p|q} log p/(p−1)`.
fn f_const(kqr: &Kqr, prec: u32) -> Float {
    let (k, q, r) = (kqr.k, kqr.q, kqr.r);
    let mut acc = Float::with_val(prec, r).ln() * (r as u64 * q as u64);
    for p in params::prime_divisors(q as u64) {
        acc += Float::with_val(prec, p).ln() * (2 * k as u64 * q as u64) / (p - 1);
    }
    acc
}

pub fn f_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    let l = logs(kqr, z)?;
    let (k, q, r) = (kqr.k as i64, kqr.q as i64, kqr.r as i64);
    let t1 = z.add_i64(r + q).mul(&l.lzrq).scale_i64(k);
    let t2 = z.neg().add_i64(q).mul(&l.lqz).scale_i64(k);
    let t3 = z.mul(&l.lz).scale_i64(q + k);
    let t4 = z.add_i64(r).mul(&l.lzr).scale_i64(q + k);
    Ok(t1.add(&t2).add(&t3).sub(&t4).add_real(&f_const(kqr, z.prec())))
}

fn fprime_logs(kqr: &Kqr, l: &Logs) -> BigComplex {
    let (k, q) = (kqr.k as i64, kqr.q as i64);
    l.lz.sub(&l.lzr).scale_i64(q + k).add(&l.lzrq.sub(&l.lqz).scale_i64(k))
}

pub fn fprime_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    Ok(fprime_logs(kqr, &logs(kqr, z)?))
}

/// `f″(z) = ((r−2k)q(2z+r)² − rq(r+2q)(r+2k+2q)) / (4z(z+r)(z+r+q)(z−q))`.
pub fn fpp_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    if on_cut(kqr, z) {
        return Err(Error::BranchCut(format!("z = {} on (−∞,0] ∪ [q,∞)", z.re.to_f64())));
    }
    let (k, q, r) = (kqr.k as i64, kqr.q as i64, kqr.r as i64);
    let u = z.scale_i64(2).add_i64(r);
    // the constant term overflows i64 for q ≳ 10⁶
    let c = Float::with_val(z.prec(), r * q) * (r + 2 * q) * (r + 2 * k + 2 * q);
    let num_ = u.mul(&u).scale_i64((r - 2 * k) * q).add_real(&-c);
    let den = z.mul(&z.add_i64(r)).mul(&z.add_i64(r + q)).mul(&z.add_i64(-q)).scale_i64(4);
    Ok(num_.div(&den))
}

fn f0_logs(kqr: &Kqr, l: &Logs, prec: u32) -> BigComplex {
    let (k, q, r) = (kqr.k as i64, kqr.q as i64, kqr.r as i64);
    l.lzrq
        .scale_i64(k * (r + q))
        .add(&l.lqz.scale_i64(k * q))
        .sub(&l.lzr.scale_i64(r * (q + k)))
        .add_real(&f_const(kqr, prec))
}

/// `f₀(z) = f(z) − z f′(z)` in its reduced form.
pub fn f0_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    Ok(f0_logs(kqr, &logs(kqr, z)?, z.prec()))
}

/// `log g(z)` as the sum of the half-logarithms defining `g`, so that
/// `exp` of it is exactly the product of principal square roots.
pub fn log_g_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    let l = logs(kqr, z)?;
    let k = kqr.k as i64;
    let mut acc = l.lz.add(&l.lzr).scale_i64(-(k + 1));
    acc = acc.add(&l.lqz.add(&l.lzrq).scale_i64(k));
    let mut half = BigComplex::new(acc.re / 2u32, acc.im / 2u32);
    if kqr.delta_k() == 0 {
        half = half.add(&z.scale_i64(2).add_i64(kqr.r as i64).ln());
    }
    Ok(half)
}

pub fn g_eval(kqr: &Kqr, z: &BigComplex) -> Result<BigComplex> {
    Ok(log_g_eval(kqr, z)?.exp())
}

// ---------------------------------------------------------------------------
// saddle points

/// How [`find_tau`] should look for `τ_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Newton in `u = log(q − z)` from a seed near `q`.
    Newton,
    /// Roots of `P` filtered by `f′ = λπi`, then polished.
    Census,
    /// Newton; then continuation in λ from `μ₀`; then the census.
    Auto,
}

/// A certified solution of `f′(τ) = λπi`.
#[derive(Debug, Clone)]
pub struct SaddlePoint {
    pub lambda: f64,
    pub tau: BigComplex,
    /// `log(q − τ)`; keeps `|τ − q|` meaningful when it underflows `τ`'s
    /// relative precision.
    pub log_q_minus_tau: BigComplex,
    pub residual: Float,
    pub strategy: Strategy,
}

fn lambda_pi_i(lambda: f64, prec: u32) -> BigComplex {
    BigComplex::new(Float::new(prec), num::pi(prec) * lambda)
}

fn q_bits(kqr: &Kqr) -> u32 {
    32 - kqr.q.leading_zeros()
}

/// Newton gives up rather than chase `z` closer to `q` than `2^{−this}`.
const MAX_EXTRA_BITS: f64 = 16_384.0;

/// Newton on `F(u) = f′(q − e^u) − λπi`, `F′(u) = −e^u f″(q − e^u)`.
/// Raises the working precision once the size of `Re u` is known, since
/// `q − e^u` must resolve `e^u` to `prec` bits.
fn newton_u(kqr: &Kqr, lambda: f64, seed: &BigComplex, prec: u32) -> Result<(BigComplex, BigComplex, u32)> {
    let q = kqr.q as i64;
    let mut u = seed.clone();
    let mut last = String::new();
    for _round in 0..4 {
        let extra = (-u.re.to_f64()).max(0.0) / std::f64::consts::LN_2;
        if extra > MAX_EXTRA_BITS {
            return Err(Error::StrategyFailure {
                strategy: "newton".into(),
                diagnostics: format!("iterate drifted to |q − z| ≈ 2^-{extra:.0}"),
            });
        }
        let w = prec + 64 + q_bits(kqr) + extra.ceil() as u32;
        u = u.with_prec(w);
        let target = lambda_pi_i(lambda, w);
        let two_pi = num::pi(w) * 2u32;
        let eval = |u: &BigComplex| -> Result<(BigComplex, BigComplex)> {
            let z = u.exp().neg().add_i64(q);
            // u itself is log(q − z), to more bits than q − z carries
            let l = Logs { lqz: u.clone(), ..logs(kqr, &z)? };
            Ok((fprime_logs(kqr, &l).sub(&target), z))
        };
        let (mut fu, mut z) = eval(&u)?;
        let mut converged = false;
        for _ in 0..300 {
            let d = u.exp().mul(&fpp_eval(kqr, &z)?).neg();
            let mut step = fu.div(&d);
            // cap wild steps
            let cap = Float::with_val(64, 2);
            let size = Float::with_val(64, step.abs());
            if size > cap {
                step = step.scale(&Float::with_val(w, &cap / &size));
            }
            let mut accepted = false;
            for _ in 0..40 {
                let mut cand = u.sub(&step);
                // keep Im u principal so that u = log(q − z)
                while cand.im > num::pi(w) {
                    cand.im -= &two_pi;
                }
                while cand.im <= -num::pi(w) {
                    cand.im += &two_pi;
                }
                if let Ok((fc, zc)) = eval(&cand) {
                    if fc.abs() < fu.abs() || step.abs() < num::pow2(64, 32 - w as i64) {
                        u = cand;
                        fu = fc;
                        z = zc;
                        accepted = true;
                        break;
                    }
                }
                step = BigComplex::new(step.re / 2u32, step.im / 2u32);
            }
            let scale = Float::with_val(64, u.abs()).max(&Float::with_val(64, 1));
            if !accepted || fu.is_zero() || Float::with_val(64, step.abs() / &scale) < num::pow2(64, -(prec as i64) - 48) {
                converged = accepted || fu.abs() < num::pow2(64, -(prec as i64));
                break;
            }
        }
        last = format!("u = {:?}, |F| = {:e}", u, fu.abs().to_f64());
        if !converged {
            return Err(Error::StrategyFailure { strategy: "newton".into(), diagnostics: last });
        }
        let need = prec + 64 + q_bits(kqr) + ((-u.re.to_f64()).max(0.0) / std::f64::consts::LN_2).ceil() as u32;
        if need <= w {
            return Ok((z, u, w));
        }
    }
    Err(Error::StrategyFailure { strategy: "newton".into(), diagnostics: format!("precision did not settle; {last}") })
}

/// Checks that `z` is the λ-saddle rather than its mirror or a stray root.
fn accept(kqr: &Kqr, lambda: f64, z: &BigComplex, u: &BigComplex, prec: u32, strategy: Strategy) -> Result<SaddlePoint> {
    let w = z.prec();
    let resid = fprime_eval(kqr, z)?.sub(&lambda_pi_i(lambda, w)).abs();
    let half_r = Float::with_val(w, kqr.r) / -2i32;
    let ok_place = if lambda == 0.0 {
        z.im.is_zero() && z.re > 0 && z.re < kqr.q
    } else {
        z.im > 0 && z.re > half_r
    };
    if !ok_place || resid >= num::pow2(64, -(prec as i64) / 2) {
        return Err(Error::StrategyFailure {
            strategy: format!("{strategy:?}").to_lowercase(),
            diagnostics: format!("landed at {:?} with residual {:e}", z, resid.to_f64()),
        });
    }
    Ok(SaddlePoint { lambda, tau: z.clone(), log_q_minus_tau: u.clone(), residual: resid, strategy })
}

fn by_newton(kqr: &Kqr, lambda: f64, prec: u32) -> Result<SaddlePoint> {
    let q = kqr.q as f64;
    // seed q(1 − 10⁻³) + i·q·10⁻³ (real for λ = 0)
    let seed_z = if lambda == 0.0 {
        BigComplex::from_f64(64, q * (1.0 - 1e-3), 0.0)
    } else {
        BigComplex::from_f64(64, q * (1.0 - 1e-3), q * 1e-3)
    };
    let seed_u = seed_z.neg().add_i64(kqr.q as i64).ln();
    let (z, u, _) = newton_u(kqr, lambda, &seed_u, prec)?;
    accept(kqr, lambda, &z, &u, prec, Strategy::Newton)
}

/// Walks λ up from 0 with an Euler predictor `du/dλ = πi/F′(u)`.
fn by_continuation(kqr: &Kqr, lambda: f64, prec: u32) -> Result<SaddlePoint> {
    let mut pt = by_newton(kqr, 0.0, 96)?;
    let steps = (lambda / 0.05).ceil().max(1.0) as usize;
    for i in 1..=steps {
        let l = lambda * i as f64 / steps as f64;
        let p = if i == steps { prec } else { 96 };
        let w = pt.tau.prec();
        let d = pt.log_q_minus_tau.exp().mul(&fpp_eval(kqr, &pt.tau)?).neg();
        let dl = Float::with_val(w, l - pt.lambda);
        let mut pred = pt.log_q_minus_tau.add(&lambda_pi_i(1.0, w).scale(&dl).div(&d));
        if i == 1 {
            // leave the real axis
            pred.im -= Float::with_val(w, 1e-6);
        }
        let (z, u, _) = newton_u(kqr, l, &pred, p)?;
        pt = accept(kqr, l, &z, &u, p, Strategy::Newton)?;
    }
    Ok(pt)
}

fn by_census(kqr: &Kqr, lambda: f64, prec: u32) -> Result<SaddlePoint> {
    let li = lambda.round();
    if li != lambda || (li as i64 - kqr.k as i64) % 2 != 0 {
        return Err(Error::InvalidInput(format!("census only yields λ ≡ k (mod 2), got {lambda}")));
    }
    let census = p_roots_census(kqr, prec.max(128))?;
    let target = lambda_pi_i(lambda, prec.max(128));
    let best = census
        .right_roots()
        .into_iter()
        .filter(|z| lambda == 0.0 || z.im > 0)
        .filter_map(|z| {
            let z = if lambda == 0.0 { BigComplex::from_real(z.re.clone()) } else { z.clone() };
            fprime_eval(kqr, &z).ok().map(|v| (v.sub(&target).abs(), z))
        })
        .min_by(|a, b| num::cmp(&a.0, &b.0))
        .ok_or_else(|| Error::StrategyFailure { strategy: "census".into(), diagnostics: "no candidate root".into() })?;
    let seed = best.1.neg().add_i64(kqr.q as i64).ln();
    let (z, u, _) = newton_u(kqr, lambda, &seed, prec)?;
    accept(kqr, lambda, &z, &u, prec, Strategy::Census)
}

/// `τ_λ` for `0 ≤ λ < k`: `Im τ ≥ 0`, `Re τ > −r/2`, residual below
/// `2^{−prec/2}`.
pub fn find_tau(kqr: &Kqr, lambda: f64, prec: u32, strategy: Strategy) -> Result<SaddlePoint> {
    if !(0.0..kqr.k as f64).contains(&lambda) {
        return Err(Error::InvalidInput(format!("λ = {lambda} outside [0, k)")));
    }
    match strategy {
        Strategy::Newton => by_newton(kqr, lambda, prec),
        Strategy::Census => by_census(kqr, lambda, prec),
        Strategy::Auto => {
            let mut diag = Vec::new();
            match by_newton(kqr, lambda, prec) {
                Ok(p) => return Ok(p),
                Err(e) => diag.push(e.to_string()),
            }
            if lambda > 0.0 {
                match by_continuation(kqr, lambda, prec) {
                    Ok(p) => return Ok(p),
                    Err(e) => diag.push(e.to_string()),
                }
            }
            if p_coefficients(kqr).len() <= 201 {
                match by_census(kqr, lambda, prec) {
                    Ok(p) => return Ok(p),
                    Err(e) => diag.push(e.to_string()),
                }
            }
            Err(Error::StrategyFailure { strategy: "auto".into(), diagnostics: diag.join("; ") })
        }
    }
}

/// `μ₀` and `μ₁`: the real zeros of `Re f′`, via η₀, η₁.
pub fn mu_values(kqr: &Kqr, prec: u32) -> Result<(Float, Float)> {
    let e = kqr.phase().eta_roots(prec)?;
    Ok((kqr.w_to_z(&e.eta0), kqr.w_to_z(&e.eta1)))
}

/// The f-plane curve `Y(x) = (r/2)·Y₀(2x/r + 1)` for `μ₀ < x < μ₁`.
pub fn f_curve_point(kqr: &Kqr, x: &Float, etas: &EtaRoots) -> Result<CurvePoint> {
    let y0 = kqr.phase().y0(&kqr.z_to_w(x), etas)?;
    Ok(CurvePoint { x: x.clone(), y: y0 * kqr.r / 2u32, plane: Plane::F })
}

// ---------------------------------------------------------------------------
// constants

/// Saddle data at `λ = k − 2`.
#[derive(Debug, Clone)]
pub struct SaddleData {
    pub kqr: Kqr,
    pub lambda: f64,
    pub tau: BigComplex,
    pub log_q_minus_tau: BigComplex,
    pub alpha: Float,
    pub omega: Float,
    pub phi: Float,
    pub f0_at_tau: BigComplex,
    pub fpp_at_tau: BigComplex,
    pub g_at_tau: BigComplex,
    pub residual: Float,
}

pub fn saddle_constants(kqr: &Kqr, prec: u32) -> Result<SaddleData> {
    let lambda = (kqr.k - 2) as f64;
    let pt = find_tau(kqr, lambda, prec, Strategy::Auto)?;
    constants_at(kqr, pt)
}

fn constants_at(kqr: &Kqr, pt: SaddlePoint) -> Result<SaddleData> {
    let f0 = f0_eval(kqr, &pt.tau)?;
    let fpp = fpp_eval(kqr, &pt.tau)?;
    let g = g_eval(kqr, &pt.tau)?;
    let phi = Float::with_val(fpp.prec(), g.arg()) - fpp.arg() / 2u32;
    Ok(SaddleData {
        kqr: *kqr,
        lambda: pt.lambda,
        alpha: -f0.re.clone(),
        omega: f0.im.clone(),
        phi,
        tau: pt.tau,
        log_q_minus_tau: pt.log_q_minus_tau,
        f0_at_tau: f0,
        fpp_at_tau: fpp,
        g_at_tau: g,
        residual: pt.residual,
    })
}

/// `Re f₀(τ_λ)` along a λ grid, walking each solve from the previous one.
pub fn re_f0_along(kqr: &Kqr, lambdas: &[f64], prec: u32) -> Result<Vec<Float>> {
    lambdas
        .iter()
        .map(|&l| {
            let pt = find_tau(kqr, l, prec, Strategy::Auto)?;
            Ok(f0_eval(kqr, &pt.tau)?.re)
        })
        .collect()
}

impl SaddleData {
    /// Whether the oscillation is non-degenerate: `ω ∉ πℤ` or
    /// `φ ∉ π/2 + πℤ`, judged numerically to `tol`.
    pub fn oscillation_disjuncts(&self, tol: f64) -> (bool, bool) {
        let pi = std::f64::consts::PI;
        let frac = |x: f64| {
            let t = x / pi;
            (t - t.round()).abs()
        };
        let omega_ok = frac(self.omega.to_f64()) > tol;
        let phi_ok = frac(self.phi.to_f64() - pi / 2.0) > tol;
        (omega_ok, phi_ok)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.kqr.k, "q": self.kqr.q, "r": self.kqr.r,
            "lambda": self.lambda,
            "tau": [num::to_decimal_digits(&self.tau.re, 40), num::to_decimal_digits(&self.tau.im, 40)],
            "log_abs_tau_minus_q": num::to_decimal_digits(&self.log_q_minus_tau.re, 30),
            "alpha": num::to_decimal_digits(&self.alpha, 40),
            "omega": num::to_decimal_digits(&self.omega, 40),
            "phi": num::to_decimal_digits(&self.phi, 40),
            "residual_err2exp": num::err2exp(&self.residual),
        })
    }
}

/// One row of the `|τ_{k−2} − q|` scan.
#[derive(Debug, Clone, Serialize)]
pub struct TauScanRow {
    pub q: u32,
    pub r: u32,
    pub log_dist: f64,
    pub ratio: f64,
}

/// `log|τ_{k−2} − q| / log² q` with `r = ⌊log² q⌋`; tends to `−1/k`.
pub fn tau_asymptotic_scan(k: u32, qs: &[u32], prec: u32) -> Result<Vec<TauScanRow>> {
    use rayon::prelude::*;
    qs.par_iter()
        .map(|&q| {
            let kqr = Kqr::log_squared(k, q)?;
            let pt = find_tau(&kqr, (k - 2) as f64, prec, Strategy::Auto)?;
            let log_dist = pt.log_q_minus_tau.re.to_f64();
            let l = (q as f64).ln();
            Ok(TauScanRow { q, r: kqr.r, log_dist, ratio: log_dist / (l * l) })
        })
        .collect()
}
