//! Contour integrals along vertical lines: `S_n` from
//! `(π^{k−1} i/2) ∫ cot_k(πz) R_n(z) dz`, the pieces `J_{n,λ}`, and the
//! empirical check of the exponential rate of `|S_n|`.
//!
//! Quadrature is composite Gauss–Legendre in the line parameter `t`.
//! The only singularities of either integrand lie on the imaginary `t`-axis,
//! so panels double in width away from `t = 0`; the error estimate is the
//! change under splitting every panel in two, plus an explicit bound on the
//! truncated tails.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use rug::{Float, Integer};
use serde::Serialize;

use crate::cotk;
use crate::error::{Error, Result};
use crate::linform::{self, Certified};
use crate::num::{self, BigComplex};
use crate::params::{self, Params};
use crate::saddle::{self, Kqr};

// ---------------------------------------------------------------------------
// Gauss–Legendre nodes

type Rule = Arc<Vec<(Float, Float)>>;

fn rule_cache() -> &'static RwLock<HashMap<(usize, u32), Rule>> {
    static C: OnceLock<RwLock<HashMap<(usize, u32), Rule>>> = OnceLock::new();
    C.get_or_init(Default::default)
}

/// `(P_m(x), P_m′(x))` by the three-term recurrence.
fn legendre(m: usize, x: &Float) -> (Float, Float) {
    let p = x.prec();
    let mut p0 = Float::with_val(p, 1);
    let mut p1 = x.clone();
    for j in 2..=m {
        let t = Float::with_val(p, x * &p1) * (2 * j - 1) as u32 - Float::with_val(p, &p0 * (j - 1) as u32);
        p0 = p1;
        p1 = t / j as u32;
    }
    let x2 = Float::with_val(p, x.square_ref()) - 1u32;
    let d = (Float::with_val(p, x * &p1) - &p0) * m as u32 / x2;
    (p1, d)
}

/// Nodes and weights on `[−1, 1]`, Newton-polished at `prec`, cached.
pub fn gauss_legendre(m: usize, prec: u32) -> Rule {
    if let Some(r) = rule_cache().read().unwrap().get(&(m, prec)) {
        return r.clone();
    }
    let w = prec + 32;
    let half: Vec<(Float, Float)> = (1..=m / 2)
        .into_par_iter()
        .map(|i| {
            let guess = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            let mut x = Float::with_val(w, guess);
            for _ in 0..200 {
                let (pm, dp) = legendre(m, &x);
                let dx = Float::with_val(w, &pm / &dp);
                x -= &dx;
                if dx.is_zero() || dx.get_exp().map_or(true, |e| e < -(w as i32) + 4) {
                    break;
                }
            }
            let (_, dp) = legendre(m, &x);
            let one_m_x2 = 1u32 - Float::with_val(w, x.square_ref());
            let wt = Float::with_val(w, 2u32 / (one_m_x2 * dp.square()));
            (Float::with_val(prec, &x), Float::with_val(prec, &wt))
        })
        .collect();
    let mut all = Vec::with_capacity(m);
    for (x, wt) in &half {
        all.push((x.clone(), wt.clone()));
        all.push((-x.clone(), wt.clone()));
    }
    if m % 2 == 1 {
        let (_, dp) = legendre(m, &Float::new(w));
        all.push((Float::new(prec), Float::with_val(prec, 2u32 / dp.square())));
    }
    let rule = Arc::new(all);
    rule_cache().write().unwrap().insert((m, prec), rule.clone());
    rule
}

/// Panels `[−b₀, b₀]`, then `[b, 2b]` doubling to `height`, mirrored;
/// each split into `split` equal pieces.
fn panels(b0: f64, height: f64, split: usize) -> Vec<(f64, f64)> {
    let mut right = vec![(-b0, b0)];
    let mut a = b0;
    while a < height {
        let b = (2.0 * a).min(height);
        right.push((a, b));
        right.push((-b, -a));
        a = b;
    }
    right
        .into_iter()
        .flat_map(|(a, b)| {
            let h = (b - a) / split as f64;
            (0..split).map(move |i| (a + h * i as f64, a + h * (i + 1) as f64))
        })
        .collect()
}

/// `∫_{−H}^{H} F(t) dt` on the panel layout, and `∫|F|` from the same
/// nodes. Panel sums are collected in order and added sequentially so the
/// result is bit-reproducible.
fn line_integral<F>(f: &F, b0: f64, height: f64, nodes: usize, split: usize, prec: u32) -> Result<(BigComplex, Float)>
where
    F: Fn(&Float) -> Result<BigComplex> + Sync,
{
    let rule = gauss_legendre(nodes, prec);
    let sums: Vec<(BigComplex, Float)> = panels(b0, height, split)
        .into_par_iter()
        .map(|(a, b)| {
            let mid = Float::with_val(prec, a + b) / 2u32;
            let half = Float::with_val(prec, b - a) / 2u32;
            let mut acc = BigComplex::zero(prec);
            let mut l1 = Float::new(64);
            for (x, w) in rule.iter() {
                let t = Float::with_val(prec, &half * x) + &mid;
                let v = f(&t)?.scale(w);
                l1 += Float::with_val(64, v.abs());
                acc = acc.add(&v);
            }
            Ok((acc.scale(&half), l1 * Float::with_val(64, &half)))
        })
        .collect::<Result<_>>()?;
    Ok(sums.iter().fold((BigComplex::zero(prec), Float::new(64)), |(acc, l1), (s, m)| (acc.add(s), l1 + m)))
}

/// Relative size the truncated tails must fall below: half the working
/// precision, but no finer than the panels can resolve anyway.
fn tail_target_bits(prec: u32) -> i64 {
    (prec as i64 / 2).min(192)
}

/// Doubles the height from `height` until `tail(height)` is negligible next
/// to the coarse value, then refines. `ops` counts the roundings per
/// integrand evaluation, for the rounding allowance.
fn integrate_truncated<F, T>(f: &F, tail: T, b0: f64, mut height: f64, nodes: usize, ops: u64, prec: u32) -> Result<QuadResult>
where
    F: Fn(&Float) -> Result<BigComplex> + Sync,
    T: Fn(f64) -> Option<f64>,
{
    for _ in 0..10 {
        let Some(ln_trunc) = tail(height) else {
            height *= 2.0;
            continue;
        };
        let (coarse, _) = line_integral(f, b0, height, nodes, 1, prec)?;
        let ln_size = num::ln_abs_f64(&coarse.abs());
        if ln_trunc > ln_size - tail_target_bits(prec) as f64 * std::f64::consts::LN_2 {
            height *= 2.0;
            continue;
        }
        let (fine, l1) = line_integral(f, b0, height, nodes, 2, prec)?;
        let trunc = Float::with_val(64, ln_trunc).exp();
        let rounding = l1 * (ops + 64) * num::pow2(64, -(prec as i64));
        return finish(fine, &coarse, trunc, rounding, height);
    }
    Err(Error::QuadratureNonConvergence(format!("no admissible truncation height up to {height}")))
}

fn finish(fine: BigComplex, coarse: &BigComplex, trunc: Float, rounding: Float, height: f64) -> Result<QuadResult> {
    let delta = Float::with_val(64, fine.sub(coarse).abs());
    let size = Float::with_val(64, fine.abs());
    if delta > Float::with_val(64, &size * 1e-10) {
        return Err(Error::QuadratureNonConvergence(format!(
            "panel refinement changed the value by {:e} (relative)",
            Float::with_val(64, &delta / &size).to_f64()
        )));
    }
    let error = Float::with_val(64, &delta + &trunc) + rounding;
    Ok(QuadResult { value: fine, error, delta, truncation: trunc, height })
}

// ---------------------------------------------------------------------------
// S_n along Re z = M

/// Where and how to integrate.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    /// `M`, in the original variable of `R_n`.
    pub abscissa: Float,
    /// Truncation height `T`; the tail beyond it is bounded explicitly.
    pub height: f64,
    /// Gauss–Legendre order per panel.
    pub nodes: usize,
}

/// A quadrature value with its error budget.
#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: BigComplex,
    /// `delta + truncation + rounding`.
    pub error: Float,
    /// Change under halving every panel.
    pub delta: Float,
    pub truncation: Float,
    pub height: f64,
}

impl QuadResult {
    pub fn real_part(&self) -> Certified {
        Certified { value: self.value.re.clone(), error: self.error.clone() }
    }
}

/// Number of linear factors in the numerator of `R_n`.
fn numerator_degree(p: &Params) -> u64 {
    2 * p.k() as u64 * p.qn() + 1 - p.delta_k() as u64
}

/// `Σ|c_l| · (2/(1 − e^{−2π}))^k`: for `|t| ≥ 1`,
/// `|cot_k(π(x+it))| ≤ this · e^{−2π|t|}`.
fn cot_tail_constant(k: u32) -> Result<f64> {
    let e = cotk::expansion(k)?;
    let s: f64 = e.c.values().map(|c| c.to_f64().abs()).sum();
    Ok(s * (2.0 / (1.0 - (-2.0 * std::f64::consts::PI).exp())).powi(k as i32))
}

impl ContourSpec {
    /// `M = ⌊nμ₀⌋ + ½` (half-way between poles of `cot_k`) and a height
    /// past which `|t|^N e^{−2π|t|}` is decreasing.
    pub fn auto(params: &Params) -> Result<ContourSpec> {
        let kqr = Kqr::from(params);
        let (mu0, _) = saddle::mu_values(&kqr, 128)?;
        let nm = Float::with_val(128, &mu0 * params.n()).floor();
        let abscissa = Float::with_val(128, nm) + 0.5;
        let height = (numerator_degree(params) as f64 / std::f64::consts::PI).max(8.0);
        Ok(ContourSpec { abscissa, height, nodes: 48 })
    }

    pub fn with_abscissa(mut self, m: f64) -> Self {
        self.abscissa = Float::with_val(128, m);
        self
    }
}

fn check_abscissa(params: &Params, m: &Float) -> Result<f64> {
    let (d, _) = cotk::dist_to_integers(&BigComplex::from_real(m.clone()));
    if *m <= 0 || *m >= params.qn() || d.is_zero() {
        return Err(Error::InvalidInput(format!("abscissa {} must lie in (0, qn) off the integers", m.to_f64())));
    }
    Ok(d.to_f64())
}

/// The integrand `−(π^{k−1}/2) cot_k(πz) R_n(z)` at `z = M + it`.
struct SnIntegrand {
    params: Params,
    konst: Float,
    m: Float,
    scale: Float,
    prec: u32,
}

impl SnIntegrand {
    fn new(params: &Params, m: &Float, prec: u32) -> Self {
        let scale = -(num::pi(prec).pow_u(params.k() - 1)) / 2u32;
        SnIntegrand {
            params: params.clone(),
            konst: linform::r_n_constant(params, prec),
            m: Float::with_val(prec, m),
            scale,
            prec,
        }
    }
    fn r_n(&self, t: &Float) -> BigComplex {
        let z = BigComplex::new(self.m.clone(), Float::with_val(self.prec, t));
        linform::r_n_eval(&self.params, &self.konst, &z)
    }
    fn eval(&self, t: &Float) -> Result<BigComplex> {
        let z = BigComplex::new(self.m.clone(), Float::with_val(self.prec, t));
        let c = cotk::cotk_eval(self.params.k(), &z, self.prec)?;
        Ok(c.mul(&linform::r_n_eval(&self.params, &self.konst, &z)).scale(&self.scale))
    }
}

trait PowU {
    fn pow_u(self, e: u32) -> Float;
}
impl PowU for Float {
    fn pow_u(self, e: u32) -> Float {
        use rug::ops::Pow;
        self.pow(e)
    }
}

/// `log` of the tail bound `2·C·|R(T)|·e^{−aT}/(a − N/T)` for an integrand
/// bounded by `C·|R(t)|·e^{−a|t|}` with `|R(t)| ≤ |R(T)|(t/T)^N` beyond `T`.
fn ln_tail_bound(ln_coef: f64, ln_r_at_t: f64, a: f64, n_deg: f64, t: f64) -> Option<f64> {
    let slope = a - n_deg / t;
    if slope <= 0.0 || t < 1.0 {
        return None;
    }
    Some(std::f64::consts::LN_2 + ln_coef + ln_r_at_t - a * t - slope.ln())
}

/// One quadrature level, no error estimate: for order studies.
pub fn s_n_contour_level(params: &Params, spec: &ContourSpec, split: usize, prec: u32) -> Result<BigComplex> {
    let d = check_abscissa(params, &spec.abscissa)?;
    let ig = SnIntegrand::new(params, &spec.abscissa, prec);
    Ok(line_integral(&|t: &Float| ig.eval(t), d / 2.0, spec.height, spec.nodes, split, prec)?.0)
}

/// Panels resolve far fewer digits than this, so evaluating the integrand
/// more finely only costs time; cancellation is still charged through the
/// rounding term.
pub const MAX_CONTOUR_BITS: u32 = 768;

/// `S_n` by quadrature on `Re z = M`, with error estimate. Works at
/// `min(prec, MAX_CONTOUR_BITS)` bits.
pub fn s_n_contour(params: &Params, spec: &ContourSpec, prec: u32) -> Result<QuadResult> {
    let prec = prec.min(MAX_CONTOUR_BITS);
    let d = check_abscissa(params, &spec.abscissa)?;
    let ig = SnIntegrand::new(params, &spec.abscissa, prec);
    let n_deg = numerator_degree(params) as f64;
    let coef = cot_tail_constant(params.k())? * std::f64::consts::PI.powi(params.k() as i32 - 1) / 2.0;
    let a = 2.0 * std::f64::consts::PI;

    let tail = |h: f64| {
        let ln_r = num::ln_abs_f64(&ig.r_n(&Float::with_val(prec, h)).abs());
        ln_tail_bound(coef.ln(), ln_r, a, n_deg, h)
    };
    let ops = n_deg as u64 + params.rqn() + 8 * params.k() as u64;
    integrate_truncated(&|t: &Float| ig.eval(t), tail, d / 2.0, spec.height, spec.nodes, ops, prec)
}

// ---------------------------------------------------------------------------
// J_{n,λ} and g_n

/// `π^k (qn)^{k−1+δ_k} / sqrt(2rπ/(qn))`: the factor taking
/// `R_n(nz)/sin^k(nπz)` to `e^{nf(z)} g_n(z)`.
fn g_n_prefactor(params: &Params, prec: u32) -> Float {
    let k = params.k();
    let qn = Float::with_val(prec, params.qn());
    let pi = num::pi(prec);
    let top = Float::with_val(prec, pi.clone().pow_u(k)) * qn.clone().pow_u(k - 1 + params.delta_k());
    let inner = Float::with_val(prec, &pi * (2 * params.r())) / &qn;
    top / inner.sqrt()
}

/// `S_n = tilde_factor · S̃_n`, with `tilde_factor = −sqrt(2πrn/q)/(qn)^{k−1+δ_k}`.
pub fn tilde_factor(params: &Params, prec: u32) -> Float {
    let pi = num::pi(prec);
    let inner = Float::with_val(prec, &pi * (2 * params.r() as u64 * params.n() as u64)) / params.q();
    let den = Float::with_val(prec, params.qn()).pow_u(params.k() - 1 + params.delta_k());
    -(inner.sqrt() / den)
}

/// `e^{nf(z)} g_n(z)` with `f` the phase and `g_n` defined through `R_n(nz)`.
fn exp_nf_gn(params: &Params, konst: &Float, pre: &Float, z: &BigComplex) -> Result<BigComplex> {
    let n = params.n() as i64;
    let nz = z.scale_i64(n);
    let s = nz.scale(&num::pi(z.prec())).sin().powi(params.k());
    let (d, _) = cotk::dist_to_integers(&nz);
    if d < num::pow2(64, -(z.prec() as i64) / 2) {
        return Err(Error::PoleProximity { distance: d.to_f64() });
    }
    Ok(linform::r_n_eval(params, konst, &nz).scale(pre).div(&s))
}

/// `g_n(z)/g(z)`, which tends to 1 like `O(1/n)`.
pub fn g_n_ratio(params: &Params, z: &BigComplex) -> Result<BigComplex> {
    let prec = z.prec();
    let kqr = Kqr::from(params);
    let konst = linform::r_n_constant(params, prec);
    let pre = g_n_prefactor(params, prec);
    let a = exp_nf_gn(params, &konst, &pre, z)?;
    let lg = saddle::f_eval(&kqr, z)?.scale_i64(params.n() as i64).add(&saddle::log_g_eval(&kqr, z)?);
    Ok(a.div(&lg.exp()))
}

/// `J_{n,λ} = (1/2πi) ∫_{μ−i∞}^{μ+i∞} e^{n(f(z) − λπiz)} g_n(z) dz`.
pub fn j_integral(params: &Params, lambda: f64, mu: &Float, prec: u32) -> Result<QuadResult> {
    let n = params.n() as f64;
    let k = params.k() as f64;
    if !(lambda.abs() < k) {
        return Err(Error::InvalidInput(format!("|λ| = {} must be below k", lambda.abs())));
    }
    if *mu <= 0 || *mu >= params.q() {
        return Err(Error::InvalidInput("μ must lie in (0, q)".into()));
    }
    let mu = Float::with_val(prec, mu);
    let nmu = Float::with_val(prec, &mu * params.n());
    let d = check_abscissa(params, &nmu)? / n;
    let konst = linform::r_n_constant(params, prec);
    let pre = g_n_prefactor(params, prec);
    let inv_2pi = Float::with_val(prec, 1u32 / (num::pi(prec) * 2u32));
    let lam_pi_n = num::pi(prec) * lambda * n;
    let ig = |y: &Float| -> Result<BigComplex> {
        let z = BigComplex::new(mu.clone(), Float::with_val(prec, y));
        let phase = z.mul_i().scale(&Float::with_val(prec, -&lam_pi_n)).exp();
        Ok(exp_nf_gn(params, &konst, &pre, &z)?.mul(&phase).scale(&inv_2pi))
    };
    let n_deg = numerator_degree(params) as f64;
    // |sin(nπz)|^{−k} ≤ (2/(1−e^{−2π}))^k e^{−kπn|y|} once n|y| ≥ 1
    let a = (k - lambda.abs()) * std::f64::consts::PI * n;
    let ln_coef = num::ln_abs_f64(&pre) - (2.0 * std::f64::consts::PI).ln()
        + k * (2.0 / (1.0 - (-2.0 * std::f64::consts::PI).exp())).ln();
    let tail = |h: f64| {
        let z = BigComplex::new(Float::with_val(prec, &nmu), Float::with_val(prec, h * n));
        let ln_r = num::ln_abs_f64(&linform::r_n_eval(params, &konst, &z).abs());
        ln_tail_bound(ln_coef, ln_r, a, n_deg, h).filter(|_| h * n >= 1.0)
    };
    let ops = n_deg as u64 + params.rqn() + 8 * params.k() as u64 + 16;
    integrate_truncated(&ig, tail, d / 2.0, (n_deg / a * 2.0).max(8.0 / n), 48, ops, prec)
}

/// `Σ_l c_l Re J_{n,l}` against `S̃_n = S_n / tilde_factor`; returns both
/// and the combined quadrature error of the sum.
pub fn decomposition(params: &Params, mu: &Float, s_n: &Float, prec: u32) -> Result<(Float, Float, Float)> {
    let e = cotk::expansion(params.k())?;
    let mut sum = Float::new(prec);
    let mut err = Float::new(64);
    for (l, c) in &e.c {
        let j = j_integral(params, *l as f64, mu, prec)?;
        let cf = Float::with_val(prec, c);
        sum += Float::with_val(prec, &j.value.re * &cf);
        err += Float::with_val(64, &j.error * cf.abs());
    }
    let tilde = Float::with_val(prec, s_n / tilde_factor(params, prec));
    Ok((sum, tilde, err))
}

// ---------------------------------------------------------------------------
// fit of log|S_n|

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub n: u32,
    pub log_s: f64,
    /// The single-saddle prediction for `log|S_n|`, prefactors included.
    pub predicted: f64,
    /// `(log|S_n| − log|cos(nω+φ)| + αn)/n`.
    pub residual: f64,
    pub cos_factor: f64,
    /// `|cos(nω+φ)| < 10⁻³`: near a zero of the oscillation, not used.
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub k: u32,
    pub q: u32,
    pub r: u32,
    pub alpha: f64,
    pub omega: f64,
    pub phi: f64,
    pub rows: Vec<FitRow>,
}

impl FitReport {
    pub fn used(&self) -> impl Iterator<Item = &FitRow> {
        self.rows.iter().filter(|r| !r.excluded)
    }

    /// `|e(n)|` non-increasing over the rows in use.
    pub fn residuals_decrease(&self) -> bool {
        let v: Vec<f64> = self.used().map(|r| r.residual.abs()).collect();
        v.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,logS,predicted,residual\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.12},{:.12},{:.12}\n", r.n, r.log_s, r.predicted, r.residual));
        }
        s
    }
}

/// Exact-route `S_n` against `exp(−αn)·|cos(nω+φ)|` over `n_list`.
pub fn asymptotic_fit(kqr: &Kqr, n_list: &[u32], mode: params::NMode) -> Result<FitReport> {
    let sd = saddle::saddle_constants(kqr, 128)?;
    let (alpha, omega, phi) = (sd.alpha.to_f64(), sd.omega.to_f64(), sd.phi.to_f64());
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("n list must be increasing".into()));
    }
    let k = kqr.k();
    let c_top = cotk::expansion(k)?.c.get(&(k - 2)).map(|c| c.to_f64()).unwrap_or(0.0);
    let g_abs = sd.g_at_tau.abs().to_f64();
    let fpp_abs = sd.fpp_at_tau.abs().to_f64();
    let rows = n_list
        .iter()
        .map(|&n| {
            let p = Params::validate(k, kqr.q(), kqr.r(), n, mode)?;
            let table = linform::build_coefficients(&p)?;
            let form = linform::rho(&table);
            let s = linform::s_n_zeta_route(&form, 64)?;
            let log_s = num::ln_abs_f64(&s.value);
            let nf = n as f64;
            let cos_factor = (nf * omega + phi).cos().abs();
            let excluded = cos_factor < 1e-3;
            let ln_tilde = num::ln_abs_f64(&tilde_factor(&p, 128));
            let predicted = ln_tilde + c_top.abs().ln() - alpha * nf + g_abs.ln()
                - 0.5 * (2.0 * std::f64::consts::PI * nf * fpp_abs).ln()
                + cos_factor.ln();
            let residual = (log_s - cos_factor.ln() + alpha * nf) / nf;
            Ok(FitRow { n, log_s, predicted, residual, cos_factor, excluded })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FitReport { k, q: kqr.q(), r: kqr.r(), alpha, omega, phi, rows })
}

/// Exact-integer helper for callers that want `M` on the half-integer grid.
pub fn half_integer_abscissa(m: &Integer) -> Float {
    Float::with_val(128, m) + 0.5
}
