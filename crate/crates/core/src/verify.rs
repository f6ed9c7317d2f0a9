//! Every invariant the workbench can check for one parameter set, collected
//! into a single deterministic report.

use rug::Float;
use serde::Serialize;

use crate::bound;
use crate::cotk;
use crate::error::{Error, Result};
use crate::hurwitz;
use crate::linform::{self, Certified};
use crate::num::{self, BigComplex};
use crate::params::Params;
use crate::quadrature::{self, ContourSpec};
use crate::saddle::{self, hplane, CurvePoint, Kqr, PhaseContext, Plane, Strategy};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    /// An error inside a check is a failed check, not an abort.
    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((p, d)) => Check::new(name, p, d),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub params: Params,
    pub precision_bits: u32,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn sci(x: &Float) -> String {
    num::to_decimal_digits(x, 12)
}

// ---------------------------------------------------------------------------
// suites, reusable on their own

/// Integer coefficients, their symmetry, and the divisibility of the ρ's.
pub fn arithmetic_suite(params: &Params) -> Vec<Check> {
    let table = match linform::build_coefficients(params) {
        Ok(t) => t,
        Err(e) => return vec![Check::new("coefficients.integral", false, format!("error: {e}"))],
    };
    let mut out = vec![Check::new("coefficients.integral", true, format!("{} coefficients", table.c.len()))];
    out.push(Check::from_result(
        "coefficients.symmetry",
        linform::verify_table(&table).map(|_| (true, "C_j = (−1)^{k−1} C_{rqn−j}".into())),
    ));
    let form = linform::rho(&table);
    let d = linform::verify_divisibility(&form);
    out.push(Check::new("divisibility.q_rho1", d.q_rho1_integral, ""));
    out.push(Check::new("divisibility.q_rho_a", d.q_rho_a_integral, ""));
    out.push(Check::new("divisibility.lcm_rho0", d.d_rho0_integral, ""));
    out
}

/// `S_n` three ways: truncated series, zeta values, contour quadrature.
#[derive(Debug, Clone)]
pub struct TripleOracle {
    pub series: Certified,
    pub zeta: Certified,
    pub contour: Certified,
}

impl TripleOracle {
    pub fn pairwise_agree(&self) -> bool {
        self.series.agrees_with(&self.zeta)
            && self.series.agrees_with(&self.contour)
            && self.zeta.agrees_with(&self.contour)
    }

    pub fn min_digits(&self) -> f64 {
        let d = Certified::matching_digits;
        d(&self.series.value, &self.zeta.value)
            .min(d(&self.series.value, &self.contour.value))
            .min(d(&self.zeta.value, &self.contour.value))
    }
}

/// Series tail aimed at `10^{−12}` relative, which is the route's limit in
/// practice; the other two run at `prec`.
pub fn triple_oracle(params: &Params, prec: u32) -> Result<TripleOracle> {
    let table = linform::build_coefficients(params)?;
    let form = linform::rho(&table);
    let zeta = linform::s_n_zeta_route(&form, prec)?;
    if zeta.value.is_zero() {
        return Err(Error::Verification("S_n vanishes".into()));
    }
    let target = Float::with_val(64, zeta.value.abs_ref()) * 1e-12;
    let terms = linform::terms_for_tail(params, &target);
    let (partial, tail) = linform::s_n_truncated(&table, terms)?;
    let series = Certified { value: Float::with_val(prec.max(128), &partial), error: tail };
    let quad = quadrature::s_n_contour(params, &ContourSpec::auto(params)?, prec)?;
    Ok(TripleOracle { series, zeta, contour: quad.real_part() })
}

/// `|π^k cot_k(πz)| ≤ 2/dist(z, ℤ)^k + 4`.
pub fn cotk_bound_holds(k: u32, z: &BigComplex, prec: u32) -> Result<bool> {
    let v = cotk::cotk_eval(k, z, prec)?;
    let lhs = Float::with_val(prec, v.abs() * num::pi(prec).pow_k(k));
    let (d, _) = cotk::dist_to_integers(z);
    let rhs = Float::with_val(prec, 2u32 / Float::with_val(prec, d.pow_k(k))) + 4u32;
    Ok(lhs <= rhs)
}

/// `max_θ |π^k cot_k(π(m + d e^{iθ})) (d e^{iθ})^k − 1|` over 16 angles.
pub fn pole_normalization_error(k: u32, m: i64, d: f64, prec: u32) -> Result<f64> {
    let mut worst = 0.0f64;
    for j in 0..16 {
        let th = std::f64::consts::PI * (j as f64 + 0.5) / 8.0;
        let off = BigComplex::from_f64(prec, d * th.cos(), d * th.sin());
        let z = off.add_i64(m);
        let v = cotk::cotk_eval(k, &z, prec)?.scale(&num::pi(prec).pow_k(k)).mul(&off.powi(k));
        worst = worst.max(v.add_i64(-1).abs().to_f64());
    }
    Ok(worst)
}

trait PowK {
    fn pow_k(self, k: u32) -> Float;
}
impl PowK for Float {
    fn pow_k(self, k: u32) -> Float {
        use rug::ops::Pow;
        self.pow(k)
    }
}

fn cotk_suite(k: u32, prec: u32) -> Vec<Check> {
    // deterministic 10×10 grid in [0,1) × [−2, 2], off the real axis
    let bound = (|| -> Result<(bool, String)> {
        let mut bad = 0;
        for i in 0..10 {
            for j in 0..10 {
                let z = BigComplex::from_f64(prec, 0.05 + 0.1 * i as f64, -1.9 + 0.4 * j as f64 + 0.013);
                if !cotk_bound_holds(k, &z, prec)? {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{bad} of 100 grid points violate")))
    })();
    let lattice = (|| -> Result<(bool, String)> {
        let z = BigComplex::from_f64(prec, 0.3, 0.2);
        let (s, tail) = cotk::cotk_lattice_sum(k, &z, 4000, prec)?;
        let v = cotk::cotk_eval(k, &z, prec)?.scale(&num::pi(prec).pow_k(k));
        let d = Float::with_val(64, v.sub(&s).abs());
        let tol = Float::with_val(64, &tail * 1.01f64) + num::pow2(64, 20 - prec as i64);
        Ok((d <= tol, format!("|Δ| = {}, tail = {}", sci(&d), sci(&tail))))
    })();
    vec![Check::from_result("cotk.bound", bound), Check::from_result("cotk.lattice_sum", lattice)]
}

/// Distribution relation with `p = 2, a = 1` and `ζ(k, 1/2) = (2^k − 1)ζ(k)`,
/// at 256 bits.
pub fn distribution_suite(k: u32, q: u64) -> Vec<Check> {
    let bits = 256;
    let rel = (|| -> Result<(bool, String)> {
        let p = 2u64;
        let r = hurwitz::verify_distribution(k, q.max(2), p, 1, bits)?;
        let tol = Float::with_val(64, p + 2) * num::pow2(64, -(bits as i64));
        Ok((r < tol, format!("residual {}", sci(&r))))
    })();
    let half = (|| -> Result<(bool, String)> {
        let h = hurwitz::hurwitz_zeta(k, 1, 2, bits)?;
        let z = hurwitz::hurwitz_zeta(k, 1, 1, bits)?;
        let r = Float::with_val(bits + 64, &h.value - Float::with_val(bits + 64, &z.value * ((1u64 << k) - 1))).abs();
        let tol = num::pow2(64, 2 - bits as i64) * ((1u64 << k) + 1);
        Ok((r < tol, format!("residual {}", sci(&r))))
    })();
    vec![Check::from_result("hurwitz.distribution", rel), Check::from_result("hurwitz.half", half)]
}

/// Census, τ residual and monotonicity of `Re f₀(τ_λ)` for `(k, q, r)`.
pub fn saddle_suite(kqr: &Kqr) -> Vec<Check> {
    let mut out = Vec::new();
    let degree = (kqr.q() + 2 * kqr.k() - 1) as usize;
    if degree <= 60 {
        out.push(Check::from_result(
            "saddle.census",
            saddle::p_roots_census(kqr, 512).map(|r| {
                (
                    r.min_distance > 1e-6,
                    format!("counts {:?}, min distance {}", r.counts(), num::to_decimal_digits(&r.min_distance, 6)),
                )
            }),
        ));
    }
    out.push(Check::from_result(
        "saddle.tau_residual",
        saddle::find_tau(kqr, (kqr.k() - 2) as f64, 512, Strategy::Auto).map(|pt| {
            let ok = pt.residual < num::pow2(64, -200);
            (ok, format!("residual 2^{}", num::err2exp(&pt.residual)))
        }),
    ));
    let grid: Vec<f64> = (0..9).map(|i| i as f64 * kqr.k() as f64 / 9.0).collect();
    out.push(Check::from_result(
        "saddle.re_f0_increasing",
        saddle::re_f0_along(kqr, &grid, 128).map(|v| (hplane::strictly_increasing(&v), format!("{} points", v.len()))),
    ));
    out
}

/// Shape of the zero set of `Re h` and of `Im h` along it and along `iℝ`.
pub fn structure_suite(ctx: &PhaseContext, prec: u32) -> Vec<Check> {
    let (a, b) = (ctx.a() as f64, ctx.b() as f64);
    let s = ctx.s().to_f64();
    let pi = std::f64::consts::PI;
    let etas = ctx.eta_roots(prec);
    let Ok(e) = etas else {
        return vec![Check::new("hplane.eta", false, format!("error: {}", etas.unwrap_err()))];
    };
    let (e0, e1) = (e.eta0.to_f64(), e.eta1.to_f64());
    let mut out = vec![Check::new(
        "hplane.eta",
        1.0 < e0 && e0 < 1.0 + s && e1 > 1.0 + s && e.dhdx_eta0 > 0 && e.dhdx_eta1 < 0,
        format!("η₀ = {e0:.12}, η₁ = {e1:.12}"),
    )];
    let curve = (|| -> Result<(bool, String)> {
        let pts = ctx.y0_scan(&e, 200)?;
        let ys: Vec<f64> = pts.iter().map(|p| p.y.to_f64()).collect();
        let im: Vec<Float> = pts.iter().map(|p| ctx.im_h_on_curve(p)).collect();
        let width = Float::with_val(prec, &e.eta1 - &e.eta0);
        let eps = Float::with_val(prec, &width * 1e-9);
        let x0 = Float::with_val(prec, &e.eta0 + &eps);
        let x1 = Float::with_val(prec, &e.eta1 - &eps);
        let i0 = ctx.im_h_on_curve(&CurvePoint { y: ctx.y0(&x0, &e)?, x: x0, plane: Plane::H }).to_f64();
        let i1 = ctx.im_h_on_curve(&CurvePoint { y: ctx.y0(&x1, &e)?, x: x1, plane: Plane::H }).to_f64();
        let ok = hplane::is_unimodal(&ys)
            && hplane::strictly_increasing(&im)
            && i0.abs() < 1e-3 * pi
            && (i1 - b * pi).abs() < 1e-3 * pi;
        Ok((ok, format!("Im h from {:.6}π to {:.6}π", i0 / pi, i1 / pi)))
    })();
    out.push(Check::from_result("hplane.curve", curve));
    let grid: Vec<Float> =
        (-6..=6).flat_map(|e| (1..10).map(move |m| Float::with_val(prec, m as f64 * 10f64.powi(e)))).collect();
    let vals: Vec<Float> = ctx.imag_axis_scan(&grid).into_iter().map(|(_, v)| v).collect();
    let small = vals[0].to_f64();
    let large = vals[vals.len() - 1].to_f64();
    out.push(Check::new(
        "hplane.imaginary_axis",
        hplane::strictly_decreasing(&vals)
            && (small - (a + b) * pi).abs() < 1e-3 * pi
            && (large - b * pi).abs() < 1e-3 * pi,
        format!("Im h(iy) from {:.6}π to {:.6}π", small / pi, large / pi),
    ));
    out
}

// ---------------------------------------------------------------------------

/// Runs every suite for `params`. The report depends only on the inputs.
pub fn verify_all(params: &Params, prec: u32) -> VerifyReport {
    let kqr = Kqr::from(params);
    let mut checks = arithmetic_suite(params);

    checks.push(Check::from_result(
        "s_n.triple_oracle",
        triple_oracle(params, prec).map(|t| {
            let digits = t.min_digits();
            (t.pairwise_agree() && digits >= 10.0, format!("S_n = {}, {:.1} digits", sci(&t.zeta.value), digits))
        }),
    ));
    checks.extend(cotk_suite(params.k(), 256));
    checks.extend(distribution_suite(params.k(), params.q() as u64));
    checks.extend(saddle_suite(&kqr));
    checks.extend(structure_suite(&kqr.phase(), 128));
    checks.push(Check::from_result(
        "bound.identity",
        bound::dimension_lower(&kqr, 128).map(|r| {
            let krq = Float::with_val(128, params.k() as u64 * params.rqn() / params.n() as u64);
            let direct = Float::with_val(128, &r.alpha - &krq) / &r.beta + 1u32;
            let d = Float::with_val(128, &direct - &r.d_lower).abs();
            let flag = if r.alpha_hat_positive() { "" } else { " (α̂ ≤ 0: bound vacuous)" };
            (d < 1e-30, format!("d_lower = {}{flag}", sci(&r.d_lower)))
        }),
    ));

    let all_passed = checks.iter().all(|c| c.passed);
    VerifyReport { schema: SCHEMA, params: params.clone(), precision_bits: prec, checks, all_passed }
}
