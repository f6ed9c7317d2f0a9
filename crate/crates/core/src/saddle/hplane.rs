//! The normalised phase function
//! `h(w) = (a+b)(log(w−1) − log(w+1)) + b(log(1+s+w) − log(1+s−w))`,
//! its real part `H`, and the curves on which `H` vanishes.

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{self, BigComplex};

/// `(a, b, s)` with `a > s·b > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseContext {
    a: u32,
    b: u32,
    s: Rational,
}

/// η₀ ∈ (1, 1+s) and η₁ ∈ (1+s, ∞), with ∂H/∂x at each.
#[derive(Debug, Clone)]
pub struct EtaRoots {
    pub eta0: Float,
    pub eta1: Float,
    pub dhdx_eta0: Float,
    pub dhdx_eta1: Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    H,
    F,
}

/// A point on `Y₀` (h-plane) or `Y` (f-plane).
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub x: Float,
    pub y: Float,
    pub plane: Plane,
}

/// Which bank of a cut a boundary solution sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bank {
    Upper,
    Lower,
}

/// One solution of `h(w) = λπi`.
#[derive(Debug, Clone)]
pub struct HSolution {
    pub re: Float,
    pub im: Float,
    pub bank: Option<Bank>,
}

/// The six cases for `h(w) = λπi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HCase {
    /// λ = 0: η₀ and the bank pair −η₀ ± i0.
    Zero,
    /// |λ| = b: ±η₁ on one bank.
    EdgeB,
    /// |λ| = a + b: ±i0.
    EdgeAB,
    /// b < |λ| < a + b: one point on the imaginary axis.
    Imaginary,
    /// 0 < |λ| < b: a pair symmetric about Re w = 0.
    Pair,
    /// |λ| > a + b.
    Empty,
}

#[derive(Debug, Clone)]
pub struct HSolutionSet {
    pub lambda: f64,
    pub case: HCase,
    pub points: Vec<HSolution>,
}

impl PhaseContext {
    pub fn new(a: u32, b: u32, s: Rational) -> Result<Self> {
        if b == 0 || s <= 0 {
            return Err(Error::InvalidInput("need b > 0 and s > 0".into()));
        }
        if Rational::from(a) <= Rational::from(&s * b) {
            return Err(Error::InvalidInput(format!("need a > s·b, got a = {a}, b = {b}, s = {s}")));
        }
        Ok(PhaseContext { a, b, s })
    }

    pub fn a(&self) -> u32 {
        self.a
    }
    pub fn b(&self) -> u32 {
        self.b
    }
    pub fn s(&self) -> &Rational {
        &self.s
    }

    fn s_f(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.s)
    }

    /// `h(w)` with principal logarithms. On a cut the sign of the zero
    /// imaginary part picks the bank.
    pub fn h(&self, w: &BigComplex) -> BigComplex {
        let p = w.prec();
        let one_s = self.s_f(p) + 1u32;
        let l1 = w.add_i64(-1).ln();
        let l2 = w.add_i64(1).ln();
        let l3 = w.add_real(&one_s).ln();
        let l4 = w.neg().add_real(&one_s).ln();
        l1.sub(&l2).scale_i64((self.a + self.b) as i64).add(&l3.sub(&l4).scale_i64(self.b as i64))
    }

    /// `h′(w)`.
    pub fn h_prime(&self, w: &BigComplex) -> BigComplex {
        let p = w.prec();
        let one_s = self.s_f(p) + 1u32;
        let t1 = w.add_i64(-1).recip().sub(&w.add_i64(1).recip());
        let t2 = w.add_real(&one_s).recip().add(&w.neg().add_real(&one_s).recip());
        t1.scale_i64((self.a + self.b) as i64).add(&t2.scale_i64(self.b as i64))
    }

    /// The four squared distances `|w−1|², |w+1|², |w−1−s|², |w+1+s|²`.
    fn dists(&self, x: &Float, y: &Float) -> [Float; 4] {
        let p = x.prec().max(y.prec());
        let y2 = Float::with_val(p, y.square_ref());
        let one_s = self.s_f(p) + 1u32;
        let sq = |c: &Float| {
            let d = Float::with_val(p, x - c);
            Float::with_val(p, d.square_ref()) + &y2
        };
        [
            sq(&Float::with_val(p, 1)),
            sq(&Float::with_val(p, -1)),
            sq(&one_s),
            sq(&Float::with_val(p, -&one_s)),
        ]
    }

    /// `H(x, y) = Re h(x+iy)` extended to ±∞ at `x = ±1, ±(1+s), y = 0`.
    pub fn big_h(&self, x: &Float, y: &Float) -> Float {
        let [dm1, dp1, dms, dps] = self.dists(x, y);
        let p = dm1.prec();
        let t1 = Float::with_val(p, &dm1 / &dp1).ln() * (self.a + self.b);
        let t2 = Float::with_val(p, &dps / &dms).ln() * self.b;
        (t1 + t2) / 2u32
    }

    /// `∂H/∂x`.
    pub fn dh_dx(&self, x: &Float, y: &Float) -> Float {
        let [dm1, dp1, dms, dps] = self.dists(x, y);
        let p = dm1.prec();
        let one_s = self.s_f(p) + 1u32;
        let xm1 = Float::with_val(p, x - 1u32);
        let xp1 = Float::with_val(p, x + 1u32);
        let xms = Float::with_val(p, x - &one_s);
        let xps = Float::with_val(p, x + &one_s);
        let t1 = xm1 / dm1 - xp1 / dp1;
        let t2 = xps / dps - xms / dms;
        t1 * (self.a + self.b) + t2 * self.b
    }

    /// `∂H/∂y`.
    pub fn dh_dy(&self, x: &Float, y: &Float) -> Float {
        let [dm1, dp1, dms, dps] = self.dists(x, y);
        let p = dm1.prec();
        let t1 = Float::with_val(p, 1u32 / dm1) - Float::with_val(p, 1u32 / dp1);
        let t2 = Float::with_val(p, 1u32 / dps) - Float::with_val(p, 1u32 / dms);
        (t1 * (self.a + self.b) + t2 * self.b) * y
    }

    /// Both zeros of `H(·, 0)` on the positive axis, by bisection.
    pub fn eta_roots(&self, prec: u32) -> Result<EtaRoots> {
        let zero = Float::new(prec);
        let hx = |x: &Float| self.big_h(x, &zero);
        let one_s = self.s_f(prec) + 1u32;

        let eta0 = bisect(prec, Float::with_val(prec, 1), one_s.clone(), &hx, 1)
            .ok_or_else(|| Error::Bracketing("H(x,0) has no sign change on (1, 1+s)".into()))?;

        // H(x,0) → 0⁻ as x → ∞; double until negative.
        let mut hi = Float::with_val(prec, &one_s * 2u32);
        let mut tries = 0;
        while hx(&hi) >= 0 {
            hi *= 2u32;
            tries += 1;
            if tries > 200 {
                return Err(Error::Bracketing("H(x,0) stays nonnegative beyond 1+s".into()));
            }
        }
        let eta1 = bisect(prec, one_s, hi, &hx, -1)
            .ok_or_else(|| Error::Bracketing("H(x,0) has no sign change on (1+s, ∞)".into()))?;

        let dhdx_eta0 = self.dh_dx(&eta0, &zero);
        let dhdx_eta1 = self.dh_dx(&eta1, &zero);
        if dhdx_eta0 <= 0 || dhdx_eta1 >= 0 {
            return Err(Error::Bracketing(format!(
                "derivative signs at η: {} and {}",
                dhdx_eta0.to_f64(),
                dhdx_eta1.to_f64()
            )));
        }
        Ok(EtaRoots { eta0, eta1, dhdx_eta0, dhdx_eta1 })
    }

    /// `Y₀(x)`: the positive zero of `H(x, ·)` for η₀ < x < η₁.
    pub fn y0(&self, x: &Float, etas: &EtaRoots) -> Result<Float> {
        let prec = x.prec();
        if *x <= etas.eta0 || *x >= etas.eta1 {
            return Err(Error::InvalidInput(format!("x = {} outside (η₀, η₁)", x.to_f64())));
        }
        let zero = Float::new(prec);
        if self.big_h(x, &zero) <= 0 {
            return Err(Error::Bracketing(format!("H({}, 0) ≤ 0 inside (η₀, η₁)", x.to_f64())));
        }
        let hy = |y: &Float| self.big_h(x, y);
        let mut hi = Float::with_val(prec, 1);
        let mut tries = 0;
        while hy(&hi) >= 0 {
            hi *= 2u32;
            tries += 1;
            if tries > 200 {
                return Err(Error::Bracketing("H(x, y) stays nonnegative for large y".into()));
            }
        }
        let y = bisect(prec, zero, hi, &hy, -1)
            .ok_or_else(|| Error::Bracketing("no sign change of H(x, ·)".into()))?;
        if self.dh_dy(x, &y) >= 0 {
            return Err(Error::Bracketing(format!("∂H/∂y ≥ 0 at x = {}", x.to_f64())));
        }
        Ok(y)
    }

    /// `Y₀` on `m` equispaced interior points of (η₀, η₁).
    pub fn y0_scan(&self, etas: &EtaRoots, m: usize) -> Result<Vec<CurvePoint>> {
        use rayon::prelude::*;
        let prec = etas.eta0.prec();
        let width = Float::with_val(prec, &etas.eta1 - &etas.eta0);
        (1..=m)
            .into_par_iter()
            .map(|i| {
                let x = Float::with_val(prec, &width * (i as f64 / (m + 1) as f64)) + &etas.eta0;
                let y = self.y0(&x, etas)?;
                Ok(CurvePoint { x, y, plane: Plane::H })
            })
            .collect()
    }

    /// `Im h(x + iY₀(x))`.
    pub fn im_h_on_curve(&self, pt: &CurvePoint) -> Float {
        self.h(&BigComplex::new(pt.x.clone(), pt.y.clone())).im
    }

    /// `Im h(iy)` through the principal logarithms.
    pub fn im_h_imag_axis(&self, y: &Float) -> Float {
        self.h(&BigComplex::new(Float::new(y.prec()), y.clone())).im
    }

    /// `Im h(iy)` on a grid of `y > 0`, in grid order.
    pub fn imag_axis_scan(&self, grid: &[Float]) -> Vec<(Float, Float)> {
        use rayon::prelude::*;
        grid.par_iter().map(|y| (y.clone(), self.im_h_imag_axis(y))).collect()
    }

    /// Classifies and solves `h(w) = λπi`.
    pub fn solve_h(&self, lambda: f64, prec: u32) -> Result<HSolutionSet> {
        let (a, b) = (self.a as f64, self.b as f64);
        let mag = lambda.abs();
        let sign_bank = if lambda > 0.0 { Bank::Upper } else { Bank::Lower };
        let mut points = Vec::new();
        let case = if lambda == 0.0 {
            let e = self.eta_roots(prec)?;
            points.push(HSolution { re: e.eta0.clone(), im: Float::new(prec), bank: None });
            for bank in [Bank::Upper, Bank::Lower] {
                points.push(HSolution { re: -e.eta0.clone(), im: Float::new(prec), bank: Some(bank) });
            }
            HCase::Zero
        } else if mag == b {
            let e = self.eta_roots(prec)?;
            for re in [e.eta1.clone(), -e.eta1.clone()] {
                points.push(HSolution { re, im: Float::new(prec), bank: Some(sign_bank) });
            }
            HCase::EdgeB
        } else if mag == a + b {
            points.push(HSolution { re: Float::new(prec), im: Float::new(prec), bank: Some(sign_bank) });
            HCase::EdgeAB
        } else if mag > a + b {
            HCase::Empty
        } else if mag > b {
            // Im h(iy) decreases from (a+b)π to bπ.
            let target = num::pi(prec) * mag;
            let f = |y: &Float| self.im_h_imag_axis(y) - &target;
            let mut hi = Float::with_val(prec, 1);
            while f(&hi) > 0 {
                hi *= 2u32;
            }
            let y = bisect(prec, Float::new(prec), hi, &f, -1)
                .ok_or_else(|| Error::Bracketing("Im h(iy) = λπ not bracketed".into()))?;
            let y = if lambda > 0.0 { y } else { -y };
            points.push(HSolution { re: Float::new(prec), im: y, bank: None });
            HCase::Imaginary
        } else {
            let w = self.solve_on_curve(mag, prec)?;
            let im = if lambda > 0.0 { w.im.clone() } else { -w.im.clone() };
            points.push(HSolution { re: w.re.clone(), im: im.clone(), bank: None });
            points.push(HSolution { re: -w.re, im, bank: None });
            HCase::Pair
        };
        Ok(HSolutionSet { lambda, case, points })
    }

    /// The point `x + iY₀(x)` with `Im h = λπ`, `0 < λ < b`: a coarse
    /// bisection along the curve, then Newton on `h` itself.
    fn solve_on_curve(&self, lambda: f64, prec: u32) -> Result<BigComplex> {
        let coarse = 64.min(prec);
        let etas = self.eta_roots(coarse.max(64))?;
        let target = num::pi(coarse) * lambda;
        let f = |x: &Float| -> Float {
            match self.y0(x, &etas) {
                Ok(y) => self.im_h_on_curve(&CurvePoint { x: x.clone(), y, plane: Plane::H }) - &target,
                Err(_) => Float::with_val(coarse, f64::NAN),
            }
        };
        let mut lo = etas.eta0.clone();
        let mut hi = etas.eta1.clone();
        for _ in 0..40 {
            let mid = Float::with_val(coarse, &lo + &hi) / 2u32;
            let v = f(&mid);
            if v.is_nan() {
                return Err(Error::Bracketing("curve evaluation failed".into()));
            }
            if v < 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = Float::with_val(prec, &lo + &hi) / 2u32;
        let y = self.y0(&Float::with_val(coarse, &x), &etas)?;
        let mut w = BigComplex::new(x, Float::with_val(prec, &y));
        let rhs = BigComplex::new(Float::new(prec), num::pi(prec) * lambda);
        for _ in 0..200 {
            let step = self.h(&w).sub(&rhs).div(&self.h_prime(&w));
            w = w.sub(&step);
            if step.abs() < num::pow2(64, 16 - prec as i64) {
                return Ok(w);
            }
        }
        Err(Error::StrategyFailure {
            strategy: "newton".into(),
            diagnostics: format!("h(w) = {lambda}πi did not converge"),
        })
    }
}

/// Bisection for a sign change of `f` on `(lo, hi)`. `dir = +1` means
/// `f` goes from negative to positive. The endpoints themselves are never
/// evaluated (they may be singular). Stops at the working precision.
fn bisect<F>(prec: u32, mut lo: Float, mut hi: Float, f: &F, dir: i32) -> Option<Float>
where
    F: Fn(&Float) -> Float,
{
    let mut last = None;
    for _ in 0..(prec as usize + 64) {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        if mid == lo || mid == hi {
            break;
        }
        let v = f(&mid);
        if v.is_nan() {
            return None;
        }
        let below = if dir > 0 { v < 0 } else { v > 0 };
        if below {
            lo = mid.clone();
        } else {
            hi = mid.clone();
        }
        last = Some(mid);
    }
    last
}

/// Whether `v` rises to a single maximum then falls (no interior dips).
pub fn is_unimodal(v: &[f64]) -> bool {
    let mut falling = false;
    for w in v.windows(2) {
        if w[1] > w[0] {
            if falling {
                return false;
            }
        } else if w[1] < w[0] {
            falling = true;
        } else {
            return false;
        }
    }
    true
}

pub fn strictly_increasing(v: &[Float]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

pub fn strictly_decreasing(v: &[Float]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `x,y` rows for external plotting.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        s.push_str(&num::to_decimal_digits(&p.x, 20));
        s.push(',');
        s.push_str(&num::to_decimal_digits(&p.y, 20));
        s.push('\n');
    }
    s
}
