//! Exact entropy-integral Chernoff bound for the truncated vector, used as the
//! sharp reference every closed-form lemma bound must dominate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{StableModel, TruncationLevel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HRCurve {
    r: f64,
    sigma_bar: f64,
    alpha: f64,
}

const SERIES_MAX_TERMS: usize = 100_000;

impl HRCurve {
    pub fn new(r: f64, sigma_bar: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(
                "R",
                r,
                "must be finite and positive: without truncation the exponential moment is infinite",
            ));
        }
        if !(sigma_bar > 0.0) {
            return Err(Error::param("sigma_bar", sigma_bar, "must be positive"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param("alpha", alpha, "must lie in (0, 2)"));
        }
        Ok(HRCurve {
            r,
            sigma_bar,
            alpha,
        })
    }

    pub fn from_model(model: &StableModel, r: TruncationLevel) -> Result<Self> {
        HRCurve::new(r.get(), model.sigma_bar(), model.alpha())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `h_R'(0) = σ̄R^{2−α}/(2−α)`.
    pub fn slope_at_zero(&self) -> f64 {
        self.sigma_bar * self.r.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// `σ̄·Σ_{k≥1} s^k R^{k+1−α}/(k!(k+1−α))`, with the number of terms used.
    pub fn eval_with_terms(&self, s: f64) -> Result<(f64, usize)> {
        if !(s >= 0.0) {
            return Err(Error::param("s", s, "must be non-negative"));
        }
        if s == 0.0 {
            return Ok((0.0, 0));
        }
        let sr = s * self.r;
        let mut pw = self.r.powf(1.0 - self.alpha);
        let mut sum = 0.0;
        for k in 1..=SERIES_MAX_TERMS {
            let kf = k as f64;
            pw *= sr / kf;
            let term = pw / (kf + 1.0 - self.alpha);
            sum += term;
            if kf > sr && term < 1e-17 * sum {
                return Ok((self.sigma_bar * sum, k));
            }
            if !sum.is_finite() {
                break;
            }
        }
        Err(Error::NonConvergence {
            iterations: SERIES_MAX_TERMS,
            residual: f64::INFINITY,
        })
    }

    pub fn h(&self, s: f64) -> Result<f64> {
        Ok(self.eval_with_terms(s)?.0)
    }

    /// `h_R^{-1}(t)` by bisection below `t/h'(0)`.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::param("t", t, "must be non-negative"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        // h(s) ≥ h'(0)·s by convexity, so the root is below t/h'(0). That cap
        // can sit far out where h overflows, so grow up to it by doubling.
        let cap = t / self.slope_at_zero();
        let mut lo = 0.0;
        let mut hi = cap.min(1.0 / self.r);
        while hi < cap && self.h(hi)? < t {
            lo = hi;
            hi = (2.0 * hi).min(cap);
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.h(mid)? < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `∫₀ᴿ (e^{sr} − 1) r^{−α} dr · σ̄` by quadrature, substituting
    /// `r = R·w^{2/(2−α)}` to remove the singularity at 0.
    pub fn h_quadrature(&self, s: f64) -> f64 {
        let m = 2.0 / (2.0 - self.alpha);
        let (r, a) = (self.r, self.alpha);
        let f = |w: f64| {
            if w == 0.0 {
                return 0.0;
            }
            let rad = r * w.powf(m);
            (s * rad).exp_m1() * rad.powf(-a) * r * m * w.powf(m - 1.0)
        };
        // A coarse pass fixes the scale so the tolerance stays relative.
        let coarse: f64 = (0..256)
            .map(|i| {
                let (a, b) = (i as f64 / 256.0, (i + 1) as f64 / 256.0);
                (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
            })
            .sum();
        self.sigma_bar * adaptive_simpson(&f, 0.0, 1.0, 1e-13 * coarse.abs(), 40)
    }
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

pub fn h_r(s: f64, curve: &HRCurve) -> Result<f64> {
    curve.h(s)
}

/// `∫₀ˣ h_R^{-1}(t) dt`, relative tolerance about 1e−8.
pub fn entropy_integral(x: f64, curve: &HRCurve) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::param("x", x, "must be non-negative"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // h^{-1}(t) ≤ t/h'(0) gives a scale for the absolute tolerance.
    let scale = 0.5 * x * x / curve.slope_at_zero();
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| match curve.inverse(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let v = adaptive_simpson(&f, 0.0, x, 1e-9 * scale, 40);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `exp(−∫₀ˣ h_R^{-1})`.
pub fn chernoff_bound(x: f64, curve: &HRCurve) -> Result<f64> {
    Ok((-entropy_integral(x, curve)?).exp())
}
