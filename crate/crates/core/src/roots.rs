//! Bracketed solvers for the implicit constants of the deviation bounds.
//!
//! Every solver bisects on an analytic bracket, so convergence does not
//! depend on a starting guess. Equations whose raw form is badly conditioned
//! at large arguments (`e^u ≈ c·u`) are bisected in logarithmic form; the raw
//! residual helpers are still exported for re-substitution checks.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            abs_tol: 1e-13,
            max_iter: 200,
        }
    }
}

impl RootConfig {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::param("abs_tol", abs_tol, "must be positive"));
        }
        if max_iter == 0 {
            return Err(Error::param("max_iter", 0.0, "must be at least 1"));
        }
        Ok(RootConfig { abs_tol, max_iter })
    }
}

/// Bisection on `[lo, hi]`; `f(lo)` and `f(hi)` must have opposite signs.
///
/// Runs until the bracket collapses to adjacent floats or `f` vanishes, and
/// returns the endpoint with the smaller residual. Fails only if `max_iter`
/// is exhausted while the residual is still above `abs_tol`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo}, {hi}] (f = {flo}, {fhi})"
        )));
    }
    let mut fhi = fhi;
    for _ in 0..cfg.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let (best, residual) = if flo.abs() <= fhi.abs() {
        (lo, flo)
    } else {
        (hi, fhi)
    };
    let collapsed = lo + 0.5 * (hi - lo) <= lo || lo + 0.5 * (hi - lo) >= hi;
    if collapsed || residual.abs() < cfg.abs_tol {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            iterations: cfg.max_iter,
            residual: residual.abs(),
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", alpha, "must lie in (0, 2)"))
    }
}

fn check_n(n: u32) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::param("n", n as f64, "must be at least 2"))
    }
}

/// `δ(n−1)/(2−α)`, the slope in `e^u − 1 = c·u`.
pub fn un_coefficient(n: u32, alpha: f64, delta: f64) -> f64 {
    delta * (n as f64 - 1.0) / (2.0 - alpha)
}

/// Raw residual `e^u − 1 − c·u`.
pub fn un_residual(u: f64, n: u32, alpha: f64, delta: f64) -> f64 {
    u.exp_m1() - un_coefficient(n, alpha, delta) * u
}

/// Residual of the equivalent form `u − ln(1 + c·u)`.
pub fn un_log_residual(u: f64, n: u32, alpha: f64, delta: f64) -> f64 {
    u - (un_coefficient(n, alpha, delta) * u).ln_1p()
}

/// Positive root `u_n(α, δ)` of `e^u − 1 − δ(n−1)u/(2−α) = 0`.
pub fn solve_un(n: u32, alpha: f64, delta: f64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    if !(delta > 0.0) {
        return Err(Error::param("delta", delta, "must be positive"));
    }
    let c = un_coefficient(n, alpha, delta);
    if c <= 1.0 {
        return Err(Error::NoRoot(format!(
            "δ(n−1)/(2−α) = {c} ≤ 1: e^u − 1 − c·u has no positive root"
        )));
    }
    // g(ln c) < 0 for c > 1 and g(2 ln c + 2) > 0.
    let lo = c.ln();
    let hi = 2.0 * lo + 2.0;
    bisect(
        |u| un_log_residual(u, n, alpha, delta),
        lo,
        hi,
        &RootConfig::default(),
    )
}

/// Which term attains the minimum in `u_n^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UStarArgmin {
    ExponentialRoot,
    Taylor(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UStarResult {
    pub u_star: f64,
    pub argmin: UStarArgmin,
    pub u_n: f64,
    pub k_candidates: Vec<(u32, f64)>,
}

/// `u_k(α) = (k!·δ(n−1)(k+1−α)/((n−k)(2−α)))^{1/(k−1)}`, computed in logs.
pub fn u_k(k: u32, n: u32, alpha: f64, delta: f64) -> f64 {
    let kf = k as f64;
    let nf = n as f64;
    let log_arg = ln_gamma(kf + 1.0) + (delta * (nf - 1.0) * (kf + 1.0 - alpha)).ln()
        - ((nf - kf) * (2.0 - alpha)).ln();
    (log_arg / (kf - 1.0)).exp()
}

/// `u_n^*(α, δ) = u_n(α, δ) ∧ min_{1<k<(n−1+α)/2} u_k(α)` over integer `k`.
pub fn solve_u_star(n: u32, alpha: f64, delta: f64) -> Result<UStarResult> {
    let u_n = solve_un(n, alpha, delta)?;
    let k_limit = (n as f64 - 1.0 + alpha) / 2.0;
    let k_candidates: Vec<(u32, f64)> = (2..n)
        .take_while(|&k| (k as f64) < k_limit)
        .map(|k| (k, u_k(k, n, alpha, delta)))
        .collect();
    let mut u_star = u_n;
    let mut argmin = UStarArgmin::ExponentialRoot;
    for &(k, v) in &k_candidates {
        if v < u_star {
            u_star = v;
            argmin = UStarArgmin::Taylor(k);
        }
    }
    Ok(UStarResult {
        u_star,
        argmin,
        u_n,
        k_candidates,
    })
}

/// The two positive roots of `h(u) = e^u − A·u`, `A = 2n_δαε/(2−α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HRoots {
    pub u1: f64,
    pub u2: f64,
    /// Location of the minimum, `ln A`.
    pub u0: f64,
    pub slope: f64,
}

pub fn h_slope(n_delta: f64, alpha: f64, eps: f64) -> f64 {
    2.0 * n_delta * alpha * eps / (2.0 - alpha)
}

/// Smallest admissible ε (exclusive): `(2−α)e/(2αn_δ)`.
pub fn h_eps_threshold(n_delta: f64, alpha: f64) -> f64 {
    (2.0 - alpha) * std::f64::consts::E / (2.0 * alpha * n_delta)
}

pub fn h_residual(u: f64, slope: f64) -> f64 {
    u.exp() - slope * u
}

pub fn solve_h_roots(n_delta: f64, alpha: f64, eps: f64) -> Result<HRoots> {
    check_alpha(alpha)?;
    if !(n_delta >= 1.0) {
        return Err(Error::param("n_delta", n_delta, "must be at least 1"));
    }
    let threshold = h_eps_threshold(n_delta, alpha);
    let slope = h_slope(n_delta, alpha, eps);
    if !(eps > threshold) || slope <= std::f64::consts::E {
        return Err(Error::param(
            "eps",
            eps,
            format!("must exceed (2−α)e/(2αn_δ) = {threshold}; h has no two distinct roots"),
        ));
    }
    // φ(u) = u − ln(A·u) has the same roots and is +∞ at 0, negative at ln A.
    let phi = |u: f64| u - (slope * u).ln();
    let u0 = slope.ln();
    let cfg = RootConfig::default();
    let u1 = bisect(phi, 0.0, u0, &cfg)?;
    let u2 = bisect(phi, u0, 2.0 * u0 + 5.0, &cfg)?;
    Ok(HRoots { u1, u2, u0, slope })
}

pub fn delta0_residual(delta: f64, n: u32, alpha: f64) -> f64 {
    -delta * (0.5 - delta).ln() - (2.0 - alpha) / (2.0 * n as f64 * alpha)
}

/// Unique `δ₀ ∈ (0, 1/2)` with `(2−α)/(2nα) = δ·ln(1/(1/2 − δ))`.
pub fn solve_delta0(n: u32, alpha: f64) -> Result<f64> {
    check_n(n)?;
    check_alpha(alpha)?;
    let d = bisect(
        |d| delta0_residual(d, n, alpha),
        0.0,
        0.5,
        &RootConfig::default(),
    )?;
    if d > 0.0 && d < 0.5 {
        Ok(d)
    } else {
        Err(Error::NonConvergence {
            iterations: RootConfig::default().max_iter,
            residual: delta0_residual(d, n, alpha).abs(),
        })
    }
}

const THETA_DOMAIN_SLACK: f64 = 1e-12;

/// `θ(u) = u^{1/α}(1 + σ̄/((α−1)u))`, increasing on `[σ̄, ∞)`.
pub fn theta(u: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::param("alpha", alpha, "θ requires 1 < alpha < 2"));
    }
    if !(u >= sigma_bar * (1.0 - THETA_DOMAIN_SLACK)) {
        return Err(Error::param(
            "u",
            u,
            format!("θ is a bijection only on [σ̄, ∞) = [{sigma_bar}, ∞)"),
        ));
    }
    Ok(theta_unchecked(u, alpha, sigma_bar))
}

pub(crate) fn theta_unchecked(u: f64, alpha: f64, sigma_bar: f64) -> f64 {
    u.powf(1.0 / alpha) * (1.0 + sigma_bar / ((alpha - 1.0) * u))
}

/// `θ(σ̄) = ασ̄^{1/α}/(α−1)`.
pub fn theta_floor(alpha: f64, sigma_bar: f64) -> f64 {
    alpha * sigma_bar.powf(1.0 / alpha) / (alpha - 1.0)
}

pub fn theta_inverse(x: f64, alpha: f64, sigma_bar: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::param("alpha", alpha, "θ requires 1 < alpha < 2"));
    }
    let floor = theta_floor(alpha, sigma_bar);
    if !(x >= floor * (1.0 - THETA_DOMAIN_SLACK)) {
        return Err(Error::param(
            "x",
            x,
            format!("θ⁻¹ is defined on [{floor}, ∞)"),
        ));
    }
    if x <= floor {
        return Ok(sigma_bar);
    }
    // θ(u) ≥ u^{1/α}, so θ(x^α) ≥ x.
    let hi = x.powf(alpha).max(sigma_bar);
    bisect(
        |u| theta_unchecked(u, alpha, sigma_bar) - x,
        sigma_bar,
        hi,
        &RootConfig::default(),
    )
}

pub fn u0_residual(u: f64, c1: f64, b: f64) -> f64 {
    (-c1 * u).exp() + b * u - 1.0
}

/// `(1/c₁)·ln(c₁/b)`, a lower bound for the positive root of
/// `exp(−c₁u) + b·u = 1` (`None` unless `c₁ > b`).
pub fn u0_lower_bound(c1: f64, b: f64) -> Option<f64> {
    (c1 > b).then(|| (c1 / b).ln() / c1)
}

/// Positive root of `exp(−c₁u) + b·u = 1`; requires `c₁ > b > 0`.
pub fn solve_u0(c1: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::param("b", b, "must be positive"));
    }
    let lo = u0_lower_bound(c1, b).ok_or_else(|| {
        Error::NoRoot(format!(
            "c₁ = {c1} ≤ σ̄/α = {b}: exp(−c₁u) + (σ̄/α)u = 1 has no positive root"
        ))
    })?;
    let hi = 1.0 / b;
    bisect(|u| u0_residual(u, c1, b), lo, hi, &RootConfig::default())
}

/// `c₁ = (2−α)(λ − σ̄/(α−1))² / (2nσ̄^{1/(α−1)})`.
pub fn small_x_rate(n: u32, alpha: f64, lambda: f64, sigma_bar: f64) -> f64 {
    let shifted = lambda - sigma_bar / (alpha - 1.0);
    (2.0 - alpha) * shifted * shifted / (2.0 * n as f64 * sigma_bar.powf(1.0 / (alpha - 1.0)))
}

/// `u₀(n, α, λ)`: root of `exp(−c₁u) + (σ̄/α)u = 1`.
pub fn solve_u0_lambda(n: u32, alpha: f64, lambda: f64, sigma_bar: f64) -> Result<f64> {
    check_n(n)?;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::param("alpha", alpha, "requires 1 < alpha < 2"));
    }
    if !(lambda > sigma_bar / (alpha - 1.0)) {
        return Err(Error::param(
            "lambda",
            lambda,
            "must exceed σ̄/(α−1)",
        ));
    }
    solve_u0(small_x_rate(n, alpha, lambda, sigma_bar), sigma_bar / alpha)
}
