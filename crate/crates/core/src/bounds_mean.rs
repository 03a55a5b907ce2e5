//! Mean-centred deviation certificates for 1-Lipschitz functions of a stable
//! vector: the truncated lemma, the small-x regimes and the two intermediate
//! regimes, plus the regime envelope and the Gaussian-limit diagnostics.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::certificate::{BoundCertificate, BoundCurve, BoundQuery, Interval, Regime};
use crate::error::{Error, Result};
use crate::levy::{mean_norm_bounds_raw, norm, tail_mass, StableModel, TruncationLevel};
use crate::roots::{self, solve_h_roots, solve_u0, solve_u_star, u0_lower_bound, RootConfig};
use crate::sampler::{sample_z_r_nonzero, RngStream};

/// A certificate together with its value at a queried point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluated {
    pub certificate: BoundCertificate,
    pub query: BoundQuery,
}

impl Evaluated {
    fn at(certificate: BoundCertificate, x: f64) -> Self {
        let query = certificate.query(x);
        Evaluated { certificate, query }
    }
}

pub fn n_delta(n: u32, delta: f64) -> f64 {
    1.0 + delta * (n as f64 - 1.0)
}

fn check_n(n: u32) -> Result<()> {
    if n >= 2 {
        Ok(())
    } else {
        Err(Error::param("n", n as f64, "must be at least 2"))
    }
}

/// `u_n^*(α, δ)`, or NaN when `δ(n−1)/(2−α) ≤ 1` leaves it undefined.
fn u_star_or_nan(n: u32, alpha: f64, delta: f64) -> Result<f64> {
    match solve_u_star(n, alpha, delta) {
        Ok(r) => Ok(r.u_star),
        Err(Error::NoRoot(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

pub fn truncated_lipschitz_certificate(
    r: TruncationLevel,
    n: u32,
    delta: f64,
    model: &StableModel,
) -> Result<BoundCertificate> {
    model.require_alpha_above_one()?;
    check_n(n)?;
    if !r.is_finite() {
        return Err(Error::param("R", r.get(), "must be finite"));
    }
    let (alpha, s, rr) = (model.alpha(), model.sigma_bar(), r.get());
    let nd = n_delta(n, delta);
    let us = solve_u_star(n, alpha, delta)?;
    let x0 = nd * s * rr.powf(1.0 - alpha) * us.u_star / (2.0 - alpha);
    let coef = (2.0 - alpha) / (2.0 * nd * s * rr.powf(2.0 - alpha));
    Ok(BoundCertificate::new(
        Regime::TruncatedLemma,
        Interval::left_open(0.0, x0),
        BoundCurve::Quadratic { coef },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", n as f64)
    .with_param("delta", delta)
    .with_param("n_delta", nd)
    .with_param("R", rr)
    .with_param("u_n", us.u_n)
    .with_param("u_star", us.u_star)
    .with_param("x0", x0))
}

/// Bound on `P(f(Y_R) − E f(Y_R) ≥ x)` for the truncated vector.
pub fn truncated_lipschitz_bound(
    x: f64,
    r: TruncationLevel,
    n: u32,
    delta: f64,
    model: &StableModel,
) -> Result<Evaluated> {
    Ok(Evaluated::at(truncated_lipschitz_certificate(r, n, delta, model)?, x))
}

/// Admissible λ-window of the small-x regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallXParams {
    pub n: u32,
    pub lambda: f64,
    pub lambda_window: Interval,
    pub lambda0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaWindow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda0: f64,
    pub u_star: f64,
}

impl LambdaWindow {
    pub fn interval(&self) -> Interval {
        Interval::open(self.lambda1, self.lambda2)
    }

    /// `λ₁ + q(λ₂ − λ₁)`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.lambda1 + q * (self.lambda2 - self.lambda1)
    }

    pub fn midpoint(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// `2(2−α)σ̄^{(2−α)/(α−1)}/(αn) < (u_n^*)²`, under which the λ-window is non-empty.
pub fn small_x_feasible(n: u32, model: &StableModel) -> Result<bool> {
    let w = lambda_window_unchecked(n, model)?;
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let lhs = 2.0 * (2.0 - alpha) * s.powf((2.0 - alpha) / (alpha - 1.0)) / (alpha * n as f64);
    Ok(lhs < w.u_star * w.u_star)
}

fn lambda_window_unchecked(n: u32, model: &StableModel) -> Result<LambdaWindow> {
    model.require_alpha_above_one()?;
    check_n(n)?;
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let nf = n as f64;
    let u_star = solve_u_star(n, alpha, 1.0)?.u_star;
    let base = s / (alpha - 1.0);
    let lambda1 = base
        * (1.0
            + (2.0 * (alpha - 1.0).powi(2) * nf * s.powf((2.0 - alpha) / (alpha - 1.0))
                / (alpha * (2.0 - alpha)))
                .sqrt());
    let lambda2 = base * (1.0 + (alpha - 1.0) / (2.0 - alpha) * nf * u_star);
    let lambda0 = alpha * s / ((2.0 - alpha) * (alpha - 1.0));
    Ok(LambdaWindow {
        lambda1,
        lambda2,
        lambda0,
        u_star,
    })
}

/// The open λ-window `(λ₁, λ₂)`; errors when it is empty.
pub fn lambda_window(n: u32, model: &StableModel) -> Result<LambdaWindow> {
    let w = lambda_window_unchecked(n, model)?;
    if !small_x_feasible(n, model)? || !(w.lambda1 < w.lambda2) {
        return Err(Error::Inapplicable(format!(
            "small-x λ-window ({}, {}) is empty for n = {n}",
            w.lambda1, w.lambda2
        )));
    }
    Ok(w)
}

fn small_x_certificate_tagged(
    n: u32,
    lambda: f64,
    model: &StableModel,
    regime: Regime,
) -> Result<BoundCertificate> {
    let w = lambda_window(n, model)?;
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    if !(lambda >= w.lambda1 && lambda < w.lambda2) {
        return Err(Error::param(
            "lambda",
            lambda,
            format!("must lie in the window [{}, {})", w.lambda1, w.lambda2),
        ));
    }
    let c1 = roots::small_x_rate(n, alpha, lambda, s);
    let b = s / alpha;
    let p = alpha / (alpha - 1.0);
    let base = BoundCertificate::new(
        regime,
        Interval::empty(),
        BoundCurve::SmallX {
            lambda,
            c1,
            b,
            p,
            u_cap: u0_lower_bound(c1, b).unwrap_or(0.0),
        },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", n as f64)
    .with_param("lambda", lambda)
    .with_param("lambda1", w.lambda1)
    .with_param("lambda2", w.lambda2)
    .with_param("lambda0", w.lambda0)
    .with_param("u_star", w.u_star)
    .with_param("c1", c1)
    .with_param("b", b);
    // At λ = λ₁ exactly c₁ = σ̄/α and the range collapses to {0}.
    if c1 <= b * (1.0 + 1e-12) {
        return Ok(base
            .with_param("x1", 0.0)
            .with_param("x1_closed_form", 0.0)
            .with_note("λ at the lower window endpoint: the deviation range is empty"));
    }
    let lower = u0_lower_bound(c1, b).expect("c1 > b");
    let u0 = solve_u0(c1, b)?;
    let x1_closed = lambda * lower.powf(1.0 / p);
    let x1 = lambda * u0.powf(1.0 / p);
    let mut cert = base
        .with_param("u0", u0)
        .with_param("u0_lower", lower)
        .with_param("x1", x1)
        .with_param("x1_closed_form", x1_closed);
    cert.valid_x = Interval::left_open(0.0, x1.max(x1_closed));
    Ok(cert)
}

pub fn small_x_certificate(n: u32, lambda: f64, model: &StableModel) -> Result<BoundCertificate> {
    small_x_certificate_tagged(n, lambda, model, Regime::SmallX)
}

pub(crate) fn small_x_certificate_median(
    n: u32,
    lambda: f64,
    model: &StableModel,
) -> Result<BoundCertificate> {
    small_x_certificate_tagged(n, lambda, model, Regime::MedianSmallX)
}

pub fn small_x_bound(x: f64, n: u32, lambda: f64, model: &StableModel) -> Result<Evaluated> {
    Ok(Evaluated::at(small_x_certificate(n, lambda, model)?, x))
}

/// The two additive terms of the small-x bound, before the monotone cap.
pub fn small_x_terms(cert: &BoundCertificate, x: f64) -> Option<(f64, f64)> {
    match cert.curve {
        BoundCurve::SmallX {
            lambda, c1, b, p, ..
        } => {
            let u = (x / lambda).powf(p);
            Some(((-c1 * u).exp(), b * u))
        }
        _ => None,
    }
}

/// Largest relative CI half-width tolerated for the Monte Carlo `E‖Z_R‖`.
pub const PARAMETER_FREE_CI_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
struct MeanNormEstimate {
    mean: f64,
    rel_half_width: f64,
}

/// Monte Carlo `E‖Z_R‖ = P(Z_R ≠ 0)·E[‖Z_R‖ | Z_R ≠ 0]`.
fn estimate_mean_norm(model: &StableModel, r: f64, budget: usize, seed: u64) -> Result<MeanNormEstimate> {
    let tl = TruncationLevel::new(r)?;
    let p = crate::levy::event_probability_from_mass(tail_mass(model, tl));
    let mut rng = RngStream::new(seed, 0x5a52);
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..budget {
        let v = norm(&sample_z_r_nonzero(model, tl, &mut rng)?);
        sum += v;
        sq += v * v;
    }
    let nb = budget as f64;
    let m = sum / nb;
    let var = (sq / nb - m * m).max(0.0) * nb / (nb - 1.0);
    // Student-t so that tiny budgets report honestly wide intervals.
    let q = StudentsT::new(0.0, 1.0, nb - 1.0)
        .map_err(|e| Error::param("mc_budget", nb, e.to_string()))?
        .inverse_cdf(0.995);
    let half = q * (var / nb).sqrt();
    Ok(MeanNormEstimate {
        mean: p * m,
        rel_half_width: half / m,
    })
}

/// Bracket `[R_lo, R_hi]` for `x = α·E‖Z_R‖` from the closed-form sandwich.
pub fn parameter_free_bracket(x: f64, model: &StableModel) -> Result<(f64, f64)> {
    model.require_alpha_above_one()?;
    if !(x > 0.0) {
        return Err(Error::param("x", x, "must be positive"));
    }
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    // α·upper(R) = x.
    let r_hi = (alpha * s / ((alpha - 1.0) * x)).powf(1.0 / (alpha - 1.0));
    // The lower sandwich peaks at R^α = σ̄/(α−1) and decreases afterwards.
    let r_peak = (s / (alpha - 1.0)).powf(1.0 / alpha);
    let g = |r: f64| alpha * mean_norm_bounds_raw(s, alpha, r).lower - x;
    let r_lo = if g(r_peak) >= 0.0 {
        if g(r_hi) >= 0.0 {
            r_hi
        } else {
            roots::bisect(g, r_peak, r_hi, &RootConfig::default())?
        }
    } else {
        r_peak.min(r_hi)
    };
    Ok((r_lo.min(r_hi), r_hi))
}

/// Small-x bound without λ: `R` solves `x = α·E‖Z_R‖` by noisy
/// bisection with a Monte Carlo oracle of `mc_budget` draws per evaluation.
pub fn small_x_bound_parameterfree(
    x: f64,
    n: u32,
    eps: f64,
    model: &StableModel,
    mc_budget: usize,
    seed: u64,
) -> Result<Evaluated> {
    model.require_alpha_above_one()?;
    check_n(n)?;
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let u_star = solve_u_star(n, alpha, 1.0)?.u_star;
    if !(n >= 5 || n as f64 * u_star > 2.0 - alpha) {
        return Err(Error::Inapplicable(format!(
            "needs n ≥ 5 or n·u_n* > 2 − α (n·u_n* = {})",
            n as f64 * u_star
        )));
    }
    if mc_budget < 2 {
        return Err(Error::param("mc_budget", mc_budget as f64, "must be at least 2"));
    }
    let (r_lo0, r_hi0) = parameter_free_bracket(x, model)?;
    let mut worst_ci: f64 = 0.0;
    let mut eval = |r: f64| -> Result<f64> {
        let est = estimate_mean_norm(model, r, mc_budget, seed)?;
        worst_ci = worst_ci.max(est.rel_half_width);
        if est.rel_half_width > PARAMETER_FREE_CI_LIMIT {
            return Err(Error::BudgetTooSmall {
                ci_half_width: est.rel_half_width,
                limit: PARAMETER_FREE_CI_LIMIT,
            });
        }
        Ok(alpha * est.mean - x)
    };
    // Widen downwards until the Monte Carlo oracle crosses x.
    let mut lo = r_lo0;
    let mut f_lo = eval(lo)?;
    let mut widen = 0;
    while f_lo < 0.0 {
        widen += 1;
        if widen > 30 {
            return Err(Error::Inapplicable(format!(
                "α·E‖Z_R‖ stays below x = {x} on the bracket"
            )));
        }
        lo *= 0.5;
        f_lo = eval(lo)?;
    }
    let mut hi = r_hi0.max(lo);
    for _ in 0..60 {
        if hi / lo - 1.0 < 1e-9 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if eval(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = (lo * hi).sqrt();
    let p = alpha / (alpha - 1.0);
    let coef = (2.0 - alpha) * ((alpha - 1.0) / alpha).powf(p) / (2.0 * n as f64 * s.powf(1.0 / (alpha - 1.0)));
    let remainder = s / (alpha * r.powf(alpha));
    let exp_term = (-coef * x.powf(p)).exp();
    let cert = BoundCertificate::new(
        Regime::SmallXParameterFree,
        Interval::closed(x, x),
        BoundCurve::ParameterFree {
            coef,
            p,
            remainder,
        },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", n as f64)
    .with_param("eps", eps)
    .with_param("R", r)
    .with_param("R_lo", r_lo0)
    .with_param("R_hi", r_hi0)
    .with_param("remainder", remainder)
    .with_param("exp_term", exp_term)
    .with_param("eps_dominated", if remainder <= eps * exp_term { 1.0 } else { 0.0 })
    .with_param("mc_budget", mc_budget as f64)
    .with_param("mc_rel_ci_half_width", worst_ci)
    .with_note("the range endpoint x0(n, ε) is not explicit; check eps_dominated for the (1+ε) form");
    Ok(Evaluated::at(cert, x))
}

/// Smallest admissible ε for the first intermediate regime (exclusive).
pub fn v1_eps_threshold(n: u32, delta: f64, alpha: f64) -> f64 {
    roots::h_eps_threshold(n_delta(n, delta), alpha)
}

/// Smallest admissible ε for the second intermediate regime (inclusive).
pub fn v2_eps_threshold(n: u32, alpha: f64) -> f64 {
    std::f64::consts::E * (2.0 - alpha) / (2.0 * n as f64 * alpha)
}

pub const AUTO_EPS_FACTOR: f64 = 1.05;

pub fn intermediate_v1_certificate(
    n: u32,
    delta: f64,
    eps: f64,
    model: &StableModel,
) -> Result<BoundCertificate> {
    model.require_alpha_above_one()?;
    check_n(n)?;
    if !(delta > 0.0) {
        return Err(Error::param("delta", delta, "must be positive"));
    }
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let nd = n_delta(n, delta);
    let h = solve_h_roots(nd, alpha, eps)?;
    let u_star = u_star_or_nan(n, alpha, delta)?;
    let k = 2.0 * nd * s / (2.0 - alpha);
    let divisor = 1.0 + (2.0 - alpha) / (2.0 * nd * (alpha - 1.0) * h.u1);
    let lo = (k * h.u1).powf(1.0 / alpha) * divisor;
    let v = h.u2.min(u_star / 2.0);
    // The upper endpoint keeps its printed `2n(α−1)` denominator.
    let hi = (k * v).powf(1.0 / alpha) * (1.0 + (2.0 - alpha) / (2.0 * n as f64 * (alpha - 1.0) * v));
    let valid = if u_star.is_nan() {
        Interval::empty()
    } else {
        Interval::open(lo, hi)
    };
    let mut cert = BoundCertificate::new(
        Regime::IntermediateV1,
        valid,
        BoundCurve::Stretched {
            prefactor: 1.0 + eps,
            coef: (2.0 - alpha) / (2.0 * nd * s),
            scale: divisor,
            power: alpha,
        },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", n as f64)
    .with_param("delta", delta)
    .with_param("eps", eps)
    .with_param("n_delta", nd)
    .with_param("u1", h.u1)
    .with_param("u2", h.u2)
    .with_param("u_star", u_star)
    .with_param("divisor", divisor)
    .with_param("range_lo", lo)
    .with_param("range_hi", hi);
    if u_star.is_nan() {
        cert = cert.with_note("δ(n−1)/(2−α) ≤ 1: u_n*(α, δ) is undefined and the range is empty");
    }
    Ok(cert)
}

pub fn intermediate_bound_v1(
    x: f64,
    n: u32,
    delta: f64,
    eps: f64,
    model: &StableModel,
) -> Result<Evaluated> {
    Ok(Evaluated::at(intermediate_v1_certificate(n, delta, eps, model)?, x))
}

/// Truncation level `R(x)` solving `R(1 + σ̄/((α−1)R^α)) = x`.
pub fn v1_truncation_level(x: f64, model: &StableModel) -> Result<f64> {
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let u = roots::theta_inverse(x, alpha, s)?;
    Ok(u.powf(1.0 / alpha))
}

pub fn intermediate_v2_certificate(n: u32, eps: f64, model: &StableModel) -> Result<BoundCertificate> {
    model.require_alpha_above_one()?;
    check_n(n)?;
    let (alpha, s) = (model.alpha(), model.sigma_bar());
    let threshold = v2_eps_threshold(n, alpha);
    if !(eps >= threshold) {
        return Err(Error::param(
            "eps",
            eps,
            format!("must be at least e(2−α)/(2nα) = {threshold}"),
        ));
    }
    let nf = n as f64;
    let c = (2.0 - alpha) / (2.0 * nf * alpha);
    let c23 = c.powf(2.0 / 3.0);
    let u_star = u_star_or_nan(n, alpha, 1.0)?;
    let k = 2.0 * nf * s / (2.0 - alpha);
    let low = 1.0 - c23;
    let divisor = 1.0 + (2.0 - alpha) / (2.0 * nf * (alpha - 1.0) * low);
    let lo = roots::theta_unchecked(k * low, alpha, s);
    let cap_binds = c23 > 0.68;
    let high = (1.0 + c23.min(0.68)).min(u_star / 2.0);
    let hi = roots::theta_unchecked(k * high, alpha, s);
    let valid = if u_star.is_nan() {
        Interval::empty()
    } else {
        Interval::open(lo, hi)
    };
    Ok(BoundCertificate::new(
        Regime::IntermediateV2,
        valid,
        BoundCurve::Stretched {
            prefactor: 1.0 + eps,
            coef: (2.0 - alpha) / (2.0 * nf * s),
            scale: divisor,
            power: alpha,
        },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", nf)
    .with_param("eps", eps)
    .with_param("c", c)
    .with_param("u_star", u_star)
    .with_param("divisor", divisor)
    .with_param("cap_binds", if cap_binds { 1.0 } else { 0.0 })
    .with_param("range_lo", lo)
    .with_param("range_hi", hi))
}

pub fn intermediate_bound_v2(x: f64, n: u32, eps: f64, model: &StableModel) -> Result<Evaluated> {
    Ok(Evaluated::at(intermediate_v2_certificate(n, eps, model)?, x))
}

/// `exp(−x²/(2n_δ))`, `n_δ = 1 + δ(n−1)`.
pub fn gaussian_limit_bound(x: f64, n: u32, delta: f64) -> f64 {
    (-x * x / (2.0 * n_delta(n, delta))).exp()
}

pub fn gaussian_limit_certificate(n: u32, delta: f64) -> BoundCertificate {
    let nd = n_delta(n, delta);
    BoundCertificate::new(
        Regime::GaussianLimit,
        Interval::open(0.0, f64::INFINITY),
        BoundCurve::Quadratic { coef: 1.0 / (2.0 * nd) },
    )
    .with_param("n", n as f64)
    .with_param("delta", delta)
    .with_param("n_delta", nd)
}

/// The δ → 0 curve `exp(−x²/2)`.
pub fn gaussian_limit_curve() -> BoundCurve {
    BoundCurve::Quadratic { coef: 0.5 }
}

/// `(1+ε)exp(−x²/(2n_δ)·(1 + αε/(α−1))^{−2})`, the α → 2 form of the first
/// intermediate bound.
pub fn gaussian_limit_v1_reference(x: f64, alpha: f64, eps: f64, n_delta: f64) -> f64 {
    let f = 1.0 + alpha * eps / (alpha - 1.0);
    (1.0 + eps) * (-x * x / (2.0 * n_delta) / (f * f)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSearch {
    pub ns: Vec<u32>,
    pub deltas: Vec<f64>,
    pub eps_factor: f64,
    pub lambda_quantiles: Vec<f64>,
    pub regimes: Vec<Regime>,
}

impl Default for EnvelopeSearch {
    fn default() -> Self {
        EnvelopeSearch {
            ns: (2..=30).collect(),
            deltas: vec![1.0, 0.1, 0.01],
            eps_factor: AUTO_EPS_FACTOR,
            lambda_quantiles: (1..=5).map(|i| i as f64 / 6.0).collect(),
            regimes: vec![Regime::SmallX, Regime::IntermediateV1, Regime::IntermediateV2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum EnvelopeResult {
    Applicable {
        certificate: BoundCertificate,
        value: f64,
    },
    Inapplicable { nearest: Vec<(Regime, Interval)> },
}

impl EnvelopeResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            EnvelopeResult::Applicable { value, .. } => Some(*value),
            EnvelopeResult::Inapplicable { .. } => None,
        }
    }
}

/// All applicable certificates over a search grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub certificates: Vec<BoundCertificate>,
}

impl Envelope {
    pub fn build(model: &StableModel, search: &EnvelopeSearch) -> Result<Envelope> {
        model.require_alpha_above_one()?;
        if search.ns.is_empty() || search.regimes.is_empty() {
            return Err(Error::param("search", 0.0, "grids must be non-empty"));
        }
        let alpha = model.alpha();
        let mut certificates = Vec::new();
        let mut keep = |c: Result<BoundCertificate>| {
            if let Ok(c) = c {
                if c.is_applicable() {
                    certificates.push(c);
                }
            }
        };
        for &n in &search.ns {
            for &regime in &search.regimes {
                match regime {
                    Regime::SmallX => {
                        if let Ok(w) = lambda_window(n, model) {
                            for &q in &search.lambda_quantiles {
                                keep(small_x_certificate(n, w.quantile(q), model));
                            }
                        }
                    }
                    Regime::IntermediateV1 => {
                        for &d in &search.deltas {
                            let eps = search.eps_factor * v1_eps_threshold(n, d, alpha);
                            keep(intermediate_v1_certificate(n, d, eps, model));
                        }
                    }
                    Regime::IntermediateV2 => {
                        let eps = search.eps_factor * v2_eps_threshold(n, alpha);
                        keep(intermediate_v2_certificate(n, eps, model));
                    }
                    _ => {}
                }
            }
        }
        Ok(Envelope { certificates })
    }

    pub fn at(&self, x: f64) -> EnvelopeResult {
        let best = self
            .certificates
            .iter()
            .filter(|c| c.valid_x.contains(x))
            .map(|c| (c, c.evaluate(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((c, v)) => EnvelopeResult::Applicable {
                certificate: c.clone(),
                value: v,
            },
            None => {
                let mut near: Vec<(f64, Regime, Interval)> = self
                    .certificates
                    .iter()
                    .map(|c| (c.valid_x.distance(x), c.regime, c.valid_x))
                    .collect();
                near.sort_by(|a, b| a.0.total_cmp(&b.0));
                EnvelopeResult::Inapplicable {
                    nearest: near.into_iter().take(3).map(|t| (t.1, t.2)).collect(),
                }
            }
        }
    }

    /// Union of the certified ranges, merged into disjoint intervals.
    pub fn coverage(&self) -> Vec<Interval> {
        let mut ranges: Vec<Interval> = self.certificates.iter().map(|c| c.valid_x).collect();
        ranges.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::new();
        for r in ranges {
            match merged.last_mut() {
                Some(last)
                    if r.lo < last.hi
                        || (r.lo == last.hi && (r.lo_inclusive || last.hi_inclusive)) =>
                {
                    if r.hi > last.hi || (r.hi == last.hi && r.hi_inclusive) {
                        last.hi = r.hi;
                        last.hi_inclusive = r.hi_inclusive;
                    }
                }
                _ => merged.push(r),
            }
        }
        merged
    }
}

pub fn envelope(x: f64, model: &StableModel, search: &EnvelopeSearch) -> Result<EnvelopeResult> {
    Ok(Envelope::build(model, search)?.at(x))
}
