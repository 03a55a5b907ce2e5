//! Median-centred deviation certificates for Poisson functionals `F` with
//! `|D_yF| ≤ ‖y‖`.

use serde::Serialize;

use crate::bounds_mean::{small_x_certificate_median, Evaluated};
use crate::certificate::{BoundCertificate, BoundCurve, Interval, Regime};
use crate::error::{Error, Result};
use crate::levy::{StableModel, TruncationLevel};
use crate::roots::{h_eps_threshold, solve_delta0, solve_h_roots, solve_u_star};

/// Control of `P(ω has a point outside B(0, R))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaChoice {
    /// `γ(R) = σ̄/(αR^α)`
    Linear,
    /// `γ(R) = 1 − exp(−σ̄/(αR^α))`
    Exact,
}

impl GammaChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            GammaChoice::Linear => "linear",
            GammaChoice::Exact => "exact",
        }
    }

    pub fn parse(s: &str) -> Option<GammaChoice> {
        match s {
            "linear" => Some(GammaChoice::Linear),
            "exact" => Some(GammaChoice::Exact),
            _ => None,
        }
    }

    pub fn gamma(self, r: f64, alpha: f64, sigma_bar: f64) -> f64 {
        let m = sigma_bar / (alpha * r.powf(alpha));
        match self {
            GammaChoice::Linear => m,
            GammaChoice::Exact => -(-m).exp_m1(),
        }
    }

    /// `γ^{-1}(δ)` for `δ ∈ (0, 1)`.
    pub fn inverse(self, delta: f64, alpha: f64, sigma_bar: f64) -> f64 {
        let level = match self {
            GammaChoice::Linear => delta,
            GammaChoice::Exact => -(-delta).ln_1p(),
        };
        (sigma_bar / (alpha * level)).powf(1.0 / alpha)
    }
}

/// `γ̃^{-1}(δ) = (2nσ̄·ln(1/δ)/(2−α))^{1/α}`.
pub fn tilde_gamma_inverse(delta: f64, n: u32, alpha: f64, sigma_bar: f64) -> f64 {
    (2.0 * n as f64 * sigma_bar * (1.0 / delta).ln() / (2.0 - alpha)).powf(1.0 / alpha)
}

/// `inf_{0<δ<1/2} max(γ^{-1}(δ), γ̃^{-1}(1/2 − δ))` by a 1024-point scan
/// refined with golden-section search. Returns `(value, argmin δ)`.
pub fn inf_max(n: u32, alpha: f64, sigma_bar: f64, gamma: GammaChoice) -> (f64, f64) {
    let obj = |d: f64| {
        gamma
            .inverse(d, alpha, sigma_bar)
            .max(tilde_gamma_inverse(0.5 - d, n, alpha, sigma_bar))
    };
    const GRID: usize = 1024;
    let at = |i: usize| 0.5 * (i as f64 + 0.5) / GRID as f64;
    let best = (0..GRID)
        .min_by(|&a, &b| obj(at(a)).total_cmp(&obj(at(b))))
        .expect("non-empty grid");
    let mut a = if best == 0 { 0.0 } else { at(best - 1) };
    let mut b = if best + 1 == GRID { 0.5 } else { at(best + 1) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    let arg = 0.5 * (a + b);
    (obj(arg), arg)
}

/// Range of truncation levels `R` on which the median shift is at most `R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianWindow {
    /// The inf-max lower end, on the `R` scale.
    pub lower_term: f64,
    /// `R₀ = (2nσ̄u_n*/(2−α))^{1/α}`, NaN when `u_n*` is undefined.
    pub upper_term: f64,
    pub gamma: GammaChoice,
    pub n: u32,
    pub alpha: f64,
    pub sigma_bar: f64,
    pub delta_argmin: f64,
}

impl MedianWindow {
    pub fn is_empty(&self) -> bool {
        !(self.lower_term <= self.upper_term)
    }
}

fn check_alpha(model: &StableModel) -> Result<(f64, f64)> {
    let alpha = model.alpha();
    if (alpha - 1.0).abs() < 1e-6 {
        return Err(Error::UnsupportedRegime("α = 1 is excluded".into()));
    }
    Ok((alpha, model.sigma_bar()))
}

fn u_star_or_nan(n: u32, alpha: f64) -> Result<f64> {
    match solve_u_star(n, alpha, 1.0) {
        Ok(r) => Ok(r.u_star),
        Err(Error::NoRoot(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

pub fn median_shift_window(n: u32, model: &StableModel, gamma: GammaChoice) -> Result<MedianWindow> {
    if n < 2 {
        return Err(Error::param("n", n as f64, "must be at least 2"));
    }
    let (alpha, s) = check_alpha(model)?;
    let (lower_term, delta_argmin) = match gamma {
        GammaChoice::Linear => {
            let d0 = solve_delta0(n, alpha)?;
            ((s / (alpha * d0)).powf(1.0 / alpha), d0)
        }
        GammaChoice::Exact => inf_max(n, alpha, s, gamma),
    };
    let u_star = u_star_or_nan(n, alpha)?;
    let upper_term = (2.0 * n as f64 * s * u_star / (2.0 - alpha)).powf(1.0 / alpha);
    Ok(MedianWindow {
        lower_term,
        upper_term,
        gamma,
        n,
        alpha,
        sigma_bar: s,
        delta_argmin,
    })
}

pub fn truncated_functional_certificate(
    r: TruncationLevel,
    n: u32,
    model: &StableModel,
) -> Result<BoundCertificate> {
    let (alpha, s) = check_alpha(model)?;
    if !r.is_finite() {
        return Err(Error::param("R", r.get(), "must be finite"));
    }
    let rr = r.get();
    let nf = n as f64;
    let us = solve_u_star(n, alpha, 1.0)?;
    let x0 = nf * s * rr.powf(1.0 - alpha) * us.u_star / (2.0 - alpha);
    Ok(BoundCertificate::new(
        Regime::TruncatedLemma,
        Interval::left_open(0.0, x0),
        BoundCurve::Quadratic {
            coef: (2.0 - alpha) / (2.0 * nf * s * rr.powf(2.0 - alpha)),
        },
    )
    .with_param("alpha", alpha)
    .with_param("sigma_bar", s)
    .with_param("n", nf)
    .with_param("delta", 1.0)
    .with_param("n_delta", nf)
    .with_param("R", rr)
    .with_param("u_star", us.u_star)
    .with_param("x0", x0)
    .with_label("space", "poisson"))
}

pub fn truncated_functional_bound(
    x: f64,
    r: TruncationLevel,
    n: u32,
    model: &StableModel,
) -> Result<Evaluated> {
    let c = truncated_functional_certificate(r, n, model)?;
    let query = c.query(x);
    Ok(Evaluated {
        certificate: c,
        query,
    })
}

/// Threshold `(2−α)e/(2αn)` on ε shared by both median regimes (exclusive).
pub fn median_eps_threshold(n: u32, alpha: f64) -> f64 {
    h_eps_threshold(n as f64, alpha)
}

fn median_curve(n: u32, eps: f64, alpha: f64, s: f64) -> BoundCurve {
    BoundCurve::Stretched {
        prefactor: 1.0 + eps,
        coef: (2.0 - alpha) / (2.0 * n as f64 * s),
        scale: 2.0,
        power: alpha,
    }
}

/// Maps a window on `(x/2)^α` to one on `x`.
fn x_interval(lo_a: f64, hi_a: f64, alpha: f64, closed: bool) -> Interval {
    if !(lo_a.is_finite() && hi_a.is_finite()) {
        return Interval::empty();
    }
    let lo = 2.0 * lo_a.max(0.0).powf(1.0 / alpha);
    let hi = 2.0 * hi_a.max(0.0).powf(1.0 / alpha);
    if closed {
        Interval::closed(lo, hi)
    } else {
        Interval::open(lo, hi)
    }
}

fn check_eps(n: u32, alpha: f64, eps: f64) -> Result<()> {
    let t = median_eps_threshold(n, alpha);
    if eps > t {
        Ok(())
    } else {
        Err(Error::param(
            "eps",
            eps,
            format!("must exceed (2−α)e/(2αn) = {t}"),
        ))
    }
}

pub fn median_v1_certificate(
    n: u32,
    eps: f64,
    model: &StableModel,
    gamma: GammaChoice,
) -> Result<BoundCertificate> {
    let (alpha, s) = check_alpha(model)?;
    check_eps(n, alpha, eps)?;
    let w = median_shift_window(n, model, gamma)?;
    let h = solve_h_roots(n as f64, alpha, eps)?;
    let nf = n as f64;
    let k = 2.0 * nf * s / (2.0 - alpha);
    let lower_a = w.lower_term.powf(alpha);
    let lo_a = lower_a.max(k * h.u1);
    let upper = h.u2.min(w.upper_term.powf(alpha) / k);
    let hi_a = k * upper;
    let valid = if w.upper_term.is_nan() {
        Interval::empty()
    } else {
        x_interval(lo_a, hi_a, alpha, true)
    };
    Ok(BoundCertificate::new(Regime::MedianV1, valid, median_curve(n, eps, alpha, s))
        .with_param("alpha", alpha)
        .with_param("sigma_bar", s)
        .with_param("n", nf)
        .with_param("eps", eps)
        .with_param("u1", h.u1)
        .with_param("u2", h.u2)
        .with_param("u_star", w.upper_term.powf(alpha) / k)
        .with_param("lower_term_pow", lower_a)
        .with_param("window_lo_pow", lo_a)
        .with_param("window_hi_pow", hi_a)
        .with_param("delta_argmin", w.delta_argmin)
        .with_label("gamma", gamma.as_str()))
}

pub fn median_bound_v1(
    x: f64,
    n: u32,
    eps: f64,
    model: &StableModel,
    gamma: GammaChoice,
) -> Result<Evaluated> {
    let c = median_v1_certificate(n, eps, model, gamma)?;
    let query = c.query(x);
    Ok(Evaluated {
        certificate: c,
        query,
    })
}

/// Raw `(x/2)^α` window of the second median regime before intersecting with
/// the median-shift window: `(k(1 − c^{2/3}), k·min(1 + c^{2/3} ∧ 0.68, u*/2))`.
pub fn median_v2_core(n: u32, alpha: f64, sigma_bar: f64, u_star: f64) -> (f64, f64, bool) {
    let nf = n as f64;
    let k = 2.0 * nf * sigma_bar / (2.0 - alpha);
    let c23 = ((2.0 - alpha) / (2.0 * nf * alpha)).powf(2.0 / 3.0);
    let lo = k * (1.0 - c23);
    let hi = k * (1.0 + c23.min(0.68)).min(u_star / 2.0);
    (lo, hi, c23 > 0.68)
}

pub fn median_v2_certificate(
    n: u32,
    eps: f64,
    model: &StableModel,
    gamma: GammaChoice,
) -> Result<BoundCertificate> {
    let (alpha, s) = check_alpha(model)?;
    check_eps(n, alpha, eps)?;
    let w = median_shift_window(n, model, gamma)?;
    let nf = n as f64;
    let k = 2.0 * nf * s / (2.0 - alpha);
    let u_star = w.upper_term.powf(alpha) / k;
    let (core_lo, core_hi, cap_binds) = median_v2_core(n, alpha, s, u_star);
    let lower_a = w.lower_term.powf(alpha);
    let lo_a = lower_a.max(core_lo);
    let hi_a = core_hi.min(w.upper_term.powf(alpha));
    let valid = if w.upper_term.is_nan() {
        Interval::empty()
    } else {
        x_interval(lo_a, hi_a, alpha, false)
    };
    Ok(BoundCertificate::new(Regime::MedianV2, valid, median_curve(n, eps, alpha, s))
        .with_param("alpha", alpha)
        .with_param("sigma_bar", s)
        .with_param("n", nf)
        .with_param("eps", eps)
        .with_param("u_star", u_star)
        .with_param("c", (2.0 - alpha) / (2.0 * nf * alpha))
        .with_param("cap_binds", if cap_binds { 1.0 } else { 0.0 })
        .with_param("lower_term_pow", lower_a)
        .with_param("window_lo_pow", lo_a)
        .with_param("window_hi_pow", hi_a)
        .with_param("delta_argmin", w.delta_argmin)
        .with_label("gamma", gamma.as_str()))
}

pub fn median_bound_v2(
    x: f64,
    n: u32,
    eps: f64,
    model: &StableModel,
    gamma: GammaChoice,
) -> Result<Evaluated> {
    let c = median_v2_certificate(n, eps, model, gamma)?;
    let query = c.query(x);
    Ok(Evaluated {
        certificate: c,
        query,
    })
}

pub fn median_small_x_certificate(n: u32, lambda: f64, model: &StableModel) -> Result<BoundCertificate> {
    if !(model.alpha() > 1.0) {
        return Err(Error::UnsupportedRegime(format!(
            "median small-x bounds need 1 < α < 2 (got α = {}); the α ≤ 1 case is not covered",
            model.alpha()
        )));
    }
    small_x_certificate_median(n, lambda, model)
}

pub fn median_small_x_bound(x: f64, n: u32, lambda: f64, model: &StableModel) -> Result<Evaluated> {
    let c = median_small_x_certificate(n, lambda, model)?;
    let query = c.query(x);
    Ok(Evaluated {
        certificate: c,
        query,
    })
}
