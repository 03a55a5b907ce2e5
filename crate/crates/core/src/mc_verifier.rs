//! Monte Carlo verification of certificates against registered 1-Lipschitz
//! functions and Poisson functionals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::certificate::{BoundCertificate, Regime};
use crate::error::{Error, Result};
use crate::levy::{norm, StableModel, TruncationLevel};
use crate::sampler::{
    draw_parallel, sample_config, sample_stable_vector, sample_y_r_with, Configuration, RngStream,
    SmallJumps,
};
use crate::stats::{estimate_center, estimate_tail, CenterMode};

/// Registered 1-Lipschitz functions on ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `⟨v, ·⟩` with `‖v‖ = 1`.
    Linear { v: Vec<f64> },
    Norm,
    MaxCoordinate,
    /// Distance to the closed ball `B(center, radius)`.
    DistanceToBall { center: Vec<f64>, radius: f64 },
}

impl TestFunction {
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        TestFunction::Linear { v }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Linear { v } => {
                match v.iter().position(|&c| c == 1.0) {
                    Some(i) if v.iter().filter(|&&c| c != 0.0).count() == 1 => format!("coord{i}"),
                    _ => "linear".into(),
                }
            }
            TestFunction::Norm => "norm".into(),
            TestFunction::MaxCoordinate => "max-coord".into(),
            TestFunction::DistanceToBall { .. } => "dist-ball".into(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Linear { v } => v.iter().zip(x).map(|(a, b)| a * b).sum(),
            TestFunction::Norm => norm(x),
            TestFunction::MaxCoordinate => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            TestFunction::DistanceToBall { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                (norm(&d) - radius).max(0.0)
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            TestFunction::Linear { v } => {
                if v.len() != dim || (norm(v) - 1.0).abs() > 1e-12 {
                    return Err(Error::param("v", norm(v), "linear test function needs a unit vector of the model dimension"));
                }
            }
            TestFunction::DistanceToBall { center, radius } => {
                if center.len() != dim || !(*radius >= 0.0) {
                    return Err(Error::param("radius", *radius, "ball must match the model dimension"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Randomised check of `|f(x) − f(y)| ≤ ‖x − y‖` on `pairs` pairs.
pub fn check_lipschitz(f: &TestFunction, dim: usize, pairs: usize, seed: u64) -> Result<()> {
    f.validate(dim)?;
    let mut rng = RngStream::new(seed, 0x11b);
    for _ in 0..pairs {
        let scale = 10f64.powf(4.0 * rng.open01() - 2.0);
        let x: Vec<f64> = (0..dim).map(|_| scale * (2.0 * rng.open01() - 1.0)).collect();
        let y: Vec<f64> = (0..dim).map(|_| scale * (2.0 * rng.open01() - 1.0)).collect();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        if (f.eval(&x) - f.eval(&y)).abs() > norm(&d) + 1e-9 {
            return Err(Error::Config(format!("{} fails the Lipschitz check", f.name())));
        }
    }
    Ok(())
}

/// Registered Poisson functionals with `|D_yF| ≤ ‖y‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunctional {
    /// `F(ω) = Σ_{y∈ω} min(‖y‖, K)`
    CappedSum { cap: f64 },
}

impl TestFunctional {
    pub fn name(&self) -> String {
        match self {
            TestFunctional::CappedSum { .. } => "capped-sum".into(),
        }
    }

    pub fn difference_bound_certified(&self) -> bool {
        true
    }

    pub fn eval(&self, omega: &Configuration) -> f64 {
        match self {
            TestFunctional::CappedSum { cap } => omega.radii().map(|r| r.min(*cap)).sum(),
        }
    }

    /// Mean contribution of the points with norm at most `eps_in` (α < 1).
    pub fn discarded_mean(&self, model: &StableModel, eps_in: f64) -> f64 {
        let alpha = model.alpha();
        match self {
            TestFunctional::CappedSum { cap } => {
                if alpha >= 1.0 {
                    return f64::INFINITY;
                }
                let e = eps_in.min(*cap);
                let inner = model.sigma_bar() * e.powf(1.0 - alpha) / (1.0 - alpha);
                let between = if eps_in > *cap {
                    cap * model.sigma_bar() * (cap.powf(-alpha) - eps_in.powf(-alpha)) / alpha
                } else {
                    0.0
                };
                inner + between
            }
        }
    }

    /// Variance of the points with norm at most `eps_in` (`eps_in ≤ K`).
    pub fn discarded_variance(&self, model: &StableModel, eps_in: f64) -> f64 {
        let alpha = model.alpha();
        match self {
            TestFunctional::CappedSum { cap } => {
                let e = eps_in.min(*cap);
                model.sigma_bar() * e.powf(2.0 - alpha) / (2.0 - alpha)
            }
        }
    }
}

/// Randomised check of `|F(ω ∪ {y}) − F(ω)| ≤ ‖y‖`.
pub fn check_difference_bound(
    f: &TestFunctional,
    model: &StableModel,
    pairs: usize,
    seed: u64,
) -> Result<()> {
    let mut rng = RngStream::new(seed, 0xd1f);
    let dim = model.dim();
    for _ in 0..pairs {
        let r = TruncationLevel::new(10f64.powf(3.0 * rng.open01()))?;
        let omega = sample_config(model, r, r.get() * 1e-2, &mut rng)?;
        let scale = 10f64.powf(4.0 * rng.open01() - 2.0);
        let y: Vec<f64> = (0..dim).map(|_| scale * (2.0 * rng.open01() - 1.0)).collect();
        let mut bigger = omega.clone();
        bigger.points.push(y.clone());
        if (f.eval(&bigger) - f.eval(&omega)).abs() > norm(&y) + 1e-9 {
            return Err(Error::Config(format!(
                "{} fails the difference-bound check",
                f.name()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Function(TestFunction),
    Functional(TestFunctional),
}

impl Target {
    pub fn name(&self) -> String {
        match self {
            Target::Function(f) => f.name(),
            Target::Functional(f) => f.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub budget: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// Require the CI upper end to stay below the bound.
    pub strict: bool,
    /// Added to every centred sample; non-zero only for self-tests.
    pub shift: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            budget: 100_000,
            seed: 1,
            grid_points: 20,
            strict: false,
            shift: 0.0,
        }
    }
}

pub const MIN_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub empirical_tail: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub regime: Regime,
    pub target: String,
    pub grid: Vec<GridPoint>,
    pub sample_count: usize,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
    pub center: f64,
    pub center_stderr: f64,
    pub centering: CenterMode,
    pub strict: bool,
    pub shift: f64,
    pub eps_in: Option<f64>,
    pub overall_pass: bool,
}

/// `count` points geometrically spaced strictly inside `(lo, hi)`.
pub fn verification_grid(cert: &BoundCertificate, count: usize) -> Result<Vec<f64>> {
    let v = cert.valid_x;
    if v.is_empty() {
        return Err(Error::Inapplicable(format!(
            "{} certificate has an empty range",
            cert.regime
        )));
    }
    if !v.hi.is_finite() {
        return Err(Error::Inapplicable("unbounded range has no finite grid".into()));
    }
    if v.lo == v.hi {
        return Ok(vec![v.lo]);
    }
    let lo = if v.lo > 0.0 { v.lo } else { v.hi * 1e-3 };
    let ratio = v.hi / lo;
    Ok((0..count)
        .map(|i| lo * ratio.powf((i as f64 + 0.5) / count as f64))
        .collect())
}

/// Inner radius for configuration sampling.
///
/// For α < 1 the standard deviation of the discarded part is kept at 1% of
/// the median (its mean is added back); for α ≥ 1 it is `10⁻³·R`.
pub fn config_inner_radius(
    f: &TestFunctional,
    model: &StableModel,
    r_scale: f64,
    seed: u64,
) -> Result<f64> {
    let alpha = model.alpha();
    if alpha >= 1.0 {
        return Ok(1e-3 * r_scale);
    }
    let TestFunctional::CappedSum { cap } = f;
    let pilot_eps = 0.1 * cap;
    let pilot = draw_parallel(4000, seed, 0xe0_0000, |g| {
        sample_config(model, TruncationLevel::infinite(), pilot_eps, g)
            .map(|c| f.eval(&c))
            .unwrap_or(f64::NAN)
    });
    let med = crate::stats::lower_median(&pilot) + f.discarded_mean(model, pilot_eps);
    let target_sd = 0.01 * med.abs();
    let eps = (target_sd * target_sd * (2.0 - alpha) / model.sigma_bar()).powf(1.0 / (2.0 - alpha));
    Ok(eps.min(pilot_eps))
}

/// Samples of the target under the law relevant for `cert`.
fn draw_samples(
    cert: &BoundCertificate,
    target: &Target,
    model: &StableModel,
    opts: &VerifyOptions,
) -> Result<(Vec<f64>, CenterMode, Option<f64>)> {
    let median = cert.regime.is_median();
    match (target, cert.regime) {
        (Target::Function(_), r) if r.is_median() => Err(Error::UnsupportedRegime(format!(
            "{r} certificates apply to Poisson functionals, not to functions of X"
        ))),
        (Target::Functional(_), r) if !r.is_median() && r != Regime::TruncatedLemma => {
            Err(Error::UnsupportedRegime(format!(
                "{r} certificates apply to functions of X, not to Poisson functionals"
            )))
        }
        (_, Regime::GaussianLimit) => Err(Error::UnsupportedRegime(
            "the Gaussian-limit curve is a diagnostic, not a certificate for a stable model".into(),
        )),
        (Target::Function(f), Regime::TruncatedLemma) => {
            f.validate(model.dim())?;
            let rr = cert.param("R").ok_or_else(|| Error::Config("certificate lacks R".into()))?;
            let r = TruncationLevel::new(rr)?;
            let eps_in = 0.05 * rr;
            let xs = draw_parallel(opts.budget, opts.seed, 0, |g| {
                sample_y_r_with(model, r, eps_in, SmallJumps::Gaussian, g)
                    .map(|y| f.eval(&y))
                    .unwrap_or(f64::NAN)
            });
            Ok((xs, CenterMode::Mean, Some(eps_in)))
        }
        (Target::Function(f), _) => {
            f.validate(model.dim())?;
            let xs = draw_parallel(opts.budget, opts.seed, 0, |g| {
                sample_stable_vector(model, g).map(|y| f.eval(&y)).unwrap_or(f64::NAN)
            });
            Ok((xs, CenterMode::Mean, None))
        }
        (Target::Functional(f), regime) => {
            let (r, r_scale) = if regime == Regime::TruncatedLemma {
                let rr = cert.param("R").ok_or_else(|| Error::Config("certificate lacks R".into()))?;
                (TruncationLevel::new(rr)?, rr)
            } else {
                (TruncationLevel::infinite(), 0.5 * cert.valid_x.hi)
            };
            let eps_in = if r.is_finite() {
                1e-3 * r_scale
            } else {
                config_inner_radius(f, model, r_scale, opts.seed)?
            };
            let add_back = if model.alpha() < 1.0 && !r.is_finite() {
                f.discarded_mean(model, eps_in)
            } else {
                0.0
            };
            let xs = draw_parallel(opts.budget, opts.seed, 0, |g| {
                sample_config(model, r, eps_in, g)
                    .map(|c| f.eval(&c) + add_back)
                    .unwrap_or(f64::NAN)
            });
            let mode = if median { CenterMode::Median } else { CenterMode::Mean };
            Ok((xs, mode, Some(eps_in)))
        }
    }
}

pub fn verify_certificate(
    cert: &BoundCertificate,
    target: &Target,
    model: &StableModel,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if opts.budget < MIN_BUDGET {
        return Err(Error::param(
            "budget",
            opts.budget as f64,
            format!("must be at least {MIN_BUDGET}"),
        ));
    }
    let grid = verification_grid(cert, opts.grid_points)?;
    match target {
        Target::Function(f) => check_lipschitz(f, model.dim(), 10_000, opts.seed)?,
        Target::Functional(f) => {
            if !f.difference_bound_certified() {
                return Err(Error::Config(format!("{} has no difference bound", f.name())));
            }
            check_difference_bound(f, model, 1_000, opts.seed)?
        }
    }
    let (samples, mode, eps_in) = draw_samples(cert, target, model, opts)?;
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("sampler rejected the model".into()));
    }
    let (center, center_stderr) = estimate_center(&samples, mode)?;
    let shifted: Vec<f64>;
    let data = if opts.shift != 0.0 {
        shifted = samples.iter().map(|v| v + opts.shift).collect();
        &shifted
    } else {
        &samples
    };
    let tails = estimate_tail(data, center, &grid)?;
    let points: Vec<GridPoint> = tails
        .iter()
        .map(|t| {
            let bound = cert.evaluate(t.x);
            let (margin, pass) = if opts.strict {
                (bound - t.ci_hi, t.ci_hi <= bound)
            } else {
                (bound - t.p_hat, t.p_hat <= bound + 4.0 * t.stderr)
            };
            GridPoint {
                x: t.x,
                empirical_tail: t.p_hat,
                ci_lo: t.ci_lo,
                ci_hi: t.ci_hi,
                bound,
                margin,
                pass,
            }
        })
        .collect();
    let overall_pass = points.iter().all(|p| p.pass);
    Ok(VerificationReport {
        regime: cert.regime,
        target: target.name(),
        grid: points,
        sample_count: samples.len(),
        seed: opts.seed,
        params: cert.params.clone(),
        center,
        center_stderr,
        centering: mode,
        strict: opts.strict,
        shift: opts.shift,
        eps_in,
        overall_pass,
    })
}
