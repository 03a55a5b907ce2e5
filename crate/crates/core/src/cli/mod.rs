//! Command-line front end.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds_mean::{
    gaussian_limit_bound, gaussian_limit_certificate, gaussian_limit_v1_reference,
    intermediate_v1_certificate, intermediate_v2_certificate, lambda_window, n_delta,
    small_x_bound_parameterfree, small_x_certificate, truncated_lipschitz_certificate,
    v1_eps_threshold, v2_eps_threshold, Envelope, EnvelopeResult, EnvelopeSearch,
};
use crate::bounds_median::{
    median_eps_threshold, median_small_x_certificate, median_v1_certificate,
    median_v2_certificate, truncated_functional_certificate, GammaChoice,
};
use crate::certificate::{BoundCertificate, Regime};
use crate::error::{Error, Result};
use crate::levy::{SpectralMeasure, StableModel, TruncationLevel};
use crate::mc_verifier::{verify_certificate, Target, TestFunction, TestFunctional, VerifyOptions};
use crate::roots::{
    delta0_residual, h_residual, solve_delta0, solve_h_roots, solve_u0_lambda, solve_u_star,
    solve_un, u0_residual, un_residual, small_x_rate, UStarArgmin,
};
use crate::sampler::{
    draw_parallel, sample_config, sample_stable_vector, sample_y_r_with, sample_z_r, SmallJumps,
};
use config::{build_model, parse_f64_list, parse_n_list, parse_x_grid, Eps};
use output::{bounds_csv, csv_bytes, emit, report_csv, report_json, BoundRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default ε for the parameter-free regime, which has no threshold of its own.
const PARAMETER_FREE_DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "stabledev", version, about = "Certified deviation bounds for α-stable laws")]
pub struct Cli {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certified bounds on an x-grid, plus the envelope over all regimes.
    Bounds(BoundsArgs),
    /// Solve the special constants and print residuals.
    Roots(RootsArgs),
    /// Draw samples from the stable law or its pieces.
    Sample(SampleArgs),
    /// Monte Carlo verification of one certificate.
    Verify(VerifyArgs),
    /// Sweep α with σ̄ = 2 − α towards the Gaussian limit.
    GaussianLimit(GaussianArgs),
    /// Print certified ranges per n.
    Regimes(RegimesArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub alpha: f64,
    /// `symmetric-axes:mass`
    #[arg(long)]
    pub preset: Option<String>,
    /// `x,y,…:weight` entries separated by `;`
    #[arg(long)]
    pub atoms: Option<String>,
    /// Dimension used by presets.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Deterministic shift `b`, comma separated.
    #[arg(long)]
    pub shift: Option<String>,
}

impl ModelArgs {
    fn model(&self) -> Result<StableModel> {
        build_model(
            self.alpha,
            self.preset.as_deref(),
            self.atoms.as_deref(),
            self.dim,
            self.shift.as_deref(),
        )
    }
}

#[derive(Debug, Args)]
pub struct CertArgs {
    /// Comma-separated list of regimes.
    #[arg(long, default_value = "small-x,intermediate-v1,intermediate-v2")]
    pub regime: String,
    /// `10`, `2,5,10` or `2:30`
    #[arg(long, default_value = "10")]
    pub n: String,
    /// Comma-separated δ values.
    #[arg(long, default_value = "1")]
    pub delta: String,
    /// `auto` or a value.
    #[arg(long, default_value = "auto")]
    pub eps: String,
    /// `auto` (window midpoint) or a value.
    #[arg(long, default_value = "auto")]
    pub lambda: String,
    /// Truncation level for the lemma regimes.
    #[arg(long)]
    pub r: Option<f64>,
    /// `linear` or `exact`
    #[arg(long, default_value = "linear")]
    pub gamma: String,
    /// Draws per oracle call in the parameter-free regime.
    #[arg(long, default_value_t = 20_000)]
    pub mc_budget: usize,
    #[arg(long, env = "STABLEDEV_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cert: CertArgs,
    /// `lo:hi:count`, geometric.
    #[arg(long, default_value = "0.5:50:20")]
    pub x_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_bar: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `stable`, `z-r`, `y-r` or `config`
    #[arg(long, default_value = "stable")]
    pub kind: String,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub eps_in: Option<f64>,
    #[arg(long, default_value = "discard")]
    pub small_jumps: String,
    #[arg(long, env = "STABLEDEV_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub cert: CertArgs,
    /// `coordK`, `norm`, `max-coord`, `dist-ball:radius` or `capped-sum:K`
    #[arg(long)]
    pub target: Option<String>,
    /// Query point for the parameter-free regime.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 20)]
    pub grid_points: usize,
    #[arg(long)]
    pub strict: bool,
    /// Adds a constant to every sample (self-test of the harness).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sample_shift: f64,
    /// Replaces the bound by zero (self-test of the harness).
    #[arg(long)]
    pub zero_bound: bool,
    /// Output prefix; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    #[arg(long, default_value = "1.9,1.99,1.999")]
    pub alphas: String,
    #[arg(long, default_value_t = 10)]
    pub n: u32,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long, default_value = "auto")]
    pub eps: String,
    #[arg(long, default_value = "1:1:1")]
    pub x_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegimesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "2:30")]
    pub n: String,
    #[arg(long, default_value = "1")]
    pub delta: String,
    #[arg(long, default_value = "auto")]
    pub eps: String,
    #[arg(long, default_value = "linear")]
    pub gamma: String,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match config::merge_config_file(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Roots(a) => cmd_roots(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::GaussianLimit(a) => cmd_gaussian(&a),
        Command::Regimes(a) => cmd_regimes(&a),
    }
}

fn parse_regimes(s: &str) -> Result<Vec<Regime>> {
    s.split(',')
        .map(|r| {
            Regime::parse(r.trim()).ok_or_else(|| Error::Config(format!("unknown regime `{r}`")))
        })
        .collect()
}

fn parse_gamma(s: &str) -> Result<GammaChoice> {
    GammaChoice::parse(s).ok_or_else(|| Error::Config(format!("unknown gamma `{s}`")))
}

fn require_r(r: Option<f64>) -> Result<TruncationLevel> {
    TruncationLevel::new(r.ok_or_else(|| Error::Config("this regime needs --r".into()))?)
}

/// One fully parameterised request.
#[derive(Debug, Clone, Copy)]
struct Request {
    regime: Regime,
    n: u32,
    delta: f64,
}

fn requests(cert: &CertArgs) -> Result<Vec<Request>> {
    let regimes = parse_regimes(&cert.regime)?;
    let ns = parse_n_list(&cert.n)?;
    let deltas = parse_f64_list("delta", &cert.delta)?;
    let mut out = Vec::new();
    for &regime in &regimes {
        for &n in &ns {
            let uses_delta = matches!(
                regime,
                Regime::TruncatedLemma | Regime::IntermediateV1 | Regime::GaussianLimit
            );
            if uses_delta {
                for &delta in &deltas {
                    out.push(Request { regime, n, delta });
                }
            } else {
                out.push(Request { regime, n, delta: 1.0 });
            }
        }
    }
    Ok(out)
}

/// Builds the certificate for every regime except the parameter-free one,
/// which depends on `x`.
fn certificate(req: Request, cert: &CertArgs, model: &StableModel) -> Result<BoundCertificate> {
    let eps = Eps::parse(&cert.eps)?;
    let alpha = model.alpha();
    let Request { regime, n, delta } = req;
    match regime {
        Regime::TruncatedLemma => {
            let r = require_r(cert.r)?;
            if model.alpha() > 1.0 {
                truncated_lipschitz_certificate(r, n, delta, model)
            } else {
                truncated_functional_certificate(r, n, model)
            }
        }
        Regime::SmallX | Regime::MedianSmallX => {
            let lambda = match Eps::parse(&cert.lambda)? {
                Eps::Auto => lambda_window(n, model)?.midpoint(),
                Eps::Value(v) => v,
            };
            if regime == Regime::SmallX {
                small_x_certificate(n, lambda, model)
            } else {
                median_small_x_certificate(n, lambda, model)
            }
        }
        Regime::IntermediateV1 => {
            let e = eps.resolve(v1_eps_threshold(n, delta, alpha));
            intermediate_v1_certificate(n, delta, e, model)
        }
        Regime::IntermediateV2 => {
            intermediate_v2_certificate(n, eps.resolve(v2_eps_threshold(n, alpha)), model)
        }
        Regime::MedianV1 | Regime::MedianV2 => {
            let e = eps.resolve(median_eps_threshold(n, alpha));
            let g = parse_gamma(&cert.gamma)?;
            if regime == Regime::MedianV1 {
                median_v1_certificate(n, e, model, g)
            } else {
                median_v2_certificate(n, e, model, g)
            }
        }
        Regime::GaussianLimit => Ok(gaussian_limit_certificate(n, delta)),
        Regime::SmallXParameterFree => Err(Error::Config(
            "the parameter-free regime is evaluated pointwise".into(),
        )),
    }
}

fn parameter_free(x: f64, n: u32, cert: &CertArgs, model: &StableModel) -> Result<BoundCertificate> {
    let eps = match Eps::parse(&cert.eps)? {
        Eps::Auto => PARAMETER_FREE_DEFAULT_EPS,
        Eps::Value(v) => v,
    };
    Ok(small_x_bound_parameterfree(x, n, eps, model, cert.mc_budget, cert.seed)?.certificate)
}

fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let model = a.model.model()?;
    let xs = parse_x_grid(&a.x_grid)?;
    let reqs = requests(&a.cert)?;
    let mut rows = Vec::new();
    for req in reqs {
        let name = req.regime.as_str();
        if req.regime == Regime::SmallXParameterFree {
            for &x in &xs {
                let c = parameter_free(x, req.n, &a.cert, &model)?;
                rows.push(BoundRow::from_certificate(x, name, &c));
            }
            continue;
        }
        let c = certificate(req, &a.cert, &model)?;
        rows.extend(xs.iter().map(|&x| BoundRow::from_certificate(x, name, &c)));
    }
    if model.alpha() > 1.0 {
        let env = Envelope::build(&model, &EnvelopeSearch::default())?;
        for &x in &xs {
            rows.push(match env.at(x) {
                EnvelopeResult::Applicable { certificate, .. } => {
                    BoundRow::from_certificate(x, "envelope", &certificate)
                }
                EnvelopeResult::Inapplicable { .. } => BoundRow::empty(x, "envelope"),
            });
        }
    } else {
        eprintln!("note: the envelope covers the mean regimes, which need α > 1");
        rows.extend(xs.iter().map(|&x| BoundRow::empty(x, "envelope")));
    }
    emit(a.out.as_deref(), &bounds_csv(&rows)?)?;
    Ok(EXIT_OK)
}

fn cmd_roots(a: &RootsArgs) -> Result<i32> {
    let (alpha, n, delta) = (a.alpha, a.n, a.delta);
    if !(alpha > 0.0 && alpha < 2.0) || (alpha - 1.0).abs() < 1e-6 {
        return Err(Error::param("alpha", alpha, "must lie in (0, 2) \\ {1}"));
    }
    let mut out = String::new();
    match solve_un(n, alpha, delta) {
        Ok(u) => {
            out += &format!("u_n = {u}  residual = {:e}\n", un_residual(u, n, alpha, delta).abs());
            let us = solve_u_star(n, alpha, delta)?;
            let arg = match us.argmin {
                UStarArgmin::ExponentialRoot => "exponential-root".to_string(),
                UStarArgmin::Taylor(k) => format!("taylor-{k}"),
            };
            out += &format!("u_star = {}  argmin = {arg}\n", us.u_star);
        }
        Err(Error::NoRoot(m)) => out += &format!("u_n undefined: {m}\n"),
        Err(e) => return Err(e),
    }
    match solve_delta0(n, alpha) {
        Ok(d) => out += &format!("delta0 = {d}  residual = {:e}\n", delta0_residual(d, n, alpha).abs()),
        Err(e) if !e.is_numerical() => out += &format!("delta0 undefined: {e}\n"),
        Err(e) => return Err(e),
    }
    if let Some(eps) = a.eps {
        let nd = n_delta(n, delta);
        let h = solve_h_roots(nd, alpha, eps)?;
        out += &format!("u1 = {}  residual = {:e}\n", h.u1, h_residual(h.u1, h.slope).abs());
        out += &format!("u2 = {}  residual = {:e}\n", h.u2, h_residual(h.u2, h.slope).abs());
    }
    if let Some(lambda) = a.lambda {
        let c1 = small_x_rate(n, alpha, lambda, a.sigma_bar);
        let u0 = solve_u0_lambda(n, alpha, lambda, a.sigma_bar)?;
        let b = a.sigma_bar / alpha;
        out += &format!("u0 = {u0}  residual = {:e}\n", u0_residual(u0, c1, b).abs());
    }
    emit(None, out.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_sample(a: &SampleArgs) -> Result<i32> {
    let model = a.model.model()?;
    let dim = model.dim();
    let small = match a.small_jumps.as_str() {
        "discard" => SmallJumps::Discard,
        "gaussian" => SmallJumps::Gaussian,
        s => return Err(Error::Config(format!("unknown small-jump policy `{s}`"))),
    };
    let coord_header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    let fmt_point = |p: &[f64]| p.iter().map(|v| format!("{v}")).collect::<Vec<_>>();
    let bytes = match a.kind.as_str() {
        "stable" | "z-r" | "y-r" => {
            let r = match a.kind.as_str() {
                "stable" => TruncationLevel::infinite(),
                _ => require_r(a.r)?,
            };
            let eps_in = a.eps_in.unwrap_or(1e-3 * r.get());
            let kind = a.kind.clone();
            let pts: Vec<Result<Vec<f64>>> = draw_parallel(a.count, a.seed, 0, |g| match kind.as_str() {
                "stable" => sample_stable_vector(&model, g),
                "z-r" => Ok(sample_z_r(&model, r, g)),
                _ => sample_y_r_with(&model, r, eps_in, small, g),
            });
            let pts = pts.into_iter().collect::<Result<Vec<_>>>()?;
            let header: Vec<&str> = coord_header.iter().map(String::as_str).collect();
            csv_bytes(&header, pts.iter().map(|p| fmt_point(p)))?
        }
        "config" => {
            let r = match a.r {
                Some(r) => TruncationLevel::new(r)?,
                None => TruncationLevel::infinite(),
            };
            let eps_in = a
                .eps_in
                .ok_or_else(|| Error::Config("configurations need --eps-in".into()))?;
            let cfgs = draw_parallel(a.count, a.seed, 0, |g| sample_config(&model, r, eps_in, g));
            let cfgs = cfgs.into_iter().collect::<Result<Vec<_>>>()?;
            let mut header = vec!["config"];
            header.extend(coord_header.iter().map(String::as_str));
            csv_bytes(
                &header,
                cfgs.iter().enumerate().flat_map(|(i, c)| {
                    c.points.iter().map(move |p| {
                        let mut row = vec![i.to_string()];
                        row.extend(p.iter().map(|v| format!("{v}")));
                        row
                    })
                }),
            )?
        }
        k => return Err(Error::Config(format!("unknown sample kind `{k}`"))),
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

fn parse_target(s: &str, dim: usize) -> Result<Target> {
    if let Some(i) = s.strip_prefix("coord") {
        let i: usize = i
            .parse()
            .map_err(|_| Error::Config(format!("target `{s}`: bad coordinate")))?;
        if i >= dim {
            return Err(Error::Config(format!("target `{s}`: coordinate out of range")));
        }
        return Ok(Target::Function(TestFunction::coordinate(dim, i)));
    }
    match s.split_once(':') {
        None if s == "norm" => Ok(Target::Function(TestFunction::Norm)),
        None if s == "max-coord" => Ok(Target::Function(TestFunction::MaxCoordinate)),
        Some(("dist-ball", r)) => Ok(Target::Function(TestFunction::DistanceToBall {
            center: vec![0.0; dim],
            radius: r
                .parse()
                .map_err(|_| Error::Config(format!("target `{s}`: bad radius")))?,
        })),
        Some(("capped-sum", k)) => {
            let cap: f64 = k
                .parse()
                .map_err(|_| Error::Config(format!("target `{s}`: bad cap")))?;
            if !(cap > 0.0) {
                return Err(Error::param("cap", cap, "must be positive"));
            }
            Ok(Target::Functional(TestFunctional::CappedSum { cap }))
        }
        _ => Err(Error::Config(format!("unknown target `{s}`"))),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let model = a.model.model()?;
    let reqs = requests(&a.cert)?;
    let [req] = reqs.as_slice() else {
        return Err(Error::Config("verify takes exactly one regime, n and δ".into()));
    };
    let cert = if req.regime == Regime::SmallXParameterFree {
        let x = a
            .x
            .ok_or_else(|| Error::Config("the parameter-free regime needs --x".into()))?;
        parameter_free(x, req.n, &a.cert, &model)?
    } else {
        certificate(*req, &a.cert, &model)?
    };
    let cert = if a.zero_bound { cert.scaled(0.0) } else { cert };
    let default_target = if req.regime.is_median() || (req.regime == Regime::TruncatedLemma && model.alpha() < 1.0) {
        "capped-sum:1"
    } else {
        "coord0"
    };
    let target = parse_target(a.target.as_deref().unwrap_or(default_target), model.dim())?;
    let opts = VerifyOptions {
        budget: a.budget,
        seed: a.cert.seed,
        grid_points: a.grid_points,
        strict: a.strict,
        shift: a.sample_shift,
    };
    let report = verify_certificate(&cert, &target, &model, &opts)?;
    let csv = report_csv(&report)?;
    match &a.out {
        Some(prefix) => {
            let mut c = prefix.clone().into_os_string();
            c.push(".csv");
            let mut j = prefix.clone().into_os_string();
            j.push(".json");
            emit(Some(PathBuf::from(c).as_path()), &csv)?;
            emit(Some(PathBuf::from(j).as_path()), &report_json(&report)?)?;
        }
        None => emit(None, &csv)?,
    }
    if report.overall_pass {
        Ok(EXIT_OK)
    } else {
        eprintln!("verification failed at {} of {} grid points",
            report.grid.iter().filter(|g| !g.pass).count(),
            report.grid.len());
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn cmd_gaussian(a: &GaussianArgs) -> Result<i32> {
    let alphas = parse_f64_list("alphas", &a.alphas)?;
    let xs = parse_x_grid(&a.x_grid)?;
    let eps = Eps::parse(&a.eps)?;
    let nd = n_delta(a.n, a.delta);
    let header = [
        "alpha", "x", "bound", "reference", "gaussian", "valid_lo", "valid_hi", "eps", "n_delta",
    ];
    let mut rows = Vec::new();
    for &alpha in &alphas {
        let model = StableModel::new(alpha, SpectralMeasure::symmetric_axes(1, 2.0 - alpha)?)?;
        let e = eps.resolve(v1_eps_threshold(a.n, a.delta, alpha));
        let cert = intermediate_v1_certificate(a.n, a.delta, e, &model)?;
        for &x in &xs {
            let q = cert.query(x);
            let (lo, hi) = if cert.valid_x.is_empty() {
                (None, None)
            } else {
                (Some(cert.valid_x.lo), Some(cert.valid_x.hi))
            };
            rows.push(vec![
                format!("{alpha}"),
                format!("{x}"),
                output::fmt_opt(q.in_range.then_some(q.value)),
                format!("{}", gaussian_limit_v1_reference(x, alpha, e, nd)),
                format!("{}", gaussian_limit_bound(x, a.n, a.delta)),
                output::fmt_opt(lo),
                output::fmt_opt(hi),
                format!("{e}"),
                format!("{nd}"),
            ]);
        }
    }
    emit(a.out.as_deref(), &csv_bytes(&header, rows)?)?;
    Ok(EXIT_OK)
}

fn cmd_regimes(a: &RegimesArgs) -> Result<i32> {
    let model = a.model.model()?;
    let regimes: Vec<Regime> = if model.alpha() > 1.0 {
        vec![
            Regime::SmallX,
            Regime::IntermediateV1,
            Regime::IntermediateV2,
            Regime::MedianV1,
            Regime::MedianV2,
        ]
    } else {
        vec![Regime::MedianV1, Regime::MedianV2]
    };
    let names: Vec<&str> = regimes.iter().map(|r| r.as_str()).collect();
    let cert_args = CertArgs {
        regime: names.join(","),
        n: a.n.clone(),
        delta: a.delta.clone(),
        eps: a.eps.clone(),
        lambda: "auto".into(),
        r: None,
        gamma: a.gamma.clone(),
        mc_budget: 0,
        seed: 0,
    };
    let header = ["n", "regime", "delta", "valid_lo", "valid_hi", "lo_inclusive", "hi_inclusive", "note"];
    let mut rows = Vec::new();
    for req in requests(&cert_args)? {
        let delta = if req.regime == Regime::IntermediateV1 {
            format!("{}", req.delta)
        } else {
            String::new()
        };
        let mut row = vec![req.n.to_string(), req.regime.as_str().to_string(), delta];
        match certificate(req, &cert_args, &model) {
            Ok(c) if c.is_applicable() => {
                let v = c.valid_x;
                row.extend([
                    format!("{}", v.lo),
                    format!("{}", v.hi),
                    v.lo_inclusive.to_string(),
                    v.hi_inclusive.to_string(),
                    String::new(),
                ]);
            }
            Ok(_) => row.extend(["", "", "", "", "empty"].map(String::from)),
            Err(e) if e.is_numerical() => return Err(e),
            Err(e) => row.extend([String::new(), String::new(), String::new(), String::new(), e.to_string()]),
        }
        rows.push(row);
    }
    emit(None, &csv_bytes(&header, rows)?)?;
    Ok(EXIT_OK)
}
