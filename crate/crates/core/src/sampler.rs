//! Simulation of stable vectors, of the truncated parts `Y_R` and `Z_R`, and
//! of truncated Poisson configurations.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::levy::{tail_mass, Atom, StableModel, TruncationLevel};

/// Seeded ChaCha stream; `(seed, stream_id)` fixes the output sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

const CHUNK: usize = 4096;

/// Draws `count` values with `draw`, splitting the work into fixed-size chunks
/// that each get their own stream. The result does not depend on the number
/// of worker threads.
pub fn draw_parallel<T, F>(count: usize, seed: u64, stream_base: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(seed, stream_base.wrapping_add(c as u64));
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Finite point set standing for a truncated Poisson configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    pub points: Vec<Vec<f64>>,
    pub eps_in: f64,
    pub r: f64,
}

impl Configuration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| crate::levy::norm(p))
    }
}

/// How `sample_y_r` treats the jumps of norm at most `eps_in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallJumps {
    Discard,
    /// Replace them by a centred Gaussian with the same covariance.
    Gaussian,
}

fn pick_atom<'a>(atoms: &'a [Atom], total: f64, rng: &mut RngStream) -> &'a Atom {
    let mut t = rng.open01() * total;
    for a in atoms {
        if t < a.weight {
            return a;
        }
        t -= a.weight;
    }
    atoms.last().expect("spectral measure has atoms")
}

fn poisson(mean: f64, rng: &mut RngStream) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    let k: f64 = d.sample(rng);
    k as u64
}

/// Poisson(mean) conditioned on being at least 1.
fn poisson_nonzero(mean: f64, rng: &mut RngStream) -> u64 {
    if mean > 0.5 {
        loop {
            let k = poisson(mean, rng);
            if k > 0 {
                return k;
            }
        }
    }
    // Inverse CDF of the zero-truncated law, which is concentrated near 1.
    let p0 = (-mean).exp();
    let mut u = rng.open01() * (-(-mean).exp_m1());
    let mut k = 1u64;
    let mut pk = p0 * mean;
    loop {
        if u <= pk || pk == 0.0 {
            return k;
        }
        u -= pk;
        k += 1;
        pk *= mean / k as f64;
    }
}

/// Radius with law `αR^α r^{−1−α}dr` on `(R, ∞)`.
pub fn sample_pareto_radius(r: f64, alpha: f64, rng: &mut RngStream) -> f64 {
    pareto_from_uniform(r, alpha, rng.open01())
}

pub(crate) fn pareto_from_uniform(r: f64, alpha: f64, u: f64) -> f64 {
    r * u.powf(-1.0 / alpha)
}

/// Radius with density proportional to `r^{−1−α}` on `(eps_in, R]`.
pub(crate) fn annulus_radius(eps_in: f64, r: f64, alpha: f64, u: f64) -> f64 {
    let a = eps_in.powf(-alpha);
    let b = if r.is_finite() { r.powf(-alpha) } else { 0.0 };
    (a - u * (a - b)).powf(-1.0 / alpha)
}

fn add_jumps(
    out: &mut [f64],
    count: u64,
    model: &StableModel,
    radius: impl Fn(&mut RngStream) -> f64,
    rng: &mut RngStream,
) {
    let atoms = model.spectral().atoms();
    let total = model.sigma_bar();
    for _ in 0..count {
        let atom = pick_atom(atoms, total, rng);
        let rad = radius(rng);
        for (o, d) in out.iter_mut().zip(&atom.direction) {
            *o += rad * d;
        }
    }
}

/// Compound Poisson part of `X` made of the jumps of norm larger than `R`.
pub fn sample_z_r(model: &StableModel, r: TruncationLevel, rng: &mut RngStream) -> Vec<f64> {
    let mut out = vec![0.0; model.dim()];
    if !r.is_finite() {
        return out;
    }
    let n = poisson(tail_mass(model, r), rng);
    let (rr, alpha) = (r.get(), model.alpha());
    add_jumps(&mut out, n, model, |g| sample_pareto_radius(rr, alpha, g), rng);
    out
}

/// `Z_R` conditioned on `Z_R ≠ 0`; returns the draw and `P(Z_R ≠ 0)`.
pub fn sample_z_r_nonzero(
    model: &StableModel,
    r: TruncationLevel,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if !r.is_finite() {
        return Err(Error::param("R", r.get(), "Z_R is identically zero for R = ∞"));
    }
    let mut out = vec![0.0; model.dim()];
    let n = poisson_nonzero(tail_mass(model, r), rng);
    let (rr, alpha) = (r.get(), model.alpha());
    add_jumps(&mut out, n, model, |g| sample_pareto_radius(rr, alpha, g), rng);
    Ok(out)
}

fn check_not_one(alpha: f64) -> Result<()> {
    if (alpha - 1.0).abs() < 1e-6 {
        Err(Error::UnsupportedRegime(
            "α = 1 is excluded from every construction".into(),
        ))
    } else {
        Ok(())
    }
}

/// Scale `σ_s` such that `σ_s·S_α(1, 1, 0) + w/(α−1)` has Lévy measure
/// `w·r^{−1−α}dr` on `(0, ∞)` and drift matching compensation on `{r ≤ 1}`.
pub fn one_sided_scale(weight: f64, alpha: f64) -> f64 {
    let c = gamma(2.0 - alpha) * (std::f64::consts::FRAC_PI_2 * alpha).cos() / (alpha * (1.0 - alpha));
    (weight * c).powf(1.0 / alpha)
}

/// Chambers–Mallows–Stuck draw of `S_α(1, β, 0)`, `α ≠ 1`.
pub fn sample_standard_stable(alpha: f64, beta: f64, rng: &mut RngStream) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let v = (rng.open01() - 0.5) * std::f64::consts::PI;
    let w: f64 = Exp1.sample(rng);
    let t = beta * (half_pi * alpha).tan();
    let b = t.atan() / alpha;
    let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
    let a = alpha * (v + b);
    s * a.sin() / v.cos().powf(1.0 / alpha) * ((v - a).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Exact draw of the stable vector whose Lévy measure is `σ ⊗ r^{−1−α}dr`.
pub fn sample_stable_vector(model: &StableModel, rng: &mut RngStream) -> Result<Vec<f64>> {
    let alpha = model.alpha();
    check_not_one(alpha)?;
    let mut out = model.shift().to_vec();
    for atom in model.spectral().atoms() {
        let scale = one_sided_scale(atom.weight, alpha);
        let s = scale * sample_standard_stable(alpha, 1.0, rng) + atom.weight / (alpha - 1.0);
        for (o, d) in out.iter_mut().zip(&atom.direction) {
            *o += s * d;
        }
    }
    Ok(out)
}

/// `σ̄·eps_in^{2−α}/(2−α)`, the second moment of the discarded small jumps.
pub fn discarded_second_moment(model: &StableModel, eps_in: f64) -> f64 {
    let alpha = model.alpha();
    model.sigma_bar() * eps_in.powf(2.0 - alpha) / (2.0 - alpha)
}

/// Drift compensating the jumps of norm in `(eps_in, 1]`.
pub fn annulus_drift(model: &StableModel, eps_in: f64) -> Vec<f64> {
    let alpha = model.alpha();
    let m1 = model.spectral().first_moment();
    if eps_in >= 1.0 {
        return vec![0.0; m1.len()];
    }
    let integral = (1.0 - eps_in.powf(1.0 - alpha)) / (1.0 - alpha);
    m1.iter().map(|m| -m * integral).collect()
}

/// `ν(eps_in < ‖u‖ ≤ R)`.
pub fn annulus_mass(model: &StableModel, eps_in: f64, r: f64) -> f64 {
    let alpha = model.alpha();
    let outer = if r.is_finite() { r.powf(-alpha) } else { 0.0 };
    model.sigma_bar() * (eps_in.powf(-alpha) - outer) / alpha
}

/// Bounded-jump part `Y_R`, small jumps discarded below `eps_in`.
pub fn sample_y_r(
    model: &StableModel,
    r: TruncationLevel,
    eps_in: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    sample_y_r_with(model, r, eps_in, SmallJumps::Discard, rng)
}

pub fn sample_y_r_with(
    model: &StableModel,
    r: TruncationLevel,
    eps_in: f64,
    small: SmallJumps,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    check_not_one(model.alpha())?;
    if !(eps_in > 0.0 && eps_in <= r.get()) {
        return Err(Error::param(
            "eps_in",
            eps_in,
            format!("must lie in (0, R] with R = {}", r.get()),
        ));
    }
    let mut out = annulus_drift(model, eps_in);
    for (o, s) in out.iter_mut().zip(model.shift()) {
        *o += s;
    }
    let alpha = model.alpha();
    let rr = r.get();
    let n = poisson(annulus_mass(model, eps_in, rr), rng);
    add_jumps(
        &mut out,
        n,
        model,
        |g| {
            let u = g.open01();
            annulus_radius(eps_in, rr, alpha, u)
        },
        rng,
    );
    if small == SmallJumps::Gaussian {
        // Covariance Σ_j w_j ξ_j ξ_jᵀ·eps^{2−α}/(2−α): one normal per atom.
        let factor = eps_in.powf(2.0 - alpha) / (2.0 - alpha);
        for atom in model.spectral().atoms() {
            let z: f64 = StandardNormal.sample(rng);
            let s = z * (atom.weight * factor).sqrt();
            for (o, d) in out.iter_mut().zip(&atom.direction) {
                *o += s * d;
            }
        }
    }
    Ok(out)
}

/// Poisson configuration of the points with norm in `(eps_in, R]`.
pub fn sample_config(
    model: &StableModel,
    r: TruncationLevel,
    eps_in: f64,
    rng: &mut RngStream,
) -> Result<Configuration> {
    if !(eps_in > 0.0) {
        return Err(Error::param(
            "eps_in",
            eps_in,
            "ν is infinite near 0; a positive inner radius is required",
        ));
    }
    let rr = r.get();
    if !(eps_in < rr) {
        return Err(Error::param("eps_in", eps_in, format!("must be below R = {rr}")));
    }
    let alpha = model.alpha();
    let n = poisson(annulus_mass(model, eps_in, rr), rng);
    let atoms = model.spectral().atoms();
    let total = model.sigma_bar();
    let mut points = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let atom = pick_atom(atoms, total, rng);
        let rad = annulus_radius(eps_in, rr, alpha, rng.open01());
        points.push(atom.direction.iter().map(|d| rad * d).collect());
    }
    Ok(Configuration {
        points,
        eps_in,
        r: rr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::SpectralMeasure;

    fn model(alpha: f64, mass: f64) -> StableModel {
        StableModel::new(alpha, SpectralMeasure::symmetric_axes(2, mass).unwrap()).unwrap()
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn parallel_draws_are_deterministic() {
        let f = |g: &mut RngStream| g.open01();
        let a = draw_parallel(10_000, 1, 0, f);
        let b = draw_parallel(10_000, 1, 0, f);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10_000);
    }

    #[test]
    fn pareto_endpoint_and_moments() {
        assert_eq!(pareto_from_uniform(2.0, 1.5, 1.0), 2.0);
        let (r, alpha, n) = (1.0, 1.5, 1_000_000usize);
        let mut rng = RngStream::new(11, 0);
        let draws: Vec<f64> = (0..n).map(|_| sample_pareto_radius(r, alpha, &mut rng)).collect();
        let p = draws.iter().filter(|&&x| x > 2.0 * r).count() as f64 / n as f64;
        let target = 2f64.powf(-alpha);
        let se = (target * (1.0 - target) / n as f64).sqrt();
        assert!((p - target).abs() < 4.0 * se);
        // Finite-variance check on the capped radius, whose mean is closed form.
        let cap = 50.0;
        let capped: Vec<f64> = draws.iter().map(|x| x.min(cap)).collect();
        let mean = capped.iter().sum::<f64>() / n as f64;
        let var = capped.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let exact = alpha * r / (alpha - 1.0) * (1.0 - (r / cap).powf(alpha - 1.0))
            + cap * (r / cap).powf(alpha);
        assert!((mean - exact).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn z_r_is_zero_without_jumps() {
        let m = model(1.5, 2.0);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert!(sample_z_r(&m, TruncationLevel::infinite(), &mut rng)
                .iter()
                .all(|&v| v == 0.0));
        }
        // tail mass at R = 1e6 is about 1e-9.
        let r = TruncationLevel::new(1e6).unwrap();
        let zeros = (0..10_000)
            .filter(|_| sample_z_r(&m, r, &mut rng).iter().all(|&v| v == 0.0))
            .count();
        assert_eq!(zeros, 10_000);
    }

    #[test]
    fn z_r_jump_count_is_poisson() {
        // The count drawn by sample_z_r at R = 0.7: mass σ̄/(αR^α).
        let m = model(1.5, 2.0);
        let r = TruncationLevel::new(0.7).unwrap();
        let mean = crate::levy::tail_mass(&m, r);
        let mut rng = RngStream::new(13, 0);
        let draws: Vec<u64> = (0..100_000).map(|_| poisson(mean, &mut rng)).collect();
        let gof = crate::stats::poisson_gof(&draws, mean).unwrap();
        assert!(gof.p_value > 0.01, "{gof:?}");
        // Large means go through a different branch of the generator.
        let draws: Vec<u64> = (0..100_000).map(|_| poisson(250.0, &mut rng)).collect();
        assert!(crate::stats::poisson_gof(&draws, 250.0).unwrap().p_value > 0.01);
    }

    #[test]
    fn conditioned_count_is_positive() {
        let m = model(1.5, 2.0);
        let mut rng = RngStream::new(2, 0);
        for &rr in &[0.1, 1.0, 100.0] {
            let r = TruncationLevel::new(rr).unwrap();
            for _ in 0..1000 {
                let z = sample_z_r_nonzero(&m, r, &mut rng).unwrap();
                assert!(crate::levy::norm(&z) > 0.0);
            }
        }
        assert!(poisson_nonzero(1e-12, &mut rng) == 1);
    }

    #[test]
    fn zero_truncated_poisson_mean() {
        let mean = 0.3;
        let mut rng = RngStream::new(5, 0);
        let n = 200_000;
        let s: f64 = (0..n).map(|_| poisson_nonzero(mean, &mut rng) as f64).sum::<f64>() / n as f64;
        let exact = mean / (1.0 - (-mean as f64).exp());
        assert!((s - exact).abs() < 0.01);
    }

    #[test]
    fn scale_matches_known_value() {
        assert!((one_sided_scale(0.5, 1.5).powf(1.5) - 0.8355).abs() < 1e-3);
        assert!(one_sided_scale(1.0, 0.8) > 0.0);
    }

    #[test]
    fn stable_rejects_alpha_one() {
        let m = model(1.0, 2.0);
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            sample_stable_vector(&m, &mut rng),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn symmetric_marginal_has_no_skew() {
        let m = model(1.5, 2.0);
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_stable_vector(&m, &mut rng).unwrap()[0])
            .collect();
        let pos = xs.iter().filter(|&&x| x > 0.0).count() as f64 / n as f64;
        assert!((pos - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn discarded_moment_example() {
        let m = model(1.5, 2.0);
        assert!((discarded_second_moment(&m, 1e-4) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn y_r_with_empty_annulus_is_drift() {
        let one = StableModel::new(
            1.5,
            SpectralMeasure::new(vec![Atom {
                direction: vec![1.0],
                weight: 1.0,
            }])
            .unwrap(),
        )
        .unwrap();
        let mut rng = RngStream::new(1, 0);
        let y = sample_y_r(&one, TruncationLevel::new(0.5).unwrap(), 0.5, &mut rng).unwrap();
        let drift = -(1.0 - 0.5f64.powf(-0.5)) / -0.5;
        assert!((y[0] - drift).abs() < 1e-12);
        assert!(sample_y_r(&one, TruncationLevel::new(0.5).unwrap(), 0.6, &mut rng).is_err());
    }

    #[test]
    fn y_r_symmetric_mean_is_zero() {
        let m = model(1.5, 2.0);
        let r = TruncationLevel::new(1.0).unwrap();
        let mut rng = RngStream::new(8, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_y_r(&m, r, 1e-2, &mut rng).unwrap()[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn config_rejects_zero_inner_radius() {
        let m = model(0.8, 1.0);
        let mut rng = RngStream::new(1, 0);
        assert!(sample_config(&m, TruncationLevel::new(1.0).unwrap(), 0.0, &mut rng).is_err());
        assert!(sample_config(&m, TruncationLevel::new(1.0).unwrap(), 1.0, &mut rng).is_err());
    }

    #[test]
    fn config_points_lie_in_annulus() {
        let m = model(0.8, 1.0);
        let mut rng = RngStream::new(4, 0);
        for _ in 0..200 {
            let c = sample_config(&m, TruncationLevel::new(3.0).unwrap(), 0.1, &mut rng).unwrap();
            for r in c.radii() {
                assert!(r > 0.1 && r <= 3.0 + 1e-12);
            }
        }
    }

    #[test]
    fn annulus_radius_inverts_cdf() {
        let (e, r, a) = (0.1, 3.0, 0.8);
        for i in 1..10 {
            let u = i as f64 / 10.0;
            let x = annulus_radius(e, r, a, u);
            let cdf = (e.powf(-a) - x.powf(-a)) / (e.powf(-a) - r.powf(-a));
            assert!((cdf - u).abs() < 1e-12);
        }
    }
}
