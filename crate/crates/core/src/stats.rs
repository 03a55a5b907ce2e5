//! Estimators and tests used by the verifier and the statistical test suite.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::sampler::RngStream;

/// Two-sided 99% Clopper–Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let half = 0.005;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0)
            .expect("positive shape")
            .inverse_cdf(half)
    };
    let hi = if k == n {
        1.0
    } else if k == 0 {
        1.0 - half.powf(1.0 / nf)
    } else {
        Beta::new(kf + 1.0, nf - kf)
            .expect("positive shape")
            .inverse_cdf(1.0 - half)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub x: f64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub stderr: f64,
    pub exceedances: usize,
}

/// Empirical `P(value − center ≥ x)` with 99% Clopper–Pearson intervals.
pub fn estimate_tail(samples: &[f64], center: f64, x_grid: &[f64]) -> Result<Vec<TailEstimate>> {
    if samples.is_empty() {
        return Err(Error::param("samples", 0.0, "must be non-empty"));
    }
    if !center.is_finite() {
        return Err(Error::param("center", center, "must be finite"));
    }
    let mut dev: Vec<f64> = samples.iter().map(|v| v - center).collect();
    dev.sort_by(f64::total_cmp);
    let n = dev.len();
    Ok(x_grid
        .iter()
        .map(|&x| {
            let below = dev.partition_point(|&d| d < x);
            let k = n - below;
            let p = k as f64 / n as f64;
            let (ci_lo, ci_hi) = clopper_pearson(k, n);
            TailEstimate {
                x,
                p_hat: p,
                ci_lo,
                ci_hi,
                stderr: (p * (1.0 - p) / n as f64).sqrt(),
                exceedances: k,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterMode {
    Mean,
    Median,
}

/// Lower median `x_{(⌈N/2⌉)}`.
pub fn lower_median(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    let idx = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(idx, f64::total_cmp);
    *m
}

const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x6d65_6469_616e;

/// Centre estimate and its standard error (bootstrap for the median).
pub fn estimate_center(samples: &[f64], mode: CenterMode) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::param("samples", 0.0, "must be non-empty"));
    }
    let n = samples.len();
    match mode {
        CenterMode::Mean => {
            let m = samples.iter().sum::<f64>() / n as f64;
            if n < 2 {
                return Ok((m, f64::NAN));
            }
            let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            Ok((m, (var / n as f64).sqrt()))
        }
        CenterMode::Median => {
            let med = lower_median(samples);
            let mut rng = RngStream::new(BOOTSTRAP_SEED, n as u64);
            let mut buf = vec![0.0; n];
            let meds: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                .map(|_| {
                    for b in buf.iter_mut() {
                        *b = samples[rng.random_range(0..n)];
                    }
                    lower_median(&buf)
                })
                .collect();
            let mb = meds.iter().sum::<f64>() / meds.len() as f64;
            let var = meds.iter().map(|m| (m - mb).powi(2)).sum::<f64>() / (meds.len() as f64 - 1.0);
            Ok((med, var.sqrt()))
        }
    }
}

/// Kolmogorov distribution tail `Q(λ) = 2Σ_{j≥1}(−1)^{j−1}e^{−2j²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut prev = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * 2.0 * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() <= 1e-10 * prev || term.abs() <= 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        prev = term.abs();
        sign = -sign;
    }
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test (asymptotic p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("samples", 0.0, "must be non-empty"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let en = (n1 * n2 / (n1 + n2)).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of observed counts against expected counts.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::param("bins", observed.len() as f64, "need at least two matching bins"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = observed.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value: 1.0 - dist.cdf(stat),
    })
}

/// Chi-square test that integer draws follow Poisson(`mean`), merging bins
/// so every expected count is at least 5.
pub fn poisson_gof(draws: &[u64], mean: f64) -> Result<ChiSquareResult> {
    let n = draws.len() as f64;
    let max = draws.iter().copied().max().unwrap_or(0) as usize;
    let mut pmf = Vec::with_capacity(max + 1);
    let mut p = (-mean).exp();
    for k in 0..=max {
        if k > 0 {
            p *= mean / k as f64;
        }
        pmf.push(p);
    }
    let mut counts = vec![0u64; max + 1];
    for &d in draws {
        counts[d as usize] += 1;
    }
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0u64, 0.0);
    for k in 0..=max {
        o_acc += counts[k];
        e_acc += pmf[k] * n;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0;
            e_acc = 0.0;
        }
    }
    // The last bin absorbs the remaining upper tail.
    let tail = n - exp.iter().sum::<f64>();
    if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
        if tail < 5.0 {
            *lo += o_acc;
            *le += tail;
        } else {
            obs.push(o_acc);
            exp.push(tail);
        }
    }
    chi_square_gof(&obs, &exp)
}
