//! Model and grid parsing shared by the subcommands, plus the flat
//! `key=value` config file that sits under the command-line flags.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::levy::{Atom, SpectralMeasure, StableModel};

/// Reads a `key=value` file into `--key value` arguments for every key the
/// command line does not already set. Blank lines and `#` comments are skipped.
pub fn merge_config_file(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        p.to_string()
    } else {
        args.get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::Config("--config needs a file path".into()))?
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read config file {path}: {e}")))?;
    let mut out: Vec<String> = args.clone();
    let skip = if args[pos].contains('=') { 1 } else { 2 };
    out.drain(pos..pos + skip);
    let given: BTreeSet<String> = out
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("{path}:{}: expected key=value", lineno + 1))
        })?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("{path}:{}: empty key", lineno + 1)));
        }
        if given.contains(&k) {
            continue;
        }
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

fn parse_f64(name: &'static str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{name}: cannot parse `{s}` as a number")))
}

fn parse_vec(name: &'static str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|c| parse_f64(name, c)).collect()
}

/// `symmetric-axes:mass`, with the dimension given separately.
pub fn parse_preset(s: &str, dim: usize) -> Result<SpectralMeasure> {
    let (name, mass) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("preset `{s}`: expected name:mass")))?;
    match name {
        "symmetric-axes" => SpectralMeasure::symmetric_axes(dim, parse_f64("preset", mass)?),
        _ => Err(Error::Config(format!("unknown preset `{name}`"))),
    }
}

/// Atoms as `x,y,…:weight` entries separated by `;`.
pub fn parse_atoms(s: &str) -> Result<SpectralMeasure> {
    let atoms = s
        .split(';')
        .filter(|e| !e.trim().is_empty())
        .map(|e| {
            let (dir, w) = e
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("atom `{e}`: expected x,y,…:weight")))?;
            Ok(Atom {
                direction: parse_vec("atoms", dir)?,
                weight: parse_f64("atoms", w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralMeasure::new(atoms)
}

pub fn build_model(
    alpha: f64,
    preset: Option<&str>,
    atoms: Option<&str>,
    dim: usize,
    shift: Option<&str>,
) -> Result<StableModel> {
    let spectral = match (preset, atoms) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either --preset or --atoms, not both".into()))
        }
        (Some(p), None) => parse_preset(p, dim)?,
        (None, Some(a)) => parse_atoms(a)?,
        (None, None) => return Err(Error::Config("a model needs --preset or --atoms".into())),
    };
    match shift {
        Some(s) => StableModel::with_shift(alpha, spectral, parse_vec("shift", s)?),
        None => StableModel::new(alpha, spectral),
    }
}

/// `lo:hi:count`, geometrically spaced with both ends included.
pub fn parse_x_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("x-grid `{s}`: expected lo:hi:count")));
    }
    let lo = parse_f64("x-grid", parts[0])?;
    let hi = parse_f64("x-grid", parts[1])?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("x-grid count `{}` is not an integer", parts[2])))?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(Error::param("x-grid", lo, "needs 0 < lo ≤ hi < ∞ and count ≥ 1"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let ratio = hi / lo;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * ratio.powf(i as f64 / (count - 1) as f64)
            }
        })
        .collect())
}

/// `10`, `2,5,10` or the inclusive range `2:30`.
pub fn parse_n_list(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::Config(format!("n `{s}`: expected an integer, a list or lo:hi"));
    let ns: Vec<u32> = if let Some((a, b)) = s.split_once(':') {
        let (a, b): (u32, u32) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|c| c.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(Error::param("n", 0.0, "every n must be at least 2"));
    }
    Ok(ns)
}

pub fn parse_f64_list(name: &'static str, s: &str) -> Result<Vec<f64>> {
    parse_vec(name, s)
}

/// `auto` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eps {
    Auto,
    Value(f64),
}

impl Eps {
    pub fn parse(s: &str) -> Result<Eps> {
        if s == "auto" {
            Ok(Eps::Auto)
        } else {
            Ok(Eps::Value(parse_f64("eps", s)?))
        }
    }

    pub fn resolve(self, threshold: f64) -> f64 {
        match self {
            Eps::Auto => crate::bounds_mean::AUTO_EPS_FACTOR * threshold,
            Eps::Value(v) => v,
        }
    }
}
