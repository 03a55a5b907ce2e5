//! Stable Lévy measures with a discrete spectral part.
//!
//! The Lévy measure is `ν(B) = ∫_S σ(dξ) ∫_0^∞ 1_B(rξ) r^{-1-α} dr`, so every
//! radial quantity below is a closed form in the total spectral mass
//! `σ̄ = σ(S^{d-1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_NORM_TOL: f64 = 1e-12;
const MASS_REL_TOL: f64 = 1e-12;

/// One atom of a discrete spectral measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Discrete measure on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let total_mass = atoms.iter().map(|a| a.weight).sum();
        let measure = SpectralMeasure { atoms, total_mass };
        measure.validate()?;
        Ok(measure)
    }

    /// Equal weights on `±e_i`, `i = 1..d`, summing to `mass`.
    pub fn symmetric_axes(dim: usize, mass: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spectral("dimension must be at least 1".into()));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param("mass", mass, "must be positive and finite"));
        }
        let weight = mass / (2 * dim) as f64;
        let mut atoms = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut direction = vec![0.0; dim];
                direction[i] = sign;
                atoms.push(Atom { direction, weight });
            }
        }
        SpectralMeasure::new(atoms)
    }

    /// Rebuild from serialized parts, revalidating the cached mass.
    pub fn from_parts(atoms: Vec<Atom>, total_mass: f64) -> Result<Self> {
        let measure = SpectralMeasure { atoms, total_mass };
        measure.validate()?;
        Ok(measure)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .atoms
            .first()
            .ok_or_else(|| Error::Spectral("no atoms".into()))?;
        let dim = first.direction.len();
        if dim == 0 {
            return Err(Error::Spectral("zero-dimensional direction".into()));
        }
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.direction.len() != dim {
                return Err(Error::Spectral(format!(
                    "atom {i} has dimension {} (expected {dim})",
                    atom.direction.len()
                )));
            }
            let norm = norm(&atom.direction);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Spectral(format!(
                    "atom {i} direction has norm {norm} (expected 1)"
                )));
            }
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(Error::Spectral(format!(
                    "atom {i} has non-positive weight {}",
                    atom.weight
                )));
            }
        }
        let sum: f64 = self.atoms.iter().map(|a| a.weight).sum();
        if (sum - self.total_mass).abs() > MASS_REL_TOL * sum {
            return Err(Error::Spectral(format!(
                "cached total mass {} disagrees with atom sum {sum}",
                self.total_mass
            )));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].direction.len()
    }

    /// `Σ w_j ξ_j`, the vector first moment of σ.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for atom in &self.atoms {
            for (acc, &c) in m.iter_mut().zip(&atom.direction) {
                *acc += atom.weight * c;
            }
        }
        m
    }
}

/// α-stable law `ID(b, 0, ν)` with discrete spectral measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableModel {
    alpha: f64,
    spectral: SpectralMeasure,
    shift: Vec<f64>,
}

impl StableModel {
    pub fn new(alpha: f64, spectral: SpectralMeasure) -> Result<Self> {
        let dim = spectral.dim();
        Self::with_shift(alpha, spectral, vec![0.0; dim])
    }

    pub fn with_shift(alpha: f64, spectral: SpectralMeasure, shift: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param("alpha", alpha, "must lie in (0, 2)"));
        }
        spectral.validate()?;
        if shift.len() != spectral.dim() {
            return Err(Error::Spectral(format!(
                "shift has dimension {} but spectral measure has {}",
                shift.len(),
                spectral.dim()
            )));
        }
        Ok(StableModel {
            alpha,
            spectral,
            shift,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.spectral.dim()
    }

    pub fn spectral(&self) -> &SpectralMeasure {
        &self.spectral
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn sigma_bar(&self) -> f64 {
        self.spectral.total_mass()
    }

    /// Errors unless `1 < α < 2`.
    pub fn require_alpha_above_one(&self) -> Result<()> {
        if self.alpha > 1.0 {
            Ok(())
        } else {
            Err(Error::param(
                "alpha",
                self.alpha,
                "this operation requires 1 < alpha < 2",
            ))
        }
    }
}

/// Radius at which the Lévy measure is split into bounded and tail parts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 {
            Ok(TruncationLevel(r))
        } else {
            Err(Error::param("R", r, "truncation level must be positive"))
        }
    }

    /// No truncation at all; only meaningful for samplers.
    pub fn infinite() -> Self {
        TruncationLevel(f64::INFINITY)
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `ν(‖u‖ > R) = σ̄ / (α R^α)`.
pub fn tail_mass(model: &StableModel, r: TruncationLevel) -> f64 {
    model.sigma_bar() / (model.alpha() * r.get().powf(model.alpha()))
}

/// `P(Z_R ≠ 0) = 1 − exp(−ν(‖u‖ > R))`.
pub fn tail_event_probability(model: &StableModel, r: TruncationLevel) -> f64 {
    event_probability_from_mass(tail_mass(model, r))
}

/// `1 − exp(−m)`, evaluated without cancellation for small `m`.
pub fn event_probability_from_mass(mass: f64) -> f64 {
    -(-mass).exp_m1()
}

/// `α_k = ∫_{B(0,R)} ‖u‖^k ν(du) = σ̄ R^{k−α} / (k − α)`.
pub fn truncated_norm_moment(model: &StableModel, k: u32, r: TruncationLevel) -> Result<f64> {
    let kf = k as f64;
    let alpha = model.alpha();
    if k == 0 || kf <= alpha {
        return Err(Error::param(
            "k",
            kf,
            format!("moment order must exceed alpha = {alpha}"),
        ));
    }
    Ok(model.sigma_bar() * r.get().powf(kf - alpha) / (kf - alpha))
}

/// Lower and upper bounds on `E‖Z_R‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanNormBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Sandwich `σ̄e^{−σ̄/(αR^α)} / ((α−1)R^{α−1}) ≤ E‖Z_R‖ ≤ σ̄ / ((α−1)R^{α−1})`.
pub fn tail_norm_mean_bounds(model: &StableModel, r: TruncationLevel) -> Result<MeanNormBounds> {
    model.require_alpha_above_one()?;
    Ok(mean_norm_bounds_raw(model.sigma_bar(), model.alpha(), r.get()))
}

pub(crate) fn mean_norm_bounds_raw(sigma_bar: f64, alpha: f64, r: f64) -> MeanNormBounds {
    let upper = sigma_bar / ((alpha - 1.0) * r.powf(alpha - 1.0));
    let mass = sigma_bar / (alpha * r.powf(alpha));
    MeanNormBounds {
        lower: upper * (-mass).exp(),
        upper,
    }
}
