//! Quantities computed from the non-trivial eigenvalues of an operator
//! product `xy`: spectral weights, the causal Lagrangian and the spectral
//! classification of point pairs.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{C64, ZERO};

/// Absolute floor below which every eigenvalue modulus counts as zero when
/// classifying a pair.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("classification tolerance must lie in (0, 1), got {0}")]
    InvalidTolerance(f64),
    #[error("{got} eigenvalues do not fit into a list of length 2n = {cap}")]
    TooManyEigenvalues { got: usize, cap: usize },
    #[error("spin dimension must be positive")]
    ZeroSpinDimension,
}

/// The `2n` non-trivial eigenvalues of a product `xy`, zero-padded when the
/// product has lower rank.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueList {
    values: Vec<C64>,
    spin_dim: usize,
}

impl EigenvalueList {
    /// Pads `values` with zeros up to `2n`.
    pub fn new(values: Vec<C64>, spin_dim: usize) -> Result<Self, SpectralError> {
        if spin_dim == 0 {
            return Err(SpectralError::ZeroSpinDimension);
        }
        let cap = 2 * spin_dim;
        if values.len() > cap {
            return Err(SpectralError::TooManyEigenvalues { got: values.len(), cap });
        }
        let mut values = values;
        values.resize(cap, ZERO);
        Ok(Self { values, spin_dim })
    }

    /// Keeps the `2n` eigenvalues of largest modulus and pads the rest. Used
    /// when a reduced matrix carries extra (numerically) zero eigenvalues.
    pub fn from_largest(mut values: Vec<C64>, spin_dim: usize) -> Result<Self, SpectralError> {
        values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        values.truncate(2 * spin_dim);
        Self::new(values, spin_dim)
    }

    pub fn from_real(values: &[f64], spin_dim: usize) -> Result<Self, SpectralError> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect(), spin_dim)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn moduli(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|z| z.norm())
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli().fold(0.0, f64::max)
    }

    /// Multiplies every entry by a real factor.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|z| z * s).collect(),
            spin_dim: self.spin_dim,
        }
    }
}

/// `|xy|`: the sum of the absolute values of the eigenvalues.
pub fn spectral_weight(ev: &EigenvalueList) -> f64 {
    ev.moduli().sum()
}

/// `L = |(xy)^2| - (1/2n) |xy|^2`. Clamped at zero, since the expression is a
/// variance and only roundoff can drive it negative.
pub fn lagrangian(ev: &EigenvalueList) -> f64 {
    let sum_sq: f64 = ev.moduli().map(|m| m * m).sum();
    let weight = spectral_weight(ev);
    let value = sum_sq - weight * weight / (2 * ev.spin_dim()) as f64;
    value.max(0.0)
}

/// The Lagrangian as `(1/4n) sum_{i,j} (|l_i| - |l_j|)^2`.
pub fn lagrangian_variance_form(ev: &EigenvalueList) -> f64 {
    let moduli: Vec<f64> = ev.moduli().collect();
    let mut total = 0.0;
    for &a in &moduli {
        for &b in &moduli {
            total += (a - b) * (a - b);
        }
    }
    total / (4 * ev.spin_dim()) as f64
}

/// `|xy|^2`, the integrand of the boundedness functional.
pub fn boundedness_integrand(ev: &EigenvalueList) -> f64 {
    let w = spectral_weight(ev);
    w * w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causality {
    Spacelike,
    Timelike,
    Lightlike,
}

impl Causality {
    pub fn as_str(self) -> &'static str {
        match self {
            Causality::Spacelike => "spacelike",
            Causality::Timelike => "timelike",
            Causality::Lightlike => "lightlike",
        }
    }
}

impl fmt::Display for Causality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spectral causality with the default absolute floor.
pub fn classify_causality(ev: &EigenvalueList, tol: f64) -> Result<Causality, SpectralError> {
    classify_causality_with_floor(ev, tol, DEFAULT_ZERO_FLOOR)
}

/// Spectral causality of a pair.
///
/// Moduli count as equal when their spread is at most `tol * max|l|`; the
/// eigenvalues count as real when every imaginary part is at most
/// `tol * max|l|`. A product whose largest modulus is below `zero_floor` is
/// spacelike. The equal-modulus test runs first, so complex-conjugate pairs of
/// equal modulus are spacelike.
pub fn classify_causality_with_floor(
    ev: &EigenvalueList,
    tol: f64,
    zero_floor: f64,
) -> Result<Causality, SpectralError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(SpectralError::InvalidTolerance(tol));
    }
    let max = ev.max_modulus();
    if max <= zero_floor {
        return Ok(Causality::Spacelike);
    }
    let min = ev.moduli().fold(f64::INFINITY, f64::min);
    if max - min <= tol * max {
        return Ok(Causality::Spacelike);
    }
    if ev.values().iter().all(|z| z.im.abs() <= tol * max) {
        Ok(Causality::Timelike)
    } else {
        Ok(Causality::Lightlike)
    }
}
