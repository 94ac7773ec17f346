//! Causal fermion systems built from Dirac plane waves on a lattice.
//!
//! Continuum plane-wave solutions with spatial momenta on the grid
//! `k_j = 2 pi a_j / (eps N_s)`, `a_j in (-N_s/2, N_s/2]`, are sampled at the
//! points of an `N_t x N_s^3` lattice of spacing `eps`. Spatial directions are
//! periodic; the time direction is a finite window, so time differences are
//! taken literally. The occupied modes are orthonormal in the scalar product
//! `2 pi eps^3 sum_x psi^dagger phi` on any time slice.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::measure::{Atom, DiscreteMeasure, MeasureError};
use crate::opspace::{OpError, OperatorPoint, DEFAULT_RANK_TOL};

/// Spin dimension of Dirac systems.
pub const DIRAC_SPIN_DIM: usize = 2;

/// Minkowski metric, signature `(+,-,-,-)`.
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

const MASS_SHELL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeaError {
    #[error("lattice spacing must be positive and finite, got {0}")]
    InvalidSpacing(f64),
    #[error("lattice extent {name} = {value} is below 2")]
    InvalidExtent { name: &'static str, value: usize },
    #[error("mass must be non-negative and finite, got {0}")]
    InvalidMass(f64),
    #[error("mode {label} has a singular or inaccurate amplitude (residual {residual:.3e})")]
    MassShellFailure { label: ModeLabel, residual: f64 },
    #[error("mode {label} is not on the momentum grid")]
    UnknownMode { label: ModeLabel },
    #[error("mode {label} is not occupied")]
    ModeNotOccupied { label: ModeLabel },
    #[error("mode {label} is already occupied")]
    ModeAlreadyOccupied { label: ModeLabel },
    #[error("no occupied modes remain")]
    EmptyOccupation,
    #[error("wave functions live on different lattices or slice {slice} is out of range")]
    SliceMismatch { slice: usize },
    #[error("lattice point {coords:?}: {source}")]
    Construction {
        coords: [usize; 4],
        #[source]
        source: OpError,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// The four Dirac matrices in the Dirac representation.
pub fn dirac_matrices() -> [CMatrix; 4] {
    let i = C64::new(0.0, 1.0);
    let pauli = [
        [[ZERO, ONE], [ONE, ZERO]],
        [[ZERO, -i], [i, ZERO]],
        [[ONE, ZERO], [ZERO, -ONE]],
    ];
    let mut gammas = [
        CMatrix::zeros(4, 4),
        CMatrix::zeros(4, 4),
        CMatrix::zeros(4, 4),
        CMatrix::zeros(4, 4),
    ];
    for a in 0..2 {
        gammas[0][(a, a)] = ONE;
        gammas[0][(a + 2, a + 2)] = -ONE;
    }
    for (j, sigma) in pauli.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                gammas[j + 1][(a, b + 2)] = sigma[a][b];
                gammas[j + 1][(a + 2, b)] = -sigma[a][b];
            }
        }
    }
    gammas
}

/// `k_j gamma^j = k^0 gamma^0 - k . gamma` for a contravariant vector `k`.
pub fn slash(k: [C64; 4]) -> CMatrix {
    let gammas = dirac_matrices();
    let mut out = CMatrix::zeros(4, 4);
    for j in 0..4 {
        out += &gammas[j] * (k[j] * METRIC[j]);
    }
    out
}

/// Minkowski inner product of two real four-vectors.
pub fn minkowski(a: [f64; 4], b: [f64; 4]) -> f64 {
    (0..4).map(|j| METRIC[j] * a[j] * b[j]).sum()
}

/// Geometry of the lattice and the particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub eps: f64,
    pub n_t: usize,
    pub n_s: usize,
    pub mass: f64,
}

impl LatticeSpec {
    pub fn new(eps: f64, n_t: usize, n_s: usize, mass: f64) -> Result<Self, SeaError> {
        let spec = Self { eps, n_t, n_s, mass };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SeaError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(SeaError::InvalidSpacing(self.eps));
        }
        if self.n_t < 2 {
            return Err(SeaError::InvalidExtent { name: "n_t", value: self.n_t });
        }
        if self.n_s < 2 {
            return Err(SeaError::InvalidExtent { name: "n_s", value: self.n_s });
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(SeaError::InvalidMass(self.mass));
        }
        Ok(())
    }

    /// Number of lattice points `N_t N_s^3`.
    pub fn point_count(&self) -> usize {
        self.n_t * self.spatial_volume()
    }

    pub fn spatial_volume(&self) -> usize {
        self.n_s.pow(3)
    }

    /// Atom index of the point `(t, x1, x2, x3)`, time slowest.
    pub fn point_index(&self, coords: [usize; 4]) -> usize {
        ((coords[0] * self.n_s + coords[1]) * self.n_s + coords[2]) * self.n_s + coords[3]
    }

    pub fn coords(&self, index: usize) -> [usize; 4] {
        let n = self.n_s;
        [index / (n * n * n), (index / (n * n)) % n, (index / n) % n, index % n]
    }

    /// Range of integer momentum labels, `(-N_s/2, N_s/2]`.
    pub fn momentum_labels(&self) -> std::ops::RangeInclusive<i64> {
        let n = self.n_s as i64;
        -((n - 1) / 2)..=n / 2
    }

    /// `2 pi a / (eps N_s)`.
    pub fn momentum(&self, label: i64) -> f64 {
        2.0 * PI * label as f64 / (self.eps * self.n_s as f64)
    }

    /// Squared amplitude normalization `1 / (2 pi eps^3 N_s^3)`.
    pub fn amplitude_norm_sq(&self) -> f64 {
        1.0 / (2.0 * PI * self.eps.powi(3) * self.spatial_volume() as f64)
    }

    /// `xi = y - x` in length units. Time is the literal difference; spatial
    /// components use the representative in `(-N_s/2, N_s/2]`.
    pub fn separation(&self, x: [usize; 4], y: [usize; 4]) -> [f64; 4] {
        let n = self.n_s as i64;
        let mut xi = [0.0; 4];
        xi[0] = (y[0] as f64 - x[0] as f64) * self.eps;
        for j in 1..4 {
            let mut d = (y[j] as i64 - x[j] as i64).rem_euclid(n);
            if 2 * d > n {
                d -= n;
            }
            xi[j] = d as f64 * self.eps;
        }
        xi
    }
}

/// Sign of the frequency of a plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergySign {
    Negative,
    Positive,
}

/// Integer momentum labels and spin index (1 or 2) of a plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub momentum: [i64; 3],
    pub spin: u8,
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.momentum;
        write!(f, "({a},{b},{c};{})", self.spin)
    }
}

/// Removed sea states and added particle states.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OccupationEdits {
    #[serde(default)]
    pub remove: Vec<ModeLabel>,
    #[serde(default)]
    pub add: Vec<ModeLabel>,
}

impl OccupationEdits {
    pub fn is_empty(&self) -> bool {
        self.remove.is_empty() && self.add.is_empty()
    }
}

/// One occupied plane-wave solution `u e^{-i k.x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub label: ModeLabel,
    pub sign: EnergySign,
    /// Contravariant four-momentum, `k^0 = -omega` for sea states.
    pub momentum: [f64; 4],
    /// Amplitude normalized to unit norm in the discrete scalar product.
    pub amplitude: [C64; 4],
}

impl Mode {
    /// `u e^{-i (k^0 t - k.x)}` at a lattice point.
    pub fn value(&self, spec: &LatticeSpec, coords: [usize; 4]) -> [C64; 4] {
        let phase = self.phase(spec, coords);
        self.amplitude.map(|a| a * phase)
    }

    fn phase(&self, spec: &LatticeSpec, coords: [usize; 4]) -> C64 {
        let k = self.momentum;
        let t = coords[0] as f64 * spec.eps;
        let mut arg = -k[0] * t;
        for j in 1..4 {
            arg += k[j] * coords[j] as f64 * spec.eps;
        }
        C64::from_polar(1.0, arg)
    }
}

/// The occupied modes of a system, which form the Hilbert space basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    spec: LatticeSpec,
    modes: Vec<Mode>,
}

fn two_spinor(spin: u8) -> [C64; 2] {
    if spin == 1 {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    }
}

/// `sigma . k` applied to a two-spinor.
fn sigma_dot(k: [f64; 3], chi: [C64; 2]) -> [C64; 2] {
    let i = C64::new(0.0, 1.0);
    let k1 = C64::new(k[0], 0.0);
    let k2 = C64::new(k[1], 0.0);
    let k3 = C64::new(k[2], 0.0);
    [
        k3 * chi[0] + (k1 - i * k2) * chi[1],
        (k1 + i * k2) * chi[0] - k3 * chi[1],
    ]
}

/// Builds the normalized mode for a label and energy sign, checking the
/// momentum-space Dirac equation.
pub fn plane_wave(spec: &LatticeSpec, label: ModeLabel, sign: EnergySign) -> Result<Mode, SeaError> {
    let labels = spec.momentum_labels();
    if !(label.spin == 1 || label.spin == 2) || !label.momentum.iter().all(|a| labels.contains(a)) {
        return Err(SeaError::UnknownMode { label });
    }
    let k = label.momentum.map(|a| spec.momentum(a));
    let m = spec.mass;
    let omega = (k.iter().map(|v| v * v).sum::<f64>() + m * m).sqrt();
    let chi = two_spinor(label.spin);
    let (upper, lower, k0) = if omega + m == 0.0 {
        match sign {
            EnergySign::Negative => ([ZERO, ZERO], chi, 0.0),
            EnergySign::Positive => (chi, [ZERO, ZERO], 0.0),
        }
    } else {
        let s = sigma_dot(k, chi).map(|z| z / (omega + m));
        match sign {
            EnergySign::Negative => (s.map(|z| -z), chi, -omega),
            EnergySign::Positive => (chi, s, omega),
        }
    };
    let raw = [upper[0], upper[1], lower[0], lower[1]];
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = spec.amplitude_norm_sq().sqrt() / norm;
    let amplitude = raw.map(|z| z * scale);
    let momentum = [k0, k[0], k[1], k[2]];

    let operator = slash(momentum.map(|v| C64::new(v, 0.0))) - CMatrix::identity(4, 4) * C64::new(m, 0.0);
    let u = nalgebra::DVector::from_column_slice(&amplitude);
    let residual = (operator * &u).norm() / (u.norm() * (omega + m).max(1.0));
    if !residual.is_finite() || residual > MASS_SHELL_TOL {
        return Err(SeaError::MassShellFailure { label, residual });
    }
    Ok(Mode { label, sign, momentum, amplitude })
}

/// All `2 N_s^3` negative-energy modes, momenta in lexicographic label order
/// and spin 1 before spin 2.
pub fn build_sea_modes(spec: &LatticeSpec) -> Result<ModeTable, SeaError> {
    spec.validate()?;
    let mut modes = Vec::with_capacity(2 * spec.spatial_volume());
    for a in spec.momentum_labels() {
        for b in spec.momentum_labels() {
            for c in spec.momentum_labels() {
                for spin in [1, 2] {
                    let label = ModeLabel { momentum: [a, b, c], spin };
                    modes.push(plane_wave(spec, label, EnergySign::Negative)?);
                }
            }
        }
    }
    Ok(ModeTable { spec: *spec, modes })
}

/// Values of a wave function at every lattice point, in atom index order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWave {
    spec: LatticeSpec,
    values: Vec<[C64; 4]>,
}

impl LatticeWave {
    pub fn new(spec: LatticeSpec, values: Vec<[C64; 4]>) -> Self {
        Self { spec, values }
    }

    pub fn values(&self) -> &[[C64; 4]] {
        &self.values
    }
}

/// `2 pi eps^3 sum_x (psi-bar gamma^0 phi)(t, x)` on the slice `t`.
pub fn dirac_scalar_product(psi: &LatticeWave, phi: &LatticeWave, slice: usize) -> Result<C64, SeaError> {
    let spec = psi.spec;
    if spec != phi.spec || slice >= spec.n_t || psi.values.len() != spec.point_count() || phi.values.len() != spec.point_count() {
        return Err(SeaError::SliceMismatch { slice });
    }
    let volume = spec.spatial_volume();
    let start = slice * volume;
    let sum: C64 = (start..start + volume)
        .map(|p| {
            psi.values[p]
                .iter()
                .zip(&phi.values[p])
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
        })
        .sum();
    Ok(sum * (2.0 * PI * spec.eps.powi(3)))
}

impl ModeTable {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Hilbert space dimension `f`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Removes sea states and appends particle states.
    pub fn with_edits(&self, edits: &OccupationEdits) -> Result<Self, SeaError> {
        let mut modes = self.modes.clone();
        for &label in &edits.remove {
            let pos = modes
                .iter()
                .position(|m| m.label == label && m.sign == EnergySign::Negative)
                .ok_or_else(|| {
                    plane_wave(&self.spec, label, EnergySign::Negative)
                        .err()
                        .unwrap_or(SeaError::ModeNotOccupied { label })
                })?;
            modes.remove(pos);
        }
        for &label in &edits.add {
            let mode = plane_wave(&self.spec, label, EnergySign::Positive)?;
            if modes.iter().any(|m| m.label == label && m.sign == EnergySign::Positive) {
                return Err(SeaError::ModeAlreadyOccupied { label });
            }
            modes.push(mode);
        }
        if modes.is_empty() {
            return Err(SeaError::EmptyOccupation);
        }
        Ok(Self { spec: self.spec, modes })
    }

    /// Samples mode `index` on the whole lattice.
    pub fn sample(&self, index: usize) -> LatticeWave {
        let mode = &self.modes[index];
        let values = (0..self.spec.point_count())
            .map(|p| mode.value(&self.spec, self.spec.coords(p)))
            .collect();
        LatticeWave::new(self.spec, values)
    }

    /// The `4 x f` matrix whose columns are the mode values at a point.
    pub fn spinor_frame(&self, coords: [usize; 4]) -> CMatrix {
        let mut frame = CMatrix::zeros(4, self.modes.len());
        for (j, mode) in self.modes.iter().enumerate() {
            let v = mode.value(&self.spec, coords);
            for a in 0..4 {
                frame[(a, j)] = v[a];
            }
        }
        frame
    }

    /// `F(x)` with `<psi_i|F(x) psi_j> = -(psi-bar_i psi_j)(x)`.
    pub fn local_correlation_operator(&self, coords: [usize; 4]) -> Result<OperatorPoint, SeaError> {
        let frame = self.spinor_frame(coords);
        let core = -dirac_matrices()[0].clone();
        OperatorPoint::from_factorization(&frame.adjoint(), &core, DIRAC_SPIN_DIM, DEFAULT_RANK_TOL)
            .map_err(|source| SeaError::Construction { coords, source })
    }

    /// The spinor matrix `P(x,y) = -sum_l psi_l(x) psi-bar_l(y)`.
    pub fn spinor_kernel(&self, x: [usize; 4], y: [usize; 4]) -> CMatrix {
        let fx = self.spinor_frame(x);
        let fy = self.spinor_frame(y);
        -(fx * fy.adjoint()) * &dirac_matrices()[0]
    }

    /// Gram matrix of the modes in the discrete scalar product on `slice`.
    pub fn gram(&self, slice: usize) -> Result<CMatrix, SeaError> {
        let waves: Vec<LatticeWave> = (0..self.len()).map(|j| self.sample(j)).collect();
        let mut gram = CMatrix::zeros(self.len(), self.len());
        for i in 0..self.len() {
            for j in 0..self.len() {
                gram[(i, j)] = dirac_scalar_product(&waves[i], &waves[j], slice)?;
            }
        }
        Ok(gram)
    }
}

/// Weight assigned to each lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// One per lattice point.
    #[default]
    Counting,
    /// `eps^4` per lattice point, approximating the space-time volume.
    Volume,
}

impl WeightConvention {
    pub fn weight(self, spec: &LatticeSpec) -> f64 {
        match self {
            WeightConvention::Counting => 1.0,
            WeightConvention::Volume => spec.eps.powi(4),
        }
    }
}

/// A lattice system: the occupied modes and the measure of local correlation
/// operators, one atom per lattice point in [`LatticeSpec::point_index`] order.
#[derive(Debug, Clone)]
pub struct LatticeSeaSystem {
    pub spec: LatticeSpec,
    pub edits: OccupationEdits,
    pub convention: WeightConvention,
    pub modes: ModeTable,
    pub measure: DiscreteMeasure,
}

impl LatticeSeaSystem {
    pub fn hilbert_dim(&self) -> usize {
        self.modes.len()
    }

    pub fn point_index(&self, coords: [usize; 4]) -> usize {
        self.spec.point_index(coords)
    }

    pub fn atom(&self, coords: [usize; 4]) -> &OperatorPoint {
        &self.measure.atoms()[self.spec.point_index(coords)].point
    }
}

/// Builds the push-forward of the lattice counting measure under `x -> F(x)`.
pub fn build_system(
    spec: &LatticeSpec,
    edits: &OccupationEdits,
    convention: WeightConvention,
) -> Result<LatticeSeaSystem, SeaError> {
    let sea = build_sea_modes(spec)?;
    let modes = if edits.is_empty() { sea } else { sea.with_edits(edits)? };
    let weight = convention.weight(spec);
    let atoms: Vec<Atom> = (0..spec.point_count())
        .into_par_iter()
        .map(|p| {
            modes
                .local_correlation_operator(spec.coords(p))
                .map(|point| Atom::new(point, weight))
        })
        .collect::<Result<_, _>>()?;
    let measure = DiscreteMeasure::new(atoms)?;
    Ok(LatticeSeaSystem {
        spec: *spec,
        edits: edits.clone(),
        convention,
        modes,
        measure,
    })
}

/// Largest entry of `|G - 1|` for a Gram matrix.
pub fn gram_defect(gram: &CMatrix) -> f64 {
    linalg::max_abs(&(gram - CMatrix::identity(gram.nrows(), gram.ncols())))
}
