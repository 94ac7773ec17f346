//! Clifford structure of the vacuum kernel and the comparison of spectral
//! causality with the Minkowski light cone on lattice systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diracsea::{dirac_matrices, minkowski, LatticeSeaSystem, ModeTable, METRIC};
use crate::geometry::{self, GeometryError};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::spectral::{self, Causality, EigenvalueList, SpectralError};

/// Largest relative misalignment of the vector part with `xi` for which the
/// decomposition counts as valid.
pub const MISALIGNMENT_TOL: f64 = 1e-6;

/// Largest Clifford reconstruction residual, relative to `||P||`.
pub const CLIFFORD_RESIDUAL_TOL: f64 = 1e-8;

/// Classification tolerance used by the audit unless configured otherwise.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// Default width of the excluded light-cone band in units of `eps`.
pub const DEFAULT_BAND_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VacuumError {
    #[error("kernel matrix must be 4x4, got {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize },
    #[error("separation vector is zero")]
    ZeroSeparation,
    #[error("pair sample is empty")]
    EmptySample,
    #[error("pair ({ix}, {iy}): {source}")]
    Pair {
        ix: usize,
        iy: usize,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `P = alpha xi_j gamma^j + beta 1` up to a reported residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordDecomposition {
    pub xi: [f64; 4],
    pub alpha: C64,
    pub beta: C64,
    /// Contravariant vector part `c^j` with `P = c_j gamma^j + beta + rest`.
    pub vector_component: [C64; 4],
    /// Frobenius norm of `P - (c_j gamma^j + beta)`.
    pub residual: f64,
    /// `||c - alpha xi|| / ||c||`, Euclidean.
    pub misalignment: f64,
    /// Frobenius norm of `P`.
    pub kernel_norm: f64,
    pub valid: bool,
}

impl CliffordDecomposition {
    pub fn relative_residual(&self) -> f64 {
        if self.kernel_norm == 0.0 {
            0.0
        } else {
            self.residual / self.kernel_norm
        }
    }
}

/// Real coefficients of the closed chain `A = b + a xi-slash`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainInvariants {
    pub a: f64,
    pub b: f64,
    pub xi_sq: f64,
    /// Imaginary parts dropped from `a` and `b` (roundoff).
    pub imaginary_defect: f64,
}

/// Splits a spinor matrix into scalar and vector Clifford components and fits
/// the vector part to `alpha xi`.
pub fn decompose_kernel(p: &CMatrix, xi: [f64; 4]) -> Result<CliffordDecomposition, VacuumError> {
    if p.nrows() != 4 || p.ncols() != 4 {
        return Err(VacuumError::ShapeMismatch { rows: p.nrows(), cols: p.ncols() });
    }
    let euclid_sq: f64 = xi.iter().map(|v| v * v).sum();
    if euclid_sq == 0.0 {
        return Err(VacuumError::ZeroSeparation);
    }
    let gammas = dirac_matrices();
    let beta = linalg::trace(p) / 4.0;
    let mut c = [ZERO; 4];
    let mut rebuilt = CMatrix::identity(4, 4) * beta;
    for j in 0..4 {
        c[j] = linalg::trace(&(&gammas[j] * p)) / 4.0;
        rebuilt += &gammas[j] * (c[j] * METRIC[j]);
    }
    let residual = linalg::frobenius(&(p - rebuilt));
    let xi_sq = minkowski(xi, xi);
    let alpha = if xi_sq.abs() > 1e-12 * euclid_sq {
        (0..4).map(|j| c[j] * (METRIC[j] * xi[j])).sum::<C64>() / xi_sq
    } else {
        (0..4).map(|j| c[j] * xi[j]).sum::<C64>() / euclid_sq
    };
    let c_norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let misalignment = if c_norm == 0.0 {
        0.0
    } else {
        (0..4).map(|j| (c[j] - alpha * xi[j]).norm_sqr()).sum::<f64>().sqrt() / c_norm
    };
    let kernel_norm = linalg::frobenius(p);
    let valid = misalignment <= MISALIGNMENT_TOL && residual <= CLIFFORD_RESIDUAL_TOL * kernel_norm;
    Ok(CliffordDecomposition {
        xi,
        alpha,
        beta,
        vector_component: c,
        residual,
        misalignment,
        kernel_norm,
        valid,
    })
}

pub fn chain_invariants(dec: &CliffordDecomposition) -> ChainInvariants {
    let xi_sq = minkowski(dec.xi, dec.xi);
    let a = dec.alpha * dec.beta.conj() + dec.beta * dec.alpha.conj();
    let b = C64::new(dec.alpha.norm_sqr() * xi_sq + dec.beta.norm_sqr(), 0.0);
    ChainInvariants {
        a: a.re,
        b: b.re,
        xi_sq,
        imaginary_defect: a.im.abs().max(b.im.abs()),
    }
}

/// `b +- sqrt(a^2 xi^2)`, each twice, principal branch.
pub fn chain_eigenvalue_formula(dec: &CliffordDecomposition) -> EigenvalueList {
    let inv = chain_invariants(dec);
    let root = C64::new(inv.a * inv.a * inv.xi_sq, 0.0).sqrt();
    let b = C64::new(inv.b, 0.0);
    let values = vec![b + root, b + root, b - root, b - root];
    EigenvalueList::new(values, 2).expect("four values fit spin dimension two")
}

/// The spinor kernel as a function of the separation,
/// `P(xi) = -sum_l u_l u_l^dagger gamma^0 e^{i k_l . xi}`.
#[derive(Debug, Clone)]
pub struct SeparationKernel {
    terms: Vec<([C64; 16], [f64; 4])>,
}

impl SeparationKernel {
    pub fn new(modes: &ModeTable) -> Self {
        let g0 = &dirac_matrices()[0];
        let terms = modes
            .modes()
            .iter()
            .map(|mode| {
                let u = nalgebra::DVector::from_column_slice(&mode.amplitude);
                let m = -(&u * u.adjoint()) * g0;
                let mut flat = [ZERO; 16];
                for r in 0..4 {
                    for c in 0..4 {
                        flat[4 * r + c] = m[(r, c)];
                    }
                }
                (flat, mode.momentum)
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, xi: [f64; 4]) -> CMatrix {
        let mut acc = [ZERO; 16];
        for (flat, k) in &self.terms {
            let phase = C64::from_polar(1.0, minkowski(*k, xi));
            for (slot, v) in acc.iter_mut().zip(flat) {
                *slot += v * phase;
            }
        }
        CMatrix::from_row_slice(4, 4, &acc)
    }
}

/// Which ordered atom pairs the audit visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSampler {
    All,
    /// `count` pairs `(i, j)`, `i != j`, drawn uniformly with a seeded RNG.
    Sample { count: usize, seed: u64 },
}

impl PairSampler {
    pub fn pairs(&self, atoms: usize) -> Vec<(usize, usize)> {
        match *self {
            PairSampler::All => (0..atoms).flat_map(|i| (0..atoms).map(move |j| (i, j))).collect(),
            PairSampler::Sample { count, seed } => {
                if atoms < 2 {
                    return Vec::new();
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pairs = Vec::with_capacity(count);
                while pairs.len() < count {
                    let i = rng.random_range(0..atoms);
                    let j = rng.random_range(0..atoms);
                    if i != j {
                        pairs.push((i, j));
                    }
                }
                pairs.sort_unstable();
                pairs
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub band_multiplier: f64,
    pub classify_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            band_multiplier: DEFAULT_BAND_MULTIPLIER,
            classify_tol: DEFAULT_CLASSIFY_TOL,
        }
    }
}

/// One audited pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub ix: usize,
    pub iy: usize,
    pub xi: [f64; 4],
    pub xi_sq: f64,
    pub class_spectral: Causality,
    pub class_minkowski: Causality,
    pub lagrangian: f64,
    /// Relative multiset distance between closed-chain eigenvalues and the
    /// formula `b +- sqrt(a^2 xi^2)`; meaningful only when `decomposition_valid`.
    pub eig_discrepancy: f64,
    pub in_band: bool,
    pub decomposition_valid: bool,
    pub clifford_residual: f64,
    pub misalignment: f64,
    pub solver_disagreement: f64,
}

/// Aggregates over the audited pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AuditSummary {
    pub pairs: usize,
    pub in_band: usize,
    pub out_of_band: usize,
    pub agreements: usize,
    pub agreement_rate: f64,
    /// Counts indexed by `[minkowski][spectral]` in the order spacelike,
    /// timelike, lightlike, for pairs outside the band.
    pub confusion: [[usize; 3]; 3],
    pub valid_decompositions: usize,
    pub max_formula_discrepancy: f64,
    pub max_clifford_residual: f64,
    pub solver_flags: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub rows: Vec<AuditRow>,
    pub summary: AuditSummary,
}

fn class_index(c: Causality) -> usize {
    match c {
        Causality::Spacelike => 0,
        Causality::Timelike => 1,
        Causality::Lightlike => 2,
    }
}

/// Sign of `xi^2`, with `|xi^2| <= 1e-12 |xi|^2` treated as zero.
pub fn minkowski_class(xi: [f64; 4]) -> Causality {
    let xi_sq = minkowski(xi, xi);
    let euclid_sq: f64 = xi.iter().map(|v| v * v).sum();
    if xi_sq.abs() <= 1e-12 * euclid_sq {
        Causality::Lightlike
    } else if xi_sq > 0.0 {
        Causality::Timelike
    } else {
        Causality::Spacelike
    }
}

/// Audits one pair of lattice points.
pub fn audit_pair(
    sys: &LatticeSeaSystem,
    kernel: &SeparationKernel,
    ix: usize,
    iy: usize,
    config: &AuditConfig,
) -> Result<AuditRow, VacuumError> {
    let spec = &sys.spec;
    let atoms = sys.measure.atoms();
    let xi = spec.separation(spec.coords(ix), spec.coords(iy));
    let xi_sq = minkowski(xi, xi);
    let spatial = (xi[1] * xi[1] + xi[2] * xi[2] + xi[3] * xi[3]).sqrt();
    let in_band = (xi[0].abs() - spatial).abs() <= config.band_multiplier * spec.eps;

    let chain = geometry::closed_chain(&atoms[ix].point, &atoms[iy].point)
        .map_err(|source| VacuumError::Pair { ix, iy, source })?;
    let class_spectral = spectral::classify_causality(&chain.eigenvalues, config.classify_tol)?;
    let lagrangian = spectral::lagrangian(&chain.eigenvalues);

    let (decomposition_valid, clifford_residual, misalignment, eig_discrepancy) =
        match decompose_kernel(&kernel.at(xi), xi) {
            Ok(dec) => {
                let predicted = chain_eigenvalue_formula(&dec);
                let discrepancy = linalg::relative_multiset_distance(chain.eigenvalues.values(), predicted.values());
                (dec.valid, dec.relative_residual(), dec.misalignment, discrepancy)
            }
            Err(VacuumError::ZeroSeparation) => (false, 0.0, 0.0, f64::NAN),
            Err(e) => return Err(e),
        };

    Ok(AuditRow {
        ix,
        iy,
        xi,
        xi_sq,
        class_spectral,
        class_minkowski: minkowski_class(xi),
        lagrangian,
        eig_discrepancy,
        in_band,
        decomposition_valid,
        clifford_residual,
        misalignment,
        solver_disagreement: chain.solver_disagreement,
    })
}

/// Compares spectral and Minkowski causality on the sampled pairs. Pairs in
/// the band `||xi^0| - |xi|| <= K eps` are kept in the rows but excluded from
/// the agreement rate.
pub fn causality_audit(
    sys: &LatticeSeaSystem,
    sampler: PairSampler,
    config: AuditConfig,
) -> Result<AuditReport, VacuumError> {
    let pairs = sampler.pairs(sys.measure.len());
    if pairs.is_empty() {
        return Err(VacuumError::EmptySample);
    }
    let kernel = SeparationKernel::new(&sys.modes);
    let rows: Vec<AuditRow> = pairs
        .par_iter()
        .map(|&(ix, iy)| audit_pair(sys, &kernel, ix, iy, &config))
        .collect::<Result<_, _>>()?;
    let summary = summarize(&rows);
    Ok(AuditReport { config, rows, summary })
}

pub fn summarize(rows: &[AuditRow]) -> AuditSummary {
    let mut s = AuditSummary { pairs: rows.len(), ..Default::default() };
    for row in rows {
        if row.in_band {
            s.in_band += 1;
        } else {
            s.out_of_band += 1;
            s.confusion[class_index(row.class_minkowski)][class_index(row.class_spectral)] += 1;
            if row.class_minkowski == row.class_spectral {
                s.agreements += 1;
            }
        }
        if row.decomposition_valid {
            s.valid_decompositions += 1;
            s.max_formula_discrepancy = s.max_formula_discrepancy.max(row.eig_discrepancy);
        }
        s.max_clifford_residual = s.max_clifford_residual.max(row.clifford_residual);
        if row.solver_disagreement > linalg::SOLVER_DISAGREEMENT_FLAG {
            s.solver_flags += 1;
        }
    }
    s.agreement_rate = if s.out_of_band == 0 {
        0.0
    } else {
        s.agreements as f64 / s.out_of_band as f64
    };
    s
}
