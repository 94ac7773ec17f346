//! Points of the operator set `F`: self-adjoint operators of rank at most
//! `2n` with at most `n` positive and `n` negative eigenvalues, stored as
//! `x = sum_a nu_a |e_a><e_a|` with orthonormal factors `e_a`.
//!
//! Pair operations never form the dense `f x f` operators. The spectrum of a
//! product `xy` is read off the product restricted to the joint span of the
//! two factor sets, a matrix of size at most `4n`.

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{self, CMatrix, EigenError, C64};
use crate::spectral::{EigenvalueList, SpectralError};

/// Relative threshold below which eigenvalues are treated as rank deficit.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Tolerance on `X^H X = 1` for stored factors.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not self-adjoint: asymmetry {defect:.3e} exceeds {allowed:.3e}")]
    NotSelfAdjoint { defect: f64, allowed: f64 },
    #[error("{positive} positive and {negative} negative eigenvalues exceed spin dimension {spin_dim}")]
    SignatureViolation { positive: usize, negative: usize, spin_dim: usize },
    #[error("rank {rank} exceeds 2n = {max}")]
    RankViolation { rank: usize, max: usize },
    #[error("factor columns are not orthonormal (defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },
    #[error("{factors} factor columns but {spectrum} spectrum entries")]
    FactorCountMismatch { factors: usize, spectrum: usize },
    #[error("spectrum entry {value} is zero or not finite")]
    InvalidSpectrum { value: f64 },
    #[error("hilbert dimensions differ: {left} vs {right}")]
    HilbertDimMismatch { left: usize, right: usize },
    #[error("spin dimensions differ: {left} vs {right}")]
    SpinDimMismatch { left: usize, right: usize },
    #[error("spin dimension must be positive")]
    ZeroSpinDimension,
    #[error("eigensolver failure: {0}")]
    EigenSolverFailure(#[from] EigenError),
}

impl From<SpectralError> for OpError {
    fn from(err: SpectralError) -> Self {
        match err {
            SpectralError::TooManyEigenvalues { got, cap } => OpError::RankViolation { rank: got, max: cap },
            _ => OpError::ZeroSpinDimension,
        }
    }
}

/// A point of `F` in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPoint {
    spin_dim: usize,
    factors: CMatrix,
    spectrum: Vec<f64>,
}

impl OperatorPoint {
    /// Builds a point from orthonormal factor columns and their nonzero real
    /// eigenvalues, checking every membership condition.
    pub fn from_factors(
        factors: CMatrix,
        spectrum: Vec<f64>,
        spin_dim: usize,
    ) -> Result<Self, OpError> {
        if spin_dim == 0 {
            return Err(OpError::ZeroSpinDimension);
        }
        if factors.ncols() != spectrum.len() {
            return Err(OpError::FactorCountMismatch {
                factors: factors.ncols(),
                spectrum: spectrum.len(),
            });
        }
        if let Some(&value) = spectrum.iter().find(|v| !v.is_finite() || **v == 0.0) {
            return Err(OpError::InvalidSpectrum { value });
        }
        let defect = linalg::orthonormality_defect(&factors);
        if defect > ORTHONORMALITY_TOL {
            return Err(OpError::NotOrthonormal { defect });
        }
        check_signature(&spectrum, spin_dim)?;
        Ok(Self { spin_dim, factors, spectrum })
    }

    /// The zero operator on a Hilbert space of dimension `hilbert_dim`.
    pub fn zero(hilbert_dim: usize, spin_dim: usize) -> Self {
        Self {
            spin_dim,
            factors: CMatrix::zeros(hilbert_dim, 0),
            spectrum: Vec::new(),
        }
    }

    /// The operator `span * core * span^H` for an arbitrary `f x k` matrix
    /// `span` and a Hermitian `k x k` matrix `core`, brought into factored
    /// form. Eigenvalues with `|nu| <= rank_tol * max|nu|` are dropped.
    pub fn from_factorization(
        span: &CMatrix,
        core: &CMatrix,
        spin_dim: usize,
        rank_tol: f64,
    ) -> Result<Self, OpError> {
        let f = span.nrows();
        if span.ncols() == 0 || f == 0 {
            return Ok(Self::zero(f, spin_dim));
        }
        let qr = span.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let reduced = &r * core * r.adjoint();
        let (values, vectors) = linalg::hermitian_eigen(&reduced)?;
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let keep: Vec<usize> = (0..values.len())
            .filter(|&i| scale > 0.0 && values[i].abs() > rank_tol * scale)
            .collect();
        let mut factors = CMatrix::zeros(f, keep.len());
        let mut spectrum = Vec::with_capacity(keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            factors.set_column(dst, &(&q * vectors.column(src)));
            spectrum.push(values[src]);
        }
        Self::from_factors(factors, spectrum, spin_dim)
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn hilbert_dim(&self) -> usize {
        self.factors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    /// Orthonormal eigenvectors of the nonzero eigenvalues, as columns.
    pub fn factors(&self) -> &CMatrix {
        &self.factors
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Numbers of positive and negative eigenvalues.
    pub fn signature(&self) -> (usize, usize) {
        let p = self.spectrum.iter().filter(|v| **v > 0.0).count();
        (p, self.spectrum.len() - p)
    }

    /// Dense `f x f` matrix. Only for tests and small systems.
    pub fn to_dense(&self) -> CMatrix {
        let scaled = self.scaled_factors();
        &scaled * self.factors.adjoint()
    }

    /// `X N`, the factors with each column multiplied by its eigenvalue.
    pub fn scaled_factors(&self) -> CMatrix {
        let mut scaled = self.factors.clone();
        for (j, &nu) in self.spectrum.iter().enumerate() {
            scaled.column_mut(j).scale_mut(nu);
        }
        scaled
    }

    /// Applies the operator to a Hilbert vector.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let coeffs = self.factors.adjoint() * v;
        let weighted = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(&self.spectrum).map(|(c, nu)| c * *nu),
        );
        &self.factors * weighted
    }

    /// `tr(x)`, the sum of the spectrum.
    pub fn trace(&self) -> f64 {
        self.spectrum.iter().sum()
    }

    /// `U x U^H` for a unitary `U` on the Hilbert space.
    pub fn conjugated(&self, unitary: &CMatrix) -> Self {
        Self {
            spin_dim: self.spin_dim,
            factors: unitary * &self.factors,
            spectrum: self.spectrum.clone(),
        }
    }

    /// The operator multiplied by a real factor. A zero factor yields the zero
    /// operator; a negative one swaps the signature.
    pub fn scaled(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.hilbert_dim(), self.spin_dim);
        }
        Self {
            spin_dim: self.spin_dim,
            factors: self.factors.clone(),
            spectrum: self.spectrum.iter().map(|v| v * s).collect(),
        }
    }

    /// `||x||_F^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.spectrum.iter().map(|v| v * v).sum()
    }

    fn check_compatible(&self, other: &Self) -> Result<(), OpError> {
        if self.hilbert_dim() != other.hilbert_dim() {
            return Err(OpError::HilbertDimMismatch {
                left: self.hilbert_dim(),
                right: other.hilbert_dim(),
            });
        }
        if self.spin_dim != other.spin_dim {
            return Err(OpError::SpinDimMismatch { left: self.spin_dim, right: other.spin_dim });
        }
        Ok(())
    }
}

fn check_signature(spectrum: &[f64], spin_dim: usize) -> Result<(), OpError> {
    let positive = spectrum.iter().filter(|v| **v > 0.0).count();
    let negative = spectrum.iter().filter(|v| **v < 0.0).count();
    if positive > spin_dim || negative > spin_dim {
        return Err(OpError::SignatureViolation { positive, negative, spin_dim });
    }
    if spectrum.len() > 2 * spin_dim {
        return Err(OpError::RankViolation { rank: spectrum.len(), max: 2 * spin_dim });
    }
    Ok(())
}

/// Checks that a dense matrix is a point of `F` and returns its factored
/// form.
///
/// The matrix must be self-adjoint up to `tol * max|entry|`. Eigenvalues with
/// modulus at most `tol * max|nu|` are discarded as rank deficit before the
/// signature is counted.
pub fn verify_membership(matrix: &CMatrix, spin_dim: usize, tol: f64) -> Result<OperatorPoint, OpError> {
    if spin_dim == 0 {
        return Err(OpError::ZeroSpinDimension);
    }
    if matrix.nrows() != matrix.ncols() {
        return Err(OpError::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
    }
    let allowed = tol * linalg::max_abs(matrix);
    let defect = linalg::hermitian_defect(matrix);
    if defect > allowed {
        return Err(OpError::NotSelfAdjoint { defect, allowed });
    }
    let (values, vectors) = linalg::hermitian_eigen(matrix)?;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| scale > 0.0 && values[i].abs() > tol * scale)
        .collect();
    let spectrum: Vec<f64> = keep.iter().map(|&i| values[i]).collect();
    check_signature(&spectrum, spin_dim)?;
    let mut factors = CMatrix::zeros(matrix.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        factors.set_column(dst, &vectors.column(src));
    }
    OperatorPoint::from_factors(factors, spectrum, spin_dim)
}

/// The `2n` non-trivial eigenvalues of `xy`, computed on the joint span of the
/// factors of `x` and `y` (dimension at most `4n`).
pub fn product_eigenvalues(x: &OperatorPoint, y: &OperatorPoint) -> Result<EigenvalueList, OpError> {
    x.check_compatible(y)?;
    let n = x.spin_dim();
    if x.rank() == 0 || y.rank() == 0 {
        return Ok(EigenvalueList::new(Vec::new(), n)?);
    }
    let f = x.hilbert_dim();
    let mut joined = CMatrix::zeros(f, x.rank() + y.rank());
    joined.columns_mut(0, x.rank()).copy_from(x.factors());
    joined.columns_mut(x.rank(), y.rank()).copy_from(y.factors());
    let q = linalg::orthonormal_span(&joined, 1e-12);
    let restrict = |p: &OperatorPoint| {
        let coords = q.adjoint() * p.factors();
        let mut weighted = coords.clone();
        for (j, &nu) in p.spectrum().iter().enumerate() {
            weighted.column_mut(j).scale_mut(nu);
        }
        weighted * coords.adjoint()
    };
    let reduced = restrict(x) * restrict(y);
    let values = linalg::eigenvalues(&reduced)?;
    Ok(EigenvalueList::from_largest(values, n)?)
}

/// `tr(x)`.
pub fn operator_trace(x: &OperatorPoint) -> f64 {
    x.trace()
}

/// `||x - y||_F`, evaluated on the joint span of both factor blocks.
pub fn operator_distance(x: &OperatorPoint, y: &OperatorPoint) -> f64 {
    let (rx, ry) = (x.rank(), y.rank());
    if rx + ry == 0 {
        return 0.0;
    }
    let f = x.hilbert_dim();
    let mut joint = CMatrix::zeros(f, rx + ry);
    joint.columns_mut(0, rx).copy_from(x.factors());
    joint.columns_mut(rx, ry).copy_from(y.factors());
    let r = joint.qr().r();
    let cx = r.columns(0, rx);
    let cy = r.columns(rx, ry);
    let nx = CMatrix::from_diagonal(&DVector::from_iterator(rx, x.spectrum().iter().map(|&v| C64::new(v, 0.0))));
    let ny = CMatrix::from_diagonal(&DVector::from_iterator(ry, y.spectrum().iter().map(|&v| C64::new(v, 0.0))));
    let diff = cx * nx * cx.adjoint() - cy * ny * cy.adjoint();
    linalg::frobenius(&diff)
}
