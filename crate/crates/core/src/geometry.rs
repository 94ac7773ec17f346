//! Structures carried by every causal fermion system: spin spaces with their
//! indefinite inner product, physical wave functions, the kernel of the
//! fermionic projector and the closed chain.
//!
//! Spin space bases are orthonormal in the Hilbert scalar product. The spin
//! scalar product is carried as its Gram matrix `S = -B^H x B`, which for the
//! default basis (the eigenvectors of `x`) is `-diag(nu)`.

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::{self, CMatrix, EigenError, C64, ONE, SOLVER_DISAGREEMENT_FLAG, ZERO};
use crate::opspace::{OpError, OperatorPoint};
use crate::spectral::EigenvalueList;

/// Eigenvalues closer than this (relative to the largest) to the rank
/// threshold make the image of `x` ambiguous.
pub const RANK_AMBIGUITY: f64 = 1e-8;

/// Relative residual allowed for vectors claimed to lie in a spin space.
pub const SPIN_SPACE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("eigenvalue {value:.3e} is within the rank threshold band (largest {largest:.3e})")]
    RankAmbiguity { value: f64, largest: f64 },
    #[error("vector is not in the spin space (residual {residual:.3e})")]
    NotInSpinSpace { residual: f64 },
    #[error("input basis is not orthonormal (defect {defect:.3e})")]
    NonOrthonormalInput { defect: f64 },
    #[error("basis change is not unitary (defect {defect:.3e})")]
    NonUnitaryBasisChange { defect: f64 },
    #[error("bases have shapes {left:?} and {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error(transparent)]
    Operator(#[from] OpError),
    #[error("eigensolver failure: {0}")]
    EigenSolverFailure(#[from] EigenError),
}

/// The image `S_x = x(H)` with a Hilbert-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSpace {
    base: OperatorPoint,
    basis: CMatrix,
    gram: CMatrix,
}

impl SpinSpace {
    pub fn base_point(&self) -> &OperatorPoint {
        &self.base
    }

    /// `f x dim` matrix of basis columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Gram matrix `-<e_a|x e_b>` of the spin scalar product.
    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Inertia `(p, q)` of the spin scalar product.
    pub fn signature(&self) -> Result<(usize, usize), GeometryError> {
        if self.dim() == 0 {
            return Ok((0, 0));
        }
        let (values, _) = linalg::hermitian_eigen(&self.gram)?;
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let p = values.iter().filter(|v| **v > RANK_AMBIGUITY * scale).count();
        let q = values.iter().filter(|v| **v < -RANK_AMBIGUITY * scale).count();
        Ok((p, q))
    }

    /// Dense orthogonal projector `pi_x` onto the image.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Coordinates `B^H u` of `pi_x u`.
    pub fn coordinates(&self, u: &DVector<C64>) -> DVector<C64> {
        self.basis.adjoint() * u
    }

    /// The Hilbert vector with the given coordinates.
    pub fn embed(&self, coords: &DVector<C64>) -> DVector<C64> {
        &self.basis * coords
    }

    /// Same space, basis replaced by `B W` for a unitary `W`.
    pub fn with_basis_change(&self, w: &CMatrix) -> Result<Self, GeometryError> {
        let defect = linalg::orthonormality_defect(w);
        if w.nrows() != self.dim() || w.ncols() != self.dim() || defect > SPIN_SPACE_TOL {
            return Err(GeometryError::NonUnitaryBasisChange { defect });
        }
        Ok(Self {
            base: self.base.clone(),
            basis: &self.basis * w,
            gram: w.adjoint() * &self.gram * w,
        })
    }

    fn check_member(&self, u: &DVector<C64>) -> Result<(), GeometryError> {
        let residual = (u - self.embed(&self.coordinates(u))).norm();
        if residual > SPIN_SPACE_TOL * u.norm().max(1.0) {
            return Err(GeometryError::NotInSpinSpace { residual });
        }
        Ok(())
    }
}

/// The spin space of `x` with the eigenvectors of `x` as basis.
pub fn spin_projector(x: &OperatorPoint) -> Result<SpinSpace, GeometryError> {
    let largest = x.spectrum().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(&value) = x.spectrum().iter().find(|v| v.abs() <= RANK_AMBIGUITY * largest) {
        return Err(GeometryError::RankAmbiguity { value, largest });
    }
    let gram = CMatrix::from_fn(x.rank(), x.rank(), |i, j| {
        if i == j {
            C64::new(-x.spectrum()[i], 0.0)
        } else {
            ZERO
        }
    });
    Ok(SpinSpace {
        base: x.clone(),
        basis: x.factors().clone(),
        gram,
    })
}

/// `-<u|x v>` for `u, v` in the spin space.
pub fn spin_product(space: &SpinSpace, u: &DVector<C64>, v: &DVector<C64>) -> Result<C64, GeometryError> {
    space.check_member(u)?;
    space.check_member(v)?;
    Ok(-u.dotc(&space.base.apply(v)))
}

/// Spin product of two vectors given by spin space coordinates.
pub fn spin_product_coords(space: &SpinSpace, a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.dotc(&(&space.gram * b))
}

/// `psi^u(x) = pi_x u`, as coordinates in the spin space basis.
pub fn physical_wave_function(u: &DVector<C64>, space: &SpinSpace) -> DVector<C64> {
    space.coordinates(u)
}

/// Matrix of `P(x,y) = pi_x y` restricted to `S_y`, in the bases of the two
/// spin spaces (rows index `S_x`, columns `S_y`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: CMatrix,
}

/// Kernel of the fermionic projector from its definition, `B_x^H y B_y`.
pub fn fermionic_kernel(sx: &SpinSpace, sy: &SpinSpace) -> KernelMatrix {
    let y = &sy.base;
    let left = sx.basis.adjoint() * y.scaled_factors();
    let right = y.factors().adjoint() * &sy.basis;
    KernelMatrix { entries: left * right }
}

/// Kernel of the fermionic projector as a sum over an orthonormal Hilbert
/// basis `{u_l}` (the standard basis): `-sum_l psi^{u_l}(x) <psi^{u_l}(y)| . >_y`.
pub fn fermionic_kernel_mode_sum(sx: &SpinSpace, sy: &SpinSpace) -> KernelMatrix {
    let f = sx.basis.nrows();
    let mut overlap = CMatrix::zeros(sx.dim(), sy.dim());
    for l in 0..f {
        let at_x = sx.basis.row(l).adjoint();
        let at_y = sy.basis.row(l).adjoint();
        overlap += &at_x * at_y.adjoint();
    }
    KernelMatrix { entries: -(overlap * &sy.gram) }
}

/// Adjoint of `P(x,y)` with respect to the spin scalar products,
/// `S_y^{-1} P^H S_x`, which maps `S_x` to `S_y`.
pub fn spin_adjoint(kernel: &KernelMatrix, sx: &SpinSpace, sy: &SpinSpace) -> Option<KernelMatrix> {
    let rhs = kernel.entries.adjoint() * &sx.gram;
    let entries = sy.gram.clone().lu().solve(&rhs)?;
    Some(KernelMatrix { entries })
}

/// The closed chain `A_xy = P(x,y) P(y,x)` on `S_x` and its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedChain {
    pub matrix: CMatrix,
    pub eigenvalues: EigenvalueList,
    /// Relative distance between the QR and characteristic-polynomial
    /// spectra.
    pub solver_disagreement: f64,
}

impl ClosedChain {
    pub fn flagged(&self) -> bool {
        self.solver_disagreement > SOLVER_DISAGREEMENT_FLAG
    }

    /// `Tr_{S_x}(A^p)`.
    pub fn trace_power(&self, p: u32) -> C64 {
        if self.matrix.nrows() == 0 {
            return ZERO;
        }
        let mut power = CMatrix::identity(self.matrix.nrows(), self.matrix.ncols());
        for _ in 0..p {
            power = &power * &self.matrix;
        }
        linalg::trace(&power)
    }
}

/// Closed chain built from two spin spaces.
pub fn closed_chain_of(sx: &SpinSpace, sy: &SpinSpace) -> Result<ClosedChain, GeometryError> {
    let forward = fermionic_kernel(sx, sy);
    let backward = fermionic_kernel(sy, sx);
    let matrix = forward.entries * backward.entries;
    chain_from_matrix(matrix, sx.base.spin_dim())
}

/// Closed chain of two operators, using their eigenvectors as spin bases.
/// With `O = X^H Y` this is `A = O N_y O^H N_x`.
pub fn closed_chain(x: &OperatorPoint, y: &OperatorPoint) -> Result<ClosedChain, GeometryError> {
    if x.hilbert_dim() != y.hilbert_dim() {
        return Err(OpError::HilbertDimMismatch { left: x.hilbert_dim(), right: y.hilbert_dim() }.into());
    }
    if x.spin_dim() != y.spin_dim() {
        return Err(OpError::SpinDimMismatch { left: x.spin_dim(), right: y.spin_dim() }.into());
    }
    let overlap = x.factors().adjoint() * y.factors();
    let mut forward = overlap.clone();
    for (j, &nu) in y.spectrum().iter().enumerate() {
        forward.column_mut(j).scale_mut(nu);
    }
    let mut backward = overlap.adjoint();
    for (j, &nu) in x.spectrum().iter().enumerate() {
        backward.column_mut(j).scale_mut(nu);
    }
    chain_from_matrix(forward * backward, x.spin_dim())
}

fn chain_from_matrix(matrix: CMatrix, spin_dim: usize) -> Result<ClosedChain, GeometryError> {
    let (values, solver_disagreement) = if matrix.nrows() == 0 {
        (Vec::new(), 0.0)
    } else {
        linalg::eigenvalues_checked(&matrix)?
    };
    let eigenvalues = EigenvalueList::from_largest(values, spin_dim)
        .map_err(|e| GeometryError::Operator(e.into()))?;
    Ok(ClosedChain { matrix, eigenvalues, solver_disagreement })
}

/// Overlap `det(A^H B)` of the Slater determinants built from two
/// orthonormal bases (columns).
pub fn hartree_fock_overlap(basis_a: &CMatrix, basis_b: &CMatrix) -> Result<C64, GeometryError> {
    if basis_a.shape() != basis_b.shape() {
        return Err(GeometryError::ShapeMismatch { left: basis_a.shape(), right: basis_b.shape() });
    }
    for basis in [basis_a, basis_b] {
        let defect = linalg::orthonormality_defect(basis);
        if defect > SPIN_SPACE_TOL {
            return Err(GeometryError::NonOrthonormalInput { defect });
        }
    }
    if basis_a.ncols() == 0 {
        return Ok(ONE);
    }
    Ok(linalg::determinant(&(basis_a.adjoint() * basis_b)))
}
