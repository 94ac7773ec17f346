//! Numerical laboratory for causal fermion systems.
//!
//! A causal fermion system is a Hilbert space together with a measure on the
//! set of self-adjoint operators of finite rank having at most `n` positive and
//! `n` negative eigenvalues. This crate represents such systems with finitely
//! many atoms on a finite-dimensional Hilbert space, evaluates the causal
//! action and its constraints, builds systems from negative-energy Dirac modes
//! on a periodic lattice, recovers spin spaces, kernels and causal structure
//! from operator spectra, and minimizes the action over small toy families.
//!
//! Module map:
//!
//! - [`spectral`]: Lagrangian, spectral weight, causality classification.
//! - [`opspace`]: low-rank operators and spectra of their products.
//! - [`measure`]: discrete measures, action and constraint functionals.
//! - [`diracsea`]: gamma matrices, lattice sea modes, local correlation operators.
//! - [`geometry`]: spin spaces, kernel of the fermionic projector, closed chain.
//! - [`vacuum`]: Clifford decomposition of the vacuum kernel and causality audit.
//! - [`minimize`]: constrained minimization of the action.

pub mod diracsea;
pub mod geometry;
pub mod linalg;
pub mod measure;
pub mod minimize;
pub mod opspace;
pub mod spectral;
pub mod vacuum;

pub use linalg::{CMatrix, C64};
pub use measure::DiscreteMeasure;
pub use opspace::OperatorPoint;
pub use spectral::{Causality, EigenvalueList};
