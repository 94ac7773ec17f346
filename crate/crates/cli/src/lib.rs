//! Batch driver for causal fermion system experiments: building lattice
//! vacua, causality audits, functional evaluation and toy minimization.

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod system_file;

pub use error::CliError;
pub use system_file::SystemFile;
