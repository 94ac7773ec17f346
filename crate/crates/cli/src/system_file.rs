//! JSON persistence of discrete measures.

use std::fs;
use std::io::Write;
use std::path::Path;

use cfs_core::diracsea::{LatticeSpec, OccupationEdits, WeightConvention};
use cfs_core::measure::{Atom, DiscreteMeasure};
use cfs_core::{CMatrix, OperatorPoint, C64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// How the atoms were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Provenance {
    Lattice {
        lattice: LatticeSpec,
        #[serde(default)]
        edits: OccupationEdits,
    },
    Abstract(AbstractTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractTag {
    Abstract,
}

impl Provenance {
    pub fn abstract_() -> Self {
        Provenance::Abstract(AbstractTag::Abstract)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub spin_dim: usize,
    pub hilbert_dim: usize,
    pub provenance: Provenance,
    pub weight_convention: WeightConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub eigenvalues: Vec<f64>,
    /// One column per eigenvalue, entries as `[re, im]`.
    pub factors: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub weight: f64,
    pub operator: OperatorRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub metadata: Metadata,
    pub atoms: Vec<AtomRecord>,
}

impl SystemFile {
    pub fn from_measure(rho: &DiscreteMeasure, provenance: Provenance, weight_convention: WeightConvention) -> Self {
        let atoms = rho
            .atoms()
            .iter()
            .map(|a| AtomRecord {
                weight: a.weight,
                operator: OperatorRecord {
                    eigenvalues: a.point.spectrum().to_vec(),
                    factors: a
                        .point
                        .factors()
                        .column_iter()
                        .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
                        .collect(),
                },
            })
            .collect();
        Self {
            metadata: Metadata {
                schema_version: SCHEMA_VERSION,
                spin_dim: rho.spin_dim(),
                hilbert_dim: rho.hilbert_dim(),
                provenance,
                weight_convention,
            },
            atoms,
        }
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure, CliError> {
        let meta = &self.metadata;
        if meta.schema_version != SCHEMA_VERSION {
            return Err(CliError::Format(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                meta.schema_version
            )));
        }
        let f = meta.hilbert_dim;
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let op = &rec.operator;
                if let Some(col) = op.factors.iter().find(|c| c.len() != f) {
                    return Err(CliError::Format(format!(
                        "atom {i}: factor of length {} in a Hilbert space of dimension {f}",
                        col.len()
                    )));
                }
                let factors = CMatrix::from_fn(f, op.factors.len(), |r, c| {
                    let [re, im] = op.factors[c][r];
                    C64::new(re, im)
                });
                let point = OperatorPoint::from_factors(factors, op.eigenvalues.clone(), meta.spin_dim)
                    .map_err(|e| CliError::Format(format!("atom {i}: {e}")))?;
                Ok(Atom::new(point, rec.weight))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DiscreteMeasure::new(atoms).map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string(self).expect("system file serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        file.write_all(self.to_json().as_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}
