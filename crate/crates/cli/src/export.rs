//! CSV writers for audit rows and iterate logs.

use std::io::Write;

use cfs_core::minimize::IterateRecord;
use cfs_core::vacuum::AuditRow;

use crate::error::CliError;

pub const AUDIT_HEADER: [&str; 12] = [
    "ix",
    "iy",
    "xi0",
    "xi1",
    "xi2",
    "xi3",
    "xi_sq",
    "class_spectral",
    "class_minkowski",
    "lagrangian",
    "eig_discrepancy",
    "in_band",
];

pub const LOG_HEADER: [&str; 6] = ["iter", "S", "T", "volume", "trace", "accepted"];

pub fn write_audit<W: Write>(out: W, rows: &[AuditRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AUDIT_HEADER)?;
    for r in rows {
        w.write_record([
            r.ix.to_string(),
            r.iy.to_string(),
            r.xi[0].to_string(),
            r.xi[1].to_string(),
            r.xi[2].to_string(),
            r.xi[3].to_string(),
            r.xi_sq.to_string(),
            r.class_spectral.as_str().to_string(),
            r.class_minkowski.as_str().to_string(),
            format!("{:e}", r.lagrangian),
            format!("{:e}", r.eig_discrepancy),
            r.in_band.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_log<W: Write>(out: W, log: &[IterateRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOG_HEADER)?;
    for r in log {
        w.write_record([
            r.iter.to_string(),
            r.action.to_string(),
            r.boundedness.to_string(),
            r.volume.to_string(),
            r.trace.to_string(),
            r.accepted.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
