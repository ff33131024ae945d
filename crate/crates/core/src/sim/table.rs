use crate::error::{Error, Result};
use crate::power::{SimLoss, Snr};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::str::FromStr;

pub const TABLE_HEADER: [&str; 8] = ["loss", "xi", "zeta", "n", "reps", "reject_freq", "mc_se", "alp"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub loss: SimLoss,
    pub xi: f64,
    pub zeta: Snr,
    pub n: usize,
    pub reps: usize,
    pub reject_freq: f64,
    pub mc_se: f64,
    pub alp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// First row matching (ξ, ζ, n), if any.
    pub fn find(&self, xi: f64, zeta: Snr, n: usize) -> Option<&RejectionRow> {
        self.rows.iter().find(|r| r.xi == xi && r.zeta == zeta && r.n == n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Argument(format!("unknown table format '{other}' (expected csv or json)"))),
        }
    }
}

/// Serializes a table. Floats use the shortest representation that parses
/// back to the same value.
pub fn emit_table(table: &RejectionTable, format: TableFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_table(table, format, &mut buf)?;
    Ok(buf)
}

pub fn write_table<W: Write>(table: &RejectionTable, format: TableFormat, mut w: W) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Argument("cannot emit an empty rejection table".into()));
    }
    match format {
        TableFormat::Json => {
            serde_json::to_writer(&mut w, table)?;
            w.write_all(b"\n")?;
        }
        TableFormat::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            cw.write_record(TABLE_HEADER)?;
            for r in &table.rows {
                cw.write_record([
                    r.loss.as_str().to_string(),
                    r.xi.to_string(),
                    r.zeta.to_string(),
                    r.n.to_string(),
                    r.reps.to_string(),
                    r.reject_freq.to_string(),
                    r.mc_se.to_string(),
                    r.alp.map(|a| a.to_string()).unwrap_or_default(),
                ])?;
            }
            cw.flush()?;
        }
    }
    Ok(())
}
