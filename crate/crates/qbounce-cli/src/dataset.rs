//! Measured-count CSV reader.
//!
//! Format: UTF-8, comma-separated, header `z_um,n_out` or `z_um,n_out,sigma`,
//! `#` comment lines ignored. Rows are sorted by slit width on load
//! (stable); duplicate slit widths are rejected by value.

use std::path::Path;

use qbounce::analysis::{DataRow, ExperimentalDataset};

use crate::error::{CliError, CliResult};

pub fn load_dataset(path: &Path) -> CliResult<ExperimentalDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset(&text).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_dataset(text: &str) -> CliResult<ExperimentalDataset> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    let mut with_sigma = false;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();

        if !header_seen {
            match fields.as_slice() {
                ["z_um", "n_out"] => with_sigma = false,
                ["z_um", "n_out", "sigma"] => with_sigma = true,
                _ => {
                    return Err(CliError::Data(format!(
                        "row {line_no}: expected header `z_um,n_out[,sigma]`, got {trimmed:?}"
                    )))
                }
            }
            header_seen = true;
            continue;
        }

        let expected = if with_sigma { 3 } else { 2 };
        if fields.len() != expected && !(with_sigma && fields.len() == 2) {
            return Err(CliError::Data(format!(
                "row {line_no}: expected {expected} fields, got {}",
                fields.len()
            )));
        }

        let z_um = fields[0].parse::<f64>().map_err(|_| {
            CliError::Data(format!("row {line_no}: z_um {:?} is not a number", fields[0]))
        })?;
        let n_out = fields[1].parse::<f64>().map_err(|_| {
            CliError::Data(format!(
                "row {line_no}: n_out {:?} is not a number",
                fields[1]
            ))
        })?;
        let sigma = match fields.get(2) {
            None => None,
            Some(&"") => None,
            Some(tok) => Some(tok.parse::<f64>().map_err(|_| {
                CliError::Data(format!("row {line_no}: sigma {tok:?} is not a number"))
            })?),
        };
        rows.push(DataRow { z_um, n_out, sigma });
    }

    if !header_seen {
        return Err(CliError::Data(
            "missing header `z_um,n_out[,sigma]`".to_string(),
        ));
    }

    ExperimentalDataset::new(rows).map_err(|e| CliError::Data(e.to_string()))
}
