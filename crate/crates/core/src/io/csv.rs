use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{EnergyRecord, EnergyTrace};
use crate::scalar::Scalar;

pub const ENERGY_CSV_HEADER: &str = "t,energy,mynorm";

/// Header plus one `t,energy,mynorm` row per record, shortest round-trip decimals.
pub fn energy_csv_string<T: Scalar>(trace: &EnergyTrace<T>) -> String {
    let mut out = String::with_capacity(32 * (trace.len() + 1));
    out.push_str(ENERGY_CSV_HEADER);
    out.push('\n');
    for r in trace.records() {
        let _ = writeln!(out, "{},{},{}", r.t, r.energy, r.mynorm);
    }
    out
}

pub fn write_energy_csv<T: Scalar>(trace: &EnergyTrace<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, energy_csv_string(trace))?;
    Ok(())
}

pub fn parse_energy_csv<T: Scalar>(text: &str, path: &Path) -> Result<EnergyTrace<T>> {
    let err = |row: usize, reason: String| Error::MalformedCsv { path: path.to_path_buf(), row, reason };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ENERGY_CSV_HEADER => {}
        Some((_, h)) => return Err(err(1, format!("expected header `{ENERGY_CSV_HEADER}`, found `{h}`"))),
        None => return Err(err(1, "missing header".into())),
    }
    let mut trace = EnergyTrace::new();
    for (i, line) in lines {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(err(row, format!("expected 3 columns, found {}", cols.len())));
        }
        let mut vals = [T::zero(); 3];
        for (v, c) in vals.iter_mut().zip(&cols) {
            *v = c.trim().parse::<T>().map_err(|_| err(row, format!("not a number: `{c}`")))?;
        }
        trace
            .push_record(EnergyRecord { t: vals[0], energy: vals[1], mynorm: vals[2] })
            .map_err(|e| err(row, e.to_string()))?;
    }
    Ok(trace)
}

pub fn read_energy_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<EnergyTrace<T>> {
    let path = path.as_ref();
    parse_energy_csv(&fs::read_to_string(path)?, path)
}
