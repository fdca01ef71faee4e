use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One `(m, σ, δ)` cell as persisted in the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub m: usize,
    pub sigma: f64,
    pub delta: f64,
    pub r: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub p_bar_hat: f64,
    pub p_bbar_hat: f64,
    pub p_lin_hat: f64,
    pub se_bar: f64,
    pub se_bbar: f64,
    pub se_lin: f64,
    pub excluded_trials: usize,
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

pub fn write_csv_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_csv(rows, File::create(path)?)
}

const HEADER: [&str; 14] = [
    "n",
    "m",
    "sigma",
    "delta",
    "r",
    "trials",
    "master_seed",
    "p_bar_hat",
    "p_bbar_hat",
    "p_lin_hat",
    "se_bar",
    "se_bbar",
    "se_lin",
    "excluded_trials",
];
