//! CSV and JSON files: fronts, trajectories and HV histories.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hedopt::moea::Individual;
use hedopt::{Front, ObjectiveVector, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "S", "Sq", "E", "Eq", "I", "Iq", "R", "GDP"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub t_sd: f64,
    pub t_ld: f64,
    pub f1: f64,
    pub f2: f64,
}

impl From<&Individual> for FrontRow {
    fn from(i: &Individual) -> Self {
        Self {
            t_sd: i.x[0],
            t_ld: i.x[1],
            f1: i.f.f1,
            f2: i.f.f2,
        }
    }
}

impl From<FrontRow> for Individual {
    fn from(r: FrontRow) -> Self {
        Individual::new([r.t_sd, r.t_ld], ObjectiveVector::new(r.f1, r.f2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvRow {
    pub evaluations: usize,
    pub hv: f64,
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if let csv::ErrorKind::Io(_) = e.kind() {
        return CliError::Runtime(format!("{}: {e}", path.display()));
    }
    match e.position() {
        // Line 1 is the header, so data row k sits on line k + 1.
        Some(pos) => CliError::parse(path, format!("row {}: {e}", pos.line().saturating_sub(1))),
        None => CliError::parse(path, e.to_string()),
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

pub fn write_front(path: &Path, front: &Front) -> Result<()> {
    write_rows(path, front.members.iter().map(FrontRow::from))
}

/// Reads a front CSV. Rows are kept as written (no dominance filtering).
pub fn read_front(path: &Path) -> Result<Front> {
    let rows: Vec<FrontRow> = read_rows(path)?;
    Ok(Front {
        members: rows.into_iter().map(Individual::from).collect(),
    })
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRAJECTORY_HEADER).map_err(|e| csv_error(path, e))?;
    for (t, s) in trajectory.iter() {
        let values = [t, s.s, s.s_q, s.e, s.e_q, s.i, s.i_q, s.r, s.gdp];
        w.serialize(values).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Rows of a trajectory CSV as `[t, S, Sq, E, Eq, I, Iq, R, GDP]`.
pub fn read_trajectory(path: &Path) -> Result<Vec<[f64; 9]>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(CliError::parse(
            path,
            format!("expected header {}", TRAJECTORY_HEADER.join(",")),
        ));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

pub fn write_hv_history(path: &Path, history: &[(usize, f64)]) -> Result<()> {
    write_rows(path, history.iter().map(|&(evaluations, hv)| HvRow { evaluations, hv }))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

/// First line of a CSV file, for format sniffing.
pub fn read_header(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().next().unwrap_or("").trim().to_string())
}
