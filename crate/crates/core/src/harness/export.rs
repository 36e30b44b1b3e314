//! CSV and manifest writers.
//!
//! Reals are printed with 17 significant digits (`{:.16e}`), complex values
//! as two columns `<name>_re, <name>_im`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::volterra::ModeTrajectory;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_cell(out: &mut String, cell: &Cell) {
    match cell {
        Cell::Int(v) => write!(out, "{v}").unwrap(),
        Cell::Real(v) => out.push_str(&format_real(*v)),
        Cell::Text(s) => out.push_str(s),
    }
}

/// Complex value as its `(re, im)` cells.
pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Real(z.re), Cell::Real(z.im)]
}

/// In-memory CSV table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_cell(&mut out, cell);
            }
            out.push('\n');
        }
        out
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn export_csv(path: &Path, table: &Table) -> Result<()> {
    write_file(path, &table.render())
}

/// One row per sample: `n, kind, t, re, im`; every `stride`-th sample plus the last.
pub fn trajectory_table(trajectories: &[ModeTrajectory], stride: usize) -> Table {
    let mut table = Table::new(&["n", "kind", "t", "re", "im"]);
    let stride = stride.max(1);
    for traj in trajectories {
        let last = traj.samples.len().saturating_sub(1);
        for (k, z) in traj.samples.iter().enumerate() {
            if k % stride != 0 && k != last {
                continue;
            }
            let [re, im] = complex_cells(*z);
            table.push(vec![traj.n.into(), traj.kind.name().into(), traj.grid.time(k).into(), re, im]);
        }
    }
    table
}

pub fn export_trajectories(path: &Path, trajectories: &[ModeTrajectory], stride: usize) -> Result<()> {
    export_csv(path, &trajectory_table(trajectories, stride))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub task: &'static str,
    pub config: C,
    pub alpha: f64,
    pub results: R,
    pub files: Vec<String>,
}

pub fn export_manifest<C: Serialize, R: Serialize>(path: &Path, manifest: &Manifest<C, R>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}
