//! CSV tables with fixed headers.
//!
//! Floats are written as `{:.16e}` (17 significant digits), so a value
//! round-trips exactly. Files are written to a temporary name and renamed,
//! so a failed run leaves no partial artifact.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Result, RunError};

pub const SOLVE_HEADER: &str = "t,Y_mean,Y_std,Y_err,Z_diag_err";
pub const CONVERGENCE_HEADER: &str = "N,h,err,observed_order";
pub const COMPARE_HEADER: &str = "seed,frac_Y0_le_Y1,frac_sandwich,eps_mc";
pub const NORMS_HEADER: &str = "beta,region,norm,fitted_C";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.split(',').count());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(self.header);
        out.push('\n');
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => write!(out, "{v:.16e}").unwrap(),
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Text(s) => out.push_str(s),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes the table to `dir/file` through a temporary file.
    pub fn write(&self, dir: &Path, file: &str) -> Result<PathBuf> {
        let target = dir.join(file);
        let fail = |source| RunError::Output {
            path: target.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(fail)?;
        let tmp = dir.join(format!(".{file}.{}.tmp", std::process::id()));
        let result = std::fs::File::create(&tmp)
            .and_then(|mut f| {
                f.write_all(self.render().as_bytes())?;
                f.sync_all()
            })
            .and_then(|_| std::fs::rename(&tmp, &target));
        if let Err(e) = result {
            let _ = std::fs::remove_file(&tmp);
            return Err(fail(e));
        }
        Ok(target)
    }
}
