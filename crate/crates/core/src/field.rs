//! Per-path storage for the unknowns `(Y, Z)` and the free data `(ψ, η)`.
//!
//! Everything is laid out with paths innermost so that every regression
//! reads a contiguous slice: `Y` as `[node][component][path]` and `Z` as
//! `[row][column][component][coordinate][path]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub nodes: usize,
    pub columns: usize,
    pub m: usize,
    pub d: usize,
    pub paths: usize,
}

impl Shape {
    pub fn new(grid: &TimeGrid, m: usize, d: usize, paths: usize) -> Self {
        Self {
            nodes: grid.len(),
            columns: grid.columns(),
            m,
            d,
            paths,
        }
    }

    fn y_len(&self) -> usize {
        self.nodes * self.m * self.paths
    }

    fn cell_len(&self) -> usize {
        self.m * self.d * self.paths
    }

    fn z_len(&self) -> usize {
        self.nodes * self.columns * self.cell_len()
    }

    fn y_at(&self, node: usize, k: usize) -> usize {
        (node * self.m + k) * self.paths
    }

    fn cell_at(&self, row: usize, col: usize) -> usize {
        (row * self.columns + col) * self.cell_len()
    }

    fn z_at(&self, row: usize, col: usize, k: usize, l: usize) -> usize {
        self.cell_at(row, col) + (k * self.d + l) * self.paths
    }
}

/// Free term `ψ` on every node and exterior density `η`.
///
/// `η` is stored on the full cell array; interior cells are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeData {
    shape: Shape,
    psi: Vec<f64>,
    eta: Vec<f64>,
}

impl FreeData {
    pub fn zeros(grid: &TimeGrid, m: usize, d: usize, paths: usize) -> Self {
        let shape = Shape::new(grid, m, d, paths);
        Self {
            shape,
            psi: vec![0.0; shape.y_len()],
            eta: vec![0.0; shape.z_len()],
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn psi(&self, node: usize, k: usize) -> &[f64] {
        let at = self.shape.y_at(node, k);
        &self.psi[at..at + self.shape.paths]
    }

    pub fn psi_mut(&mut self, node: usize, k: usize) -> &mut [f64] {
        let at = self.shape.y_at(node, k);
        &mut self.psi[at..at + self.shape.paths]
    }

    pub fn eta(&self, row: usize, col: usize, k: usize, l: usize) -> &[f64] {
        let at = self.shape.z_at(row, col, k, l);
        &self.eta[at..at + self.shape.paths]
    }

    pub fn eta_mut(&mut self, row: usize, col: usize, k: usize, l: usize) -> &mut [f64] {
        let at = self.shape.z_at(row, col, k, l);
        &mut self.eta[at..at + self.shape.paths]
    }

    fn eta_cell(&self, row: usize, col: usize) -> &[f64] {
        let at = self.shape.cell_at(row, col);
        &self.eta[at..at + self.shape.cell_len()]
    }

    /// `(a ψ, a η)`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            shape: self.shape,
            psi: self.psi.iter().map(|v| a * v).collect(),
            eta: self.eta.iter().map(|v| a * v).collect(),
        }
    }

    /// `(ψ + c, η)`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            shape: self.shape,
            psi: self.psi.iter().map(|v| v + c).collect(),
            eta: self.eta.clone(),
        }
    }
}

/// Discrete solution `(Y, Z)` with a populated flag per `Z` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    shape: Shape,
    y: Vec<f64>,
    z: Vec<f64>,
    populated: Vec<bool>,
    // Per-node sample variance of the regression residual behind Y(t_i).
    y_residual_var: Vec<f64>,
}

impl SolutionField {
    /// All zeros with no cell marked populated.
    pub fn zeros(grid: &TimeGrid, m: usize, d: usize, paths: usize) -> Self {
        let shape = Shape::new(grid, m, d, paths);
        Self {
            shape,
            y: vec![0.0; shape.y_len()],
            z: vec![0.0; shape.z_len()],
            populated: vec![false; shape.nodes * shape.columns],
            y_residual_var: vec![0.0; shape.nodes],
        }
    }

    /// All zeros with every cell marked populated.
    pub fn zeros_populated(grid: &TimeGrid, m: usize, d: usize, paths: usize) -> Self {
        let mut f = Self::zeros(grid, m, d, paths);
        f.populated.iter_mut().for_each(|p| *p = true);
        f
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn m(&self) -> usize {
        self.shape.m
    }

    pub fn d(&self) -> usize {
        self.shape.d
    }

    pub fn paths(&self) -> usize {
        self.shape.paths
    }

    pub fn nodes(&self) -> usize {
        self.shape.nodes
    }

    pub fn columns(&self) -> usize {
        self.shape.columns
    }

    pub fn y(&self, node: usize, k: usize) -> &[f64] {
        let at = self.shape.y_at(node, k);
        &self.y[at..at + self.shape.paths]
    }

    pub fn y_mut(&mut self, node: usize, k: usize) -> &mut [f64] {
        let at = self.shape.y_at(node, k);
        &mut self.y[at..at + self.shape.paths]
    }

    pub fn z(&self, row: usize, col: usize, k: usize, l: usize) -> &[f64] {
        let at = self.shape.z_at(row, col, k, l);
        &self.z[at..at + self.shape.paths]
    }

    pub fn z_mut(&mut self, row: usize, col: usize, k: usize, l: usize) -> &mut [f64] {
        let at = self.shape.z_at(row, col, k, l);
        &mut self.z[at..at + self.shape.paths]
    }

    pub(crate) fn z_cell(&self, row: usize, col: usize) -> &[f64] {
        let at = self.shape.cell_at(row, col);
        &self.z[at..at + self.shape.cell_len()]
    }

    pub(crate) fn z_cell_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let at = self.shape.cell_at(row, col);
        let len = self.shape.cell_len();
        &mut self.z[at..at + len]
    }

    pub fn is_populated(&self, row: usize, col: usize) -> bool {
        self.populated[row * self.shape.columns + col]
    }

    pub fn set_populated(&mut self, row: usize, col: usize, value: bool) {
        self.populated[row * self.shape.columns + col] = value;
    }

    pub fn all_populated(&self) -> bool {
        self.populated.iter().all(|&p| p)
    }

    pub(crate) fn require(&self, row: usize, col: usize) -> Result<()> {
        if self.is_populated(row, col) {
            Ok(())
        } else {
            Err(Error::MissingCell { row, col })
        }
    }

    pub fn y_residual_var(&self) -> &[f64] {
        &self.y_residual_var
    }

    pub(crate) fn set_y_residual_var(&mut self, node: usize, v: f64) {
        self.y_residual_var[node] = v;
    }

    pub(crate) fn check_against(&self, free: &FreeData) -> Result<()> {
        if self.shape != free.shape {
            return Err(Error::DimensionMismatch(format!(
                "field {:?} vs free data {:?}",
                self.shape, free.shape
            )));
        }
        Ok(())
    }

    /// Imposes `Y = ψ` on `[T, T + K]` and `Z = η` on the exterior region,
    /// marking those cells populated.
    pub fn apply_boundary(&mut self, grid: &TimeGrid, free: &FreeData) -> Result<()> {
        self.check_against(free)?;
        let n = grid.steps();
        for node in n..self.shape.nodes {
            let at = self.shape.y_at(node, 0);
            let len = self.shape.m * self.shape.paths;
            self.y[at..at + len].copy_from_slice(&free.psi[at..at + len]);
        }
        for row in 0..self.shape.nodes {
            for col in 0..self.shape.columns {
                if grid.is_exterior(row, col) {
                    self.z_cell_mut(row, col)
                        .copy_from_slice(free.eta_cell(row, col));
                    self.set_populated(row, col, true);
                }
            }
        }
        Ok(())
    }

    /// Field with `Y = ψ` on every node, `Z = η` outside `[0, T]²` and zero
    /// inside; fully populated.
    pub fn from_free_data(grid: &TimeGrid, free: &FreeData) -> Self {
        let s = free.shape;
        let mut f = Self::zeros_populated(grid, s.m, s.d, s.paths);
        f.y.copy_from_slice(&free.psi);
        f.apply_boundary(grid, free)
            .expect("shapes agree by construction");
        f
    }

    /// `a (Y, Z)`, keeping the populated flags.
    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|v| *v *= a);
        out.z.iter_mut().for_each(|v| *v *= a);
        out
    }

    /// Pointwise `self + other`; a cell is populated when it is in both.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let mut out = self.clone();
        out.y.iter_mut().zip(&other.y).for_each(|(a, b)| *a += b);
        out.z.iter_mut().zip(&other.z).for_each(|(a, b)| *a += b);
        out.populated
            .iter_mut()
            .zip(&other.populated)
            .for_each(|(a, b)| *a = *a && *b);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn boundary_copies_free_data_bit_for_bit() {
        let g = build_grid(1.0, 0.5, 4).unwrap();
        let mut free = FreeData::zeros(&g, 1, 2, 3);
        for node in 0..g.len() {
            free.psi_mut(node, 0)
                .copy_from_slice(&[node as f64, 0.1, -0.3]);
        }
        for row in 0..g.len() {
            for col in 0..g.columns() {
                for l in 0..2 {
                    free.eta_mut(row, col, 0, l).copy_from_slice(&[
                        (row * 10 + col) as f64,
                        l as f64,
                        1.0 / 3.0,
                    ]);
                }
            }
        }
        let mut f = SolutionField::zeros(&g, 1, 2, 3);
        f.apply_boundary(&g, &free).unwrap();
        for node in 0..g.len() {
            if node >= 4 {
                assert_eq!(f.y(node, 0), free.psi(node, 0));
            } else {
                assert!(f.y(node, 0).iter().all(|&v| v == 0.0));
            }
        }
        for row in 0..g.len() {
            for col in 0..g.columns() {
                assert_eq!(f.is_populated(row, col), g.is_exterior(row, col));
                if g.is_exterior(row, col) {
                    assert_eq!(f.z(row, col, 0, 1), free.eta(row, col, 0, 1));
                }
            }
        }
    }

    #[test]
    fn missing_cell_is_reported() {
        let g = build_grid(1.0, 0.0, 2).unwrap();
        let f = SolutionField::zeros(&g, 1, 1, 1);
        assert_eq!(f.require(1, 0), Err(Error::MissingCell { row: 1, col: 0 }));
    }
}
