//! Seeded Brownian sample paths on a [`TimeGrid`].
//!
//! Draws come from a single ChaCha8 stream seeded with `seed`, consumed path
//! by path, step by step, coordinate by coordinate. Uniforms use the top 53
//! bits of each `u64`; normals use the Box–Muller transform (both outputs of
//! each pair are used). Every transcendental goes through `libm`, so an
//! ensemble is a pure function of `(grid, d, paths, seed)` on every target.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    dim: usize,
    paths: usize,
    seed: u64,
    step: f64,
    nodes: usize,
    // [step][coordinate][path]
    increments: Vec<f64>,
    // [node][coordinate][path]
    cumulative: Vec<f64>,
}

struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    // Uniform on (0, 1].
    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = math::sqrt(-2.0 * math::ln(self.uniform()));
        let theta = 2.0 * core::f64::consts::PI * self.uniform();
        self.spare = Some(r * math::sin(theta));
        r * math::cos(theta)
    }
}

/// Simulates `paths` independent `d`-dimensional Brownian paths on `grid`.
pub fn simulate(grid: &TimeGrid, dim: usize, paths: usize, seed: u64) -> Result<PathEnsemble> {
    if dim == 0 || paths == 0 {
        return Err(Error::InvalidEnsemble(format!(
            "need d >= 1 and M >= 1, got d = {dim}, M = {paths}"
        )));
    }
    let nodes = grid.len();
    let steps = nodes - 1;
    let step = grid.step();
    let sd = math::sqrt(step);
    let mut cumulative = vec![0.0; nodes * dim * paths];
    let mut increments = vec![0.0; steps * dim * paths];
    let mut gauss = Gaussian::new(seed);
    for p in 0..paths {
        for j in 0..steps {
            for l in 0..dim {
                let prev = cumulative[(j * dim + l) * paths + p];
                let next = prev + sd * gauss.next();
                cumulative[((j + 1) * dim + l) * paths + p] = next;
                // Stored as the difference so W(t_{j+1}) - W(t_j) == ΔW_j exactly.
                increments[(j * dim + l) * paths + p] = next - prev;
            }
        }
    }
    Ok(PathEnsemble {
        dim,
        paths,
        seed,
        step,
        nodes,
        increments,
        cumulative,
    })
}

impl PathEnsemble {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of sample paths.
    pub fn len(&self) -> usize {
        self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `W_l(t_node)` across paths.
    pub fn brownian(&self, node: usize, coord: usize) -> &[f64] {
        let at = (node * self.dim + coord) * self.paths;
        &self.cumulative[at..at + self.paths]
    }

    /// `ΔW_l` over `[t_step, t_{step+1})` across paths.
    pub fn increment(&self, step: usize, coord: usize) -> &[f64] {
        let at = (step * self.dim + coord) * self.paths;
        &self.increments[at..at + self.paths]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::math::{mean, variance};

    #[test]
    fn same_seed_is_bit_identical() {
        let g = build_grid(1.0, 0.25, 8).unwrap();
        let a = simulate(&g, 2, 64, 11).unwrap();
        let b = simulate(&g, 2, 64, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate(&g, 2, 64, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cumulative_starts_at_zero_and_matches_increments() {
        let g = build_grid(1.0, 0.5, 8).unwrap();
        let e = simulate(&g, 2, 32, 3).unwrap();
        for l in 0..2 {
            assert!(e.brownian(0, l).iter().all(|&w| w == 0.0));
            for j in 0..g.columns() {
                for p in 0..32 {
                    let dw = e.brownian(j + 1, l)[p] - e.brownian(j, l)[p];
                    assert_eq!(dw, e.increment(j, l)[p]);
                }
            }
        }
    }

    #[test]
    fn increment_moments() {
        let g = build_grid(1.0, 0.0, 16).unwrap();
        let m = 4096;
        let e = simulate(&g, 2, m, 5).unwrap();
        let h = g.step();
        for j in 0..g.columns() {
            for l in 0..2 {
                let inc = e.increment(j, l);
                assert!(mean(inc).abs() <= 5.0 / (m as f64).sqrt());
                assert!((variance(inc) - h).abs() <= 0.2 * h);
            }
        }
    }

    #[test]
    fn terminal_mean_within_clt_bound() {
        let g = build_grid(1.0, 0.0, 16).unwrap();
        let e = simulate(&g, 1, 4096, 7).unwrap();
        let wt = e.brownian(16, 0);
        assert!(mean(wt).abs() <= 5.0 * (1.0f64 / 4096.0).sqrt());
    }

    #[test]
    fn coordinates_are_uncorrelated() {
        let g = build_grid(1.0, 0.0, 8).unwrap();
        let m = 4096;
        let e = simulate(&g, 2, m, 9).unwrap();
        for j in 0..8 {
            let (a, b) = (e.increment(j, 0), e.increment(j, 1));
            let (ma, mb) = (mean(a), mean(b));
            let cov = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - ma) * (y - mb))
                .sum::<f64>()
                / m as f64;
            let rho = cov / (variance(a) * variance(b)).sqrt();
            assert!(rho.abs() <= 5.0 / (m as f64).sqrt(), "rho = {rho}");
        }
    }

    #[test]
    fn rejects_empty_ensembles() {
        let g = build_grid(1.0, 0.0, 4).unwrap();
        assert!(simulate(&g, 0, 10, 1).is_err());
        assert!(simulate(&g, 1, 0, 1).is_err());
    }
}
