//! Uniform time grid on `[0, T + K]` and grid-aligned delay maps.
//!
//! Node `j` sits at `t_j = j * h` with `h = T / N`; node `N` is exactly `T`.
//! Nodes `0..=N` are the interior nodes, nodes `N + 1 ..` cover the
//! anticipation window `(T, T + K]`. `Z` cells are indexed by a node row and
//! an interval column `j` standing for `[t_j, t_{j+1})`, so there is one
//! column fewer than nodes.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

const ALIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    span: f64,
    steps: usize,
    step: f64,
    ahead_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, span: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() || steps == 0 {
            return Err(Error::InvalidHorizon { horizon, steps });
        }
        let step = horizon / steps as f64;
        let ahead_steps = aligned_multiple(span, step).ok_or(Error::NonAlignedK { span, step })?;
        Ok(Self {
            horizon,
            span,
            steps,
            step,
            ahead_steps,
        })
    }

    /// `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `K`.
    pub fn span(&self) -> f64 {
        self.span
    }

    /// Interior step count `N`; also the index of the node at `T`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size `h`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// `K / h`.
    pub fn ahead_steps(&self) -> usize {
        self.ahead_steps
    }

    /// Total node count over `[0, T + K]`.
    pub fn len(&self) -> usize {
        self.steps + self.ahead_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of intervals, i.e. `Z` columns.
    pub fn columns(&self) -> usize {
        self.len() - 1
    }

    pub fn last(&self) -> usize {
        self.len() - 1
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.step
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    /// Index of the node at time `t`, if `t` is a node.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if !(t >= -ALIGN_TOL) {
            return None;
        }
        let j = math::round(t / self.step);
        if j < 0.0 || j as usize >= self.len() {
            return None;
        }
        let j = j as usize;
        let scale = if t.abs() > 1.0 { t.abs() } else { 1.0 };
        if math::abs(self.time(j) - t) <= 1e-9 * scale {
            Some(j)
        } else {
            None
        }
    }

    /// Whether `Z(t_row, s_col)` lies outside `[0, T]²` and is prescribed data.
    pub fn is_exterior(&self, row: usize, col: usize) -> bool {
        row > self.steps || col >= self.steps
    }
}

pub fn build_grid(horizon: f64, span: f64, steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(horizon, span, steps)
}

fn aligned_multiple(value: f64, step: f64) -> Option<usize> {
    if !(value >= 0.0) || !value.is_finite() {
        return None;
    }
    let ratio = value / step;
    let n = math::round(ratio);
    let scale = if ratio > 1.0 { ratio } else { 1.0 };
    if math::abs(ratio - n) <= ALIGN_TOL * scale {
        Some(n as usize)
    } else {
        None
    }
}

/// Delay functions `δ`, `ζ` as forward index maps on the interior nodes.
///
/// `delta[i]` is the node index of `t_i + δ_{t_i}` for `i in 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPair {
    delta: Vec<usize>,
    zeta: Vec<usize>,
    k_bound: f64,
    m_bound: f64,
}

impl DelayPair {
    /// Constant shifts by `delta` and `zeta` time units.
    pub fn constant(grid: &TimeGrid, delta: f64, zeta: f64) -> Result<Self> {
        let shift = |d: f64| {
            aligned_multiple(d, grid.step()).ok_or(Error::NonAlignedDelay {
                delay: d,
                step: grid.step(),
            })
        };
        let (ds, zs) = (shift(delta)?, shift(zeta)?);
        let last = grid.last();
        for (i, s) in [(grid.steps(), ds), (grid.steps(), zs)] {
            if i + s > last {
                return Err(Error::DelayExceedsHorizon {
                    node: i,
                    target: i + s,
                    last,
                });
            }
        }
        let n = grid.steps();
        Ok(Self {
            delta: (0..=n).map(|i| i + ds).collect(),
            zeta: (0..=n).map(|i| i + zs).collect(),
            k_bound: if delta > zeta { delta } else { zeta },
            m_bound: 1.0,
        })
    }

    /// No anticipation: both maps are the identity.
    pub fn zero(grid: &TimeGrid) -> Self {
        Self::constant(grid, 0.0, 0.0).expect("zero delay is always admissible")
    }

    /// General monotone forward maps with a caller-declared `M` bound.
    ///
    /// The declared bound is checked against [`verify_condition_ii`] with a
    /// unit probe on every single node, which is the worst case for a
    /// nondecreasing map.
    pub fn from_maps(
        grid: &TimeGrid,
        delta: Vec<usize>,
        zeta: Vec<usize>,
        m_bound: f64,
    ) -> Result<Self> {
        let n = grid.steps();
        let last = grid.last();
        let mut k_bound: f64 = 0.0;
        for (label, map) in [("delta", &delta), ("zeta", &zeta)] {
            if map.len() != n + 1 {
                return Err(Error::InvalidDelayMap(format!(
                    "{label} has {} entries, expected {}",
                    map.len(),
                    n + 1
                )));
            }
            for (i, &target) in map.iter().enumerate() {
                if target < i {
                    return Err(Error::InvalidDelayMap(format!(
                        "{label} maps node {i} backwards to {target}"
                    )));
                }
                if target > last {
                    return Err(Error::DelayExceedsHorizon {
                        node: i,
                        target,
                        last,
                    });
                }
                if i > 0 && target < map[i - 1] {
                    return Err(Error::InvalidDelayMap(format!(
                        "{label} is not nondecreasing at node {i}"
                    )));
                }
                k_bound = k_bound.max(grid.time(target) - grid.time(i));
            }
        }
        let mut worst: f64 = 0.0;
        let mut probe = alloc::vec![0.0; grid.len()];
        for node in 0..grid.len() {
            probe[node] = 1.0;
            worst = worst
                .max(verify_condition_ii(grid, &delta, &probe))
                .max(verify_condition_ii(grid, &zeta, &probe));
            probe[node] = 0.0;
        }
        if worst > m_bound * (1.0 + 1e-12) {
            return Err(Error::InvalidDelayMap(format!(
                "declared M = {m_bound} but the maps need at least {worst}"
            )));
        }
        Ok(Self {
            delta,
            zeta,
            k_bound,
            m_bound,
        })
    }

    pub fn delta(&self, i: usize) -> usize {
        self.delta[i]
    }

    pub fn zeta(&self, i: usize) -> usize {
        self.zeta[i]
    }

    pub fn delta_map(&self) -> &[usize] {
        &self.delta
    }

    pub fn zeta_map(&self) -> &[usize] {
        &self.zeta
    }

    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }

    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    /// Largest condition (ii) ratio over both maps for `probe`.
    pub fn condition_ii_ratio(&self, grid: &TimeGrid, probe: &[f64]) -> f64 {
        verify_condition_ii(grid, &self.delta, probe)
            .max(verify_condition_ii(grid, &self.zeta, probe))
    }
}

pub fn constant_delays(grid: &TimeGrid, delta: f64, zeta: f64) -> Result<DelayPair> {
    DelayPair::constant(grid, delta, zeta)
}

/// Discrete form of condition (ii) for one index map.
///
/// Returns `max_t [Σ_{s=t}^{N} probe(map(s))] / [Σ_{s=t}^{last} probe(s)]`,
/// node sums with the common factor `h` cancelled and `0 / 0 = 0`.
///
/// # Panics
///
/// If `map` does not cover the interior nodes, if `probe` does not cover the
/// grid, or if `probe` has a negative entry.
pub fn verify_condition_ii(grid: &TimeGrid, map: &[usize], probe: &[f64]) -> f64 {
    let n = grid.steps();
    assert_eq!(map.len(), n + 1, "map must cover nodes 0..=N");
    assert_eq!(probe.len(), grid.len(), "probe must cover every node");
    assert!(probe.iter().all(|&p| p >= 0.0), "probe must be nonnegative");

    // Suffix sums from the right so each t costs O(1).
    let mut full = alloc::vec![0.0; grid.len() + 1];
    for s in (0..grid.len()).rev() {
        full[s] = full[s + 1] + probe[s];
    }
    let mut shifted = 0.0;
    let mut worst: f64 = 0.0;
    for t in (0..=n).rev() {
        shifted += probe[map[t]];
        let ratio = if shifted == 0.0 {
            0.0
        } else if full[t] == 0.0 {
            f64::INFINITY
        } else {
            shifted / full[t]
        };
        worst = worst.max(ratio);
    }
    worst
}
