//! Simple-BSVIE solve, M-solution completion and the Picard loop.
//!
//! One Picard sweep freezes the generator at the current iterate, giving a
//! drift `G(i, j)` on `t_i <= s_j < T`, and solves
//!
//! ```text
//! F_i    = ψ(t_i) + h Σ_{j=i}^{N-1} G(i, j)
//! Y(t_i) = E[F_i | F_{t_i}]
//! Z(t_i, s_j) = E[(E[F_i | F_{s_{j+1}}] - E[F_i | F_{s_j}]) ΔW_j | F_{s_j}] / h,  j >= i
//! ```
//!
//! then fills `Z(t_i, s_j)` for `j < i` from the martingale representation
//! of `Y(t_i)` and re-imposes the boundary data.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FreeData, SolutionField};
use crate::generator::{Ahead, Arguments, Conditioning, GeneratorSpec};
use crate::grid::{DelayPair, TimeGrid};
use crate::math;
use crate::norms::{weighted_distance, NormConfig, Region};
use crate::par::map_range;
use crate::regression::Regressor;

/// An ABSVIE instance.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub grid: &'a TimeGrid,
    pub delays: &'a DelayPair,
    pub generator: &'a GeneratorSpec,
    pub free: &'a FreeData,
}

/// Frozen drift `G(i, j)` for `0 <= i <= j < N`, stored upper-triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    steps: usize,
    m: usize,
    paths: usize,
    values: Vec<f64>,
    measurable_at: usize,
}

impl Drift {
    pub fn zeros(grid: &TimeGrid, m: usize, paths: usize) -> Self {
        let n = grid.steps();
        Self {
            steps: n,
            m,
            paths,
            values: vec![0.0; n * (n + 1) / 2 * m * paths],
            measurable_at: n,
        }
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i <= j && j < self.steps);
        // Rows before i hold N, N-1, ..., N-i+1 cells.
        let before = i * self.steps - i * i.saturating_sub(1) / 2;
        ((before + (j - i)) * self.m + k) * self.paths
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let at = self.offset(i, j, k);
        &self.values[at..at + self.paths]
    }

    pub fn get_mut(&mut self, i: usize, j: usize, k: usize) -> &mut [f64] {
        let at = self.offset(i, j, k);
        &mut self.values[at..at + self.paths]
    }

    /// Node at which every drift sample is known; `N` unless raw anticipated
    /// values are read.
    pub fn measurable_at(&self) -> usize {
        self.measurable_at
    }

    pub fn set_measurable_at(&mut self, node: usize) {
        self.measurable_at = node;
    }
}

/// Solves `Y(t) = ψ(t) + ∫_t^T G(t, s) ds - ∫_t^T Z(t, s) dW(s)` on the
/// interior. `Y` is filled on every node (`ψ` from `T` on) and `Z` on the
/// cells `j >= i` of `[0, T]²`.
pub fn solve_simple(
    grid: &TimeGrid,
    reg: &Regressor<'_>,
    free: &FreeData,
    drift: &Drift,
) -> Result<SolutionField> {
    let shape = free.shape();
    let (m, d, paths) = (shape.m, shape.d, shape.paths);
    if paths != reg.ensemble().len() || d != reg.ensemble().dim() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "free data has {paths} paths / d = {d}, ensemble has {} / {}",
            reg.ensemble().len(),
            reg.ensemble().dim()
        )));
    }
    let n = grid.steps();
    let h = grid.step();
    let measurable = drift.measurable_at().max(n);

    struct Row {
        y: Vec<f64>,
        z: Vec<f64>,
        residual: f64,
    }

    let rows = map_range(0..n, |i| -> Result<Row> {
        let width = n - i;
        let mut y = vec![0.0; m * paths];
        // [column offset][k][l][path]
        let mut z = vec![0.0; width * m * d * paths];
        let mut residual = 0.0;
        for k in 0..m {
            let mut terminal = free.psi(i, k).to_vec();
            let mut acc = vec![0.0; paths];
            for j in i..n {
                for (a, g) in acc.iter_mut().zip(drift.get(i, j, k)) {
                    *a += g;
                }
            }
            for (f, a) in terminal.iter_mut().zip(&acc) {
                *f += h * a;
            }
            let yk = &mut y[k * paths..(k + 1) * paths];
            reg.cond_expect_into(i, &terminal, yk)?;
            let dens = reg.densities(&terminal, measurable, i..n)?;
            for j in i..n {
                for l in 0..d {
                    let from = ((j - i) * d + l) * paths;
                    let at = (((j - i) * m + k) * d + l) * paths;
                    z[at..at + paths].copy_from_slice(&dens[from..from + paths]);
                }
            }
            let diff: Vec<f64> = terminal.iter().zip(yk.iter()).map(|(f, v)| f - v).collect();
            residual += math::variance(&diff);
        }
        Ok(Row { y, z, residual })
    });

    let mut field = SolutionField::zeros(grid, m, d, paths);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for k in 0..m {
            field
                .y_mut(i, k)
                .copy_from_slice(&row.y[k * paths..(k + 1) * paths]);
        }
        let cell = m * d * paths;
        for j in i..n {
            let at = (j - i) * cell;
            field
                .z_cell_mut(i, j)
                .copy_from_slice(&row.z[at..at + cell]);
            field.set_populated(i, j, true);
        }
        field.set_y_residual_var(i, row.residual);
    }
    for node in n..grid.len() {
        for k in 0..m {
            field.y_mut(node, k).copy_from_slice(free.psi(node, k));
        }
    }
    Ok(field)
}

/// Fills `Z(t_i, s_j)` for `j < i <= N` from
/// `Y(t_i) = E[Y(t_i)] + Σ_{j<i} Z(t_i, s_j) ΔW_j`.
pub fn complete_m_solution(
    grid: &TimeGrid,
    reg: &Regressor<'_>,
    mut field: SolutionField,
) -> Result<SolutionField> {
    let n = grid.steps();
    for i in 0..n {
        for j in i..n {
            field.require(i, j)?;
        }
    }
    let (m, d, paths) = (field.m(), field.d(), field.paths());
    let rows = {
        let field = &field;
        map_range(1..n + 1, |i| -> Result<Vec<f64>> {
            // [column][k][l][path]
            let mut z = vec![0.0; i * m * d * paths];
            for k in 0..m {
                let dens = reg.densities(field.y(i, k), i, 0..i)?;
                for j in 0..i {
                    for l in 0..d {
                        let from = (j * d + l) * paths;
                        let at = ((j * m + k) * d + l) * paths;
                        z[at..at + paths].copy_from_slice(&dens[from..from + paths]);
                    }
                }
            }
            Ok(z)
        })
    };
    let cell = m * d * paths;
    for (offset, row) in rows.into_iter().enumerate() {
        let i = offset + 1;
        let row = row?;
        for j in 0..i {
            field
                .z_cell_mut(i, j)
                .copy_from_slice(&row[j * cell..(j + 1) * cell]);
            field.set_populated(i, j, true);
        }
    }
    Ok(field)
}

/// Freezes the generator at `current`: `G(i, j) = g(t_i, s_j, Y(s_j),
/// Z(t_i, s_j), Z(s_j, t_i), Y(s_j + δ), Z(t_i, s_j + ζ), Z(s_j + ζ, t_i))`.
///
/// Anticipated arguments are read from `frozen` when given (the
/// exogenous-input mode of the comparison iteration) and from `current`
/// otherwise.
pub fn evaluate_generator(
    problem: &Problem<'_>,
    reg: &Regressor<'_>,
    current: &SolutionField,
    frozen: Option<&SolutionField>,
) -> Result<Drift> {
    let grid = problem.grid;
    let delays = problem.delays;
    let gen = problem.generator;
    let n = grid.steps();
    let (m, d, paths) = (current.m(), current.d(), current.paths());
    let source = frozen.unwrap_or(current);
    if source.shape() != current.shape() {
        return Err(Error::DimensionMismatch(
            "frozen field shape differs".into(),
        ));
    }
    let uses = gen.uses();
    let projected = gen.conditioning() == Conditioning::Projected;
    let flen = gen.feature_len(m, d);
    let md = m * d;

    // Check every cell the generator will read before doing any work.
    for i in 0..n {
        for j in i..n {
            if uses.z {
                current.require(i, j)?;
            }
            if uses.z_transposed {
                current.require(j, i)?;
            }
            if uses.z_ahead {
                source.require(i, delays.zeta(j))?;
            }
            if uses.z_ahead_transposed {
                source.require(delays.zeta(j), i)?;
            }
        }
    }

    let features_at = |i: usize, j: usize| -> Result<Vec<f64>> {
        // [feature][path]
        let mut feats = vec![0.0; flen * paths];
        if !uses.anticipates() {
            return Ok(feats);
        }
        let (mut xi, mut eta, mut vs) = (vec![0.0; m], vec![0.0; md], vec![0.0; md]);
        let mut out = vec![0.0; flen];
        let ya = delays.delta(j);
        let za = delays.zeta(j);
        for p in 0..paths {
            if uses.y_ahead {
                for (k, x) in xi.iter_mut().enumerate() {
                    *x = source.y(ya, k)[p];
                }
            }
            if uses.z_ahead {
                let cell = source.z_cell(i, za);
                for (c, x) in eta.iter_mut().enumerate() {
                    *x = cell[c * paths + p];
                }
            }
            if uses.z_ahead_transposed {
                let cell = source.z_cell(za, i);
                for (c, x) in vs.iter_mut().enumerate() {
                    *x = cell[c * paths + p];
                }
            }
            gen.features(
                &Ahead {
                    y: &xi,
                    z: &eta,
                    z_transposed: &vs,
                },
                &mut out,
            );
            for (f, v) in out.iter().enumerate() {
                feats[f * paths + p] = *v;
            }
        }
        if projected {
            for f in 0..flen {
                let col = feats[f * paths..(f + 1) * paths].to_vec();
                reg.cond_expect_into(j, &col, &mut feats[f * paths..(f + 1) * paths])?;
            }
        }
        Ok(feats)
    };

    // Features that only depend on the column are computed once per column.
    let per_column = !(uses.z_ahead || uses.z_ahead_transposed);
    let shared: Vec<Vec<f64>> = if per_column && uses.anticipates() {
        map_range(0..n, |j| features_at(0, j))
            .into_iter()
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let rows = map_range(0..n, |i| -> Result<Vec<f64>> {
        // [column offset][k][path]
        let mut row = vec![0.0; (n - i) * m * paths];
        let (mut y, mut z, mut zt) = (vec![0.0; m], vec![0.0; md], vec![0.0; md]);
        let mut out = vec![0.0; m];
        let (t, zero_feats) = (grid.time(i), vec![0.0; flen * paths]);
        for j in i..n {
            let s = grid.time(j);
            let owned;
            let feats: &[f64] = if !uses.anticipates() {
                &zero_feats
            } else if per_column {
                &shared[j]
            } else {
                owned = features_at(i, j)?;
                &owned
            };
            let mut ahead = vec![0.0; flen];
            for p in 0..paths {
                if uses.y {
                    for (k, v) in y.iter_mut().enumerate() {
                        *v = current.y(j, k)[p];
                    }
                }
                if uses.z {
                    let cell = current.z_cell(i, j);
                    for (c, v) in z.iter_mut().enumerate() {
                        *v = cell[c * paths + p];
                    }
                }
                if uses.z_transposed {
                    let cell = current.z_cell(j, i);
                    for (c, v) in zt.iter_mut().enumerate() {
                        *v = cell[c * paths + p];
                    }
                }
                for (f, a) in ahead.iter_mut().enumerate() {
                    *a = feats[f * paths + p];
                }
                gen.eval(
                    t,
                    s,
                    &Arguments {
                        y: &y,
                        z: &z,
                        z_transposed: &zt,
                        ahead: &ahead,
                    },
                    &mut out,
                );
                for (k, v) in out.iter().enumerate() {
                    row[((j - i) * m + k) * paths + p] = *v;
                }
            }
        }
        Ok(row)
    });

    let mut drift = Drift::zeros(grid, m, paths);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for j in i..n {
            for k in 0..m {
                let at = ((j - i) * m + k) * paths;
                drift.get_mut(i, j, k).copy_from_slice(&row[at..at + paths]);
            }
        }
    }
    if !projected && uses.anticipates() {
        let mut latest = n;
        for j in 0..n {
            if uses.y_ahead {
                latest = latest.max(delays.delta(j));
            }
            if uses.z_ahead {
                latest = latest.max(delays.zeta(j));
            }
        }
        drift.set_measurable_at(latest);
    }
    Ok(drift)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialIterate {
    /// Zero inside `[0, T]`, boundary data outside.
    #[default]
    Zero,
    /// `Y = ψ` everywhere, `Z = η` outside `[0, T]²`, zero inside.
    FreeTerm,
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions<'a> {
    /// Weight of the contraction norm.
    pub beta: f64,
    /// Stop once the distance between successive iterates is at most this.
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialIterate,
    /// Read anticipated arguments from this field instead of the iterate.
    pub frozen_ahead: Option<&'a SolutionField>,
}

impl<'a> PicardOptions<'a> {
    /// `β = 16 / (T + K)`, `tol = 1e-8`, 50 iterations, zero start.
    pub fn new(grid: &TimeGrid) -> Self {
        Self {
            beta: 16.0 / (grid.horizon() + grid.span()),
            tol: 1e-8,
            max_iter: 50,
            initial: InitialIterate::Zero,
            frozen_ahead: None,
        }
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn initial(mut self, initial: InitialIterate) -> Self {
        self.initial = initial;
        self
    }

    pub fn frozen_ahead(mut self, field: &'a SolutionField) -> Self {
        self.frozen_ahead = Some(field);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// `distances[k]` is the M²-distance between iterates `k + 1` and `k`.
    pub distances: Vec<f64>,
    /// `ratios[k] = distances[k + 1] / distances[k]` (zero when both vanish).
    pub ratios: Vec<f64>,
    pub beta: f64,
    pub converged: bool,
}

impl PicardReport {
    pub fn worst_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(0.0, f64::max)
    }
}

/// Picard iteration for the ABSVIE `problem`.
pub fn picard_solve(
    problem: &Problem<'_>,
    reg: &Regressor<'_>,
    opts: &PicardOptions<'_>,
) -> Result<(SolutionField, PicardReport)> {
    let grid = problem.grid;
    let free = problem.free;
    let shape = free.shape();
    if shape.paths != reg.ensemble().len() || shape.d != reg.ensemble().dim() {
        return Err(Error::DimensionMismatch(
            "free data and ensemble disagree on paths or Brownian dimension".into(),
        ));
    }
    let mut current = match opts.initial {
        InitialIterate::Zero => {
            let mut f = SolutionField::zeros_populated(grid, shape.m, shape.d, shape.paths);
            f.apply_boundary(grid, free)?;
            f
        }
        InitialIterate::FreeTerm => SolutionField::from_free_data(grid, free),
    };
    let norm = NormConfig {
        beta: opts.beta,
        region: Region::MSpace,
    };
    let mut distances: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let drift = evaluate_generator(problem, reg, &current, opts.frozen_ahead)?;
        let mut next = solve_simple(grid, reg, free, &drift)?;
        next.apply_boundary(grid, free)?;
        let next = complete_m_solution(grid, reg, next)?;
        let dist = weighted_distance(grid, &next, &current, &norm)?;
        if let Some(&prev) = distances.last() {
            ratios.push(if prev > 0.0 { dist / prev } else { 0.0 });
        }
        distances.push(dist);
        current = next;
        if dist <= opts.tol {
            converged = true;
            break;
        }
    }
    let report = PicardReport {
        iterations: distances.len(),
        distances,
        ratios,
        beta: opts.beta,
        converged,
    };
    if !converged {
        let last = report.ratios.last().copied().unwrap_or(f64::INFINITY);
        if last >= 1.0 {
            return Err(Error::NoConvergence {
                iterations: report.iterations,
                ratio: last,
            });
        }
    }
    Ok((current, report))
}
