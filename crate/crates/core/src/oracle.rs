//! Reference solutions that share no code with the solver.
//!
//! [`solve_det_volterra`] handles the deterministic equation
//! `Y(t) = ψ(t) + ∫_t^T a(t, s) λ Y(s + δ) ds` on `[0, T]` with `Y = ψ` on
//! `[T, T + K]`, marching backward from `T` on a fine grid. When `δ > 0`
//! every anticipated value is already known (method of steps); when `δ = 0`
//! the diagonal term is solved implicitly.
//!
//! [`gaussian_reference`] is the closed form for `ψ(t) = h(t) W(T)`,
//! `g ≡ 0`: `Y(t) = h(t) W(t)` and `Z(t, s) = h(t)` for `s < T`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::math;
use crate::paths::PathEnsemble;

pub struct DetVolterraProblem {
    pub horizon: f64,
    pub span: f64,
    pub psi: Box<dyn Fn(f64) -> f64>,
    pub kernel: Box<dyn Fn(f64, f64) -> f64>,
    pub lambda: f64,
    pub delay: f64,
    pub fine_steps: usize,
}

impl core::fmt::Debug for DetVolterraProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DetVolterraProblem")
            .field("horizon", &self.horizon)
            .field("span", &self.span)
            .field("lambda", &self.lambda)
            .field("delay", &self.delay)
            .field("fine_steps", &self.fine_steps)
            .finish_non_exhaustive()
    }
}

impl DetVolterraProblem {
    /// Unit kernel and `N_fine = 256`.
    pub fn new(
        horizon: f64,
        span: f64,
        psi: impl Fn(f64) -> f64 + 'static,
        lambda: f64,
        delay: f64,
    ) -> Self {
        Self {
            horizon,
            span,
            psi: Box::new(psi),
            kernel: Box::new(|_, _| 1.0),
            lambda,
            delay,
            fine_steps: 256,
        }
    }

    pub fn kernel(mut self, kernel: impl Fn(f64, f64) -> f64 + 'static) -> Self {
        self.kernel = Box::new(kernel);
        self
    }

    pub fn fine_steps(mut self, steps: usize) -> Self {
        self.fine_steps = steps;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetSolution {
    /// Fine-grid times over `[0, T + K]`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Relative sup-norm change on `[0, T]` when the fine step is halved.
    pub refinement_change: f64,
}

impl DetSolution {
    /// Linear interpolation between fine nodes.
    pub fn value_at(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        let h = self.times[1] - self.times[0];
        let pos = (t - self.times[0]) / h;
        if pos <= 0.0 {
            return self.values[0];
        }
        let lo = (pos as usize).min(last);
        if lo == last {
            return self.values[last];
        }
        let w = pos - lo as f64;
        if w < 1e-9 {
            return self.values[lo];
        }
        (1.0 - w) * self.values[lo] + w * self.values[lo + 1]
    }
}

fn steps_of(length: f64, h: f64, what: &str) -> Result<usize> {
    let q = length / h;
    let r = math::round(q);
    if length < 0.0 || math::abs(q - r) > 1e-9 * (1.0 + q) {
        return Err(Error::InvalidParameter(alloc::format!(
            "{what} = {length} is not a non-negative multiple of the oracle step {h}"
        )));
    }
    Ok(r as usize)
}

fn march(p: &DetVolterraProblem, fine: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = p.horizon / fine as f64;
    let ahead = steps_of(p.span, h, "K")?;
    let lag = steps_of(p.delay, h, "delay")?;
    if p.delay > p.span + 1e-12 {
        return Err(Error::InvalidParameter("delay exceeds K".into()));
    }
    let total = fine + ahead + 1;
    let times: Vec<f64> = (0..total)
        .map(|j| if j == fine { p.horizon } else { j as f64 * h })
        .collect();
    let mut y: Vec<f64> = times.iter().map(|&t| (p.psi)(t)).collect();
    for i in (0..fine).rev() {
        let t = times[i];
        let mut acc = 0.0;
        let first = if lag == 0 { i + 1 } else { i };
        for j in first..fine {
            acc += (p.kernel)(t, times[j]) * y[j + lag];
        }
        let explicit = (p.psi)(t) + h * p.lambda * acc;
        y[i] = if lag == 0 {
            explicit / (1.0 - h * p.lambda * (p.kernel)(t, t))
        } else {
            explicit
        };
    }
    Ok((times, y))
}

pub fn solve_det_volterra(problem: &DetVolterraProblem) -> Result<DetSolution> {
    if !(problem.horizon > 0.0) || problem.fine_steps == 0 || problem.span < 0.0 {
        return Err(Error::InvalidParameter(
            "oracle needs T > 0, K >= 0, N_fine >= 1".into(),
        ));
    }
    let (times, values) = march(problem, problem.fine_steps)?;
    let (_, finer) = march(problem, 2 * problem.fine_steps)?;
    let mut change: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..=problem.fine_steps {
        change = change.max(math::abs(values[i] - finer[2 * i]));
        scale = scale.max(math::abs(finer[2 * i]));
    }
    Ok(DetSolution {
        times,
        values,
        refinement_change: if scale > 0.0 { change / scale } else { change },
    })
}

/// `(h(t_i) W(t_i)` per path, `Z(t_i, s_j))` for `ψ(t) = h(t) W(T)`, `m = d = 1`.
pub fn gaussian_reference(
    grid: &TimeGrid,
    ensemble: &PathEnsemble,
    h_fn: impl Fn(f64) -> f64,
    i: usize,
    j: usize,
) -> (Vec<f64>, f64) {
    let scale = h_fn(grid.time(i));
    let y = ensemble
        .brownian(i.min(grid.steps()), 0)
        .iter()
        .map(|w| scale * w)
        .collect();
    let z = if j < grid.steps() { scale } else { 0.0 };
    (y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::paths::simulate;
    use core::f64::consts::E;

    #[test]
    fn exponential_without_delay() {
        let sol =
            solve_det_volterra(&DetVolterraProblem::new(1.0, 0.0, |_| 1.0, 1.0, 0.0)).unwrap();
        assert!(
            (sol.value_at(0.0) - E).abs() / E < 0.005,
            "{}",
            sol.value_at(0.0)
        );
        assert!(sol.refinement_change < 0.005);
        for (t, y) in sol.times.iter().zip(&sol.values) {
            let exact = (1.0 - t).exp();
            assert!((y - exact).abs() / exact < 0.005);
        }
    }

    #[test]
    fn first_step_of_the_delay_equation() {
        let sol =
            solve_det_volterra(&DetVolterraProblem::new(1.0, 0.25, |_| 1.0, 1.0, 0.25)).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.values) {
            if (0.75..=1.0).contains(t) {
                assert!((y - (2.0 - t)).abs() < 1e-12, "Y({t}) = {y}");
            }
        }
        assert!(sol.refinement_change < 0.005);
    }

    #[test]
    fn zero_lambda_returns_psi() {
        let sol = solve_det_volterra(&DetVolterraProblem::new(
            1.0,
            0.5,
            |t| t * t - 1.0,
            0.0,
            0.25,
        ))
        .unwrap();
        for (t, y) in sol.times.iter().zip(&sol.values) {
            assert_eq!(*y, t * t - 1.0);
        }
    }

    #[test]
    fn rejects_misaligned_delay() {
        let p = DetVolterraProblem::new(1.0, 0.5, |_| 1.0, 1.0, 0.3).fine_steps(8);
        assert!(solve_det_volterra(&p).is_err());
    }

    #[test]
    fn gaussian_closed_forms() {
        let g = build_grid(1.0, 0.0, 4).unwrap();
        let e = simulate(&g, 1, 16, 3).unwrap();
        let (y, z) = gaussian_reference(&g, &e, |_| 1.0, 2, 1);
        assert_eq!(y.as_slice(), e.brownian(2, 0));
        assert_eq!(z, 1.0);
        let (y, z) = gaussian_reference(&g, &e, |_| 0.0, 3, 0);
        assert!(y.iter().all(|&v| v == 0.0));
        assert_eq!(z, 0.0);
        let (y, _) = gaussian_reference(&g, &e, |t| t, 0, 0);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_reference_satisfies_representation() {
        // W(t_i) = Σ_{j<i} 1 · ΔW_j on every path.
        let g = build_grid(1.0, 0.0, 8).unwrap();
        let e = simulate(&g, 1, 32, 4).unwrap();
        for i in 0..=8 {
            let (y, _) = gaussian_reference(&g, &e, |_| 1.0, i, 0);
            for (p, v) in y.iter().enumerate() {
                let mut acc = 0.0;
                for j in 0..i {
                    let (_, z) = gaussian_reference(&g, &e, |_| 1.0, i, j);
                    acc += z * e.increment(j, 0)[p];
                }
                assert!((v - acc).abs() < 1e-12);
            }
        }
    }
}
