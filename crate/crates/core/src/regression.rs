//! Least-squares Monte Carlo conditional expectations `E[X | F_{t_j}]`.
//!
//! At node `j` the regression state is `W(t_j)` and the basis is every
//! monomial of total degree `<= degree` in the `d` coordinates. The constant
//! is handled by centering: samples and basis columns are centered, the
//! ridge-regularized normal equations are solved for the non-constant part
//! and the sample mean is added back. Constants are therefore reproduced
//! exactly and the ridge never shrinks the intercept.
//!
//! The design matrix at a node does not depend on the samples being
//! projected, so [`Regressor`] factors every node once (symmetric
//! eigendecomposition of the centered Gram matrix) and each projection is
//! two passes over the paths.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::paths::PathEnsemble;

/// Relative ridge factor: `ridge * trace(Gram) / width`.
pub const DEFAULT_RIDGE: f64 = 1e-8;
/// Regularized normal matrices above this condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Terminal values with sample variance below this have zero density.
pub const ZERO_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionBasis {
    degree: usize,
    ridge: f64,
}

impl Default for RegressionBasis {
    fn default() -> Self {
        Self::polynomial(2)
    }
}

impl RegressionBasis {
    pub fn polynomial(degree: usize) -> Self {
        Self {
            degree,
            ridge: DEFAULT_RIDGE,
        }
    }

    /// Sets the relative ridge factor. Zero gives plain least squares.
    pub fn with_ridge(mut self, ridge: f64) -> Self {
        assert!(ridge >= 0.0, "ridge must be nonnegative");
        self.ridge = ridge;
        self
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Basis size including the constant.
    pub fn size(&self, dim: usize) -> usize {
        self.monomials(dim).len() + 1
    }

    /// Exponents of the non-constant monomials, ordered by total degree and
    /// then lexicographically (higher power of the first coordinate first).
    pub fn monomials(&self, dim: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for total in 1..=self.degree as u32 {
            let mut current = vec![0u32; dim];
            compositions(total, 0, &mut current, &mut out);
        }
        out
    }
}

fn compositions(remaining: u32, at: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if at + 1 == current.len() {
        current[at] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[at] = k;
        compositions(remaining - k, at + 1, current, out);
    }
    current[at] = 0;
}

/// A fitted projection expressed on raw (uncentered) monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub monomials: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
struct NodeProjector {
    // Zero when the state is degenerate (t = 0, degree 0, or no spread).
    width: usize,
    // [column][path], centered
    columns: Vec<f64>,
    means: Vec<f64>,
    // Row-major width x width; column e is eigenvector e.
    eigvecs: Vec<f64>,
    // 1 / (λ_e + ridge)
    scale: Vec<f64>,
    condition: f64,
}

impl NodeProjector {
    fn build(ensemble: &PathEnsemble, monomials: &[Vec<u32>], ridge: f64, node: usize) -> Self {
        let m = ensemble.len();
        let width = monomials.len();
        let mut columns = vec![0.0; width * m];
        let mut means = vec![0.0; width];
        for (k, exps) in monomials.iter().enumerate() {
            let col = &mut columns[k * m..(k + 1) * m];
            col.iter_mut().for_each(|v| *v = 1.0);
            for (l, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let w = ensemble.brownian(node, l);
                for (v, &x) in col.iter_mut().zip(w) {
                    for _ in 0..e {
                        *v *= x;
                    }
                }
            }
            let mu = math::mean(col);
            col.iter_mut().for_each(|v| *v -= mu);
            means[k] = mu;
        }

        let mut gram = vec![0.0; width * width];
        for a in 0..width {
            for b in a..width {
                let ca = &columns[a * m..(a + 1) * m];
                let cb = &columns[b * m..(b + 1) * m];
                let g = ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>() / m as f64;
                gram[a * width + b] = g;
                gram[b * width + a] = g;
            }
        }
        let trace: f64 = (0..width).map(|a| gram[a * width + a]).sum();
        if width == 0 || !(trace > 0.0) {
            return Self {
                width: 0,
                columns: Vec::new(),
                means: Vec::new(),
                eigvecs: Vec::new(),
                scale: Vec::new(),
                condition: 1.0,
            };
        }
        let r = ridge * trace / width as f64;
        let (values, eigvecs) = symmetric_eigen(gram, width);
        let shifted: Vec<f64> = values.iter().map(|&v| v.max(0.0) + r).collect();
        let hi = shifted.iter().cloned().fold(0.0, f64::max);
        let lo = shifted.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        let scale = shifted
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 })
            .collect();
        Self {
            width,
            columns,
            means,
            eigvecs,
            scale,
            condition,
        }
    }

    /// Coefficients on the centered columns, or `None` when degenerate.
    fn solve(&self, node: usize, samples: &[f64], centre: f64) -> Result<Option<Vec<f64>>> {
        if self.width == 0 {
            return Ok(None);
        }
        if self.condition > MAX_CONDITION {
            return Err(Error::SingularRegression {
                node,
                condition: self.condition,
            });
        }
        let m = samples.len();
        let w = self.width;
        let rhs: Vec<f64> = (0..w)
            .map(|k| {
                let col = &self.columns[k * m..(k + 1) * m];
                col.iter()
                    .zip(samples)
                    .map(|(c, y)| c * (y - centre))
                    .sum::<f64>()
                    / m as f64
            })
            .collect();
        let mut rotated = vec![0.0; w];
        for e in 0..w {
            let mut acc = 0.0;
            for k in 0..w {
                acc += self.eigvecs[k * w + e] * rhs[k];
            }
            rotated[e] = acc * self.scale[e];
        }
        let mut coef = vec![0.0; w];
        for k in 0..w {
            let mut acc = 0.0;
            for e in 0..w {
                acc += self.eigvecs[k * w + e] * rotated[e];
            }
            coef[k] = acc;
        }
        Ok(Some(coef))
    }
}

/// Cached per-node projectors for one ensemble and basis.
#[derive(Debug, Clone)]
pub struct Regressor<'a> {
    ensemble: &'a PathEnsemble,
    basis: RegressionBasis,
    monomials: Vec<Vec<u32>>,
    nodes: Vec<NodeProjector>,
}

impl<'a> Regressor<'a> {
    pub fn new(ensemble: &'a PathEnsemble, basis: RegressionBasis) -> Self {
        let monomials = basis.monomials(ensemble.dim());
        let nodes = crate::par::map_range(0..ensemble.nodes(), |j| {
            NodeProjector::build(ensemble, &monomials, basis.ridge, j)
        });
        Self {
            ensemble,
            basis,
            monomials,
            nodes,
        }
    }

    pub fn ensemble(&self) -> &'a PathEnsemble {
        self.ensemble
    }

    pub fn basis(&self) -> RegressionBasis {
        self.basis
    }

    /// Basis size including the constant.
    pub fn basis_size(&self) -> usize {
        self.monomials.len() + 1
    }

    /// Condition number of the regularized normal matrix at `node`.
    pub fn condition(&self, node: usize) -> f64 {
        self.nodes[node].condition
    }

    fn check(&self, node: usize, len: usize) -> Result<()> {
        if node >= self.nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "node {node} outside grid of {} nodes",
                self.nodes.len()
            )));
        }
        if len != self.ensemble.len() {
            return Err(Error::DimensionMismatch(format!(
                "{len} samples for {} paths",
                self.ensemble.len()
            )));
        }
        Ok(())
    }

    /// Writes the projection of `samples` on the basis at `node` into `out`.
    pub fn cond_expect_into(&self, node: usize, samples: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(node, samples.len())?;
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            out.copy_from_slice(samples);
            return Ok(());
        }
        let centre = math::mean(samples);
        let proj = &self.nodes[node];
        match proj.solve(node, samples, centre)? {
            None => out.iter_mut().for_each(|v| *v = centre),
            Some(coef) => {
                let m = samples.len();
                out.iter_mut().for_each(|v| *v = centre);
                for (k, c) in coef.iter().enumerate() {
                    let col = &proj.columns[k * m..(k + 1) * m];
                    for (v, x) in out.iter_mut().zip(col) {
                        *v += c * x;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cond_expect(&self, node: usize, samples: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; samples.len()];
        self.cond_expect_into(node, samples, &mut out)?;
        Ok(out)
    }

    /// Fitted coefficients on the raw monomials of `W(t_node)`.
    pub fn fit(&self, node: usize, samples: &[f64]) -> Result<Fit> {
        self.check(node, samples.len())?;
        let monomials = self.monomials.clone();
        let first = samples[0];
        if samples.iter().all(|&x| x == first) {
            let coefficients = vec![0.0; monomials.len()];
            return Ok(Fit {
                intercept: first,
                coefficients,
                monomials,
            });
        }
        let centre = math::mean(samples);
        let proj = &self.nodes[node];
        let mut coefficients = vec![0.0; monomials.len()];
        let mut intercept = centre;
        if let Some(coef) = proj.solve(node, samples, centre)? {
            for (k, c) in coef.iter().enumerate() {
                coefficients[k] = *c;
                intercept -= c * proj.means[k];
            }
        }
        Ok(Fit {
            intercept,
            coefficients,
            monomials,
        })
    }

    /// Representation densities of `terminal` on the columns `columns`, laid
    /// out as `[column][coordinate][path]`.
    ///
    /// `terminal` must be a function of the path up to `t_{measurable_at}` and
    /// every column must precede that node. On column `j` the density is
    /// `E[(X_{j+1} - X_j) ΔW_j | F_{t_j}] / h` with `X_n = E[terminal | F_{t_n}]`
    /// and `X_{measurable_at} = terminal`. When `X_{j+1}` is a polynomial fit
    /// in `W(t_{j+1}) = W(t_j) + ΔW_j`, the outer expectation is taken exactly
    /// with Gaussian moments; otherwise `(terminal - X_j) ΔW_j` is regressed
    /// at `t_j`.
    pub(crate) fn densities(
        &self,
        terminal: &[f64],
        measurable_at: usize,
        columns: core::ops::Range<usize>,
    ) -> Result<Vec<f64>> {
        let m = terminal.len();
        let d = self.ensemble.dim();
        let mut out = vec![0.0; columns.len() * d * m];
        if columns.is_empty() || math::variance(terminal) < ZERO_VARIANCE {
            return Ok(out);
        }
        let first = columns.start;
        for j in columns {
            if j >= measurable_at {
                return Err(Error::InvalidParameter(format!(
                    "density column {j} must precede the measurability node {measurable_at}"
                )));
            }
            let cell = &mut out[(j - first) * d * m..(j - first + 1) * d * m];
            if j + 1 < measurable_at {
                let fit = self.fit(j + 1, terminal)?;
                for l in 0..d {
                    self.transition_density(j, l, &fit, &mut cell[l * m..(l + 1) * m]);
                }
            } else {
                let lower = self.cond_expect(j, terminal)?;
                for l in 0..d {
                    let dw = self.ensemble.increment(j, l);
                    let target: Vec<f64> = terminal
                        .iter()
                        .zip(&lower)
                        .zip(dw)
                        .map(|((u, v), w)| (u - v) * w)
                        .collect();
                    let slot = &mut cell[l * m..(l + 1) * m];
                    self.cond_expect_into(j, &target, slot)?;
                    let h = self.ensemble.step();
                    slot.iter_mut().for_each(|v| *v /= h);
                }
            }
        }
        Ok(out)
    }

    /// `E[p(W(t_j) + ΔW_j) ΔW_{j,coord} | W(t_j)] / h` per path, for the
    /// polynomial `p` of `fit`.
    fn transition_density(&self, j: usize, coord: usize, fit: &Fit, out: &mut [f64]) {
        let h = self.ensemble.step();
        let top = self.basis.degree + 2;
        // Central Gaussian moments E[X^k], X ~ N(0, h).
        let mut moments = vec![0.0; top + 1];
        moments[0] = 1.0;
        for k in 2..=top {
            moments[k] = moments[k - 2] * (k - 1) as f64 * h;
        }
        let binom = |a: u32, k: u32| -> f64 {
            (0..k).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
        };
        // E[(w + X)^a X^shift] as polynomial coefficients in w (index = power).
        let shifted = |a: u32, shift: usize| -> Vec<f64> {
            (0..=a)
                .map(|power| {
                    let k = (a - power) as usize;
                    binom(a, a - power) * moments[k + shift]
                })
                .collect()
        };
        out.iter_mut().for_each(|v| *v = 0.0);
        let d = self.ensemble.dim();
        let states: Vec<&[f64]> = (0..d).map(|l| self.ensemble.brownian(j, l)).collect();
        for (exps, &c) in fit.monomials.iter().zip(&fit.coefficients) {
            if c == 0.0 || exps[coord] == 0 {
                continue;
            }
            let polys: Vec<Vec<f64>> = exps
                .iter()
                .enumerate()
                .map(|(l, &a)| shifted(a, usize::from(l == coord)))
                .collect();
            for (p, v) in out.iter_mut().enumerate() {
                let mut term = c;
                for (l, poly) in polys.iter().enumerate() {
                    let w = states[l][p];
                    let mut acc = 0.0;
                    for coef in poly.iter().rev() {
                        acc = acc * w + coef;
                    }
                    term *= acc;
                }
                *v += term;
            }
        }
        out.iter_mut().for_each(|v| *v /= h);
    }

    /// Regression estimate of the martingale representation density of
    /// `terminal` on `[t_j, t_{j+1})`, one vector per Brownian coordinate.
    ///
    /// `terminal` must be a function of the path up to `t_{measurable_at}`,
    /// with `j < measurable_at`. The estimate is
    /// `E[(E[X | F_{t_{j+1}}] - E[X | F_{t_j}]) ΔW_j | F_{t_j}] / h`, where
    /// both inner expectations are single projections of `terminal` and the
    /// node at `measurable_at` uses `terminal` itself.
    pub fn martingale_coeff(
        &self,
        j: usize,
        terminal: &[f64],
        measurable_at: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if j >= measurable_at {
            return Err(Error::InvalidParameter(format!(
                "density column {j} must precede the measurability node {measurable_at}"
            )));
        }
        self.check(j + 1, terminal.len())?;
        let m = terminal.len();
        let flat = self.densities(terminal, measurable_at, j..j + 1)?;
        Ok(flat.chunks(m).map(|c| c.to_vec()).collect())
    }
}

/// One-off conditional expectation at node `j`.
pub fn cond_expect(
    ensemble: &PathEnsemble,
    basis: RegressionBasis,
    j: usize,
    samples: &[f64],
) -> Result<Vec<f64>> {
    Regressor::new(ensemble, basis).cond_expect(j, samples)
}

/// One-off martingale representation density at column `j`.
pub fn martingale_coeff(
    ensemble: &PathEnsemble,
    basis: RegressionBasis,
    j: usize,
    terminal: &[f64],
    measurable_at: usize,
) -> Result<Vec<Vec<f64>>> {
    Regressor::new(ensemble, basis).martingale_coeff(j, terminal, measurable_at)
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major matrix.
/// Returns eigenvalues and a row-major matrix whose columns are eigenvectors.
fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off <= 1e-30 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (math::abs(theta) + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::paths::simulate;
    use proptest::prelude::*;

    fn ensemble(n: usize, m: usize, seed: u64) -> PathEnsemble {
        simulate(&build_grid(1.0, 0.0, n).unwrap(), 1, m, seed).unwrap()
    }

    #[test]
    fn monomial_enumeration() {
        let b = RegressionBasis::polynomial(2);
        assert_eq!(b.monomials(1), vec![vec![1], vec![2]]);
        assert_eq!(
            b.monomials(2),
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(b.size(2), 6);
        assert_eq!(RegressionBasis::polynomial(0).size(3), 1);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let (vals, vecs) = symmetric_eigen(vec![2.0, 1.0, 1.0, 2.0], 2);
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] - 1.0).abs() < 1e-14 && (sorted[1] - 3.0).abs() < 1e-14);
        // A v = λ v
        for e in 0..2 {
            let (x, y) = (vecs[e], vecs[2 + e]);
            assert!((2.0 * x + y - vals[e] * x).abs() < 1e-12);
            assert!((x + 2.0 * y - vals[e] * y).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_fixed() {
        let e = ensemble(8, 256, 1);
        let r = Regressor::new(&e, RegressionBasis::polynomial(3));
        for j in 0..=8 {
            let out = r.cond_expect(j, &[2.5; 256]).unwrap();
            assert!(out.iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn first_node_returns_sample_mean() {
        let e = ensemble(8, 512, 2);
        let r = Regressor::new(&e, RegressionBasis::default());
        let samples = e.brownian(8, 0);
        let out = r.cond_expect(0, samples).unwrap();
        let mu = math::mean(samples);
        assert!(out.iter().all(|&v| v == mu));
    }

    // E[W(T) | W(t)] = W(t): slope 1, intercept 0.
    #[test]
    fn gaussian_projection_slope() {
        let e = ensemble(16, 4096, 7);
        let r = Regressor::new(&e, RegressionBasis::polynomial(1));
        for j in 1..16 {
            let fit = r.fit(j, e.brownian(16, 0)).unwrap();
            assert!(
                (fit.coefficients[0] - 1.0).abs() <= 0.05,
                "node {j}: {fit:?}"
            );
        }
    }

    #[test]
    fn density_of_constant_is_zero() {
        let e = ensemble(16, 1024, 3);
        let r = Regressor::new(&e, RegressionBasis::default());
        let z = r.martingale_coeff(4, &[3.0; 1024], 16).unwrap();
        assert!(z[0].iter().all(|&v| v == 0.0));
    }

    // dW(T) = 1 dW: density 1 at every column.
    #[test]
    fn density_of_terminal_brownian() {
        let e = ensemble(16, 4096, 7);
        let r = Regressor::new(&e, RegressionBasis::default());
        for j in 0..16 {
            let z = r.martingale_coeff(j, e.brownian(16, 0), 16).unwrap();
            let mu = math::mean(&z[0]);
            assert!((mu - 1.0).abs() <= 0.1, "column {j}: {mu}");
        }
    }

    // W(T)² = T + ∫ 2 W(s) dW(s): density 2 W(t_j).
    #[test]
    fn density_of_terminal_square() {
        let e = ensemble(16, 4096, 7);
        let r = Regressor::new(&e, RegressionBasis::polynomial(2));
        let terminal: Vec<f64> = e.brownian(16, 0).iter().map(|w| w * w).collect();
        for j in 1..16 {
            let z = r.martingale_coeff(j, &terminal, 16).unwrap();
            let fit = r.fit(j, &z[0]).unwrap();
            assert!(
                (fit.coefficients[0] - 2.0).abs() <= 0.2,
                "column {j}: {fit:?}"
            );
        }
    }

    #[test]
    fn singular_design_is_reported() {
        let e = ensemble(8, 3, 4);
        // Three paths cannot determine a degree-4 fit without ridge.
        let r = Regressor::new(&e, RegressionBasis::polynomial(4).with_ridge(0.0));
        let err = r.cond_expect(4, &[1.0, 2.0, 4.0]).unwrap_err();
        assert!(matches!(err, Error::SingularRegression { node: 4, .. }));
    }

    #[test]
    fn density_needs_earlier_column() {
        let e = ensemble(8, 16, 4);
        let r = Regressor::new(&e, RegressionBasis::default());
        assert!(r.martingale_coeff(8, e.brownian(8, 0), 8).is_err());
    }

    #[test]
    fn tower_property_with_exact_inner_projection() {
        let e = ensemble(8, 2048, 11);
        let r = Regressor::new(&e, RegressionBasis::polynomial(2).with_ridge(0.0));
        // X is a degree-2 polynomial of W(t_6), so the inner projection is exact.
        let x: Vec<f64> = e
            .brownian(6, 0)
            .iter()
            .map(|w| 0.5 - w + 2.0 * w * w)
            .collect();
        for j in 1..=6 {
            let direct = r.cond_expect(j, &x).unwrap();
            let inner = r.cond_expect(6, &x).unwrap();
            let nested = r.cond_expect(j, &inner).unwrap();
            for (a, b) in direct.iter().zip(&nested) {
                assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn projection_is_linear(
            seed in 0u64..1000,
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            j in 1usize..8,
        ) {
            let e = ensemble(8, 256, seed);
            let r = Regressor::new(&e, RegressionBasis::default());
            let x: Vec<f64> = e.brownian(8, 0).iter().map(|w| w.sin()).collect();
            let y: Vec<f64> = e.brownian(8, 0).iter().map(|w| w * w * w).collect();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let px = r.cond_expect(j, &x).unwrap();
            let py = r.cond_expect(j, &y).unwrap();
            let pc = r.cond_expect(j, &combo).unwrap();
            for p in 0..256 {
                prop_assert!((pc[p] - (a * px[p] + b * py[p])).abs() <= 1e-10);
            }
        }
    }
}
