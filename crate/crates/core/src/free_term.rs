//! Named free terms `(ψ, η)` built on a path ensemble.
//!
//! | name              | `ψ(t)`                     | `η(t, s)` for `t > T, s < t` |
//! |-------------------|----------------------------|------------------------------|
//! | `constant`        | `c`                        | `0`                          |
//! | `brownian`        | `(a + b t) W₁(τ) + c`      | `(a + b t) e₁`               |
//! | `brownian_square` | `(a + b t) W₁(τ)² + c`     | `2 (a + b t) W₁(s) e₁`       |
//!
//! `τ = max(t, T)` by default, so `ψ` is the same `F_T`-measurable variable
//! on `[0, T]`; with `adapted = 1`, `τ = t`. Every component of `ψ` carries
//! the same value. `η` vanishes on the exterior cells with `t <= T` or
//! `s >= t`.

use alloc::string::String;

use crate::error::{Error, Result};
use crate::field::FreeData;
use crate::generator::Params;
use crate::grid::TimeGrid;
use crate::paths::PathEnsemble;

pub const REGISTRY: &[&str] = &["constant", "brownian", "brownian_square"];

#[derive(Debug, Clone, PartialEq)]
pub struct FreeTermSpec {
    pub name: String,
    pub params: Params,
}

impl FreeTermSpec {
    pub fn new(name: &str, params: Params) -> Self {
        Self {
            name: name.into(),
            params,
        }
    }

    pub fn build(&self, grid: &TimeGrid, ensemble: &PathEnsemble, m: usize) -> Result<FreeData> {
        build_free_term(grid, ensemble, m, &self.name, &self.params)
    }
}

pub fn build_free_term(
    grid: &TimeGrid,
    ensemble: &PathEnsemble,
    m: usize,
    name: &str,
    params: &Params,
) -> Result<FreeData> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let d = ensemble.dim();
    let paths = ensemble.len();
    let n = grid.steps();
    let mut free = FreeData::zeros(grid, m, d, paths);
    match name {
        "constant" => {
            params.expect_only(name, &["c"])?;
            let c = params.get_or("c", 0.0);
            for node in 0..grid.len() {
                for k in 0..m {
                    free.psi_mut(node, k).iter_mut().for_each(|v| *v = c);
                }
            }
        }
        "brownian" | "brownian_square" => {
            params.expect_only(name, &["a", "b", "c", "adapted"])?;
            let a = params.get_or("a", 1.0);
            let b = params.get_or("b", 0.0);
            let c = params.get_or("c", 0.0);
            let adapted = params.get_or("adapted", 0.0) != 0.0;
            let square = name == "brownian_square";
            for node in 0..grid.len() {
                let scale = a + b * grid.time(node);
                let tau = if adapted { node } else { node.max(n) };
                let w = ensemble.brownian(tau, 0);
                for k in 0..m {
                    for (v, x) in free.psi_mut(node, k).iter_mut().zip(w) {
                        *v = if square { scale * x * x } else { scale * x } + c;
                    }
                }
                if node <= n {
                    continue;
                }
                for col in 0..node {
                    for k in 0..m {
                        let out = free.eta_mut(node, col, k, 0);
                        if square {
                            let ws = ensemble.brownian(col, 0);
                            for (v, x) in out.iter_mut().zip(ws) {
                                *v = 2.0 * scale * x;
                            }
                        } else {
                            out.iter_mut().for_each(|v| *v = scale);
                        }
                    }
                }
            }
        }
        other => return Err(Error::UnknownFreeTerm(other.into())),
    }
    Ok(free)
}
