//! Generators `g(t, s, y, z, x, ξ, η, ς)` and the named registry.
//!
//! The last three arguments are the anticipated values `Y(s + δ_s)`,
//! `Z(t, s + ζ_s)` and `Z(s + ζ_s, t)`. A generator first maps them pathwise
//! to a feature vector. With [`Conditioning::Projected`] the features are
//! replaced by their conditional expectation given `F_s` before `g` sees
//! them, which is how `E^{F_s}[|ξ(r)|]` style drivers are realized; with
//! [`Conditioning::Raw`] they are used as sampled.
//!
//! `Z`-valued arguments are `m x d` row-major slices. Registry generators act
//! on each output component `k` through `y_k` and the scaled row sum
//! `z̄_k = Σ_l z_kl / √d`, so the declared constant is a valid Lipschitz
//! constant for every `m` and `d`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::math;

/// Which of the six arguments a generator reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Uses {
    pub y: bool,
    pub z: bool,
    pub z_transposed: bool,
    pub y_ahead: bool,
    pub z_ahead: bool,
    pub z_ahead_transposed: bool,
}

impl Uses {
    pub fn anticipates(&self) -> bool {
        self.y_ahead || self.z_ahead || self.z_ahead_transposed
    }

    /// Whether the generator reads `Z(s, t)` (directly or anticipated).
    pub fn transposed(&self) -> bool {
        self.z_transposed || self.z_ahead_transposed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Raw,
    Projected,
}

/// Anticipated arguments for one path: `ξ` (m), `η` (m·d), `ς` (m·d).
#[derive(Debug, Clone, Copy)]
pub struct Ahead<'a> {
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub z_transposed: &'a [f64],
}

/// Arguments for one path. `ahead` holds the (possibly projected) features.
#[derive(Debug, Clone, Copy)]
pub struct Arguments<'a> {
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub z_transposed: &'a [f64],
    pub ahead: &'a [f64],
}

pub trait Generator: Send + Sync + fmt::Debug {
    /// Declared Lipschitz constant in the sense of (H2).
    fn lipschitz(&self) -> f64;

    fn uses(&self) -> Uses;

    fn conditioning(&self) -> Conditioning {
        Conditioning::Raw
    }

    fn feature_len(&self, m: usize, d: usize) -> usize {
        m + 2 * m * d
    }

    /// Pathwise map of the anticipated arguments; concatenation by default.
    fn features(&self, ahead: &Ahead<'_>, out: &mut [f64]) {
        let (a, rest) = out.split_at_mut(ahead.y.len());
        let (b, c) = rest.split_at_mut(ahead.z.len());
        a.copy_from_slice(ahead.y);
        b.copy_from_slice(ahead.z);
        c.copy_from_slice(ahead.z_transposed);
    }

    /// Writes `g(t, s, ·)` (length `m`) into `out`.
    fn eval(&self, t: f64, s: f64, args: &Arguments<'_>, out: &mut [f64]);
}

/// Scalar parameters keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Fails on any key outside `allowed`.
    pub fn expect_only(&self, name: &str, allowed: &[&str]) -> Result<()> {
        for key in self.0.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::UnknownParameter {
                    name: name.to_string(),
                    param: key.clone(),
                });
            }
        }
        Ok(())
    }
}

impl<'a> FromIterator<(&'a str, f64)> for Params {
    fn from_iter<I: IntoIterator<Item = (&'a str, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

/// A named generator with its parameters.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    name: String,
    params: Params,
    inner: Arc<dyn Generator>,
}

pub const REGISTRY: &[&str] = &[
    "zero",
    "linear",
    "cond_mean_plus",
    "cond_abs_plus",
    "nonlinear",
];

impl GeneratorSpec {
    /// Builds a registry generator.
    ///
    /// * `zero`: `g ≡ 0`.
    /// * `linear`: `y·Y(s) + z·z̄(t,s) + zt·z̄(s,t) + y_ahead·ξ + z_ahead·η̄ + zt_ahead·ς̄ + c`;
    ///   `project = 1` projects the anticipated arguments on `F_s`.
    /// * `cond_mean_plus`: `a·E^{F_s}[ξ] + c`.
    /// * `cond_abs_plus`: `a·E^{F_s}[|ξ|] + c`.
    /// * `nonlinear`: `y·sin Y(s) + z·tanh z̄(t,s) + zt·tanh z̄(s,t) + y_ahead·E^{F_s}[sin ξ] + c`.
    pub fn from_registry(name: &str, params: Params) -> Result<Self> {
        let inner: Arc<dyn Generator> = match name {
            "zero" => {
                params.expect_only(name, &[])?;
                Arc::new(Zero)
            }
            "linear" => {
                params.expect_only(
                    name,
                    &[
                        "y", "z", "zt", "y_ahead", "z_ahead", "zt_ahead", "c", "project",
                    ],
                )?;
                let project = params.get_or("project", 0.0);
                if project != 0.0 && project != 1.0 {
                    return Err(Error::InvalidParameter(
                        "linear: project must be 0 or 1".into(),
                    ));
                }
                Arc::new(Linear {
                    coef: [
                        params.get_or("y", 0.0),
                        params.get_or("z", 0.0),
                        params.get_or("zt", 0.0),
                        params.get_or("y_ahead", 0.0),
                        params.get_or("z_ahead", 0.0),
                        params.get_or("zt_ahead", 0.0),
                    ],
                    constant: params.get_or("c", 0.0),
                    conditioning: if project == 1.0 {
                        Conditioning::Projected
                    } else {
                        Conditioning::Raw
                    },
                })
            }
            "cond_mean_plus" => {
                params.expect_only(name, &["a", "c"])?;
                Arc::new(CondMean {
                    scale: params.get_or("a", 1.0),
                    constant: params.get_or("c", 1.0),
                })
            }
            "cond_abs_plus" => {
                params.expect_only(name, &["a", "c"])?;
                Arc::new(CondAbs {
                    scale: params.get_or("a", 1.0),
                    constant: params.get_or("c", 0.0),
                })
            }
            "nonlinear" => {
                params.expect_only(name, &["y", "z", "zt", "y_ahead", "c"])?;
                Arc::new(Nonlinear {
                    y: params.get_or("y", 0.0),
                    z: params.get_or("z", 0.0),
                    zt: params.get_or("zt", 0.0),
                    ahead: params.get_or("y_ahead", 0.0),
                    constant: params.get_or("c", 0.0),
                })
            }
            other => return Err(Error::UnknownGenerator(other.to_string())),
        };
        Ok(Self {
            name: name.to_string(),
            params,
            inner,
        })
    }

    /// Wraps a caller-supplied generator.
    pub fn custom(name: &str, generator: impl Generator + 'static) -> Self {
        Self {
            name: name.to_string(),
            params: Params::new(),
            inner: Arc::new(generator),
        }
    }

    pub fn zero() -> Self {
        Self::from_registry("zero", Params::new()).expect("registry entry")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    pub fn uses(&self) -> Uses {
        self.inner.uses()
    }

    pub fn conditioning(&self) -> Conditioning {
        self.inner.conditioning()
    }

    pub fn feature_len(&self, m: usize, d: usize) -> usize {
        self.inner.feature_len(m, d)
    }

    pub fn features(&self, ahead: &Ahead<'_>, out: &mut [f64]) {
        self.inner.features(ahead, out)
    }

    pub fn eval(&self, t: f64, s: f64, args: &Arguments<'_>, out: &mut [f64]) {
        self.inner.eval(t, s, args, out)
    }

    /// Evaluates at deterministic arguments, where `E^{F_s}` is the identity.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate_point(
        &self,
        t: f64,
        s: f64,
        y: &[f64],
        z: &[f64],
        z_transposed: &[f64],
        ahead: &Ahead<'_>,
        out: &mut [f64],
    ) {
        let m = y.len();
        let d = if m == 0 { 0 } else { z.len() / m };
        let mut feats = vec![0.0; self.feature_len(m, d)];
        self.features(ahead, &mut feats);
        let args = Arguments {
            y,
            z,
            z_transposed,
            ahead: &feats,
        };
        self.eval(t, s, &args, out);
    }
}

fn row_mean(z: &[f64], m: usize, k: usize) -> f64 {
    if m == 0 || z.is_empty() {
        return 0.0;
    }
    let d = z.len() / m;
    z[k * d..(k + 1) * d].iter().sum::<f64>() / math::sqrt(d as f64)
}

#[derive(Debug)]
struct Zero;

impl Generator for Zero {
    fn lipschitz(&self) -> f64 {
        0.0
    }

    fn uses(&self) -> Uses {
        Uses::default()
    }

    fn eval(&self, _t: f64, _s: f64, _args: &Arguments<'_>, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug)]
struct Linear {
    // y, z, zt, y_ahead, z_ahead, zt_ahead
    coef: [f64; 6],
    constant: f64,
    conditioning: Conditioning,
}

impl Generator for Linear {
    fn lipschitz(&self) -> f64 {
        self.coef.iter().fold(0.0, |acc, c| acc.max(math::abs(*c)))
    }

    fn uses(&self) -> Uses {
        let [y, z, zt, ya, za, zta] = self.coef.map(|c| c != 0.0);
        Uses {
            y,
            z,
            z_transposed: zt,
            y_ahead: ya,
            z_ahead: za,
            z_ahead_transposed: zta,
        }
    }

    fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    fn eval(&self, _t: f64, _s: f64, args: &Arguments<'_>, out: &mut [f64]) {
        let m = out.len();
        let md = args.z.len();
        let (xi, rest) = args.ahead.split_at(m);
        let (eta, vs) = rest.split_at(md);
        let [cy, cz, czt, ca, cb, cc] = self.coef;
        for (k, o) in out.iter_mut().enumerate() {
            *o = cy * args.y[k]
                + cz * row_mean(args.z, m, k)
                + czt * row_mean(args.z_transposed, m, k)
                + ca * xi[k]
                + cb * row_mean(eta, m, k)
                + cc * row_mean(vs, m, k)
                + self.constant;
        }
    }
}

#[derive(Debug)]
struct CondMean {
    scale: f64,
    constant: f64,
}

impl Generator for CondMean {
    fn lipschitz(&self) -> f64 {
        math::abs(self.scale)
    }

    fn uses(&self) -> Uses {
        Uses {
            y_ahead: true,
            ..Uses::default()
        }
    }

    fn conditioning(&self) -> Conditioning {
        Conditioning::Projected
    }

    fn feature_len(&self, m: usize, _d: usize) -> usize {
        m
    }

    fn features(&self, ahead: &Ahead<'_>, out: &mut [f64]) {
        out.copy_from_slice(ahead.y);
    }

    fn eval(&self, _t: f64, _s: f64, args: &Arguments<'_>, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(args.ahead) {
            *o = self.scale * f + self.constant;
        }
    }
}

#[derive(Debug)]
struct CondAbs {
    scale: f64,
    constant: f64,
}

impl Generator for CondAbs {
    fn lipschitz(&self) -> f64 {
        math::abs(self.scale)
    }

    fn uses(&self) -> Uses {
        Uses {
            y_ahead: true,
            ..Uses::default()
        }
    }

    fn conditioning(&self) -> Conditioning {
        Conditioning::Projected
    }

    fn feature_len(&self, m: usize, _d: usize) -> usize {
        m
    }

    fn features(&self, ahead: &Ahead<'_>, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(ahead.y) {
            *o = math::abs(*x);
        }
    }

    fn eval(&self, _t: f64, _s: f64, args: &Arguments<'_>, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(args.ahead) {
            *o = self.scale * f + self.constant;
        }
    }
}

#[derive(Debug)]
struct Nonlinear {
    y: f64,
    z: f64,
    zt: f64,
    ahead: f64,
    constant: f64,
}

impl Generator for Nonlinear {
    fn lipschitz(&self) -> f64 {
        [self.y, self.z, self.zt, self.ahead]
            .iter()
            .fold(0.0, |acc, c| acc.max(math::abs(*c)))
    }

    fn uses(&self) -> Uses {
        Uses {
            y: self.y != 0.0,
            z: self.z != 0.0,
            z_transposed: self.zt != 0.0,
            y_ahead: self.ahead != 0.0,
            ..Uses::default()
        }
    }

    fn conditioning(&self) -> Conditioning {
        Conditioning::Projected
    }

    fn feature_len(&self, m: usize, _d: usize) -> usize {
        m
    }

    fn features(&self, ahead: &Ahead<'_>, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(ahead.y) {
            *o = math::sin(*x);
        }
    }

    fn eval(&self, _t: f64, _s: f64, args: &Arguments<'_>, out: &mut [f64]) {
        let m = out.len();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.y * math::sin(args.y[k])
                + self.z * math::tanh(row_mean(args.z, m, k))
                + self.zt * math::tanh(row_mean(args.z_transposed, m, k))
                + self.ahead * args.ahead[k]
                + self.constant;
        }
    }
}

/// Uniform draws on `[lo, hi)` from a ChaCha8 stream.
pub(crate) struct Probe(ChaCha8Rng);

impl Probe {
    pub(crate) fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub(crate) fn fill(&mut self, out: &mut [f64], lo: f64, hi: f64) {
        for v in out {
            *v = self.uniform(lo, hi);
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Largest observed `|g(a) - g(b)| / dist(a, b)` over random argument pairs,
/// where `dist` is the (H2) sum of argument distances. Only arguments the
/// generator uses are perturbed. A declared constant `L` is accepted when
/// the result is at most `1.05 L`.
pub fn lipschitz_probe(gen: &GeneratorSpec, m: usize, d: usize, probes: usize, seed: u64) -> f64 {
    let uses = gen.uses();
    let mut rng = Probe::new(seed);
    let md = m * d;
    let mut worst: f64 = 0.0;
    let mut a = [
        vec![0.0; m],
        vec![0.0; md],
        vec![0.0; md],
        vec![0.0; m],
        vec![0.0; md],
        vec![0.0; md],
    ];
    let mut b = a.clone();
    let flags = [
        uses.y,
        uses.z,
        uses.z_transposed,
        uses.y_ahead,
        uses.z_ahead,
        uses.z_ahead_transposed,
    ];
    let (mut ga, mut gb) = (vec![0.0; m], vec![0.0; m]);
    for _ in 0..probes {
        let s = rng.uniform(0.0, 1.0);
        let t = rng.uniform(0.0, s);
        for (arg, (other, used)) in a.iter_mut().zip(b.iter_mut().zip(flags)) {
            rng.fill(arg, -3.0, 3.0);
            if used {
                // Mix of near and far pairs.
                let radius = if rng.uniform(0.0, 1.0) < 0.5 {
                    1e-3
                } else {
                    3.0
                };
                for (o, x) in other.iter_mut().zip(arg.iter()) {
                    *o = x + rng.uniform(-radius, radius);
                }
            } else {
                other.copy_from_slice(arg);
            }
        }
        let eval = |args: &[Vec<f64>; 6], out: &mut [f64]| {
            let ahead = Ahead {
                y: &args[3],
                z: &args[4],
                z_transposed: &args[5],
            };
            gen.evaluate_point(t, s, &args[0], &args[1], &args[2], &ahead, out);
        };
        eval(&a, &mut ga);
        eval(&b, &mut gb);
        let dist: f64 = a.iter().zip(&b).map(|(x, y)| euclid(x, y)).sum();
        if dist > 0.0 {
            worst = worst.max(euclid(&ga, &gb) / dist);
        }
    }
    worst
}
