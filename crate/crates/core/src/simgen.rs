//! Seeded generators for the simulation models and the two- and
//! three-group scenarios built from them.
//!
//! Models 1 to 9 live on 30 equispaced points of `[0, 1]` and add Gaussian
//! process noise to a smooth mean. Models 10 to 12 are truncated
//! Karhunen–Loève expansions on 150 points of `[0, 1]`. Models 13 to 21 are
//! deterministic shapes on 100 points of `[0, π/3]` with a random per-curve
//! shift plus Gaussian noise `N(2, 0.4²)`, drawn either at every observation
//! (the default) or once per curve.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{Cholesky, DMatrix};
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::curves::{FunctionalSample, Grid};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from, Rng};

/// Exponential covariance `scale * exp(-|s - t| / length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPKernelSpec {
    pub scale: f64,
    pub length: f64,
}

impl GPKernelSpec {
    /// Noise `e(t)` of Models 1 to 6 and 9.
    pub const E: GPKernelSpec = GPKernelSpec {
        scale: 0.3,
        length: 0.3,
    };
    /// Noise `h(t)` of Models 7 and 8.
    pub const H: GPKernelSpec = GPKernelSpec {
        scale: 0.5,
        length: 0.2,
    };

    pub fn covariance(&self, grid: &Grid) -> DMatrix<f64> {
        let t = grid.points();
        DMatrix::from_fn(t.len(), t.len(), |i, j| {
            self.scale * (-(t[i] - t[j]).abs() / self.length).exp()
        })
    }
}

/// A Gaussian process on a fixed grid, factored once.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    mean: Vec<f64>,
    factor: DMatrix<f64>,
}

impl GaussianProcess {
    pub fn new(mean: &[f64], kernel: GPKernelSpec, grid: &Grid) -> Result<Self> {
        if !(kernel.scale > 0.0 && kernel.length > 0.0) {
            return invalid("GP scale and length must be positive");
        }
        if mean.len() != grid.len() {
            return invalid("mean length does not match the grid");
        }
        let cov = kernel.covariance(grid);
        let mut jitter = 0.0;
        loop {
            let mut c = cov.clone();
            for i in 0..c.nrows() {
                c[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::new(c) {
                return Ok(Self {
                    mean: mean.to_vec(),
                    factor: ch.l(),
                });
            }
            jitter = if jitter == 0.0 {
                1e-10 * kernel.scale
            } else {
                jitter * 10.0
            };
            if jitter > 1e-6 * kernel.scale * (1.0 + 1e-9) {
                return Err(Error::NumericalFailure(
                    "GP covariance is not positive definite after jitter".into(),
                ));
            }
        }
    }

    /// `count` draws as rows.
    pub fn sample(&self, count: usize, rng: &mut Rng) -> DMatrix<f64> {
        let m = self.mean.len();
        let z = DMatrix::from_fn(m, count, |_, _| StandardNormal.sample(rng));
        let draws = &self.factor * z;
        DMatrix::from_fn(count, m, |i, j| self.mean[j] + draws[(j, i)])
    }
}

pub fn sample_gp(
    mean: &[f64],
    kernel: GPKernelSpec,
    grid: &Grid,
    count: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if count == 0 {
        return invalid("count must be at least 1");
    }
    let gp = GaussianProcess::new(mean, kernel, grid)?;
    Ok(gp.sample(count, &mut rng_from(seed)))
}

/// `30 t^{3/2} (1 - t)`.
pub fn e1(t: f64) -> f64 {
    30.0 * t.powf(1.5) * (1.0 - t)
}

/// `30 t (1 - t)^2`.
pub fn e1_alt(t: f64) -> f64 {
    30.0 * t * (1.0 - t).powi(2)
}

pub fn grid_1_9() -> Grid {
    Grid::uniform(0.0, 1.0, 30).expect("valid grid")
}

pub fn grid_10_12() -> Grid {
    Grid::uniform(0.0, 1.0, 150).expect("valid grid")
}

pub fn grid_13_21() -> Grid {
    Grid::uniform(0.0, PI / 3.0, 100).expect("valid grid")
}

/// Mean function and noise process of Models 1 to 9.
fn model_1_9_parts(id: u8) -> (fn(f64) -> f64, f64, GPKernelSpec, f64) {
    // (mean, shift, kernel, noise multiplier)
    match id {
        1 => (e1, 0.0, GPKernelSpec::E, 1.0),
        2 => (e1, 0.5, GPKernelSpec::E, 1.0),
        3 => (e1, 0.75, GPKernelSpec::E, 1.0),
        4 => (e1, 1.0, GPKernelSpec::E, 1.0),
        5 => (e1, 0.0, GPKernelSpec::E, 2.0),
        6 => (e1, 0.0, GPKernelSpec::E, 0.25),
        7 => (e1, 0.0, GPKernelSpec::H, 1.0),
        8 => (e1_alt, 0.0, GPKernelSpec::H, 1.0),
        _ => (e1_alt, 0.0, GPKernelSpec::E, 1.0),
    }
}

/// Noise-free mean of Models 1 to 9 on their grid.
pub fn model_1_9_mean(id: u8) -> Result<Vec<f64>> {
    if !(1..=9).contains(&id) {
        return invalid(format!("model {id} is not in 1..=9"));
    }
    let (f, shift, _, _) = model_1_9_parts(id);
    Ok(grid_1_9().points().iter().map(|&t| f(t) + shift).collect())
}

pub fn gen_model_1_9(id: u8, count: usize, seed: u64) -> Result<FunctionalSample> {
    let mean = model_1_9_mean(id)?;
    let (_, _, kernel, mult) = model_1_9_parts(id);
    let grid = grid_1_9();
    let zero = vec![0.0; grid.len()];
    let noise = sample_gp(&zero, kernel, &grid, count, seed)?;
    let values = DMatrix::from_fn(count, grid.len(), |i, j| mean[j] + mult * noise[(i, j)]);
    FunctionalSample::new(values, grid, None)
}

pub const KL_TERMS: usize = 100;

pub fn kl_rho(k: usize) -> f64 {
    let k1 = (k + 1) as f64;
    if k <= 3 {
        1.0 / k1
    } else {
        1.0 / (k1 * k1)
    }
}

/// Orthonormal basis of `L²[0, 1]`, indexed from 1.
pub fn kl_theta(k: usize, t: f64) -> f64 {
    if k == 1 {
        1.0
    } else if k % 2 == 0 {
        SQRT_2 * (k as f64 * PI * t).sin()
    } else {
        SQRT_2 * ((k - 1) as f64 * PI * t).cos()
    }
}

pub fn model_10_12_mean(id: u8, t: f64) -> Result<f64> {
    let e2 = t * (1.0 - t);
    let terms = match id {
        10 => 1..1,
        11 => 1..4,
        12 => 4..KL_TERMS + 1,
        _ => return invalid(format!("model {id} is not in 10..=12")),
    };
    Ok(e2 + terms.map(|k| kl_rho(k).sqrt() * kl_theta(k, t)).sum::<f64>())
}

pub fn gen_model_10_12(id: u8, count: usize, seed: u64) -> Result<FunctionalSample> {
    let grid = grid_10_12();
    let t = grid.points();
    let mean: Vec<f64> = t.iter().map(|&s| model_10_12_mean(id, s)).collect::<Result<_>>()?;
    // basis[k - 1][j] = sqrt(rho_k) theta_k(t_j)
    let basis: Vec<Vec<f64>> = (1..=KL_TERMS)
        .map(|k| t.iter().map(|&s| kl_rho(k).sqrt() * kl_theta(k, s)).collect())
        .collect();
    let mut rng = rng_from(seed);
    let mut values = DMatrix::zeros(count, t.len());
    for i in 0..count {
        let z: Vec<f64> = (0..KL_TERMS).map(|_| StandardNormal.sample(&mut rng)).collect();
        for j in 0..t.len() {
            values[(i, j)] = mean[j] + (0..KL_TERMS).map(|k| z[k] * basis[k][j]).sum::<f64>();
        }
    }
    FunctionalSample::new(values, grid, None)
}

/// Deterministic part of Models 13 to 21 and whether the per-curve shift is
/// `b ~ U(-1/2, 1/2)` rather than `a ~ U(-1/4, 1/4)`.
pub fn model_13_21_shape(id: u8, t: f64) -> Result<(f64, bool)> {
    let t3 = t.powi(3);
    let wave = |f: f64| (f * PI * t).sin() + (PI * t * t).cos();
    Ok(match id {
        13 => ((1.3 * t).sin() / 1.3 + t3 + 0.3, false),
        14 => ((1.3 * t).sin() / 1.2 + t3 + 1.0, false),
        15 => ((1.3 * t).sin() / 4.0 + t3 + 0.2, false),
        16 => (wave(1.5) + 1.1, true),
        17 => (wave(1.7) + 1.5, true),
        18 => (wave(1.9) + 2.2, true),
        19 => ((1.1 * t).exp() / 1.8 - t3, false),
        20 => ((1.4 * t).exp() / 1.7 - t3, false),
        21 => ((1.5 * t).exp() / 1.5 - t3, false),
        _ => return invalid(format!("model {id} is not in 13..=21")),
    })
}

/// How the `N(2, 0.4²)` term of Models 13 to 21 enters a curve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseMode {
    /// A fresh draw at every grid point.
    #[default]
    PerObservation,
    /// One draw per curve, added as a constant.
    PerCurve,
}

impl NoiseMode {
    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::PerObservation => "observation",
            NoiseMode::PerCurve => "curve",
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "observation" => Ok(NoiseMode::PerObservation),
            "curve" => Ok(NoiseMode::PerCurve),
            _ => invalid(format!("unknown noise mode `{s}`, expected `observation` or `curve`")),
        }
    }
}

pub fn gen_model_13_21(id: u8, count: usize, noise: NoiseMode, seed: u64) -> Result<FunctionalSample> {
    let grid = grid_13_21();
    let t = grid.points();
    let shape: Vec<f64> = t
        .iter()
        .map(|&s| model_13_21_shape(id, s).map(|v| v.0))
        .collect::<Result<_>>()?;
    let wide = model_13_21_shape(id, 0.0)?.1;
    let shift = if wide {
        Uniform::new(-0.5, 0.5)
    } else {
        Uniform::new(-0.25, 0.25)
    }
    .expect("valid range");
    let eps = Normal::new(2.0, 0.4).expect("valid normal");
    let mut rng = rng_from(seed);
    let mut values = DMatrix::zeros(count, t.len());
    for i in 0..count {
        let a = shift.sample(&mut rng);
        match noise {
            NoiseMode::PerCurve => {
                let c = a + eps.sample(&mut rng);
                for j in 0..t.len() {
                    values[(i, j)] = shape[j] + c;
                }
            }
            NoiseMode::PerObservation => {
                for j in 0..t.len() {
                    values[(i, j)] = shape[j] + a + eps.sample(&mut rng);
                }
            }
        }
    }
    FunctionalSample::new(values, grid, None)
}

/// Draws `count` curves of model `id`. `noise` only affects Models 13 to 21.
pub fn gen_model(id: u8, count: usize, noise: NoiseMode, seed: u64) -> Result<FunctionalSample> {
    match id {
        1..=9 => gen_model_1_9(id, count, seed),
        10..=12 => gen_model_10_12(id, count, seed),
        13..=21 => gen_model_13_21(id, count, noise, seed),
        _ => invalid(format!("unknown model {id}")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub models: Vec<u8>,
    pub per_group: usize,
    pub grid: Grid,
    #[serde(default)]
    pub noise: NoiseMode,
}

impl ScenarioSpec {
    pub const PER_GROUP: usize = 50;

    pub fn new(models: &[u8]) -> Result<Self> {
        let Some(&first) = models.first() else {
            return invalid("a scenario needs at least one model");
        };
        let family = |id: u8| match id {
            1..=9 => Some(0),
            10..=12 => Some(1),
            13..=21 => Some(2),
            _ => None,
        };
        let fam = family(first).ok_or_else(|| Error::InvalidArgument(format!("unknown model {first}")))?;
        if models.iter().any(|&m| family(m) != Some(fam)) {
            return invalid("all models of a scenario must share a grid");
        }
        let grid = match fam {
            0 => grid_1_9(),
            1 => grid_10_12(),
            _ => grid_13_21(),
        };
        let ids: Vec<String> = models.iter().map(|m| m.to_string()).collect();
        Ok(Self {
            name: format!("S {}", ids.join("-")),
            models: models.to_vec(),
            per_group: Self::PER_GROUP,
            grid,
            noise: NoiseMode::default(),
        })
    }

    /// The thirteen benchmark scenarios.
    pub fn catalog() -> Vec<ScenarioSpec> {
        let mut v: Vec<ScenarioSpec> = (2..=9).map(|i| Self::new(&[1, i]).unwrap()).collect();
        for m in [&[10u8, 11][..], &[10, 12], &[13, 14, 15], &[16, 17, 18], &[19, 20, 21]] {
            v.push(Self::new(m).unwrap());
        }
        v
    }

    /// Looks up a scenario by name, accepting `S 1-4`, `S1-4` or `1-4`.
    pub fn by_name(name: &str) -> Result<ScenarioSpec> {
        let key = name.trim().trim_start_matches(['S', 's']).trim();
        Self::catalog()
            .into_iter()
            .find(|s| s.name[2..] == *key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{name}`")))
    }
}

/// Labelled sample with `per_group` curves from each model in order.
pub fn gen_scenario(spec: &ScenarioSpec, seed: u64) -> Result<FunctionalSample> {
    let m = spec.grid.len();
    let n = spec.per_group * spec.models.len();
    let mut values = DMatrix::zeros(n, m);
    let mut labels = Vec::with_capacity(n);
    for (g, &id) in spec.models.iter().enumerate() {
        let part = gen_model(id, spec.per_group, spec.noise, derive_seed(seed, g as u64))?;
        if part.grid() != &spec.grid {
            return invalid(format!("model {id} does not match the scenario grid"));
        }
        for i in 0..spec.per_group {
            values.set_row(g * spec.per_group + i, &part.values().row(i));
            labels.push(g);
        }
    }
    FunctionalSample::new(values, spec.grid.clone(), Some(labels))
}
