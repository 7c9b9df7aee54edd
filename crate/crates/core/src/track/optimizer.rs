//! Box-constrained black-box minimization on the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gp::GaussianProcess;
use super::FAILURE_PENALTY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Turbo,
    EvolutionStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub strategy: Strategy,
    pub budget: usize,
    pub n_init: usize,
    pub batch: usize,
    pub length_init: f64,
    pub length_min: f64,
    pub length_max: f64,
    pub success_tol: usize,
    pub failure_tol: usize,
    pub n_candidates: usize,
    /// Largest training set handed to the surrogate.
    pub max_train: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Turbo,
            budget: 1000,
            n_init: 100,
            batch: 10,
            length_init: 0.8,
            length_min: 0.01,
            length_max: 1.6,
            success_tol: 3,
            failure_tol: 8,
            n_candidates: 1000,
            max_train: 512,
            seed: 2024,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.budget >= self.n_init && self.n_init >= 2) {
            return Err(format!("need budget ≥ initial design ≥ 2, got {} and {}", self.budget, self.n_init));
        }
        if self.batch == 0 || self.n_candidates == 0 || self.max_train < 2 {
            return Err("batch, candidate count and training cap must be positive".into());
        }
        if !(0.0 < self.length_min && self.length_min <= self.length_init && self.length_init <= self.length_max) {
            return Err("trust-region lengths must satisfy 0 < min ≤ init ≤ max".into());
        }
        if self.success_tol == 0 || self.failure_tol == 0 {
            return Err("success and failure counters must be positive".into());
        }
        Ok(())
    }
}

/// Every evaluated point in order, with its value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub xs: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub best_index: usize,
    pub restarts: usize,
}

impl OptimizationTrace {
    fn new() -> Self {
        Self {
            xs: Vec::new(),
            values: Vec::new(),
            best_index: 0,
            restarts: 0,
        }
    }

    fn push(&mut self, x: Vec<f64>, v: f64) {
        if self.values.is_empty() || v < self.values[self.best_index] {
            self.best_index = self.values.len();
        }
        self.xs.push(x);
        self.values.push(v);
    }

    pub fn best_value(&self) -> f64 {
        self.values[self.best_index]
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.values
            .iter()
            .map(|&v| {
                best = best.min(v);
                best
            })
            .collect()
    }
}

pub trait BlackBoxMinimizer {
    fn minimize(&self, objective: &(dyn Fn(&[f64]) -> f64 + Sync), dim: usize) -> OptimizationTrace;
}

pub fn minimize(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    dim: usize,
    config: &OptimizerConfig,
) -> OptimizationTrace {
    match config.strategy {
        Strategy::Turbo => TrustRegionBo(config.clone()).minimize(objective, dim),
        Strategy::EvolutionStrategy => EvolutionStrategy(config.clone()).minimize(objective, dim),
    }
}

fn evaluate_batch(objective: &(dyn Fn(&[f64]) -> f64 + Sync), xs: &[Vec<f64>]) -> Vec<f64> {
    xs.par_iter()
        .map(|x| {
            let v = objective(x);
            if v.is_finite() {
                v
            } else {
                FAILURE_PENALTY
            }
        })
        .collect()
}

fn scramble(seed: u64, salt: u64) -> u32 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) as u32
}

/// Owen-scrambled Sobol points in `[0, 1]^dim`.
fn sobol_points(n: usize, dim: usize, seed: u32) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| sobol_burley::sample(i as u32, d as u32 % sobol_burley::NUM_DIMENSIONS, seed.wrapping_add((d as u32) / sobol_burley::NUM_DIMENSIONS)) as f64)
                .collect()
        })
        .collect()
}

/// Trust-region Bayesian optimization with Thompson-sampled batches.
pub struct TrustRegionBo(pub OptimizerConfig);

impl TrustRegionBo {
    fn training_set(&self, xs: &[Vec<f64>], ys: &[f64], center: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let ok_max = ys.iter().copied().filter(|&v| v < FAILURE_PENALTY).fold(f64::NAN, f64::max);
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        if idx.len() > self.0.max_train {
            let d2 = |x: &[f64]| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            idx.sort_by(|&a, &b| d2(&xs[a]).total_cmp(&d2(&xs[b])));
            idx.truncate(self.0.max_train);
        }
        let tx = idx.iter().map(|&i| xs[i].clone()).collect();
        let ty = idx
            .iter()
            .map(|&i| {
                if ys[i] >= FAILURE_PENALTY && ok_max.is_finite() {
                    ok_max
                } else {
                    ys[i]
                }
            })
            .collect();
        (tx, ty)
    }

    fn candidates(&self, center: &[f64], length: f64, seed: u32, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let dim = center.len();
        let prob = (20.0 / dim as f64).min(1.0);
        let lo: Vec<f64> = center.iter().map(|c| (c - length / 2.0).max(0.0)).collect();
        let hi: Vec<f64> = center.iter().map(|c| (c + length / 2.0).min(1.0)).collect();
        sobol_points(self.0.n_candidates, dim, seed)
            .into_iter()
            .map(|s| {
                let mut mask: Vec<bool> = (0..dim).map(|_| rng.random::<f64>() < prob).collect();
                if !mask.iter().any(|&m| m) {
                    mask[rng.random_range(0..dim)] = true;
                }
                (0..dim)
                    .map(|d| if mask[d] { lo[d] + (hi[d] - lo[d]) * s[d] } else { center[d] })
                    .collect()
            })
            .collect()
    }
}

impl BlackBoxMinimizer for TrustRegionBo {
    fn minimize(&self, objective: &(dyn Fn(&[f64]) -> f64 + Sync), dim: usize) -> OptimizationTrace {
        let cfg = &self.0;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut trace = OptimizationTrace::new();
        let mut round = 0u64;
        while trace.xs.len() < cfg.budget {
            // Fresh trust region.
            let n0 = cfg.n_init.min(cfg.budget - trace.xs.len()).max(1);
            let init = sobol_points(n0, dim, scramble(cfg.seed, trace.restarts as u64));
            let vals = evaluate_batch(objective, &init);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (x, v) in init.into_iter().zip(vals) {
                trace.push(x.clone(), v);
                xs.push(x);
                ys.push(v);
            }
            let mut length = cfg.length_init;
            let (mut succ, mut fail) = (0, 0);
            while trace.xs.len() < cfg.budget && length >= cfg.length_min {
                round += 1;
                let best = (0..ys.len()).min_by(|&a, &b| ys[a].total_cmp(&ys[b])).unwrap();
                let best_y = ys[best];
                let center = xs[best].clone();
                let (tx, ty) = self.training_set(&xs, &ys, &center);
                let cands = self.candidates(&center, length, scramble(cfg.seed, 1_000_000 + round), &mut rng);
                let q = cfg.batch.min(cfg.budget - trace.xs.len());
                let picks: Vec<Vec<f64>> = match GaussianProcess::fit(&tx, &ty) {
                    Some(gp) => {
                        let noises: Vec<Vec<f64>> = (0..q)
                            .map(|_| (0..cands.len()).map(|_| rng.sample(StandardNormal)).collect())
                            .collect();
                        let mut taken = vec![false; cands.len()];
                        gp.sample_joint(&cands, &noises)
                            .into_iter()
                            .map(|draw| {
                                let i = (0..cands.len())
                                    .filter(|&i| !taken[i])
                                    .min_by(|&a, &b| draw[a].total_cmp(&draw[b]))
                                    .unwrap();
                                taken[i] = true;
                                cands[i].clone()
                            })
                            .collect()
                    }
                    None => cands.into_iter().take(q).collect(),
                };
                let vals = evaluate_batch(objective, &picks);
                let batch_best = vals.iter().copied().fold(f64::INFINITY, f64::min);
                if batch_best < best_y - 1e-3 * best_y.abs() {
                    succ += 1;
                    fail = 0;
                } else {
                    fail += 1;
                    succ = 0;
                }
                if succ == cfg.success_tol {
                    length = (2.0 * length).min(cfg.length_max);
                    succ = 0;
                } else if fail == cfg.failure_tol {
                    length /= 2.0;
                    fail = 0;
                }
                for (x, v) in picks.into_iter().zip(vals) {
                    trace.push(x.clone(), v);
                    xs.push(x);
                    ys.push(v);
                }
            }
            if trace.xs.len() < cfg.budget {
                trace.restarts += 1;
            }
        }
        trace
    }
}

/// `(μ/μ, λ)` evolution strategy with self-adapted global step size.
pub struct EvolutionStrategy(pub OptimizerConfig);

impl BlackBoxMinimizer for EvolutionStrategy {
    fn minimize(&self, objective: &(dyn Fn(&[f64]) -> f64 + Sync), dim: usize) -> OptimizationTrace {
        let cfg = &self.0;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut trace = OptimizationTrace::new();
        let lambda = cfg.batch.max(2);
        let mu = (lambda / 2).max(1);
        let tau = 1.0 / (2.0 * dim as f64).sqrt();
        let init = sobol_points(cfg.n_init.min(cfg.budget).max(1), dim, scramble(cfg.seed, 0));
        let vals = evaluate_batch(objective, &init);
        for (x, v) in init.into_iter().zip(vals) {
            trace.push(x, v);
        }
        let mut mean = trace.xs[trace.best_index].clone();
        let mut sigma = cfg.length_init / 4.0;
        while trace.xs.len() < cfg.budget {
            let q = lambda.min(cfg.budget - trace.xs.len());
            let offspring: Vec<(Vec<f64>, f64)> = (0..q)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    let s = sigma * (tau * z).exp();
                    let x = mean
                        .iter()
                        .map(|m| {
                            let n: f64 = rng.sample(StandardNormal);
                            (m + s * n).clamp(0.0, 1.0)
                        })
                        .collect();
                    (x, s)
                })
                .collect();
            let xs: Vec<Vec<f64>> = offspring.iter().map(|o| o.0.clone()).collect();
            let vals = evaluate_batch(objective, &xs);
            let mut order: Vec<usize> = (0..q).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            let parents = &order[..mu.min(q)];
            let k = parents.len() as f64;
            mean = (0..dim)
                .map(|d| parents.iter().map(|&i| offspring[i].0[d]).sum::<f64>() / k)
                .collect();
            sigma = (parents.iter().map(|&i| offspring[i].1.ln()).sum::<f64>() / k)
                .exp()
                .clamp(1e-6, 1.0);
            for (x, v) in xs.into_iter().zip(vals) {
                trace.push(x, v);
            }
        }
        trace
    }
}
