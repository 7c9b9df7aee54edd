//! Isotropic Matérn-5/2 Gaussian process on the unit cube.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpFit {
    pub lengthscale: f64,
    pub noise: f64,
    pub log_marginal_likelihood: f64,
}

/// Posterior over standardized targets; the prior variance is 1.
pub struct GaussianProcess {
    xs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    mean: f64,
    scale: f64,
    pub fit: GpFit,
}

const LENGTHSCALES: [f64; 9] = [0.05, 0.08, 0.12, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0];
const NOISE: f64 = 1e-6;

fn gram(xs: &[Vec<f64>], ls: f64, noise: f64) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| {
        matern52(dist(&xs[i], &xs[j]) / ls) + if i == j { noise } else { 0.0 }
    })
}

impl GaussianProcess {
    /// Fits by picking the lengthscale on a fixed grid with the best marginal likelihood.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> Option<Self> {
        let n = ys.len();
        if n == 0 {
            return None;
        }
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let z = DVector::from_iterator(n, ys.iter().map(|y| (y - mean) / scale));
        let mut best: Option<Self> = None;
        for &ls in &LENGTHSCALES {
            let mut noise = NOISE;
            let chol = loop {
                if let Some(c) = Cholesky::new(gram(xs, ls, noise)) {
                    break Some(c);
                }
                noise *= 10.0;
                if noise > 1e-1 {
                    break None;
                }
            };
            let Some(chol) = chol else { continue };
            let alpha = chol.solve(&z);
            let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            let lml = -0.5 * z.dot(&alpha) - 0.5 * log_det;
            if best.as_ref().is_none_or(|b| lml > b.fit.log_marginal_likelihood) {
                best = Some(Self {
                    xs: xs.to_vec(),
                    chol,
                    alpha,
                    mean,
                    scale,
                    fit: GpFit {
                        lengthscale: ls,
                        noise,
                        log_marginal_likelihood: lml,
                    },
                });
            }
        }
        best
    }

    fn cross(&self, cands: &[Vec<f64>]) -> DMatrix<f64> {
        let ls = self.fit.lengthscale;
        DMatrix::from_fn(self.xs.len(), cands.len(), |i, j| matern52(dist(&self.xs[i], &cands[j]) / ls))
    }

    /// Posterior mean in original units.
    pub fn predict_mean(&self, cands: &[Vec<f64>]) -> Vec<f64> {
        let k = self.cross(cands);
        (k.transpose() * &self.alpha)
            .iter()
            .map(|m| self.mean + self.scale * m)
            .collect()
    }

    /// Joint posterior draws at `cands`, one per standard normal vector in `noises`.
    pub fn sample_joint(&self, cands: &[Vec<f64>], noises: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = cands.len();
        let k = self.cross(cands);
        let mu = k.transpose() * &self.alpha;
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular factor is invertible");
        let ls = self.fit.lengthscale;
        let mut cov = DMatrix::from_fn(m, m, |i, j| matern52(dist(&cands[i], &cands[j]) / ls));
        cov -= v.transpose() * v;
        let mut jitter = 1e-8;
        let l = loop {
            let mut c = cov.clone();
            for i in 0..m {
                c[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::new(c) {
                break ch.unpack();
            }
            jitter *= 10.0;
            if jitter > 1.0 {
                // Fall back to independent marginals.
                let mut d = DMatrix::zeros(m, m);
                for i in 0..m {
                    d[(i, i)] = cov[(i, i)].max(0.0).sqrt();
                }
                break d;
            }
        };
        noises
            .iter()
            .map(|z| {
                let draw = &mu + &l * DVector::from_column_slice(z);
                draw.iter().map(|s| self.mean + self.scale * s).collect()
            })
            .collect()
    }
}
