//! Time integration of the controlled swimmer and dense trajectory output.

use serde::{Deserialize, Serialize};

use crate::dynamics::{rhs, DynamicsError};
use crate::linalg::DenseMatrix;
use crate::model::{PlanarState, SwimmerParams};
use crate::real::Real;

/// A time-parameterized control pair `(u1(t), u2(t))`.
pub trait Control<T>: Sync {
    fn at(&self, t: T) -> [T; 2];
}

impl<T, F> Control<T> for F
where
    F: Fn(T) -> [T; 2] + Sync,
{
    fn at(&self, t: T) -> [T; 2] {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroControl;

impl<T: Real> Control<T> for ZeroControl {
    fn at(&self, _t: T) -> [T; 2] {
        [T::zero(), T::zero()]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantControl<T>(pub [T; 2]);

impl<T: Real> Control<T> for ConstantControl<T> {
    fn at(&self, _t: T) -> [T; 2] {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-8,
            rel: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn uniform(tol: f64) -> Self {
        Self { abs: tol, rel: tol }
    }
}

/// Step scheme used by [`integrate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Explicit Dormand–Prince 5(4).
    #[default]
    Rk45,
    /// Linearly implicit Rodas4 for stiff regimes (strong fields).
    Rodas4,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions<T> {
    pub method: Method,
    pub tol: Tolerance,
    /// Extra grid nodes inserted into the output (must lie in `[0, T]`).
    pub sample_times: Vec<T>,
    pub max_steps: usize,
}

impl<T> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            tol: Tolerance::default(),
            sample_times: Vec::new(),
            max_steps: 2_000_000,
        }
    }
}

impl<T> IntegrateOptions<T> {
    pub fn with_tol(tol: Tolerance) -> Self {
        Self {
            tol,
            ..Default::default()
        }
    }

    pub fn stiff(tol: Tolerance) -> Self {
        Self {
            method: Method::Rodas4,
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("horizon must be positive and finite")]
    InvalidHorizon,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("dynamics failed at t = {t}: {source}")]
    Dynamics { t: f64, source: DynamicsError },
    #[error("sample time {t} outside [0, {end}]")]
    OutOfRange { t: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Solution on a strictly increasing grid with node derivatives for cubic Hermite sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub derivatives: Vec<Vec<T>>,
    pub controls: Vec<[T; 2]>,
    pub stats: StepStats,
}

impl<T: Real> Trajectory<T> {
    /// Assembles a trajectory from node data (used for synthetic references too).
    pub fn from_nodes(
        times: Vec<T>,
        states: Vec<Vec<T>>,
        derivatives: Vec<Vec<T>>,
        controls: Vec<[T; 2]>,
    ) -> Self {
        assert!(times.len() >= 2);
        assert_eq!(times.len(), states.len());
        assert_eq!(times.len(), derivatives.len());
        assert_eq!(times.len(), controls.len());
        Self {
            times,
            states,
            derivatives,
            controls,
            stats: StepStats::default(),
        }
    }

    pub fn horizon(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[T] {
        self.states.last().unwrap()
    }

    pub fn state(&self, k: usize) -> PlanarState<T> {
        PlanarState::from_slice(&self.states[k])
    }

    /// Cubic Hermite interpolation; exact at grid nodes.
    pub fn sample(&self, t: T) -> Result<Vec<T>, IntegrationError> {
        let t0 = self.times[0];
        let t1 = self.horizon();
        if !(t >= t0 && t <= t1) {
            return Err(IntegrationError::OutOfRange {
                t: t.to_f64_lossy(),
                end: t1.to_f64_lossy(),
            });
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k > 0 && self.times[k - 1] == t {
            return Ok(self.states[k - 1].clone());
        }
        let k = k.clamp(1, self.times.len() - 1);
        Ok(hermite(
            self.times[k - 1],
            &self.states[k - 1],
            &self.derivatives[k - 1],
            self.times[k],
            &self.states[k],
            &self.derivatives[k],
            t,
        ))
    }
}

fn hermite<T: Real>(ta: T, ya: &[T], da: &[T], tb: T, yb: &[T], db: &[T], t: T) -> Vec<T> {
    let h = tb - ta;
    let s = (t - ta) / h;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    (0..ya.len())
        .map(|i| h00 * ya[i] + h10 * h * da[i] + h01 * yb[i] + h11 * h * db[i])
        .collect()
}

fn hermite_derivative<T: Real>(ta: T, ya: &[T], da: &[T], tb: T, yb: &[T], db: &[T], t: T) -> Vec<T> {
    let h = tb - ta;
    let s = (t - ta) / h;
    let six = T::lit(6.0);
    let s2 = s * s;
    let g00 = (six * s2 - six * s) / h;
    let g10 = T::lit(3.0) * s2 - T::lit(4.0) * s + T::one();
    let g01 = -g00;
    let g11 = T::lit(3.0) * s2 - T::lit(2.0) * s;
    (0..ya.len())
        .map(|i| g00 * ya[i] + g10 * da[i] + g01 * yb[i] + g11 * db[i])
        .collect()
}

mod tableau {
    pub const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    pub const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    /// Fifth-order weights minus embedded fourth-order weights.
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
}

/// Adaptive Dormand–Prince 5(4) integration of `y' = f(t, y)` on `[0, horizon]`.
///
/// Returned controls are all zero; callers attach their own.
pub fn dopri5<T, F>(
    mut f: F,
    y0: &[T],
    horizon: T,
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>, IntegrationError>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>, DynamicsError>,
{
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(IntegrationError::InvalidHorizon);
    }
    let n = y0.len();
    let atol = T::lit(opts.tol.abs);
    let rtol = T::lit(opts.tol.rel);
    let mut stats = StepStats::default();
    let mut call = |t: T, y: &[T], stats: &mut StepStats| {
        stats.evaluations += 1;
        f(t, y).map_err(|source| IntegrationError::Dynamics {
            t: t.to_f64_lossy(),
            source,
        })
    };

    let mut samples: Vec<T> = opts
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > T::zero() && s < horizon)
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup();
    let mut next_sample = 0;

    let mut t = T::zero();
    let mut y = y0.to_vec();
    let mut dy = call(t, &y, &mut stats)?;
    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut derivs = vec![dy.clone()];

    let scale_of = |y: &[T], z: &[T]| -> Vec<T> {
        (0..n).map(|i| atol + rtol * y[i].abs().max(z[i].abs())).collect()
    };
    let rms = |v: &[T], sc: &[T]| -> T {
        let s = (0..n).fold(T::zero(), |acc, i| acc + (v[i] / sc[i]).powi(2));
        (s / T::lit(n as f64)).sqrt()
    };

    // Initial step heuristic (Hairer, Nørsett & Wanner II.4).
    let mut h = {
        let sc = scale_of(&y, &y);
        let d0 = rms(&y, &sc);
        let d1 = rms(&dy, &sc);
        let h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        let h0 = h0.min(horizon);
        let y1: Vec<T> = (0..n).map(|i| y[i] + h0 * dy[i]).collect();
        let dy1 = call(h0, &y1, &mut stats)?;
        let diff: Vec<T> = (0..n).map(|i| dy1[i] - dy[i]).collect();
        let d2 = rms(&diff, &sc) / h0;
        let h1 = if d1.max(d2) <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
        };
        (T::lit(100.0) * h0).min(h1).min(horizon)
    };

    let safety = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(5.0);
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut last_rejected = false;
    let a: Vec<Vec<T>> = tableau::A.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
    let c: Vec<T> = tableau::C.iter().map(|&v| T::lit(v)).collect();
    let e: Vec<T> = tableau::E.iter().map(|&v| T::lit(v)).collect();

    while t < horizon {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegrationError::TooManySteps { t: t.to_f64_lossy() });
        }
        let remaining = horizon - t;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if !(h > T::lit(16.0) * T::epsilon() * t.abs()) {
            return Err(IntegrationError::StepUnderflow { t: t.to_f64_lossy() });
        }
        k[0].copy_from_slice(&dy);
        let mut ystage = vec![T::zero(); n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += h * a[s][j] * k[j][i];
                }
                ystage[i] = acc;
            }
            let ts = if last && s >= 5 { horizon } else { t + c[s] * h };
            k[s] = call(ts, &ystage, &mut stats)?;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let y_new = ystage;
        let err: Vec<T> = (0..n)
            .map(|i| h * (0..7).fold(T::zero(), |acc, j| acc + e[j] * k[j][i]))
            .collect();
        let sc = scale_of(&y, &y_new);
        let err_norm = rms(&err, &sc);
        if !err_norm.is_finite() && y_new.iter().any(|v| !v.is_finite()) {
            return Err(IntegrationError::NonFinite { t: t.to_f64_lossy() });
        }
        if err_norm <= T::one() {
            let t_new = if last { horizon } else { t + h };
            let dy_new = k[6].clone();
            while next_sample < samples.len() && samples[next_sample] < t_new {
                let ts = samples[next_sample];
                if ts > t {
                    times.push(ts);
                    states.push(hermite(t, &y, &dy, t_new, &y_new, &dy_new, ts));
                    derivs.push(hermite_derivative(t, &y, &dy, t_new, &y_new, &dy_new, ts));
                }
                next_sample += 1;
            }
            t = t_new;
            y = y_new;
            dy = dy_new;
            times.push(t);
            states.push(y.clone());
            derivs.push(dy.clone());
            stats.accepted += 1;
            let mut fac = if err_norm == T::zero() {
                fac_max
            } else {
                (safety * err_norm.powf(T::lit(-0.2))).min(fac_max).max(fac_min)
            };
            if last_rejected {
                fac = fac.min(T::one());
            }
            h = h * fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err_norm.is_finite() {
                (safety * err_norm.powf(T::lit(-0.2))).max(fac_min)
            } else {
                fac_min
            };
            h = h * fac;
            last_rejected = true;
        }
    }
    let controls = vec![[T::zero(); 2]; times.len()];
    Ok(Trajectory {
        times,
        states,
        derivatives: derivs,
        controls,
        stats,
    })
}

mod rodas {
    pub const GAMMA: f64 = 0.25;
    pub const C: [f64; 3] = [0.386, 0.21, 0.63];
    pub const D: [f64; 4] = [0.25, -0.1043, 0.1035, -0.3620000000000023e-01];
    pub const A: [[f64; 4]; 4] = [
        [1.544, 0.0, 0.0, 0.0],
        [0.9466785280815826, 0.2557011698983284, 0.0, 0.0],
        [3.314825187068521, 2.896124015972201, 0.9986419139977817, 0.0],
        [1.221224509226641, 6.019134481288629, 12.53708332932087, -0.6878860361058950],
    ];
    pub const G: [[f64; 5]; 5] = [
        [-5.6688, 0.0, 0.0, 0.0, 0.0],
        [-2.430093356833875, -0.2063599157091915, 0.0, 0.0, 0.0],
        [-0.1073529058151375, -9.594562251023355, -20.47028614809616, 0.0, 0.0],
        [7.496443313967647, -10.24680431464352, -33.99990352819905, 11.70890893206160, 0.0],
        [8.083246795921522, -7.981132988064893, -31.52159432874371, 16.31930543123136, -6.058818238834054],
    ];
}

/// Adaptive Rodas4 (Hairer & Wanner) with a finite-difference Jacobian.
///
/// Same contract as [`dopri5`]; suited to the strongly damped head alignment under large fields.
pub fn rodas4<T, F>(
    mut f: F,
    y0: &[T],
    horizon: T,
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>, IntegrationError>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>, DynamicsError>,
{
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(IntegrationError::InvalidHorizon);
    }
    let n = y0.len();
    let atol = T::lit(opts.tol.abs);
    let rtol = T::lit(opts.tol.rel);
    let mut stats = StepStats::default();
    let mut call = |t: T, y: &[T], stats: &mut StepStats| {
        stats.evaluations += 1;
        f(t, y).map_err(|source| IntegrationError::Dynamics {
            t: t.to_f64_lossy(),
            source,
        })
    };
    let lit = |v: f64| T::lit(v);
    let gamma = lit(rodas::GAMMA);

    let mut samples: Vec<T> = opts
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > T::zero() && s < horizon)
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup();
    let mut next_sample = 0;

    let mut t = T::zero();
    let mut y = y0.to_vec();
    let mut dy = call(t, &y, &mut stats)?;
    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut derivs = vec![dy.clone()];

    let sqrt_eps = T::epsilon().sqrt();
    let mut h = (lit(1e-4) * horizon).max(lit(1e-12));
    let mut last_rejected = false;
    let mut jac = DenseMatrix::zeros(n, n);
    let mut dfdt = vec![T::zero(); n];
    let mut jac_fresh = false;

    while t < horizon {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegrationError::TooManySteps { t: t.to_f64_lossy() });
        }
        if !jac_fresh {
            // Forward differences, one column per state coordinate.
            let mut yp = y.clone();
            for j in 0..n {
                let delta = sqrt_eps * y[j].abs().max(T::one());
                yp[j] = y[j] + delta;
                let fj = call(t, &yp, &mut stats)?;
                yp[j] = y[j];
                for i in 0..n {
                    jac[(i, j)] = (fj[i] - dy[i]) / delta;
                }
            }
            let dt = sqrt_eps * t.abs().max(lit(1e-5) * horizon.max(T::one()));
            let ft = call(t + dt, &y, &mut stats)?;
            for i in 0..n {
                dfdt[i] = (ft[i] - dy[i]) / dt;
            }
            jac_fresh = true;
        }
        let remaining = horizon - t;
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if !(h > T::lit(16.0) * T::epsilon() * t.abs()) {
            return Err(IntegrationError::StepUnderflow { t: t.to_f64_lossy() });
        }
        let mut e = DenseMatrix::zeros(n, n);
        let diag = T::one() / (h * gamma);
        for i in 0..n {
            for j in 0..n {
                e[(i, j)] = -jac[(i, j)];
            }
            e[(i, i)] += diag;
        }
        let lu = match e.lu() {
            Ok(lu) => lu,
            Err(_) => {
                stats.rejected += 1;
                h = h * lit(0.5);
                last_rejected = true;
                continue;
            }
        };
        let mut k: Vec<Vec<T>> = Vec::with_capacity(6);
        let stage_rhs = |base: Vec<T>, row: usize, k: &[Vec<T>], d: Option<T>| -> Vec<T> {
            let mut b = base;
            for (j, kj) in k.iter().enumerate() {
                let c = lit(rodas::G[row][j]) / h;
                for i in 0..n {
                    b[i] += c * kj[i];
                }
            }
            if let Some(d) = d {
                for i in 0..n {
                    b[i] += h * d * dfdt[i];
                }
            }
            b
        };
        let mut b1 = dy.clone();
        for i in 0..n {
            b1[i] += h * lit(rodas::D[0]) * dfdt[i];
        }
        k.push(lu.solve(&b1));
        let mut failed = None;
        for s in 1..6 {
            let mut ys = y.clone();
            let coeffs: &[f64] = if s <= 4 { &rodas::A[s - 1] } else { &[] };
            for (j, &a) in coeffs.iter().enumerate().take(s) {
                for i in 0..n {
                    ys[i] += lit(a) * k[j][i];
                }
            }
            if s == 5 {
                // Embedded solution: stage-4 combination plus k5.
                for (j, &a) in rodas::A[3].iter().enumerate() {
                    for i in 0..n {
                        ys[i] += lit(a) * k[j][i];
                    }
                }
                for i in 0..n {
                    ys[i] += k[4][i];
                }
            }
            let ts = match (s >= 4, last) {
                (true, true) => horizon,
                (true, false) => t + h,
                _ => t + lit(rodas::C[s - 1]) * h,
            };
            let fs = match call(ts, &ys, &mut stats) {
                Ok(v) => v,
                Err(err) => {
                    failed = Some(err);
                    break;
                }
            };
            let d = (s <= 3).then(|| lit(rodas::D[s]));
            k.push(lu.solve(&stage_rhs(fs, s - 1, &k, d)));
        }
        if let Some(err) = failed {
            if let IntegrationError::Dynamics { .. } = err {
                stats.rejected += 1;
                h = h * lit(0.25);
                last_rejected = true;
                continue;
            }
            return Err(err);
        }
        let y_new: Vec<T> = (0..n)
            .map(|i| {
                let base = y[i] + (0..4).fold(T::zero(), |acc, j| acc + lit(rodas::A[3][j]) * k[j][i]);
                base + k[4][i] + k[5][i]
            })
            .collect();
        let err_norm = {
            let s = (0..n).fold(T::zero(), |acc, i| {
                let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                acc + (k[5][i] / sc).powi(2)
            });
            (s / lit(n as f64)).sqrt()
        };
        let fac = if err_norm.is_finite() {
            (err_norm.powf(lit(0.25)) / lit(0.9)).max(lit(1.0 / 6.0)).min(lit(5.0))
        } else {
            lit(5.0)
        };
        if err_norm <= T::one() && y_new.iter().all(|v| v.is_finite()) {
            let t_new = if last { horizon } else { t + h };
            let dy_new = call(t_new, &y_new, &mut stats)?;
            while next_sample < samples.len() && samples[next_sample] < t_new {
                let ts = samples[next_sample];
                if ts > t {
                    times.push(ts);
                    states.push(hermite(t, &y, &dy, t_new, &y_new, &dy_new, ts));
                    derivs.push(hermite_derivative(t, &y, &dy, t_new, &y_new, &dy_new, ts));
                }
                next_sample += 1;
            }
            t = t_new;
            y = y_new;
            dy = dy_new;
            times.push(t);
            states.push(y.clone());
            derivs.push(dy.clone());
            stats.accepted += 1;
            jac_fresh = false;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h = h / fac.max(T::one() + T::epsilon());
            last_rejected = true;
        }
    }
    let controls = vec![[T::zero(); 2]; times.len()];
    Ok(Trajectory {
        times,
        states,
        derivatives: derivs,
        controls,
        stats,
    })
}

/// Classical fixed-step RK4 on `[0, horizon]` with `steps` equal steps.
pub fn rk4<T, F>(mut f: F, y0: &[T], horizon: T, steps: usize) -> Result<Trajectory<T>, IntegrationError>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>, DynamicsError>,
{
    if !(horizon > T::zero()) || steps == 0 {
        return Err(IntegrationError::InvalidHorizon);
    }
    let n = y0.len();
    let h = horizon / T::lit(steps as f64);
    let half = T::lit(0.5);
    let mut stats = StepStats::default();
    let mut call = |t: T, y: &[T], stats: &mut StepStats| {
        stats.evaluations += 1;
        f(t, y).map_err(|source| IntegrationError::Dynamics {
            t: t.to_f64_lossy(),
            source,
        })
    };
    let mut y = y0.to_vec();
    let mut dy = call(T::zero(), &y, &mut stats)?;
    let mut times = vec![T::zero()];
    let mut states = vec![y.clone()];
    let mut derivs = vec![dy.clone()];
    let shifted = |y: &[T], k: &[T], c: T| -> Vec<T> { (0..n).map(|i| y[i] + c * k[i]).collect() };
    for step in 0..steps {
        let t = h * T::lit(step as f64);
        let k1 = dy;
        let k2 = call(t + half * h, &shifted(&y, &k1, half * h), &mut stats)?;
        let k3 = call(t + half * h, &shifted(&y, &k2, half * h), &mut stats)?;
        let k4 = call(t + h, &shifted(&y, &k3, h), &mut stats)?;
        let sixth = h / T::lit(6.0);
        for i in 0..n {
            y[i] += sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        let t_new = if step + 1 == steps { horizon } else { t + h };
        dy = call(t_new, &y, &mut stats)?;
        times.push(t_new);
        states.push(y.clone());
        derivs.push(dy.clone());
        stats.accepted += 1;
    }
    let controls = vec![[T::zero(); 2]; times.len()];
    Ok(Trajectory {
        times,
        states,
        derivatives: derivs,
        controls,
        stats,
    })
}

fn attach_controls<T: Real, C: Control<T> + ?Sized>(mut traj: Trajectory<T>, control: &C) -> Trajectory<T> {
    traj.controls = traj.times.iter().map(|&t| control.at(t)).collect();
    traj
}

/// Integrates the swimmer from `p0` over `[0, horizon]` with adaptive RK45.
pub fn integrate<T: Real, C: Control<T> + ?Sized>(
    params: &SwimmerParams<T>,
    control: &C,
    p0: &[T],
    horizon: T,
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T>, IntegrationError> {
    let f = |t: T, y: &[T]| rhs(params, y, control.at(t));
    let traj = match opts.method {
        Method::Rk45 => dopri5(f, p0, horizon, opts)?,
        Method::Rodas4 => rodas4(f, p0, horizon, opts)?,
    };
    Ok(attach_controls(traj, control))
}

/// Integrates the swimmer with fixed-step RK4.
pub fn integrate_fixed<T: Real, C: Control<T> + ?Sized>(
    params: &SwimmerParams<T>,
    control: &C,
    p0: &[T],
    horizon: T,
    steps: usize,
) -> Result<Trajectory<T>, IntegrationError> {
    let traj = rk4(|t, y| rhs(params, y, control.at(t)), p0, horizon, steps)?;
    Ok(attach_controls(traj, control))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let traj = dopri5(
            |_, y: &[f64]| Ok(vec![-y[0], -2.0 * y[1]]),
            &[1.0, 1.0],
            2.0,
            &IntegrateOptions::with_tol(Tolerance::uniform(1e-10)),
        )
        .unwrap();
        let yf = traj.final_state();
        assert!((yf[0] - (-2.0f64).exp()).abs() < 1e-9);
        assert!((yf[1] - (-4.0f64).exp()).abs() < 1e-9);
        assert_eq!(*traj.times.last().unwrap(), 2.0);
    }

    #[test]
    fn samples_are_grid_nodes() {
        let opts = IntegrateOptions {
            sample_times: vec![0.25, 0.5, 1.5],
            ..Default::default()
        };
        let traj = dopri5(|_, y: &[f64]| Ok(vec![y[0].cos()]), &[0.0], 2.0, &opts).unwrap();
        for s in [0.25, 0.5, 1.5] {
            assert!(traj.times.contains(&s));
        }
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rodas_handles_stiff_forcing() {
        // y' = λ(y − sin t) + cos t has the smooth solution sin t.
        let lam = -1e6;
        let traj = rodas4(
            |t: f64, y: &[f64]| Ok(vec![lam * (y[0] - t.sin()) + t.cos()]),
            &[0.0],
            1.0,
            &IntegrateOptions::stiff(Tolerance::uniform(1e-9)),
        )
        .unwrap();
        assert!((traj.final_state()[0] - 1f64.sin()).abs() < 1e-8);
        assert!(traj.stats.accepted < 500, "{:?}", traj.stats);
    }

    #[test]
    fn rodas_matches_dopri() {
        let f = |t: f64, y: &[f64]| Ok(vec![-y[0] * y[0] + t.cos() * y[0], y[0] - y[1] * t.sin()]);
        let tight = IntegrateOptions::with_tol(Tolerance::uniform(1e-12));
        let a = dopri5(f, &[1.0, 0.5], 2.0, &tight).unwrap();
        let b = rodas4(f, &[1.0, 0.5], 2.0, &IntegrateOptions::stiff(Tolerance::uniform(1e-10))).unwrap();
        for i in 0..2 {
            assert!((a.final_state()[i] - b.final_state()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let exact = (1.0f64).exp();
        let e1 = (rk4(|_, y: &[f64]| Ok(vec![y[0]]), &[1.0], 1.0, 10).unwrap().final_state()[0] - exact).abs();
        let e2 = (rk4(|_, y: &[f64]| Ok(vec![y[0]]), &[1.0], 1.0, 20).unwrap().final_state()[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}
