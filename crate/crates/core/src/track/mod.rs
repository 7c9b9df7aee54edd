//! Trajectory tracking: elliptical references, the tracking cost, the sinusoidal baseline and
//! spline-parameterized controls optimized by a trust-region surrogate search.

mod gp;
mod optimizer;

pub use gp::{GaussianProcess, GpFit};
pub use optimizer::{
    minimize, BlackBoxMinimizer, EvolutionStrategy, OptimizationTrace, OptimizerConfig, Strategy,
    TrustRegionBo,
};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::integrate::{integrate, Control, IntegrateOptions, IntegrationError, Method, Tolerance, Trajectory};
use crate::model::SwimmerParams;
use crate::splines::{BSplineCurve, SplineError};

/// Cost assigned to candidates whose simulation fails.
pub const FAILURE_PENALTY: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("arc length {arc_length} is not below the ellipse circumference {circumference}")]
    ArcTooLong { arc_length: f64, circumference: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("trajectory horizon {trajectory} differs from reference horizon {reference}")]
    HorizonMismatch { trajectory: f64, reference: f64 },
    #[error("reference has zero speed at t = {t}")]
    DegenerateTangent { t: f64 },
    #[error("expected {expected} control points, got {got}")]
    ControlCount { expected: usize, got: usize },
    #[error("invalid tracking setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// A planar path parameterized by time on `[0, horizon]`.
pub trait ReferencePath: Sync {
    fn horizon(&self) -> f64;
    fn position(&self, t: f64) -> [f64; 2];
    fn velocity(&self, t: f64) -> [f64; 2];
}

/// `p(t) = (a + a cos φ, b sin φ)` with `φ = π − s_end·t/T`: starts at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseReference {
    pub a: f64,
    pub b: f64,
    pub s_end: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub arc_length: f64,
}

/// Arc length of the ellipse between parameters 0 and `s`.
pub fn ellipse_arc_length(a: f64, b: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    quadrature::double_exponential::integrate(
        |u| (a * a * u.sin().powi(2) + b * b * u.cos().powi(2)).sqrt(),
        0.0,
        s,
        1e-12,
    )
    .integral
}

/// Builds the reference whose segment has the requested arc length; `s_end` by bisection.
pub fn ellipse_reference(a: f64, b: f64, arc_length: f64, horizon: f64) -> Result<EllipseReference, TrackError> {
    for (name, v) in [("a", a), ("b", b), ("arc length", arc_length), ("T", horizon)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(TrackError::NotPositive(name));
        }
    }
    let circumference = ellipse_arc_length(a, b, 2.0 * PI);
    if arc_length >= circumference {
        return Err(TrackError::ArcTooLong {
            arc_length,
            circumference,
        });
    }
    let (mut lo, mut hi) = (0.0, 2.0 * PI);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ellipse_arc_length(a, b, mid) < arc_length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EllipseReference {
        a,
        b,
        s_end: 0.5 * (lo + hi),
        horizon,
        arc_length,
    })
}

impl EllipseReference {
    fn phase(&self, t: f64) -> f64 {
        PI - self.s_end * t / self.horizon
    }

    /// Full reference state: `(x, y)` on the ellipse, all angles zero.
    pub fn reference_state(&self, t: f64, n_links: usize) -> Result<Vec<f64>, TrackError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(TrackError::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let mut s = vec![0.0; n_links + 3];
        let p = self.position(t);
        s[0] = p[0];
        s[1] = p[1];
        Ok(s)
    }
}

impl ReferencePath for EllipseReference {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn position(&self, t: f64) -> [f64; 2] {
        let ph = self.phase(t);
        [self.a + self.a * ph.cos(), self.b * ph.sin()]
    }

    fn velocity(&self, t: f64) -> [f64; 2] {
        let ph = self.phase(t);
        let rate = -self.s_end / self.horizon;
        [-self.a * ph.sin() * rate, self.b * ph.cos() * rate]
    }
}

/// Diagonal weights of the running and terminal tracking penalties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub q_diag: Vec<f64>,
    pub s_diag: Vec<f64>,
}

impl CostWeights {
    /// `Q = 1e9·diag(1, 1, 0, …)`, `S = 1e4·diag(1, 1, 0, …)`.
    pub fn position_only(n_links: usize) -> Self {
        let mut q = vec![0.0; n_links + 3];
        let mut s = vec![0.0; n_links + 3];
        q[0] = 1e9;
        q[1] = 1e9;
        s[0] = 1e4;
        s[1] = 1e4;
        Self { q_diag: q, s_diag: s }
    }
}

fn weighted_sq(w: &[f64], p: &[f64], r: &[f64]) -> f64 {
    w.iter()
        .zip(p.iter().zip(r))
        .map(|(w, (a, b))| w * (a - b) * (a - b))
        .sum()
}

/// Number of uniform nodes of the running-cost trapezoid rule.
pub const COST_GRID: usize = 2000;

/// `∫‖p − p_ref‖²_Q dt + ‖p(T) − p_ref(T)‖²_S` with the trapezoid rule on `n_grid` nodes.
pub fn tracking_cost_on_grid<R: ReferencePath + ?Sized>(
    traj: &Trajectory<f64>,
    reference: &R,
    weights: &CostWeights,
    n_grid: usize,
) -> Result<f64, TrackError> {
    let horizon = reference.horizon();
    let end = traj.horizon();
    if (end - horizon).abs() > 1e-12 * horizon {
        return Err(TrackError::HorizonMismatch {
            trajectory: end,
            reference: horizon,
        });
    }
    let n = traj.states[0].len();
    let reference_at = |t: f64| {
        let mut r = vec![0.0; n];
        let p = reference.position(t);
        r[0] = p[0];
        r[1] = p[1];
        r
    };
    let dt = horizon / (n_grid - 1) as f64;
    let mut running = 0.0;
    for k in 0..n_grid {
        let t = if k + 1 == n_grid { end } else { k as f64 * dt };
        let p = traj.sample(t)?;
        let w = if k == 0 || k + 1 == n_grid { 0.5 } else { 1.0 };
        running += w * weighted_sq(&weights.q_diag, &p, &reference_at(t));
    }
    let terminal = weighted_sq(&weights.s_diag, traj.final_state(), &reference_at(horizon));
    Ok(running * dt + terminal)
}

pub fn tracking_cost<R: ReferencePath + ?Sized>(
    traj: &Trajectory<f64>,
    reference: &R,
    weights: &CostWeights,
) -> Result<f64, TrackError> {
    tracking_cost_on_grid(traj, reference, weights, COST_GRID)
}

/// `B(t) = A·[t̂(t) + sin(2π f t)·n̂(t)]` in the reference's moving frame.
#[derive(Debug, Clone, Copy)]
pub struct TangentSinusoid<R> {
    pub reference: R,
    pub amplitude: f64,
    pub freq_hz: f64,
}

pub fn baseline_sinusoidal<R: ReferencePath>(
    reference: R,
    amplitude: f64,
    freq_hz: f64,
) -> Result<TangentSinusoid<R>, TrackError> {
    if !(amplitude > 0.0) {
        return Err(TrackError::NotPositive("amplitude"));
    }
    let horizon = reference.horizon();
    for k in 0..=100 {
        let t = horizon * k as f64 / 100.0;
        let v = reference.velocity(t);
        if v[0].hypot(v[1]) == 0.0 {
            return Err(TrackError::DegenerateTangent { t });
        }
    }
    Ok(TangentSinusoid {
        reference,
        amplitude,
        freq_hz,
    })
}

impl<R: ReferencePath> Control<f64> for TangentSinusoid<R> {
    fn at(&self, t: f64) -> [f64; 2] {
        let t_ref = t.clamp(0.0, self.reference.horizon());
        let v = self.reference.velocity(t_ref);
        let speed = v[0].hypot(v[1]);
        let tan = [v[0] / speed, v[1] / speed];
        let nor = [-tan[1], tan[0]];
        let s = (2.0 * PI * self.freq_hz * t).sin();
        [
            self.amplitude * (tan[0] + s * nor[0]),
            self.amplitude * (tan[1] + s * nor[1]),
        ]
    }
}

/// Two independent scalar splines, one per field component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineControl {
    pub u1: BSplineCurve<f64>,
    pub u2: BSplineCurve<f64>,
}

impl SplineControl {
    pub fn clamped_uniform(u1: Vec<f64>, u2: Vec<f64>, degree: usize, horizon: f64) -> Result<Self, TrackError> {
        Ok(Self {
            u1: BSplineCurve::clamped_uniform(u1, degree, 0.0, horizon)?,
            u2: BSplineCurve::clamped_uniform(u2, degree, 0.0, horizon)?,
        })
    }
}

impl Control<f64> for SplineControl {
    fn at(&self, t: f64) -> [f64; 2] {
        [self.u1.eval_clamped(t), self.u2.eval_clamped(t)]
    }
}

/// Everything needed to score a vector of control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingProblem {
    pub params: SwimmerParams<f64>,
    pub reference: EllipseReference,
    pub weights: CostWeights,
    /// Control points per channel.
    pub n_ctrl: usize,
    pub degree: usize,
    /// Box bound on every control point.
    pub amplitude_bound: f64,
    pub p0: Vec<f64>,
    pub method: Method,
    pub tol: Tolerance,
    pub baseline_freq_hz: f64,
}

impl TrackingProblem {
    /// Ellipse with `a = L`, `b = b_over_l·L`, arc length `L`, horizon 3 s, 40 points per spline.
    pub fn standard(params: SwimmerParams<f64>, b_over_l: f64) -> Result<Self, TrackError> {
        let l = params.total_length;
        let reference = ellipse_reference(l, b_over_l * l, l, 3.0)?;
        Ok(Self {
            weights: CostWeights::position_only(params.n_links),
            p0: vec![0.0; params.state_dim()],
            params,
            reference,
            n_ctrl: 40,
            degree: 3,
            amplitude_bound: 0.01,
            method: Method::Rodas4,
            tol: Tolerance { abs: 1e-9, rel: 1e-6 },
            baseline_freq_hz: 0.7,
        })
    }

    pub fn validate(&self) -> Result<(), TrackError> {
        if self.n_ctrl < self.degree + 1 {
            return Err(TrackError::Invalid(format!(
                "{} control points cannot carry degree {}",
                self.n_ctrl, self.degree
            )));
        }
        if !(self.amplitude_bound > 0.0) {
            return Err(TrackError::NotPositive("amplitude bound"));
        }
        let n = self.params.state_dim();
        if self.p0.len() != n || self.weights.q_diag.len() != n || self.weights.s_diag.len() != n {
            return Err(TrackError::Invalid(format!("state vectors must have length {n}")));
        }
        if self.weights.q_diag.iter().chain(&self.weights.s_diag).any(|w| !(*w >= 0.0)) {
            return Err(TrackError::Invalid("weights must be non-negative".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n_ctrl
    }

    /// Splines from `[u1 points..., u2 points...]`.
    pub fn control_from_points(&self, points: &[f64]) -> Result<SplineControl, TrackError> {
        if points.len() != self.dim() {
            return Err(TrackError::ControlCount {
                expected: self.dim(),
                got: points.len(),
            });
        }
        let (a, b) = points.split_at(self.n_ctrl);
        SplineControl::clamped_uniform(a.to_vec(), b.to_vec(), self.degree, self.reference.horizon)
    }

    /// Maps the unit cube onto the control-point box.
    pub fn points_from_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| self.amplitude_bound * (2.0 * v.clamp(0.0, 1.0) - 1.0))
            .collect()
    }

    pub fn simulate<C: Control<f64> + ?Sized>(&self, control: &C) -> Result<Trajectory<f64>, TrackError> {
        let opts = IntegrateOptions {
            method: self.method,
            tol: self.tol,
            ..Default::default()
        };
        Ok(integrate(&self.params, control, &self.p0, self.reference.horizon, &opts)?)
    }

    pub fn cost_of<C: Control<f64> + ?Sized>(&self, control: &C) -> Result<f64, TrackError> {
        let traj = self.simulate(control)?;
        tracking_cost(&traj, &self.reference, &self.weights)
    }

    /// Cost of a control-point vector; failures map to [`FAILURE_PENALTY`].
    pub fn evaluate_points(&self, points: &[f64]) -> f64 {
        match self.control_from_points(points).and_then(|c| self.cost_of(&c)) {
            Ok(j) if j.is_finite() => j,
            _ => FAILURE_PENALTY,
        }
    }

    pub fn baseline(&self) -> Result<TangentSinusoid<EllipseReference>, TrackError> {
        baseline_sinusoidal(self.reference, self.amplitude_bound, self.baseline_freq_hz)
    }

    /// Distance between the final head position and the reference end point.
    pub fn terminal_error(&self, traj: &Trajectory<f64>) -> f64 {
        let end = self.reference.position(self.reference.horizon);
        let p = traj.final_state();
        (p[0] - end[0]).hypot(p[1] - end[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingResult {
    pub best_u1: Vec<f64>,
    pub best_u2: Vec<f64>,
    pub best_cost: f64,
    pub cost_history: Vec<f64>,
    pub best_so_far: Vec<f64>,
    pub baseline_cost: f64,
    pub terminal_error: f64,
    pub baseline_terminal_error: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub failed_evaluations: usize,
    #[serde(skip)]
    pub trajectory: Option<Trajectory<f64>>,
    #[serde(skip)]
    pub baseline_trajectory: Option<Trajectory<f64>>,
}

/// Minimizes the tracking cost over the control-point box.
pub fn optimize(problem: &TrackingProblem, config: &OptimizerConfig) -> Result<TrackingResult, TrackError> {
    problem.validate()?;
    config.validate().map_err(TrackError::Invalid)?;
    let objective = |x: &[f64]| problem.evaluate_points(&problem.points_from_unit(x));
    let trace = minimize(&objective, problem.dim(), config);
    let best_points = problem.points_from_unit(&trace.xs[trace.best_index]);
    let control = problem.control_from_points(&best_points)?;
    let traj = problem.simulate(&control)?;
    let best_cost = tracking_cost(&traj, &problem.reference, &problem.weights)?;
    let baseline = problem.baseline()?;
    let base_traj = problem.simulate(&baseline)?;
    let baseline_cost = tracking_cost(&base_traj, &problem.reference, &problem.weights)?;
    let (u1, u2) = best_points.split_at(problem.n_ctrl);
    Ok(TrackingResult {
        best_u1: u1.to_vec(),
        best_u2: u2.to_vec(),
        best_cost,
        best_so_far: trace.best_so_far(),
        failed_evaluations: trace.values.iter().filter(|&&v| v >= FAILURE_PENALTY).count(),
        cost_history: trace.values,
        baseline_cost,
        terminal_error: problem.terminal_error(&traj),
        baseline_terminal_error: problem.terminal_error(&base_traj),
        evaluations: trace.xs.len(),
        restarts: trace.restarts,
        trajectory: Some(traj),
        baseline_trajectory: Some(base_traj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_case() {
        let r = ellipse_reference(2.0, 2.0, 2.0, 1.0).unwrap();
        assert!((r.s_end - 1.0).abs() < 1e-9);
        let p = r.position(0.0);
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15);
        assert!(ellipse_reference(1.0, 1.0, 7.0, 1.0).is_err());
    }

    #[test]
    fn standard_problem_shape() {
        let p = TrackingProblem::standard(SwimmerParams::default(), 0.5).unwrap();
        assert_eq!(p.dim(), 80);
        assert_eq!(p.points_from_unit(&[0.0, 1.0, 0.5]), vec![-0.01, 0.01, 0.0]);
    }
}
