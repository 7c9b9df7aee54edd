//! Clamped uniform B-spline curves.

use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplineError {
    #[error("need at least degree + 1 = {needed} control points, got {got}")]
    TooFewControlPoints { needed: usize, got: usize },
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("parameter interval is empty")]
    EmptyInterval,
    #[error("parameter {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

/// Knots with `degree + 1` copies of each end value and equally spaced interior knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector<T> {
    pub degree: usize,
    pub knots: Vec<T>,
}

pub fn clamped_uniform_knots<T: Real>(
    n_ctrl: usize,
    degree: usize,
    t0: T,
    tn: T,
) -> Result<KnotVector<T>, SplineError> {
    if degree == 0 {
        return Err(SplineError::ZeroDegree);
    }
    if n_ctrl < degree + 1 {
        return Err(SplineError::TooFewControlPoints {
            needed: degree + 1,
            got: n_ctrl,
        });
    }
    if !(tn > t0) {
        return Err(SplineError::EmptyInterval);
    }
    let spans = n_ctrl - degree;
    let mut knots = vec![t0; degree + 1];
    let width = tn - t0;
    for i in 1..spans {
        knots.push(t0 + width * T::lit(i as f64) / T::lit(spans as f64));
    }
    knots.extend(std::iter::repeat_n(tn, degree + 1));
    Ok(KnotVector { degree, knots })
}

impl<T: Real> KnotVector<T> {
    pub fn start(&self) -> T {
        self.knots[self.degree]
    }

    pub fn end(&self) -> T {
        self.knots[self.knots.len() - 1 - self.degree]
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Number of non-degenerate spans.
    pub fn n_spans(&self) -> usize {
        self.n_basis() - self.degree
    }

    /// Index `k` of the span with `knots[k] ≤ t < knots[k+1]`; `t = end` maps to the last span.
    pub fn span(&self, t: T) -> usize {
        let last = self.n_basis() - 1;
        if t >= self.knots[last + 1] {
            return last;
        }
        let k = self.knots.partition_point(|&u| u <= t);
        k.saturating_sub(1).clamp(self.degree, last)
    }

    /// The `degree + 1` basis values that can be nonzero at `t`, and the index of the first one.
    ///
    /// At the right end the last basis function is 1.
    pub fn basis(&self, t: T) -> Result<(usize, Vec<T>), SplineError> {
        let (a, b) = (self.start(), self.end());
        if !(t >= a && t <= b) {
            return Err(SplineError::OutOfRange {
                t: t.to_f64_lossy(),
                start: a.to_f64_lossy(),
                end: b.to_f64_lossy(),
            });
        }
        let p = self.degree;
        let k = self.span(t);
        let u = &self.knots;
        // Cox–de Boor, triangular form.
        let mut n = vec![T::zero(); p + 1];
        let mut left = vec![T::zero(); p + 1];
        let mut right = vec![T::zero(); p + 1];
        n[0] = T::one();
        for j in 1..=p {
            left[j] = t - u[k + 1 - j];
            right[j] = u[k + j] - t;
            let mut saved = T::zero();
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == T::zero() { T::zero() } else { n[r] / denom };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((k - p, n))
    }

    /// All `n_basis` basis values at `t`.
    pub fn basis_full(&self, t: T) -> Result<Vec<T>, SplineError> {
        let (first, local) = self.basis(t)?;
        let mut all = vec![T::zero(); self.n_basis()];
        all[first..first + local.len()].copy_from_slice(&local);
        Ok(all)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineCurve<T> {
    pub knots: KnotVector<T>,
    pub control_points: Vec<T>,
}

impl<T: Real> BSplineCurve<T> {
    pub fn new(knots: KnotVector<T>, control_points: Vec<T>) -> Result<Self, SplineError> {
        if control_points.len() != knots.n_basis() {
            return Err(SplineError::TooFewControlPoints {
                needed: knots.n_basis(),
                got: control_points.len(),
            });
        }
        Ok(Self {
            knots,
            control_points,
        })
    }

    /// Clamped uniform curve over `[t0, tn]`.
    pub fn clamped_uniform(control_points: Vec<T>, degree: usize, t0: T, tn: T) -> Result<Self, SplineError> {
        let knots = clamped_uniform_knots(control_points.len(), degree, t0, tn)?;
        Self::new(knots, control_points)
    }

    pub fn eval(&self, t: T) -> Result<T, SplineError> {
        let (first, basis) = self.knots.basis(t)?;
        Ok(basis
            .iter()
            .zip(&self.control_points[first..])
            .fold(T::zero(), |acc, (&b, &c)| acc + b * c))
    }

    /// Evaluates with `t` clamped into the parameter interval.
    pub fn eval_clamped(&self, t: T) -> T {
        let t = t.max(self.knots.start()).min(self.knots.end());
        self.eval(t).expect("clamped parameter is in range")
    }
}
