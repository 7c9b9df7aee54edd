//! Force and torque balances of the planar swimmer, assembled as `M(p)·ṗ = g0 + u1·g1 + u2·g2`.

use crate::linalg::{condition_number, DenseMatrix, Lu, SingularMatrix};
use crate::model::{unit, unit_perp, SwimmerParams};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("resistance matrix is singular: {0}")]
    Singular(#[from] SingularMatrix),
}

/// Resistance matrix and the three right-hand sides at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledPlanarSystem<T> {
    pub resistance: DenseMatrix<T>,
    /// Elastic joint torques.
    pub drift: Vec<T>,
    /// Magnetic torque per unit `u1`.
    pub control_u1: Vec<T>,
    /// Magnetic torque per unit `u2`.
    pub control_u2: Vec<T>,
}

/// Values of the drift and the two control vector fields at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldTriple<T> {
    pub f0: Vec<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
}

impl<T: Real> VectorFieldTriple<T> {
    pub fn get(&self, index: usize) -> &[T] {
        match index {
            0 => &self.f0,
            1 => &self.f1,
            2 => &self.f2,
            _ => panic!("field index {index} out of range"),
        }
    }

    /// `F0 + u1·F1 + u2·F2`.
    pub fn combine(&self, u: [T; 2]) -> Vec<T> {
        (0..self.f0.len())
            .map(|i| self.f0[i] + u[0] * self.f1[i] + u[1] * self.f2[i])
            .collect()
    }
}

/// Assembles the balance equations at the flat state `p`.
///
/// Rows 0–1 hold the total force, row 2 the torque about the head center and row `2 + j`
/// the torque of links `j..N` about joint `j`. Every entry of `M` is a closed-form
/// integral along the links; the layout depends on the angles only.
pub fn assemble<T: Real>(params: &SwimmerParams<T>, p: &[T]) -> AssembledPlanarSystem<T> {
    let n_links = params.n_links;
    let n = n_links + 3;
    assert_eq!(p.len(), n, "state dimension does not match the link count");
    let l = params.link_length();
    let r = params.head_radius;
    let kp = params.link_drag_par;
    let kt = params.link_drag_perp;
    let half = T::lit(0.5);
    let theta_z = p[2];
    let e0 = unit(theta_z);
    let q0 = unit_perp(theta_z);

    // Per link: force (x, y rows) and torque about the head center, as forms in ṗ.
    let mut fx = vec![T::zero(); n_links * n];
    let mut fy = vec![T::zero(); n_links * n];
    let mut tq = vec![T::zero(); n_links * n];
    // Joint offsets from the head center; offsets[0] is the attachment point.
    let mut offsets = Vec::with_capacity(n_links + 1);
    offsets.push([-r * e0[0], -r * e0[1]]);
    // Column of ṗ_θ in the joint velocity: d(joint)/dθz.
    let mut vel_theta = [-r * q0[0], -r * q0[1]];
    let mut perps = Vec::with_capacity(n_links);
    for i in 0..n_links {
        let th = theta_z + p[3 + i];
        let e = unit(th);
        let q = unit_perp(th);
        let d = offsets[i];
        let base = i * n;
        // a = −K·V for each column of V; K = kp e eᵀ + kt q qᵀ.
        let drag = |v: [T; 2]| {
            let along = kp * (e[0] * v[0] + e[1] * v[1]);
            let across = kt * (q[0] * v[0] + q[1] * v[1]);
            [-(along * e[0] + across * q[0]), -(along * e[1] + across * q[1])]
        };
        let mut put = |col: usize, a: [T; 2], w: T| {
            // force = l·a + l²/2·kt·w·q, own torque = −l²/2·(e × a) − kt·l³/3·w.
            let f = [l * a[0] + half * l * l * kt * w * q[0], l * a[1] + half * l * l * kt * w * q[1]];
            let own = -half * l * l * (e[0] * a[1] - e[1] * a[0]) - kt * l * l * l / T::lit(3.0) * w;
            fx[base + col] += f[0];
            fy[base + col] += f[1];
            tq[base + col] += own + d[0] * f[1] - d[1] * f[0];
        };
        put(0, drag([T::one(), T::zero()]), T::zero());
        put(1, drag([T::zero(), T::one()]), T::zero());
        put(2, drag(vel_theta), T::one());
        for (k, qk) in perps.iter().enumerate() {
            let qk: &[T; 2] = qk;
            put(3 + k, drag([-l * qk[0], -l * qk[1]]), T::zero());
        }
        put(3 + i, [T::zero(); 2], T::one());
        vel_theta = [vel_theta[0] - l * q[0], vel_theta[1] - l * q[1]];
        offsets.push([d[0] - l * e[0], d[1] - l * e[1]]);
        perps.push(q);
    }

    let mut m = DenseMatrix::zeros(n, n);
    // Suffix sums over links j..N.
    let mut sum_fx = vec![T::zero(); n];
    let mut sum_fy = vec![T::zero(); n];
    let mut sum_tq = vec![T::zero(); n];
    for j in (0..n_links).rev() {
        let base = j * n;
        for c in 0..n {
            sum_fx[c] += fx[base + c];
            sum_fy[c] += fy[base + c];
            sum_tq[c] += tq[base + c];
        }
        let d = offsets[j];
        let row = m.row_mut(3 + j);
        for c in 0..n {
            row[c] = sum_tq[c] - (d[0] * sum_fy[c] - d[1] * sum_fx[c]);
        }
    }
    // Head drag and rotational drag.
    let kh_par = params.head_drag_par * r;
    let kh_perp = params.head_drag_perp * r;
    for a in 0..2 {
        for b in 0..2 {
            let k = kh_par * e0[a] * e0[b] + kh_perp * q0[a] * q0[b];
            m[(a, b)] -= k;
        }
    }
    m.row_mut(0).iter_mut().zip(&sum_fx).for_each(|(v, &s)| *v += s);
    m.row_mut(1).iter_mut().zip(&sum_fy).for_each(|(v, &s)| *v += s);
    m.row_mut(2).copy_from_slice(&sum_tq);
    m[(2, 2)] -= r * r * r * params.head_drag_rot;

    let mut drift = vec![T::zero(); n];
    let mut prev = theta_z;
    for j in 0..n_links {
        let th = theta_z + p[3 + j];
        drift[3 + j] = -params.elastic * (prev - th).sin();
        prev = th;
    }
    let (s, c) = theta_z.sin_cos();
    let mut control_u1 = vec![T::zero(); n];
    let mut control_u2 = vec![T::zero(); n];
    control_u1[2] = params.magnetization * s;
    control_u2[2] = -params.magnetization * c;

    AssembledPlanarSystem {
        resistance: m,
        drift,
        control_u1,
        control_u2,
    }
}

impl<T: Real> AssembledPlanarSystem<T> {
    pub fn factor(&self) -> Result<Lu<T>, DynamicsError> {
        Ok(self.resistance.lu()?)
    }

    pub fn rhs_vector(&self, u: [T; 2]) -> Vec<T> {
        (0..self.drift.len())
            .map(|i| self.drift[i] + u[0] * self.control_u1[i] + u[1] * self.control_u2[i])
            .collect()
    }
}

/// Solves for `F0, F1, F2` with a single factorization.
pub fn vector_fields<T: Real>(
    params: &SwimmerParams<T>,
    p: &[T],
) -> Result<VectorFieldTriple<T>, DynamicsError> {
    let sys = assemble(params, p);
    let lu = sys.factor()?;
    Ok(VectorFieldTriple {
        f0: lu.solve(&sys.drift),
        f1: lu.solve(&sys.control_u1),
        f2: lu.solve(&sys.control_u2),
    })
}

/// Value of one field (`0` drift, `1`/`2` controls) at `p`.
pub fn vector_field<T: Real>(
    params: &SwimmerParams<T>,
    p: &[T],
    index: usize,
) -> Result<Vec<T>, DynamicsError> {
    let sys = assemble(params, p);
    let lu = sys.factor()?;
    let g = match index {
        0 => &sys.drift,
        1 => &sys.control_u1,
        2 => &sys.control_u2,
        _ => panic!("field index {index} out of range"),
    };
    Ok(lu.solve(g))
}

/// State derivative under control `u`, computed with one solve.
pub fn rhs<T: Real>(params: &SwimmerParams<T>, p: &[T], u: [T; 2]) -> Result<Vec<T>, DynamicsError> {
    let sys = assemble(params, p);
    let lu = sys.factor()?;
    Ok(lu.solve(&sys.rhs_vector(u)))
}

/// Determinant and 1-norm condition number of the resistance matrix at the origin.
pub fn equilibrium_conditioning<T: Real>(params: &SwimmerParams<T>) -> Result<(T, T), DynamicsError> {
    let p = vec![T::zero(); params.state_dim()];
    let sys = assemble(params, &p);
    let det = sys.factor()?.determinant();
    Ok((det, condition_number(&sys.resistance)?))
}
