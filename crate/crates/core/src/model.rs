//! Physical parameters, planar configuration and chain kinematics.

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Physical constants of the swimmer.
///
/// Serialized with the flat keys `L, N, r, k_par_h, k_perp_h, k_r, k_par, k_perp, k_el, m`.
/// Missing keys fall back to [`SwimmerParams::default`], the fitted experimental values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct SwimmerParams<T> {
    /// Total flagellum length.
    #[serde(rename = "L")]
    pub total_length: T,
    #[serde(rename = "N")]
    pub n_links: usize,
    /// Head radius.
    #[serde(rename = "r")]
    pub head_radius: T,
    #[serde(rename = "k_par_h")]
    pub head_drag_par: T,
    #[serde(rename = "k_perp_h")]
    pub head_drag_perp: T,
    #[serde(rename = "k_r")]
    pub head_drag_rot: T,
    #[serde(rename = "k_par")]
    pub link_drag_par: T,
    #[serde(rename = "k_perp")]
    pub link_drag_perp: T,
    #[serde(rename = "k_el")]
    pub elastic: T,
    #[serde(rename = "m")]
    pub magnetization: T,
}

impl<T: Real> Default for SwimmerParams<T> {
    fn default() -> Self {
        Self {
            total_length: T::lit(7e-3),
            n_links: 2,
            head_radius: T::lit(3e-4),
            head_drag_par: T::lit(1.15),
            head_drag_perp: T::lit(4.37),
            head_drag_rot: T::lit(0.6),
            link_drag_par: T::lit(0.35),
            link_drag_perp: T::lit(0.81),
            elastic: T::lit(8.68e-7),
            magnetization: T::lit(1.68e-4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("N must be ≥ 1")]
    NoLinks,
    #[error("k_el must be non-negative")]
    NegativeElastic,
}

impl<T: Real> SwimmerParams<T> {
    /// Default constants with a different link count.
    pub fn with_links(n_links: usize) -> Self {
        Self {
            n_links,
            ..Self::default()
        }
    }

    /// Checks the sign constraints; returns the parameters unchanged when they hold.
    pub fn validated(self) -> Result<Self, ParamError> {
        if self.n_links == 0 {
            return Err(ParamError::NoLinks);
        }
        let positive = [
            ("L", self.total_length),
            ("r", self.head_radius),
            ("k_par_h", self.head_drag_par),
            ("k_perp_h", self.head_drag_perp),
            ("k_r", self.head_drag_rot),
            ("k_par", self.link_drag_par),
            ("k_perp", self.link_drag_perp),
            ("m", self.magnetization),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ParamError::NotPositive(name));
            }
        }
        if !(self.elastic >= T::zero()) || !self.elastic.is_finite() {
            return Err(ParamError::NegativeElastic);
        }
        Ok(self)
    }

    /// Link length `L / N`.
    #[inline]
    pub fn link_length(&self) -> T {
        self.total_length / T::lit(self.n_links as f64)
    }

    /// Dimension of the flattened state.
    #[inline]
    pub fn state_dim(&self) -> usize {
        self.n_links + 3
    }

    pub fn cast<U: Real>(&self) -> SwimmerParams<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        SwimmerParams {
            total_length: c(self.total_length),
            n_links: self.n_links,
            head_radius: c(self.head_radius),
            head_drag_par: c(self.head_drag_par),
            head_drag_perp: c(self.head_drag_perp),
            head_drag_rot: c(self.head_drag_rot),
            link_drag_par: c(self.link_drag_par),
            link_drag_perp: c(self.link_drag_perp),
            elastic: c(self.elastic),
            magnetization: c(self.magnetization),
        }
    }
}

/// Planar configuration: head position, head angle and link angles relative to the head.
///
/// Angles are unwrapped. The flat layout is `[x, y, theta_z, phi_1, ..., phi_N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarState<T> {
    pub x: T,
    pub y: T,
    pub theta_z: T,
    pub phi: Vec<T>,
}

impl<T: Real> PlanarState<T> {
    pub fn zero(n_links: usize) -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            theta_z: T::zero(),
            phi: vec![T::zero(); n_links],
        }
    }

    pub fn from_slice(p: &[T]) -> Self {
        assert!(p.len() >= 4, "state needs at least one link angle");
        Self {
            x: p[0],
            y: p[1],
            theta_z: p[2],
            phi: p[3..].to_vec(),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend([self.x, self.y, self.theta_z]);
        v.extend_from_slice(&self.phi);
        v
    }

    pub fn n_links(&self) -> usize {
        self.phi.len()
    }

    pub fn dim(&self) -> usize {
        self.phi.len() + 3
    }
}

#[inline]
pub fn unit<T: Real>(angle: T) -> [T; 2] {
    let (s, c) = angle.sin_cos();
    [c, s]
}

#[inline]
pub fn unit_perp<T: Real>(angle: T) -> [T; 2] {
    let (s, c) = angle.sin_cos();
    [-s, c]
}

/// Joint positions and absolute angles of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainGeometry<T> {
    pub head_center: [T; 2],
    /// `N + 1` points; the first is the flagellum attachment on the head surface.
    pub joints: Vec<[T; 2]>,
    /// Absolute link angles `theta_z + phi_i`.
    pub link_angles: Vec<T>,
    pub head_axis_angle: T,
}

/// Chain geometry for a flat state `[x, y, theta_z, phi_1..phi_N]`.
pub fn chain_geometry<T: Real>(params: &SwimmerParams<T>, p: &[T]) -> ChainGeometry<T> {
    let n = p.len() - 3;
    let l = params.link_length();
    let r = params.head_radius;
    let theta_z = p[2];
    let head = [p[0], p[1]];
    let e0 = unit(theta_z);
    let mut joints = Vec::with_capacity(n + 1);
    joints.push([head[0] - r * e0[0], head[1] - r * e0[1]]);
    let link_angles: Vec<T> = p[3..].iter().map(|&phi| theta_z + phi).collect();
    for &th in &link_angles {
        let prev = *joints.last().unwrap();
        let e = unit(th);
        joints.push([prev[0] - l * e[0], prev[1] - l * e[1]]);
    }
    ChainGeometry {
        head_center: head,
        joints,
        link_angles,
        head_axis_angle: theta_z,
    }
}
