//! Planar magnetic N-link microswimmer at low Reynolds number.

pub mod brackets;
pub mod dynamics;
pub mod export;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod reach;
pub mod real;
pub mod splines;
pub mod track;

pub use real::Real;

pub type SwimmerParams = model::SwimmerParams<f64>;
pub type SwimmerParamsF32 = model::SwimmerParams<f32>;
pub type PlanarState = model::PlanarState<f64>;
pub type Trajectory = integrate::Trajectory<f64>;
