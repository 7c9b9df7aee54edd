//! Monte Carlo sampling of the reachable set near the equilibrium under random oscillatory fields.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrate::{integrate, Control, IntegrateOptions, Method, Tolerance};
use crate::model::SwimmerParams;

/// `u1 = ε(η1 + η2 cos 10t + η3 cos 100t)`, `u2 = ε(η4 + η5 cos 10t + η6 cos 100t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomOscillatory {
    pub epsilon: f64,
    pub eta: [f64; 6],
}

impl Control<f64> for RandomOscillatory {
    fn at(&self, t: f64) -> [f64; 2] {
        let c10 = (10.0 * t).cos();
        let c100 = (100.0 * t).cos();
        let e = &self.eta;
        [
            self.epsilon * (e[0] + e[1] * c10 + e[2] * c100),
            self.epsilon * (e[3] + e[4] * c10 + e[5] * c100),
        ]
    }
}

pub fn random_control(epsilon: f64, eta: [f64; 6]) -> RandomOscillatory {
    RandomOscillatory { epsilon, eta }
}

/// Coefficients of run `run`, drawn from an independent stream keyed by `(seed, run)`.
pub fn draw_eta(seed: u64, run: u64) -> [f64; 6] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
}

/// Rectangular window `[x_min, x_max] × [y_min, y_max]` split into `nx × ny` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, cells: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: cells,
            ny: cells,
        }
    }

    fn validate(&self) -> Result<(), ReachError> {
        let ok = self.nx > 0
            && self.ny > 0
            && self.x_max > self.x_min
            && self.y_max > self.y_min
            && [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(ReachError::DegenerateWindow)
        }
    }

    fn cell_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    fn cell_height(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Cell containing `(x, y)`; points on the upper window edges belong to the last cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max) {
            return None;
        }
        let ix = (((x - self.x_min) / self.cell_width()) as usize).min(self.nx - 1);
        let iy = (((y - self.y_min) / self.cell_height()) as usize).min(self.ny - 1);
        Some((ix, iy))
    }

    pub fn cell_bounds(&self, ix: usize, iy: usize) -> [f64; 4] {
        let w = self.cell_width();
        let h = self.cell_height();
        [
            self.x_min + ix as f64 * w,
            self.x_min + (ix + 1) as f64 * w,
            self.y_min + iy as f64 * h,
            self.y_min + (iy + 1) as f64 * h,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachabilityConfig {
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_mc: usize,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_links: usize,
    pub grid: GridSpec,
    pub method: Method,
    pub tol: Tolerance,
    /// Number of evenly spaced samples kept per path; 0 keeps endpoints only.
    pub path_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(6e-3, 24)
    }
}

impl Default for ReachabilityConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            horizon: 1.0,
            n_mc: 2000,
            seed: 2024,
            n_links: 2,
            grid: GridSpec::default(),
            method: Method::Rodas4,
            tol: Tolerance { abs: 1e-9, rel: 1e-6 },
            path_samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReachError {
    #[error("epsilon and T must be positive and n_mc at least 1")]
    InvalidConfig,
    #[error("occupancy window is degenerate")]
    DegenerateWindow,
    #[error("endpoint cloud is empty")]
    EmptyCloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointRecord {
    pub run: u64,
    pub eta: [f64; 6],
    /// Flat final state `[x, y, theta_z, phi_1..phi_N]`.
    pub endpoint: Vec<f64>,
    /// Decimated `(x, y)` path, empty unless requested.
    pub path: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointCloud {
    pub records: Vec<EndpointRecord>,
    pub failures: Vec<RunFailure>,
}

/// One realization: draw η for `run`, integrate from the origin over `[0, T]`.
pub fn simulate_run(
    params: &SwimmerParams<f64>,
    config: &ReachabilityConfig,
    run: u64,
) -> Result<EndpointRecord, RunFailure> {
    let eta = draw_eta(config.seed, run);
    let control = random_control(config.epsilon, eta);
    let sample_times: Vec<f64> = (1..config.path_samples.saturating_sub(1))
        .map(|k| config.horizon * k as f64 / (config.path_samples - 1) as f64)
        .collect();
    let opts = IntegrateOptions {
        method: config.method,
        tol: config.tol,
        sample_times: sample_times.clone(),
        ..Default::default()
    };
    let p0 = vec![0.0; params.state_dim()];
    let traj = integrate(params, &control, &p0, config.horizon, &opts).map_err(|e| RunFailure {
        run,
        message: e.to_string(),
    })?;
    let path = if config.path_samples >= 2 {
        std::iter::once(0.0)
            .chain(sample_times)
            .chain(std::iter::once(config.horizon))
            .map(|t| {
                let s = traj.sample(t).expect("sample inside horizon");
                [s[0], s[1]]
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(EndpointRecord {
        run,
        eta,
        endpoint: traj.final_state().to_vec(),
        path,
    })
}

/// Runs `n_mc` independent realizations in parallel; records come back ordered by run index.
pub fn monte_carlo(params: &SwimmerParams<f64>, config: &ReachabilityConfig) -> Result<EndpointCloud, ReachError> {
    if !(config.epsilon > 0.0) || !(config.horizon > 0.0) || config.n_mc == 0 {
        return Err(ReachError::InvalidConfig);
    }
    let params = SwimmerParams {
        n_links: config.n_links,
        ..*params
    };
    let results: Vec<Result<EndpointRecord, RunFailure>> = (0..config.n_mc as u64)
        .into_par_iter()
        .map(|run| simulate_run(&params, config, run))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    Ok(EndpointCloud { records, failures })
}

/// Connected set of empty cells grown from the cells touching the origin on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptyRegion {
    /// `(ix, iy)` cell indices, sorted.
    pub cells: Vec<(usize, usize)>,
    /// Bounding box `[x_min, x_max, y_min, y_max]` of the region.
    pub bounds: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub grid: GridSpec,
    /// Row-major counts, `counts[iy * nx + ix]`.
    pub counts: Vec<u32>,
    pub points_in_window: usize,
    pub empty_cells: usize,
    /// Empty region adjacent to the origin on the `x > 0` side, if any.
    pub flagged_region: Option<EmptyRegion>,
    /// Same search on the `x < 0` side.
    pub mirrored_region: Option<EmptyRegion>,
}

impl OccupancyGrid {
    pub fn count(&self, ix: usize, iy: usize) -> u32 {
        self.counts[iy * self.grid.nx + ix]
    }

    pub fn region(&self, side: Side) -> Option<&EmptyRegion> {
        match side {
            Side::Positive => self.flagged_region.as_ref(),
            Side::Negative => self.mirrored_region.as_ref(),
        }
    }
}

fn empty_region_at_origin(counts: &[u32], grid: &GridSpec, side: Side) -> Option<EmptyRegion> {
    if !(grid.x_min < 0.0 && grid.x_max > 0.0 && grid.y_min <= 0.0 && grid.y_max >= 0.0) {
        return None;
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let xc = -grid.x_min / grid.cell_width();
    // Column holding 0⁺ (or 0⁻).
    let ix0 = match side {
        Side::Positive => (xc as usize).min(nx - 1),
        Side::Negative if xc.fract() == 0.0 => xc as usize - 1,
        Side::Negative => (xc as usize).min(nx - 1),
    };
    let allowed = |jx: usize| match side {
        Side::Positive => jx >= ix0,
        Side::Negative => jx <= ix0,
    };
    let yc = -grid.y_min / grid.cell_height();
    let mut seeds = vec![(yc as usize).min(ny - 1)];
    if yc.fract() == 0.0 && yc as usize > 0 && (yc as usize) < ny {
        seeds.push(yc as usize - 1);
    }
    let empty = |ix: usize, iy: usize| counts[iy * nx + ix] == 0;
    let mut seen = vec![false; nx * ny];
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for iy in seeds {
        if empty(ix0, iy) && !seen[iy * nx + ix0] {
            seen[iy * nx + ix0] = true;
            queue.push_back((ix0, iy));
        }
    }
    let mut cells = Vec::new();
    while let Some((ix, iy)) = queue.pop_front() {
        cells.push((ix, iy));
        let mut visit = |jx: usize, jy: usize| {
            if allowed(jx) && empty(jx, jy) && !seen[jy * nx + jx] {
                seen[jy * nx + jx] = true;
                queue.push_back((jx, jy));
            }
        };
        if ix + 1 < nx {
            visit(ix + 1, iy);
        }
        if ix > 0 {
            visit(ix - 1, iy);
        }
        if iy + 1 < ny {
            visit(ix, iy + 1);
        }
        if iy > 0 {
            visit(ix, iy - 1);
        }
    }
    if cells.is_empty() {
        return None;
    }
    cells.sort_unstable();
    let mut bounds = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for &(ix, iy) in &cells {
        let b = grid.cell_bounds(ix, iy);
        bounds[0] = bounds[0].min(b[0]);
        bounds[1] = bounds[1].max(b[1]);
        bounds[2] = bounds[2].min(b[2]);
        bounds[3] = bounds[3].max(b[3]);
    }
    Some(EmptyRegion { cells, bounds })
}

/// Rasterizes `(x, y)` points into `grid` and flags the empty regions touching `(0±, 0)`.
pub fn occupancy_of_points(points: &[[f64; 2]], grid: &GridSpec) -> Result<OccupancyGrid, ReachError> {
    grid.validate()?;
    if points.is_empty() {
        return Err(ReachError::EmptyCloud);
    }
    let nx = grid.nx;
    let mut counts = vec![0u32; nx * grid.ny];
    let mut inside = 0;
    for p in points {
        if let Some((ix, iy)) = grid.cell_of(p[0], p[1]) {
            counts[iy * nx + ix] += 1;
            inside += 1;
        }
    }
    let empty_cells = counts.iter().filter(|&&c| c == 0).count();
    Ok(OccupancyGrid {
        grid: *grid,
        flagged_region: empty_region_at_origin(&counts, grid, Side::Positive),
        mirrored_region: empty_region_at_origin(&counts, grid, Side::Negative),
        counts,
        points_in_window: inside,
        empty_cells,
    })
}

pub fn occupancy(cloud: &EndpointCloud, grid: &GridSpec) -> Result<OccupancyGrid, ReachError> {
    let points: Vec<[f64; 2]> = cloud.records.iter().map(|r| [r.endpoint[0], r.endpoint[1]]).collect();
    occupancy_of_points(&points, grid)
}

/// Largest head-center distance from the origin over the cloud.
pub fn max_endpoint_radius(cloud: &EndpointCloud) -> f64 {
    cloud
        .records
        .iter()
        .map(|r| r.endpoint[0].hypot(r.endpoint[1]))
        .fold(0.0, f64::max)
}
