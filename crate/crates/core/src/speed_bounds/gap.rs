use rayon::prelude::*;
use serde::Serialize;

use super::speed_interval;
use crate::environment::CookieEnvironment;
use crate::error::{ErwError, Result};

/// Distance kept from the critical surface `delta = 2`, where both bounds
/// are a removable `0 / 0` with limit zero.
pub const REGION_EDGE: f64 = 1e-9;

/// Number of best grid points used as starting points for refinement.
const REFINE_STARTS: usize = 8;
const MAX_REFINE_ITERATIONS: usize = 100_000;
/// Upper limit on the number of scanned grid points.
pub const MAX_GRID_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionShape {
    /// Equal cookies `(p, p, p)`; one search coordinate.
    Symmetric,
    /// Arbitrary `(p1, p2, p3)`; three search coordinates.
    General,
}

/// Box `[lower, upper]^d` intersected with `delta >= 2 + REGION_EDGE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRegion {
    pub shape: RegionShape,
    pub lower: f64,
    pub upper: f64,
}

impl SearchRegion {
    pub fn symmetric() -> Self {
        Self {
            shape: RegionShape::Symmetric,
            lower: 0.0,
            upper: 1.0,
        }
    }

    pub fn general() -> Self {
        Self {
            shape: RegionShape::General,
            lower: 0.0,
            upper: 1.0,
        }
    }

    /// Same shape, coordinates restricted to `[lower, upper]`.
    pub fn restricted(self, lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            ..self
        }
    }

    pub fn dimension(&self) -> usize {
        match self.shape {
            RegionShape::Symmetric => 1,
            RegionShape::General => 3,
        }
    }

    /// Cookie strengths for a point in search coordinates.
    pub fn strengths(&self, x: &[f64]) -> [f64; 3] {
        match self.shape {
            RegionShape::Symmetric => [x[0]; 3],
            RegionShape::General => [x[0], x[1], x[2]],
        }
    }

    pub fn environment(&self, x: &[f64]) -> CookieEnvironment {
        CookieEnvironment::new(self.strengths(x).to_vec()).expect("search points lie in [0, 1]")
    }

    fn contains(&self, x: &[f64]) -> bool {
        let delta: f64 = self.strengths(x).iter().map(|p| 2.0 * p - 1.0).sum();
        x.iter().all(|&c| c >= self.lower && c <= self.upper) && delta >= 2.0 + REGION_EDGE
    }

    fn axis(&self, step: f64) -> Vec<f64> {
        let count = ((self.upper - self.lower) / step + 1e-9).floor() as usize;
        let mut values: Vec<f64> = (0..=count).map(|k| self.lower + k as f64 * step).collect();
        if let Some(&last) = values.last() {
            if self.upper - last > 1e-12 {
                values.push(self.upper);
            } else {
                *values.last_mut().unwrap() = self.upper;
            }
        }
        values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub point: Vec<f64>,
    pub v_lower: f64,
    pub v_upper: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSearchResult {
    pub region: SearchRegion,
    /// Maximizer in search coordinates (`[p]` or `[p1, p2, p3]`).
    pub argmax: Vec<f64>,
    pub max_gap: f64,
    pub evaluations: usize,
    pub grid_resolution: f64,
    pub refine_tol: f64,
    #[serde(skip)]
    pub grid: Vec<GridPoint>,
}

fn gap_at(region: &SearchRegion, x: &[f64]) -> (f64, f64) {
    let b = speed_interval(&region.environment(x)).expect("region points have delta > 2");
    (b.v_lower, b.v_upper)
}

/// `a` beats `b`: larger gap, ties broken towards the lexicographically
/// smaller point.
fn better(a_gap: f64, a: &[f64], b_gap: f64, b: &[f64]) -> bool {
    if a_gap != b_gap {
        return a_gap > b_gap;
    }
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

fn scan(region: &SearchRegion, step: f64) -> Vec<GridPoint> {
    let axis = region.axis(step);
    let points: Vec<Vec<f64>> = match region.shape {
        RegionShape::Symmetric => axis.iter().map(|&p| vec![p]).collect(),
        RegionShape::General => {
            let mut pts = Vec::with_capacity(axis.len().pow(3));
            for &a in &axis {
                for &b in &axis {
                    for &c in &axis {
                        pts.push(vec![a, b, c]);
                    }
                }
            }
            pts
        }
    };
    points
        .into_par_iter()
        .filter(|x| region.contains(x))
        .map(|x| {
            let (v_lower, v_upper) = gap_at(region, &x);
            GridPoint {
                point: x,
                v_lower,
                v_upper,
                gap: v_upper - v_lower,
            }
        })
        .collect()
}

/// Compass search with step halving, restricted to the region.
fn refine(region: &SearchRegion, start: &[f64], step: f64, tol: f64, evals: &mut usize) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = {
        let (lo, hi) = gap_at(region, &x);
        hi - lo
    };
    *evals += 1;
    let mut step = step;
    let mut iterations = 0;
    while step >= tol && iterations < MAX_REFINE_ITERATIONS {
        iterations += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for d in 0..x.len() {
            for sign in [-1.0, 1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * step).clamp(region.lower, region.upper);
                if y == x || !region.contains(&y) {
                    continue;
                }
                let (lo, hi) = gap_at(region, &y);
                *evals += 1;
                let fy = hi - lo;
                let improves = fy > fx;
                let beats_best = match &best {
                    None => true,
                    Some((bx, bf)) => better(fy, &y, *bf, bx),
                };
                if improves && beats_best {
                    best = Some((y, fy));
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

/// Maximizes `v_upper - v_lower` over the region: a full grid scan followed
/// by compass-search refinement from the best grid points.
pub fn maximize_gap(region: SearchRegion, grid_step: f64, refine_tol: f64) -> Result<GapSearchResult> {
    if !(grid_step > 0.0 && refine_tol > 0.0) {
        return Err(ErwError::InvalidArgument(format!(
            "grid step ({grid_step}) and refinement tolerance ({refine_tol}) must be positive"
        )));
    }
    if !(0.0 <= region.lower && region.lower <= region.upper && region.upper <= 1.0) {
        return Err(ErwError::InvalidArgument(format!(
            "search box [{}, {}] must lie inside [0, 1]",
            region.lower, region.upper
        )));
    }
    let corner = vec![region.upper; region.dimension()];
    if !region.contains(&corner) {
        return Err(ErwError::EmptyRegion {
            min_delta: 2.0 + REGION_EDGE,
        });
    }
    let points = region.axis(grid_step).len().pow(region.dimension() as u32);
    if points > MAX_GRID_POINTS {
        return Err(ErwError::InvalidArgument(format!(
            "grid step {grid_step} gives {points} points, more than {MAX_GRID_POINTS}"
        )));
    }
    let grid = scan(&region, grid_step);
    if grid.is_empty() {
        return Err(ErwError::EmptyRegion {
            min_delta: 2.0 + REGION_EDGE,
        });
    }
    let mut evaluations = grid.len();

    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&grid[i], &grid[j]);
        b.gap
            .total_cmp(&a.gap)
            .then_with(|| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal))
    });

    let mut best_x = grid[order[0]].point.clone();
    let mut best_gap = grid[order[0]].gap;
    for &idx in order.iter().take(REFINE_STARTS) {
        let (x, fx) = refine(&region, &grid[idx].point, grid_step, refine_tol, &mut evaluations);
        if better(fx, &x, best_gap, &best_x) {
            best_x = x;
            best_gap = fx;
        }
    }

    Ok(GapSearchResult {
        region,
        argmax: best_x,
        max_gap: best_gap,
        evaluations,
        grid_resolution: grid_step,
        refine_tol,
        grid,
    })
}
