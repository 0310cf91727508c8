//! Direct Monte Carlo simulation of the excited random walk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::environment::CookieEnvironment;
use crate::error::{ErwError, Result};

/// Probability of a right step on the `visit_count`-th visit to a site,
/// counting the current visit.
pub fn step_probability(env: &CookieEnvironment, visit_count: u64) -> f64 {
    debug_assert!(visit_count >= 1);
    if visit_count >= 1 && visit_count as usize <= env.cookies() {
        env.strength(visit_count as usize)
    } else {
        0.5
    }
}

/// Stable sub-seed for replicate `r`: SplitMix64 applied to the master seed
/// offset by `(r + 1)` golden-ratio increments. Changing this breaks
/// reproducibility of recorded runs.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    splitmix64(seed.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Visit counts for sites `0, 1, 2, ...` and `-1, -2, ...`, grown on demand.
#[derive(Default)]
struct SiteCounts {
    right: Vec<u32>,
    left: Vec<u32>,
}

impl SiteCounts {
    /// Records a visit to `x` and returns the new count.
    fn visit(&mut self, x: i64) -> u64 {
        let (side, idx) = if x >= 0 {
            (&mut self.right, x as usize)
        } else {
            (&mut self.left, (-x - 1) as usize)
        };
        if idx >= side.len() {
            side.resize((idx + 1).max(2 * side.len()), 0);
        }
        side[idx] = side[idx].saturating_add(1);
        side[idx] as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkResult {
    pub final_position: i64,
    pub steps: u64,
    pub min_position: i64,
    pub max_position: i64,
}

struct Walk<'a> {
    env: &'a CookieEnvironment,
    rng: ChaCha8Rng,
    complement: bool,
    sites: SiteCounts,
    x: i64,
}

impl<'a> Walk<'a> {
    fn new(env: &'a CookieEnvironment, seed: u64, complement: bool) -> Self {
        Self {
            env,
            rng: ChaCha8Rng::seed_from_u64(seed),
            complement,
            sites: SiteCounts::default(),
            x: 0,
        }
    }

    fn step(&mut self) -> i64 {
        let visits = self.sites.visit(self.x);
        let u: f64 = self.rng.random();
        let u = if self.complement { 1.0 - u } else { u };
        self.x += if u < step_probability(self.env, visits) { 1 } else { -1 };
        self.x
    }
}

/// Runs `steps` steps from the origin. Deterministic in `(env, steps, seed)`.
pub fn simulate_walk(env: &CookieEnvironment, steps: u64, seed: u64) -> WalkResult {
    simulate_walk_with(env, steps, seed, false)
}

/// As [`simulate_walk`]; with `complement` every uniform `u` is replaced by
/// `1 - u`. Running the mirrored environment this way negates the path.
pub fn simulate_walk_with(env: &CookieEnvironment, steps: u64, seed: u64, complement: bool) -> WalkResult {
    let mut walk = Walk::new(env, seed, complement);
    let (mut lo, mut hi) = (0, 0);
    for _ in 0..steps {
        let x = walk.step();
        lo = lo.min(x);
        hi = hi.max(x);
    }
    WalkResult {
        final_position: walk.x,
        steps,
        min_position: lo,
        max_position: hi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HittingOutcome {
    Hit(u64),
    Timeout,
}

impl HittingOutcome {
    /// `target / T`, the hitting-time speed estimate.
    pub fn speed(&self, target: u64) -> Option<f64> {
        match *self {
            HittingOutcome::Hit(t) => Some(target as f64 / t as f64),
            HittingOutcome::Timeout => None,
        }
    }
}

/// First time the walk reaches `target`, or `Timeout` after `step_cap` steps.
pub fn hitting_time(env: &CookieEnvironment, target: u64, seed: u64, step_cap: u64) -> Result<HittingOutcome> {
    if target == 0 {
        return Err(ErwError::InvalidArgument("target must be at least 1".into()));
    }
    let mut walk = Walk::new(env, seed, false);
    for n in 1..=step_cap {
        if walk.step() == target as i64 {
            return Ok(HittingOutcome::Hit(n));
        }
    }
    Ok(HittingOutcome::Timeout)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub seed: u64,
    pub steps: u64,
    pub final_position: i64,
    pub speed_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub steps_per_replicate: u64,
    pub seed: u64,
}

impl MonteCarloEstimate {
    /// Whether `[lo, hi]` widened by `k` standard errors contains the mean.
    pub fn within(&self, lo: f64, hi: f64, k: f64) -> bool {
        self.mean >= lo - k * self.std_error && self.mean <= hi + k * self.std_error
    }
}

fn check_sizes(steps: u64, replicates: u64) -> Result<()> {
    if steps == 0 {
        return Err(ErwError::InvalidArgument("steps must be at least 1".into()));
    }
    if replicates < 2 {
        return Err(ErwError::InvalidArgument("replicates must be at least 2".into()));
    }
    Ok(())
}

/// One record per replicate, in replicate order. Replicates run in parallel.
pub fn simulate_replicates(
    env: &CookieEnvironment,
    steps: u64,
    replicates: u64,
    seed: u64,
) -> Result<Vec<ReplicateRecord>> {
    check_sizes(steps, replicates)?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let sub = replicate_seed(seed, r);
            let w = simulate_walk(env, steps, sub);
            ReplicateRecord {
                replicate: r,
                seed: sub,
                steps,
                final_position: w.final_position,
                speed_estimate: w.final_position as f64 / steps as f64,
            }
        })
        .collect())
}

/// Mean and standard error from replicate records, summed in replicate order.
pub fn summarize(records: &[ReplicateRecord], seed: u64) -> MonteCarloEstimate {
    let n = records.len() as f64;
    let mean = records.iter().map(|r| r.speed_estimate).sum::<f64>() / n;
    let var = records
        .iter()
        .map(|r| (r.speed_estimate - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    MonteCarloEstimate {
        mean,
        std_error: (var / n).sqrt(),
        replicates: records.len() as u64,
        steps_per_replicate: records.first().map_or(0, |r| r.steps),
        seed,
    }
}

/// Monte Carlo estimate of the speed from `X_n / n` over independent replicates.
pub fn estimate_speed(env: &CookieEnvironment, steps: u64, replicates: u64, seed: u64) -> Result<MonteCarloEstimate> {
    let records = simulate_replicates(env, steps, replicates, seed)?;
    Ok(summarize(&records, seed))
}
