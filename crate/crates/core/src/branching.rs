//! The backward branching process of an excited random walk.
//!
//! Picture an infinite sequence of independent coin flips in which flip `f`
//! comes up heads with probability `p_f` for `f <= M` and one half
//! afterwards. `F_m` is the number of tails seen before the `m`-th head. The
//! backward branching process `Z` is the Markov chain on `{0, 1, 2, ...}`
//! with
//!
//! ```text
//! p(i, j) = P(F_{i+1} = j).
//! ```
//!
//! Each row is evaluated exactly: a dynamic program over the cookie flips
//! splits the row into a handful of branches, and every branch that is still
//! open after the last cookie closes with a fair negative-binomial law.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::environment::CookieEnvironment;
use crate::error::{ErwError, Result};
use crate::numeric::{binomial, fair_neg_binomial_pmf, neg_binomial_upper_tail};

/// Remaining probability mass at which series over `j` are closed analytically.
pub const SERIES_TAIL_CUTOFF: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Branch {
    weight: f64,
    /// Tails produced during the cookie flips.
    tails: u64,
    /// Heads still needed from the fair coin; zero once the branch is done.
    heads_left: u64,
}

/// Law of `F_{i+1}` for one row of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RowLaw {
    branches: Vec<Branch>,
    /// Mass moved from `j = 0` to `j = 1` by a deliberately corrupted kernel.
    defect: f64,
}

impl RowLaw {
    /// Splits row `i` according to the outcomes of the cookie flips.
    pub fn new(env: &CookieEnvironment, i: u64) -> Self {
        let target = i + 1;
        let mut branches = Vec::new();
        // open[h] = probability of h heads so far without having finished
        let mut open = vec![1.0f64];
        for (f, &p) in env.strengths().iter().enumerate() {
            let flips = f as u64 + 1;
            let mut next = vec![0.0; open.len() + 1];
            for (h, &w) in open.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let h = h as u64;
                if h + 1 == target {
                    branches.push(Branch {
                        weight: w * p,
                        tails: flips - h - 1,
                        heads_left: 0,
                    });
                } else {
                    next[h as usize + 1] += w * p;
                }
                next[h as usize] += w * (1.0 - p);
            }
            next.truncate(target as usize);
            open = next;
        }
        let cookies = env.cookies() as u64;
        for (h, &w) in open.iter().enumerate() {
            if w > 0.0 {
                let h = h as u64;
                branches.push(Branch {
                    weight: w,
                    tails: cookies - h,
                    heads_left: target - h,
                });
            }
        }
        Self {
            branches,
            defect: 0.0,
        }
    }

    fn base_pmf(&self, j: u64) -> f64 {
        self.branches
            .iter()
            .map(|b| match b.heads_left {
                0 => {
                    if b.tails == j {
                        b.weight
                    } else {
                        0.0
                    }
                }
                r => {
                    if j >= b.tails {
                        b.weight * fair_neg_binomial_pmf(j - b.tails, r)
                    } else {
                        0.0
                    }
                }
            })
            .sum()
    }

    /// `P(F = j)`.
    pub fn pmf(&self, j: u64) -> f64 {
        let base = self.base_pmf(j);
        if self.defect == 0.0 {
            return base;
        }
        match j {
            0 => base * (1.0 - self.defect),
            1 => base + self.defect * self.base_pmf(0),
            _ => base,
        }
    }

    /// `P(F > j)`.
    pub fn upper_tail(&self, j: u64) -> f64 {
        let base: f64 = self
            .branches
            .iter()
            .map(|b| match b.heads_left {
                0 => {
                    if b.tails > j {
                        b.weight
                    } else {
                        0.0
                    }
                }
                r => b.weight * neg_binomial_upper_tail(j as i64 - b.tails as i64, r, 0.5),
            })
            .sum();
        if j == 0 && self.defect != 0.0 {
            base + self.defect * self.base_pmf(0)
        } else {
            base
        }
    }

    /// `E[F; F > j]`.
    pub fn upper_tail_mean(&self, j: u64) -> f64 {
        let base: f64 = self
            .branches
            .iter()
            .map(|b| match b.heads_left {
                0 => {
                    if b.tails > j {
                        b.weight * b.tails as f64
                    } else {
                        0.0
                    }
                }
                r => {
                    // F = t + X with X negative binomial; x P_r(x) = r P_{r+1}(x - 1)
                    let u = j as i64 - b.tails as i64;
                    let t = b.tails as f64;
                    b.weight
                        * (t * neg_binomial_upper_tail(u, r, 0.5)
                            + r as f64 * neg_binomial_upper_tail(u - 1, r + 1, 0.5))
                }
            })
            .sum();
        if j == 0 && self.defect != 0.0 {
            base + self.defect * self.base_pmf(0)
        } else {
            base
        }
    }

    /// `E[s^F; F > j]` for `s` in `[0, 1]`.
    pub fn upper_tail_pgf(&self, j: u64, s: f64) -> f64 {
        let base: f64 = self
            .branches
            .iter()
            .map(|b| match b.heads_left {
                0 => {
                    if b.tails > j {
                        b.weight * s.powi(b.tails as i32)
                    } else {
                        0.0
                    }
                }
                r => {
                    // s^x P_r(x) = (2 - s)^{-r} P(x) for a coin with head probability (2 - s) / 2
                    let u = j as i64 - b.tails as i64;
                    b.weight
                        * s.powi(b.tails as i32)
                        * (2.0 - s).powi(-(r as i32))
                        * neg_binomial_upper_tail(u, r, (2.0 - s) / 2.0)
                }
            })
            .sum();
        if j == 0 && self.defect != 0.0 {
            base + self.defect * self.base_pmf(0) * s
        } else {
            base
        }
    }
}

/// Transition kernel of the backward branching process with a shared memo.
#[derive(Debug)]
pub struct TransitionKernel {
    env: CookieEnvironment,
    defect: f64,
    memo: RwLock<HashMap<(u64, u64), f64>>,
}

impl Clone for TransitionKernel {
    fn clone(&self) -> Self {
        Self {
            env: self.env.clone(),
            defect: self.defect,
            memo: RwLock::new(HashMap::new()),
        }
    }
}

impl TransitionKernel {
    pub fn new(env: CookieEnvironment) -> Self {
        Self {
            env,
            defect: 0.0,
            memo: RwLock::new(HashMap::new()),
        }
    }

    /// A deliberately wrong kernel: in every row a fraction `defect` of the
    /// mass at `j = 0` is moved to `j = 1`. Rows stay stochastic, so solvers
    /// run normally and only consistency checks can notice.
    pub fn corrupted(env: CookieEnvironment, defect: f64) -> Self {
        Self {
            env,
            defect: defect.clamp(0.0, 1.0),
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn env(&self) -> &CookieEnvironment {
        &self.env
    }

    pub fn is_corrupted(&self) -> bool {
        self.defect != 0.0
    }

    pub fn row_law(&self, i: u64) -> RowLaw {
        let mut law = RowLaw::new(&self.env, i);
        law.defect = self.defect;
        law
    }

    /// `p(i, j)`, memoized.
    pub fn transition_prob(&self, i: u64, j: u64) -> f64 {
        if let Some(&v) = self.memo.read().expect("kernel memo poisoned").get(&(i, j)) {
            return v;
        }
        let v = self.row_law(i).pmf(j);
        self.memo
            .write()
            .expect("kernel memo poisoned")
            .insert((i, j), v);
        v
    }

    /// `p(i, 0), ..., p(i, len - 1)` without touching the memo.
    pub fn row(&self, i: u64, len: usize) -> Vec<f64> {
        let law = self.row_law(i);
        (0..len as u64).map(|j| law.pmf(j)).collect()
    }

    /// `sum_{j > last} p(i, j)`.
    pub fn row_tail_mass(&self, i: u64, last: u64) -> f64 {
        self.row_law(i).upper_tail(last)
    }

    /// `E_k[Z_1]`. Rows `k >= M - 1` use the closed form `k + 1 - delta`.
    pub fn mean_next(&self, k: u64) -> f64 {
        if !self.is_corrupted() && k + 1 >= self.env.cookies() as u64 {
            k as f64 + 1.0 - self.env.delta()
        } else {
            self.series_mean(k)
        }
    }

    /// `sum_j j p(k, j)`, summed term by term until the remaining mass drops
    /// below [`SERIES_TAIL_CUTOFF`] and closed with the exact tail moment.
    pub fn series_mean(&self, k: u64) -> f64 {
        let law = self.row_law(k);
        let mut total = 0.0;
        let mut remaining = 1.0;
        let mut j = 0u64;
        loop {
            let p = law.pmf(j);
            total += j as f64 * p;
            remaining -= p;
            if (remaining < 1e-12 || j % 64 == 63) && law.upper_tail(j) < SERIES_TAIL_CUTOFF {
                return total + law.upper_tail_mean(j);
            }
            j += 1;
        }
    }

    /// `E_k[s^{Z_1}]` for `s` in `[0, 1]`.
    pub fn pgf_next(&self, k: u64, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(ErwError::InvalidArgument(format!(
                "generating function argument {s} outside [0, 1]"
            )));
        }
        let law = self.row_law(k);
        let mut total = 0.0;
        let mut power = 1.0;
        let mut remaining = 1.0;
        let mut j = 0u64;
        loop {
            let p = law.pmf(j);
            total += power * p;
            remaining -= p;
            if (remaining < 1e-12 || j % 64 == 63) && law.upper_tail(j) < SERIES_TAIL_CUTOFF {
                return Ok(total + law.upper_tail_pgf(j, s));
            }
            power *= s;
            j += 1;
        }
    }
}

/// Free-function form of [`TransitionKernel::transition_prob`].
pub fn transition_prob(kernel: &TransitionKernel, i: u64, j: u64) -> f64 {
    kernel.transition_prob(i, j)
}

/// Free-function form of [`TransitionKernel::mean_next`].
pub fn mean_next(kernel: &TransitionKernel, k: u64) -> f64 {
    kernel.mean_next(k)
}

/// Free-function form of [`TransitionKernel::pgf_next`].
pub fn pgf_next(kernel: &TransitionKernel, k: u64, s: f64) -> Result<f64> {
    kernel.pgf_next(k, s)
}

/// Transition probabilities for three equal cookies of strength `p`, from
/// the explicit matrix and binomial formula. Used as an oracle for
/// [`TransitionKernel::transition_prob`].
pub fn symmetric_closed_form(p: f64, i: u64, j: u64) -> f64 {
    let q = 1.0 - p;
    if i <= 2 && j <= 2 {
        return match (i, j) {
            (0, 0) => p,
            (0, 1) => p * q,
            (0, 2) => p * q * q,
            (1, 0) => p * p,
            (1, 1) => 2.0 * p * p * q,
            (1, 2) => 1.5 * p * q * q,
            (2, 0) => p * p * p,
            (2, 1) => 1.5 * p * p * q,
            _ => 0.75 * (p * q * q + p * p * q),
        };
    }
    let (i, j) = (i as i64, j as i64);
    let n = i + j - 3;
    let bracket = binomial(n, i - 3) * p.powi(3)
        + binomial(n, j - 3) * q.powi(3)
        + 3.0 * binomial(n, i - 2) * p * p * q
        + 3.0 * binomial(n, j - 2) * p * q * q;
    bracket * 0.5f64.powi((i + j - 2) as i32)
}

/// A sampled trajectory `Z_0, Z_1, ...` of the branching process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainPath {
    pub states: Vec<u64>,
    pub seed: u64,
}

impl ChainPath {
    /// Average of `Z_1, ..., Z_n` (the starting state is excluded).
    pub fn running_mean(&self) -> f64 {
        let tail = &self.states[1..];
        tail.iter().map(|&z| z as f64).sum::<f64>() / tail.len() as f64
    }
}

/// Samples `steps` transitions from `z0` by flipping the coins explicitly:
/// from state `z` the next state is the number of tails before the
/// `(z + 1)`-st head.
pub fn simulate_chain(kernel: &TransitionKernel, z0: u64, steps: usize, seed: u64) -> ChainPath {
    let env = kernel.env();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(z0);
    let mut z = z0;
    for _ in 0..steps {
        let mut heads = 0u64;
        let mut tails = 0u64;
        let mut flip = 0usize;
        while heads <= z {
            let p = env.strengths().get(flip).copied().unwrap_or(0.5);
            if rng.random::<f64>() < p {
                heads += 1;
            } else {
                tails += 1;
            }
            flip += 1;
        }
        z = tails;
        states.push(z);
    }
    ChainPath { states, seed }
}
