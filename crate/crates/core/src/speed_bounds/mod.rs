//! Explicit speed bounds for three cookies per site.
//!
//! For `M = 3` and `delta > 2` the speed can be written as
//!
//! ```text
//! V = f1 / (f2 + f3 * pi(0))
//! ```
//!
//! where `pi` is the stationary law of the backward branching process and
//! `f1, f2, f3` are polynomials in the cookie strengths. The map
//! `x -> f1 / (f2 + f3 x)` is increasing on `[0, 1]` (`f1 > 0`, `f3 < 0`),
//! so any bracket on `pi(0)` becomes a bracket on `V`. The bracket used here
//! comes from the mean-balance relation `a pi(0) + b pi(1) = c` combined with
//! the first two terms of the stationarity equations at states 0 and 1.

mod gap;

pub use gap::{maximize_gap, GapSearchResult, GridPoint, RegionShape, SearchRegion, REGION_EDGE};

use serde::Serialize;

use crate::environment::CookieEnvironment;
use crate::error::{ErwError, Result};

/// Coefficients of the linear relation `a pi(0) + b pi(1) = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbcCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl FCoefficients {
    /// `f1 / (f2 + f3 x)`: the speed as a function of `pi(0) = x`.
    pub fn speed_at(&self, pi0: f64) -> f64 {
        self.f1 / (self.f2 + self.f3 * pi0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedBounds {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub pi0_lower: f64,
    pub pi0_upper: f64,
    pub v_lower: f64,
    pub v_upper: f64,
}

impl SpeedBounds {
    pub fn gap(&self) -> f64 {
        self.v_upper - self.v_lower
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.v_lower - slack && v <= self.v_upper + slack
    }
}

fn three_cookies(env: &CookieEnvironment) -> Result<(f64, f64, f64)> {
    match env.strengths() {
        &[p1, p2, p3] => Ok((p1, p2, p3)),
        other => Err(ErwError::Domain {
            delta: env.delta(),
            reason: format!("explicit bounds need exactly 3 cookies, got {}", other.len()),
        }),
    }
}

fn require_ballistic(env: &CookieEnvironment) -> Result<()> {
    let delta = env.delta();
    if delta > 2.0 {
        Ok(())
    } else {
        Err(ErwError::Domain {
            delta,
            reason: "speed bounds require delta > 2 (the speed is zero otherwise)".into(),
        })
    }
}

pub fn abc_coefficients(env: &CookieEnvironment) -> Result<AbcCoefficients> {
    let (p1, p2, _) = three_cookies(env)?;
    let (d2, d3) = (env.cookie_drift(2), env.cookie_drift(3));
    Ok(AbcCoefficients {
        a: p1 * (d2 + d3) + p2 * d3 * (1.0 - p1),
        b: d3 * p1 * p2,
        c: env.delta() - 1.0,
    })
}

pub fn f_coefficients(env: &CookieEnvironment) -> Result<FCoefficients> {
    let (p1, p2, p3) = three_cookies(env)?;
    let sum = p1 + p2 + p3;
    Ok(FCoefficients {
        f1: 2.0 * sum - 5.0,
        f2: 9.0 + 8.0 * (p1 * p2 + p1 * p3 + p2 * p3) - 10.0 * sum,
        f3: 2.0 * (2.0 * p3 - 1.0) * (p1 + p2 - 3.0 * p1 * p2),
    })
}

/// Lower and upper bound on `pi(0)`.
///
/// The upper bound uses `p(0, 1) = (1 - p1) p2`, the one-step probability of
/// a single tail before the first head.
pub fn pi0_bracket(env: &CookieEnvironment) -> Result<(f64, f64)> {
    let (p1, p2, p3) = three_cookies(env)?;
    require_ballistic(env)?;
    let AbcCoefficients { a, b, c } = abc_coefficients(env)?;
    let p00 = p1;
    let p10 = p1 * p2;
    let p01 = (1.0 - p1) * p2;
    let p11 = (1.0 - p1) * p2 * p3 + p1 * (1.0 - p2) * p3;
    let lower = c * p10 / (b * (1.0 - p00) + a * p10);
    let upper = c / (b * p01 / (1.0 - p11) + a);
    Ok((lower, upper))
}

pub fn speed_interval(env: &CookieEnvironment) -> Result<SpeedBounds> {
    let (pi0_lower, pi0_upper) = pi0_bracket(env)?;
    let f = f_coefficients(env)?;
    Ok(SpeedBounds {
        f1: f.f1,
        f2: f.f2,
        f3: f.f3,
        pi0_lower,
        pi0_upper,
        v_lower: f.speed_at(pi0_lower),
        v_upper: f.speed_at(pi0_upper),
    })
}

/// The two bounds for three equal cookies of strength `p`, as explicit
/// rational functions of `p`.
pub fn symmetric_interval(p: f64) -> Result<(f64, f64)> {
    if !(p > 5.0 / 6.0 && p <= 1.0) {
        return Err(ErwError::Domain {
            delta: 6.0 * p - 3.0,
            reason: format!("symmetric bounds need p in (5/6, 1], got {p}"),
        });
    }
    let lower = (6.0 * p - 5.0) * (p * p - 2.0 * p - 1.0)
        / poly(p, &[-9.0, 28.0, -3.0, -42.0, 24.0]);
    let upper = (6.0 * p - 5.0) * poly(p, &[-3.0, 1.0, 5.0, -7.0, 2.0])
        / poly(p, &[-11.0, 51.0, -53.0, -61.0, 180.0, -156.0, 48.0]);
    Ok((lower, upper))
}

/// Horner evaluation, coefficients in increasing degree.
fn poly(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
