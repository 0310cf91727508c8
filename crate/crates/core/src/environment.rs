//! Cookie environments and the drift-based classification of the walk.
//!
//! Every site of the integer line starts with the same stack of `M` cookies.
//! On its `j`-th visit to a site (`j <= M`) the walker steps right with
//! probability `p_j`; after the stack is exhausted it steps right with
//! probability one half. The single number
//!
//! ```text
//! delta = sum_j (2 p_j - 1)
//! ```
//!
//! decides recurrence/transience (threshold `|delta| = 1`) and whether the
//! limiting speed is non-zero (threshold `|delta| = 2`).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{ErwError, Result};

/// Parameters of a one-dimensional excited random walk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CookieEnvironment {
    strengths: Vec<f64>,
    strict: bool,
}

impl CookieEnvironment {
    /// Builds an environment from the cookie strengths `p_1, ..., p_M`.
    ///
    /// Strengths on the closed interval `[0, 1]` are accepted; [`is_strict`]
    /// reports whether all of them lie in the open interval.
    ///
    /// [`is_strict`]: CookieEnvironment::is_strict
    pub fn new(strengths: Vec<f64>) -> Result<Self> {
        if strengths.is_empty() {
            return Err(ErwError::InvalidEnvironment(
                "at least one cookie is required".into(),
            ));
        }
        if let Some((j, p)) = strengths
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(ErwError::InvalidEnvironment(format!(
                "cookie {} has strength {p}, outside [0, 1]",
                j + 1
            )));
        }
        let strict = strengths.iter().all(|&p| p > 0.0 && p < 1.0);
        Ok(Self { strengths, strict })
    }

    /// `M` identical cookies of strength `p`.
    pub fn uniform(cookies: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; cookies])
    }

    /// Number of cookies per site, `M`.
    pub fn cookies(&self) -> usize {
        self.strengths.len()
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Strength of the `j`-th cookie, one-based.
    pub fn strength(&self, j: usize) -> f64 {
        self.strengths[j - 1]
    }

    /// True when every strength lies strictly inside `(0, 1)`.
    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Drift of the `j`-th cookie, `2 p_j - 1` (one-based).
    pub fn cookie_drift(&self, j: usize) -> f64 {
        2.0 * self.strength(j) - 1.0
    }

    /// Total drift stored in one cookie stack.
    pub fn delta(&self) -> f64 {
        self.strengths.iter().map(|p| 2.0 * p - 1.0).sum()
    }

    pub fn classify(&self) -> Classification {
        Classification::from_delta(self.delta())
    }

    /// Reflection `p_j -> 1 - p_j`, which maps the walk to its negative.
    pub fn mirror(&self) -> Self {
        Self {
            strengths: self.strengths.iter().map(|p| 1.0 - p).collect(),
            strict: self.strict,
        }
    }

    /// Speed of the simple random walk that always uses the strongest cookie.
    pub fn trivial_speed_bound(&self) -> f64 {
        self.strengths
            .iter()
            .map(|p| 2.0 * p - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Free-function form of [`CookieEnvironment::delta`].
pub fn delta(env: &CookieEnvironment) -> f64 {
    env.delta()
}

/// Free-function form of [`CookieEnvironment::classify`].
pub fn classify(env: &CookieEnvironment) -> Classification {
    env.classify()
}

/// Free-function form of [`CookieEnvironment::mirror`].
pub fn mirror(env: &CookieEnvironment) -> CookieEnvironment {
    env.mirror()
}

impl FromStr for CookieEnvironment {
    type Err = ErwError;

    /// Parses a comma-separated list such as `"0.9,0.9,0.9"`.
    fn from_str(s: &str) -> Result<Self> {
        let strengths = s
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>().map_err(|_| {
                    ErwError::InvalidEnvironment(format!("cannot parse {tok:?} as a probability"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(strengths)
    }
}

impl fmt::Display for CookieEnvironment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.strengths.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Transience {
    TransientRight,
    TransientLeft,
    Recurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpeedSign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub transience: Transience,
    pub speed_sign: SpeedSign,
}

impl Classification {
    /// Classification as a function of the drift alone. The boundary values
    /// `delta = +-1` are recurrent and `delta = +-2` have zero speed.
    pub fn from_delta(delta: f64) -> Self {
        let transience = if delta > 1.0 {
            Transience::TransientRight
        } else if delta < -1.0 {
            Transience::TransientLeft
        } else {
            Transience::Recurrent
        };
        let speed_sign = if delta > 2.0 {
            SpeedSign::Positive
        } else if delta < -2.0 {
            SpeedSign::Negative
        } else {
            SpeedSign::Zero
        };
        Self {
            transience,
            speed_sign,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn env(s: &str) -> CookieEnvironment {
        s.parse().unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_abs_diff_eq!(env("0.9,0.9,0.9").delta(), 2.4, epsilon = 1e-15);
        assert_eq!(env("0.5,0.5,0.5").delta(), 0.0);
        assert_eq!(env("1,1,1").delta(), 3.0);
    }

    #[test]
    fn classify_examples() {
        let c = env("0.9,0.9,0.9").classify();
        assert_eq!(c.transience, Transience::TransientRight);
        assert_eq!(c.speed_sign, SpeedSign::Positive);

        let c = env("0.5,0.5,0.5").classify();
        assert_eq!(c.transience, Transience::Recurrent);
        assert_eq!(c.speed_sign, SpeedSign::Zero);

        let c = env("0.1,0.1,0.1").classify();
        assert_eq!(c.transience, Transience::TransientLeft);
        assert_eq!(c.speed_sign, SpeedSign::Negative);
    }

    #[test]
    fn boundaries_are_closed() {
        for d in [-2.0, -1.0, 1.0, 2.0] {
            let c = Classification::from_delta(d);
            if d.abs() == 1.0 {
                assert_eq!(c.transience, Transience::Recurrent);
            }
            assert_eq!(c.speed_sign, SpeedSign::Zero);
        }
        // exactly representable: 0.75 * 4 cookies -> delta = 2
        let c = CookieEnvironment::uniform(4, 0.75).unwrap().classify();
        assert_eq!(c.transience, Transience::TransientRight);
        assert_eq!(c.speed_sign, SpeedSign::Zero);
    }

    #[test]
    fn mirror_examples() {
        let m = env("0.9,0.8,0.7").mirror();
        for (a, b) in m.strengths().iter().zip([0.1, 0.2, 0.3]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(env("0.5,0.5,0.5").mirror(), env("0.5,0.5,0.5"));
        let e = env("0.25,0.75,1");
        assert_eq!(e.mirror().mirror(), e);
    }

    #[test]
    fn parsing_and_validation() {
        assert_eq!(env(" 0.9, 0.8 ,0.7").cookies(), 3);
        assert!("0.9,abc".parse::<CookieEnvironment>().is_err());
        assert!("1.2,0.5".parse::<CookieEnvironment>().is_err());
        assert!("-0.1".parse::<CookieEnvironment>().is_err());
        assert!("".parse::<CookieEnvironment>().is_err());
        assert!(CookieEnvironment::new(vec![]).is_err());
        assert!(!env("0.9,1,0.9").is_strict());
        assert!(env("0.9,0.99,0.9").is_strict());
    }

    #[test]
    fn trivial_bound_uses_strongest_cookie() {
        assert_abs_diff_eq!(env("0.9,0.6,0.95").trivial_speed_bound(), 0.9, epsilon = 1e-15);
    }
}
