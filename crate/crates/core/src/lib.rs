//! Excited (cookie) random walks on the integers: classification, direct
//! simulation, the backward branching process, its stationary law, and
//! explicit speed bounds for three cookies per site.

pub mod branching;
pub mod cli;
pub mod environment;
pub mod error;
pub mod numeric;
pub mod output;
pub mod speed_bounds;
pub mod stationary;
pub mod walker;

pub use branching::{simulate_chain, ChainPath, RowLaw, TransitionKernel};
pub use environment::{Classification, CookieEnvironment, SpeedSign, Transience};
pub use error::{ErwError, Result};
pub use speed_bounds::{
    abc_coefficients, f_coefficients, maximize_gap, pi0_bracket, speed_interval, symmetric_interval,
    AbcCoefficients, FCoefficients, GapSearchResult, SearchRegion, SpeedBounds,
};
pub use stationary::{
    check_abc, check_genabc, solve_stationary, solve_stationary_with, SolveOptions, StationarySolution,
    TruncationScheme,
};
pub use walker::{
    estimate_speed, hitting_time, simulate_walk, step_probability, HittingOutcome, MonteCarloEstimate,
    WalkResult,
};
