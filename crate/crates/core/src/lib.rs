//! Weighted-sum secrecy-rate maximization for OFDMA downlinks that serve
//! information receivers and energy receivers from the same signal.
//!
//! Artificial noise is injected per subcarrier through a power split the
//! intended receiver can remove but eavesdroppers cannot. The solver runs a
//! Lagrangian dual decomposition: per-subcarrier joint (power, split)
//! optimization in closed form, winner-take-all subcarrier assignment, and
//! projected subgradient updates on the harvest and power multipliers,
//! followed by a deterministic primal repair. Benchmark schemes (fixed
//! split, fixed assignment, no artificial noise) and brute-force oracles are
//! included for verification.

pub mod baselines;
pub mod duals;
pub mod error;
pub mod model;
pub mod oracle;
pub mod roots;
pub mod secrecy;

pub use baselines::{solve_fixed_alpha, solve_fixed_assignment, solve_no_an, solve_scheme, Scheme};
pub use duals::{
    assign_subcarriers, optimize_subcarrier, solve, subcarrier_candidates, subgradient_step,
    DualVariables, IterationStat, SolveReport, SolverSettings,
};
pub use error::{Error, Result};
pub use model::{
    dbm_to_watts, eavesdropper_gains, generate_channels, watts_to_dbm, ChannelRealization,
    Instance, SystemConfig,
};
pub use oracle::{exhaustive_search, grid_search_subcarrier, GridSpec};
pub use roots::{
    joint_stationarity_quadratic, marginal_power_value, optimal_split, power_stationarity_cubic,
    real_roots_cubic, real_roots_quadratic, CubicCoeffs, QuadCoeffs,
};
pub use secrecy::{
    eve_rate, harvested_power, info_rate, secrecy_rate, secrecy_threshold, weighted_sum_rate,
    Allocation, Threshold,
};
