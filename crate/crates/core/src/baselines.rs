//! Benchmark schemes: fixed power-splitting ratio, fixed subcarrier
//! assignment (round robin) and no artificial noise. All reuse the dual loop
//! with a restricted per-subcarrier feasible set, so the jointly optimized
//! scheme dominates each of them.

use std::fmt;
use std::str::FromStr;

use crate::duals::{solve, solve_with_policy, AssignPolicy, SolveReport, SolverSettings, SplitPolicy};
use crate::error::{Error, Result};
use crate::model::Instance;

/// Scheme selector. The string form is `proposed`, `alpha:<value>`, `fsa`
/// or `noan`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Joint optimization of power, split and assignment.
    Proposed,
    /// Split pinned to one value everywhere; power and assignment optimized.
    FixedAlpha(f64),
    /// Round-robin subcarrier assignment; power and split optimized.
    FixedAssignment,
    /// No artificial noise (split pinned to zero).
    NoAn,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(text: &str) -> Result<Scheme> {
        match text {
            "proposed" => Ok(Scheme::Proposed),
            "fsa" => Ok(Scheme::FixedAssignment),
            "noan" => Ok(Scheme::NoAn),
            other => {
                if let Some(value) = other.strip_prefix("alpha:") {
                    let alpha: f64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad split value in '{other}'")))?;
                    if !(0.0..=1.0).contains(&alpha) {
                        return Err(Error::Config(format!(
                            "split {alpha} outside [0, 1] in '{other}'"
                        )));
                    }
                    Ok(Scheme::FixedAlpha(alpha))
                } else {
                    Err(Error::Config(format!(
                        "unknown scheme '{other}' (expected proposed | alpha:<value> | fsa | noan)"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Proposed => write!(f, "proposed"),
            Scheme::FixedAlpha(a) => write!(f, "alpha:{a}"),
            Scheme::FixedAssignment => write!(f, "fsa"),
            Scheme::NoAn => write!(f, "noan"),
        }
    }
}

/// Dual loop with the split pinned to `alpha` on every subcarrier.
pub fn solve_fixed_alpha(
    instance: &Instance,
    alpha: f64,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::Config(format!("fixed split {alpha} outside [0, 1]")));
    }
    solve_with_policy(instance, settings, SplitPolicy::Fixed(alpha), AssignPolicy::BestIr)
}

/// Dual loop with subcarrier `n` preassigned to IR `n mod num_irs`; power and
/// split still jointly optimized.
pub fn solve_fixed_assignment(instance: &Instance, settings: &SolverSettings) -> Result<SolveReport> {
    solve_with_policy(instance, settings, SplitPolicy::Optimized, AssignPolicy::RoundRobin)
}

/// Dual loop without artificial noise: split forced to zero, so a subcarrier
/// carries secrecy only where the legitimate gain beats the eavesdropper's.
pub fn solve_no_an(instance: &Instance, settings: &SolverSettings) -> Result<SolveReport> {
    solve_with_policy(instance, settings, SplitPolicy::Fixed(0.0), AssignPolicy::BestIr)
}

/// Runs the selected scheme.
pub fn solve_scheme(
    instance: &Instance,
    scheme: Scheme,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    match scheme {
        Scheme::Proposed => solve(instance, settings),
        Scheme::FixedAlpha(alpha) => solve_fixed_alpha(instance, alpha, settings),
        Scheme::FixedAssignment => solve_fixed_assignment(instance, settings),
        Scheme::NoAn => solve_no_an(instance, settings),
    }
}
