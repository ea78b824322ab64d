//! Brute-force verifiers, independent of the closed-form solution path:
//! per-subcarrier grid search over (power, split), and exhaustive
//! assignment enumeration with a budget/harvest dynamic program for tiny
//! instances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::secrecy::{secrecy_rate_unchecked, Allocation};

/// Lattice sizes for the brute-force searches. `p_points` doubles as the
/// power-budget discretization of the exhaustive search.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub p_points: usize,
    pub alpha_points: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p_points < 2 || self.alpha_points < 2 {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }
}

/// Split lattice over [0, 1] with 0, 0.5 and 1 present exactly.
fn split_lattice(points: usize) -> Vec<f64> {
    let mut lattice: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect();
    if !lattice.iter().any(|a| *a == 0.5) {
        lattice.push(0.5);
        lattice.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }
    lattice
}

/// Power lattice: zero, then log-spaced points up to the cap. The low end
/// sits three decades below the unit-SNR power of the legitimate channel.
fn power_lattice(gain: f64, eve_gain: f64, noise: f64, cap: f64, points: usize) -> Vec<f64> {
    let anchor = if gain > 0.0 {
        noise / gain
    } else if eve_gain > 0.0 {
        noise / eve_gain
    } else {
        cap
    };
    let lo = (anchor * 1e-3).min(cap * 1e-6).max(f64::MIN_POSITIVE);
    let mut lattice = Vec::with_capacity(points + 1);
    lattice.push(0.0);
    let log_lo = lo.ln();
    let log_hi = cap.ln();
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        lattice.push((log_lo + f * (log_hi - log_lo)).exp());
    }
    *lattice.last_mut().unwrap() = cap;
    lattice
}

/// Exhaustive maximization of `weight * Rs + power_value * p` over the
/// lattice; ties take the smallest power, then the smallest split.
pub fn grid_search_subcarrier(
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
    peak_power: f64,
    grid: &GridSpec,
) -> (f64, f64, f64) {
    let splits = split_lattice(grid.alpha_points);
    let powers = power_lattice(gain, eve_gain, noise, peak_power, grid.p_points);
    let mut best = (0.0, 0.0, 0.0);
    let mut have = false;
    for &p in &powers {
        for &a in &splits {
            let value = if p == 0.0 {
                0.0
            } else {
                weight * secrecy_rate_unchecked(gain, eve_gain, p, a, noise) + power_value * p
            };
            if !have || value > best.2 {
                best = (p, a, value);
                have = true;
            }
            if p == 0.0 {
                break; // every split is equivalent at zero power
            }
        }
    }
    best
}

/// Exhaustive primal optimization for tiny instances: enumerates every
/// subcarrier assignment and, per assignment, maximizes the weighted sum
/// rate over gridded (power, split) with the budget discretized into
/// `grid.p_points` levels. Conservative rounding (power cost up, harvest
/// down) keeps every reported solution truly feasible, so the objective is a
/// valid lower bound on the optimum.
///
/// Supports at most one energy receiver with a positive target; the state
/// space of the harvest dynamic program grows exponentially beyond that.
pub fn exhaustive_search(
    instance: &Instance,
    grid: &GridSpec,
    assignment_limit: usize,
) -> Result<(f64, Allocation)> {
    grid.validate()?;
    let config = &instance.config;
    config.validate()?;
    let k1 = config.num_irs;
    let n = config.num_subcarriers;
    let assignments = (k1 as u128).checked_pow(n as u32).ok_or_else(|| {
        Error::LimitExceeded(format!("{k1}^{n} assignments overflow"))
    })?;
    if assignments > assignment_limit as u128 {
        return Err(Error::LimitExceeded(format!(
            "{assignments} assignments exceed the limit of {assignment_limit}"
        )));
    }
    let positive_targets: Vec<usize> = (0..config.num_ers)
        .filter(|&j| config.harvest_targets[j] > 0.0)
        .collect();
    if positive_targets.len() > 1 {
        return Err(Error::LimitExceeded(
            "exhaustive search supports at most one positive harvest target".into(),
        ));
    }
    let er = positive_targets.first().copied();

    let levels = grid.p_points;
    let delta = config.total_power / levels as f64;
    let per_sc_levels = ((config.peak_power / delta) + 1e-9).floor() as usize;
    let per_sc_levels = per_sc_levels.min(levels);
    let splits = split_lattice(grid.alpha_points);

    // Best achievable weighted rate (and its split) per IR, subcarrier and
    // power level.
    let noise = config.noise_power;
    let mut rate = vec![0.0f64; k1 * n * (per_sc_levels + 1)];
    let mut rate_split = vec![0u16; k1 * n * (per_sc_levels + 1)];
    let idx = |k: usize, sc: usize, l: usize| (k * n + sc) * (per_sc_levels + 1) + l;
    for k in 0..k1 {
        for sc in 0..n {
            let gain = instance.ir_gain(k, sc);
            let eve = instance.eve_gain(k, sc);
            for l in 1..=per_sc_levels {
                let p = l as f64 * delta;
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0u16;
                for (ai, &a) in splits.iter().enumerate() {
                    let r = secrecy_rate_unchecked(gain, eve, p, a, noise);
                    if r > best {
                        best = r;
                        best_a = ai as u16;
                    }
                }
                rate[idx(k, sc, l)] = config.weights[k] * best;
                rate_split[idx(k, sc, l)] = best_a;
            }
        }
    }

    // Harvest level gained per subcarrier power level, floored to the grid.
    let (harvest_levels, target_level, qgain) = match er {
        Some(j) => {
            let target = config.harvest_targets[j];
            let ql = levels;
            let dq = target / ql as f64;
            let mut qgain = vec![0usize; n * (per_sc_levels + 1)];
            for sc in 0..n {
                let g = config.harvest_efficiency[j] * instance.er_gain(j, sc);
                for l in 0..=per_sc_levels {
                    let q = g * l as f64 * delta;
                    qgain[sc * (per_sc_levels + 1) + l] = ((q / dq).floor() as usize).min(ql);
                }
            }
            (ql, ql, qgain)
        }
        None => (0, 0, vec![0usize; n * (per_sc_levels + 1)]),
    };

    let decode = |assignment: usize| -> Vec<usize> {
        let mut a = assignment;
        (0..n)
            .map(|_| {
                let k = a % k1;
                a /= k1;
                k
            })
            .collect()
    };

    // Pass 1: best objective per assignment.
    let objectives: Vec<Option<f64>> = (0..assignments as usize)
        .into_par_iter()
        .map(|assignment| {
            let ks = decode(assignment);
            dp_best_value(
                &ks,
                levels,
                per_sc_levels,
                harvest_levels,
                target_level,
                &rate,
                &qgain,
                idx,
            )
        })
        .collect();
    let mut best: Option<(f64, usize)> = None;
    for (assignment, obj) in objectives.iter().enumerate() {
        if let Some(v) = obj {
            if best.map_or(true, |(bv, _)| *v > bv) {
                best = Some((*v, assignment));
            }
        }
    }
    let Some((objective, assignment)) = best else {
        return Err(Error::Infeasible(
            "harvest target unattainable on the oracle grid".into(),
        ));
    };

    // Pass 2: rebuild the winning allocation with backtracking.
    let ks = decode(assignment);
    let chosen = dp_backtrack(
        &ks,
        levels,
        per_sc_levels,
        harvest_levels,
        target_level,
        &rate,
        &qgain,
        idx,
    )
    .expect("winning assignment is feasible");
    let mut alloc = Allocation::zeros(k1, n);
    for sc in 0..n {
        let k = ks[sc];
        let l = chosen[sc];
        alloc.assign[k][sc] = 1;
        alloc.power[k][sc] = l as f64 * delta;
        alloc.split[k][sc] = splits[rate_split[idx(k, sc, l)] as usize];
    }
    Ok((objective, alloc))
}

/// Budget/harvest dynamic program over one assignment; returns the best
/// weighted sum rate with the harvest target met, if any.
#[allow(clippy::too_many_arguments)]
fn dp_best_value(
    ks: &[usize],
    levels: usize,
    per_sc_levels: usize,
    harvest_levels: usize,
    target_level: usize,
    rate: &[f64],
    qgain: &[usize],
    idx: impl Fn(usize, usize, usize) -> usize,
) -> Option<f64> {
    let qdim = harvest_levels + 1;
    let mut dp = vec![f64::NEG_INFINITY; (levels + 1) * qdim];
    dp[0] = 0.0;
    let mut next = dp.clone();
    for (sc, &k) in ks.iter().enumerate() {
        next.fill(f64::NEG_INFINITY);
        for b in 0..=levels {
            for q in 0..qdim {
                let cur = dp[b * qdim + q];
                if cur == f64::NEG_INFINITY {
                    continue;
                }
                for l in 0..=per_sc_levels.min(levels - b) {
                    let nb = b + l;
                    let nq = (q + qgain[sc * (per_sc_levels + 1) + l]).min(harvest_levels);
                    let val = cur + rate[idx(k, sc, l)];
                    let slot = &mut next[nb * qdim + nq];
                    if val > *slot {
                        *slot = val;
                    }
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    let mut best = f64::NEG_INFINITY;
    for b in 0..=levels {
        let v = dp[b * qdim + target_level];
        if v > best {
            best = v;
        }
    }
    (best > f64::NEG_INFINITY).then_some(best)
}

/// Same dynamic program with per-layer choice tables; returns the power
/// level chosen on each subcarrier for one best solution.
#[allow(clippy::too_many_arguments)]
fn dp_backtrack(
    ks: &[usize],
    levels: usize,
    per_sc_levels: usize,
    harvest_levels: usize,
    target_level: usize,
    rate: &[f64],
    qgain: &[usize],
    idx: impl Fn(usize, usize, usize) -> usize,
) -> Option<Vec<usize>> {
    let n = ks.len();
    let qdim = harvest_levels + 1;
    let states = (levels + 1) * qdim;
    let mut dp = vec![f64::NEG_INFINITY; states];
    dp[0] = 0.0;
    // choice[sc][state] = (power level, previous harvest level)
    let mut choice = vec![vec![(u16::MAX, u16::MAX); states]; n];
    let mut next = dp.clone();
    for (sc, &k) in ks.iter().enumerate() {
        next.fill(f64::NEG_INFINITY);
        for b in 0..=levels {
            for q in 0..qdim {
                let cur = dp[b * qdim + q];
                if cur == f64::NEG_INFINITY {
                    continue;
                }
                for l in 0..=per_sc_levels.min(levels - b) {
                    let nb = b + l;
                    let nq = (q + qgain[sc * (per_sc_levels + 1) + l]).min(harvest_levels);
                    let val = cur + rate[idx(k, sc, l)];
                    let state = nb * qdim + nq;
                    if val > next[state] {
                        next[state] = val;
                        choice[sc][state] = (l as u16, q as u16);
                    }
                }
            }
        }
        std::mem::swap(&mut dp, &mut next);
    }
    let mut best_state = None;
    let mut best = f64::NEG_INFINITY;
    for b in 0..=levels {
        let state = b * qdim + target_level;
        if dp[state] > best {
            best = dp[state];
            best_state = Some(state);
        }
    }
    let mut state = best_state?;
    let mut picks = vec![0usize; n];
    for sc in (0..n).rev() {
        let (l, prev_q) = choice[sc][state];
        assert_ne!(l, u16::MAX, "backtrack hit an unreachable state");
        picks[sc] = l as usize;
        let b = state / qdim - l as usize;
        state = b * qdim + prev_q as usize;
    }
    Some(picks)
}
