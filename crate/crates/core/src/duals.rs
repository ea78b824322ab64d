//! Lagrangian dual-decomposition solver: per-subcarrier joint power/split
//! optimization over a closed-form candidate set, subcarrier assignment,
//! projected subgradient updates on the multipliers, and primal repair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, SystemConfig};
use crate::roots::{
    joint_stationarity_quadratic, marginal_power_value, optimal_split, optimal_split_unclamped,
    power_stationarity_cubic, real_roots_cubic, real_roots_quadratic,
};
use crate::secrecy::{
    harvested_all, secrecy_rate_unchecked, secrecy_threshold, weighted_sum_rate, Allocation,
    Threshold,
};

/// Lagrange multipliers: one per energy-receiver harvest constraint plus one
/// for the total power budget. Always elementwise nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVariables {
    pub lambdas: Vec<f64>,
    pub gamma: f64,
}

/// Reference magnitudes of the multipliers, derived from the configuration.
///
/// The power multiplier sits near the aggregate marginal rate per watt,
/// `N * mean(w) / (ln2 * P_max)`. A harvest multiplier prices harvested watts,
/// which cost roughly `1 / (zeta * mean ER path gain)` transmit watts each.
pub(crate) fn dual_scales(config: &SystemConfig) -> (f64, Vec<f64>) {
    let mean_weight = config.weights.iter().sum::<f64>() / config.num_irs as f64;
    let gamma_ref = config.num_subcarriers as f64 * mean_weight
        / (std::f64::consts::LN_2 * config.total_power);
    let lambda_refs = (0..config.num_ers)
        .map(|j| {
            let mean_gain = mean_pathloss_gain(config, config.er_radius_m);
            gamma_ref / (config.harvest_efficiency[j] * mean_gain).max(1e-300)
        })
        .collect();
    (gamma_ref, lambda_refs)
}

/// Expected path-loss gain for a receiver placed uniformly in
/// `(MIN_DISTANCE_M, radius]` (unit-mean fading integrates out).
fn mean_pathloss_gain(config: &SystemConfig, radius: f64) -> f64 {
    let lo = crate::model::MIN_DISTANCE_M;
    let nu = config.pathloss_exponent;
    let ref_gain = 10f64.powf(-config.pathloss_ref_db / 10.0);
    if radius <= lo {
        return ref_gain * lo.powf(-nu);
    }
    // mean of d^-nu over (lo, radius]
    let mean = if (nu - 1.0).abs() < 1e-9 {
        (radius / lo).ln() / (radius - lo)
    } else {
        (lo.powf(1.0 - nu) - radius.powf(1.0 - nu)) / ((nu - 1.0) * (radius - lo))
    };
    ref_gain * mean
}

impl DualVariables {
    /// Warm start near the reference scales; harvest multipliers start small
    /// and nonzero so a binding constraint moves them immediately, while a
    /// slack one is projected back to zero on the first step.
    pub fn init(config: &SystemConfig) -> DualVariables {
        let (gamma_ref, lambda_refs) = dual_scales(config);
        DualVariables {
            lambdas: lambda_refs
                .iter()
                .zip(&config.harvest_targets)
                .map(|(l, &q)| if q > 0.0 { 1e-2 * l } else { 0.0 })
                .collect(),
            gamma: gamma_ref,
        }
    }

    pub fn non_negative(&self) -> bool {
        self.gamma >= 0.0 && self.lambdas.iter().all(|l| *l >= 0.0)
    }
}

/// Knobs of the subgradient loop. Step sizes are the iteration-0 values; the
/// effective step at iteration `t` is the base divided by
/// `1 + t / step_decay_iters`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Base harvest step sizes, one per energy receiver.
    pub step_lambda: Vec<f64>,
    /// Base total-power step size.
    pub step_gamma: f64,
    /// Diminishing-step time constant, iterations.
    pub step_decay_iters: f64,
    /// Relative tolerance on dual-variable change for convergence.
    pub tol_dual: f64,
    /// Relative tolerance on constraint violation for convergence and repair.
    pub tol_feas: f64,
    /// Relative tolerance for merging nearby power candidates.
    pub candidate_dedup_tol: f64,
}

impl SolverSettings {
    /// Diminishing steps sized so one iteration at 100% constraint violation
    /// moves each multiplier by a quarter of its reference scale.
    pub fn defaults_for(config: &SystemConfig) -> SolverSettings {
        let (gamma_ref, lambda_refs) = dual_scales(config);
        let fallback_scale = (config.total_power * 1e-4).max(1e-12);
        SolverSettings {
            max_iters: 600,
            step_lambda: lambda_refs
                .iter()
                .zip(&config.harvest_targets)
                .map(|(l, &q)| 0.25 * l / q.max(fallback_scale))
                .collect(),
            step_gamma: 0.25 * gamma_ref / config.total_power,
            step_decay_iters: 50.0,
            tol_dual: 1e-4,
            tol_feas: 1e-3,
            candidate_dedup_tol: 1e-9,
        }
    }

    pub fn validate(&self, num_ers: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if self.step_lambda.len() != num_ers {
            return Err(Error::Config(format!(
                "step_lambda has {} entries, expected {num_ers}",
                self.step_lambda.len()
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.step_lambda.iter().all(|&s| positive(s))
            || !positive(self.step_gamma)
            || !positive(self.step_decay_iters)
            || !positive(self.tol_dual)
            || !positive(self.tol_feas)
            || !positive(self.candidate_dedup_tol)
        {
            return Err(Error::Config("solver settings must all be positive".into()));
        }
        Ok(())
    }
}

/// One iteration of the dual loop, for convergence auditing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationStat {
    /// Dual function value at this iteration's multipliers.
    pub dual_value: f64,
    /// Weighted sum rate of this iteration's (possibly infeasible) allocation.
    pub primal_objective: f64,
    /// Total-power overshoot in watts (0 when within budget).
    pub power_violation_w: f64,
    /// Worst harvest shortfall in watts (0 when all targets met).
    pub harvest_violation_w: f64,
}

/// Final solver output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub allocation: Allocation,
    /// Weighted sum secrecy rate of the repaired allocation, bits/s/Hz.
    pub objective: f64,
    /// Harvested power per energy receiver, watts.
    pub harvested: Vec<f64>,
    /// Tightest dual bound seen across iterations.
    pub dual_value: f64,
    pub duality_gap_rel: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feasible: bool,
    pub final_duals: DualVariables,
    pub trace: Vec<IterationStat>,
}

/// How the split is chosen per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum SplitPolicy {
    Optimized,
    Fixed(f64),
}

/// How subcarriers are matched to information receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum AssignPolicy {
    BestIr,
    RoundRobin,
}

/// Rate-optimal split for endpoint candidates; 0 when the closed form does
/// not apply (zero power, dead channel or no eavesdropper).
fn best_split_for(gain: f64, eve_gain: f64, power: f64, noise: f64) -> f64 {
    if power <= 0.0 || gain <= 0.0 || eve_gain <= 0.0 {
        0.0
    } else {
        optimal_split(gain, eve_gain, power, noise).expect("inputs checked positive")
    }
}

fn push_candidate(cands: &mut Vec<(f64, f64)>, power: f64, split: f64) {
    if power.is_finite() && split.is_finite() {
        cands.push((power, split));
    }
}

fn dedup_candidates(cands: &mut Vec<(f64, f64)>, rel_tol: f64) {
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup_by(|a, b| {
        (a.0 - b.0).abs() <= rel_tol * (a.0.abs() + b.0.abs()) + 1e-300
            && (a.1 - b.1).abs() <= rel_tol
    });
}

/// Candidate (power, split) pairs for one subcarrier under multiplier price
/// `power_value`: stationary powers of the boundary-split cubics, stationary
/// powers of the split-eliminated quadratic paired with their interior
/// optimal split, the zero-secrecy boundary powers when transmit power has
/// nonnegative net value, and the endpoints. Always contains `(0, 0)`.
pub fn subcarrier_candidates(
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
    peak_power: f64,
    dedup_tol: f64,
) -> Vec<(f64, f64)> {
    let mut cands = vec![(0.0, 0.0)];
    push_candidate(
        &mut cands,
        peak_power,
        best_split_for(gain, eve_gain, peak_power, noise),
    );
    if gain > 0.0 || eve_gain > 0.0 {
        for split in [0.0, 1.0] {
            let thr = secrecy_threshold(gain, eve_gain, split, noise)
                .expect("gains not both zero");
            // Top of the zero-secrecy region is worth taking when power has
            // nonnegative net value there.
            if power_value >= 0.0 {
                match thr {
                    Threshold::Finite(x) if x > 0.0 => {
                        push_candidate(&mut cands, x.min(peak_power), split)
                    }
                    Threshold::Unbounded => push_candidate(&mut cands, peak_power, split),
                    _ => {}
                }
            }
            let cubic =
                power_stationarity_cubic(gain, eve_gain, split, weight, power_value, noise);
            if let Ok(roots) = real_roots_cubic(&cubic) {
                for r in roots {
                    if r > 0.0 && r <= peak_power && thr.allows(r) {
                        push_candidate(&mut cands, r, split);
                    }
                }
            }
        }
    }
    if gain > 0.0 && eve_gain > 0.0 {
        let quad = joint_stationarity_quadratic(gain, eve_gain, weight, power_value, noise);
        if let Ok(roots) = real_roots_quadratic(&quad) {
            for r in roots {
                if r > 0.0 && r <= peak_power {
                    let split = optimal_split_unclamped(gain, eve_gain, r, noise);
                    if (0.0..=1.0).contains(&split) {
                        let thr = secrecy_threshold(gain, eve_gain, split, noise)
                            .expect("gains positive");
                        if thr.allows(r) {
                            push_candidate(&mut cands, r, split);
                        }
                    }
                }
            }
        }
    }
    dedup_candidates(&mut cands, dedup_tol);
    cands
}

/// Candidate set with the split pinned: stationary powers of that split's
/// cubic plus `{0, clamped threshold, peak}`.
pub fn subcarrier_candidates_fixed_split(
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
    peak_power: f64,
    dedup_tol: f64,
    split: f64,
) -> Vec<(f64, f64)> {
    let mut cands = vec![(0.0, split), (peak_power, split)];
    if gain > 0.0 || eve_gain > 0.0 {
        let thr = secrecy_threshold(gain, eve_gain, split, noise).expect("gains not both zero");
        if let Some(x) = thr.finite() {
            if x > 0.0 && x < peak_power {
                push_candidate(&mut cands, x, split);
            }
        }
        let cubic = power_stationarity_cubic(gain, eve_gain, split, weight, power_value, noise);
        if let Ok(roots) = real_roots_cubic(&cubic) {
            for r in roots {
                if r > 0.0 && r <= peak_power && thr.allows(r) {
                    push_candidate(&mut cands, r, split);
                }
            }
        }
    }
    dedup_candidates(&mut cands, dedup_tol);
    cands
}

/// Per-subcarrier Lagrangian `weight * Rs(power, split) + power_value * power`.
#[inline]
pub fn subcarrier_lagrangian(
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
    power: f64,
    split: f64,
) -> f64 {
    if power == 0.0 {
        return 0.0;
    }
    weight * secrecy_rate_unchecked(gain, eve_gain, power, split, noise) + power_value * power
}

/// Picks the candidate with the largest per-subcarrier Lagrangian; ties break
/// toward smaller power, then smaller split.
pub fn optimize_subcarrier(
    candidates: &[(f64, f64)],
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
) -> (f64, f64, f64) {
    let mut ordered: Vec<(f64, f64)> = candidates.to_vec();
    ordered.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<(f64, f64, f64)> = None;
    for (p, a) in ordered {
        let value = subcarrier_lagrangian(gain, eve_gain, weight, power_value, noise, p, a);
        if best.map_or(true, |(_, _, bv)| value > bv) {
            best = Some((p, a, value));
        }
    }
    best.expect("candidate list is never empty")
}

/// Winner-take-all subcarrier assignment: each subcarrier goes to the IR
/// whose optimized Lagrangian is largest (lowest index on ties). Assigned
/// cells keep their optimized power and split; the rest stay at zero.
pub fn assign_subcarriers(per_sc_results: &[Vec<(f64, f64, f64)>]) -> Allocation {
    assign_with_values(per_sc_results).0
}

fn assign_with_values(per_sc_results: &[Vec<(f64, f64, f64)>]) -> (Allocation, Vec<f64>) {
    let k1 = per_sc_results.len();
    let n = per_sc_results.first().map_or(0, Vec::len);
    let mut alloc = Allocation::zeros(k1, n);
    let mut values = vec![0.0; n];
    for sc in 0..n {
        let mut best_k = 0;
        for k in 1..k1 {
            if per_sc_results[k][sc].2 > per_sc_results[best_k][sc].2 {
                best_k = k;
            }
        }
        let (p, a, v) = per_sc_results[best_k][sc];
        alloc.assign[best_k][sc] = 1;
        alloc.power[best_k][sc] = p;
        alloc.split[best_k][sc] = a;
        values[sc] = v;
    }
    (alloc, values)
}

fn assign_round_robin(per_sc_results: &[Vec<(f64, f64, f64)>]) -> (Allocation, Vec<f64>) {
    let k1 = per_sc_results.len();
    let n = per_sc_results.first().map_or(0, Vec::len);
    let mut alloc = Allocation::zeros(k1, n);
    let mut values = vec![0.0; n];
    for sc in 0..n {
        let k = sc % k1;
        let (p, a, v) = per_sc_results[k][sc];
        alloc.assign[k][sc] = 1;
        alloc.power[k][sc] = p;
        alloc.split[k][sc] = a;
        values[sc] = v;
    }
    (alloc, values)
}

/// Projected subgradient update of the multipliers at iteration `t`.
pub fn subgradient_step(
    duals: &DualVariables,
    instance: &Instance,
    alloc: &Allocation,
    settings: &SolverSettings,
    t: usize,
) -> DualVariables {
    let decay = 1.0 + t as f64 / settings.step_decay_iters;
    let harvested = harvested_all(instance, alloc);
    let lambdas = duals
        .lambdas
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let step = settings.step_lambda[k] / decay;
            (l - step * (harvested[k] - instance.config.harvest_targets[k])).max(0.0)
        })
        .collect();
    let step = settings.step_gamma / decay;
    let gamma =
        (duals.gamma - step * (instance.config.total_power - alloc.total_power())).max(0.0);
    DualVariables { lambdas, gamma }
}

/// Solves the weighted sum secrecy-rate problem with jointly optimized power,
/// split and assignment.
pub fn solve(instance: &Instance, settings: &SolverSettings) -> Result<SolveReport> {
    solve_with_policy(instance, settings, SplitPolicy::Optimized, AssignPolicy::BestIr)
}

pub(crate) fn solve_with_policy(
    instance: &Instance,
    settings: &SolverSettings,
    split_policy: SplitPolicy,
    assign_policy: AssignPolicy,
) -> Result<SolveReport> {
    let config = &instance.config;
    config.validate()?;
    settings.validate(config.num_ers)?;
    check_shapes(instance)?;
    prescreen_harvest(instance)?;

    let k1 = config.num_irs;
    let n = config.num_subcarriers;
    let noise = config.noise_power;
    let peak = config.peak_power;
    let er_cols: Vec<Vec<f64>> = (0..n).map(|sc| instance.er_gains_on_sc(sc)).collect();

    let mut duals = DualVariables::init(config);
    let (gamma_ref, lambda_refs) = dual_scales(config);
    let floors = DualVariables {
        lambdas: lambda_refs.iter().map(|l| 1e-2 * l).collect(),
        gamma: 1e-2 * gamma_ref,
    };

    let mut trace = Vec::with_capacity(settings.max_iters.min(1024));
    let mut best_dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_alloc = Allocation::zeros(k1, n);
    let mut results = vec![vec![(0.0, 0.0, 0.0); n]; k1];

    for t in 0..settings.max_iters {
        iterations = t + 1;
        for sc in 0..n {
            let power_value = marginal_power_value(
                duals.gamma,
                &duals.lambdas,
                &config.harvest_efficiency,
                &er_cols[sc],
            );
            for k in 0..k1 {
                let gain = instance.ir_gain(k, sc);
                let eve = instance.eve_gain(k, sc);
                let weight = config.weights[k];
                let cands = match split_policy {
                    SplitPolicy::Optimized => subcarrier_candidates(
                        gain,
                        eve,
                        weight,
                        power_value,
                        noise,
                        peak,
                        settings.candidate_dedup_tol,
                    ),
                    SplitPolicy::Fixed(split) => subcarrier_candidates_fixed_split(
                        gain,
                        eve,
                        weight,
                        power_value,
                        noise,
                        peak,
                        settings.candidate_dedup_tol,
                        split,
                    ),
                };
                results[k][sc] =
                    optimize_subcarrier(&cands, gain, eve, weight, power_value, noise);
            }
        }
        let (alloc, sc_values) = match assign_policy {
            AssignPolicy::BestIr => assign_with_values(&results),
            AssignPolicy::RoundRobin => assign_round_robin(&results),
        };

        let harvested = harvested_all(instance, &alloc);
        let total_power = alloc.total_power();
        let dual_value = sc_values.iter().sum::<f64>() + duals.gamma * config.total_power
            - duals
                .lambdas
                .iter()
                .zip(&config.harvest_targets)
                .map(|(l, q)| l * q)
                .sum::<f64>();
        best_dual = best_dual.min(dual_value);

        let power_violation = (total_power - config.total_power).max(0.0);
        let harvest_violation = config
            .harvest_targets
            .iter()
            .zip(&harvested)
            .map(|(q_target, q)| (q_target - q).max(0.0))
            .fold(0.0, f64::max);
        trace.push(IterationStat {
            dual_value,
            primal_objective: weighted_sum_rate(instance, &alloc)?,
            power_violation_w: power_violation,
            harvest_violation_w: harvest_violation,
        });

        let next = subgradient_step(&duals, instance, &alloc, settings, t);
        let moved = dual_rel_change(&duals, &next, &floors);
        let feasible_now = power_violation <= settings.tol_feas * config.total_power
            && config
                .harvest_targets
                .iter()
                .zip(&harvested)
                .all(|(q_target, q)| q_target - q <= settings.tol_feas * q_target);
        duals = next;
        last_alloc = alloc;
        if moved < settings.tol_dual && feasible_now {
            converged = true;
            break;
        }
    }

    let (allocation, feasible) = repair(instance, last_alloc);
    let objective = weighted_sum_rate(instance, &allocation)?;
    let harvested = harvested_all(instance, &allocation);
    let dual_value = best_dual;
    let duality_gap_rel = (dual_value - objective) / dual_value.abs().max(1e-12);

    Ok(SolveReport {
        allocation,
        objective,
        harvested,
        dual_value,
        duality_gap_rel,
        iterations,
        converged,
        feasible,
        final_duals: duals,
        trace,
    })
}

fn check_shapes(instance: &Instance) -> Result<()> {
    let config = &instance.config;
    let n = config.num_subcarriers;
    let ch = &instance.channels;
    if ch.gains.len() != config.num_receivers()
        || ch.gains.iter().any(|r| r.len() != n)
        || ch.eve_gains.len() != config.num_irs
        || ch.eve_gains.iter().any(|r| r.len() != n)
    {
        return Err(Error::Config("channel matrices disagree with config".into()));
    }
    Ok(())
}

fn dual_rel_change(prev: &DualVariables, next: &DualVariables, floors: &DualVariables) -> f64 {
    let mut change = (next.gamma - prev.gamma).abs() / next.gamma.abs().max(floors.gamma);
    for ((p, nx), fl) in prev.lambdas.iter().zip(&next.lambdas).zip(&floors.lambdas) {
        change = change.max((nx - p).abs() / nx.abs().max(*fl));
    }
    change
}

/// Greedy attainability screen: spends the whole power budget on the best
/// subcarriers of the worst-deficit energy receiver. Rejects instances whose
/// harvest targets cannot be met even this way.
fn prescreen_harvest(instance: &Instance) -> Result<()> {
    let config = &instance.config;
    if config.harvest_targets.iter().all(|&q| q <= 0.0) {
        return Ok(());
    }
    let n = config.num_subcarriers;
    let cap = config.peak_power;
    let mut budget = config.total_power;
    let mut used = vec![0.0; n];
    let mut harvested = vec![0.0; config.num_ers];
    loop {
        let deficit = |j: usize| {
            if config.harvest_targets[j] <= 0.0 {
                0.0
            } else {
                (config.harvest_targets[j] - harvested[j]) / config.harvest_targets[j]
            }
        };
        let worst = (0..config.num_ers)
            .max_by(|&a, &b| deficit(a).partial_cmp(&deficit(b)).unwrap())
            .expect("num_ers > 0 when targets exist");
        if deficit(worst) <= 1e-12 {
            return Ok(());
        }
        if budget <= 0.0 {
            return Err(Error::Infeasible(format!(
                "harvest target of energy receiver {worst} unattainable within the power budget"
            )));
        }
        let best_sc = (0..n)
            .filter(|&sc| used[sc] < cap)
            .max_by(|&a, &b| {
                instance
                    .er_gain(worst, a)
                    .partial_cmp(&instance.er_gain(worst, b))
                    .unwrap()
            });
        let Some(sc) = best_sc else {
            return Err(Error::Infeasible(format!(
                "harvest target of energy receiver {worst} unattainable under the peak power cap"
            )));
        };
        let gain = instance.er_gain(worst, sc) * config.harvest_efficiency[worst];
        if gain <= 0.0 {
            return Err(Error::Infeasible(format!(
                "energy receiver {worst} has no usable subcarrier gain"
            )));
        }
        let need = (config.harvest_targets[worst] - harvested[worst]) / gain;
        let add = need.min(cap - used[sc]).min(budget);
        used[sc] += add;
        budget -= add;
        for j in 0..config.num_ers {
            harvested[j] += config.harvest_efficiency[j] * instance.er_gain(j, sc) * add;
        }
    }
}

fn assigned_ir(alloc: &Allocation, sc: usize) -> Option<usize> {
    (0..alloc.num_irs()).find(|&k| alloc.assign[k][sc] == 1)
}

/// Deterministic primal repair. First scales uniformly into the power
/// budget. Remaining harvest shortfalls are then closed greedily: the
/// subcarrier with the best harvest-per-watt for the deficit receivers is
/// topped up by just the power the worst deficit needs (the split is kept,
/// since the secrecy rate is nondecreasing in power above its threshold, so
/// a top-up never costs rate on that subcarrier), and the others are scaled
/// down to stay within budget. Fails, rather than loops, when the shortfall
/// stops shrinking.
fn repair(instance: &Instance, mut alloc: Allocation) -> (Allocation, bool) {
    let config = &instance.config;
    let n = config.num_subcarriers;
    let budget = config.total_power;
    let scale_to_budget = |alloc: &mut Allocation, pinned: &[bool]| {
        let mut pinned_total = 0.0;
        let mut rest_total = 0.0;
        for sc in 0..n {
            if let Some(k) = assigned_ir(alloc, sc) {
                if pinned[sc] {
                    pinned_total += alloc.power[k][sc];
                } else {
                    rest_total += alloc.power[k][sc];
                }
            }
        }
        if pinned_total + rest_total <= budget {
            return;
        }
        if pinned_total >= budget {
            let s = budget / pinned_total;
            for sc in 0..n {
                if let Some(k) = assigned_ir(alloc, sc) {
                    alloc.power[k][sc] = if pinned[sc] { alloc.power[k][sc] * s } else { 0.0 };
                }
            }
        } else if rest_total > 0.0 {
            let s = (budget - pinned_total) / rest_total;
            for sc in 0..n {
                if !pinned[sc] {
                    if let Some(k) = assigned_ir(alloc, sc) {
                        alloc.power[k][sc] *= s;
                    }
                }
            }
        }
    };

    let mut pinned = vec![false; n];
    scale_to_budget(&mut alloc, &pinned);
    if config.num_ers == 0 {
        return (alloc, true);
    }

    let deficit_of = |alloc: &Allocation| -> (Vec<f64>, f64) {
        let harvested = harvested_all(instance, alloc);
        let deficits: Vec<f64> = config
            .harvest_targets
            .iter()
            .zip(&harvested)
            .map(|(q_target, q)| q_target - q)
            .collect();
        let worst_rel = deficits
            .iter()
            .zip(&config.harvest_targets)
            .map(|(d, q)| if *q > 0.0 { d / q } else { 0.0 })
            .fold(0.0, f64::max);
        (deficits, worst_rel)
    };

    // Drive shortfalls to (relative) zero rather than merely within the
    // feasibility tolerance: reported-feasible allocations then satisfy weak
    // duality exactly.
    let done_rel = 1e-12;
    // enough iterations for the geometric phase even when per-subcarrier
    // harvest gains barely differ
    for _ in 0..8 * n + 256 {
        let (deficits, worst_rel) = deficit_of(&alloc);
        if worst_rel <= done_rel {
            return (alloc, true);
        }

        // the subcarrier harvesting most per extra watt for the lagging ERs
        let mut best: Option<(f64, usize)> = None;
        for sc in 0..n {
            let Some(k) = assigned_ir(&alloc, sc) else { continue };
            if config.peak_power - alloc.power[k][sc] <= 0.0 {
                continue;
            }
            let score: f64 = (0..config.num_ers)
                .filter(|&j| deficits[j] > done_rel * config.harvest_targets[j])
                .map(|j| config.harvest_efficiency[j] * instance.er_gain(j, sc))
                .sum();
            if score > 0.0 && best.map_or(true, |(b, _)| score > b) {
                best = Some((score, sc));
            }
        }
        let Some((_, sc)) = best else {
            return (alloc, false);
        };
        let k = assigned_ir(&alloc, sc).expect("candidate subcarrier is assigned");
        let headroom = config.peak_power - alloc.power[k][sc];
        let need = (0..config.num_ers)
            .filter(|&j| deficits[j] > done_rel * config.harvest_targets[j])
            .map(|j| {
                let slope = config.harvest_efficiency[j] * instance.er_gain(j, sc);
                if slope > 0.0 {
                    deficits[j] / slope
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        // slight overshoot so the rebalancing scale-down cannot stall progress
        alloc.power[k][sc] += (need * 1.05).min(headroom);
        pinned[sc] = true;
        scale_to_budget(&mut alloc, &pinned);
    }
    let (_, worst_rel) = deficit_of(&alloc);
    (alloc, worst_rel <= done_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dbm_to_watts, Instance, SystemConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const NOISE: f64 = 5.0119e-12;

    #[test]
    fn only_costly_power_selects_zero() {
        // power has negative net value, no weight on rate, eve dominates
        let cands = subcarrier_candidates(1e-9, 1e-4, 0.0, -1.0, NOISE, 5.0, 1e-9);
        let best = optimize_subcarrier(&cands, 1e-9, 1e-4, 0.0, -1.0, NOISE);
        assert_eq!(best, (0.0, 0.0, 0.0));
    }

    #[test]
    fn symmetric_gains_keep_peak_candidate_with_half_split() {
        let cands = subcarrier_candidates(1.0, 1.0, 1.0, 0.0, 1.0, 10.0, 1e-9);
        assert!(
            cands
                .iter()
                .any(|&(p, a)| (p - 10.0).abs() < 1e-12 && (a - 0.5).abs() < 1e-12),
            "candidates {cands:?} miss (10, 0.5)"
        );
    }

    #[test]
    fn pure_energy_value_selects_peak() {
        let cands = subcarrier_candidates(1e-9, 1e-4, 0.0, 2.0, NOISE, 5.0, 1e-9);
        let (p, _, value) = optimize_subcarrier(&cands, 1e-9, 1e-4, 0.0, 2.0, NOISE);
        assert_relative_eq!(p, 5.0);
        assert_relative_eq!(value, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn candidates_match_grid_search() {
        use crate::oracle::{grid_search_subcarrier, GridSpec};
        let grid = GridSpec { p_points: 800, alpha_points: 401 };
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let gain = 10f64.powf(rng.gen_range(-12.0..-4.0));
            let eve = 10f64.powf(rng.gen_range(-9.0..-2.0));
            let w = rng.gen_range(0.2..2.0);
            let pv = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-2.0..1.5));
            let peak = 10f64.powf(rng.gen_range(-1.0..1.0));
            let cands = subcarrier_candidates(gain, eve, w, pv, NOISE, peak, 1e-9);
            let (_, _, best) = optimize_subcarrier(&cands, gain, eve, w, pv, NOISE);
            let (_, _, gridbest) =
                grid_search_subcarrier(gain, eve, w, pv, NOISE, peak, &grid);
            let tol = 5e-3 * gridbest.abs().max(1e-9);
            assert!(
                best >= gridbest - tol,
                "solver {best} below grid {gridbest} (gain={gain}, eve={eve}, w={w}, pv={pv}, peak={peak})"
            );
        }
    }

    #[test]
    fn assignment_prefers_lowest_index_on_ties() {
        let results = vec![
            vec![(1.0, 0.2, 3.0), (0.5, 0.1, 2.0)],
            vec![(1.0, 0.2, 3.0), (0.5, 0.1, 2.5)],
        ];
        let alloc = assign_subcarriers(&results);
        assert_eq!(alloc.assign[0], vec![1, 0]);
        assert_eq!(alloc.assign[1], vec![0, 1]);
    }

    #[test]
    fn assignment_single_ir_takes_everything() {
        let results = vec![vec![(1.0, 0.0, 0.7), (0.0, 0.0, 0.0), (2.0, 0.4, 1.0)]];
        let alloc = assign_subcarriers(&results);
        assert_eq!(alloc.assign[0], vec![1, 1, 1]);
        assert_eq!(alloc.power[0], vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn assignment_value_sum_matches_chosen_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let results: Vec<Vec<(f64, f64, f64)>> = (0..3)
            .map(|_| {
                (0..16)
                    .map(|_| (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()))
                    .collect()
            })
            .collect();
        let (alloc, values) = assign_with_values(&results);
        for sc in 0..16 {
            let max_v = (0..3).map(|k| results[k][sc].2).fold(f64::MIN, f64::max);
            assert_relative_eq!(values[sc], max_v);
            let chosen: Vec<usize> = (0..3).filter(|&k| alloc.assign[k][sc] == 1).collect();
            assert_eq!(chosen.len(), 1);
            assert_relative_eq!(results[chosen[0]][sc].2, max_v);
        }
    }

    fn tiny_instance(targets: Vec<f64>) -> Instance {
        let n_ers = targets.len();
        let config = SystemConfig {
            num_subcarriers: 4,
            num_irs: 1,
            num_ers: n_ers,
            noise_power: NOISE,
            total_power: 1.0,
            peak_power: 1.0,
            weights: vec![1.0],
            harvest_targets: targets,
            harvest_efficiency: vec![0.5; n_ers],
            rng_seed: 3,
            ..SystemConfig::default()
        };
        Instance::generate(config).unwrap()
    }

    #[test]
    fn subgradient_fixed_point_and_projection() {
        let inst = tiny_instance(vec![1e-5]);
        let settings = SolverSettings {
            step_lambda: vec![1e3],
            step_gamma: 1.0,
            ..SolverSettings::defaults_for(&inst.config)
        };
        // zero subgradient: harvested == target and total power == budget
        let mut alloc = Allocation::zeros(1, 4);
        alloc.assign[0][0] = 1;
        alloc.power[0][0] = 1.0; // exactly the budget
        let gain = inst.er_gain(0, 0) * 0.5;
        let mut inst_exact = inst.clone();
        inst_exact.config.harvest_targets[0] = gain * 1.0;
        let duals = DualVariables { lambdas: vec![0.3], gamma: 0.2 };
        let next = subgradient_step(&duals, &inst_exact, &alloc, &settings, 0);
        assert_relative_eq!(next.lambdas[0], 0.3, max_relative = 1e-12);
        assert_relative_eq!(next.gamma, 0.2, max_relative = 1e-12);

        // surplus harvest with lambda already at zero stays projected at zero
        let mut surplus = inst.clone();
        surplus.config.harvest_targets[0] = 0.0;
        let duals = DualVariables { lambdas: vec![0.0], gamma: 0.2 };
        let next = subgradient_step(&duals, &surplus, &alloc, &settings, 0);
        assert_eq!(next.lambdas[0], 0.0);
    }

    #[test]
    fn subgradient_step_magnitude() {
        // shortfall of 1e-4 W at step 1e3 raises lambda by 0.1
        let mut inst = tiny_instance(vec![1e-4]);
        inst.channels.gains[1] = vec![0.0; 4]; // ER harvests nothing
        let settings = SolverSettings {
            step_lambda: vec![1e3],
            ..SolverSettings::defaults_for(&inst.config)
        };
        let alloc = Allocation::zeros(1, 4);
        let duals = DualVariables { lambdas: vec![0.5], gamma: 0.0 };
        let next = subgradient_step(&duals, &inst, &alloc, &settings, 0);
        assert_relative_eq!(next.lambdas[0], 0.6, max_relative = 1e-12);
    }

    #[test]
    fn solve_with_slack_targets_leaves_lambda_zero() {
        let inst = tiny_instance(vec![0.0]);
        let settings = SolverSettings::defaults_for(&inst.config);
        let report = solve(&inst, &settings).unwrap();
        assert!(report.feasible);
        assert_eq!(report.final_duals.lambdas[0], 0.0);
        assert!(report.objective > 0.0);
        assert!(report.dual_value >= report.objective - 1e-9);
    }

    #[test]
    fn solve_rejects_unattainable_targets() {
        let mut inst = tiny_instance(vec![1e-3]);
        inst.config.total_power = 1e-12;
        inst.config.peak_power = 1e-12;
        match solve(&inst, &SolverSettings::defaults_for(&inst.config)) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn solve_with_vanishing_budget_yields_zero_objective() {
        let mut inst = tiny_instance(vec![0.0]);
        inst.config.total_power = 1e-12;
        inst.config.peak_power = 1e-12;
        let report = solve(&inst, &SolverSettings::defaults_for(&inst.config)).unwrap();
        assert!(report.objective < 1e-6);
        assert!(report.feasible);
    }

    #[test]
    fn solve_meets_binding_harvest_targets() {
        let inst = tiny_instance(vec![2e-5]);
        let settings = SolverSettings::defaults_for(&inst.config);
        let report = solve(&inst, &settings).unwrap();
        assert!(report.feasible, "report infeasible: {report:?}");
        let slack = settings.tol_feas * inst.config.harvest_targets[0];
        assert!(report.harvested[0] >= inst.config.harvest_targets[0] - slack);
        assert!(report.allocation.total_power() <= inst.config.total_power * (1.0 + 1e-9));
        assert!(report.dual_value >= report.objective - 1e-9);
    }

    #[test]
    fn solve_is_deterministic() {
        let config = SystemConfig {
            num_subcarriers: 16,
            rng_seed: 9,
            ..SystemConfig::default()
        };
        let inst = Instance::generate(config).unwrap();
        let settings = SolverSettings::defaults_for(&inst.config);
        let a = solve(&inst, &settings).unwrap();
        let b = solve(&inst, &settings).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn solve_default_cell_converges_and_is_feasible() {
        let config = SystemConfig { rng_seed: 12, ..SystemConfig::default() };
        let inst = Instance::generate(config).unwrap();
        let settings = SolverSettings::defaults_for(&inst.config);
        let report = solve(&inst, &settings).unwrap();
        assert!(report.feasible);
        assert!(report.objective > 0.0);
        assert!(report.dual_value >= report.objective - 1e-9);
        assert!(dbm_to_watts(37.0) * (1.0 + 1e-9) >= report.allocation.total_power());
        report.allocation.validate(inst.config.peak_power).unwrap();
    }
}
