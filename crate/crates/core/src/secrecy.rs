//! Rate and energy formulas: information rate, worst-case eavesdropper rate,
//! secrecy rate with its positivity threshold, weighted sum rate and
//! harvested power.
//!
//! All rates are in bits/s/Hz. Internally everything is evaluated in natural
//! log via `ln_1p` and converted once.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::Instance;

/// Absolute tolerance used when deciding whether a rate is strictly positive.
pub const RATE_EPS: f64 = 1e-12;

/// Per-subcarrier transmit decisions: power, artificial-noise split and the
/// binary subcarrier-to-IR assignment. All matrices are `num_irs` rows by
/// `num_subcarriers` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Transmit power in watts.
    pub power: Vec<Vec<f64>>,
    /// Fraction of each subcarrier's power carrying artificial noise, in [0, 1].
    pub split: Vec<Vec<f64>>,
    /// 1 when the subcarrier serves that IR, else 0; at most one 1 per column.
    pub assign: Vec<Vec<u8>>,
}

impl Allocation {
    pub fn zeros(num_irs: usize, num_subcarriers: usize) -> Allocation {
        Allocation {
            power: vec![vec![0.0; num_subcarriers]; num_irs],
            split: vec![vec![0.0; num_subcarriers]; num_irs],
            assign: vec![vec![0; num_subcarriers]; num_irs],
        }
    }

    pub fn num_irs(&self) -> usize {
        self.power.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.power.first().map_or(0, Vec::len)
    }

    /// Total transmit power over assigned subcarriers.
    pub fn total_power(&self) -> f64 {
        let mut total = 0.0;
        for (prow, xrow) in self.power.iter().zip(&self.assign) {
            for (p, x) in prow.iter().zip(xrow) {
                if *x == 1 {
                    total += p;
                }
            }
        }
        total
    }

    /// Checks the structural invariants against per-subcarrier cap `peak_power`.
    pub fn validate(&self, peak_power: f64) -> Result<()> {
        let k1 = self.num_irs();
        let n = self.num_subcarriers();
        if self.split.len() != k1
            || self.assign.len() != k1
            || self.split.iter().any(|r| r.len() != n)
            || self.assign.iter().any(|r| r.len() != n)
        {
            return Err(Error::Config("allocation matrices disagree in shape".into()));
        }
        for col in 0..n {
            let ones: u32 = self.assign.iter().map(|r| u32::from(r[col])).sum();
            if ones > 1 {
                return Err(Error::Config(format!(
                    "subcarrier {col} assigned to {ones} receivers"
                )));
            }
        }
        for k in 0..k1 {
            for n_i in 0..n {
                let p = self.power[k][n_i];
                let a = self.split[k][n_i];
                if !(p.is_finite() && (0.0..=peak_power * (1.0 + 1e-12)).contains(&p)) {
                    return Err(Error::Config(format!("power[{k}][{n_i}] = {p} out of range")));
                }
                if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
                    return Err(Error::Config(format!("split[{k}][{n_i}] = {a} out of range")));
                }
                if p > 0.0 && self.assign[k][n_i] != 1 {
                    return Err(Error::Config(format!(
                        "power[{k}][{n_i}] > 0 on an unassigned subcarrier"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if noise.is_finite() && noise > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise power must be > 0, got {noise}")))
    }
}

/// Achievable rate of the intended IR after it removes the artificial noise:
/// `log2(1 + (1-split) * gain * power / noise)`.
pub fn info_rate(gain: f64, power: f64, split: f64, noise: f64) -> Result<f64> {
    check_noise(noise)?;
    Ok(((1.0 - split) * gain * power / noise).ln_1p() / LN_2)
}

/// Decodable rate of the strongest eavesdropper, which cannot remove the
/// noise: `log2(1 + (1-split) * eve_gain * power / (noise + split * eve_gain * power))`.
pub fn eve_rate(eve_gain: f64, power: f64, split: f64, noise: f64) -> Result<f64> {
    check_noise(noise)?;
    let an = split * eve_gain * power;
    Ok(((1.0 - split) * eve_gain * power / (noise + an)).ln_1p() / LN_2)
}

/// Signed rate advantage `info_rate - eve_rate` in bits/s/Hz, without the
/// clamp at zero. Negative values mean the eavesdropper decodes faster.
pub fn secrecy_rate_raw(gain: f64, eve_gain: f64, power: f64, split: f64, noise: f64) -> Result<f64> {
    check_noise(noise)?;
    Ok(secrecy_rate_raw_unchecked(gain, eve_gain, power, split, noise))
}

#[inline]
pub(crate) fn secrecy_rate_raw_unchecked(
    gain: f64,
    eve_gain: f64,
    power: f64,
    split: f64,
    noise: f64,
) -> f64 {
    // ln(1 + (1-a)Hp/s) + ln(1 + aBp/s) - ln(1 + Bp/s), all nonnegative args.
    let nats = ((1.0 - split) * gain * power / noise).ln_1p()
        + (split * eve_gain * power / noise).ln_1p()
        - (eve_gain * power / noise).ln_1p();
    nats / LN_2
}

/// Achievable secrecy rate `max(0, info_rate - eve_rate)`.
pub fn secrecy_rate(gain: f64, eve_gain: f64, power: f64, split: f64, noise: f64) -> Result<f64> {
    Ok(secrecy_rate_raw(gain, eve_gain, power, split, noise)?.max(0.0))
}

#[inline]
pub(crate) fn secrecy_rate_unchecked(
    gain: f64,
    eve_gain: f64,
    power: f64,
    split: f64,
    noise: f64,
) -> f64 {
    secrecy_rate_raw_unchecked(gain, eve_gain, power, split, noise).max(0.0)
}

/// Power threshold below which the secrecy rate is zero.
///
/// `Unbounded` marks subcarriers whose secrecy rate is zero at every power;
/// it is kept out of float arithmetic so no NaN can leak into candidate
/// filtering, and it compares as larger than any cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(f64),
    Unbounded,
}

impl Threshold {
    /// True when the secrecy rate is strictly positive at `power`.
    pub fn allows(&self, power: f64) -> bool {
        match self {
            Threshold::Finite(x) => power > *x,
            Threshold::Unbounded => false,
        }
    }

    /// `min(threshold, cap)`, treating `Unbounded` as larger than any cap.
    pub fn min_with(&self, cap: f64) -> f64 {
        match self {
            Threshold::Finite(x) => x.min(cap),
            Threshold::Unbounded => cap,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Threshold::Finite(x) => Some(*x),
            Threshold::Unbounded => None,
        }
    }
}

/// Clamped secrecy-positivity threshold `[X]^+` with
/// `X = (noise/split) * (1/gain - 1/eve_gain)`.
///
/// Limit conventions keep the classification consistent with the rate sign:
/// with no artificial noise (`split = 0`) the rate is positive at every power
/// iff `gain > eve_gain`, so the threshold is 0 in that case and `Unbounded`
/// otherwise. With no eavesdropper (`eve_gain = 0`) the rate equals the
/// information rate, positive at every power, so the threshold is 0. A dead
/// legitimate channel (`gain = 0`) never carries secrecy: `Unbounded`.
pub fn secrecy_threshold(gain: f64, eve_gain: f64, split: f64, noise: f64) -> Result<Threshold> {
    check_noise(noise)?;
    if gain == 0.0 && eve_gain == 0.0 {
        return Err(Error::Domain(
            "secrecy threshold undefined when both gains are zero".into(),
        ));
    }
    if gain == 0.0 {
        return Ok(Threshold::Unbounded);
    }
    if eve_gain == 0.0 {
        return Ok(Threshold::Finite(0.0));
    }
    if split == 0.0 {
        return Ok(if gain > eve_gain {
            Threshold::Finite(0.0)
        } else {
            Threshold::Unbounded
        });
    }
    let x = (noise / split) * (1.0 / gain - 1.0 / eve_gain);
    Ok(Threshold::Finite(x.max(0.0)))
}

/// Power harvested by one energy receiver:
/// `zeta * sum_n (sum_k assign * power) * er_gain[n]`.
pub fn harvested_power(er_gains: &[f64], zeta: f64, alloc: &Allocation) -> f64 {
    let mut q = 0.0;
    for n in 0..alloc.num_subcarriers() {
        let mut sc_power = 0.0;
        for k in 0..alloc.num_irs() {
            if alloc.assign[k][n] == 1 {
                sc_power += alloc.power[k][n];
            }
        }
        q += sc_power * er_gains[n];
    }
    zeta * q
}

/// Harvested power at every energy receiver of `instance`.
pub fn harvested_all(instance: &Instance, alloc: &Allocation) -> Vec<f64> {
    (0..instance.config.num_ers)
        .map(|j| {
            harvested_power(
                instance.er_gains_row(j),
                instance.config.harvest_efficiency[j],
                alloc,
            )
        })
        .collect()
}

/// Weighted sum secrecy rate of an allocation.
pub fn weighted_sum_rate(instance: &Instance, alloc: &Allocation) -> Result<f64> {
    check_noise(instance.config.noise_power)?;
    let noise = instance.config.noise_power;
    let mut total = 0.0;
    for k in 0..instance.config.num_irs {
        let mut user = 0.0;
        for n in 0..instance.num_subcarriers() {
            if alloc.assign[k][n] == 1 {
                user += secrecy_rate_unchecked(
                    instance.ir_gain(k, n),
                    instance.eve_gain(k, n),
                    alloc.power[k][n],
                    alloc.split[k][n],
                    noise,
                );
            }
        }
        total += instance.config.weights[k] * user;
    }
    Ok(total)
}
