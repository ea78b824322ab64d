//! Problem instances: system parameters, unit conversions and seeded random
//! channel realizations.
//!
//! Gains are linear power gains (W/W). A realization stores one row per
//! receiver (information receivers first, then energy receivers) and one
//! column per subcarrier, plus the derived per-IR eavesdropper gains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest allowed transmitter-receiver distance for the path-loss model.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Converts dB-milliwatts to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Converts watts to dB-milliwatts.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Physical and algorithmic parameters of one downlink cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of subcarriers.
    pub num_subcarriers: usize,
    /// Number of information receivers.
    pub num_irs: usize,
    /// Number of energy receivers.
    pub num_ers: usize,
    /// Per-subcarrier noise power in watts.
    pub noise_power: f64,
    /// Total transmit power budget in watts.
    pub total_power: f64,
    /// Per-subcarrier power cap in watts.
    pub peak_power: f64,
    /// Positive rate weight per information receiver.
    pub weights: Vec<f64>,
    /// Minimum harvested power per energy receiver, watts.
    pub harvest_targets: Vec<f64>,
    /// Harvesting efficiency per energy receiver, in (0, 1).
    pub harvest_efficiency: Vec<f64>,
    /// Cell radius bounding information-receiver placement, meters.
    #[serde(default = "default_cell_radius")]
    pub cell_radius_m: f64,
    /// Ring radius bounding energy-receiver placement, meters.
    #[serde(default = "default_er_radius")]
    pub er_radius_m: f64,
    /// Path-loss exponent of the log-distance model.
    #[serde(default = "default_pathloss_exponent")]
    pub pathloss_exponent: f64,
    /// Reference path loss at 1 m, dB.
    #[serde(default = "default_pathloss_ref_db")]
    pub pathloss_ref_db: f64,
    /// Seed for channel generation.
    pub rng_seed: u64,
}

fn default_cell_radius() -> f64 {
    200.0
}
fn default_er_radius() -> f64 {
    2.0
}
fn default_pathloss_exponent() -> f64 {
    3.0
}
fn default_pathloss_ref_db() -> f64 {
    30.0
}

impl Default for SystemConfig {
    /// A 64-subcarrier cell with four information and four energy receivers,
    /// -83 dBm noise, 37 dBm total power, unit weights, 100 uW harvest
    /// targets and 0.5 harvesting efficiency.
    fn default() -> Self {
        SystemConfig {
            num_subcarriers: 64,
            num_irs: 4,
            num_ers: 4,
            noise_power: dbm_to_watts(-83.0),
            total_power: dbm_to_watts(37.0),
            peak_power: dbm_to_watts(37.0),
            weights: vec![1.0; 4],
            harvest_targets: vec![100e-6; 4],
            harvest_efficiency: vec![0.5; 4],
            cell_radius_m: default_cell_radius(),
            er_radius_m: default_er_radius(),
            pathloss_exponent: default_pathloss_exponent(),
            pathloss_ref_db: default_pathloss_ref_db(),
            rng_seed: 1,
        }
    }
}

impl SystemConfig {
    /// Total number of receivers (information plus energy).
    pub fn num_receivers(&self) -> usize {
        self.num_irs + self.num_ers
    }

    /// Checks every structural invariant of the configuration.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_subcarriers == 0 {
            return fail("num_subcarriers must be >= 1".into());
        }
        if self.num_irs == 0 {
            return fail("num_irs must be >= 1".into());
        }
        for (name, v) in [
            ("noise_power", self.noise_power),
            ("total_power", self.total_power),
            ("peak_power", self.peak_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.weights.len() != self.num_irs {
            return fail(format!(
                "weights has {} entries, expected num_irs = {}",
                self.weights.len(),
                self.num_irs
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return fail("weights must all be finite and > 0".into());
        }
        if self.harvest_targets.len() != self.num_ers {
            return fail(format!(
                "harvest_targets has {} entries, expected num_ers = {}",
                self.harvest_targets.len(),
                self.num_ers
            ));
        }
        if self
            .harvest_targets
            .iter()
            .any(|q| !(q.is_finite() && *q >= 0.0))
        {
            return fail("harvest_targets must all be finite and >= 0".into());
        }
        if self.harvest_efficiency.len() != self.num_ers {
            return fail(format!(
                "harvest_efficiency has {} entries, expected num_ers = {}",
                self.harvest_efficiency.len(),
                self.num_ers
            ));
        }
        if self
            .harvest_efficiency
            .iter()
            .any(|z| !(z.is_finite() && *z > 0.0 && *z < 1.0))
        {
            return fail("harvest_efficiency entries must lie in (0, 1)".into());
        }
        if !(self.cell_radius_m.is_finite() && self.cell_radius_m > MIN_DISTANCE_M) {
            return fail(format!(
                "cell_radius_m must exceed {MIN_DISTANCE_M} m"
            ));
        }
        if self.num_ers > 0 && !(self.er_radius_m.is_finite() && self.er_radius_m > MIN_DISTANCE_M)
        {
            return fail(format!("er_radius_m must exceed {MIN_DISTANCE_M} m"));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return fail("pathloss_exponent must be > 0".into());
        }
        if !self.pathloss_ref_db.is_finite() {
            return fail("pathloss_ref_db must be finite".into());
        }
        Ok(())
    }

    /// Linear power gain of the log-distance path-loss model at `distance_m`.
    pub fn pathloss_gain(&self, distance_m: f64) -> f64 {
        let loss_db =
            self.pathloss_ref_db + 10.0 * self.pathloss_exponent * (distance_m).log10();
        10f64.powf(-loss_db / 10.0)
    }
}

/// Per-receiver, per-subcarrier channel power gains plus the derived per-IR
/// eavesdropper gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `num_receivers x num_subcarriers` gains, IR rows first.
    pub gains: Vec<Vec<f64>>,
    /// `num_irs x num_subcarriers` worst-case eavesdropper gains.
    pub eve_gains: Vec<Vec<f64>>,
}

impl ChannelRealization {
    /// True when `eve_gains` equals the recomputed max-over-other-receivers
    /// rule for the stored gains.
    pub fn eve_gains_consistent(&self, num_irs: usize) -> bool {
        self.eve_gains == eavesdropper_gains(&self.gains, num_irs)
    }
}

/// Worst-case eavesdropper gains: entry `(k, n)` is the largest gain of any
/// receiver other than `k` on subcarrier `n` (0 when there is none).
pub fn eavesdropper_gains(gains: &[Vec<f64>], num_irs: usize) -> Vec<Vec<f64>> {
    let num_sc = gains.first().map_or(0, Vec::len);
    (0..num_irs)
        .map(|k| {
            (0..num_sc)
                .map(|n| {
                    gains
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .map(|(_, row)| row[n])
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

/// Draws a seeded channel realization for `config`.
///
/// Receiver distances are uniform in `(MIN_DISTANCE_M, radius]` (cell radius
/// for IRs, ER ring radius for ERs); every gain is the path-loss gain at that
/// distance times an independent unit-mean exponential fade.
pub fn generate_channels(config: &SystemConfig) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut distances = Vec::with_capacity(config.num_receivers());
    for _ in 0..config.num_irs {
        distances.push(draw_distance(&mut rng, config.cell_radius_m));
    }
    for _ in 0..config.num_ers {
        distances.push(draw_distance(&mut rng, config.er_radius_m));
    }
    let gains: Vec<Vec<f64>> = distances
        .iter()
        .map(|&d| {
            let pl = config.pathloss_gain(d);
            (0..config.num_subcarriers)
                .map(|_| pl * exponential_fade(&mut rng))
                .collect()
        })
        .collect();
    let eve_gains = eavesdropper_gains(&gains, config.num_irs);
    ChannelRealization { gains, eve_gains }
}

/// Uniform draw from `(MIN_DISTANCE_M, radius]`.
fn draw_distance<R: Rng>(rng: &mut R, radius: f64) -> f64 {
    let u: f64 = rng.gen(); // [0, 1)
    radius - (radius - MIN_DISTANCE_M) * u
}

/// Unit-mean exponential fade via inverse CDF.
fn exponential_fade<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen(); // [0, 1)
    -(1.0 - u).ln()
}

/// A configuration together with one channel realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    #[serde(flatten)]
    pub channels: ChannelRealization,
    pub config: SystemConfig,
}

impl Instance {
    /// Validates `config` and draws its seeded realization.
    pub fn generate(config: SystemConfig) -> Result<Instance> {
        config.validate()?;
        let channels = generate_channels(&config);
        Ok(Instance { channels, config })
    }

    /// Builds an instance from explicit matrices, checking shapes and ranges
    /// (the eavesdropper rows are taken as given, so synthetic instances may
    /// deviate from the max rule).
    pub fn from_parts(
        config: SystemConfig,
        gains: Vec<Vec<f64>>,
        eve_gains: Vec<Vec<f64>>,
    ) -> Result<Instance> {
        config.validate()?;
        let n = config.num_subcarriers;
        if gains.len() != config.num_receivers() || gains.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "gains must be {} x {n}",
                config.num_receivers()
            )));
        }
        if eve_gains.len() != config.num_irs || eve_gains.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!(
                "eve_gains must be {} x {n}",
                config.num_irs
            )));
        }
        let ok = |m: &[Vec<f64>]| {
            m.iter()
                .flatten()
                .all(|g| g.is_finite() && *g >= 0.0)
        };
        if !ok(&gains) || !ok(&eve_gains) {
            return Err(Error::Config("gains must be finite and >= 0".into()));
        }
        Ok(Instance {
            channels: ChannelRealization { gains, eve_gains },
            config,
        })
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad instance JSON: {e}")))?;
        Instance::from_parts(inst.config, inst.channels.gains, inst.channels.eve_gains)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn num_subcarriers(&self) -> usize {
        self.config.num_subcarriers
    }

    /// Gain from the base station to IR `k` on subcarrier `n`.
    pub fn ir_gain(&self, k: usize, n: usize) -> f64 {
        self.channels.gains[k][n]
    }

    /// Worst-case eavesdropper gain against IR `k` on subcarrier `n`.
    pub fn eve_gain(&self, k: usize, n: usize) -> f64 {
        self.channels.eve_gains[k][n]
    }

    /// Gain from the base station to ER `j` on subcarrier `n`.
    pub fn er_gain(&self, j: usize, n: usize) -> f64 {
        self.channels.gains[self.config.num_irs + j][n]
    }

    /// All subcarrier gains of ER `j`.
    pub fn er_gains_row(&self, j: usize) -> &[f64] {
        &self.channels.gains[self.config.num_irs + j]
    }

    /// Gains of every ER on subcarrier `n`.
    pub fn er_gains_on_sc(&self, n: usize) -> Vec<f64> {
        (0..self.config.num_ers).map(|j| self.er_gain(j, n)).collect()
    }
}
