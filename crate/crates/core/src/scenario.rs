//! Experiment description loaded from JSON.
//!
//! Ratios may be given as a plain (linear) number or as a string with a `dB`
//! suffix; powers as a number of watts or a string ending in `dBm` or `W`.
//! Everything is converted to linear units on load and written back as plain
//! numbers, so `load(write(s)) == s`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::admm::AdmmConfig;
use crate::array::{
    build_grids, db_to_linear, dbm_to_watts, los_channel, rayleigh_channel, AngleGrids, AngleRegion,
    ArrayGeometry, UserChannel,
};
use crate::error::{DfrcError, Result};
use crate::problem::{ConstraintLevels, ProblemInstance};
use crate::select::trial_seed;
use crate::Complex64;

/// Linear power ratio; accepts `10.0` or `"10dB"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub f64);

/// Power in watts; accepts `10.0`, `"10W"` or `"40dBm"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Watts(pub f64);

fn parse_suffixed(text: &str, units: &[(&str, fn(f64) -> f64)]) -> Option<f64> {
    let t = text.trim();
    for (suffix, convert) in units {
        if let Some(number) = t.strip_suffix(suffix) {
            return number.trim().parse::<f64>().ok().map(convert);
        }
    }
    t.parse::<f64>().ok()
}

struct LevelVisitor {
    expecting: &'static str,
    units: &'static [(&'static str, fn(f64) -> f64)],
}

impl<'de> Visitor<'de> for LevelVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.expecting)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
        parse_suffixed(v, self.units)
            .ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self.expecting))
    }
}

fn identity(x: f64) -> f64 {
    x
}

const RATIO_UNITS: &[(&str, fn(f64) -> f64)] = &[("dB", db_to_linear)];
const POWER_UNITS: &[(&str, fn(f64) -> f64)] = &[("dBm", dbm_to_watts), ("W", identity)];

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(LevelVisitor {
            expecting: "a linear ratio or a string like \"10dB\"",
            units: RATIO_UNITS,
        })
        .map(Ratio)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Watts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(LevelVisitor {
            expecting: "watts or a string like \"40dBm\"",
            units: POWER_UNITS,
        })
        .map(Watts)
    }
}

impl Serialize for Watts {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// `h_m = gain · a(θ_m)`; gain given as `[re, im]`.
    Los {
        #[serde(default = "unit_gain")]
        gain: [f64; 2],
    },
    /// i.i.d. CN(0, 1); per-user seeds split from `seed` (master seed if absent).
    Rayleigh {
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn unit_gain() -> [f64; 2] {
    [1.0, 0.0]
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::Los { gain: unit_gain() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersConfig {
    pub angles_deg: Vec<f64>,
    #[serde(default)]
    pub channel: ChannelModel,
    pub noise_variance: f64,
    pub sinr_target: Ratio,
    /// Range over which `sweep-m` spreads users when M differs from
    /// `angles_deg.len()`.
    #[serde(default = "default_spread")]
    pub sweep_spread_deg: [f64; 2],
}

fn default_spread() -> [f64; 2] {
    [-60.0, 60.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeampatternConfig {
    pub mainlobe_deg: Vec<[f64; 2]>,
    pub stopband_deg: Vec<[f64; 2]>,
    #[serde(default = "default_mainlobe_step")]
    pub mainlobe_step_deg: f64,
    #[serde(default = "default_stopband_step")]
    pub stopband_step_deg: f64,
    pub passband_threshold: f64,
    pub stopband_threshold: f64,
}

fn default_mainlobe_step() -> f64 {
    2.0
}

fn default_stopband_step() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmmSettings {
    pub eta: f64,
    pub rho: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub primal_tol: Option<f64>,
    #[serde(default)]
    pub dual_tol: Option<f64>,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            eta: 0.1,
            rho: 50.0,
            max_iterations: 100,
            primal_tol: None,
            dual_tol: None,
        }
    }
}

/// One ADMM run of the η = 0 refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefitRun {
    pub rho: f64,
    pub max_iterations: usize,
}

/// ADMM runs for the η = 0 refit on the selected subarray. Each run starts
/// from the same feasible point; the cheapest polished result is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefitSettings {
    pub runs: Vec<RefitRun>,
}

impl Default for RefitSettings {
    fn default() -> Self {
        Self {
            runs: vec![
                RefitRun {
                    rho: 5.0,
                    max_iterations: 1000,
                },
                RefitRun {
                    rho: 50.0,
                    max_iterations: 3000,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub array: ArrayGeometry,
    /// K, the number of antennas (RF chains) kept.
    pub num_selected: usize,
    pub users: UsersConfig,
    pub beampattern: BeampatternConfig,
    pub max_antenna_power: Watts,
    #[serde(default)]
    pub admm: AdmmSettings,
    #[serde(default)]
    pub refit: RefitSettings,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn num_users(&self) -> usize {
        self.users.angles_deg.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        let n = self.array.num_antennas;
        if self.num_selected == 0 || self.num_selected > n {
            return Err(DfrcError::Config(format!(
                "num_selected (K) = {} must lie in 1..={n}",
                self.num_selected
            )));
        }
        if self.users.angles_deg.is_empty() {
            return Err(DfrcError::Config("users.angles_deg must list at least one user".into()));
        }
        let checks = [
            ("users.noise_variance", self.users.noise_variance),
            ("users.sinr_target", self.users.sinr_target.0),
            ("beampattern.passband_threshold", self.beampattern.passband_threshold),
            ("beampattern.stopband_threshold", self.beampattern.stopband_threshold),
            ("max_antenna_power", self.max_antenna_power.0),
            ("admm.rho", self.admm.rho),
        ];
        let refit_rhos = self.refit.runs.iter().map(|r| ("refit.runs[].rho", r.rho));
        for (name, value) in checks.into_iter().chain(refit_rhos) {
            if !(value.is_finite() && value > 0.0) {
                return Err(DfrcError::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.admm.eta.is_finite() && self.admm.eta >= 0.0) {
            return Err(DfrcError::Config(format!("admm.eta must be >= 0, got {}", self.admm.eta)));
        }
        let [lo, hi] = self.users.sweep_spread_deg;
        if !(-90.0..=90.0).contains(&lo) || !(-90.0..=90.0).contains(&hi) || lo > hi {
            return Err(DfrcError::Config(format!(
                "users.sweep_spread_deg [{lo}, {hi}] must be an interval inside [-90, 90]"
            )));
        }
        self.grids()?;
        self.channels()?;
        Ok(())
    }

    pub fn grids(&self) -> Result<AngleGrids> {
        let regions = |r: &[[f64; 2]]| r.iter().map(|[a, b]| AngleRegion::new(*a, *b)).collect::<Vec<_>>();
        build_grids(
            &regions(&self.beampattern.mainlobe_deg),
            &regions(&self.beampattern.stopband_deg),
            self.beampattern.mainlobe_step_deg,
            self.beampattern.stopband_step_deg,
        )
    }

    pub fn channels(&self) -> Result<Vec<UserChannel>> {
        self.users
            .angles_deg
            .iter()
            .enumerate()
            .map(|(m, &theta)| {
                let h = match self.users.channel {
                    ChannelModel::Los { gain } => {
                        los_channel(&self.array, theta, Complex64::new(gain[0], gain[1]))?
                    }
                    ChannelModel::Rayleigh { seed } => {
                        rayleigh_channel(&self.array, trial_seed(seed.unwrap_or(self.seed), m as u64))
                    }
                };
                UserChannel::new(h, self.users.noise_variance, self.users.sinr_target.0)
            })
            .collect()
    }

    pub fn levels(&self) -> ConstraintLevels {
        ConstraintLevels {
            passband: self.beampattern.passband_threshold,
            stopband: self.beampattern.stopband_threshold,
            antenna_power: vec![self.max_antenna_power.0; self.array.num_antennas],
        }
    }

    pub fn assemble(&self) -> Result<ProblemInstance> {
        ProblemInstance::assemble(
            &self.array,
            &self.grids()?,
            &self.levels(),
            &self.channels()?,
            self.admm.eta,
        )
    }

    pub fn admm_config(&self, parallelism: usize) -> AdmmConfig {
        AdmmConfig {
            rho: self.admm.rho,
            max_iterations: self.admm.max_iterations,
            primal_tol: self.admm.primal_tol,
            dual_tol: self.admm.dual_tol,
            parallelism,
        }
    }

    pub fn refit_configs(&self) -> Vec<AdmmConfig> {
        self.refit
            .runs
            .iter()
            .map(|r| AdmmConfig {
                rho: r.rho,
                max_iterations: r.max_iterations,
                primal_tol: None,
                dual_tol: None,
                parallelism: 1,
            })
            .collect()
    }

    /// Same scenario with `num_users` users. The configured angles are kept
    /// when the count matches; otherwise users sit at the centres of
    /// `num_users` equal cells of `sweep_spread_deg`.
    pub fn with_num_users(&self, num_users: usize) -> Result<Self> {
        if num_users == 0 {
            return Err(DfrcError::Config("M must be at least 1".into()));
        }
        let mut out = self.clone();
        if num_users != self.num_users() {
            let [lo, hi] = self.users.sweep_spread_deg;
            let cell = (hi - lo) / num_users as f64;
            out.users.angles_deg = (0..num_users).map(|k| lo + cell * (k as f64 + 0.5)).collect();
        }
        out.validate()?;
        Ok(out)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serialises");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| DfrcError::Config(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| match e {
        DfrcError::Json(j) => DfrcError::Config(format!("{}: {j}", path.display())),
        other => other,
    })
}

pub fn write_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scenario.to_json()? + "\n")?;
    Ok(())
}
