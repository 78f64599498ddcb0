//! Uniform linear array model: steering vectors, user channels, angle grids
//! and the dB conversions used at the configuration boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DfrcError, Result};

/// Uniform linear array. Element spacing is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub num_antennas: usize,
    #[serde(default = "default_spacing")]
    pub element_spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, element_spacing: f64) -> Result<Self> {
        let geometry = Self {
            num_antennas,
            element_spacing,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Half-wavelength ULA.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas < 2 {
            return Err(DfrcError::Config(format!(
                "array needs at least 2 antennas, got {}",
                self.num_antennas
            )));
        }
        if !(self.element_spacing.is_finite() && self.element_spacing > 0.0) {
            return Err(DfrcError::Config(format!(
                "element spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }
}

/// Array response toward one direction. The first element is the phase reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub angle_deg: f64,
    pub entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `exp(j 2π d n sin θ)` for element `n = 0..N`.
pub fn steering_vector(geometry: &ArrayGeometry, angle_deg: f64) -> Result<SteeringVector> {
    if !(-90.0..=90.0).contains(&angle_deg) {
        return Err(DfrcError::Domain(format!(
            "angle {angle_deg}° outside [-90°, 90°]"
        )));
    }
    let increment = 2.0 * PI * geometry.element_spacing * angle_deg.to_radians().sin();
    let entries = (0..geometry.num_antennas)
        .map(|n| Complex64::from_polar(1.0, increment * n as f64))
        .collect();
    Ok(SteeringVector { angle_deg, entries })
}

/// Downlink user: channel vector plus noise level and SINR requirement (both linear).
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    pub h: Vec<Complex64>,
    pub noise_variance: f64,
    pub sinr_target: f64,
}

impl UserChannel {
    pub fn new(h: Vec<Complex64>, noise_variance: f64, sinr_target: f64) -> Result<Self> {
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(DfrcError::Config(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        if !(sinr_target.is_finite() && sinr_target > 0.0) {
            return Err(DfrcError::Config(format!(
                "SINR target must be positive, got {sinr_target}"
            )));
        }
        if h.iter().map(|x| x.norm_sqr()).sum::<f64>() <= 0.0 {
            return Err(DfrcError::Config("channel vector is zero".into()));
        }
        Ok(Self {
            h,
            noise_variance,
            sinr_target,
        })
    }
}

/// Line-of-sight channel `gain · a(θ)`.
pub fn los_channel(
    geometry: &ArrayGeometry,
    angle_deg: f64,
    gain: Complex64,
) -> Result<Vec<Complex64>> {
    if gain.norm() <= 0.0 {
        return Err(DfrcError::Domain("channel gain must be nonzero".into()));
    }
    let a = steering_vector(geometry, angle_deg)?;
    Ok(a.entries.into_iter().map(|x| gain * x).collect())
}

/// i.i.d. CN(0, 1) entries, reproducible per seed.
pub fn rayleigh_channel(geometry: &ArrayGeometry, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..geometry.num_antennas)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(scale * re, scale * im)
        })
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Closed angular interval in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleRegion {
    pub start: f64,
    pub end: f64,
}

impl AngleRegion {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    fn overlaps(&self, other: &AngleRegion) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Samples `start, start + step, …` and always includes `end`.
    fn sample(&self, step: f64) -> Vec<f64> {
        let mut points = Vec::new();
        let mut k = 0usize;
        loop {
            let angle = self.start + k as f64 * step;
            if angle > self.end + 1e-9 {
                break;
            }
            points.push(angle.min(self.end));
            k += 1;
        }
        if let Some(&last) = points.last() {
            if last < self.end - 1e-9 {
                points.push(self.end);
            }
        }
        points
    }
}

/// Constraint angles: mainlobe (passband) and stopband grids.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrids {
    pub mainlobe: Vec<f64>,
    pub stopband: Vec<f64>,
}

impl AngleGrids {
    pub fn len(&self) -> usize {
        self.mainlobe.len() + self.stopband.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Midpoint of the mainlobe grid.
    pub fn mainlobe_center(&self) -> Option<f64> {
        let first = self.mainlobe.first()?;
        let last = self.mainlobe.last()?;
        Some(0.5 * (first + last))
    }
}

fn check_regions(regions: &[AngleRegion], what: &str) -> Result<()> {
    for r in regions {
        if !(r.start.is_finite() && r.end.is_finite()) || r.start > r.end {
            return Err(DfrcError::Config(format!(
                "{what} region [{}, {}] is not an interval",
                r.start, r.end
            )));
        }
        if r.start < -90.0 || r.end > 90.0 {
            return Err(DfrcError::Config(format!(
                "{what} region [{}, {}] leaves [-90°, 90°]",
                r.start, r.end
            )));
        }
    }
    Ok(())
}

fn sample_regions(regions: &[AngleRegion], step: f64, what: &str) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(DfrcError::Config(format!(
            "{what} step must be positive, got {step}"
        )));
    }
    let mut sorted = regions.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(DfrcError::Config(format!(
                "{what} regions [{}, {}] and [{}, {}] overlap",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }
    let grid: Vec<f64> = sorted.iter().flat_map(|r| r.sample(step)).collect();
    if grid.is_empty() {
        return Err(DfrcError::Config(format!("{what} grid is empty")));
    }
    Ok(grid)
}

/// Samples every region at its step, endpoints inclusive.
pub fn build_grids(
    mainlobe: &[AngleRegion],
    stopband: &[AngleRegion],
    mainlobe_step: f64,
    stopband_step: f64,
) -> Result<AngleGrids> {
    check_regions(mainlobe, "mainlobe")?;
    check_regions(stopband, "stopband")?;
    for m in mainlobe {
        for s in stopband {
            if m.overlaps(s) {
                return Err(DfrcError::Config(format!(
                    "mainlobe [{}, {}] overlaps stopband [{}, {}]",
                    m.start, m.end, s.start, s.end
                )));
            }
        }
    }
    Ok(AngleGrids {
        mainlobe: sample_regions(mainlobe, mainlobe_step, "mainlobe")?,
        stopband: sample_regions(stopband, stopband_step, "stopband")?,
    })
}
