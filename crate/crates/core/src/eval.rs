//! Figures of merit and feasibility reporting for a beamformer stack.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::array::{linear_to_db, steering_vector, AngleGrids, ArrayGeometry, UserChannel};
use crate::error::Result;
use crate::problem::{inner, BeamformerStack, ConstraintClass, ProblemInstance};

/// Slack tolerance for calling a design feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

/// Display grid step for beampatterns, in degrees.
pub const BEAMPATTERN_STEP_DEG: f64 = 0.5;

/// `Σ_m ‖w_m‖²`
pub fn tx_power(w: &BeamformerStack) -> f64 {
    (0..w.num_users())
        .map(|m| w.user_block(m).iter().map(|x| x.norm_sqr()).sum::<f64>())
        .sum()
}

/// `Σ_m |a(θ)^H w_m|²`
pub fn response(w: &BeamformerStack, a: &[crate::Complex64]) -> f64 {
    (0..w.num_users())
        .map(|m| inner(a, w.user_block(m)).norm_sqr())
        .sum()
}

/// Total mainlobe response over total stopband response, on the constraint
/// grids. `NaN` when both are zero, `+∞` when only the stopband is.
pub fn msrr(w: &BeamformerStack, geometry: &ArrayGeometry, grids: &AngleGrids) -> Result<f64> {
    let total = |angles: &[f64]| -> Result<f64> {
        angles.iter().try_fold(0.0, |acc, &theta| {
            Ok(acc + response(w, &steering_vector(geometry, theta)?.entries))
        })
    };
    let main = total(&grids.mainlobe)?;
    let stop = total(&grids.stopband)?;
    Ok(ratio(main, stop))
}

/// MSRR read off the passband and stopband rows of an assembled problem.
pub fn problem_msrr(w: &BeamformerStack, problem: &ProblemInstance) -> f64 {
    let mut main = 0.0;
    let mut stop = 0.0;
    for c in problem.constraints() {
        match c.class() {
            ConstraintClass::PassBand => main += c.response(w.as_slice()),
            ConstraintClass::StopBand => stop += c.response(w.as_slice()),
            _ => {}
        }
    }
    ratio(main, stop)
}

fn ratio(main: f64, stop: f64) -> f64 {
    if stop == 0.0 {
        if main == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        main / stop
    }
}

/// `(θ, Σ_m |a(θ)^H w_m|²)` for every angle.
pub fn beampattern(w: &BeamformerStack, geometry: &ArrayGeometry, angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    angles
        .iter()
        .map(|&theta| Ok((theta, response(w, &steering_vector(geometry, theta)?.entries))))
        .collect()
}

/// `-90°, -89.5°, …, 90°`
pub fn display_grid() -> Vec<f64> {
    let steps = (180.0 / BEAMPATTERN_STEP_DEG).round() as usize;
    (0..=steps)
        .map(|k| -90.0 + k as f64 * BEAMPATTERN_STEP_DEG)
        .collect()
}

/// `|h_m^H w_m|² / (Σ_{j≠m} |h_m^H w_j|² + σ_m²)` per user.
pub fn sinr_per_user(w: &BeamformerStack, users: &[UserChannel]) -> Vec<f64> {
    users
        .iter()
        .enumerate()
        .map(|(m, ch)| {
            let gains: Vec<f64> = (0..w.num_users())
                .map(|j| inner(&ch.h, w.user_block(j)).norm_sqr())
                .collect();
            let interference: f64 = gains
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != m)
                .map(|(_, g)| g)
                .sum();
            gains[m] / (interference + ch.noise_variance)
        })
        .collect()
}

/// `Σ_m |w_m(n)|²` per antenna.
pub fn per_antenna_power(w: &BeamformerStack) -> Vec<f64> {
    w.group_norms().into_iter().map(|g| g * g).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `f_l − w^H F_l w` for every row, in row order.
    pub slacks: Vec<f64>,
    /// Largest violation (`max(0, −slack)`) per constraint family.
    pub max_violation: BTreeMap<ConstraintClass, f64>,
    pub feasible: bool,
}

pub fn feasibility_report(w: &BeamformerStack, problem: &ProblemInstance) -> FeasibilityReport {
    let mut max_violation: BTreeMap<ConstraintClass, f64> = BTreeMap::new();
    let slacks: Vec<f64> = problem
        .constraints()
        .iter()
        .map(|c| {
            let slack = c.slack(w.as_slice());
            let entry = max_violation.entry(c.class()).or_insert(0.0);
            *entry = entry.max(-slack);
            slack
        })
        .collect();
    let feasible = slacks.iter().all(|s| *s >= -FEASIBILITY_TOLERANCE);
    FeasibilityReport {
        slacks,
        max_violation,
        feasible,
    }
}

/// Everything reported for one design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub support: Vec<usize>,
    pub tx_power: f64,
    pub msrr: f64,
    pub msrr_db: f64,
    pub sinr: Vec<f64>,
    pub sinr_db: Vec<f64>,
    pub per_antenna_power: Vec<f64>,
    pub feasibility: FeasibilityReport,
    #[serde(skip)]
    pub beampattern: Vec<(f64, f64)>,
}

pub fn design_report(
    w: &BeamformerStack,
    support: &[usize],
    geometry: &ArrayGeometry,
    grids: &AngleGrids,
    users: &[UserChannel],
    problem: &ProblemInstance,
) -> Result<DesignReport> {
    let msrr = msrr(w, geometry, grids)?;
    let sinr = sinr_per_user(w, users);
    Ok(DesignReport {
        support: support.to_vec(),
        tx_power: tx_power(w),
        msrr,
        msrr_db: linear_to_db(msrr),
        sinr_db: sinr.iter().map(|s| linear_to_db(*s)).collect(),
        sinr,
        per_antenna_power: per_antenna_power(w),
        feasibility: feasibility_report(w, problem),
        beampattern: beampattern(w, geometry, &display_grid())?,
    })
}
