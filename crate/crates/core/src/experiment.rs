//! End-to-end runs: a single design, and sweeps over K and M against the
//! random-selection baseline.

use serde::Serialize;

use crate::admm::{solve, AdmmState};
use crate::error::{DfrcError, Result};
use crate::eval::{design_report, problem_msrr, tx_power, DesignReport};
use crate::problem::{BeamformerStack, ProblemInstance};
use crate::scenario::Scenario;
use crate::select::{random_selection_baseline, rank_groups, refit, select_support};

/// Result of the regularised solve followed by selection and refit.
#[derive(Debug, Clone)]
pub struct Design {
    pub problem: ProblemInstance,
    /// ADMM state after `k_max` iterations on the full array.
    pub admm: AdmmState,
    /// Antennas by descending group norm of the regularised solution.
    pub ranking: Vec<usize>,
    pub support: Vec<usize>,
    /// Refit beamformers, zero off the support.
    pub weights: BeamformerStack,
    pub report: DesignReport,
}

/// Regularised ADMM on the full array; the K strongest groups are then refit.
pub fn solve_scenario(scenario: &Scenario, parallelism: usize) -> Result<Design> {
    let problem = scenario.assemble()?;
    let admm = solve(&problem, &scenario.admm_config(parallelism), scenario.seed)?;
    let ranking = rank_groups(&admm.w);
    let support = select_support(&admm.w, scenario.num_selected)?;
    design_on_support(scenario, problem, admm, ranking, support)
}

fn design_on_support(
    scenario: &Scenario,
    problem: ProblemInstance,
    admm: AdmmState,
    ranking: Vec<usize>,
    support: Vec<usize>,
) -> Result<Design> {
    let weights = refit(&problem, &support, &scenario.refit_configs(), scenario.seed)?;
    let report = design_report(
        &weights,
        &support,
        &scenario.array,
        &scenario.grids()?,
        &scenario.channels()?,
        &problem,
    )?;
    Ok(Design {
        problem,
        admm,
        ranking,
        support,
        weights,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Random => "random",
        }
    }
}

/// One line of `sweep.csv`. `value` is K or M depending on the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: usize,
    pub method: Method,
    pub mean_tx_power: f64,
    pub mean_msrr: f64,
    pub infeasible: usize,
    pub trials: usize,
}

fn proposed_row(value: usize, problem: &ProblemInstance, outcome: Result<BeamformerStack>) -> Result<SweepRow> {
    match outcome {
        Ok(w) => Ok(SweepRow {
            value,
            method: Method::Proposed,
            mean_tx_power: tx_power(&w),
            mean_msrr: problem_msrr(&w, problem),
            infeasible: 0,
            trials: 1,
        }),
        Err(e) if e.is_infeasible() => Ok(SweepRow {
            value,
            method: Method::Proposed,
            mean_tx_power: f64::NAN,
            mean_msrr: f64::NAN,
            infeasible: 1,
            trials: 1,
        }),
        Err(e) => Err(e),
    }
}

fn random_row(
    value: usize,
    scenario: &Scenario,
    problem: &ProblemInstance,
    k: usize,
    trials: usize,
    parallelism: usize,
) -> Result<SweepRow> {
    let stats = random_selection_baseline(
        problem,
        k,
        trials,
        scenario.seed,
        &scenario.refit_configs(),
        parallelism,
    )?;
    Ok(SweepRow {
        value,
        method: Method::Random,
        mean_tx_power: stats.mean_tx_power,
        mean_msrr: stats.mean_msrr,
        infeasible: stats.infeasible,
        trials: stats.trials,
    })
}

/// Proposed selection versus `trials` random K-subsets for every K in `ks`.
/// The regularised solve does not depend on K, so it runs once.
pub fn sweep_k(scenario: &Scenario, ks: &[usize], trials: usize, parallelism: usize) -> Result<Vec<SweepRow>> {
    if ks.is_empty() {
        return Err(DfrcError::Config("K list is empty".into()));
    }
    let n = scenario.array.num_antennas;
    if let Some(bad) = ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(DfrcError::Config(format!("K = {bad} must lie in 1..={n}")));
    }
    let problem = scenario.assemble()?;
    let admm = solve(&problem, &scenario.admm_config(parallelism), scenario.seed)?;
    let mut rows = Vec::with_capacity(2 * ks.len());
    for &k in ks {
        let support = select_support(&admm.w, k)?;
        let outcome = refit(&problem, &support, &scenario.refit_configs(), scenario.seed);
        rows.push(proposed_row(k, &problem, outcome)?);
        if trials > 0 {
            rows.push(random_row(k, scenario, &problem, k, trials, parallelism)?);
        }
    }
    Ok(rows)
}

/// Fixed K, varying user count. Users are regenerated per M as described in
/// [`Scenario::with_num_users`]; random rows are added when `trials > 0`.
pub fn sweep_m(scenario: &Scenario, ms: &[usize], trials: usize, parallelism: usize) -> Result<Vec<SweepRow>> {
    if ms.is_empty() {
        return Err(DfrcError::Config("M list is empty".into()));
    }
    let mut rows = Vec::with_capacity(2 * ms.len());
    for &m in ms {
        let s = scenario.with_num_users(m)?;
        let problem = s.assemble()?;
        let outcome = solve(&problem, &s.admm_config(parallelism), s.seed).and_then(|admm| {
            let support = select_support(&admm.w, s.num_selected)?;
            refit(&problem, &support, &s.refit_configs(), s.seed)
        });
        rows.push(proposed_row(m, &problem, outcome)?);
        if trials > 0 {
            rows.push(random_row(m, &s, &problem, s.num_selected, trials, parallelism)?);
        }
    }
    Ok(rows)
}
