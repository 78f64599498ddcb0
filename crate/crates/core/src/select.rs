//! From the regularised solution to a K-antenna design: rank antenna groups,
//! keep the top K, and refit the beamformers on that subarray with η = 0.

use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{cyclic_projection, find_feasible_point, run, state_from, AdmmConfig};
use crate::error::{DfrcError, Result};
use crate::eval::{problem_msrr, tx_power};
use crate::problem::{embed, BeamformerStack, ProblemInstance};

const POLISH_SWEEPS: usize = 500;

/// Antenna indices by descending group norm; ties go to the lower index.
pub fn rank_groups(w: &BeamformerStack) -> Vec<usize> {
    let norms = w.group_norms();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
}

/// The K strongest antennas, returned in ascending index order.
pub fn select_support(w: &BeamformerStack, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > w.num_antennas() {
        return Err(DfrcError::Config(format!(
            "K = {k} must lie in 1..={}",
            w.num_antennas()
        )));
    }
    let mut support = rank_groups(w)[..k].to_vec();
    support.sort_unstable();
    Ok(support)
}

/// Minimum-power beamformers on a fixed subarray.
///
/// Runs the same ADMM with η = 0 on the restricted problem, once per entry of
/// `configs`, each from the same feasible start, and restores exact
/// feasibility of every result by cyclic projection. The cheapest of the
/// polished iterates and the feasible start is returned, embedded in the full
/// array with zeros off the support.
pub fn refit(
    problem: &ProblemInstance,
    support: &[usize],
    configs: &[AdmmConfig],
    seed: u64,
) -> Result<BeamformerStack> {
    let reduced = problem.restrict(support)?.with_eta(0.0);
    let name = |e: DfrcError| match e {
        DfrcError::Infeasible { context, worst } => DfrcError::Infeasible {
            context: format!("support {support:?}: {context}"),
            worst,
        },
        other => other,
    };
    let start = find_feasible_point(&reduced, seed).map_err(name)?;
    let mut best = start.w.clone();
    for config in configs {
        let state = run(&reduced, config, state_from(&reduced, start.w.clone())).map_err(name)?;
        let mut polished = state.w.into_vec();
        if cyclic_projection(&reduced, &mut polished, POLISH_SWEEPS)?.is_some() {
            let polished =
                BeamformerStack::from_vec(reduced.num_users(), reduced.num_antennas(), polished)?;
            if tx_power(&polished) < tx_power(&best) {
                best = polished;
            }
        }
    }
    Ok(embed(&best, support, problem.num_antennas()))
}

/// Seed for trial `index`, split off the master seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub support: Vec<usize>,
    /// `None` when the drawn subarray admitted no feasible design.
    pub tx_power: Option<f64>,
    pub msrr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStats {
    pub k: usize,
    pub trials: usize,
    pub infeasible: usize,
    /// Means over feasible trials only; `NaN` when none were feasible.
    pub mean_tx_power: f64,
    pub mean_msrr: f64,
    pub records: Vec<TrialRecord>,
}

impl SelectionStats {
    pub fn from_records(k: usize, records: Vec<TrialRecord>) -> Self {
        let feasible: Vec<&TrialRecord> = records.iter().filter(|r| r.tx_power.is_some()).collect();
        let count = feasible.len() as f64;
        let mean = |f: fn(&TrialRecord) -> f64| {
            if feasible.is_empty() {
                f64::NAN
            } else {
                feasible.iter().map(|r| f(r)).sum::<f64>() / count
            }
        };
        Self {
            k,
            trials: records.len(),
            infeasible: records.len() - feasible.len(),
            mean_tx_power: mean(|r| r.tx_power.unwrap()),
            mean_msrr: mean(|r| r.msrr.unwrap()),
            records,
        }
    }
}

/// Uniformly drawn K-subsets, each refit; infeasible draws are counted and
/// left out of the means. Trials run on `parallelism` threads and are
/// reported in trial order.
pub fn random_selection_baseline(
    problem: &ProblemInstance,
    k: usize,
    trials: usize,
    seed: u64,
    configs: &[AdmmConfig],
    parallelism: usize,
) -> Result<SelectionStats> {
    let n = problem.num_antennas();
    if k == 0 || k > n {
        return Err(DfrcError::Config(format!("K = {k} must lie in 1..={n}")));
    }
    let inner_configs: Vec<AdmmConfig> = configs
        .iter()
        .map(|c| AdmmConfig {
            parallelism: 1,
            ..c.clone()
        })
        .collect();
    let trial = |t: usize| -> Result<TrialRecord> {
        let ts = trial_seed(seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(ts);
        let mut support = sample(&mut rng, n, k).into_vec();
        support.sort_unstable();
        match refit(problem, &support, &inner_configs, ts) {
            Ok(w) => Ok(TrialRecord {
                trial: t,
                tx_power: Some(tx_power(&w)),
                msrr: Some(problem_msrr(&w, problem)),
                support,
            }),
            Err(e) if e.is_infeasible() => Ok(TrialRecord {
                trial: t,
                support,
                tx_power: None,
                msrr: None,
            }),
            Err(e) => Err(e),
        }
    };
    let records: Vec<TrialRecord> = if parallelism > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| DfrcError::Numerical(format!("thread pool: {e}")))?
            .install(|| (0..trials).into_par_iter().map(trial).collect::<Result<_>>())?
    } else {
        (0..trials).map(trial).collect::<Result<_>>()?
    };
    Ok(SelectionStats::from_records(k, records))
}
