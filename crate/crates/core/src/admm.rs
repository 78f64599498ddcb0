//! Consensus ADMM over the constraint rows.
//!
//! Every row `l` owns a copy `v_l` of the stacked beamformer and a scaled dual
//! `u_l`. One iteration is
//!
//! ```text
//! w   <- ρ/(2 + ρL) · Σ_l (v_l + u_l)
//! v_l <- project_l( group_shrink(w − u_l) )      for every l, in parallel
//! u_l <- u_l + v_l − w
//! ```
//!
//! The sum over `l` uses a fixed pairwise reduction order, so results do not
//! depend on the number of worker threads.

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DfrcError, Result, ViolatedConstraint};
use crate::problem::{inner, norm_sqr, BeamformerStack, ConstraintKind, ProblemInstance};
use crate::prox::group_shrink;
use crate::qcqp::project;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    /// Augmented Lagrangian parameter ρ.
    pub rho: f64,
    /// Iteration budget k_max.
    pub max_iterations: usize,
    /// Optional early stop on max_l ‖v_l − w‖.
    pub primal_tol: Option<f64>,
    /// Optional early stop on ρ‖w⁺ − w‖.
    pub dual_tol: Option<f64>,
    /// Worker threads for the per-row updates; 1 runs inline.
    pub parallelism: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 50.0,
            max_iterations: 100,
            primal_tol: None,
            dual_tol: None,
            parallelism: 1,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(DfrcError::Config(format!("rho must be positive, got {}", self.rho)));
        }
        for (name, tol) in [("primal_tol", self.primal_tol), ("dual_tol", self.dual_tol)] {
            if let Some(t) = tol {
                if !(t.is_finite() && t > 0.0) {
                    return Err(DfrcError::Config(format!("{name} must be positive, got {t}")));
                }
            }
        }
        if self.parallelism == 0 {
            return Err(DfrcError::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    /// The projection form of the v-update needs `ρ/2 ≫ η/L`. Returns the
    /// warning text when `ρ/2 < 10·η/L`.
    pub fn premise_warning(&self, eta: f64, num_constraints: usize) -> Option<String> {
        if num_constraints == 0 {
            return None;
        }
        let ratio = eta / num_constraints as f64;
        (self.rho / 2.0 < 10.0 * ratio).then(|| {
            format!(
                "rho/2 = {} is not much larger than eta/L = {ratio:e}; \
                 the projected v-update is only a loose approximation",
                self.rho / 2.0
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub w: BeamformerStack,
    pub v: Vec<Vec<Complex64>>,
    pub u: Vec<Vec<Complex64>>,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
}

/// How the starting point was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasiblePoint {
    pub w: BeamformerStack,
    /// Randomised restarts used (0 when the deterministic start worked).
    pub restarts: usize,
    /// Cyclic projection sweeps in the successful attempt.
    pub sweeps: usize,
    /// ρ of the consensus ADMM fallback, when the restarts were not enough.
    pub fallback_rho: Option<f64>,
}

const FEASIBILITY_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 500;
const MAX_RESTARTS: usize = 20;
const FALLBACK_RHO: [f64; 2] = [50.0, 500.0];
const FALLBACK_ITERATIONS: usize = 2000;

/// `u_l = 0`, `v_l = w⁰` for a feasible `w⁰`.
pub fn initialize(problem: &ProblemInstance, seed: u64) -> Result<AdmmState> {
    let start = find_feasible_point(problem, seed)?;
    Ok(state_from(problem, start.w))
}

/// Fresh state around an arbitrary starting stack.
pub fn state_from(problem: &ProblemInstance, w: BeamformerStack) -> AdmmState {
    let l = problem.len();
    let zero = vec![Complex64::new(0.0, 0.0); problem.dim()];
    AdmmState {
        v: vec![w.as_slice().to_vec(); l],
        u: vec![zero; l],
        w,
        iteration: 0,
        history: Vec::new(),
    }
}

/// Deterministic start: zero-forcing beams at twice the SINR target, plus a
/// mainlobe beam (kept out of the other users' channels) on user 0 with 20 %
/// margin, then cyclic projection over all rows. Falls back to randomly
/// perturbed restarts, then to consensus ADMM (η = 0) from the stalled
/// deterministic point followed by cyclic projection.
pub fn find_feasible_point(problem: &ProblemInstance, seed: u64) -> Result<FeasiblePoint> {
    let (m, n) = (problem.num_users(), problem.num_antennas());
    if problem.is_empty() {
        return Ok(FeasiblePoint {
            w: BeamformerStack::zeros(m, n),
            restarts: 0,
            sweeps: 0,
            fallback_rho: None,
        });
    }
    let base = heuristic_start(problem);
    let scale = (norm_sqr(base.as_slice()) / base.as_slice().len() as f64).sqrt().max(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stalled = None;
    let mut last = base.as_slice().to_vec();
    for restart in 0..=MAX_RESTARTS {
        let mut w = base.as_slice().to_vec();
        if restart > 0 {
            let sigma = 0.1 * restart as f64 * scale;
            for x in w.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *x += Complex64::new(re, im) * sigma;
            }
        }
        if let Some(sweeps) = cyclic_projection(problem, &mut w, MAX_SWEEPS)? {
            return Ok(FeasiblePoint {
                w: BeamformerStack::from_vec(m, n, w)?,
                restarts: restart,
                sweeps,
                fallback_rho: None,
            });
        }
        stalled.get_or_insert_with(|| w.clone());
        last = w;
    }
    let plain = problem.clone().with_eta(0.0);
    let stalled = BeamformerStack::from_vec(m, n, stalled.unwrap_or_else(|| last.clone()))?;
    for rho in FALLBACK_RHO {
        let config = AdmmConfig {
            rho,
            max_iterations: FALLBACK_ITERATIONS,
            ..AdmmConfig::default()
        };
        let mut w = run(&plain, &config, state_from(&plain, stalled.clone()))?.w.into_vec();
        if let Some(sweeps) = cyclic_projection(problem, &mut w, MAX_SWEEPS)? {
            return Ok(FeasiblePoint {
                w: BeamformerStack::from_vec(m, n, w)?,
                restarts: MAX_RESTARTS,
                sweeps,
                fallback_rho: Some(rho),
            });
        }
        last = w;
    }
    Err(DfrcError::Infeasible {
        context: format!(
            "no feasible start after {MAX_RESTARTS} restarts of {MAX_SWEEPS} projection sweeps and the consensus ADMM fallback"
        ),
        worst: worst_constraints(problem, &last, 5),
    })
}

/// Rows sorted by violation, largest first.
pub fn worst_constraints(problem: &ProblemInstance, w: &[Complex64], count: usize) -> Vec<ViolatedConstraint> {
    let mut rows: Vec<ViolatedConstraint> = problem
        .constraints()
        .iter()
        .enumerate()
        .map(|(index, c)| ViolatedConstraint {
            index,
            label: c.label(),
            violation: -c.slack(w),
        })
        .filter(|r| r.violation > 0.0)
        .collect();
    rows.sort_by(|a, b| b.violation.total_cmp(&a.violation));
    rows.truncate(count);
    rows
}

fn violation_ok(problem: &ProblemInstance, w: &[Complex64]) -> bool {
    problem
        .constraints()
        .iter()
        .all(|c| -c.slack(w) <= FEASIBILITY_TOLERANCE)
}

/// Sequentially project onto every row until all hold to 1e-8 or the sweep
/// budget runs out. Returns the number of sweeps used on success.
pub fn cyclic_projection(
    problem: &ProblemInstance,
    w: &mut Vec<Complex64>,
    max_sweeps: usize,
) -> Result<Option<usize>> {
    if violation_ok(problem, w) {
        return Ok(Some(0));
    }
    for sweep in 1..=max_sweeps {
        for c in problem.constraints() {
            *w = project(c, w)?.point;
        }
        if violation_ok(problem, w) {
            return Ok(Some(sweep));
        }
    }
    Ok(None)
}

fn heuristic_start(problem: &ProblemInstance) -> BeamformerStack {
    let (m, n) = (problem.num_users(), problem.num_antennas());
    let mut w = BeamformerStack::zeros(m, n);

    let mut channels: Vec<Option<(Vec<Complex64>, f64)>> = vec![None; m];
    for c in problem.constraints() {
        if let ConstraintKind::Sinr {
            user,
            target,
            noise_variance,
        } = *c.kind()
        {
            channels[user] = Some((c.generator().to_vec(), target * noise_variance));
        }
    }
    if channels.iter().all(Option::is_some) {
        let h = DMatrix::from_fn(n, m, |row, col| channels[col].as_ref().unwrap().0[row]);
        let beams = zero_forcing(&h);
        for (user, beam) in beams.into_iter().enumerate() {
            let (ref hu, floor) = *channels[user].as_ref().unwrap();
            let gain = inner(hu, &beam).norm_sqr();
            if gain > 0.0 {
                let scale = (2.0 * floor / gain).sqrt();
                for (dst, x) in w.user_block_mut(user).iter_mut().zip(&beam) {
                    *dst = x * scale;
                }
            }
        }
    }

    add_mainlobe_beam(problem, &mut w, &channels);
    w
}

/// Columns of `H (H^H H)^{-1}`; matched filters when `H` is rank deficient.
fn zero_forcing(h: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    let gram = h.adjoint() * h;
    match gram.try_inverse() {
        Some(inv) if h.ncols() <= h.nrows() => {
            let w = h * inv;
            w.column_iter().map(|c| c.iter().copied().collect()).collect()
        }
        _ => h.column_iter().map(|c| c.iter().copied().collect()).collect(),
    }
}

/// Adds `τ·d` to user 0, `d` the steering vector at the mainlobe centre with
/// the other users' channels projected out, `τ` the smallest amplitude that
/// lifts every passband row to 1.2 ε_p.
fn add_mainlobe_beam(
    problem: &ProblemInstance,
    w: &mut BeamformerStack,
    channels: &[Option<(Vec<Complex64>, f64)>],
) {
    let passbands: Vec<_> = problem
        .constraints()
        .iter()
        .filter_map(|c| match *c.kind() {
            ConstraintKind::PassBand { angle_deg, threshold } => Some((angle_deg, threshold, c)),
            _ => None,
        })
        .collect();
    if passbands.is_empty() {
        return;
    }
    let lo = passbands.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = passbands.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let (_, _, nearest) = passbands
        .iter()
        .min_by(|a, b| (a.0 - center).abs().total_cmp(&(b.0 - center).abs()))
        .unwrap();
    let a = nearest.generator().to_vec();

    let others: Vec<&Vec<Complex64>> = channels
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != 0)
        .filter_map(|(_, c)| c.as_ref().map(|(h, _)| h))
        .collect();
    let mut d = a.clone();
    if !others.is_empty() && others.len() < a.len() {
        let ho = DMatrix::from_fn(a.len(), others.len(), |r, c| others[c][r]);
        if let Some(inv) = (ho.adjoint() * &ho).try_inverse() {
            let av = DVector::from_column_slice(&a);
            let residual = &av - &ho * (inv * (ho.adjoint() * &av));
            if residual.norm() > 1e-6 * av.norm() {
                d = residual.iter().copied().collect();
            }
        }
    }
    if let Some((h0, _)) = channels.first().and_then(Option::as_ref) {
        let existing = inner(h0, w.user_block(0));
        let added = inner(h0, &d);
        if existing.norm() > 0.0 && added.norm() > 0.0 {
            let rot = Complex64::from_polar(1.0, existing.arg() - added.arg());
            d.iter_mut().for_each(|x| *x *= rot);
        }
    }

    let need = |tau: f64| {
        let mut trial = w.clone();
        for (x, dx) in trial.user_block_mut(0).iter_mut().zip(&d) {
            *x += dx * tau;
        }
        let ok = passbands
            .iter()
            .all(|(_, eps, c)| c.response(trial.as_slice()) >= 1.2 * eps);
        (ok, trial)
    };
    if need(0.0).0 {
        return;
    }
    let mut hi = 1e-3;
    let mut found = None;
    for _ in 0..200 {
        let (ok, trial) = need(hi);
        if ok {
            found = Some(trial);
            break;
        }
        hi *= 2.0;
    }
    let Some(mut best) = found else {
        return;
    };
    let mut lo = 0.5 * hi;
    if lo <= 1e-3 {
        lo = 0.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (ok, trial) = need(mid);
        if ok {
            hi = mid;
            best = trial;
        } else {
            lo = mid;
        }
    }
    *w = best;
}

/// Fixed-order pairwise sum of equally sized vectors.
fn pairwise_sum(parts: &[Vec<Complex64>], dim: usize) -> Vec<Complex64> {
    match parts.len() {
        0 => vec![Complex64::new(0.0, 0.0); dim],
        1 => parts[0].clone(),
        len => {
            let (left, right) = parts.split_at(len / 2);
            let mut sum = pairwise_sum(left, dim);
            for (s, r) in sum.iter_mut().zip(pairwise_sum(right, dim)) {
                *s += r;
            }
            sum
        }
    }
}

/// Closed-form consensus update `ρ/(2 + ρL) Σ_l (v_l + u_l)`.
pub fn update_w(
    v: &[Vec<Complex64>],
    u: &[Vec<Complex64>],
    rho: f64,
    num_users: usize,
    num_antennas: usize,
) -> BeamformerStack {
    let l = v.len();
    let dim = num_users * num_antennas;
    let parts: Vec<Vec<Complex64>> = v
        .iter()
        .zip(u)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    let scale = rho / (2.0 + rho * l as f64);
    let data = pairwise_sum(&parts, dim).into_iter().map(|x| x * scale).collect();
    BeamformerStack::from_vec(num_users, num_antennas, data).expect("consistent dimensions")
}

/// `u_l + v_l − w`
pub fn update_u(u: &[Complex64], v: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    u.iter().zip(v).zip(w).map(|((u, v), w)| u + (v - w)).collect()
}

/// Shrink `w − u_l` and project it onto row `l`.
fn update_row(
    problem: &ProblemInstance,
    l: usize,
    w: &[Complex64],
    u: &[Complex64],
    rho: f64,
) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = w.iter().zip(u).map(|(w, u)| w - u).collect();
    let shrunk = group_shrink(&c, problem.eta(), rho, problem.len(), problem.num_antennas());
    Ok(project(&problem.constraints()[l], &shrunk)?.point)
}

/// All L auxiliary updates for the current consensus point.
pub fn update_v(
    problem: &ProblemInstance,
    w: &BeamformerStack,
    u: &[Vec<Complex64>],
    rho: f64,
) -> Result<Vec<Vec<Complex64>>> {
    (0..problem.len())
        .map(|l| update_row(problem, l, w.as_slice(), &u[l], rho))
        .collect()
}

/// Run from a feasible start.
pub fn solve(problem: &ProblemInstance, config: &AdmmConfig, seed: u64) -> Result<AdmmState> {
    let state = initialize(problem, seed)?;
    run(problem, config, state)
}

/// Iterate from `state` until `k_max` or both residual tolerances are met.
pub fn run(problem: &ProblemInstance, config: &AdmmConfig, mut state: AdmmState) -> Result<AdmmState> {
    config.validate()?;
    if let Some(msg) = config.premise_warning(problem.eta(), problem.len()) {
        warn!("{msg}");
    }
    let pool = if config.parallelism > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.parallelism)
                .build()
                .map_err(|e| DfrcError::Numerical(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let (m, n) = (problem.num_users(), problem.num_antennas());
    let rho = config.rho;

    for _ in 0..config.max_iterations {
        let k = state.iteration;
        let w = update_w(&state.v, &state.u, rho, m, n);
        let step = |l: usize| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
            let v = update_row(problem, l, w.as_slice(), &state.u[l], rho).map_err(|e| {
                DfrcError::Numerical(format!(
                    "iteration {k}, constraint {l} ({}): {e}",
                    problem.constraints()[l].label()
                ))
            })?;
            let u = update_u(&state.u[l], &v, w.as_slice());
            Ok((v, u))
        };
        let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = match &pool {
            Some(pool) => pool.install(|| (0..problem.len()).into_par_iter().map(step).collect::<Result<Vec<_>>>())?,
            None => (0..problem.len()).map(step).collect::<Result<_>>()?,
        };
        let (v, u): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

        let primal = v
            .iter()
            .map(|vl| {
                vl.iter()
                    .zip(w.as_slice())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let dual = rho
            * w.as_slice()
                .iter()
                .zip(state.w.as_slice())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
        state.history.push(IterationRecord {
            iteration: k + 1,
            objective: problem.objective(&w),
            primal_residual: primal,
            dual_residual: dual,
        });
        state.w = w;
        state.v = v;
        state.u = u;
        state.iteration = k + 1;

        if let (Some(pt), Some(dt)) = (config.primal_tol, config.dual_tol) {
            if primal <= pt && dual <= dt {
                break;
            }
        }
    }
    Ok(state)
}
