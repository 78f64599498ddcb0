//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! visible.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

use common::*;
use sparse_dfrc::admm::{run, state_from, update_w, AdmmConfig};
use sparse_dfrc::array::{db_to_linear, steering_vector, ArrayGeometry, UserChannel};
use sparse_dfrc::eval::sinr_per_user;
use sparse_dfrc::experiment::{solve_scenario, sweep_k, Method};
use sparse_dfrc::problem::{
    BeamformerStack, ConstraintClass, ConstraintKind, ConstraintLevels, ProblemInstance, QuadraticConstraint,
};
use sparse_dfrc::prox::group_shrink;
use sparse_dfrc::qcqp::{project, project_generic};
use sparse_dfrc::scenario::{load_scenario, Scenario};
use sparse_dfrc::AngleGrids;

const SEED: u64 = 0x5eed;

fn scenario_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/dfrc_n10_m2.json")
}

fn scenario() -> Scenario {
    load_scenario(scenario_path()).expect("bundled scenario loads")
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    if elapsed <= budget {
        v
    } else {
        verdict(
            false,
            format!("{}; took {:.1}s, budget {:.0}s", v.detail, elapsed.as_secs_f64(), budget.as_secs_f64()),
        )
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn c1_scenario_fidelity() -> Verdict {
    let s = scenario();
    let problem = s.assemble().unwrap();
    let checks = [
        ("N", s.array.num_antennas == 10),
        ("M", s.num_users() == 2),
        ("K", s.num_selected == 8),
        ("eps_p", s.beampattern.passband_threshold == 10.0),
        ("eps_s", s.beampattern.stopband_threshold == 0.5),
        ("gamma", rel_close(s.users.sinr_target.0, db_to_linear(10.0), 1e-15) && rel_close(s.users.sinr_target.0, 10.0, 1e-12)),
        ("sigma2", s.users.noise_variance == 1.0),
        ("P_n", rel_close(s.max_antenna_power.0, 10.0, 1e-12)),
        ("eta", s.admm.eta == 0.1),
        ("rho", s.admm.rho == 50.0),
        ("k_max", s.admm.max_iterations == 100),
        ("L", problem.len() == 38),
    ];
    let bad: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    verdict(bad.is_empty(), format!("L = {}, mismatched: {bad:?}", problem.len()))
}

fn c2_end_to_end() -> Verdict {
    let s = scenario();
    let start = Instant::now();
    let design = solve_scenario(&s, 1).unwrap();
    let elapsed = start.elapsed();
    let w = design.weights.as_slice();
    let eps_p = s.beampattern.passband_threshold;
    let eps_s = s.beampattern.stopband_threshold;
    let gamma = s.users.sinr_target.0;
    let cap = s.max_antenna_power.0;
    let mut failures = Vec::new();
    for c in design.problem.constraints() {
        let r = c.response(w);
        let ok = match c.class() {
            ConstraintClass::PassBand => r >= eps_p * (1.0 - 1e-2),
            ConstraintClass::StopBand => r <= eps_s * (1.0 + 1e-2),
            ConstraintClass::AntennaPower => r <= cap * (1.0 + 1e-6),
            ConstraintClass::Sinr => true,
        };
        if !ok {
            failures.push(format!("{} = {r}", c.label()));
        }
    }
    let sinr = sinr_per_user(&design.weights, &s.channels().unwrap());
    for (m, x) in sinr.iter().enumerate() {
        if *x < gamma * (1.0 - 1e-2) {
            failures.push(format!("sinr[{m}] = {x}"));
        }
    }
    let off_support = (0..10)
        .filter(|n| !design.support.contains(n))
        .all(|n| design.weights.antenna_group(n).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    if design.support.len() != 8 || !off_support {
        failures.push(format!("support {:?}", design.support));
    }
    within_budget(
        verdict(
            failures.is_empty(),
            format!(
                "support {:?}, TxPower {:.4}, SINR {:?}, violations {failures:?}",
                design.support, design.report.tx_power, sinr
            ),
        ),
        elapsed,
        Duration::from_secs(10),
    )
}

fn c3_random_ordering() -> Verdict {
    let s = scenario();
    let start = Instant::now();
    let rows = sweep_k(&s, &[4, 6, 8], 100, 1).unwrap();
    let elapsed = start.elapsed();
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [4, 6, 8] {
        let get = |m: Method| rows.iter().find(|r| r.value == k && r.method == m).unwrap();
        let (p, r) = (get(Method::Proposed), get(Method::Random));
        let power_ok = p.mean_tx_power < r.mean_tx_power;
        let msrr_ok = p.mean_msrr > r.mean_msrr;
        pass &= power_ok && msrr_ok;
        detail.push(format!(
            "K={k}: TxPower {:.4} vs {:.4} [{}], MSRR {:.4} vs {:.4} [{}], infeasible {}/1 vs {}/{}",
            p.mean_tx_power,
            r.mean_tx_power,
            if power_ok { "ok" } else { "x" },
            p.mean_msrr,
            r.mean_msrr,
            if msrr_ok { "ok" } else { "x" },
            p.infeasible,
            r.infeasible,
            r.trials
        ));
    }
    within_budget(verdict(pass, detail.join("; ")), elapsed, Duration::from_secs(15 * 60))
}

fn c4_beampattern_shape() -> Verdict {
    let s = scenario();
    let design = solve_scenario(&s, 1).unwrap();
    let bp = &design.report.beampattern;
    let peaks: Vec<f64> = (1..bp.len() - 1)
        .filter(|&i| bp[i].1 >= bp[i - 1].1 && bp[i].1 >= bp[i + 1].1)
        .map(|i| bp[i].0)
        .collect();
    let grids = s.grids().unwrap();
    let centre = grids.mainlobe_center().unwrap_or(0.0);
    let mut missing = Vec::new();
    for target in [centre, -45.0, 45.0] {
        if !peaks.iter().any(|p| (p - target).abs() <= 3.0) {
            missing.push(target);
        }
    }
    let eps_s = s.beampattern.stopband_threshold;
    let geom = &s.array;
    let worst_stop = grids
        .stopband
        .iter()
        .map(|&t| {
            let a = steering_vector(geom, t).unwrap().entries;
            (0..design.weights.num_users())
                .map(|m| {
                    design.weights.user_block(m).iter().zip(&a).map(|(w, x)| x.conj() * w).sum::<Complex64>().norm_sqr()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    verdict(
        missing.is_empty() && worst_stop <= eps_s * (1.0 + 1e-2),
        format!("peaks near {peaks:?}; missing {missing:?}; max stopband response {worst_stop:.6}"),
    )
}

fn c5_prox_oracle() -> Verdict {
    let start = Instant::now();
    let mut r = rng(SEED);
    let mut worst: f64 = 0.0;
    let mut deadzone_ok = true;
    let mut deadzone_cases = 0;
    for _ in 0..1000 {
        let m = r.gen_range(1..=4);
        let n = r.gen_range(1..=4);
        let eta = r.gen_range(1e-3..1.0);
        let rho = r.gen_range(0.1..100.0);
        let l = r.gen_range(1..=60usize);
        let t = eta / (rho * l as f64);
        let scale = t * r.gen_range(0.1..3.0) / (m as f64).sqrt();
        let c = cn_vec(&mut r, m * n, scale);
        let ours = group_shrink(&c, eta, rho, l, n);
        let oracle = prox_oracle(&c, t, n);
        let err = ours.iter().zip(&oracle).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err / scale.max(1.0));
        let all_dead = (0..n).all(|k| (k..c.len()).step_by(n).map(|i| c[i].norm_sqr()).sum::<f64>().sqrt() <= t);
        if all_dead {
            deadzone_cases += 1;
            deadzone_ok &= ours.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        }
    }
    within_budget(
        verdict(
            worst <= 1e-8 && deadzone_ok && deadzone_cases > 0,
            format!("max deviation {worst:.2e}; {deadzone_cases} all-dead-zone inputs, exact zero: {deadzone_ok}"),
        ),
        start.elapsed(),
        Duration::from_secs(60),
    )
}

struct ProjectionCase {
    f: CMat,
    bound: f64,
    target: Vec<Complex64>,
    structured: Option<QuadraticConstraint>,
}

fn projection_case(kind: usize, r: &mut rand_chacha::ChaCha8Rng) -> ProjectionCase {
    let target_scale = r.gen_range(0.2..3.0);
    match kind {
        0 | 1 => {
            let m = r.gen_range(1..=2);
            let n = r.gen_range(1..=4);
            let a = steering(n, r.gen_range(0.3..0.7), r.gen_range(-90.0..90.0));
            let target = cn_vec(r, m * n, target_scale);
            let eps = r.gen_range(0.05..8.0);
            if kind == 0 {
                let c = QuadraticConstraint::passband(&a, 0.0, eps, m).unwrap();
                ProjectionCase { f: -beam_matrix(&a, m), bound: -eps, target, structured: Some(c) }
            } else {
                let c = QuadraticConstraint::stopband(&a, 0.0, eps, m).unwrap();
                ProjectionCase { f: beam_matrix(&a, m), bound: eps, target, structured: Some(c) }
            }
        }
        2 => {
            let m = r.gen_range(1..=4);
            let n = r.gen_range(1..=2);
            let antenna = r.gen_range(0..n);
            let cap = r.gen_range(0.05..4.0);
            let target = cn_vec(r, m * n, target_scale);
            let c = QuadraticConstraint::antenna_power(antenna, cap, m, n).unwrap();
            ProjectionCase { f: antenna_matrix(antenna, m, n), bound: cap, target, structured: Some(c) }
        }
        3 => {
            let m = r.gen_range(1..=3);
            let n = r.gen_range(1..=(8 / m).min(4));
            let user = r.gen_range(0..m);
            let h = cn_vec(r, n, 1.0);
            let gamma = r.gen_range(0.1..20.0);
            let sigma2 = r.gen_range(0.1..2.0);
            let target = cn_vec(r, m * n, target_scale);
            let c = QuadraticConstraint::sinr(&h, gamma, sigma2, user, m).unwrap();
            ProjectionCase {
                f: -sinr_matrix(&h, gamma, user, m),
                bound: -gamma * sigma2,
                target,
                structured: Some(c),
            }
        }
        _ => {
            let dim = r.gen_range(1..=8);
            let f = random_hermitian(r, dim);
            let eig = SymmetricEigen::new(f.clone());
            let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            let bound = if min_eig >= 0.0 { r.gen_range(0.1..2.0) } else { r.gen_range(-2.0..2.0) };
            let mut target = cn_vec(r, dim, target_scale);
            // a third of the cases have no component on the most negative
            // eigenvector, which exercises the hard case
            if min_eig < 0.0 && r.gen_bool(1.0 / 3.0) {
                let k = eig.eigenvalues.iter().position(|&x| x == min_eig).unwrap();
                let q = eig.eigenvectors.column(k);
                let coeff: Complex64 = q.iter().zip(&target).map(|(a, b)| a.conj() * b).sum();
                for (t, qi) in target.iter_mut().zip(q.iter()) {
                    *t -= qi * coeff;
                }
            }
            ProjectionCase { f, bound, target, structured: None }
        }
    }
}

fn c6_projection_oracle() -> Verdict {
    let start = Instant::now();
    let names = ["passband", "stopband", "antenna-power", "sinr", "generic"];
    let mut r = rng(SEED + 6);
    let mut report = Vec::new();
    let mut pass = true;
    for (kind, name) in names.iter().enumerate() {
        let (mut gap_max, mut kkt_max, mut active) = (f64::NEG_INFINITY, 0.0f64, 0);
        let mut errors = 0;
        for i in 0..200 {
            let case = projection_case(kind, &mut r);
            let result = match &case.structured {
                Some(c) => project(c, &case.target),
                None => project_generic(&case.f, case.bound, &case.target),
            };
            let Ok(res) = result else {
                errors += 1;
                continue;
            };
            let v = &res.point;
            let q = quad(&case.f, v);
            let feas_tol = 1e-9 * case.bound.abs().max(1.0);
            let fv = mat_vec(&case.f, v);
            let stationarity = v
                .iter()
                .zip(&case.target)
                .zip(&fv)
                .map(|((a, b), c)| (a - b + c * res.multiplier).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let slackness = (res.multiplier * (q - case.bound)).abs();
            let kkt = stationarity.max(slackness);
            if q > case.bound + feas_tol || res.multiplier < 0.0 {
                errors += 1;
            }
            if res.active {
                active += 1;
            }
            kkt_max = kkt_max.max(kkt);
            let oracle = penalty_oracle(&case.f, case.bound, &case.target, 32, SEED + 1000 * kind as u64 + i);
            let gap = dist_sqr(v, &case.target) - dist_sqr(&oracle, &case.target);
            gap_max = gap_max.max(gap);
        }
        let ok = errors == 0 && gap_max <= 1e-6 && kkt_max <= 1e-8;
        pass &= ok;
        report.push(format!("{name}: gap {gap_max:.1e}, KKT {kkt_max:.1e}, active {active}/200, errors {errors}"));
    }
    within_budget(verdict(pass, report.join("; ")), start.elapsed(), Duration::from_secs(300))
}

fn c7_w_update() -> Verdict {
    let mut r = rng(SEED + 7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let m = r.gen_range(1..=3);
        let n = r.gen_range(1..=4);
        let l = r.gen_range(1..=40);
        let rho = r.gen_range(0.01..100.0);
        let v: Vec<Vec<Complex64>> = (0..l).map(|_| cn_vec(&mut r, m * n, 1.0)).collect();
        let u: Vec<Vec<Complex64>> = (0..l).map(|_| cn_vec(&mut r, m * n, 1.0)).collect();
        let w = update_w(&v, &u, rho, m, n);
        let mut total = vec![Complex64::new(0.0, 0.0); m * n];
        for (vl, ul) in v.iter().zip(&u) {
            for (t, (a, b)) in total.iter_mut().zip(vl.iter().zip(ul)) {
                *t += a + b;
            }
        }
        // ∇_w [‖w‖² + (ρ/2) Σ‖v_l + u_l − w‖²] = 2w − ρ Σ (v_l + u_l − w)
        let scale = 1.0 + rho * total.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let resid = w
            .as_slice()
            .iter()
            .zip(&total)
            .map(|(wi, ti)| (wi * (2.0 + rho * l as f64) - ti * rho).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(resid / scale);
    }
    let v1 = vec![vec![Complex64::new(1.5, -2.0), Complex64::new(0.25, 0.5)]];
    let u1 = vec![vec![Complex64::new(0.5, 1.0), Complex64::new(-0.25, 0.5)]];
    let w1 = update_w(&v1, &u1, 2.0, 1, 2);
    let single = w1.as_slice() == [Complex64::new(1.0, -0.5), Complex64::new(0.0, 0.5)];
    let zeros = vec![vec![Complex64::new(0.0, 0.0); 6]; 5];
    let zero = update_w(&zeros, &zeros, 50.0, 2, 3).as_slice().iter().all(|z| *z == Complex64::new(0.0, 0.0));
    verdict(
        worst <= 1e-10 && single && zero,
        format!("max relative normal-equation residual {worst:.2e}; L=1 exact {single}; zero input exact {zero}"),
    )
}

fn c8_determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_sparse-dfrc");
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<Vec<u8>> = [1, 4]
        .iter()
        .map(|p| {
            let out = dir.path().join(format!("p{p}"));
            let status = Command::new(bin)
                .args(["sweep-k", "--scenario"])
                .arg(scenario_path())
                .arg("--out")
                .arg(&out)
                .args(["--seed", "7", "--trials", "20", "--k", "7,8,10", "--parallel", &p.to_string()])
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(out.join("sweep.csv")).unwrap()
        })
        .collect();
    let rows = String::from_utf8_lossy(&outputs[0]).lines().count();
    verdict(outputs[0] == outputs[1], format!("{} bytes, {rows} lines, identical: {}", outputs[0].len(), outputs[0] == outputs[1]))
}

static CAPTURED: Mutex<Vec<String>> = Mutex::new(Vec::new());

struct Capture;

impl log::Log for Capture {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }
    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            CAPTURED.lock().unwrap().push(record.args().to_string());
        }
    }
    fn flush(&self) {}
}

static LOGGER: Capture = Capture;

fn c9_premise_guard() -> Verdict {
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(log::LevelFilter::Warn);
    let s = scenario();
    let problem = s.assemble().unwrap();
    let reference = s.admm_config(1).premise_warning(0.1, 38);
    let weak = AdmmConfig { rho: 0.005, ..AdmmConfig::default() };
    let flagged = weak.premise_warning(0.1, 38);

    let run_logged = |config: &AdmmConfig| {
        CAPTURED.lock().unwrap().clear();
        let cfg = AdmmConfig { max_iterations: 1, ..config.clone() };
        let start = state_from(&problem, BeamformerStack::zeros(2, 10));
        run(&problem, &cfg, start).unwrap();
        CAPTURED.lock().unwrap().iter().any(|m| m.contains("rho/2"))
    };
    let logged_weak = run_logged(&weak);
    let logged_default = run_logged(&s.admm_config(1));
    verdict(
        reference.is_none() && flagged.is_some() && logged_weak && !logged_default,
        format!(
            "rho=50: {}; rho=0.005: {}; logged during run: weak {logged_weak}, default {logged_default}",
            if reference.is_none() { "silent" } else { "warned" },
            flagged.as_deref().unwrap_or("silent")
        ),
    )
}

fn c10_dense_equivalence() -> Verdict {
    let mut r = rng(SEED + 10);
    let mut worst: f64 = 0.0;
    let mut worst_entry: f64 = 0.0;
    for _ in 0..300 {
        let n = r.gen_range(2..=6);
        let m = r.gen_range(1..=3);
        let geom = ArrayGeometry::new(n, r.gen_range(0.25..1.0)).unwrap();
        let grids = AngleGrids {
            mainlobe: (0..r.gen_range(1..=3)).map(|_| r.gen_range(-90.0..90.0)).collect(),
            stopband: (0..r.gen_range(1..=4)).map(|_| r.gen_range(-90.0..90.0)).collect(),
        };
        let levels = ConstraintLevels {
            passband: r.gen_range(0.1..10.0),
            stopband: r.gen_range(0.1..1.0),
            antenna_power: (0..n).map(|_| r.gen_range(0.5..20.0)).collect(),
        };
        let users: Vec<UserChannel> = (0..m)
            .map(|_| UserChannel::new(cn_vec(&mut r, n, 1.0), r.gen_range(0.1..2.0), r.gen_range(0.5..20.0)).unwrap())
            .collect();
        let problem = ProblemInstance::assemble(&geom, &grids, &levels, &users, 0.1).unwrap();
        let amplitude = r.gen_range(0.1..5.0);
        let w = cn_vec(&mut r, m * n, amplitude);
        for c in problem.constraints() {
            let (explicit, scale) = match *c.kind() {
                ConstraintKind::PassBand { angle_deg, .. } | ConstraintKind::StopBand { angle_deg, .. } => {
                    let a = steering(n, geom.element_spacing, angle_deg);
                    let f = beam_matrix(&a, m);
                    let x = quad(&f, &w);
                    (f, x.abs())
                }
                ConstraintKind::AntennaPower { antenna, .. } => {
                    let f = antenna_matrix(antenna, m, n);
                    let x = quad(&f, &w);
                    (f, x.abs())
                }
                ConstraintKind::Sinr { user, target, .. } => {
                    let f = sinr_matrix(&users[user].h, target, user, m);
                    let parts: f64 = (0..m)
                        .map(|j| {
                            let cj = sinr_matrix(&users[user].h, 0.0, j, m);
                            let wj = if j == user { 1.0 } else { target };
                            wj * quad(&cj, &w)
                        })
                        .sum();
                    (f, parts)
                }
            };
            let structured = c.response(&w);
            let dense = quad(&explicit, &w);
            worst = worst.max((structured - dense).abs() / scale.max(1e-300));
            let sign = if matches!(c.class(), ConstraintClass::PassBand | ConstraintClass::Sinr) { -1.0 } else { 1.0 };
            let mat = c.dense();
            for (x, y) in mat.iter().zip(explicit.iter()) {
                worst_entry = worst_entry.max((x - y * sign).norm());
            }
        }
    }
    verdict(
        worst <= 1e-10 && worst_entry <= 1e-12,
        format!("max relative quadratic-form error {worst:.2e}; max matrix entry error {worst_entry:.2e}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "scenario fidelity", c1_scenario_fidelity),
        (2, "end-to-end feasible design", c2_end_to_end),
        (3, "proposed beats random selection", c3_random_ordering),
        (4, "beampattern shape", c4_beampattern_shape),
        (5, "prox oracle", c5_prox_oracle),
        (6, "projection oracle", c6_projection_oracle),
        (7, "closed-form w-update", c7_w_update),
        (8, "determinism across --parallel", c8_determinism),
        (9, "premise guard", c9_premise_guard),
        (10, "dense-oracle equivalence", c10_dense_equivalence),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} [{status}] {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
