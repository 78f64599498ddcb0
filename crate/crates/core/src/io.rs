//! CSV and JSON artifacts.
//!
//! Every CSV has a header row and ends each record with `scenario_hash,seed`.
//! Floats use Rust's shortest round-trip formatting (`{:?}`), so equal values
//! always print identically and parse back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::admm::IterationRecord;
use crate::error::Result;
use crate::eval::DesignReport;
use crate::experiment::{Design, SweepRow};
use crate::problem::BeamformerStack;
use crate::scenario::Scenario;
use crate::Complex64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub scenario_hash: String,
    pub seed: u64,
    pub crate_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub git_commit: Option<String>,
}

impl Provenance {
    pub fn new(scenario_hash: String, seed: u64) -> Self {
        Self {
            scenario_hash,
            seed,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            git_commit: None,
        }
    }

    fn suffix(&self) -> String {
        format!(",{},{}", self.scenario_hash, self.seed)
    }
}

/// `re+imj`, e.g. `1.5-0.25j`.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}j", z.re, sign, z.im.abs())
}

/// Inverse of [`format_complex`].
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let body = text.trim().strip_suffix('j')?;
    // the imaginary sign is the last +/- not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re = body[..split].parse().ok()?;
    let im = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}

fn csv(header: &str, rows: impl Iterator<Item = String>, prov: &Provenance) -> String {
    let mut out = format!("{header},scenario_hash,seed\n");
    let suffix = prov.suffix();
    for row in rows {
        out.push_str(&row);
        out.push_str(&suffix);
        out.push('\n');
    }
    out
}

pub fn beampattern_csv(pattern: &[(f64, f64)], prov: &Provenance) -> String {
    csv(
        "theta_deg,response",
        pattern.iter().map(|(t, r)| format!("{t:?},{r:?}")),
        prov,
    )
}

pub fn history_csv(history: &[IterationRecord], prov: &Provenance) -> String {
    csv(
        "k,objective,primal_residual,dual_residual",
        history.iter().map(|h| {
            format!(
                "{},{:?},{:?},{:?}",
                h.iteration, h.objective, h.primal_residual, h.dual_residual
            )
        }),
        prov,
    )
}

pub fn weights_csv(w: &BeamformerStack, prov: &Provenance) -> String {
    let rows = (0..w.num_users()).flat_map(|m| {
        w.user_block(m)
            .iter()
            .enumerate()
            .map(move |(n, z)| format!("{m},{n},{}", format_complex(*z)))
            .collect::<Vec<_>>()
    });
    csv("user,antenna,weight", rows, prov)
}

/// `axis` is the sweep variable's column name, `K` or `M`.
pub fn sweep_csv(axis: &str, rows: &[SweepRow], prov: &Provenance) -> String {
    let mut header = String::new();
    write!(header, "{axis},method,mean_tx_power,mean_msrr,infeasible,trials").unwrap();
    csv(
        &header,
        rows.iter().map(|r| {
            format!(
                "{},{},{:?},{:?},{},{}",
                r.value,
                r.method.name(),
                r.mean_tx_power,
                r.mean_msrr,
                r.infeasible,
                r.trials
            )
        }),
        prov,
    )
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    provenance: &'a Provenance,
    scenario: &'a Scenario,
    num_constraints: usize,
    admm_iterations: usize,
    final_objective: Option<f64>,
    ranking: &'a [usize],
    design: &'a DesignReport,
}

pub fn report_json(design: &Design, scenario: &Scenario, prov: &Provenance) -> Result<String> {
    let doc = ReportDocument {
        provenance: prov,
        scenario,
        num_constraints: design.problem.len(),
        admm_iterations: design.admm.iteration,
        final_objective: design.admm.history.last().map(|h| h.objective),
        ranking: &design.ranking,
        design: &design.report,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Writes `report.json`, `beampattern.csv`, `history.csv` and `weights.csv`
/// into `dir` (created if missing). Returns the written paths.
pub fn write_design(dir: &Path, design: &Design, scenario: &Scenario, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        ("report.json", report_json(design, scenario, prov)?),
        ("beampattern.csv", beampattern_csv(&design.report.beampattern, prov)),
        ("history.csv", history_csv(&design.admm.history, prov)),
        ("weights.csv", weights_csv(&design.weights, prov)),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}

pub fn write_sweep(dir: &Path, axis: &str, rows: &[SweepRow], prov: &Provenance) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("sweep.csv");
    fs::write(&path, sweep_csv(axis, rows, prov))?;
    Ok(path)
}
