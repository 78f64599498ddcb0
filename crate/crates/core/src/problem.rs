//! Stacked beamformer variable and the quadratic constraint family
//! `w^H F w <= f`, stored in structured form (generator vectors and index maps).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::array::{steering_vector, AngleGrids, ArrayGeometry, UserChannel};
use crate::error::{DfrcError, Result};

/// Stack `[w_1; w_2; …; w_M]` of per-user beamformers, each of length N.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerStack {
    num_users: usize,
    num_antennas: usize,
    data: Vec<Complex64>,
}

impl BeamformerStack {
    pub fn zeros(num_users: usize, num_antennas: usize) -> Self {
        Self {
            num_users,
            num_antennas,
            data: vec![Complex64::new(0.0, 0.0); num_users * num_antennas],
        }
    }

    pub fn from_vec(num_users: usize, num_antennas: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != num_users * num_antennas {
            return Err(DfrcError::Domain(format!(
                "stack length {} is not M·N = {}·{}",
                data.len(),
                num_users,
                num_antennas
            )));
        }
        Ok(Self {
            num_users,
            num_antennas,
            data,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn user_block(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.num_antennas..(m + 1) * self.num_antennas]
    }

    pub fn user_block_mut(&mut self, m: usize) -> &mut [Complex64] {
        let n = self.num_antennas;
        &mut self.data[m * n..(m + 1) * n]
    }

    /// Entries `{n, n + N, …, n + (M−1)N}`: antenna `n` across all users.
    pub fn antenna_group(&self, n: usize) -> Vec<Complex64> {
        antenna_group(&self.data, self.num_antennas, n).collect()
    }

    /// ℓ2 norm of every antenna group.
    pub fn group_norms(&self) -> Vec<f64> {
        group_norms(&self.data, self.num_antennas)
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.data)
    }

    /// Σ_n ‖antenna_group(n)‖₂
    pub fn l21_norm(&self) -> f64 {
        self.group_norms().iter().sum()
    }
}

pub(crate) fn antenna_group(
    v: &[Complex64],
    num_antennas: usize,
    n: usize,
) -> impl Iterator<Item = Complex64> + '_ {
    v.iter().skip(n).step_by(num_antennas).copied()
}

pub(crate) fn group_norms(v: &[Complex64], num_antennas: usize) -> Vec<f64> {
    (0..num_antennas)
        .map(|n| {
            antenna_group(v, num_antennas, n)
                .map(|x| x.norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// `a^H x`
pub(crate) fn inner(a: &[Complex64], x: &[Complex64]) -> Complex64 {
    a.iter().zip(x).map(|(a, x)| a.conj() * x).sum()
}

/// `‖w‖² + η‖w‖_{2,1}`
pub fn objective(w: &BeamformerStack, eta: f64) -> f64 {
    w.norm_sqr() + eta * w.l21_norm()
}

/// Which of the four constraint families a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    PassBand,
    StopBand,
    AntennaPower,
    Sinr,
}

impl ConstraintClass {
    pub const ALL: [ConstraintClass; 4] = [
        ConstraintClass::PassBand,
        ConstraintClass::StopBand,
        ConstraintClass::AntennaPower,
        ConstraintClass::Sinr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintClass::PassBand => "passband",
            ConstraintClass::StopBand => "stopband",
            ConstraintClass::AntennaPower => "antenna_power",
            ConstraintClass::Sinr => "sinr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// `Σ_m |a(θ)^H w_m|² >= threshold`
    PassBand { angle_deg: f64, threshold: f64 },
    /// `Σ_m |a(θ)^H w_m|² <= threshold`
    StopBand { angle_deg: f64, threshold: f64 },
    /// `Σ_m |w_m(n)|² <= max_power`
    AntennaPower { antenna: usize, max_power: f64 },
    /// `|h^H w_m|² − γ Σ_{j≠m} |h^H w_j|² >= γ σ²`
    Sinr {
        user: usize,
        target: f64,
        noise_variance: f64,
    },
}

/// One row `w^H F w <= f` of the stacked problem.
///
/// `F` is never materialised: pass/stop bands are `±Σ_m Φ_m^H a a^H Φ_m`,
/// antenna power is the 0/1 selector of one antenna group and SINR rows are
/// `−(C_m − γ C_m̄)`, all expressed through `generator` (a(θ) or h_m).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticConstraint {
    kind: ConstraintKind,
    generator: Vec<Complex64>,
    num_users: usize,
    num_antennas: usize,
}

impl QuadraticConstraint {
    pub fn passband(a: &[Complex64], angle_deg: f64, threshold: f64, num_users: usize) -> Result<Self> {
        positive(threshold, "passband threshold")?;
        Ok(Self {
            kind: ConstraintKind::PassBand {
                angle_deg,
                threshold,
            },
            generator: a.to_vec(),
            num_users,
            num_antennas: a.len(),
        })
    }

    pub fn stopband(a: &[Complex64], angle_deg: f64, threshold: f64, num_users: usize) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(DfrcError::Config(format!(
                "stopband threshold must be nonnegative, got {threshold}"
            )));
        }
        Ok(Self {
            kind: ConstraintKind::StopBand {
                angle_deg,
                threshold,
            },
            generator: a.to_vec(),
            num_users,
            num_antennas: a.len(),
        })
    }

    pub fn antenna_power(
        antenna: usize,
        max_power: f64,
        num_users: usize,
        num_antennas: usize,
    ) -> Result<Self> {
        positive(max_power, "antenna power cap")?;
        if antenna >= num_antennas {
            return Err(DfrcError::Domain(format!(
                "antenna {antenna} out of range for N = {num_antennas}"
            )));
        }
        Ok(Self {
            kind: ConstraintKind::AntennaPower { antenna, max_power },
            generator: Vec::new(),
            num_users,
            num_antennas,
        })
    }

    pub fn sinr(
        h: &[Complex64],
        target: f64,
        noise_variance: f64,
        user: usize,
        num_users: usize,
    ) -> Result<Self> {
        positive(target, "SINR target")?;
        positive(noise_variance, "noise variance")?;
        if user >= num_users {
            return Err(DfrcError::Domain(format!(
                "user {user} out of range for M = {num_users}"
            )));
        }
        Ok(Self {
            kind: ConstraintKind::Sinr {
                user,
                target,
                noise_variance,
            },
            generator: h.to_vec(),
            num_users,
            num_antennas: h.len(),
        })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn class(&self) -> ConstraintClass {
        match self.kind {
            ConstraintKind::PassBand { .. } => ConstraintClass::PassBand,
            ConstraintKind::StopBand { .. } => ConstraintClass::StopBand,
            ConstraintKind::AntennaPower { .. } => ConstraintClass::AntennaPower,
            ConstraintKind::Sinr { .. } => ConstraintClass::Sinr,
        }
    }

    /// a(θ) or h_m; empty for antenna power rows.
    pub fn generator(&self) -> &[Complex64] {
        &self.generator
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn dim(&self) -> usize {
        self.num_users * self.num_antennas
    }

    pub fn label(&self) -> String {
        match self.kind {
            ConstraintKind::PassBand { angle_deg, .. } => format!("passband@{angle_deg}°"),
            ConstraintKind::StopBand { angle_deg, .. } => format!("stopband@{angle_deg}°"),
            ConstraintKind::AntennaPower { antenna, .. } => format!("power[antenna {antenna}]"),
            ConstraintKind::Sinr { user, .. } => format!("sinr[user {user}]"),
        }
    }

    fn blocks<'a>(&self, v: &'a [Complex64]) -> impl Iterator<Item = &'a [Complex64]> {
        v.chunks_exact(self.num_antennas)
    }

    /// `|g^H v_m|²` for every user block.
    fn projections_sqr(&self, v: &[Complex64]) -> Vec<f64> {
        self.blocks(v)
            .map(|b| inner(&self.generator, b).norm_sqr())
            .collect()
    }

    /// Quantity in natural units: beam response, antenna power, or
    /// signal-minus-weighted-interference for SINR rows.
    pub fn response(&self, v: &[Complex64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        match self.kind {
            ConstraintKind::PassBand { .. } | ConstraintKind::StopBand { .. } => {
                self.projections_sqr(v).iter().sum()
            }
            ConstraintKind::AntennaPower { antenna, .. } => antenna_group(v, self.num_antennas, antenna)
                .map(|x| x.norm_sqr())
                .sum(),
            ConstraintKind::Sinr { user, target, .. } => {
                let p = self.projections_sqr(v);
                let interference: f64 = p
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != user)
                    .map(|(_, x)| x)
                    .sum();
                p[user] - target * interference
            }
        }
    }

    /// `v^H F v` in the normalised `<=` orientation.
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        match self.kind {
            ConstraintKind::PassBand { .. } | ConstraintKind::Sinr { .. } => -self.response(v),
            _ => self.response(v),
        }
    }

    /// Right-hand side `f`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            ConstraintKind::PassBand { threshold, .. } => -threshold,
            ConstraintKind::StopBand { threshold, .. } => threshold,
            ConstraintKind::AntennaPower { max_power, .. } => max_power,
            ConstraintKind::Sinr {
                target,
                noise_variance,
                ..
            } => -target * noise_variance,
        }
    }

    /// `f − v^H F v`; nonnegative when satisfied.
    pub fn slack(&self, v: &[Complex64]) -> f64 {
        self.bound() - self.quadratic_form(v)
    }

    pub fn is_satisfied(&self, v: &[Complex64]) -> bool {
        self.quadratic_form(v) <= self.bound()
    }

    /// Structured product `F v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.num_antennas;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        match self.kind {
            ConstraintKind::PassBand { .. } | ConstraintKind::StopBand { .. } => {
                let sign = if matches!(self.kind, ConstraintKind::PassBand { .. }) {
                    -1.0
                } else {
                    1.0
                };
                for (block, dst) in self.blocks(v).zip(out.chunks_exact_mut(n)) {
                    let c = inner(&self.generator, block) * sign;
                    for (d, g) in dst.iter_mut().zip(&self.generator) {
                        *d = g * c;
                    }
                }
            }
            ConstraintKind::AntennaPower { antenna, .. } => {
                for m in 0..self.num_users {
                    out[m * n + antenna] = v[m * n + antenna];
                }
            }
            ConstraintKind::Sinr { user, target, .. } => {
                for (m, (block, dst)) in self.blocks(v).zip(out.chunks_exact_mut(n)).enumerate() {
                    let weight = if m == user { -1.0 } else { target };
                    let c = inner(&self.generator, block) * weight;
                    for (d, g) in dst.iter_mut().zip(&self.generator) {
                        *d = g * c;
                    }
                }
            }
        }
        out
    }

    /// Explicit `F` (MN × MN). Only the generic projection path and
    /// verification code should need this.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut f = DMatrix::zeros(dim, dim);
        let mut e = vec![Complex64::new(0.0, 0.0); dim];
        for col in 0..dim {
            e[col] = Complex64::new(1.0, 0.0);
            let fc = self.apply(&e);
            for (row, x) in fc.into_iter().enumerate() {
                f[(row, col)] = x;
            }
            e[col] = Complex64::new(0.0, 0.0);
        }
        f
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(DfrcError::Config(format!("{what} must be positive, got {x}")))
    }
}

/// Thresholds and caps shared by every constraint row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintLevels {
    pub passband: f64,
    pub stopband: f64,
    /// Per-antenna cap, one entry per antenna.
    pub antenna_power: Vec<f64>,
}

/// The assembled problem: `min ‖w‖² + η‖w‖_{2,1}` subject to every row.
///
/// Row order is fixed: passband grid, stopband grid, antenna power 1..N,
/// SINR 1..M.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    num_users: usize,
    num_antennas: usize,
    eta: f64,
    constraints: Vec<QuadraticConstraint>,
}

impl ProblemInstance {
    pub fn new(
        num_users: usize,
        num_antennas: usize,
        eta: f64,
        constraints: Vec<QuadraticConstraint>,
    ) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(DfrcError::Config(format!("eta must be >= 0, got {eta}")));
        }
        for c in &constraints {
            if c.num_users != num_users || c.num_antennas != num_antennas {
                return Err(DfrcError::Domain(format!(
                    "constraint {} sized for M={}, N={} in an M={num_users}, N={num_antennas} problem",
                    c.label(),
                    c.num_users,
                    c.num_antennas
                )));
            }
        }
        Ok(Self {
            num_users,
            num_antennas,
            eta,
            constraints,
        })
    }

    pub fn assemble(
        geometry: &ArrayGeometry,
        grids: &AngleGrids,
        levels: &ConstraintLevels,
        users: &[UserChannel],
        eta: f64,
    ) -> Result<Self> {
        let n = geometry.num_antennas;
        let m = users.len();
        if m == 0 {
            return Err(DfrcError::Config("at least one user is required".into()));
        }
        if grids.mainlobe.is_empty() || grids.stopband.is_empty() {
            return Err(DfrcError::Config(
                "mainlobe and stopband grids must both be nonempty".into(),
            ));
        }
        if levels.antenna_power.len() != n {
            return Err(DfrcError::Config(format!(
                "{} antenna power caps given for {n} antennas",
                levels.antenna_power.len()
            )));
        }
        let mut constraints = Vec::with_capacity(grids.len() + n + m);
        for &theta in &grids.mainlobe {
            let a = steering_vector(geometry, theta)?;
            constraints.push(QuadraticConstraint::passband(&a.entries, theta, levels.passband, m)?);
        }
        for &theta in &grids.stopband {
            let a = steering_vector(geometry, theta)?;
            constraints.push(QuadraticConstraint::stopband(&a.entries, theta, levels.stopband, m)?);
        }
        for (antenna, &cap) in levels.antenna_power.iter().enumerate() {
            constraints.push(QuadraticConstraint::antenna_power(antenna, cap, m, n)?);
        }
        for (user, ch) in users.iter().enumerate() {
            if ch.h.len() != n {
                return Err(DfrcError::Config(format!(
                    "channel of user {user} has length {}, expected {n}",
                    ch.h.len()
                )));
            }
            constraints.push(QuadraticConstraint::sinr(
                &ch.h,
                ch.sinr_target,
                ch.noise_variance,
                user,
                m,
            )?);
        }
        Self::new(m, n, eta, constraints)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn dim(&self) -> usize {
        self.num_users * self.num_antennas
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Number of constraint rows L.
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[QuadraticConstraint] {
        &self.constraints
    }

    pub fn count(&self, class: ConstraintClass) -> usize {
        self.constraints.iter().filter(|c| c.class() == class).count()
    }

    pub fn objective(&self, w: &BeamformerStack) -> f64 {
        objective(w, self.eta)
    }

    /// Same problem on the subarray `support` (sorted antenna indices):
    /// generators are restricted, power rows for dropped antennas vanish.
    pub fn restrict(&self, support: &[usize]) -> Result<Self> {
        let k = support.len();
        if k == 0 {
            return Err(DfrcError::Config("support must not be empty".into()));
        }
        if support.windows(2).any(|p| p[0] >= p[1]) || support[k - 1] >= self.num_antennas {
            return Err(DfrcError::Config(format!(
                "support {support:?} must be strictly increasing indices below {}",
                self.num_antennas
            )));
        }
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let restricted = match c.kind {
                ConstraintKind::AntennaPower { antenna, max_power } => {
                    match support.iter().position(|&s| s == antenna) {
                        Some(pos) => QuadraticConstraint::antenna_power(pos, max_power, self.num_users, k)?,
                        None => continue,
                    }
                }
                _ => QuadraticConstraint {
                    kind: c.kind.clone(),
                    generator: support.iter().map(|&s| c.generator[s]).collect(),
                    num_users: self.num_users,
                    num_antennas: k,
                },
            };
            constraints.push(restricted);
        }
        Self::new(self.num_users, k, self.eta, constraints)
    }

    /// Largest `quadratic_form − bound` over all rows, clamped at zero.
    pub fn max_violation(&self, v: &[Complex64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (-c.slack(v)).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Embed a stack defined on `support` back into the full array with zeros elsewhere.
pub fn embed(reduced: &BeamformerStack, support: &[usize], num_antennas: usize) -> BeamformerStack {
    let mut full = BeamformerStack::zeros(reduced.num_users(), num_antennas);
    for m in 0..reduced.num_users() {
        let src = reduced.user_block(m);
        let dst = full.user_block_mut(m);
        for (&s, x) in support.iter().zip(src) {
            dst[s] = *x;
        }
    }
    full
}

/// Gather the support entries of a full stack.
pub fn restrict_stack(full: &BeamformerStack, support: &[usize]) -> BeamformerStack {
    let mut data = Vec::with_capacity(full.num_users() * support.len());
    for m in 0..full.num_users() {
        let block = full.user_block(m);
        data.extend(support.iter().map(|&s| block[s]));
    }
    BeamformerStack {
        num_users: full.num_users(),
        num_antennas: support.len(),
        data,
    }
}
