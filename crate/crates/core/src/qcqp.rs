//! Nearest-point projection onto a single quadratic constraint set
//! `{v : v^H F v <= f}`, for any inertia of `F`.
//!
//! Every constraint family in this crate has `F` of (block) rank at most M,
//! so the projection reduces to a problem on the M coefficients of `v` along
//! the generator vector, or on a single antenna group. Components orthogonal
//! to the generator are left untouched. A dense eigendecomposition path
//! handles arbitrary Hermitian `F` and cross-checks the structured ones.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DfrcError, Result};
use crate::problem::{inner, norm_sqr, ConstraintKind, QuadraticConstraint};

const MAX_ROOT_ITERATIONS: usize = 200;
const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<Complex64>,
    /// Lagrange multiplier μ of the constraint; stationarity reads
    /// `(v̂ − v̄) + μ F v̂ = 0`.
    pub multiplier: f64,
    pub active: bool,
    pub kkt_residual: f64,
}

impl ProjectionResult {
    fn unchanged(v: &[Complex64]) -> Self {
        Self {
            point: v.to_vec(),
            multiplier: 0.0,
            active: false,
            kkt_residual: 0.0,
        }
    }

    /// `‖v̂ − v̄‖²`
    pub fn distance_sqr(&self, target: &[Complex64]) -> f64 {
        self.point
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }
}

/// Project `target` onto the feasible set of `constraint`.
pub fn project(constraint: &QuadraticConstraint, target: &[Complex64]) -> Result<ProjectionResult> {
    if target.len() != constraint.dim() {
        return Err(DfrcError::Domain(format!(
            "projection target has length {}, constraint expects {}",
            target.len(),
            constraint.dim()
        )));
    }
    if constraint.is_satisfied(target) {
        return Ok(ProjectionResult::unchanged(target));
    }
    let n = constraint.num_antennas();
    let (point, multiplier) = match *constraint.kind() {
        ConstraintKind::AntennaPower { antenna, max_power } => {
            let mut point = target.to_vec();
            let group: Vec<Complex64> = point.iter().skip(antenna).step_by(n).copied().collect();
            let (projected, mu) = project_antenna_power(&group, max_power);
            for (slot, x) in point.iter_mut().skip(antenna).step_by(n).zip(projected) {
                *slot = x;
            }
            (point, mu)
        }
        ConstraintKind::StopBand { threshold, .. } => {
            project_stopband(target, constraint.generator(), threshold)
        }
        ConstraintKind::PassBand { threshold, .. } => {
            project_passband(target, constraint.generator(), threshold)
        }
        ConstraintKind::Sinr {
            user,
            target: gamma,
            noise_variance,
        } => project_sinr(target, constraint.generator(), gamma, noise_variance, user)?,
    };
    let kkt_residual = if multiplier.is_finite() {
        let fv = constraint.apply(&point);
        point
            .iter()
            .zip(target)
            .zip(&fv)
            .map(|((p, t), f)| (p - t + f * multiplier).norm_sqr())
            .sum::<f64>()
            .sqrt()
    } else {
        // μ = ∞ only for a zero stopband threshold; the set is a subspace
        // and the residual reduces to the leftover response.
        constraint.quadratic_form(&point).max(0.0).sqrt()
    };
    Ok(ProjectionResult {
        point,
        multiplier,
        active: multiplier > 0.0,
        kkt_residual,
    })
}

/// Radial projection of one antenna group onto the ball `‖g‖² <= cap`.
/// Returns the projected group and its multiplier.
pub fn project_antenna_power(group: &[Complex64], max_power: f64) -> (Vec<Complex64>, f64) {
    let power = norm_sqr(group);
    if power <= max_power {
        return (group.to_vec(), 0.0);
    }
    let scale = (max_power / power).sqrt();
    (group.iter().map(|x| x * scale).collect(), 1.0 / scale - 1.0)
}

/// Coefficients `α_m = â^H v_m` of every user block along the unit generator.
fn coefficients(v: &[Complex64], unit: &[Complex64]) -> Vec<Complex64> {
    v.chunks_exact(unit.len()).map(|b| inner(unit, b)).collect()
}

/// `v_m + (β_m − α_m) â` for every block.
fn replace_coefficients(
    v: &[Complex64],
    unit: &[Complex64],
    old: &[Complex64],
    new: &[Complex64],
) -> Vec<Complex64> {
    let mut out = v.to_vec();
    for ((block, a), b) in out.chunks_exact_mut(unit.len()).zip(old).zip(new) {
        let delta = b - a;
        for (x, u) in block.iter_mut().zip(unit) {
            *x += u * delta;
        }
    }
    out
}

fn unit_generator(g: &[Complex64]) -> (Vec<Complex64>, f64) {
    let norm_sqr = norm_sqr(g);
    let norm = norm_sqr.sqrt();
    (g.iter().map(|x| x / norm).collect(), norm_sqr)
}

/// Projection onto `Σ_m |a^H v_m|² <= ε_s`: the coefficients along `a` are
/// shrunk by a common factor `1/(1 + μ‖a‖²)`, which has a closed form.
pub fn project_stopband(target: &[Complex64], a: &[Complex64], threshold: f64) -> (Vec<Complex64>, f64) {
    let (unit, a_sqr) = unit_generator(a);
    let alpha = coefficients(target, &unit);
    let response = a_sqr * alpha.iter().map(|x| x.norm_sqr()).sum::<f64>();
    if response <= threshold {
        return (target.to_vec(), 0.0);
    }
    let scale = (threshold / response).sqrt();
    let beta: Vec<Complex64> = alpha.iter().map(|x| x * scale).collect();
    let mu = if scale > 0.0 {
        (1.0 / scale - 1.0) / a_sqr
    } else {
        f64::INFINITY
    };
    (replace_coefficients(target, &unit, &alpha, &beta), mu)
}

/// Projection onto `Σ_m |a^H v_m|² >= ε_p` (exterior of a degenerate
/// ellipsoid): coefficients along `a` are amplified by `1/(1 − μ‖a‖²)`.
/// With no energy along `a` at all, the full deficit goes into user block 0.
pub fn project_passband(target: &[Complex64], a: &[Complex64], threshold: f64) -> (Vec<Complex64>, f64) {
    let (unit, a_sqr) = unit_generator(a);
    let alpha = coefficients(target, &unit);
    let energy: f64 = alpha.iter().map(|x| x.norm_sqr()).sum();
    let response = a_sqr * energy;
    if response >= threshold {
        return (target.to_vec(), 0.0);
    }
    if energy <= f64::MIN_POSITIVE {
        let mut beta = alpha.clone();
        beta[0] = Complex64::new((threshold / a_sqr).sqrt(), 0.0);
        return (replace_coefficients(target, &unit, &alpha, &beta), 1.0 / a_sqr);
    }
    let scale = (threshold / response).sqrt();
    let beta: Vec<Complex64> = alpha.iter().map(|x| x * scale).collect();
    (
        replace_coefficients(target, &unit, &alpha, &beta),
        (1.0 - 1.0 / scale) / a_sqr,
    )
}

/// Projection onto `|h^H v_m|² − γ Σ_{j≠m} |h^H v_j|² >= γσ²`.
///
/// Along `ĥ` the target block is amplified by `1/(1 − s)` and the others are
/// shrunk by `1/(1 + γ s)`, `s = μ‖h‖² ∈ [0, 1)`, with `s` the root of the
/// (monotone) secular equation. A target block with no component along `h`
/// is the limit `s = 1`, where the amplitude along `ĥ` is free and set to the
/// value closing the constraint.
pub fn project_sinr(
    target: &[Complex64],
    h: &[Complex64],
    gamma: f64,
    noise_variance: f64,
    user: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let (unit, h_sqr) = unit_generator(h);
    let z = coefficients(target, &unit);
    let signal = z[user].norm_sqr();
    let interference: f64 = z
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != user)
        .map(|(_, x)| x.norm_sqr())
        .sum();
    let need = gamma * noise_variance / h_sqr;
    if signal - gamma * interference >= need {
        return Ok((target.to_vec(), 0.0));
    }

    let shrink = |s: f64| 1.0 / (1.0 + gamma * s);
    let mut new = z.clone();
    let s = if signal <= f64::MIN_POSITIVE {
        let k = shrink(1.0);
        for x in new.iter_mut() {
            *x *= k;
        }
        let amplitude = (need + gamma * interference * k * k).sqrt();
        new[user] = Complex64::new(amplitude, 0.0);
        1.0
    } else {
        // In t = 1 − s the secular function is decreasing on (0, 1] and
        // blows up at t → 0, which keeps precision when the root hugs s = 1.
        let secular = |t: f64| {
            let k = shrink(1.0 - t);
            let value = signal / (t * t) - gamma * interference * k * k - need;
            let slope = -2.0 * signal / (t * t * t) - 2.0 * gamma * gamma * interference * k * k * k;
            (value, slope)
        };
        let mut lo = 1.0;
        while secular(lo).0 <= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(DfrcError::Numerical(
                    "SINR projection: failed to bracket the multiplier".into(),
                ));
            }
        }
        let scale = signal.max(need).max(1.0);
        let (t_feasible, _) = safeguarded_root(secular, lo, 1.0, ROOT_TOLERANCE * scale)
            .map_err(|e| DfrcError::Numerical(format!("SINR projection: {e}")))?;
        let s = 1.0 - t_feasible;
        for (j, x) in new.iter_mut().enumerate() {
            *x = if j == user { *x / t_feasible } else { *x * shrink(s) };
        }
        s
    };
    Ok((replace_coefficients(target, &unit, &z, &new), s / h_sqr))
}

/// Root of a decreasing function on `[lo, hi]` with `f(lo) > 0 >= f(hi)` by
/// Newton steps kept inside a shrinking bisection bracket. Returns `(x, x)` at
/// a converged root, otherwise the collapsed bracket `(f >= 0 end, f < 0 end)`.
fn safeguarded_root<F>(f: F, mut lo: f64, mut hi: f64, tolerance: f64) -> std::result::Result<(f64, f64), String>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITERATIONS {
        let (value, slope) = f(x);
        if value >= 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if value.abs() <= tolerance {
            return Ok((x, x));
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok((lo, hi));
        }
        let newton = x - value / slope;
        x = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(format!(
        "root finder did not converge in {MAX_ROOT_ITERATIONS} iterations (bracket [{lo:e}, {hi:e}])"
    ))
}

/// Nearest point to `target` in `{v : v^H F v <= f}` for an arbitrary
/// Hermitian `F`, via eigendecomposition and the secular equation in μ.
///
/// The hard case (no component of `target` on the most negative eigenspace
/// and the secular function still positive at the pole) is closed by adding
/// the missing amplitude along the first critical eigenvector.
pub fn project_generic(
    f_matrix: &DMatrix<Complex64>,
    bound: f64,
    target: &[Complex64],
) -> Result<ProjectionResult> {
    let dim = target.len();
    if f_matrix.nrows() != dim || f_matrix.ncols() != dim {
        return Err(DfrcError::Domain(format!(
            "F is {}×{}, target has length {dim}",
            f_matrix.nrows(),
            f_matrix.ncols()
        )));
    }
    let v = DVector::from_column_slice(target);
    let form = |x: &DVector<Complex64>| (x.adjoint() * f_matrix * x)[(0, 0)].re;
    if form(&v) <= bound {
        return Ok(ProjectionResult::unchanged(target));
    }

    let eig = SymmetricEigen::new(f_matrix.clone());
    let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let q = &eig.eigenvectors;
    let coeff = q.adjoint() * &v;
    let c_sqr: Vec<f64> = coeff.iter().map(|x| x.norm_sqr()).collect();

    let lambda_min = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_scale = lambda.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let pole = if lambda_min < 0.0 {
        -1.0 / lambda_min
    } else {
        f64::INFINITY
    };
    let secular = |mu: f64| {
        let mut value = -bound;
        let mut slope = 0.0;
        for (l, c) in lambda.iter().zip(&c_sqr) {
            let d = 1.0 + mu * l;
            value += l * c / (d * d);
            slope -= 2.0 * l * l * c / (d * d * d);
        }
        (value, slope)
    };
    let reconstruct = |mu: f64| {
        let mut scaled = coeff.clone();
        for (i, x) in scaled.iter_mut().enumerate() {
            *x /= 1.0 + mu * lambda[i];
        }
        q * scaled
    };

    let tolerance = ROOT_TOLERANCE * bound.abs().max(1.0);
    let (point, mu) = if pole.is_finite() {
        let critical: Vec<usize> = (0..dim)
            .filter(|&i| lambda[i] <= lambda_min + 1e-12 * lambda_scale)
            .collect();
        let critical_mass: f64 = critical.iter().map(|&i| c_sqr[i]).sum();
        let target_sqr: f64 = c_sqr.iter().sum();
        let at_pole: f64 = (0..dim)
            .filter(|i| !critical.contains(i))
            .map(|i| {
                let d = 1.0 + pole * lambda[i];
                lambda[i] * c_sqr[i] / (d * d)
            })
            .sum::<f64>()
            - bound;
        if critical_mass <= 1e-28 * target_sqr.max(f64::MIN_POSITIVE) && at_pole > 0.0 {
            let i = critical[0];
            let amplitude = (at_pole / -lambda_min).sqrt();
            let mut masked = coeff.clone();
            for &j in &critical {
                masked[j] = Complex64::new(0.0, 0.0);
            }
            let mut scaled = masked;
            for (j, x) in scaled.iter_mut().enumerate() {
                if !critical.contains(&j) {
                    *x /= 1.0 + pole * lambda[j];
                }
            }
            scaled[i] = Complex64::new(amplitude, 0.0);
            (q * scaled, pole)
        } else {
            let (mu, _) = root_below_pole(&secular, pole, tolerance)?;
            (reconstruct(mu), mu)
        }
    } else {
        // F is PSD: the secular function decays to −f.
        if -bound > 0.0 && lambda_min >= 0.0 {
            return Err(DfrcError::Numerical(format!(
                "generic projection: PSD F with bound {bound} < 0 has an empty feasible set"
            )));
        }
        let mut hi = 1.0;
        while secular(hi).0 > 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(DfrcError::Numerical(
                    "generic projection: failed to bracket the multiplier".into(),
                ));
            }
        }
        let (mu, _) = feasible_root(&secular, 0.0, hi, tolerance)?;
        (reconstruct(mu), mu)
    };

    let step = &point - &v;
    let kkt = (&step + f_matrix * &point * Complex64::new(mu, 0.0)).norm();
    Ok(ProjectionResult {
        point: point.iter().copied().collect(),
        multiplier: mu,
        active: mu > 0.0,
        kkt_residual: kkt,
    })
}

/// Multiplier on `[0, pole)` for the decreasing secular function; the pole
/// end is not evaluated.
fn root_below_pole<F>(secular: &F, pole: f64, tolerance: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> (f64, f64),
{
    // Walk towards the pole until the function turns nonpositive.
    let mut hi = 0.5 * pole;
    let mut gap = 0.5 * pole;
    while secular(hi).0 > 0.0 {
        gap *= 0.5;
        hi = pole - gap;
        if gap <= f64::EPSILON * pole {
            return Ok((hi, hi));
        }
    }
    feasible_root(secular, 0.0, hi, tolerance)
}

fn feasible_root<F>(secular: &F, lo: f64, hi: f64, tolerance: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> (f64, f64),
{
    // The secular function decreases in μ; feasibility sits where it is
    // nonpositive, which is the `hi` side of the bracket.
    safeguarded_root(secular, lo, hi, tolerance)
        .map(|(a, b)| (b, a))
        .map_err(|e| DfrcError::Numerical(format!("generic projection: {e}")))
}
