//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls the crate's prox, projection or structured operator
//! code: the oracles work from explicit dense matrices and a generic
//! quasi-Newton minimiser.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<Complex64> {
    (0..len).map(|_| cn(rng) * scale).collect()
}

pub fn steering(n: usize, spacing: f64, deg: f64) -> Vec<Complex64> {
    let phase = 2.0 * std::f64::consts::PI * spacing * deg.to_radians().sin();
    (0..n).map(|k| Complex64::from_polar(1.0, phase * k as f64)).collect()
}

/// `Φ_m`: N × MN selector of user m's block.
pub fn selector(m: usize, num_users: usize, n: usize) -> CMat {
    let mut phi = CMat::zeros(n, num_users * n);
    for k in 0..n {
        phi[(k, m * n + k)] = Complex64::new(1.0, 0.0);
    }
    phi
}

fn outer(x: &[Complex64]) -> CMat {
    let col = CMat::from_column_slice(x.len(), 1, x);
    &col * col.adjoint()
}

/// `Σ_m Φ_m^H a a^H Φ_m`
pub fn beam_matrix(a: &[Complex64], num_users: usize) -> CMat {
    let n = a.len();
    let aa = outer(a);
    (0..num_users).fold(CMat::zeros(num_users * n, num_users * n), |acc, m| {
        let phi = selector(m, num_users, n);
        acc + phi.adjoint() * &aa * phi
    })
}

/// `Σ_m Φ_m^H e_n e_n^H Φ_m`
pub fn antenna_matrix(antenna: usize, num_users: usize, n: usize) -> CMat {
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[antenna] = Complex64::new(1.0, 0.0);
    beam_matrix(&e, num_users)
}

/// `Φ_m^H h h^H Φ_m − γ Σ_{j≠m} Φ_j^H h h^H Φ_j`
pub fn sinr_matrix(h: &[Complex64], gamma: f64, user: usize, num_users: usize) -> CMat {
    let n = h.len();
    let hh = outer(h);
    (0..num_users).fold(CMat::zeros(num_users * n, num_users * n), |acc, j| {
        let phi = selector(j, num_users, n);
        let w = if j == user { 1.0 } else { -gamma };
        acc + (phi.adjoint() * &hh * phi) * Complex64::new(w, 0.0)
    })
}

pub fn quad(f: &CMat, v: &[Complex64]) -> f64 {
    let x = CMat::from_column_slice(v.len(), 1, v);
    (x.adjoint() * f * &x)[(0, 0)].re
}

pub fn mat_vec(f: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let x = CMat::from_column_slice(v.len(), 1, v);
    (f * x).iter().copied().collect()
}

pub fn dist_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

pub fn to_real(v: &[Complex64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with Armijo backtracking. `f` returns value and gradient.
pub fn bfgs<F>(f: F, x0: &[f64], max_iter: usize, grad_tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|x| *x = 0.0);
        (0..n).for_each(|i| h[i * n + i] = 1.0);
    };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut h = vec![0.0; n * n];
    identity(&mut h);
    let mut p = vec![0.0; n];
    let mut hy = vec![0.0; n];
    for _ in 0..max_iter {
        if dot(&g, &g).sqrt() <= grad_tol {
            break;
        }
        for i in 0..n {
            p[i] = -dot(&h[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            identity(&mut h);
            p.iter_mut().zip(&g).for_each(|(a, b)| *a = -b);
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let (x_new, f_new, g_new) = loop {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = f(&trial);
            if ft <= fx + 1e-4 * t * slope || t < 1e-20 {
                break (trial, ft, gt);
            }
            t *= 0.5;
        };
        if f_new > fx {
            break;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            // H ← H + (1 + yᵀHy/sy) ssᵀ/sy − (Hy sᵀ + s yᵀH)/sy
            for i in 0..n {
                hy[i] = dot(&h[i * n..(i + 1) * n], &y);
            }
            let c = (1.0 + dot(&y, &hy) / sy) / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += c * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let done = fx - f_new <= 1e-18 * fx.abs().max(1e-300) && t < 1e-10;
        x = x_new;
        fx = f_new;
        g = g_new;
        if done {
            break;
        }
    }
    (x, fx)
}

/// Minimiser of `t Σ_n ‖x_(n)‖ + ½‖x − c‖²` by enumerating which groups are
/// zero and minimising the smooth remainder numerically.
pub fn prox_oracle(c: &[Complex64], t: f64, num_antennas: usize) -> Vec<Complex64> {
    let groups: Vec<Vec<usize>> = (0..num_antennas)
        .map(|n| (n..c.len()).step_by(num_antennas).collect())
        .collect();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for mask in 0u32..(1 << num_antennas) {
        let live: Vec<usize> = (0..num_antennas).filter(|n| mask & (1 << n) != 0).collect();
        // group-major, so each chunk of `per_group` entries is one antenna
        let idx: Vec<usize> = live.iter().flat_map(|&n| groups[n].clone()).collect();
        let sub: Vec<Complex64> = idx.iter().map(|&i| c[i]).collect();
        let per_group = c.len() / num_antennas;
        let objective = |x: &[f64]| -> (f64, Vec<f64>) {
            let z = to_complex(x);
            let mut value = 0.0;
            let mut grad = vec![0.0; x.len()];
            for (k, block) in z.chunks(per_group).enumerate() {
                let norm = block.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                value += t * norm;
                if norm > 0.0 {
                    for (i, v) in block.iter().enumerate() {
                        let p = 2 * (k * per_group + i);
                        grad[p] += t * v.re / norm;
                        grad[p + 1] += t * v.im / norm;
                    }
                }
            }
            for (i, (v, w)) in z.iter().zip(&sub).enumerate() {
                value += 0.5 * (v - w).norm_sqr();
                grad[2 * i] += v.re - w.re;
                grad[2 * i + 1] += v.im - w.im;
            }
            (value, grad)
        };
        let (x, _) = bfgs(objective, &to_real(&sub), 500, 1e-14);
        let z = to_complex(&x);
        let mut full = vec![Complex64::new(0.0, 0.0); c.len()];
        for (&i, v) in idx.iter().zip(&z) {
            full[i] = *v;
        }
        let value = prox_objective(&full, c, t, num_antennas);
        if best.as_ref().map_or(true, |(b, _)| value < *b) {
            best = Some((value, full));
        }
    }
    best.unwrap().1
}

pub fn prox_objective(x: &[Complex64], c: &[Complex64], t: f64, num_antennas: usize) -> f64 {
    let l21: f64 = (0..num_antennas)
        .map(|n| {
            (n..x.len())
                .step_by(num_antennas)
                .map(|i| x[i].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    t * l21 + 0.5 * dist_sqr(x, c)
}

/// Nearest point to `target` in `{v : v^H F v <= f}` by an escalating
/// quadratic penalty, from `restarts` random starts plus `target` itself.
/// Returns the point with the smallest distance among those whose violation
/// is below `1e-9`.
pub fn penalty_oracle(f: &CMat, bound: f64, target: &[Complex64], restarts: usize, seed: u64) -> Vec<Complex64> {
    let mut r = rng(seed);
    let scale = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let mut starts = vec![target.to_vec()];
    for k in 0..restarts {
        let spread = scale * (0.25 + 2.0 * (k as f64) / restarts as f64);
        starts.push(
            target
                .iter()
                .map(|z| z + cn(&mut r) * spread)
                .collect(),
        );
    }
    // real form: v^H F v = xᵀ R x with x = [re, im] interleaved
    let dim = 2 * target.len();
    let mut real = vec![0.0; dim * dim];
    for i in 0..target.len() {
        for j in 0..target.len() {
            let z = f[(i, j)];
            real[2 * i * dim + 2 * j] = z.re;
            real[2 * i * dim + 2 * j + 1] = -z.im;
            real[(2 * i + 1) * dim + 2 * j] = z.im;
            real[(2 * i + 1) * dim + 2 * j + 1] = z.re;
        }
    }
    let goal = to_real(target);
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for start in starts {
        let mut x = to_real(&start);
        let mut tau = 1.0;
        while tau <= 1e12 {
            let obj = |y: &[f64]| -> (f64, Vec<f64>) {
                let ry: Vec<f64> = real.chunks_exact(dim).map(|row| dot(row, y)).collect();
                let excess = (dot(y, &ry) - bound).max(0.0);
                let mut value = tau * excess * excess;
                let mut grad = vec![0.0; dim];
                for k in 0..dim {
                    let d = y[k] - goal[k];
                    value += d * d;
                    grad[k] = 2.0 * d + 4.0 * tau * excess * ry[k];
                }
                (value, grad)
            };
            x = bfgs(obj, &x, 400, 1e-13).0;
            let v = to_complex(&x);
            if quad(f, &v) - bound <= 1e-12 * bound.abs().max(1.0) {
                break;
            }
            tau *= 100.0;
        }
        let v = to_complex(&x);
        if quad(f, &v) - bound > 1e-9 * bound.abs().max(1.0) {
            continue;
        }
        let d = dist_sqr(&v, target);
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, v));
        }
    }
    best.expect("penalty oracle found no feasible point").1
}

/// Random Hermitian matrix with entries ~ CN(0, 1).
pub fn random_hermitian(r: &mut ChaCha8Rng, dim: usize) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| cn(r));
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}
