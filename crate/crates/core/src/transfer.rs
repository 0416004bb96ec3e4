//! Discretised transfer operators `P_z phi(x) = E[e^{z sigma(g, x)} phi(g x)]` on the projective line.
//!
//! The line is parametrised by the angle `theta in [0, pi)` and sampled on the
//! uniform grid `theta_i = i pi / m`. Off-grid values are obtained by periodic
//! linear interpolation, so every row of the operator carries two entries per
//! atom; [`CircleGrid::with_cubic`] selects a four-point stencil instead. Both
//! interpolants reproduce constants, which makes `P_0` exactly stochastic on the grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::projgeom::{apply_row_major, norm2, ProjPoint};
use crate::randwalk::{MeasureSpec, WalkRecord, WalkState};
use crate::rng::{par_map_trials, trial_rng};
use crate::stats::{self, linear_fit};

type C64 = Complex64;

const MAX_ITER: usize = 100_000;
const EIGEN_TOL: f64 = 1e-13;
const DEFLATION_TOL: f64 = 1e-6;

/// Uniform grid on `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircleGrid {
    m: usize,
    cubic: bool,
}

impl CircleGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 64 {
            return Err(Error::Precondition(format!("grid of {m} nodes, need at least 64")));
        }
        Ok(CircleGrid { m, cubic: false })
    }

    /// Switches to four-point Lagrange interpolation (four entries per atom per row).
    pub fn with_cubic(mut self) -> Self {
        self.cubic = true;
        self
    }

    pub fn is_cubic(&self) -> bool {
        self.cubic
    }

    /// Interpolation nodes and weights at `theta`; the weights sum to 1.
    #[inline]
    pub fn stencil(&self, theta: f64) -> ([usize; 4], [f64; 4], usize) {
        let (i0, i1, t) = self.locate(theta);
        if !self.cubic {
            return ([i0, i1, 0, 0], [1.0 - t, t, 0.0, 0.0], 2);
        }
        let m = self.m;
        let im = (i0 + m - 1) % m;
        let i2 = (i1 + 1) % m;
        // Lagrange weights on nodes -1, 0, 1, 2
        let wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        ([im, i0, i1, i2], [wm, w0, w1, w2], 4)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        PI / self.m as f64
    }

    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.angle(i)).collect()
    }

    /// Neighbouring nodes of `theta` and the weight of the upper one.
    #[inline]
    pub fn locate(&self, theta: f64) -> (usize, usize, f64) {
        let p = theta.rem_euclid(PI) / self.step();
        let fl = p.floor();
        let i0 = (fl as usize) % self.m;
        (i0, (i0 + 1) % self.m, p - fl)
    }

    /// Linear interpolation of grid values at `theta`.
    pub fn interpolate<T>(&self, values: &[T], theta: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (idx, w, k) = self.stencil(theta);
        let mut acc = values[idx[0]] * w[0];
        for j in 1..k {
            acc = acc + values[idx[j]] * w[j];
        }
        acc
    }
}

/// Angle in `[0, pi)` of the line spanned by a (not necessarily unit) vector of `R^2`.
#[inline]
fn line_angle(v: &[f64]) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

/// Sparse matrix of `P_z` on a [`CircleGrid`]: row `i` holds `2 k` entries for `k` atoms.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    grid: CircleGrid,
    z: C64,
    measure: MeasureSpec,
    cols: Vec<u32>,
    vals: Vec<C64>,
    width: usize,
}

impl TransferOperator {
    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    /// `out = P phi`.
    pub fn apply(&self, phi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let r = i * self.width;
            let mut acc = C64::new(0.0, 0.0);
            for k in r..r + self.width {
                acc += self.vals[k] * phi[self.cols[k] as usize];
            }
            *o = acc;
        }
    }

    /// `out = P^T f` (no conjugation).
    pub fn apply_transpose(&self, f: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (i, fi) in f.iter().enumerate() {
            let r = i * self.width;
            for k in r..r + self.width {
                out[self.cols[k] as usize] += self.vals[k] * fi;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let m = self.grid.m;
        let mut out = vec![vec![C64::new(0.0, 0.0); m]; m];
        for (i, row) in out.iter_mut().enumerate() {
            for k in i * self.width..(i + 1) * self.width {
                row[self.cols[k] as usize] += self.vals[k];
            }
        }
        out
    }
}

/// Assembles `P_z` for `|Re z| <= 0.5`; rows are built in parallel.
pub fn build_operator(mu: &MeasureSpec, z: C64, grid: CircleGrid) -> Result<TransferOperator> {
    if mu.dim() != 2 {
        return Err(Error::Dimension(format!(
            "the spectral module works on the projective line only (d = {})",
            mu.dim()
        )));
    }
    if z.re.abs() > 0.5 {
        return Err(Error::Precondition(format!("|Re z| = {} exceeds 0.5", z.re.abs())));
    }
    let per_atom = if grid.cubic { 4 } else { 2 };
    let width = per_atom * mu.atoms().len();
    let rows: Vec<Vec<(u32, C64)>> = (0..grid.m)
        .into_par_iter()
        .map(|i| {
            let th = grid.angle(i);
            let v = [th.cos(), th.sin()];
            let mut w = [0.0; 2];
            let mut row = Vec::with_capacity(width);
            for (g, p) in mu.atoms() {
                apply_row_major(2, g.entries(), &v, &mut w);
                let weight = (z * norm2(&w).ln()).exp() * *p;
                let (idx, wt, k) = grid.stencil(line_angle(&w));
                for j in 0..k {
                    row.push((idx[j] as u32, weight * wt[j]));
                }
            }
            row
        })
        .collect();
    let (cols, vals) = rows.into_iter().flatten().unzip();
    Ok(TransferOperator { grid, z, measure: mu.clone(), cols, vals, width })
}

/// Leading spectral data of a discretised `P_z`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub z: C64,
    pub grid: CircleGrid,
    pub lambda_z: C64,
    /// Right eigenvector, normalised by `<nu_hat, r_z> = 1`.
    pub r_z: Vec<C64>,
    /// Left eigenvector at `z`, normalised by `<l_z, r_z> = 1`.
    pub l_z: Vec<C64>,
    /// `|lambda_2| / |lambda_z|`.
    pub gap: f64,
    /// Stationary weights on the grid nodes (left eigenvector of `P_0`).
    pub nu_hat: Vec<f64>,
    /// `|P_z r_z - lambda_z r_z|_inf / |lambda_z|`, in units of `|r_z|_inf`.
    pub residual: f64,
    /// Relative residual of the recurrence fitted to the deflated iterates.
    pub deflation_residual: f64,
}

impl SpectralData {
    /// `r_z` at an arbitrary angle.
    pub fn r_at(&self, theta: f64) -> C64 {
        self.grid.interpolate(&self.r_z, theta)
    }

    /// `r_z` at the line spanned by `v`.
    pub fn r_at_vector(&self, v: &[f64]) -> C64 {
        self.r_at(line_angle(v))
    }

    /// `lambda_z` as a real number; meaningful for real `z`.
    pub fn lambda_real(&self) -> f64 {
        self.lambda_z.re
    }

    /// Stationary weights as `(point, weight)` pairs.
    pub fn nu_points(&self) -> Vec<(ProjPoint, f64)> {
        self.nu_hat.iter().enumerate().map(|(i, w)| (ProjPoint::from_angle(self.grid.angle(i)), *w)).collect()
    }
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power iteration for the dominant eigenpair of `apply`, from the constant vector.
fn power_iteration<F>(m: usize, what: &str, apply: F) -> Result<(C64, Vec<C64>, f64)>
where
    F: Fn(&[C64], &mut [C64]),
{
    let mut v = vec![C64::new(1.0, 0.0); m];
    let mut w = vec![C64::new(0.0, 0.0); m];
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    for k in 0..MAX_ITER {
        apply(&v, &mut w);
        let (idx, _) =
            w.iter().enumerate().fold((0, -1.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
        let lambda = w[idx] / v[idx];
        if lambda.norm() == 0.0 || !lambda.is_finite() {
            return Err(Error::NoConvergence { what: format!("{what}: vanishing iterate"), iterations: k });
        }
        let res =
            v.iter().zip(&w).map(|(a, b)| (b - lambda * a).norm()).fold(0.0, f64::max) / (lambda.norm() * max_abs(&v));
        if res <= EIGEN_TOL {
            return Ok((lambda, v, res));
        }
        if res < best * 0.5 {
            best = res;
            best_at = k;
        } else if res < 1e-10 && k > best_at + 200 {
            // rounding floor reached
            return Ok((lambda, v, res));
        }
        let s = w[idx];
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / s;
        }
    }
    Err(Error::NoConvergence { what: what.to_string(), iterations: MAX_ITER })
}

fn stationary_weights(op0: &TransferOperator) -> Result<Vec<f64>> {
    let m = op0.grid.m;
    let (_, l, _) = power_iteration(m, "stationary weights", |a, b| op0.apply_transpose(a, b))?;
    let total: C64 = l.iter().sum();
    let w: Vec<f64> = l.iter().map(|c| (c / total).re.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// Leading eigenvalue, eigenvectors and spectral gap of `op`.
pub fn leading_eigen(op: &TransferOperator) -> Result<SpectralData> {
    let m = op.grid.m;
    let nu_hat = if op.z == C64::new(0.0, 0.0) {
        stationary_weights(op)?
    } else {
        stationary_weights(&build_operator(&op.measure, C64::new(0.0, 0.0), op.grid)?)?
    };
    let (lambda, mut r, residual) = power_iteration(m, "leading eigenvalue", |a, b| op.apply(a, b))?;
    let pairing: C64 = nu_hat.iter().zip(&r).map(|(n, c)| c * *n).sum();
    if pairing.norm() < 1e-300 {
        return Err(Error::Singular("eigenfunction orthogonal to the stationary weights".into()));
    }
    r.iter_mut().for_each(|c| *c /= pairing);
    let (_, mut l, _) = power_iteration(m, "left eigenvector", |a, b| op.apply_transpose(a, b))?;
    let lr = cdot(&l, &r);
    l.iter_mut().for_each(|c| *c /= lr);
    let (gap_abs, deflation_residual) = second_eigenvalue(op, lambda, &r, &l);
    Ok(SpectralData {
        z: op.z,
        grid: op.grid,
        lambda_z: lambda,
        r_z: r,
        l_z: l,
        gap: gap_abs / lambda.norm(),
        nu_hat,
        residual,
        deflation_residual,
    })
}

/// `|lambda_2|` of `op` by iterating `Q = P - lambda r l^T` and fitting a one- or
/// two-term linear recurrence to the iterates. Returns the modulus and the fit residual.
fn second_eigenvalue(op: &TransferOperator, lambda: C64, r: &[C64], l: &[C64]) -> (f64, f64) {
    let m = op.grid.m;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut u: Vec<C64> = (0..m).map(|_| C64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    let apply_q = |a: &[C64], out: &mut [C64]| {
        op.apply(a, out);
        let c = lambda * cdot(l, a);
        for (o, ri) in out.iter_mut().zip(r) {
            *o -= c * ri;
        }
    };
    let mut next = vec![C64::new(0.0, 0.0); m];
    // (u_{k-1}, |Q u_{k-1}|_inf), so that Q u_{k-1} = scale * u_k
    let mut prev: Option<(Vec<C64>, f64)> = None;
    let mut fallback = (0.0, f64::INFINITY);
    let iters = 3000;
    for k in 0..iters {
        apply_q(&u, &mut next);
        let nrm = max_abs(&next);
        if nrm < 1e-290 || !nrm.is_finite() {
            return (0.0, 0.0);
        }
        if let Some((p, c)) = prev.as_ref().filter(|_| k >= 20) {
            let v1: Vec<C64> = u.iter().map(|x| x * c).collect();
            let v2: Vec<C64> = next.iter().map(|x| x * c).collect();
            if let Some(fit) = fit_recurrence(p, &v1, &v2) {
                if fit.1 <= DEFLATION_TOL {
                    return fit;
                }
                if k > iters / 2 && fit.1 < fallback.1 {
                    fallback = fit;
                }
            }
        }
        let mut normalised = next.clone();
        normalised.iter_mut().for_each(|x| *x /= nrm);
        prev = Some((std::mem::replace(&mut u, normalised), nrm));
    }
    fallback
}

/// Fits `v1 = mu v0` and then `v2 = p v1 + q v0` for `v1 = Q v0`, `v2 = Q v1`,
/// returning the modulus of the dominant root and the relative residual of the better fit.
fn fit_recurrence(v0: &[C64], v1: &[C64], v2: &[C64]) -> Option<(f64, f64)> {
    let n1 = cdot_conj(v1, v1).re.sqrt();
    let n2 = cdot_conj(v2, v2).re.sqrt();
    let g00 = cdot_conj(v0, v0);
    if g00.re <= 0.0 || n1 == 0.0 {
        return None;
    }
    let mu = cdot_conj(v0, v1) / g00;
    let res1 = v1.iter().zip(v0).map(|(b, a)| (b - mu * a).norm_sqr()).sum::<f64>().sqrt() / n1;
    if res1 <= DEFLATION_TOL {
        return Some((mu.norm(), res1));
    }
    // least squares for v2 = -a v1 - b v0
    let g11 = cdot_conj(v1, v1);
    let g01 = cdot_conj(v0, v1);
    let g10 = g01.conj();
    let r0 = cdot_conj(v0, v2);
    let r1 = cdot_conj(v1, v2);
    let det = g11 * g00 - g10 * g01;
    if det.norm() < 1e-300 {
        return Some((mu.norm(), res1));
    }
    // solve [g11 g10; g01 g00] [p; q] = [r1; r0] with v2 ~ p v1 + q v0
    let p = (r1 * g00 - g10 * r0) / det;
    let q = (g11 * r0 - g01 * r1) / det;
    let res2 = v2.iter().zip(v1).zip(v0).map(|((c, b), a)| (c - p * b - q * a).norm_sqr()).sum::<f64>().sqrt()
        / n2.max(1e-300);
    // roots of x^2 - p x - q
    let disc = (p * p + 4.0 * q).sqrt();
    let root = ((p + disc) / 2.0).norm().max(((p - disc) / 2.0).norm());
    if res2 < res1 {
        Some((root, res2))
    } else {
        Some((mu.norm(), res1))
    }
}

fn cdot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `Lambda(s) = log lambda_s` for real `s`.
pub fn log_lambda(mu: &MeasureSpec, grid: CircleGrid, s: f64) -> Result<f64> {
    let sd = leading_eigen(&build_operator(mu, C64::new(s, 0.0), grid)?)?;
    Ok(sd.lambda_real().ln())
}

fn lambda_only(mu: &MeasureSpec, grid: CircleGrid, z: C64) -> Result<C64> {
    let op = build_operator(mu, z, grid)?;
    Ok(power_iteration(grid.m, "leading eigenvalue", |a, b| op.apply(a, b))?.0)
}

/// One row of [`lambda_expansion_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionRow {
    pub xi: f64,
    pub lambda: C64,
    /// `|lambda_{i xi} - 1 - i gamma xi + (rho2 + gamma^2) xi^2 / 2|`.
    pub residual: f64,
    /// `|log lambda_{i xi} - i gamma xi + rho2 xi^2 / 2|`.
    pub log_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
    /// Log-log slope of `residual` against `|xi|`.
    pub order: f64,
    pub log_order: f64,
    pub pass: bool,
}

/// Second-order expansion of `lambda_{i xi}` around `xi = 0`.
pub fn lambda_expansion_check(
    mu: &MeasureSpec,
    grid: CircleGrid,
    xi_grid: &[f64],
    gamma: f64,
    rho2: f64,
) -> Result<ExpansionReport> {
    if xi_grid.len() < 8 {
        return Err(Error::Precondition(format!("{} xi values, need at least 8", xi_grid.len())));
    }
    if xi_grid.iter().any(|x| *x == 0.0 || x.abs() > 0.3) {
        return Err(Error::Precondition("xi grid must lie in [-0.3, 0.3] without 0".into()));
    }
    let i = C64::new(0.0, 1.0);
    let rows = xi_grid
        .iter()
        .map(|&xi| {
            let lambda = lambda_only(mu, grid, C64::new(0.0, xi))?;
            let residual = (lambda - 1.0 - i * gamma * xi + 0.5 * (rho2 + gamma * gamma) * xi * xi).norm();
            let log_residual = (lambda.ln() - i * gamma * xi + 0.5 * rho2 * xi * xi).norm();
            Ok(ExpansionRow { xi, lambda, residual, log_residual })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = |f: fn(&ExpansionRow) -> f64| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|r| f(r) > 0.0).map(|r| (r.xi.abs().ln(), f(r).ln())).unzip();
        linear_fit(&x, &y).map_or(f64::INFINITY, |fit| fit.slope)
    };
    let order = slope(|r| r.residual);
    let log_order = slope(|r| r.log_residual);
    Ok(ExpansionReport { rows, order, log_order, pass: order >= 2.5 })
}

/// Finite-difference estimates of `gamma_m = Lambda^{(m)}(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cumulants {
    /// `gammas[m - 1] = gamma_m`.
    pub gammas: Vec<f64>,
    /// `|R - D(h/2)|`, the step-halving error estimate.
    pub errors: Vec<f64>,
    /// Error estimate above 10% of the value (and above 1e-8 in absolute terms).
    pub ill_conditioned: Vec<bool>,
    pub h: f64,
}

impl Cumulants {
    pub fn gamma(&self, m: usize) -> f64 {
        self.gammas[m - 1]
    }

    /// `(gamma_2, gamma_3, gamma_4, gamma_5)`, with missing orders set to 0.
    pub fn zeta_inputs(&self) -> [f64; 4] {
        let g = |m: usize| self.gammas.get(m - 1).copied().unwrap_or(0.0);
        [g(2), g(3), g(4), g(5)]
    }
}

/// Central difference of order `m` with step `h`; `f(k)` is `Lambda(k h)`.
fn central_difference(m: usize, h: f64, f: &dyn Fn(i32) -> f64) -> f64 {
    match m {
        1 => (f(1) - f(-1)) / (2.0 * h),
        2 => (f(1) - 2.0 * f(0) + f(-1)) / (h * h),
        3 => (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * h.powi(3)),
        4 => (f(2) - 4.0 * f(1) + 6.0 * f(0) - 4.0 * f(-1) + f(-2)) / h.powi(4),
        5 => (f(3) - 4.0 * f(2) + 5.0 * f(1) - 5.0 * f(-1) + 4.0 * f(-2) - f(-3)) / (2.0 * h.powi(5)),
        _ => unreachable!("order checked by caller"),
    }
}

/// `gamma_1, ..., gamma_order` by Richardson-extrapolated central differences of `Lambda`.
pub fn lambda_real_derivatives(mu: &MeasureSpec, grid: CircleGrid, order: usize, h: f64) -> Result<Cumulants> {
    if !(1..=5).contains(&order) {
        return Err(Error::Precondition(format!("order {order} outside 1..=5")));
    }
    if !(1e-3..=5e-2).contains(&h) {
        return Err(Error::Precondition(format!("step {h} outside [1e-3, 5e-2]")));
    }
    let reach = order.div_ceil(2) as i32;
    // Lambda on the half-step lattice k h / 2, |k| <= 2 reach
    let ks: Vec<i32> = (-2 * reach..=2 * reach).collect();
    let values = ks.iter().map(|&k| log_lambda(mu, grid, k as f64 * h / 2.0)).collect::<Result<Vec<f64>>>()?;
    let at = |k: i32| values[(k + 2 * reach) as usize];
    let mut gammas = Vec::with_capacity(order);
    let mut errors = Vec::with_capacity(order);
    for m in 1..=order {
        let coarse = central_difference(m, h, &|j| at(2 * j));
        let fine = central_difference(m, h / 2.0, &|j| at(j));
        let rich = (4.0 * fine - coarse) / 3.0;
        gammas.push(rich);
        errors.push((rich - fine).abs());
    }
    let ill_conditioned = gammas.iter().zip(&errors).map(|(g, e)| *e > 1e-8 && *e > 0.1 * g.abs()).collect();
    Ok(Cumulants { gammas, errors, ill_conditioned, h })
}

/// Three-term Cramér series; `gammas = (gamma_2, gamma_3, gamma_4, gamma_5)`.
pub fn cramer_zeta(gammas: &[f64; 4], t: f64) -> Result<f64> {
    let [g2, g3, g4, g5] = *gammas;
    if !(g2 > 0.0) {
        return Err(Error::DegenerateVariance(format!("gamma_2 = {g2}")));
    }
    let c0 = g3 / (6.0 * g2.powf(1.5));
    let c1 = (g4 * g2 - 3.0 * g3 * g3) / (24.0 * g2.powi(3));
    let c2 = (g5 * g2 * g2 - 10.0 * g4 * g3 * g2 + 15.0 * g3.powi(3)) / (120.0 * g2.powf(4.5));
    Ok(c0 + c1 * t + c2 * t * t)
}

/// `q_n^s(x0, S_n) = e^{s sigma} / lambda_s^n * r_s(S_n x0) / r_s(x0)`.
pub fn tilt_weights(spectral_s: &SpectralData, walk: &WalkRecord, x0: &ProjPoint) -> f64 {
    tilt_weight_raw(spectral_s, walk.n, walk.sigma, walk.x_end.rep(), x0.rep())
}

/// [`tilt_weights`] from the raw walk output.
pub fn tilt_weight_raw(spectral_s: &SpectralData, n: usize, sigma: f64, end: &[f64], start: &[f64]) -> f64 {
    let s = spectral_s.z.re;
    if s == 0.0 {
        return 1.0;
    }
    let log_q = s * sigma - n as f64 * spectral_s.lambda_real().ln();
    log_q.exp() * spectral_s.r_at_vector(end).re / spectral_s.r_at_vector(start).re
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScgfReport {
    pub s: f64,
    pub n: usize,
    /// `(1/n) log mean e^{s sigma_n}`.
    pub monte_carlo: f64,
    pub stderr: f64,
    /// `log lambda_s`.
    pub transfer: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Scaled cumulant generating function: Monte Carlo against `log lambda_s`.
pub fn scgf_check(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    s: f64,
    n: usize,
    trials: usize,
    spectral_s: &SpectralData,
    seed: u64,
) -> Result<ScgfReport> {
    if s.abs() > 0.3 {
        return Err(Error::Precondition(format!("|s| = {} exceeds 0.3", s.abs())));
    }
    if n == 0 || trials < 2 {
        return Err(Error::Precondition("need n >= 1 and at least 2 trials".into()));
    }
    let ens = crate::randwalk::WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
    let nf = n as f64;
    let expo: Vec<f64> = ens.sigmas().iter().map(|x| s * x).collect();
    let shift = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = expo.iter().map(|e| (e - shift).exp()).collect();
    let est = stats::MeanEstimate::from_samples(&w);
    let monte_carlo = (est.mean.ln() + shift) / nf;
    let stderr = est.stderr / est.mean / nf;
    let transfer = spectral_s.lambda_real().ln();
    let tolerance = (3.0 * stderr).max(2.0 / nf);
    Ok(ScgfReport { s, n, monte_carlo, stderr, transfer, tolerance, pass: (monte_carlo - transfer).abs() <= tolerance })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub xi: f64,
    /// `(n, |P_{i xi}^n 1|_inf)`.
    pub norms: Vec<(usize, f64)>,
    /// `exp` of the fitted slope of `log norm` against `n`; `None` with fewer than two usable points.
    pub rho_hat: Option<f64>,
    pub decays: bool,
}

/// Sup norms of `P_{i xi}^n 1` and their fitted geometric rate.
pub fn large_xi_decay(mu: &MeasureSpec, grid: CircleGrid, xi: f64, n_list: &[usize]) -> Result<DecayReport> {
    if !(0.5..=20.0).contains(&xi.abs()) {
        return Err(Error::Precondition(format!("|xi| = {} outside [0.5, 20]", xi.abs())));
    }
    let op = build_operator(mu, C64::new(0.0, xi), grid)?;
    let mut order: Vec<usize> = n_list.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut v = vec![C64::new(1.0, 0.0); grid.m];
    let mut w = v.clone();
    let mut done = 0;
    let mut norms = Vec::with_capacity(order.len());
    for &n in &order {
        while done < n {
            op.apply(&v, &mut w);
            std::mem::swap(&mut v, &mut w);
            done += 1;
        }
        norms.push((n, max_abs(&v)));
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        norms.iter().filter(|(_, a)| *a > 1e-300).map(|(n, a)| (*n as f64, a.ln())).unzip();
    let rho_hat = if x.len() >= 2 { linear_fit(&x, &y).map(|f| f.slope.exp()) } else { None };
    Ok(DecayReport { xi, norms, decays: rho_hat.is_some_and(|r| r < 1.0 - 1e-6), rho_hat })
}

/// Walks under the tilted kernel `q(x, g_j) = p_j e^{s sigma(g_j, x)} r(g_j x) / Z(x)`,
/// with `Z(x) = sum_k p_k e^{s sigma(g_k, x)} r(g_k x)`.
///
/// `log_weight` is the exact log likelihood ratio `log prod p_j / q(x_k, g_j)`
/// of the untilted walk with respect to the tilted one, so
/// `E_tilted[f e^{log_weight}] = E[f]` for any `r > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedEnsemble {
    pub n: usize,
    pub s: f64,
    pub sigma: Vec<f64>,
    pub log_weight: Vec<f64>,
    x_end: Vec<f64>,
}

impl TiltedEnsemble {
    pub fn trials(&self) -> usize {
        self.sigma.len()
    }

    pub fn end_vector(&self, i: usize) -> &[f64] {
        &self.x_end[2 * i..2 * i + 2]
    }
}

/// Law of the starting direction of a walk.
#[derive(Clone, Debug)]
pub enum Start {
    Point(ProjPoint),
    /// Discrete law; weights need not be normalised. Drawn once per trial.
    Law(Vec<(ProjPoint, f64)>),
}

impl Start {
    pub fn dim(&self) -> usize {
        match self {
            Start::Point(x) => x.dim(),
            Start::Law(pts) => pts.first().map_or(0, |(x, _)| x.dim()),
        }
    }

    fn sampler(&self) -> Result<Option<(Vec<f64>, f64)>> {
        match self {
            Start::Point(_) => Ok(None),
            Start::Law(pts) => {
                let mut acc = 0.0;
                let mut cdf = Vec::with_capacity(pts.len());
                for (_, w) in pts {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidMeasure("start weights must be finite and non-negative".into()));
                    }
                    acc += w;
                    cdf.push(acc);
                }
                if !(acc > 0.0) {
                    return Err(Error::InvalidMeasure("start law has no mass".into()));
                }
                Ok(Some((cdf, acc)))
            }
        }
    }

    fn draw<'a, R: Rng>(&'a self, cdf: &Option<(Vec<f64>, f64)>, rng: &mut R) -> &'a ProjPoint {
        match (self, cdf) {
            (Start::Point(x), _) => x,
            (Start::Law(pts), Some((c, total))) => {
                let u = rng.random::<f64>() * total;
                let i = c.partition_point(|v| *v <= u).min(pts.len() - 1);
                &pts[i].0
            }
            (Start::Law(_), None) => unreachable!(),
        }
    }
}

/// With `Start::Law` the start is drawn first from the trial stream.
pub fn tilted_walks(
    mu: &MeasureSpec,
    spectral_s: &SpectralData,
    start: &Start,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<TiltedEnsemble> {
    if mu.dim() != 2 || start.dim() != 2 {
        return Err(Error::Dimension("tilted walks are implemented for d = 2".into()));
    }
    let cdf = start.sampler()?;
    let s = spectral_s.z.re;
    let r_min = spectral_s.r_z.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    if !(r_min > 0.0) {
        return Err(Error::Precondition("tilting eigenfunction must be positive".into()));
    }
    let atoms = mu.atoms();
    let k = atoms.len();
    let r_re: Vec<f64> = spectral_s.r_z.iter().map(|c| c.re).collect();
    let grid = spectral_s.grid;
    let rows = par_map_trials(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let mut st = WalkState::new(start.draw(&cdf, &mut rng));
        let mut w = [0.0; 2];
        let mut q = vec![0.0; k];
        let mut log_w = 0.0;
        for _ in 0..n {
            let mut z = 0.0;
            for (j, (g, p)) in atoms.iter().enumerate() {
                apply_row_major(2, g.entries(), &st.v, &mut w);
                let nr = norm2(&w);
                q[j] = p * nr.powf(s) * grid.interpolate(&r_re, line_angle(&w));
                z += q[j];
            }
            let u: f64 = rng.random::<f64>() * z;
            let mut acc = 0.0;
            let mut pick = k - 1;
            for (j, qj) in q.iter().enumerate() {
                acc += qj;
                if u < acc {
                    pick = j;
                    break;
                }
            }
            log_w += (atoms[pick].1 * z / q[pick]).ln();
            st.step(&atoms[pick].0);
        }
        (st.sigma(), log_w, st.v)
    });
    let mut out = TiltedEnsemble {
        n,
        s,
        sigma: Vec::with_capacity(trials),
        log_weight: Vec::with_capacity(trials),
        x_end: Vec::with_capacity(2 * trials),
    };
    for (sg, lw, v) in rows {
        out.sigma.push(sg);
        out.log_weight.push(lw);
        out.x_end.extend_from_slice(&v);
    }
    Ok(out)
}

/// Root of `Lambda'(s) - Lambda'(0) = target` by bisection on `[-0.5, 0.5]`.
pub fn solve_tilt(mu: &MeasureSpec, grid: CircleGrid, target: f64) -> Result<f64> {
    let h = 1e-3;
    let dlog =
        |s: f64| -> Result<f64> { Ok((log_lambda(mu, grid, s + h)? - log_lambda(mu, grid, s - h)?) / (2.0 * h)) };
    let base = dlog(0.0)?;
    let f = |s: f64| -> Result<f64> { Ok(dlog(s)? - base - target) };
    let (mut lo, mut hi) = (-0.49, 0.49);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo * fhi > 0.0 {
        return Err(Error::Precondition(format!("tilt target {target} not reachable with |s| < 0.5")));
    }
    let rising = fhi > flo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projgeom::GroupElement;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn generic() -> MeasureSpec {
        let a = GroupElement::diag(&[2.0, 0.5]).unwrap();
        let b = GroupElement::rotation(PI / 4.0).mul(&a).unwrap();
        MeasureSpec::uniform(vec![a, b]).unwrap()
    }

    fn scalar2() -> MeasureSpec {
        MeasureSpec::uniform(vec![GroupElement::scalar(2, 2.0).unwrap()]).unwrap()
    }

    fn grid(m: usize) -> CircleGrid {
        CircleGrid::new(m).unwrap()
    }

    #[test]
    fn grid_rules() {
        assert!(CircleGrid::new(32).is_err());
        let g = grid(64);
        assert_eq!(g.locate(PI), (0, 1, 0.0));
        let (i0, i1, w) = g.locate(PI - 0.5 * g.step());
        assert_eq!((i0, i1), (63, 0));
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn identity_operator_is_interpolation_identity() {
        let mu = MeasureSpec::uniform(vec![GroupElement::identity(2)]).unwrap();
        let op = build_operator(&mu, C64::new(0.0, 0.0), grid(128)).unwrap();
        let phi: Vec<C64> = (0..128).map(|i| C64::new((i as f64).sin(), 0.3 * i as f64)).collect();
        let mut out = vec![C64::new(0.0, 0.0); 128];
        op.apply(&phi, &mut out);
        for (a, b) in phi.iter().zip(&out) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn stochastic_at_zero() {
        let op = build_operator(&generic(), C64::new(0.0, 0.0), grid(256)).unwrap();
        let ones = vec![C64::new(1.0, 0.0); 256];
        let mut out = ones.clone();
        op.apply(&ones, &mut out);
        assert!(out.iter().all(|c| (c - 1.0).norm() <= 1e-12));
    }

    #[test]
    fn preconditions() {
        let mu3 = MeasureSpec::uniform(vec![GroupElement::identity(3)]).unwrap();
        assert!(matches!(build_operator(&mu3, C64::new(0.0, 0.0), grid(64)), Err(Error::Dimension(_))));
        assert!(build_operator(&generic(), C64::new(0.6, 0.0), grid(64)).is_err());
    }

    #[test]
    fn scalar_atom_eigenvalues() {
        for s in [-0.4, 0.1, 0.5] {
            let sd = leading_eigen(&build_operator(&scalar2(), C64::new(s, 0.0), grid(128)).unwrap()).unwrap();
            assert_abs_diff_eq!(sd.lambda_z.re, 2f64.powf(s), epsilon = 1e-10);
            assert_abs_diff_eq!(sd.gap, 1.0, epsilon = 1e-9);
        }
        let op = build_operator(
            &MeasureSpec::uniform(vec![GroupElement::scalar(2, 2.0).unwrap()]).unwrap(),
            C64::new(0.5, 0.0),
            grid(64),
        )
        .unwrap();
        let sd = leading_eigen(&op).unwrap();
        assert_abs_diff_eq!(sd.lambda_z.re, 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn generic_at_zero() {
        let sd = leading_eigen(&build_operator(&generic(), C64::new(0.0, 0.0), grid(512)).unwrap()).unwrap();
        assert_abs_diff_eq!(sd.lambda_z.re, 1.0, epsilon = 1e-8);
        assert!(sd.lambda_z.im.abs() <= 1e-12);
        assert!(sd.r_z.iter().all(|c| (c - 1.0).norm() <= 1e-8));
        assert_abs_diff_eq!(sd.nu_hat.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(sd.gap < 1.0, "gap {}", sd.gap);
        assert!(sd.residual <= 1e-8);
        assert!(sd.deflation_residual <= 1e-6, "{}", sd.deflation_residual);
    }

    #[test]
    fn generic_complex_residual_and_gap() {
        let op = build_operator(&generic(), C64::new(0.1, 0.2), grid(512)).unwrap();
        let sd = leading_eigen(&op).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); 512];
        op.apply(&sd.r_z, &mut out);
        let res = out.iter().zip(&sd.r_z).map(|(a, b)| (a - sd.lambda_z * b).norm()).fold(0.0, f64::max);
        assert!(res <= 1e-8 * sd.lambda_z.norm() * max_abs(&sd.r_z));
        let pair: C64 = sd.nu_hat.iter().zip(&sd.r_z).map(|(n, r)| r * *n).sum();
        assert!((pair - 1.0).norm() <= 1e-12);
        assert!(sd.gap < 1.0);
    }

    #[test]
    fn scalar_derivatives() {
        let c = lambda_real_derivatives(&scalar2(), grid(64), 5, 0.05).unwrap();
        assert_abs_diff_eq!(c.gamma(1), LN_2, epsilon = 1e-6);
        for m in 2..=5 {
            assert_abs_diff_eq!(c.gamma(m), 0.0, epsilon = 1e-6);
        }
        assert!(lambda_real_derivatives(&scalar2(), grid(64), 6, 0.05).is_err());
        assert!(lambda_real_derivatives(&scalar2(), grid(64), 2, 0.1).is_err());
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(cramer_zeta(&[1.0, 0.0, 0.0, 0.0], 0.3).unwrap(), 0.0);
        assert_eq!(cramer_zeta(&[1.0, 6.0, 0.0, 0.0], 0.0).unwrap(), 1.0);
        assert_eq!(cramer_zeta(&[1.0, 0.0, 24.0, 0.0], 1.0).unwrap(), 1.0);
        assert!(matches!(cramer_zeta(&[0.0, 1.0, 0.0, 0.0], 0.0), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn scalar_expansion_is_third_order() {
        let xi: Vec<f64> = (1..=10).map(|k| 0.03 * k as f64).collect();
        let rep = lambda_expansion_check(&scalar2(), grid(64), &xi, LN_2, 0.0).unwrap();
        for r in &rep.rows {
            let exact = (C64::new(0.0, LN_2 * r.xi).exp() - 1.0 - C64::new(0.0, LN_2 * r.xi)
                + 0.5 * LN_2 * LN_2 * r.xi * r.xi)
                .norm();
            assert_abs_diff_eq!(r.residual, exact, epsilon = 1e-12);
        }
        assert!(rep.pass && rep.order > 2.9);
        let mut bad = xi.clone();
        bad[0] = 0.0;
        assert!(lambda_expansion_check(&scalar2(), grid(64), &bad, LN_2, 0.0).is_err());
    }

    #[test]
    fn tilt_weight_trivial_cases() {
        let x0 = ProjPoint::from_angle(0.3);
        let sd0 = leading_eigen(&build_operator(&generic(), C64::new(0.0, 0.0), grid(256)).unwrap()).unwrap();
        let walk = crate::randwalk::run_walk(&generic(), &x0, 50, 3).unwrap();
        assert_eq!(tilt_weights(&sd0, &walk, &x0), 1.0);
        let sd = leading_eigen(&build_operator(&scalar2(), C64::new(0.3, 0.0), grid(64)).unwrap()).unwrap();
        let walk = crate::randwalk::run_walk(&scalar2(), &x0, 40, 3).unwrap();
        assert_abs_diff_eq!(tilt_weights(&sd, &walk, &x0), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tilt_weights_average_to_one() {
        let mu = generic();
        let x0 = ProjPoint::from_angle(0.3);
        let sd = leading_eigen(&build_operator(&mu, C64::new(0.1, 0.0), grid(512)).unwrap()).unwrap();
        let ens = crate::randwalk::WalkEnsemble::simulate(&mu, &x0, 30, 10_000, 8).unwrap();
        let ws: Vec<f64> =
            (0..ens.trials()).map(|i| tilt_weight_raw(&sd, 30, ens.sigmas()[i], ens.end_vector(i), x0.rep())).collect();
        let m = stats::MeanEstimate::from_samples(&ws);
        assert!((m.mean - 1.0).abs() <= 4.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn tilted_sampling_is_unbiased() {
        let mu = generic();
        let x0 = ProjPoint::from_angle(0.3);
        let n = 20;
        let sd = leading_eigen(&build_operator(&mu, C64::new(0.3, 0.0), grid(512)).unwrap()).unwrap();
        let tilted = tilted_walks(&mu, &sd, &Start::Point(x0.clone()), n, 20_000, 2).unwrap();
        let level = 0.3767 * n as f64 + 3.0;
        let is: Vec<f64> = (0..tilted.trials())
            .map(|i| if tilted.sigma[i] > level { tilted.log_weight[i].exp() } else { 0.0 })
            .collect();
        let is = stats::MeanEstimate::from_samples(&is);
        let direct = crate::randwalk::WalkEnsemble::simulate(&mu, &x0, n, 20_000, 3).unwrap();
        let hits: Vec<f64> = direct.sigmas().iter().map(|s| f64::from(u8::from(*s > level))).collect();
        let direct = stats::MeanEstimate::from_samples(&hits);
        let se = (is.stderr.powi(2) + direct.stderr.powi(2)).sqrt();
        assert!(is.mean > 0.0 && (is.mean - direct.mean).abs() <= 4.0 * se, "{is:?} {direct:?}");
        // s > 0 pushes the drift above n gamma
        assert!(tilted.sigma.iter().sum::<f64>() / tilted.trials() as f64 > 0.3767 * n as f64);
    }

    #[test]
    fn start_laws() {
        let mu = generic();
        let sd = leading_eigen(&build_operator(&mu, C64::new(0.2, 0.0), grid(128)).unwrap()).unwrap();
        let p = ProjPoint::from_angle(1.0);
        let law = Start::Law(vec![(ProjPoint::from_angle(0.2), 0.0), (p.clone(), 2.0)]);
        let a = tilted_walks(&mu, &sd, &law, 0, 5, 1).unwrap();
        for i in 0..5 {
            assert_abs_diff_eq!(line_angle(a.end_vector(i)), 1.0, epsilon = 1e-12);
        }
        let b = tilted_walks(&mu, &sd, &law, 12, 50, 1).unwrap();
        assert_eq!(b, tilted_walks(&mu, &sd, &law, 12, 50, 1).unwrap());
        let bad = Start::Law(vec![(p.clone(), -1.0)]);
        assert!(matches!(tilted_walks(&mu, &sd, &bad, 5, 5, 1), Err(Error::InvalidMeasure(_))));
        let empty = Start::Law(vec![(p, 0.0)]);
        assert!(matches!(tilted_walks(&mu, &sd, &empty, 5, 5, 1), Err(Error::InvalidMeasure(_))));
    }

    #[test]
    fn scgf_trivial_cases() {
        let x0 = ProjPoint::from_angle(0.3);
        let sd = leading_eigen(&build_operator(&scalar2(), C64::new(0.2, 0.0), grid(64)).unwrap()).unwrap();
        let rep = scgf_check(&scalar2(), &x0, 0.2, 30, 20, &sd, 1).unwrap();
        assert_abs_diff_eq!(rep.monte_carlo, 0.2 * LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.transfer, 0.2 * LN_2, epsilon = 1e-12);
        let sd0 = leading_eigen(&build_operator(&generic(), C64::new(0.0, 0.0), grid(128)).unwrap()).unwrap();
        let rep = scgf_check(&generic(), &x0, 0.0, 30, 20, &sd0, 1).unwrap();
        assert_eq!(rep.monte_carlo, 0.0);
        assert!(rep.transfer.abs() <= 1e-12);
    }

    #[test]
    fn decay_reports() {
        let rep = large_xi_decay(&scalar2(), grid(64), 2.0, &[0, 5, 10, 20]).unwrap();
        assert!(rep.norms.iter().all(|(_, a)| (a - 1.0).abs() <= 1e-12));
        assert!(!rep.decays);
        let rep = large_xi_decay(&generic(), grid(256), 2.0, &[0]).unwrap();
        assert_eq!(rep.norms, vec![(0, 1.0)]);
        assert!(rep.rho_hat.is_none());
        let rep = large_xi_decay(&generic(), grid(512), 2.0, &[10, 20, 40, 80]).unwrap();
        assert!(rep.decays, "{:?}", rep);
        assert!(large_xi_decay(&generic(), grid(64), 0.1, &[1]).is_err());
    }
}
