//! Band-limited smoothing on the real line.
//!
//! The base profile is the even, strictly positive, unit-mass function
//!
//! ```text
//! theta(u) = 3/(16 pi) [ sinc^4((u - pi)/4) + sinc^4((u + pi)/4) ],   sinc x = sin x / x,
//! ```
//!
//! whose transform `theta_hat(xi) = int theta(u) e^{-i u xi} du` is
//! `(3/2) M4(2 xi) cos(pi xi)` with `M4` the centred cubic B-spline, supported
//! in `[-1, 1]`. The scaled kernel is `theta_delta(t) = delta^-2 theta(t / delta^2)`,
//! so `theta_delta_hat` is supported in `[-delta^-2, delta^-2]`.
//!
//! All convolutions are discrete sums with weights normalised to total mass 1,
//! which makes the bracketing of [`approx_pm`] exact on the grid nodes.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Values on the uniform grid `t_i = (i - K) step`, `i = 0..=2K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    half: usize,
    step: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    /// Samples `f` on `[-T, T]`, rounding `T` to a whole number of steps.
    pub fn from_fn<F: Fn(f64) -> f64>(half_width: f64, step: f64, f: F) -> Result<Self> {
        if !(step > 0.0) || !(half_width >= step) {
            return Err(Error::Precondition(format!("grid needs 0 < step <= T (step {step}, T {half_width})")));
        }
        let half = (half_width / step).round() as usize;
        let values = (0..=2 * half).map(|i| f((i as f64 - half as f64) * step)).collect();
        Ok(SampledFunction { half, step, values })
    }

    pub fn from_values(step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len().is_multiple_of(2) || values.len() < 3 || !(step > 0.0) {
            return Err(Error::Precondition("need an odd number (>= 3) of samples and step > 0".into()));
        }
        Ok(SampledFunction { half: values.len() / 2, step, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn half_width(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Value at node offset `j` from the centre, linearly extrapolated beyond the ends.
    fn at_offset_extrapolated(&self, j: i64) -> f64 {
        let n = self.values.len() as i64;
        let i = j + self.half as i64;
        if i < 0 {
            let slope = self.values[1] - self.values[0];
            self.values[0] + slope * i as f64
        } else if i >= n {
            let slope = self.values[(n - 1) as usize] - self.values[(n - 2) as usize];
            self.values[(n - 1) as usize] + slope * (i - n + 1) as f64
        } else {
            self.values[i as usize]
        }
    }

    fn at_offset_zero(&self, j: i64) -> f64 {
        let i = j + self.half as i64;
        if i < 0 || i >= self.values.len() as i64 {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    /// Linear interpolation; 0 outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let p = t / self.step + self.half as f64;
        if p < 0.0 || p > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (p.floor() as usize).min(self.values.len() - 2);
        let w = p - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Trapezoid rule.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        self.step * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest finite-difference slope.
    pub fn lipschitz(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs() / self.step).fold(0.0, f64::max)
    }

    /// Trapezoid `L^1` distance to `other` on a common grid.
    pub fn l1_distance(&self, other: &SampledFunction) -> Result<f64> {
        self.same_grid(other)?;
        let d: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect();
        Ok(self.step * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[d.len() - 1])))
    }

    pub fn sup_distance(&self, other: &SampledFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |a, (x, y)| a.max((x - y).abs())))
    }

    fn same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.half != other.half || (self.step - other.step).abs() > 1e-15 * self.step {
            return Err(Error::GridMismatch("functions live on different grids".into()));
        }
        Ok(())
    }

    fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> SampledFunction {
        SampledFunction { half: self.half, step: self.step, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    fn zip_values<F: Fn(f64, f64) -> f64>(&self, other: &SampledFunction, f: F) -> SampledFunction {
        SampledFunction {
            half: self.half,
            step: self.step,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// The base profile.
pub fn theta(u: f64) -> f64 {
    let a = sinc((u - PI) / 4.0).powi(4);
    let b = sinc((u + PI) / 4.0).powi(4);
    3.0 / (16.0 * PI) * (a + b)
}

/// Centred cubic B-spline on `[-2, 2]`.
fn m4(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

/// Transform of the base profile; zero for `|xi| >= 1`.
pub fn theta_hat(xi: f64) -> f64 {
    1.5 * m4(2.0 * xi) * (PI * xi).cos()
}

/// Bound on `tail_mass(delta) / delta^2` over `0 < delta <= 1` (the supremum is about 7.37, near `delta = 0.19`).
pub const TAIL_CONSTANT: f64 = 7.5;

/// `theta_delta` together with its transform.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingKernel {
    pub delta: f64,
    pub profile: SampledFunction,
    pub ft_profile: SampledFunction,
}

impl SmoothingKernel {
    /// `theta_delta(t)`.
    pub fn value(&self, t: f64) -> f64 {
        let d2 = self.delta * self.delta;
        theta(t / d2) / d2
    }

    /// `theta_delta_hat(xi) = theta_hat(delta^2 xi)`.
    pub fn ft(&self, xi: f64) -> f64 {
        theta_hat(self.delta * self.delta * xi)
    }

    /// `int theta_delta(t) e^{-i t xi} dt` by quadrature on the profile grid.
    pub fn numerical_ft(&self, xi: f64) -> Complex64 {
        let p = &self.profile;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in p.values.iter().enumerate() {
            acc += Complex64::from_polar(*v, -p.t(i) * xi);
        }
        acc * p.step
    }

    /// `int_{|t| >= delta} theta_delta`, as one minus the mass of `(-delta, delta)`.
    pub fn tail_mass(&self) -> f64 {
        // Simpson on the base profile over (-1/delta, 1/delta)
        let lim = 1.0 / self.delta;
        let n = 20_000usize;
        let h = 2.0 * lim / n as f64;
        let mut s = theta(-lim) + theta(lim);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * theta(-lim + k as f64 * h);
        }
        1.0 - s * h / 3.0
    }

    /// Discrete weights `theta_delta(s_k) step`, normalised to sum 1.
    fn weights(&self) -> Vec<f64> {
        let total: f64 = self.profile.values.iter().sum();
        self.profile.values.iter().map(|v| v / total).collect()
    }

    /// `int theta_delta^2` in the time and frequency domains.
    pub fn plancherel(&self) -> (f64, f64) {
        let time = self.profile.map_values(|v| v * v).integral();
        let freq = self.ft_profile.map_values(|v| v * v).integral() / (2.0 * PI);
        (time, freq)
    }
}

/// Builds `theta_delta` on `[-T, T]`, `T = max(50 delta, 400 delta^2)`, with step `delta^2 / 10`.
pub fn make_kernel(delta: f64) -> Result<SmoothingKernel> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Precondition(format!("delta = {delta} outside (0, 1]")));
    }
    let d2 = delta * delta;
    let half_width = (50.0 * delta).max(400.0 * d2);
    let profile = SampledFunction::from_fn(half_width, d2 / 10.0, |t| theta(t / d2) / d2)?;
    let band = 1.0 / d2;
    let ft_profile = SampledFunction::from_fn(1.5 * band, band / 1000.0, |xi| theta_hat(d2 * xi))?;
    Ok(SmoothingKernel { delta, profile, ft_profile })
}

/// Ratio `kernel step / psi step`, required to be a positive integer.
fn step_ratio(psi: &SampledFunction, kernel: &SmoothingKernel) -> Result<i64> {
    let q = kernel.profile.step / psi.step;
    let r = q.round();
    if r < 1.0 || (q - r).abs() > 1e-9 * q {
        return Err(Error::GridMismatch(format!(
            "kernel step {} is not a whole multiple of the function step {}",
            kernel.profile.step, psi.step
        )));
    }
    Ok(r as i64)
}

fn convolve<F: Fn(i64) -> f64 + Sync>(
    psi: &SampledFunction,
    weights: &[f64],
    half: usize,
    ratio: i64,
    at: F,
) -> SampledFunction {
    let values = (0..psi.len())
        .map(|i| {
            let j = i as i64 - psi.half as i64;
            weights.iter().enumerate().map(|(k, w)| w * at(j - (k as i64 - half as i64) * ratio)).sum()
        })
        .collect();
    SampledFunction { half: psi.half, step: psi.step, values }
}

/// `psi * theta_delta` on the grid of `psi`, extending `psi` linearly beyond its ends.
pub fn smooth(psi: &SampledFunction, kernel: &SmoothingKernel) -> Result<SampledFunction> {
    let lip = psi.lipschitz();
    if lip > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!("Lipschitz constant {lip} exceeds 1")));
    }
    let ratio = step_ratio(psi, kernel)?;
    Ok(convolve(psi, &kernel.weights(), kernel.profile.half, ratio, |j| psi.at_offset_extrapolated(j)))
}

/// Running max (`upper`) or min of `f` over a window of `w` nodes on each side,
/// with `f` extended by 0.
fn window_extreme(f: &SampledFunction, w: usize, upper: bool) -> SampledFunction {
    let n = f.len() as i64;
    let values = (0..n)
        .map(|i| {
            let it = (i - w as i64..=i + w as i64).map(|k| if k < 0 || k >= n { 0.0 } else { f.values[k as usize] });
            if upper {
                it.fold(f64::NEG_INFINITY, f64::max)
            } else {
                it.fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    SampledFunction { half: f.half, step: f.step, values }
}

/// Bracketing pair for a nonnegative compactly supported `f`.
fn approx_nonneg(f: &SampledFunction, kernel: &SmoothingKernel, ratio: i64) -> (SampledFunction, SampledFunction) {
    let sup = f.sup_norm();
    if sup == 0.0 {
        let zero = f.map_values(|_| 0.0);
        return (zero.clone(), zero);
    }
    let delta = kernel.delta;
    let w = kernel.weights();
    let kh = kernel.profile.half;
    let window = (delta / f.step * (1.0 + 1e-12)).floor() as usize;
    let inside = |k: usize| ((k as i64 - kh as i64) * ratio).unsigned_abs() as usize <= window;
    let tau: f64 = w.iter().enumerate().filter(|(k, _)| !inside(*k)).map(|(_, v)| v).sum();

    let big = window_extreme(f, window, true);
    let upper = convolve(f, &w, kh, ratio, |j| big.at_offset_zero(j)).map_values(|v| v / (1.0 - tau));

    // majorant of the outer weights, whichever of two band-limited candidates is lighter:
    // k(u) = C theta(u / L) / L with L = 1 / delta, or (t / delta)^2 theta_delta(t)
    let d2 = delta * delta;
    let l = 1.0 / delta;
    let c = (0..w.len())
        .filter(|k| !inside(*k))
        .map(|k| {
            let u = (k as f64 - kh as f64) * kernel.profile.step / d2;
            l * theta(u) / theta(u / l)
        })
        .fold(0.0, f64::max);
    let total: f64 = kernel.profile.values.iter().sum();
    let w_major: Vec<f64> = (0..w.len())
        .map(|k| {
            let u = (k as f64 - kh as f64) * kernel.profile.step / d2;
            c * theta(u / l) / l / d2 / total
        })
        .collect();
    let w_quad: Vec<f64> = (0..w.len())
        .map(|k| {
            let t = (k as f64 - kh as f64) * kernel.profile.step;
            w[k] * t * t / d2
        })
        .collect();
    let w_major = if w_quad.iter().sum::<f64>() < w_major.iter().sum::<f64>() { w_quad } else { w_major };
    let small = window_extreme(f, window, false);
    let support = small.map_values(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let core = convolve(f, &w, kh, ratio, |j| small.at_offset_zero(j));
    let spill = convolve(f, &w_major, kh, ratio, |j| support.at_offset_zero(j));
    let lower = core.zip_values(&spill, |a, b| a - sup * b);
    (lower, upper)
}

/// Band-limited `(psi_minus, psi_plus)` with `psi_minus <= psi <= psi_plus` on every grid node.
///
/// `psi` must vanish at both ends of its grid and satisfy `|psi| <= 1`.
pub fn approx_pm(psi: &SampledFunction, delta: f64) -> Result<(SampledFunction, SampledFunction)> {
    if psi.sup_norm() > 1.0 + 1e-12 {
        return Err(Error::Precondition("|psi| must be at most 1".into()));
    }
    let ends = psi.values[0].abs().max(psi.values[psi.len() - 1].abs());
    if ends > 1e-12 {
        return Err(Error::Precondition("psi must vanish at the ends of its grid".into()));
    }
    let kernel = make_kernel(delta)?;
    let ratio = step_ratio(psi, &kernel)?;
    let pos = psi.map_values(|v| v.max(0.0));
    let neg = psi.map_values(|v| (-v).max(0.0));
    let (pos_lo, pos_hi) = approx_nonneg(&pos, &kernel, ratio);
    let (neg_lo, neg_hi) = approx_nonneg(&neg, &kernel, ratio);
    let minus = pos_lo.zip_values(&neg_hi, |a, b| a - b);
    let plus = pos_hi.zip_values(&neg_lo, |a, b| a - b);
    Ok((minus, plus))
}

/// `int |u| theta(u) du`; `sup |f * theta_delta - f| <= Lip(f) delta^2` times this.
pub fn theta_abs_moment() -> f64 {
    let lim = 1.0e4;
    let n = 2_000_000usize;
    let h = lim / n as f64;
    let mut s = lim * theta(lim);
    for k in 1..n {
        let u = k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * u * theta(u);
    }
    2.0 * s * h / 3.0
}

/// Kernel properties at one `delta`, measured on the triangle `(1 - |t|)_+`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCheckRow {
    pub delta: f64,
    pub mass: f64,
    /// Largest `|theta_delta_hat|` sampled at `|xi| >= delta^{-2}` (exactly 0 when the support is exact).
    pub ft_outside_band: f64,
    pub tail_over_delta2: f64,
    pub conv_over_delta2: f64,
    pub bracket_ok: bool,
    pub l1_minus: f64,
    pub l1_plus: f64,
}

/// Runs the kernel property checks for each `delta`.
pub fn kernel_sweep(deltas: &[f64]) -> Result<Vec<KernelCheckRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let k = make_kernel(delta)?;
            let band = 1.0 / (delta * delta);
            let ft_outside_band = k
                .ft_profile
                .values()
                .iter()
                .enumerate()
                .filter(|(i, _)| k.ft_profile.t(*i).abs() >= band)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max);
            let tri = SampledFunction::from_fn(3.0, k.profile.step, |t| (1.0 - t.abs()).max(0.0))?;
            let conv = smooth(&tri, &k)?.sup_distance(&tri)?;
            let (lo, hi) = approx_pm(&tri, delta)?;
            let bracket_ok = (0..tri.len()).all(|i| lo.values[i] <= tri.values[i] && tri.values[i] <= hi.values[i]);
            Ok(KernelCheckRow {
                delta,
                mass: k.profile.integral(),
                ft_outside_band,
                tail_over_delta2: k.tail_mass() / (delta * delta),
                conv_over_delta2: conv / (delta * delta),
                bracket_ok,
                l1_minus: tri.l1_distance(&lo)?,
                l1_plus: tri.l1_distance(&hi)?,
            })
        })
        .collect()
}

/// `(1/M) sum_j e^{-i xi X_j}`.
pub fn conj_char(samples: &[f64], xi: f64) -> Result<Complex64> {
    Ok(conj_char_with_stderr(samples, xi)?.0)
}

/// [`conj_char`] with the standard error of the sample mean (modulus of the complex error).
pub fn conj_char_with_stderr(samples: &[f64], xi: f64) -> Result<(Complex64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples("characteristic function of no samples".into()));
    }
    let m = samples.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for x in samples {
        acc += Complex64::from_polar(1.0, -xi * x);
    }
    let mean = acc / m;
    // E|e^{-i xi X} - phi|^2 = 1 - |phi|^2
    let var = (1.0 - mean.norm_sqr()).max(0.0);
    let stderr = if samples.len() > 1 { (var / (m - 1.0)).sqrt() } else { 0.0 };
    Ok((mean, stderr))
}

/// `(1/pi) sup_t |int_0^{delta^-2} (Theta_t(xi) - Theta_t(-xi)) / xi dxi|` with
/// `Theta_t(xi) = e^{i t xi} (phi_f(xi) - h_hat(xi)) theta_delta_hat(xi)`, by the midpoint rule on `nodes` cells.
pub fn pv_be_functional<F, H>(phi_f: F, h_hat: H, kernel: &SmoothingKernel, t_grid: &[f64], nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
    H: Fn(f64) -> Complex64,
{
    if nodes == 0 || t_grid.is_empty() {
        return Err(Error::Precondition("need integration nodes and at least one t".into()));
    }
    let top = 1.0 / (kernel.delta * kernel.delta);
    let h = top / nodes as f64;
    let xs: Vec<f64> = (0..nodes).map(|k| (k as f64 + 0.5) * h).collect();
    // D(xi) = (phi_f - h_hat) theta_hat at +xi and -xi
    let plus: Vec<Complex64> = xs.iter().map(|&x| (phi_f(x) - h_hat(x)) * kernel.ft(x)).collect();
    let minus: Vec<Complex64> = xs.iter().map(|&x| (phi_f(-x) - h_hat(-x)) * kernel.ft(-x)).collect();
    let near = ((plus[0] - minus[0]) / xs[0]).norm();
    if near > 1e6 {
        return Err(Error::SingularIntegrand(format!("symmetrised integrand reaches {near:e} at xi = {}", xs[0])));
    }
    let best = t_grid
        .iter()
        .map(|&t| {
            let s: Complex64 = xs
                .iter()
                .zip(plus.iter().zip(&minus))
                .map(|(&x, (p, m))| {
                    (Complex64::from_polar(1.0, t * x) * p - Complex64::from_polar(1.0, -t * x) * m) / x
                })
                .sum();
            (s * h).norm()
        })
        .fold(0.0, f64::max);
    Ok(best / PI)
}
