//! Monte Carlo renderings of the Berry-Esseen bound and the (moderate deviation)
//! local limit theorem with targets.
//!
//! Every statistic evaluates product observables `Phi(s, w) = psi_J(s) phi(w)`
//! along the walk and compares them with the Gaussian prediction. The drift
//! `gamma` and variance `rho2` are inputs, so a discrepancy measures the limit
//! theorem rather than the estimators.

use std::f64::consts::PI;
use std::fmt;

use crate::admissible::AdmissibleFn;
use crate::error::{Error, Result};
use crate::fourier::SampledFunction;
use crate::projgeom::{ExtReal, ProjPoint};
use crate::randwalk::{MeasureSpec, WalkEnsemble};
use crate::stats::MeanEstimate;
use crate::transfer::{self, CircleGrid, Cumulants, Start, TiltedEnsemble};

/// The `N(0, rho2)` distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTargets {
    pub rho2: f64,
}

impl GaussianTargets {
    pub fn rho(&self) -> f64 {
        self.rho2.sqrt()
    }

    /// `H(b)`, via the complementary error function.
    pub fn cdf(&self, b: f64) -> f64 {
        0.5 * libm::erfc(-b / (2.0 * self.rho2).sqrt())
    }

    pub fn pdf(&self, b: f64) -> f64 {
        (-b * b / (2.0 * self.rho2)).exp() / (2.0 * PI * self.rho2).sqrt()
    }

    /// `h_hat(xi) = exp(-rho2 xi^2 / 2)`.
    pub fn ft(&self, xi: f64) -> f64 {
        (-0.5 * self.rho2 * xi * xi).exp()
    }
}

pub fn gaussian_targets(rho2: f64) -> Result<GaussianTargets> {
    if !(rho2 > 0.0) {
        return Err(Error::DegenerateVariance(format!("rho2 = {rho2}")));
    }
    Ok(GaussianTargets { rho2 })
}

/// Target functions on the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psi {
    One,
    Zero,
    /// `exp(-s^2 / 2)`.
    GaussianBump,
    /// `clamp(s, 0, 1)`.
    ClampedLinear,
    /// `max(0, 1 - |s|)`: support `[-1, 1]`, unit integral.
    Triangle,
}

impl Psi {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Psi::One => 1.0,
            Psi::Zero => 0.0,
            Psi::GaussianBump => (-0.5 * s * s).exp(),
            Psi::ClampedLinear => s.clamp(0.0, 1.0),
            Psi::Triangle => (1.0 - s.abs()).max(0.0),
        }
    }

    fn limit_neg(&self) -> f64 {
        match self {
            Psi::One => 1.0,
            _ => 0.0,
        }
    }

    fn limit_pos(&self) -> f64 {
        match self {
            Psi::One | Psi::ClampedLinear => 1.0,
            _ => 0.0,
        }
    }

    /// Points where `psi` fails to be smooth.
    fn breakpoints(&self) -> &'static [f64] {
        match self {
            Psi::ClampedLinear => &[0.0, 1.0],
            Psi::Triangle => &[-1.0, 0.0, 1.0],
            _ => &[],
        }
    }

    /// `int psi`, for integrable `psi`.
    pub fn integral(&self) -> Option<f64> {
        match self {
            Psi::Zero => Some(0.0),
            Psi::GaussianBump => Some((2.0 * PI).sqrt()),
            Psi::Triangle => Some(1.0),
            Psi::One | Psi::ClampedLinear => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Psi::One => "one",
            Psi::Zero => "zero",
            Psi::GaussianBump => "gaussian_bump",
            Psi::ClampedLinear => "clamped_linear",
            Psi::Triangle => "triangle",
        }
    }

    pub fn from_name(name: &str) -> Option<Psi> {
        [Psi::One, Psi::Zero, Psi::GaussianBump, Psi::ClampedLinear, Psi::Triangle]
            .into_iter()
            .find(|p| p.name() == name)
    }
}

/// Target functions on the projective line, evaluated on unit representatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phi {
    One,
    /// `1/2 + (x_0^2 - x_1^2) / 4`, i.e. `1/2 + cos(2 theta) / 4`.
    Cos2,
    /// `1/2 + (1 - a)/4 sum_{k<K} a^k cos(2 b^k theta)` with `a = 1/2, b = 3, K = 6`;
    /// Hölder of exponent `log 2 / log 3` uniformly in `K`.
    Weierstrass,
}

const W_A: f64 = 0.5;
const W_B: f64 = 3.0;
const W_K: i32 = 6;

impl Phi {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Phi::One => 1.0,
            Phi::Cos2 => {
                let n2 = v[0] * v[0] + v[1] * v[1];
                0.5 + 0.25 * (v[0] * v[0] - v[1] * v[1]) / n2
            }
            Phi::Weierstrass => {
                let th = v[1].atan2(v[0]);
                let s: f64 = (0..W_K).map(|k| W_A.powi(k) * (2.0 * W_B.powi(k) * th).cos()).sum();
                0.5 + 0.25 * (1.0 - W_A) * s
            }
        }
    }

    /// Nominal Hölder exponent.
    pub fn alpha(&self) -> f64 {
        match self {
            Phi::Weierstrass => (1.0 / W_A).ln() / W_B.ln(),
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Phi::One => "one",
            Phi::Cos2 => "cos2",
            Phi::Weierstrass => "weierstrass",
        }
    }

    pub fn from_name(name: &str) -> Option<Phi> {
        [Phi::One, Phi::Cos2, Phi::Weierstrass].into_iter().find(|p| p.name() == name)
    }
}

/// `J = (lo, hi]` with possibly infinite ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn up_to(b: f64) -> Interval {
        Interval { lo: f64::NEG_INFINITY, hi: b }
    }

    pub fn contains(&self, s: f64) -> bool {
        s > self.lo && s <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}

/// `psi_J = psi 1_J`, extended to `+-inf` by its limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedPsi {
    pub psi: Psi,
    pub j: Interval,
}

impl TruncatedPsi {
    pub fn eval(&self, s: f64) -> f64 {
        if self.j.contains(s) {
            self.psi.eval(s)
        } else {
            0.0
        }
    }

    pub fn eval_ext(&self, s: ExtReal) -> f64 {
        match s {
            ExtReal::Finite(v) => self.eval(v),
            ExtReal::NegInf if self.j.lo == f64::NEG_INFINITY => self.psi.limit_neg(),
            ExtReal::PosInf if self.j.hi == f64::INFINITY => self.psi.limit_pos(),
            _ => 0.0,
        }
    }
}

/// A product target with its recorded norms.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPair {
    pub psi: Psi,
    pub phi: Phi,
    /// `|psi|_inf + |psi'|_inf + |psi'|_{L^1}` from central differences on a grid.
    pub norm_h: f64,
    pub alpha: f64,
    /// `|phi|_inf + sup |phi(x) - phi(y)| / d(x, y)^alpha` over grid pairs.
    pub norm_holder: f64,
}

impl TargetPair {
    pub fn new(psi: Psi, phi: Phi) -> Self {
        let sampled = SampledFunction::from_fn(12.0, 1e-3, |s| psi.eval(s)).expect("valid grid");
        let v = sampled.values();
        let h = sampled.step();
        let deriv: Vec<f64> = (1..v.len() - 1).map(|i| (v[i + 1] - v[i - 1]) / (2.0 * h)).collect();
        let d_inf = deriv.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let d_l1: f64 = deriv.iter().map(|d| d.abs()).sum::<f64>() * h;
        let norm_h = sampled.sup_norm() + d_inf + d_l1;

        let alpha = phi.alpha();
        let m = 720;
        let vals: Vec<f64> = (0..m)
            .map(|i| {
                let th = PI * i as f64 / m as f64;
                phi.eval(&[th.cos(), th.sin()])
            })
            .collect();
        let mut quotient: f64 = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                let dth = PI * (j - i) as f64 / m as f64;
                let d = dth.sin().abs();
                quotient = quotient.max((vals[i] - vals[j]).abs() / d.powf(alpha));
            }
        }
        let sup = vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        TargetPair { psi, phi, norm_h, alpha, norm_holder: sup + quotient }
    }
}

/// Weighted points approximating the stationary measure.
pub fn uniform_weights(samples: &[ProjPoint]) -> Vec<(ProjPoint, f64)> {
    let w = 1.0 / samples.len().max(1) as f64;
    samples.iter().map(|x| (x.clone(), w)).collect()
}

fn nu_mean(phi: Phi, nu: &[(ProjPoint, f64)]) -> Result<f64> {
    if nu.is_empty() {
        return Err(Error::EmptySamples("no stationary points".into()));
    }
    let total: f64 = nu.iter().map(|(_, w)| w).sum();
    Ok(nu.iter().map(|(x, w)| w * phi.eval(x.rep())).sum::<f64>() / total)
}

/// Composite Simpson rule with `n` (even) cells.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `int psi_J(s) h(s) ds`.
pub fn gaussian_integral(psi: Psi, j: Interval, g: &GaussianTargets) -> f64 {
    if psi == Psi::One {
        return g.cdf(j.hi) - g.cdf(j.lo);
    }
    let reach = 40.0 * g.rho();
    let lo = j.lo.max(-reach);
    let hi = j.hi.min(reach);
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo];
    cuts.extend(psi.breakpoints().iter().copied().filter(|b| *b > lo && *b < hi));
    cuts.push(hi);
    let mut total = cuts.windows(2).map(|w| simpson(|s| psi.eval(s) * g.pdf(s), w[0], w[1], 4000)).sum::<f64>();
    // constant tail of the clamped ramp beyond the truncated range
    if psi == Psi::ClampedLinear && j.hi > reach {
        total += 1.0 - g.cdf(reach);
    }
    total
}

/// `R = int psi_J(s) h(s) ds * int phi d nu`.
pub fn prediction_r(psi: Psi, j: Interval, phi: Phi, nu: &[(ProjPoint, f64)], rho2: f64) -> Result<f64> {
    let g = gaussian_targets(rho2)?;
    Ok(gaussian_integral(psi, j, &g) * nu_mean(phi, nu)?)
}

/// `psi_J((sigma + u - n gamma) / sqrt n) phi(S_n x)` for every trial of an ensemble.
pub fn en_samples(ens: &WalkEnsemble, u: &AdmissibleFn, psi: Psi, j: Interval, phi: Phi, gamma: f64) -> Vec<f64> {
    let target = TruncatedPsi { psi, j };
    let n = ens.n as f64;
    let root = n.sqrt();
    (0..ens.trials())
        .map(|i| {
            let v = ens.end_vector(i);
            let arg = match u.eval_unit(v) {
                ExtReal::Finite(uv) => ExtReal::Finite((ens.sigmas()[i] + uv - n * gamma) / root),
                other => other,
            };
            target.eval_ext(arg) * phi.eval(v)
        })
        .collect()
}

/// Monte Carlo estimate of `E_n`; trial `i` uses stream `(seed, i)`.
///
/// The limit theorems are stated for `trials >= 10^4`; smaller runs are allowed
/// and callers are expected to flag them.
#[allow(clippy::too_many_arguments)]
pub fn empirical_en(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    u: &AdmissibleFn,
    psi: Psi,
    j: Interval,
    phi: Phi,
    n: usize,
    trials: usize,
    gamma: f64,
    seed: u64,
) -> Result<MeanEstimate> {
    let ens = WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
    Ok(MeanEstimate::from_samples(&en_samples(&ens, u, psi, j, phi, gamma)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BEParams {
    pub u: String,
    pub j: Interval,
    pub psi: Psi,
    pub phi: Phi,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BEResult {
    pub n: usize,
    pub empirical: f64,
    pub prediction: f64,
    /// `|E_n - R|`.
    pub discrepancy: f64,
    /// `sqrt(n) * discrepancy`.
    pub scaled: f64,
    pub mc_stderr: f64,
    pub params: BEParams,
}

/// Berry-Esseen statistic on a precomputed ensemble.
#[allow(clippy::too_many_arguments)]
pub fn berry_esseen_from_ensemble(
    ens: &WalkEnsemble,
    u: &AdmissibleFn,
    psi: Psi,
    j: Interval,
    phi: Phi,
    gamma: f64,
    rho2: f64,
    nu: &[(ProjPoint, f64)],
) -> Result<BEResult> {
    let prediction = prediction_r(psi, j, phi, nu, rho2)?;
    let est = MeanEstimate::from_samples(&en_samples(ens, u, psi, j, phi, gamma));
    let discrepancy = (est.mean - prediction).abs();
    Ok(BEResult {
        n: ens.n,
        empirical: est.mean,
        prediction,
        discrepancy,
        scaled: (ens.n as f64).sqrt() * discrepancy,
        mc_stderr: est.stderr,
        params: BEParams { u: u.name().to_string(), j, psi, phi, trials: ens.trials() },
    })
}

#[allow(clippy::too_many_arguments)]
pub fn berry_esseen_stat(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    u: &AdmissibleFn,
    psi: Psi,
    j: Interval,
    phi: Phi,
    n: usize,
    trials: usize,
    gamma: f64,
    rho2: f64,
    nu: &[(ProjPoint, f64)],
    seed: u64,
) -> Result<BEResult> {
    gaussian_targets(rho2)?;
    let ens = WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
    berry_esseen_from_ensemble(&ens, u, psi, j, phi, gamma, rho2, nu)
}

/// Hit counts below this are flagged.
pub const MIN_HITS: u64 = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct LLTResult {
    pub n: usize,
    pub t: f64,
    /// `sqrt(2 pi n) rho E[psi(t + sigma + u - n gamma) phi(S_n x)]`.
    pub lhs: f64,
    /// `exp(-t^2 / (2 rho2 n)) int psi * mean_nu phi`.
    pub rhs: f64,
    pub abs_err: f64,
    /// Standard error of `lhs`.
    pub stderr: f64,
    /// Trials with `psi(...) != 0`.
    pub hits: u64,
    pub low_hits: bool,
}

fn integrable(psi: Psi) -> Result<f64> {
    psi.integral().ok_or_else(|| Error::Precondition(format!("psi = {} is not integrable", psi.name())))
}

/// Unscaled local samples `psi(shift + sigma + u - n gamma) phi(S_n x)` and the hit count.
fn local_samples(ens: &WalkEnsemble, u: &AdmissibleFn, psi: Psi, phi: Phi, gamma: f64, shift: f64) -> (Vec<f64>, u64) {
    let n = ens.n as f64;
    let mut hits = 0;
    let xs = (0..ens.trials())
        .map(|i| {
            let v = ens.end_vector(i);
            match u.eval_unit(v) {
                ExtReal::Finite(uv) => {
                    let p = psi.eval(shift + ens.sigmas()[i] + uv - n * gamma);
                    if p != 0.0 {
                        hits += 1;
                    }
                    p * phi.eval(v)
                }
                _ => 0.0,
            }
        })
        .collect();
    (xs, hits)
}

/// Local limit statistic on a precomputed ensemble.
#[allow(clippy::too_many_arguments)]
pub fn llt_from_ensemble(
    ens: &WalkEnsemble,
    u: &AdmissibleFn,
    psi: Psi,
    phi: Phi,
    t: f64,
    gamma: f64,
    rho2: f64,
    nu: &[(ProjPoint, f64)],
) -> Result<LLTResult> {
    let g = gaussian_targets(rho2)?;
    let mass = integrable(psi)?;
    let n = ens.n as f64;
    let (xs, hits) = local_samples(ens, u, psi, phi, gamma, t);
    let est = MeanEstimate::from_samples(&xs);
    let scale = (2.0 * PI * n).sqrt() * g.rho();
    let lhs = scale * est.mean;
    let rhs = (-t * t / (2.0 * rho2 * n)).exp() * mass * nu_mean(phi, nu)?;
    Ok(LLTResult {
        n: ens.n,
        t,
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
        stderr: scale * est.stderr,
        hits,
        low_hits: hits < MIN_HITS && psi != Psi::Zero,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn llt_stat(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    u: &AdmissibleFn,
    psi: Psi,
    phi: Phi,
    t: f64,
    n: usize,
    trials: usize,
    gamma: f64,
    rho2: f64,
    nu: &[(ProjPoint, f64)],
    seed: u64,
) -> Result<LLTResult> {
    gaussian_targets(rho2)?;
    integrable(psi)?;
    let ens = WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
    llt_from_ensemble(&ens, u, psi, phi, t, gamma, rho2, nu)
}

/// How [`llt_moderate`] draws its walks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sampling {
    Direct,
    /// Importance sampling under the kernel tilted at the `s` solving
    /// `Lambda'(s) - Lambda'(0) = rho t / sqrt(n)`, with eigenfunctions on `grid`.
    Tilted(CircleGrid),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModerateReport {
    pub n: usize,
    pub t: f64,
    /// `sqrt(n) E[psi(sigma + u - n gamma - sqrt(n) rho t) phi(S_n x)]`.
    pub lhs: f64,
    /// `exp(-t^2/2 + t^3/sqrt(n) zeta(t/sqrt(n))) / (sqrt(2 pi) rho) * int psi * mean_nu phi`.
    pub rhs: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub hits: u64,
    pub low_hits: bool,
    pub zeta: f64,
    /// Tilt parameter (0 for direct sampling).
    pub s: f64,
}

/// Moderate deviation local limit statistic at level `t`.
#[allow(clippy::too_many_arguments)]
pub fn llt_moderate(
    mu: &MeasureSpec,
    start: &Start,
    u: &AdmissibleFn,
    psi: Psi,
    phi: Phi,
    t: f64,
    n: usize,
    trials: usize,
    cumulants: &Cumulants,
    nu: &[(ProjPoint, f64)],
    sampling: Sampling,
    seed: u64,
) -> Result<ModerateReport> {
    let gammas = cumulants.zeta_inputs();
    let rho2 = gammas[0];
    let g = gaussian_targets(rho2)?;
    let mass = integrable(psi)?;
    let gamma = cumulants.gamma(1);
    let nf = n as f64;
    let root = nf.sqrt();
    if t.abs() / root > 0.3 {
        return Err(Error::Precondition(format!("|t| / sqrt(n) = {} exceeds 0.3", t.abs() / root)));
    }
    let shift = -root * g.rho() * t;
    let zeta = transfer::cramer_zeta(&gammas, t / root)?;
    let rhs = (-0.5 * t * t + t.powi(3) / root * zeta).exp() / ((2.0 * PI).sqrt() * g.rho()) * mass * nu_mean(phi, nu)?;
    let (est, hits, s) = match sampling {
        Sampling::Direct => {
            let Start::Point(x0) = start else {
                return Err(Error::Precondition("direct sampling needs a fixed start".into()));
            };
            let ens = WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
            let (xs, hits) = local_samples(&ens, u, psi, phi, gamma, shift);
            (MeanEstimate::from_samples(&xs), hits, 0.0)
        }
        Sampling::Tilted(grid) => {
            let s = transfer::solve_tilt(mu, grid, g.rho() * t / root)?;
            let sd =
                transfer::leading_eigen(&transfer::build_operator(mu, num_complex::Complex64::new(s, 0.0), grid)?)?;
            let ens = transfer::tilted_walks(mu, &sd, start, n, trials, seed)?;
            let (xs, hits) = tilted_samples(&ens, u, psi, phi, gamma, shift);
            (MeanEstimate::from_samples(&xs), hits, s)
        }
    };
    let lhs = root * est.mean;
    Ok(ModerateReport {
        n,
        t,
        lhs,
        rhs,
        ratio: lhs / rhs,
        stderr: root * est.stderr,
        hits,
        low_hits: hits < MIN_HITS && psi != Psi::Zero,
        zeta,
        s,
    })
}

fn tilted_samples(
    ens: &TiltedEnsemble,
    u: &AdmissibleFn,
    psi: Psi,
    phi: Phi,
    gamma: f64,
    shift: f64,
) -> (Vec<f64>, u64) {
    let n = ens.n as f64;
    let mut hits = 0;
    let xs = (0..ens.trials())
        .map(|i| {
            let v = ens.end_vector(i);
            match u.eval_unit(v) {
                ExtReal::Finite(uv) => {
                    let p = psi.eval(shift + ens.sigma[i] + uv - n * gamma);
                    if p != 0.0 {
                        hits += 1;
                    }
                    p * phi.eval(v) * ens.log_weight[i].exp()
                }
                _ => 0.0,
            }
        })
        .collect();
    (xs, hits)
}
