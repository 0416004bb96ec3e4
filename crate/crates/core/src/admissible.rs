//! Admissible target functions `u: P^{d-1} -> R ∪ {±inf}`.
//!
//! A function is admissible with parameters `(eta, alpha, A)` when
//!
//! 1. `nu{|u| >= t} <= A exp(-eta t)` for all `t >= 0`, and
//! 2. `|u(x) - u(x')| <= A d(x, x')^alpha (exp(alpha |u(x)|) + exp(alpha |u(x')|))`
//!    wherever both values are finite.
//!
//! Both properties quantify over all of projective space, so the checks here
//! are statistical: they run on samples and carry confidence slack.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::projgeom::{dot, proj_distance, DualProjPoint, ExtReal, ProjPoint};
use crate::randwalk::{checkpoint_walks, regularity_fit, MeasureSpec, ProbRow};
use crate::stats::Z_99_ONE_SIDED;

/// Where `|u| = inf`.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularSet {
    Empty,
    Hyperplane(DualProjPoint),
    Custom(String),
}

type Evaluator = Arc<dyn Fn(&[f64]) -> ExtReal + Send + Sync>;

/// An admissible function together with its class parameters.
#[derive(Clone)]
pub struct AdmissibleFn {
    name: String,
    eval: Evaluator,
    pub eta_star: f64,
    pub alpha_star: f64,
    pub a_star: f64,
    pub singular_set: SingularSet,
}

impl fmt::Debug for AdmissibleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFn")
            .field("name", &self.name)
            .field("eta_star", &self.eta_star)
            .field("alpha_star", &self.alpha_star)
            .field("a_star", &self.a_star)
            .field("singular_set", &self.singular_set)
            .finish()
    }
}

impl AdmissibleFn {
    /// Wraps an arbitrary evaluator. `f` receives a unit representative of the point.
    pub fn custom<F>(
        name: &str,
        f: F,
        eta_star: f64,
        alpha_star: f64,
        a_star: f64,
        singular_set: SingularSet,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> ExtReal + Send + Sync + 'static,
    {
        check_params(eta_star, alpha_star, a_star)?;
        Ok(AdmissibleFn { name: name.to_string(), eval: Arc::new(f), eta_star, alpha_star, a_star, singular_set })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &ProjPoint) -> ExtReal {
        (self.eval)(x.rep())
    }

    /// Evaluates on a unit vector representing the point (either sign).
    #[inline]
    pub fn eval_unit(&self, v: &[f64]) -> ExtReal {
        (self.eval)(v)
    }

    pub fn with_params(mut self, eta_star: f64, alpha_star: f64, a_star: f64) -> Result<Self> {
        check_params(eta_star, alpha_star, a_star)?;
        self.eta_star = eta_star;
        self.alpha_star = alpha_star;
        self.a_star = a_star;
        Ok(self)
    }
}

fn check_params(eta: f64, alpha: f64, a: f64) -> Result<()> {
    if !(eta > 0.0) || !(alpha > 0.0 && alpha <= 1.0) || !(a > 0.0) {
        return Err(Error::Precondition(format!("need eta > 0, alpha in (0, 1], A > 0; got ({eta}, {alpha}, {a})")));
    }
    Ok(())
}

/// `u = 0`; admissible for every `(eta, alpha, A)` with `A >= 1`.
pub fn u_zero() -> AdmissibleFn {
    AdmissibleFn::custom("zero", |_| ExtReal::Finite(0.0), 1.0, 1.0, 1.0, SingularSet::Empty).expect("valid parameters")
}

/// `u(x) = log d(x, H_y)`, with default parameters `(1, 1, 1)`.
///
/// Use [`u_logdist_fitted`] to take `eta` from stationary samples.
pub fn u_logdist(y: &DualProjPoint) -> AdmissibleFn {
    let f = y.rep().to_vec();
    AdmissibleFn::custom(
        "logdist",
        move |v| ExtReal::log_of(dot(&f, v).abs().min(1.0)),
        1.0,
        1.0,
        1.0,
        SingularSet::Hyperplane(y.clone()),
    )
    .expect("valid parameters")
}

/// `log d(., H_y)` with `eta` from [`regularity_fit`] and the smallest `A >= 1`
/// for which the fitted tail bound dominates the empirical tail on `radii`.
pub fn u_logdist_fitted(y: &DualProjPoint, nu_samples: &[ProjPoint], radii: &[f64]) -> Result<AdmissibleFn> {
    let fit = regularity_fit(nu_samples, y, radii)?;
    if fit.degenerate || !(fit.eta_hat > 0.0) {
        return Err(Error::InsufficientMass(format!("degenerate regularity fit (eta_hat = {})", fit.eta_hat)));
    }
    let eta = fit.eta_hat;
    let envelope = radii.iter().zip(&fit.masses).map(|(r, m)| m / r.powf(eta)).fold(1.0f64, f64::max);
    u_logdist(y).with_params(eta, 1.0, envelope.max(fit.c_hat))
}

/// One row of a tail check.
#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub t: f64,
    pub tail: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Property1Report {
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// Compares `nu_hat{|u| >= t}` with `A exp(-eta t)` plus a one-sided 99% binomial slack.
pub fn check_property1(u: &AdmissibleFn, nu_samples: &[ProjPoint], t_grid: &[f64]) -> Result<Property1Report> {
    if nu_samples.len() < 10_000 {
        return Err(Error::Precondition(format!("{} stationary samples, need at least 10^4", nu_samples.len())));
    }
    let abs_u: Vec<f64> = nu_samples.iter().map(|x| u.eval(x).to_f64().abs()).collect();
    let m = abs_u.len() as f64;
    let rows: Vec<TailRow> = t_grid
        .iter()
        .map(|&t| {
            let tail = abs_u.iter().filter(|a| **a >= t).count() as f64 / m;
            let bound = u.a_star * (-u.eta_star * t).exp();
            let p = bound.clamp(0.0, 1.0);
            let slack = Z_99_ONE_SIDED * (p * (1.0 - p) / m).sqrt();
            TailRow { t, tail, bound, slack, pass: tail <= bound + slack }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(Property1Report { rows, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Property2Report {
    /// Largest `|u(x) - u(x')| / (A d^alpha (e^{alpha|u(x)|} + e^{alpha|u(x')|}))`.
    pub max_ratio: f64,
    pub pairs: usize,
    pub pass: bool,
}

/// Weighted Hölder check on sampled pairs away from the singular set.
pub fn check_property2(u: &AdmissibleFn, pairs: &[(ProjPoint, ProjPoint)]) -> Result<Property2Report> {
    let mut max_ratio: f64 = 0.0;
    for (x, xp) in pairs {
        let (ExtReal::Finite(a), ExtReal::Finite(b)) = (u.eval(x), u.eval(xp)) else {
            return Err(Error::SingularInput("pair touches the singular set".into()));
        };
        let diff = (a - b).abs();
        if diff == 0.0 {
            continue;
        }
        let d = proj_distance(x, xp);
        let rhs = u.a_star * d.powf(u.alpha_star) * ((u.alpha_star * a.abs()).exp() + (u.alpha_star * b.abs()).exp());
        let ratio = if rhs > 0.0 { diff / rhs } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
    }
    Ok(Property2Report { max_ratio, pairs: pairs.len(), pass: max_ratio <= 1.0 })
}

/// Half-width of the plateau of the base bump.
const PLATEAU: f64 = 0.125;

/// The base bump: equal to 1 on `[-1/8, 1/8]`, a cubic smoothstep ramp down to
/// 0 on `1/8 <= |t| <= 7/8`, and 0 for `|t| >= 7/8`. It satisfies
/// `chi(t) + chi(t - 1) = 1` on `[0, 1]`, and `|chi|_{C^1} = 3`.
pub fn chi_tilde(t: f64) -> f64 {
    let a = t.abs();
    if a <= PLATEAU {
        1.0
    } else if a >= 1.0 - PLATEAU {
        0.0
    } else {
        let s = (1.0 - PLATEAU - a) / (1.0 - 2.0 * PLATEAU);
        s * s * (3.0 - 2.0 * s)
    }
}

/// Sup norm plus Lipschitz constant of [`chi_tilde`].
pub fn chi_tilde_c1_norm() -> f64 {
    1.0 + 1.5 / (1.0 - 2.0 * PLATEAU)
}

/// `chi_k = chi_tilde(u + k)`, supported where `|u + k| < 1`.
#[derive(Clone, Debug)]
pub struct PartitionBump {
    pub k: i64,
    pub underlying: AdmissibleFn,
}

impl PartitionBump {
    pub fn eval(&self, w: &ProjPoint) -> f64 {
        self.eval_value(self.underlying.eval(w))
    }

    pub fn eval_value(&self, u: ExtReal) -> f64 {
        match u {
            ExtReal::Finite(v) => chi_tilde(v + self.k as f64),
            _ => 0.0,
        }
    }
}

pub fn partition(u: &AdmissibleFn, k: i64) -> PartitionBump {
    PartitionBump { k, underlying: u.clone() }
}

/// The (at most two) indices `k` with `chi_k(w) != 0`, with their values.
pub fn active_bumps(u_value: ExtReal) -> Vec<(i64, f64)> {
    let ExtReal::Finite(v) = u_value else {
        return Vec::new();
    };
    let centre = (-v).floor() as i64;
    (centre - 1..=centre + 2).map(|k| (k, chi_tilde(v + k as f64))).filter(|(_, c)| *c != 0.0).collect()
}

/// `max |chi_k(x) - chi_k(x')| / (d(x, x')^alpha e^{alpha |k|})` over `pairs`.
pub fn partition_holder_check(u: &AdmissibleFn, k: i64, alpha: f64, pairs: &[(ProjPoint, ProjPoint)]) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= u.alpha_star) {
        return Err(Error::Precondition(format!("alpha = {alpha} outside (0, {}]", u.alpha_star)));
    }
    let bump = partition(u, k);
    let norm = (alpha * k.unsigned_abs() as f64).exp();
    let mut worst: f64 = 0.0;
    for (x, xp) in pairs {
        let diff = (bump.eval(x) - bump.eval(xp)).abs();
        if diff == 0.0 {
            continue;
        }
        let d = proj_distance(x, xp);
        worst = worst.max(diff / (d.powf(alpha) * norm));
    }
    Ok(worst)
}

/// Fraction of trials with `|u(S_n x)| >= a log n`, per `n`.
pub fn tail_ldt_probe(
    mu: &MeasureSpec,
    u: &AdmissibleFn,
    x0: &ProjPoint,
    n_list: &[usize],
    trials: usize,
    a_const: f64,
    seed: u64,
) -> Result<Vec<ProbRow>> {
    if !(a_const > 0.0) {
        return Err(Error::Precondition(format!("a_const = {a_const} must be positive")));
    }
    if trials == 0 {
        return Ok(Vec::new());
    }
    if mu.dim() != x0.dim() {
        return Err(Error::Dimension("measure and starting point disagree".into()));
    }
    let hits = checkpoint_walks(mu, x0, n_list, trials, seed, |k, _, v| {
        let level = a_const * (n_list[k] as f64).ln();
        u.eval_unit(v).to_f64().abs() >= level
    });
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let h = hits.iter().filter(|row| row[k]).count() as u64;
            ProbRow::new(n, h, trials as u64)
        })
        .collect())
}
