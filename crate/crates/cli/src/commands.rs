//! The experiment families behind the subcommands.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;

use cocycle_lab::admissible::{active_bumps, check_property1, check_property2, partition, u_logdist_fitted};
use cocycle_lab::fourier::{kernel_sweep, theta_abs_moment, KernelCheckRow, TAIL_CONSTANT};
use cocycle_lab::limits::{self, llt_moderate, uniform_weights, Interval, Sampling};
use cocycle_lab::randwalk::{self, estimate_gamma_rho2_stationary, regularity_fit, WalkEnsemble};
use cocycle_lab::stats::{self, MeanEstimate};
use cocycle_lab::transfer::{self, build_operator, leading_eigen, CircleGrid, Start};
use cocycle_lab::{DualProjPoint, Error, ExtReal, ProjPoint, Result};

use crate::config::Experiment;
use crate::output::Table;
use crate::row;

/// Runs below this many trials are reported but never PASS or FAIL.
pub const MIN_TRIALS: usize = 10_000;

/// Cumulants use this finite-difference step.
const CUMULANT_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Fail => "FAIL",
        }
    }

    fn from_check(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Be,
    Llt,
    LltModerate,
    Admissible,
    Kernel,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::Be => "be",
            Which::Llt => "llt",
            Which::LltModerate => "llt_moderate",
            Which::Admissible => "admissible",
            Which::Kernel => "kernel",
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Outcome {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.timings_ms.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }

    /// Worst status over all criteria (PASS when there are none).
    pub fn status(&self) -> Status {
        self.criteria.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }

    fn summary_table(&self, file: &str) -> Table {
        let mut t = Table::new(file, &["criterion", "status", "value", "threshold", "detail"]);
        for c in &self.criteria {
            t.push(row![c.name.clone(), c.status.label(), c.value, c.threshold, c.detail.clone()]);
        }
        t
    }
}

fn interval_label(j: Interval) -> String {
    j.to_string()
}

fn default_dual(d: usize) -> DualProjPoint {
    DualProjPoint::basis(d, d - 1)
}

/// Ten radii log-spaced over two decades, starting at the distance to `H_y` of the
/// tenth closest sample (so the smallest ball is not empty), capped so the top radius is 1.
fn regularity_radii(samples: &[ProjPoint], y: &DualProjPoint) -> Vec<f64> {
    let mut d: Vec<f64> = samples.iter().map(|x| cocycle_lab::projgeom::delta(x, y)).collect();
    d.sort_by(f64::total_cmp);
    let lo = d.get(9).copied().unwrap_or(1e-3).clamp(1e-6, 1e-2);
    (0..10).map(|k| lo * 10f64.powf(2.0 * k as f64 / 9.0)).collect()
}

fn stationary_samples(e: &Experiment, count: usize) -> Result<Vec<ProjPoint>> {
    let c = &e.config;
    randwalk::empirical_stationary(&e.measure, &e.x0, c.burnin.max(1000), count, c.seed.wrapping_add(1))
}

pub fn cmd_estimate(e: &Experiment) -> Result<Outcome> {
    let c = &e.config;
    let mut out = Outcome::default();
    let mut t = Table::new("estimates.csv", &["quantity", "n", "trials", "value", "stderr", "flag"]);
    for &n in &c.n_list {
        let est = out.timed(&format!("lyapunov_n{n}"), || {
            estimate_gamma_rho2_stationary(&e.measure, &e.x0, c.burnin, n, c.trials, c.seed)
        })?;
        let flag = if est.degenerate { "degenerate" } else { "ok" };
        t.push(row!["gamma", n, c.trials, est.gamma_hat, est.stderr_gamma, flag]);
        t.push(row!["rho2", n, c.trials, est.rho2_hat, est.stderr_rho2, flag]);
    }

    let y = e.y.clone().unwrap_or_else(|| default_dual(c.dimension));
    let samples = out.timed("stationary_samples", || stationary_samples(e, c.trials))?;
    let radii = regularity_radii(&samples, &y);
    match regularity_fit(&samples, &y, &radii) {
        Ok(fit) => {
            let (lx, ly): (Vec<f64>, Vec<f64>) =
                radii.iter().zip(&fit.masses).filter(|(_, m)| **m > 0.0).map(|(r, m)| (r.ln(), m.ln())).unzip();
            let se = stats::linear_fit(&lx, &ly).map_or(f64::NAN, |f| f.slope_stderr);
            let flag = if fit.degenerate { "degenerate" } else { "ok" };
            t.push(row!["eta", samples.len(), samples.len(), fit.eta_hat, se, flag]);
            t.push(row!["eta_c", samples.len(), samples.len(), fit.c_hat, f64::NAN, flag]);
            t.push(row!["eta_r_squared", samples.len(), samples.len(), fit.r_squared, f64::NAN, flag]);
        }
        Err(Error::InsufficientMass(_)) => {
            t.push(row!["eta", samples.len(), samples.len(), f64::NAN, f64::NAN, "insufficient-mass"]);
        }
        Err(err) => return Err(err),
    }
    out.tables.push(t);
    Ok(out)
}

fn require_d2(e: &Experiment) -> Result<CircleGrid> {
    if e.config.dimension != 2 {
        return Err(Error::Dimension(format!(
            "the transfer operator is implemented for d = 2, config has d = {}",
            e.config.dimension
        )));
    }
    CircleGrid::new(e.config.grid_m)
}

pub fn cmd_spectrum(e: &Experiment) -> Result<Outcome> {
    let grid = require_d2(e)?;
    let c = &e.config;
    let mut out = Outcome::default();

    let mut curve = Table::new("lambda_curve.csv", &["xi", "re_lambda", "im_lambda", "residual", "gap"]);
    for &xi in &c.xi_list {
        let sd = out.timed(&format!("lambda_xi{xi}"), || {
            leading_eigen(&build_operator(&e.measure, Complex64::new(0.0, xi), grid)?)
        })?;
        curve.push(row![xi, sd.lambda_z.re, sd.lambda_z.im, sd.residual, sd.gap]);
    }

    let mut real = Table::new("lambda_real.csv", &["s", "log_lambda"]);
    for &s in &c.s_list {
        let l = out.timed(&format!("log_lambda_s{s}"), || transfer::log_lambda(&e.measure, grid, s))?;
        real.push(row![s, l]);
    }

    let cum = out.timed("cumulants", || transfer::lambda_real_derivatives(&e.measure, grid, 5, CUMULANT_STEP))?;
    let mut gammas = Table::new("gammas.csv", &["order", "gamma", "error", "ill_conditioned"]);
    for m in 1..=5 {
        gammas.push(row![m, cum.gamma(m), cum.errors[m - 1], cum.ill_conditioned[m - 1]]);
    }

    let mut zeta = Table::new("zeta.csv", &["u", "zeta", "status"]);
    for k in -6..=6 {
        let u = 0.05 * k as f64;
        match transfer::cramer_zeta(&cum.zeta_inputs(), u) {
            Ok(z) => zeta.push(row![u, z, "ok"]),
            Err(Error::DegenerateVariance(_)) => zeta.push(row![u, "", "degenerate-variance"]),
            Err(err) => return Err(err),
        }
    }
    out.tables.extend([curve, real, gammas, zeta]);
    Ok(out)
}

/// Inputs shared by the limit-theorem checks.
struct LimitInputs {
    gamma: f64,
    rho2: f64,
    nu: Vec<(ProjPoint, f64)>,
}

fn limit_inputs(e: &Experiment, out: &mut Outcome) -> Result<LimitInputs> {
    let c = &e.config;
    let mut t = Table::new("inputs.csv", &["quantity", "value", "source"]);
    let (gamma, rho2, nu) = if c.dimension == 2 {
        let grid = CircleGrid::new(c.grid_m)?;
        let sd0 = out.timed("stationary_eigenvector", || {
            leading_eigen(&build_operator(&e.measure, Complex64::new(0.0, 0.0), grid)?)
        })?;
        let (g, r) = match (c.gamma, c.rho2) {
            (Some(g), Some(r)) => (g, r),
            _ => {
                let cum =
                    out.timed("cumulants", || transfer::lambda_real_derivatives(&e.measure, grid, 2, CUMULANT_STEP))?;
                (c.gamma.unwrap_or(cum.gamma(1)), c.rho2.unwrap_or(cum.gamma(2)))
            }
        };
        (g, r, sd0.nu_points())
    } else {
        let samples = out.timed("stationary_samples", || stationary_samples(e, c.trials.max(MIN_TRIALS)))?;
        let (g, r) = match (c.gamma, c.rho2) {
            (Some(g), Some(r)) => (g, r),
            _ => {
                let n = c.n_list.iter().copied().max().unwrap_or(100).max(100);
                let est = out.timed("lyapunov", || {
                    estimate_gamma_rho2_stationary(&e.measure, &e.x0, c.burnin, n, c.trials.max(100), c.seed)
                })?;
                (c.gamma.unwrap_or(est.gamma_hat), c.rho2.unwrap_or(est.rho2_hat))
            }
        };
        (g, r, uniform_weights(&samples))
    };
    let source = |given: bool| {
        if given {
            "config"
        } else if c.dimension == 2 {
            "transfer"
        } else {
            "monte-carlo"
        }
    };
    t.push(row!["gamma", gamma, source(c.gamma.is_some())]);
    t.push(row!["rho2", rho2, source(c.rho2.is_some())]);
    out.tables.push(t);
    Ok(LimitInputs { gamma, rho2, nu })
}

fn small_sample_detail(trials: usize) -> String {
    format!("trials = {trials} < {MIN_TRIALS}")
}

pub fn cmd_verify(e: &Experiment, which: Which) -> Result<Outcome> {
    let mut out = match which {
        Which::Be => verify_be(e)?,
        Which::Llt => verify_llt(e)?,
        Which::LltModerate => verify_moderate(e)?,
        Which::Admissible => verify_admissible(e)?,
        Which::Kernel => verify_kernel(e)?,
    };
    let summary = out.summary_table(&format!("verify_{}_summary.csv", which.name()));
    out.tables.push(summary);
    Ok(out)
}

fn simulate_all(e: &Experiment, out: &mut Outcome) -> Result<Vec<WalkEnsemble>> {
    let c = &e.config;
    c.n_list
        .iter()
        .map(|&n| out.timed(&format!("walks_n{n}"), || WalkEnsemble::simulate(&e.measure, &e.x0, n, c.trials, c.seed)))
        .collect()
}

fn verify_be(e: &Experiment) -> Result<Outcome> {
    let c = &e.config;
    let mut out = Outcome::default();
    let inputs = limit_inputs(e, &mut out)?;
    let ensembles = simulate_all(e, &mut out)?;
    let small = c.trials < MIN_TRIALS;
    let mut t = Table::new(
        "verify_be.csv",
        &[
            "u",
            "psi",
            "phi",
            "interval",
            "n",
            "trials",
            "empirical",
            "prediction",
            "discrepancy",
            "scaled",
            "stderr",
            "status",
        ],
    );
    for &psi in &e.psis {
        for &phi in &e.phis {
            for &j in &e.intervals {
                let mut results = Vec::with_capacity(ensembles.len());
                for ens in &ensembles {
                    let r = limits::berry_esseen_from_ensemble(
                        ens,
                        &e.u,
                        psi,
                        j,
                        phi,
                        inputs.gamma,
                        inputs.rho2,
                        &inputs.nu,
                    )?;
                    let status = if small { Status::Inconclusive } else { Status::Pass };
                    t.push(row![
                        e.u.name(),
                        psi.name(),
                        phi.name(),
                        interval_label(j),
                        r.n,
                        c.trials,
                        r.empirical,
                        r.prediction,
                        r.discrepancy,
                        r.scaled,
                        r.mc_stderr,
                        if small { "INCONCLUSIVE" } else { "OK" }
                    ]);
                    results.push((r, status));
                }
                let name = format!("be:{}/{}/{}/{}", e.u.name(), psi.name(), phi.name(), interval_label(j));
                let (first, last) = (&results[0].0, &results[results.len() - 1].0);
                let (n0, n1) = (first.n as f64, last.n as f64);
                let joint = (n1 * last.mc_stderr.powi(2) + 4.0 * n0 * first.mc_stderr.powi(2)).sqrt();
                let threshold = 2.0 * first.scaled + 3.0 * joint;
                let (status, detail) = if small {
                    (Status::Inconclusive, small_sample_detail(c.trials))
                } else if results.len() < 2 {
                    (Status::Inconclusive, "needs at least two horizons".to_string())
                } else {
                    (
                        Status::from_check(last.scaled <= threshold),
                        format!(
                            "sqrt(n) |E_n - R| at n = {} vs 2x its value at n = {} plus 3 joint stderr",
                            last.n, first.n
                        ),
                    )
                };
                out.criteria.push(Criterion { name, status, value: last.scaled, threshold, detail });
            }
        }
    }
    out.tables.push(t);
    Ok(out)
}

fn verify_llt(e: &Experiment) -> Result<Outcome> {
    let c = &e.config;
    let mut out = Outcome::default();
    let inputs = limit_inputs(e, &mut out)?;
    let ensembles = simulate_all(e, &mut out)?;
    let small = c.trials < MIN_TRIALS;
    let mut t = Table::new(
        "verify_llt.csv",
        &["u", "psi", "phi", "t", "n", "trials", "lhs", "rhs", "abs_err", "stderr", "hits", "status"],
    );
    for &psi in &e.psis {
        for &phi in &e.phis {
            for &tt in &c.t_list {
                let mut results = Vec::with_capacity(ensembles.len());
                for ens in &ensembles {
                    let r = limits::llt_from_ensemble(ens, &e.u, psi, phi, tt, inputs.gamma, inputs.rho2, &inputs.nu)?;
                    let status = if small || r.low_hits { "INCONCLUSIVE" } else { "OK" };
                    t.push(row![
                        e.u.name(),
                        psi.name(),
                        phi.name(),
                        tt,
                        r.n,
                        c.trials,
                        r.lhs,
                        r.rhs,
                        r.abs_err,
                        r.stderr,
                        r.hits,
                        status
                    ]);
                    results.push(r);
                }
                let (first, last) = (&results[0], &results[results.len() - 1]);
                let threshold = first.abs_err + 3.0 * (first.stderr.powi(2) + last.stderr.powi(2)).sqrt();
                let (status, detail) = if small {
                    (Status::Inconclusive, small_sample_detail(c.trials))
                } else if results.iter().any(|r| r.low_hits) {
                    (Status::Inconclusive, format!("fewer than {} hits at some horizon", limits::MIN_HITS))
                } else if results.len() < 2 {
                    (Status::Inconclusive, "needs at least two horizons".to_string())
                } else {
                    (
                        Status::from_check(last.abs_err <= threshold),
                        format!("|lhs - rhs| at n = {} vs n = {} plus 3 joint stderr", last.n, first.n),
                    )
                };
                out.criteria.push(Criterion {
                    name: format!("llt:{}/{}/{}/t={tt}", e.u.name(), psi.name(), phi.name()),
                    status,
                    value: last.abs_err,
                    threshold,
                    detail,
                });
            }
        }
    }
    out.tables.push(t);
    Ok(out)
}

/// Moderate-deviation window: `t = n^{1/4}`, walks tilted to the level and started from `nu`.
fn verify_moderate(e: &Experiment) -> Result<Outcome> {
    let grid = require_d2(e)?;
    let c = &e.config;
    let mut out = Outcome::default();
    let inputs = limit_inputs(e, &mut out)?;
    let cum = out.timed("cumulants5", || transfer::lambda_real_derivatives(&e.measure, grid, 5, CUMULANT_STEP))?;
    let start = Start::Law(inputs.nu.clone());
    let small = c.trials < MIN_TRIALS;
    let mut t = Table::new(
        "verify_llt_moderate.csv",
        &["u", "psi", "phi", "n", "t", "s", "zeta", "trials", "lhs", "rhs", "ratio", "stderr", "hits", "status"],
    );
    for &psi in &e.psis {
        for &phi in &e.phis {
            for &n in &c.n_list {
                let tt = (n as f64).powf(0.25);
                let r = out.timed(&format!("moderate_{}_{}_n{n}", psi.name(), phi.name()), || {
                    llt_moderate(
                        &e.measure,
                        &start,
                        &e.u,
                        psi,
                        phi,
                        tt,
                        n,
                        c.trials,
                        &cum,
                        &inputs.nu,
                        Sampling::Tilted(grid),
                        c.seed,
                    )
                })?;
                let (status, detail) = if small {
                    (Status::Inconclusive, small_sample_detail(c.trials))
                } else if r.low_hits {
                    (Status::Inconclusive, format!("{} hits < {}", r.hits, limits::MIN_HITS))
                } else {
                    (Status::from_check((0.7..=1.3).contains(&r.ratio)), "lhs / rhs in [0.7, 1.3]".to_string())
                };
                t.push(row![
                    e.u.name(),
                    psi.name(),
                    phi.name(),
                    n,
                    tt,
                    r.s,
                    r.zeta,
                    c.trials,
                    r.lhs,
                    r.rhs,
                    r.ratio,
                    r.stderr,
                    r.hits,
                    if status == Status::Inconclusive { "INCONCLUSIVE" } else { "OK" }
                ]);
                out.criteria.push(Criterion {
                    name: format!("llt-moderate:{}/{}/{}/n={n}", e.u.name(), psi.name(), phi.name()),
                    status,
                    value: r.ratio,
                    threshold: 1.3,
                    detail,
                });
            }
        }
    }
    out.tables.push(t);

    // tilt weights of untilted walks average to 1; their variance grows like
    // exp((Lambda(2s) - 2 Lambda(s)) n), so the horizon is capped
    let n0 = c.n_list.iter().copied().min().expect("validated non-empty").min(64);
    let s = 0.1;
    let sd = out.timed("tilt_eigen", || leading_eigen(&build_operator(&e.measure, Complex64::new(s, 0.0), grid)?))?;
    let ens =
        out.timed("tilt_walks", || WalkEnsemble::simulate(&e.measure, &e.x0, n0, c.trials, c.seed.wrapping_add(2)))?;
    let ws: Vec<f64> = (0..ens.trials())
        .map(|i| transfer::tilt_weight_raw(&sd, n0, ens.sigmas()[i], ens.end_vector(i), e.x0.rep()))
        .collect();
    let m = MeanEstimate::from_samples(&ws);
    let dev = (m.mean - 1.0).abs();
    out.criteria.push(Criterion {
        name: format!("tilt-weights:s={s}/n={n0}"),
        status: if small { Status::Inconclusive } else { Status::from_check(dev <= 3.0 * m.stderr) },
        value: m.mean,
        threshold: 3.0 * m.stderr,
        detail: "|mean - 1| within 3 stderr".to_string(),
    });
    Ok(out)
}

fn verify_admissible(e: &Experiment) -> Result<Outcome> {
    let c = &e.config;
    let mut out = Outcome::default();
    let samples = out.timed("stationary_samples", || stationary_samples(e, c.trials))?;
    let small = c.trials < MIN_TRIALS;

    // u with tail parameters fitted to the samples, when it has a singular set
    let fitted = match &e.y {
        Some(y) => match u_logdist_fitted(y, &samples, &regularity_radii(&samples, y)) {
            Ok(u) => Ok(u),
            Err(Error::InsufficientMass(m)) => Err(m),
            Err(err) => return Err(err),
        },
        None => Ok(e.u.clone()),
    };

    let mut t = Table::new("verify_admissible.csv", &["t", "tail", "bound", "slack", "pass"]);
    match (&fitted, small) {
        (Ok(u), false) => {
            let t_grid: Vec<f64> = (1..=16).map(|k| 0.5 * k as f64).collect();
            let rep = check_property1(u, &samples, &t_grid)?;
            for r in &rep.rows {
                t.push(row![r.t, r.tail, r.bound, r.slack, r.pass]);
            }
            let worst = rep.rows.iter().map(|r| r.tail - r.bound - r.slack).fold(f64::NEG_INFINITY, f64::max);
            out.criteria.push(Criterion {
                name: "property1:exponential-tail".into(),
                status: Status::from_check(rep.pass),
                value: worst,
                threshold: 0.0,
                detail: format!("eta = {}, A = {}", u.eta_star, u.a_star),
            });
        }
        (Err(m), _) => out.criteria.push(Criterion {
            name: "property1:exponential-tail".into(),
            status: Status::Inconclusive,
            value: f64::NAN,
            threshold: 0.0,
            detail: format!("regularity fit failed: {m}"),
        }),
        (Ok(_), true) => out.criteria.push(Criterion {
            name: "property1:exponential-tail".into(),
            status: Status::Inconclusive,
            value: f64::NAN,
            threshold: 0.0,
            detail: small_sample_detail(c.trials),
        }),
    }

    let u = fitted.as_ref().unwrap_or(&e.u);
    let finite: Vec<&ProjPoint> = samples.iter().filter(|x| u.eval(x).is_finite()).collect();
    let mut pairs: Vec<(ProjPoint, ProjPoint)> = finite.chunks_exact(2).map(|p| (p[0].clone(), p[1].clone())).collect();
    if c.dimension == 2 {
        pairs.extend(
            finite
                .iter()
                .map(|x| (ProjPoint::clone(x), ProjPoint::from_angle(x.angle() + 1e-4)))
                .filter(|(_, xp)| u.eval(xp).is_finite()),
        );
    }
    let p2 = check_property2(u, &pairs)?;
    out.criteria.push(Criterion {
        name: "property2:weighted-holder".into(),
        status: Status::from_check(p2.pass),
        value: p2.max_ratio,
        threshold: 1.0,
        detail: format!("{} pairs", p2.pairs),
    });

    let (mut sum_err, mut support_ok, mut max_active) = (0.0f64, true, 0usize);
    for x in &samples {
        let v = u.eval(x);
        let ExtReal::Finite(uv) = v else { continue };
        let centre = (-uv).floor() as i64;
        let mut sum = 0.0;
        let mut active = 0;
        for k in centre - 3..=centre + 3 {
            let b = partition(u, k).eval(x);
            if b != 0.0 {
                active += 1;
                support_ok &= (uv + k as f64).abs() < 1.0;
            }
            sum += b;
        }
        support_ok &= active_bumps(v).len() == active;
        sum_err = sum_err.max((sum - 1.0).abs());
        max_active = max_active.max(active);
    }
    out.criteria.push(Criterion {
        name: "partition:sum-to-one".into(),
        status: Status::from_check(sum_err <= 1e-12),
        value: sum_err,
        threshold: 1e-12,
        detail: format!("{} samples", samples.len()),
    });
    out.criteria.push(Criterion {
        name: "partition:support".into(),
        status: Status::from_check(support_ok),
        value: f64::from(u8::from(support_ok)),
        threshold: 1.0,
        detail: "chi_k(x) != 0 only where |u(x) + k| < 1".into(),
    });
    out.criteria.push(Criterion {
        name: "partition:two-bump".into(),
        status: Status::from_check(max_active <= 2),
        value: max_active as f64,
        threshold: 2.0,
        detail: "at most two active bumps per point".into(),
    });
    out.tables.push(t);
    Ok(out)
}

fn verify_kernel(e: &Experiment) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut deltas = e.config.delta_list.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let rows = out.timed("kernel_sweep", || kernel_sweep(&deltas))?;
    let moment = theta_abs_moment();
    let mut t = Table::new(
        "verify_kernel.csv",
        &[
            "delta",
            "mass",
            "ft_outside_band",
            "tail_over_delta2",
            "conv_over_delta2",
            "bracket_ok",
            "l1_minus",
            "l1_plus",
        ],
    );
    for r in &rows {
        t.push(row![
            r.delta,
            r.mass,
            r.ft_outside_band,
            r.tail_over_delta2,
            r.conv_over_delta2,
            r.bracket_ok,
            r.l1_minus,
            r.l1_plus
        ]);
    }
    out.tables.push(t);

    let max = |f: &dyn Fn(&KernelCheckRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let mass_err = max(&|r| (r.mass - 1.0).abs());
    let ft = max(&|r| r.ft_outside_band);
    let tail = max(&|r| r.tail_over_delta2);
    let conv = max(&|r| r.conv_over_delta2);
    let conv_bound = moment * (1.0 + 1e-3);
    let decreasing = rows.windows(2).all(|w| w[1].l1_minus < w[0].l1_minus && w[1].l1_plus < w[0].l1_plus);
    let mut push = |name: &str, ok: bool, value: f64, threshold: f64, detail: &str| {
        out.criteria.push(Criterion {
            name: name.into(),
            status: Status::from_check(ok),
            value,
            threshold,
            detail: detail.into(),
        })
    };
    push("kernel:unit-mass", mass_err <= 1e-6, mass_err, 1e-6, "max |int theta_delta - 1|");
    push("kernel:ft-support", ft == 0.0, ft, 0.0, "max |theta_delta_hat| outside [-1/delta^2, 1/delta^2]");
    push("kernel:tail-bound", tail <= TAIL_CONSTANT, tail, TAIL_CONSTANT, "max tail / delta^2");
    push(
        "kernel:convolution-bound",
        conv <= conv_bound,
        conv,
        conv_bound,
        "max sup |psi * theta_delta - psi| / delta^2, Lip(psi) = 1",
    );
    let bracketed = rows.iter().all(|r| r.bracket_ok);
    push(
        "kernel:bracketing",
        bracketed,
        f64::from(u8::from(bracketed)),
        1.0,
        "psi_minus <= psi <= psi_plus on every node",
    );
    push(
        "kernel:l1-decreasing",
        decreasing,
        f64::from(u8::from(decreasing)),
        1.0,
        "L1 errors of psi_minus and psi_plus decrease as delta shrinks",
    );
    Ok(out)
}
