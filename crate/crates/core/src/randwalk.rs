//! Monte Carlo engine for the random walk `S_n = g_n ... g_1`.
//!
//! The walk carries a unit vector that is renormalised after every step; the
//! stretching factors are multiplied into a running scale that is folded into
//! the logarithm whenever it leaves `[1e-100, 1e100]`. By the cocycle relation
//! the accumulated logarithm is exactly `sigma(S_n, x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::projgeom::{apply_row_major, norm2, DualProjPoint, GroupElement, ProjPoint};
use crate::rng::{par_map_trials, trial_rng};
use crate::stats::{self, LinearFit};

const SCALE_FLUSH_HI: f64 = 1e100;
const SCALE_FLUSH_LO: f64 = 1e-100;

/// A finitely supported probability measure on `GL_d(R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    dim: usize,
    atoms: Vec<(GroupElement, f64)>,
    cumulative: Vec<f64>,
}

impl MeasureSpec {
    pub fn new(atoms: Vec<(GroupElement, f64)>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::InvalidMeasure("no atoms".into()));
        };
        let dim = first.0.dim();
        if let Some((g, _)) = atoms.iter().find(|(g, _)| g.dim() != dim) {
            return Err(Error::Dimension(format!("atoms of dimension {dim} and {} mixed", g.dim())));
        }
        if let Some((_, p)) = atoms.iter().find(|(_, p)| !(*p > 0.0)) {
            return Err(Error::InvalidMeasure(format!("non-positive weight {p}")));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(MeasureSpec { dim, atoms, cumulative })
    }

    /// Equal weights on the given matrices.
    pub fn uniform(elements: Vec<GroupElement>) -> Result<Self> {
        let p = 1.0 / elements.len().max(1) as f64;
        Self::new(elements.into_iter().map(|g| (g, p)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(GroupElement, f64)] {
        &self.atoms
    }

    /// `max_j log N(g_j)`, a deterministic bound on `|sigma(g, x)|` per step.
    pub fn max_log_norm_n(&self) -> f64 {
        self.atoms.iter().map(|(g, _)| g.norm_n().ln()).fold(0.0, f64::max)
    }

    /// Atom index for a uniform draw in `[0, 1)`.
    #[inline]
    pub fn index_for(&self, u: f64) -> usize {
        self.cumulative.iter().position(|c| u < *c).unwrap_or(self.atoms.len() - 1)
    }

    #[inline]
    fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        self.index_for(rng.random::<f64>())
    }
}

/// Outcome of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkRecord {
    pub n: usize,
    pub sigma: f64,
    pub x_end: ProjPoint,
    pub seed: u64,
}

/// Mutable state of a running walk.
pub(crate) struct WalkState {
    pub v: Vec<f64>,
    w: Vec<f64>,
    log_acc: f64,
    scale: f64,
}

impl WalkState {
    pub fn new(x0: &ProjPoint) -> Self {
        WalkState { v: x0.rep().to_vec(), w: vec![0.0; x0.dim()], log_acc: 0.0, scale: 1.0 }
    }

    /// Applies `g` and returns the stretching factor `|g v|`.
    #[inline]
    pub fn step(&mut self, g: &GroupElement) -> f64 {
        apply_row_major(g.dim(), g.entries(), &self.v, &mut self.w);
        let nr = norm2(&self.w);
        for (a, b) in self.v.iter_mut().zip(&self.w) {
            *a = b / nr;
        }
        self.scale *= nr;
        if !(SCALE_FLUSH_LO..=SCALE_FLUSH_HI).contains(&self.scale) {
            self.log_acc += self.scale.ln();
            self.scale = 1.0;
        }
        nr
    }

    pub fn sigma(&self) -> f64 {
        self.log_acc + self.scale.ln()
    }
}

fn walk_into<R: Rng>(mu: &MeasureSpec, x0: &ProjPoint, n: usize, rng: &mut R) -> WalkState {
    let mut st = WalkState::new(x0);
    for _ in 0..n {
        let j = mu.sample_index(rng);
        st.step(&mu.atoms[j].0);
    }
    st
}

fn check_dim(mu: &MeasureSpec, x0: &ProjPoint) -> Result<()> {
    if mu.dim() != x0.dim() {
        return Err(Error::Dimension(format!(
            "measure acts on R^{} but the starting point lives in R^{}",
            mu.dim(),
            x0.dim()
        )));
    }
    Ok(())
}

/// Simulates one trajectory of length `n` on the stream `(seed, 0)`.
pub fn run_walk(mu: &MeasureSpec, x0: &ProjPoint, n: usize, seed: u64) -> Result<WalkRecord> {
    check_dim(mu, x0)?;
    let mut rng = trial_rng(seed, 0);
    let st = walk_into(mu, x0, n, &mut rng);
    Ok(WalkRecord { n, sigma: st.sigma(), x_end: ProjPoint::new(&st.v)?, seed })
}

/// Independent trajectories of a common length; trial `i` uses stream `(seed, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkEnsemble {
    pub n: usize,
    pub seed: u64,
    dim: usize,
    sigma: Vec<f64>,
    x_end: Vec<f64>,
}

impl WalkEnsemble {
    pub fn simulate(mu: &MeasureSpec, x0: &ProjPoint, n: usize, trials: usize, seed: u64) -> Result<Self> {
        check_dim(mu, x0)?;
        let d = mu.dim();
        let rows = par_map_trials(trials, |i| {
            let mut rng = trial_rng(seed, i);
            let st = walk_into(mu, x0, n, &mut rng);
            (st.sigma(), st.v)
        });
        let mut sigma = Vec::with_capacity(trials);
        let mut x_end = Vec::with_capacity(trials * d);
        for (s, v) in rows {
            sigma.push(s);
            x_end.extend_from_slice(&v);
        }
        Ok(WalkEnsemble { n, seed, dim: d, sigma, x_end })
    }

    pub fn trials(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    /// Unit representative of `S_n x` for trial `i` (not sign-canonicalised).
    pub fn end_vector(&self, i: usize) -> &[f64] {
        &self.x_end[i * self.dim..(i + 1) * self.dim]
    }

    pub fn end_point(&self, i: usize) -> ProjPoint {
        ProjPoint::new(self.end_vector(i)).expect("unit vector")
    }

    pub fn record(&self, i: usize) -> WalkRecord {
        WalkRecord { n: self.n, sigma: self.sigma[i], x_end: self.end_point(i), seed: self.seed }
    }
}

/// Estimates of the Lyapunov exponent and the CLT variance.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub gamma_hat: f64,
    pub rho2_hat: f64,
    pub stderr_gamma: f64,
    pub stderr_rho2: f64,
    pub trials: usize,
    pub horizon: usize,
    /// Set when `rho2_hat < 1e-12`, the signature of an arithmetic measure.
    pub degenerate: bool,
}

/// Number of batches used for batch-means standard errors.
fn batch_count(trials: usize) -> usize {
    (trials / 10).clamp(2, 100)
}

/// `gamma_hat = mean(sigma_n)/n`, `rho2_hat = var(sigma_n)/n`, standard errors by batch means.
pub fn estimate_gamma_rho2(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n < 100 || trials < 100 {
        return Err(Error::Precondition(format!("need n >= 100 and trials >= 100, got n = {n}, trials = {trials}")));
    }
    let ens = WalkEnsemble::simulate(mu, x0, n, trials, seed)?;
    Ok(lyapunov_from_sigmas(ens.sigmas(), n))
}

/// The estimator of [`estimate_gamma_rho2`] applied to precomputed `sigma(S_n, x)` values.
pub fn lyapunov_from_sigmas(sigmas: &[f64], n: usize) -> LyapunovEstimate {
    let nf = n as f64;
    let (mean, var) = stats::mean_var(sigmas);
    let b = batch_count(sigmas.len());
    let gam = stats::batch_values(sigmas, b, |c| stats::mean_var(c).0 / nf);
    let rho = stats::batch_values(sigmas, b, |c| stats::mean_var(c).1 / nf);
    let rho2_hat = var / nf;
    LyapunovEstimate {
        gamma_hat: mean / nf,
        rho2_hat,
        stderr_gamma: stats::batch_stderr(&gam),
        stderr_rho2: stats::batch_stderr(&rho),
        trials: sigmas.len(),
        horizon: n,
        degenerate: rho2_hat < 1e-12,
    }
}

/// Like [`estimate_gamma_rho2`], but each trial first runs `burnin` steps and only the
/// next `n` increments are recorded, so the start is close to stationary and
/// `E sigma_n = n gamma` up to the mixing error.
pub fn estimate_gamma_rho2_stationary(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    burnin: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n < 100 || trials < 100 {
        return Err(Error::Precondition(format!("need n >= 100 and trials >= 100, got n = {n}, trials = {trials}")));
    }
    check_dim(mu, x0)?;
    let sigmas = par_map_trials(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let warm = walk_into(mu, x0, burnin, &mut rng);
        let start = ProjPoint::new(&warm.v).expect("walk states are unit vectors");
        walk_into(mu, &start, n, &mut rng).sigma()
    });
    Ok(lyapunov_from_sigmas(&sigmas, n))
}

/// Points `x_{burnin+1}, ..., x_{burnin+samples}` of a single trajectory.
pub fn empirical_stationary(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    burnin: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<ProjPoint>> {
    if burnin < 1000 {
        return Err(Error::Precondition(format!("burn-in {burnin} < 1000")));
    }
    check_dim(mu, x0)?;
    let mut rng = trial_rng(seed, 0);
    let mut st = WalkState::new(x0);
    for _ in 0..burnin {
        let j = mu.sample_index(&mut rng);
        st.step(&mu.atoms[j].0);
    }
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let j = mu.sample_index(&mut rng);
        st.step(&mu.atoms[j].0);
        out.push(ProjPoint::new(&st.v)?);
    }
    Ok(out)
}

/// Power-law fit of `nu(B(H_y, r)) ~ c r^eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityFit {
    pub eta_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    /// Empirical masses `nu_hat(B(H_y, r))`, one per radius.
    pub masses: Vec<f64>,
    /// Some radius carried zero mass, or fewer than two radii were usable.
    pub degenerate: bool,
}

/// Least-squares slope of `log nu_hat(B(H_y, r))` against `log r`.
pub fn regularity_fit(nu_samples: &[ProjPoint], y: &DualProjPoint, radii: &[f64]) -> Result<RegularityFit> {
    if radii.len() < 4 {
        return Err(Error::Precondition("need at least 4 radii".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::Precondition("radii must lie in (0, 1]".into()));
    }
    let (rmin, rmax) = radii.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(*r), hi.max(*r)));
    if rmax / rmin < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Precondition("radii must span at least two decades".into()));
    }
    let dists: Vec<f64> = nu_samples.iter().map(|x| crate::projgeom::delta(x, y)).collect();
    let count_in = |r: f64| dists.iter().filter(|d| **d < r).count();
    let largest = count_in(rmax);
    if largest < 50 {
        return Err(Error::InsufficientMass(format!("{largest} samples in the largest ball (need 50)")));
    }
    let total = nu_samples.len() as f64;
    let masses: Vec<f64> = radii.iter().map(|r| count_in(*r) as f64 / total).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        radii.iter().zip(&masses).filter(|(_, m)| **m > 0.0).map(|(r, m)| (r.ln(), m.ln())).unzip();
    let mut degenerate = lx.len() < radii.len();
    let fit = if lx.len() >= 2 { stats::linear_fit(&lx, &ly) } else { None };
    let (eta_hat, c_hat, r_squared) = match fit {
        Some(f) => (f.slope, f.intercept.exp(), f.r_squared),
        None => {
            degenerate = true;
            (f64::NAN, f64::NAN, f64::NAN)
        }
    };
    Ok(RegularityFit { eta_hat, c_hat, r_squared, masses, degenerate })
}

/// One row of a deviation-probability table.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbRow {
    pub n: usize,
    pub hits: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// 95% Wilson interval; for zero hits the lower end is 0 and the upper end
    /// is the exact one-sided 99% bound.
    pub lo: f64,
    pub hi: f64,
}

impl ProbRow {
    pub(crate) fn new(n: usize, hits: u64, trials: u64) -> Self {
        let (lo, hi) = if hits == 0 {
            (0.0, stats::zero_count_upper(trials, 0.99))
        } else {
            stats::wilson_interval(hits, trials, stats::Z_95)
        };
        ProbRow { n, hits, trials, p_hat: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 }, lo, hi }
    }
}

/// Runs each trial once up to `max(n_list)` and hands the state at every
/// checkpoint to `observe(checkpoint_index, sigma, direction)`.
pub(crate) fn checkpoint_walks<T, F>(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    observe: F,
) -> Vec<Vec<T>>
where
    T: Send,
    F: Fn(usize, f64, &[f64]) -> T + Sync + Send,
{
    let mut order: Vec<usize> = (0..n_list.len()).collect();
    order.sort_by_key(|k| n_list[*k]);
    par_map_trials(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let mut st = WalkState::new(x0);
        let mut done = 0;
        let mut out: Vec<Option<T>> = (0..n_list.len()).map(|_| None).collect();
        for &k in &order {
            while done < n_list[k] {
                let j = mu.sample_index(&mut rng);
                st.step(&mu.atoms[j].0);
                done += 1;
            }
            out[k] = Some(observe(k, st.sigma(), &st.v));
        }
        out.into_iter().map(|o| o.expect("every checkpoint visited")).collect()
    })
}

/// Fraction of trials with `|sigma(S_n, x) - n gamma| >= n epsilon`, for each `n`.
pub fn ldt_probe(
    mu: &MeasureSpec,
    x0: &ProjPoint,
    gamma: f64,
    epsilon: f64,
    n_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbRow>> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must be positive")));
    }
    check_dim(mu, x0)?;
    let hits = checkpoint_walks(mu, x0, n_list, trials, seed, |k, sigma, _| {
        let n = n_list[k] as f64;
        (sigma - n * gamma).abs() >= n * epsilon
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

/// Fits `log p_hat` against `n` over rows with at least `min_hits` hits.
pub fn fit_decay(rows: &[ProbRow], min_hits: u64) -> Option<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.hits >= min_hits && r.n > 0).map(|r| (r.n as f64, r.p_hat.ln())).unzip();
    stats::linear_fit(&x, &y)
}

/// Growth of the gap between the two top singular values of `S_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProximalityReport {
    pub n_list: Vec<usize>,
    /// `log s_1(S_n) - log s_2(S_n)` along one trajectory.
    pub log_gap: Vec<f64>,
    /// False when the gap fails to grow, which suggests a non-proximal measure.
    pub growing: bool,
}

/// Tracks `log s_1 - log s_2` of a long product by the QR method on a
/// two-frame, which stays well conditioned however large the gap becomes.
pub fn proximality_diagnostic(mu: &MeasureSpec, n_list: &[usize], seed: u64) -> Result<ProximalityReport> {
    let d = mu.dim();
    if d < 2 {
        return Err(Error::Dimension("need d >= 2".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let mut q1 = vec![0.0; d];
    let mut q2 = vec![0.0; d];
    q1[0] = 1.0;
    q2[1] = 1.0;
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut log_r = [0.0f64; 2];
    let mut sorted = n_list.to_vec();
    sorted.sort_unstable();
    let mut done = 0;
    let mut gaps = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        while done < n {
            let g = &mu.atoms[mu.sample_index(&mut rng)].0;
            g.apply(&q1, &mut a);
            g.apply(&q2, &mut b);
            let r11 = norm2(&a);
            a.iter_mut().for_each(|x| *x /= r11);
            let r12 = crate::projgeom::dot(&a, &b);
            b.iter_mut().zip(&a).for_each(|(x, y)| *x -= r12 * y);
            let r22 = norm2(&b);
            b.iter_mut().for_each(|x| *x /= r22);
            log_r[0] += r11.ln();
            log_r[1] += r22.ln();
            std::mem::swap(&mut q1, &mut a);
            std::mem::swap(&mut q2, &mut b);
            done += 1;
        }
        gaps.push(log_r[0] - log_r[1]);
    }
    let growing = gaps.len() >= 2 && gaps.windows(2).all(|w| w[1] > w[0]) && gaps[gaps.len() - 1] > 1.0;
    Ok(ProximalityReport { n_list: sorted, log_gap: gaps, growing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_atom() -> MeasureSpec {
        let a = GroupElement::diag(&[2.0, 0.5]).unwrap();
        let b = GroupElement::rotation(std::f64::consts::FRAC_PI_4).mul(&a).unwrap();
        MeasureSpec::uniform(vec![a, b]).unwrap()
    }

    fn scalar() -> MeasureSpec {
        MeasureSpec::uniform(vec![GroupElement::scalar(2, 2.0).unwrap()]).unwrap()
    }

    #[test]
    fn measure_validation() {
        let g = GroupElement::identity(2);
        assert!(MeasureSpec::new(vec![]).is_err());
        assert!(MeasureSpec::new(vec![(g.clone(), 0.5)]).is_err());
        assert!(MeasureSpec::new(vec![(g.clone(), 0.5), (GroupElement::identity(3), 0.5)]).is_err());
        assert!(MeasureSpec::new(vec![(g.clone(), 1.0), (g.clone(), 0.0)]).is_err());
        assert!(MeasureSpec::new(vec![(g, 1.0)]).is_ok());
    }

    #[test]
    fn walk_of_length_zero() {
        let x0 = ProjPoint::new(&[0.3, 0.7]).unwrap();
        let rec = run_walk(&two_atom(), &x0, 0, 1).unwrap();
        assert_eq!(rec.sigma, 0.0);
        assert_eq!(rec.x_end, x0);
    }

    #[test]
    fn scalar_walk() {
        let rec = run_walk(&scalar(), &ProjPoint::basis(2, 0), 10, 3).unwrap();
        assert_abs_diff_eq!(rec.sigma, 10.0 * 2f64.ln(), epsilon = 1e-13);
        let long = run_walk(&scalar(), &ProjPoint::basis(2, 0), 5000, 3).unwrap();
        assert_abs_diff_eq!(long.sigma / 5000.0, 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn walk_is_deterministic() {
        let x0 = ProjPoint::basis(2, 0);
        assert_eq!(run_walk(&two_atom(), &x0, 500, 9).unwrap(), run_walk(&two_atom(), &x0, 500, 9).unwrap());
    }

    #[test]
    fn scalar_estimate_is_degenerate() {
        let est = estimate_gamma_rho2(&scalar(), &ProjPoint::basis(2, 0), 100, 100, 1).unwrap();
        assert_abs_diff_eq!(est.gamma_hat, 2f64.ln(), epsilon = 1e-14);
        assert!(est.rho2_hat < 1e-12);
        assert!(est.degenerate);
        assert!(estimate_gamma_rho2(&scalar(), &ProjPoint::basis(2, 0), 99, 100, 1).is_err());
    }

    #[test]
    fn stationary_estimate() {
        let x0 = ProjPoint::basis(2, 0);
        let est = estimate_gamma_rho2_stationary(&scalar(), &x0, 50, 100, 100, 1).unwrap();
        assert_abs_diff_eq!(est.gamma_hat, 2f64.ln(), epsilon = 1e-14);
        assert!(est.degenerate);
        assert!(estimate_gamma_rho2_stationary(&scalar(), &x0, 50, 100, 99, 1).is_err());
        // burnin = 0 reproduces the plain estimator on the same streams
        let mu =
            MeasureSpec::uniform(vec![GroupElement::diag(&[2.0, 0.5]).unwrap(), GroupElement::rotation(0.7)]).unwrap();
        let x0 = ProjPoint::from_angle(0.3);
        let a = estimate_gamma_rho2_stationary(&mu, &x0, 0, 120, 150, 4).unwrap();
        let b = estimate_gamma_rho2(&mu, &x0, 120, 150, 4).unwrap();
        assert_abs_diff_eq!(a.gamma_hat, b.gamma_hat, epsilon = 1e-12);
        assert_abs_diff_eq!(a.rho2_hat, b.rho2_hat, epsilon = 1e-10);
    }

    #[test]
    fn rotations_do_not_stretch() {
        let mu = MeasureSpec::uniform(vec![GroupElement::rotation(0.3), GroupElement::rotation(-1.1)]).unwrap();
        let est = estimate_gamma_rho2(&mu, &ProjPoint::basis(2, 0), 200, 200, 5).unwrap();
        assert!(est.gamma_hat.abs() <= 1e-10);
        assert!(est.rho2_hat <= 1e-10);
    }

    #[test]
    fn huge_epsilon_never_deviates() {
        let mu = two_atom();
        let eps = mu.max_log_norm_n() * 2.0 + 1.0;
        let rows = ldt_probe(&mu, &ProjPoint::basis(2, 0), 0.0, eps, &[1, 5, 20], 500, 2).unwrap();
        for r in rows {
            assert_eq!(r.hits, 0);
            assert!(r.hi > 0.0 && r.hi < 0.01);
        }
        assert!(ldt_probe(&mu, &ProjPoint::basis(2, 0), 0.0, 0.0, &[1], 5, 2).is_err());
    }

    #[test]
    fn regularity_errors_and_degeneracy() {
        let y = DualProjPoint::basis(2, 1);
        let radii = [0.001, 0.01, 0.1, 1.0];
        assert!(matches!(regularity_fit(&[], &y, &radii), Err(Error::InsufficientMass(_))));
        let pts = vec![ProjPoint::from_angle(0.3); 100];
        let fit = regularity_fit(&pts, &y, &radii).unwrap();
        assert!(fit.degenerate);
        assert!(regularity_fit(&pts, &y, &[0.1, 0.2, 0.3, 0.4]).is_err());
    }

    #[test]
    fn proximality_gap_grows_for_hyperbolic_measure() {
        let rep = proximality_diagnostic(&two_atom(), &[10, 20, 40, 80], 4).unwrap();
        assert!(rep.growing, "{:?}", rep.log_gap);
        let rot = MeasureSpec::uniform(vec![GroupElement::rotation(0.4)]).unwrap();
        let rep = proximality_diagnostic(&rot, &[10, 20, 40], 4).unwrap();
        assert!(!rep.growing);
    }
}
