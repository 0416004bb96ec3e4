//! Geometry of the real projective space and the linear action of `GL_d(R)`.
//!
//! Points of `P^{d-1}` are lines in `R^d`, stored through a unit representative
//! whose first non-negligible coordinate is positive. All quantities below only
//! depend on the line, never on the representative.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const CANONICAL_ZERO: f64 = 1e-14;
const OPNORM_TOL: f64 = 1e-12;
const OPNORM_MAX_ITERS: usize = 10_000;
const INVERSE_TOL: f64 = 1e-10;

/// Extended real number used for values of `log` that may hit the singular set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    NegInf,
    PosInf,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Maps to an IEEE value. Only for reporting; arithmetic should match on the tag.
    pub fn to_f64(&self) -> f64 {
        match *self {
            ExtReal::Finite(v) => v,
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// `log(t)` for `t >= 0`, with `log(0) = -inf` tagged.
    pub fn log_of(t: f64) -> ExtReal {
        if t > 0.0 {
            ExtReal::Finite(t.ln())
        } else {
            ExtReal::NegInf
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

/// An invertible `d x d` real matrix with its inverse and `N(g) = max(|g|, |g^-1|)` cached.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    dim: usize,
    entries: Vec<f64>,
    inv_entries: Vec<f64>,
    norm: f64,
    inv_norm: f64,
}

impl GroupElement {
    /// Builds a group element from row-major entries.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite entry".into()));
        }
        let m = DMatrix::from_row_slice(dim, dim, &entries);
        let inv = m.clone().try_inverse().ok_or_else(|| Error::Singular("LU factorisation failed".into()))?;
        let check = &m * &inv;
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((check[(i, j)] - target).abs());
            }
        }
        if !(worst <= INVERSE_TOL) {
            return Err(Error::Singular(format!("g * g^-1 deviates from the identity by {worst:e}")));
        }
        let mut inv_entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                inv_entries[i * dim + j] = inv[(i, j)];
            }
        }
        let norm = operator_norm(dim, &entries);
        let inv_norm = operator_norm(dim, &inv_entries);
        Ok(GroupElement { dim, entries, inv_entries, norm, inv_norm })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix rows must form a square".into()));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = 1.0;
        }
        Self::new(dim, e).expect("identity is invertible")
    }

    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        let mut e = vec![0.0; dim * dim];
        for i in 0..dim {
            e[i * dim + i] = c;
        }
        Self::new(dim, e)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut e = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            e[i * dim + i] = *v;
        }
        Self::new(dim, e)
    }

    /// Rotation of the plane by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(2, vec![c, -s, s, c]).expect("rotations are invertible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn inv_entries(&self) -> &[f64] {
        &self.inv_entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Operator norm `|g|`.
    pub fn opnorm(&self) -> f64 {
        self.norm
    }

    pub fn inv_opnorm(&self) -> f64 {
        self.inv_norm
    }

    /// `N(g) = max(|g|, |g^-1|)`.
    pub fn norm_n(&self) -> f64 {
        self.norm.max(self.inv_norm)
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!("cannot multiply {0}x{0} by {1}x{1}", self.dim, other.dim)));
        }
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                for j in 0..d {
                    out[i * d + j] += a * other.entries[k * d + j];
                }
            }
        }
        GroupElement::new(d, out)
    }

    /// `out = g v`.
    #[inline]
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        apply_row_major(self.dim, &self.entries, v, out);
    }

    /// `f o g` for a covector `f`, i.e. `out = g^T f`.
    pub fn apply_transpose(&self, f: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (j, o) in out.iter_mut().enumerate().take(d) {
            *o = (0..d).map(|i| self.entries[i * d + j] * f[i]).sum();
        }
    }
}

#[inline]
pub(crate) fn apply_row_major(d: usize, m: &[f64], v: &[f64], out: &mut [f64]) {
    if d == 2 {
        out[0] = m[0] * v[0] + m[1] * v[1];
        out[1] = m[2] * v[0] + m[3] * v[1];
        return;
    }
    for i in 0..d {
        let row = &m[i * d..(i + 1) * d];
        out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

/// Largest singular value by power iteration on `g^T g`.
fn operator_norm(d: usize, m: &[f64]) -> f64 {
    // generic start vector, not aligned with any coordinate subspace
    let mut v: Vec<f64> = (0..d).map(|k| 1.0 + ((k as f64 + 1.0) * 0.618_033_988_749_895).fract()).collect();
    let mut gv = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut prev = 0.0;
    for _ in 0..OPNORM_MAX_ITERS {
        let vn = norm2(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        apply_row_major(d, m, &v, &mut gv);
        // w = g^T g v
        for j in 0..d {
            w[j] = (0..d).map(|i| m[i * d + j] * gv[i]).sum();
        }
        let rayleigh = dot(&v, &w);
        if (rayleigh - prev).abs() <= OPNORM_TOL * rayleigh.abs() {
            return rayleigh.sqrt();
        }
        prev = rayleigh;
        std::mem::swap(&mut v, &mut w);
        if norm2(&v) == 0.0 {
            return 0.0;
        }
    }
    prev.sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn canonical_unit(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Dimension("empty vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("non-finite coordinate".into()));
    }
    let n = norm2(v);
    if n == 0.0 {
        return Err(Error::Precondition("zero vector does not span a line".into()));
    }
    let mut rep: Vec<f64> = v.iter().map(|x| x / n).collect();
    if let Some(first) = rep.iter().find(|x| x.abs() > CANONICAL_ZERO) {
        if *first < 0.0 {
            rep.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(rep)
}

fn cmp_reps(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// A point `[v]` of `P^{d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjPoint {
    rep: Vec<f64>,
}

impl ProjPoint {
    pub fn new(v: &[f64]) -> Result<Self> {
        Ok(ProjPoint { rep: canonical_unit(v)? })
    }

    /// Point of `P^1` at angle `theta` (the line through `(cos theta, sin theta)`).
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        ProjPoint::new(&[c, s]).expect("unit vector")
    }

    /// Canonical basis line `[e_i]` in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        ProjPoint { rep: v }
    }

    pub fn rep(&self) -> &[f64] {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// Angle in `[0, pi)` of a point of `P^1`.
    pub fn angle(&self) -> f64 {
        let a = self.rep[1].atan2(self.rep[0]);
        let a = a.rem_euclid(std::f64::consts::PI);
        if a >= std::f64::consts::PI {
            0.0
        } else {
            a
        }
    }
}

impl Eq for ProjPoint {}

impl PartialOrd for ProjPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ProjPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_reps(&self.rep, &other.rep)
    }
}

/// A point `[f]` of the dual projective space; it determines the hyperplane `H_y = P(ker f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualProjPoint {
    rep: Vec<f64>,
}

impl DualProjPoint {
    pub fn new(f: &[f64]) -> Result<Self> {
        Ok(DualProjPoint { rep: canonical_unit(f)? })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        DualProjPoint { rep: v }
    }

    pub fn rep(&self) -> &[f64] {
        &self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }
}

impl Eq for DualProjPoint {}

impl PartialOrd for DualProjPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DualProjPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_reps(&self.rep, &other.rep)
    }
}

/// `g . x = [g v]`.
pub fn act(g: &GroupElement, x: &ProjPoint) -> ProjPoint {
    let mut out = vec![0.0; g.dim()];
    g.apply(x.rep(), &mut out);
    ProjPoint::new(&out).expect("invertible matrices map lines to lines")
}

/// Norm cocycle `sigma(g, x) = log(|g v| / |v|)`.
pub fn cocycle(g: &GroupElement, x: &ProjPoint) -> f64 {
    let mut out = vec![0.0; g.dim()];
    g.apply(x.rep(), &mut out);
    norm2(&out).ln()
}

/// Sine of the angle between the lines `x` and `w`.
pub fn proj_distance(x: &ProjPoint, w: &ProjPoint) -> f64 {
    wedge_norm(x.rep(), w.rep()).min(1.0)
}

/// `|a ^ b|` for unit vectors, computed without the `1 - cos^2` cancellation.
fn wedge_norm(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let m = a[i] * b[j] - a[j] * b[i];
            acc += m * m;
        }
    }
    acc.sqrt()
}

/// `delta(x, y) = |<f, v>|` for unit representatives; equals `d(x, H_y)`.
pub fn delta(x: &ProjPoint, y: &DualProjPoint) -> f64 {
    dot(x.rep(), y.rep()).abs().min(1.0)
}

/// `log(|<f, g v>| / (|f| |v|))`, tagged `-inf` when the pairing vanishes.
pub fn log_coefficient(g: &GroupElement, v_dir: &ProjPoint, f_dir: &DualProjPoint) -> ExtReal {
    let mut gv = vec![0.0; g.dim()];
    g.apply(v_dir.rep(), &mut gv);
    ExtReal::log_of(dot(f_dir.rep(), &gv).abs())
}
