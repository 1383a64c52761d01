//! `P(Z ∈ A + θ)` for `Z ~ N(0, σ²I_k)`, and Gaussian smoothing of tabulated
//! functions.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, Executor, Serial};
use crate::quadrature::{gauss_hermite, integrate_pieces, logistic_map, Tolerance};
use crate::sets::{p_ball_budget, section, SetShape, SetSpec};
use crate::special::{chi2_sf, ncx2_cdf_sf, norm_cdf, norm_interval, norm_sf};
use crate::vector::RealVector;

/// How a [`MeasureEstimate`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Method {
    /// Products of one-dimensional normal probabilities (boxes, and the
    /// `p = 1` diamond at `k = 2` after a rotation by `π/4`).
    #[cfg_attr(feature = "serde", serde(rename = "PRODUCT_1D"))]
    Product1d,
    /// Noncentral chi-square law of `‖Z − θ‖²` for Euclidean balls.
    ChiSquare,
    /// Nested adaptive quadrature over `k − 1` coordinates with the last
    /// coordinate integrated exactly over its section.
    SliceQuad,
    /// Polar coordinates about the set's origin at `k = 2`, with the radial
    /// integral in closed form.
    Polar2d,
    McPlain,
    McImportance,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Product1d, Method::ChiSquare, Method::SliceQuad, Method::Polar2d, Method::McPlain, Method::McImportance];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Product1d => "PRODUCT_1D",
            Method::ChiSquare => "CHI_SQUARE",
            Method::SliceQuad => "SLICE_QUAD",
            Method::Polar2d => "POLAR2D",
            Method::McPlain => "MC_PLAIN",
            Method::McImportance => "MC_IMPORTANCE",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Method::McPlain | Method::McImportance)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == up)
            .ok_or_else(|| Error::Parse(alloc::format!("unknown method `{s}`")))
    }
}

/// A probability with its error bound. For Monte Carlo methods `abs_error`
/// is a two-standard-error half width.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub method: Method,
    pub samples_or_nodes: u64,
    /// Set when the requested accuracy was not reached.
    pub flagged: bool,
}

const TINY: f64 = 1e-300;

impl MeasureEstimate {
    fn new(value: f64, abs_error: f64, method: Method, samples_or_nodes: u64, target: f64) -> Self {
        let value = value.clamp(0.0, 1.0);
        let abs_error = abs_error.max(0.0);
        let rel_error = abs_error / value.max(TINY);
        let flagged = rel_error > target && abs_error > 1e-15;
        Self { value, abs_error, rel_error, method, samples_or_nodes, flagged }
    }
}

/// One measure evaluation: the set `A`, the shift `θ`, the scale `σ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianShiftQuery {
    pub set: SetSpec,
    pub shift: RealVector,
    pub sigma: f64,
    /// Defaults to 1e-4 for quadrature and 1e-2 for Monte Carlo.
    pub target_rel_error: Option<f64>,
    pub seed: u64,
    /// Forces a method instead of the automatic choice.
    pub method: Option<Method>,
}

pub const DEFAULT_QUADRATURE_TARGET: f64 = 1e-4;
pub const DEFAULT_MC_TARGET: f64 = 1e-2;

impl GaussianShiftQuery {
    pub fn new(set: SetSpec, shift: RealVector) -> Result<Self> {
        shift.check_dim(set.dim)?;
        Ok(Self { set, shift, sigma: 1.0, target_rel_error: None, seed: 0, method: None })
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive and finite"));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_target(mut self, target: f64) -> Result<Self> {
        if target.is_nan() || target <= 0.0 {
            return Err(Error::invalid("target relative error must be positive"));
        }
        self.target_rel_error = Some(target);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = Some(method);
        self
    }
}

/// The rotation `R^t x` in the plane.
pub fn rotate2(x: &RealVector, t: f64) -> Result<RealVector> {
    x.check_dim(2)?;
    let (s, c) = libm::sincos(t);
    RealVector::new(alloc::vec![x[0] * c - x[1] * s, x[0] * s + x[1] * c])
}

fn rotate_slice(x: &[f64], t: f64) -> [f64; 2] {
    let (s, c) = libm::sincos(t);
    [x[0] * c - x[1] * s, x[0] * s + x[1] * c]
}

/// Box-type sets whose Gaussian measure factorizes over coordinates.
#[derive(Clone, Copy)]
enum ProductForm {
    /// `|y_j| ≤ a` for all `j`, in coordinates rotated by `rotation`.
    AllInside { a: f64, rotation: f64 },
    /// `|y_j| > a` for all `j`.
    AllOutside { a: f64 },
}

fn product_form(shape: &SetShape, k: usize) -> Option<(ProductForm, bool)> {
    let (base, complemented) = shape.base();
    let form = match *base {
        SetShape::Cube { a } => ProductForm::AllInside { a, rotation: 0.0 },
        SetShape::PBall { p, eps } if p == f64::INFINITY => ProductForm::AllInside { a: eps, rotation: 0.0 },
        // ⟨x⟩_{-∞} ≤ ε is the complement of "every |x_j| > ε"
        SetShape::PBall { p, eps } if p == f64::NEG_INFINITY => {
            return Some((ProductForm::AllOutside { a: eps }, !complemented));
        }
        // |x_1| + |x_2| ≤ 2ε is a square of half-side ε√2 turned by π/4
        SetShape::PBall { p, eps } if p == 1.0 && k == 2 => ProductForm::AllInside { a: eps * SQRT_2, rotation: -FRAC_PI_4 },
        _ => return None,
    };
    Some((form, complemented))
}

/// `∏ w_j` and `1 − ∏ w_j` from pairs `(w_j, 1 − w_j)` without cancellation.
fn product_and_complement(pairs: &[(f64, f64)]) -> (f64, f64) {
    let prod: f64 = pairs.iter().map(|p| p.0).product();
    if prod < 0.5 {
        (prod, 1.0 - prod)
    } else {
        let log: f64 = pairs.iter().map(|p| libm::log1p(-p.1)).sum();
        (prod, -libm::expm1(log))
    }
}

fn is_euclidean_ball(shape: &SetShape) -> Option<f64> {
    match *shape.base().0 {
        SetShape::PBall { p: 2.0, eps } => Some(eps),
        SetShape::PqBall { p, q, eps } if p == 2.0 && q == 0.0 => Some(eps),
        _ => None,
    }
}

/// Evaluates [`GaussianShiftQuery`]s, fanning Monte Carlo chunks out over an
/// [`Executor`].
pub struct MeasureEngine<'a> {
    exec: &'a dyn Executor,
    /// Samples per Monte Carlo chunk; each chunk has its own random stream.
    pub mc_chunk: usize,
    /// Chunks evaluated between stopping checks.
    pub mc_batch: usize,
    pub mc_max_samples: u64,
}

static SERIAL: Serial = Serial;

impl Default for MeasureEngine<'static> {
    fn default() -> Self {
        Self::new(&SERIAL)
    }
}

impl<'a> MeasureEngine<'a> {
    pub fn new(exec: &'a dyn Executor) -> Self {
        Self { exec, mc_chunk: 16_384, mc_batch: 16, mc_max_samples: 1 << 24 }
    }

    pub fn executor(&self) -> &'a dyn Executor {
        self.exec
    }

    /// The method the automatic dispatch picks for `q`.
    pub fn choose_method(&self, q: &GaussianShiftQuery) -> Method {
        let shape = q.set.shape.scaled(1.0 / q.sigma);
        let theta: Vec<f64> = q.shift.coords().iter().map(|t| t / q.sigma).collect();
        self.auto_method(&shape, &theta)
    }

    fn auto_method(&self, shape: &SetShape, theta: &[f64]) -> Method {
        let k = theta.len();
        if k == 1 || product_form(shape, k).is_some() {
            return Method::Product1d;
        }
        if is_euclidean_ball(shape).is_some() {
            return Method::ChiSquare;
        }
        if k == 2 {
            return Method::Polar2d;
        }
        if k == 3 && matches!(shape.base().0, SetShape::PBall { .. }) {
            return Method::SliceQuad;
        }
        let (_, d) = nearest_point(shape, theta);
        if chi2_sf(d * d, k as f64) < 1e-6 {
            Method::McImportance
        } else {
            Method::McPlain
        }
    }

    pub fn measure(&self, q: &GaussianShiftQuery) -> Result<MeasureEstimate> {
        q.shift.check_dim(q.set.dim)?;
        if !(q.sigma > 0.0 && q.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive and finite"));
        }
        let shape = q.set.shape.scaled(1.0 / q.sigma);
        let theta: Vec<f64> = q.shift.coords().iter().map(|t| t / q.sigma).collect();
        let k = theta.len();
        let method = match q.method {
            Some(m) => m,
            None => self.auto_method(&shape, &theta),
        };
        let target = q.target_rel_error.unwrap_or(if method.is_monte_carlo() {
            DEFAULT_MC_TARGET
        } else {
            DEFAULT_QUADRATURE_TARGET
        });
        match method {
            Method::Product1d if k == 1 => Ok(line_measure(&shape, theta[0], target)),
            Method::Product1d => {
                let (form, complemented) = product_form(&shape, k)
                    .ok_or_else(|| Error::Unsupported("product form needs a box-type set".into()))?;
                Ok(product_measure(form, complemented, &theta, target))
            }
            Method::ChiSquare => {
                let eps = is_euclidean_ball(&shape)
                    .ok_or_else(|| Error::Unsupported("chi-square method needs a Euclidean ball".into()))?;
                let kf = k as f64;
                let lambda: f64 = theta.iter().map(|t| t * t).sum();
                let (cdf, sf) = ncx2_cdf_sf(kf * eps * eps, kf, lambda);
                let value = if shape.is_complement() { sf } else { cdf };
                Ok(MeasureEstimate::new(value, 1e-13 * value, Method::ChiSquare, 0, target))
            }
            Method::Polar2d => {
                if k != 2 {
                    return Err(Error::Unsupported("polar quadrature needs k = 2".into()));
                }
                Ok(polar_measure(&shape, &theta, target))
            }
            Method::SliceQuad => {
                if k > 4 {
                    return Err(Error::Unsupported("sliced quadrature is limited to k <= 4".into()));
                }
                slice_measure(&shape, &theta, target)
            }
            Method::McPlain => Ok(self.monte_carlo(&shape, &theta, target, q.seed, None)),
            Method::McImportance => {
                let (mu, _) = nearest_point(&shape, &theta);
                Ok(self.monte_carlo(&shape, &theta, target, q.seed, Some(mu)))
            }
        }
    }

    fn monte_carlo(&self, shape: &SetShape, theta: &[f64], target: f64, seed: u64, mu: Option<Vec<f64>>) -> MeasureEstimate {
        let k = theta.len();
        let chunk = self.mc_chunk.max(1);
        let method = if mu.is_some() { Method::McImportance } else { Method::McPlain };
        let mu = mu.unwrap_or_else(|| alloc::vec![0.0; k]);
        let mu2: f64 = mu.iter().map(|m| m * m).sum();
        let work = |c: usize| -> Vec<f64> {
            let mut rng = chunk_rng(seed, c as u64);
            let mut y = alloc::vec![0.0; k];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..chunk {
                let mut dot = 0.0;
                for j in 0..k {
                    let e: f64 = rng.sample(StandardNormal);
                    dot += e * mu[j];
                    y[j] = mu[j] + e - theta[j];
                }
                if shape.contains_slice(&y) {
                    let w = if mu2 == 0.0 { 1.0 } else { libm::exp(-dot - 0.5 * mu2) };
                    s1 += w;
                    s2 += w * w;
                }
            }
            alloc::vec![s1, s2]
        };
        let (mut s1, mut s2, mut n) = (0.0, 0.0, 0u64);
        let mut next = 0usize;
        loop {
            let batch = self.mc_batch.max(1);
            let out = self.exec.map(batch, &|i| work(next + i));
            for r in &out {
                s1 += r[0];
                s2 += r[1];
            }
            next += batch;
            n += (batch * chunk) as u64;
            let nf = n as f64;
            let mean = s1 / nf;
            let var = (s2 / nf - mean * mean).max(0.0);
            let half = if s1 == 0.0 { 3.0 / nf } else { 2.0 * libm::sqrt(var / nf) };
            let done = s1 > 0.0 && half <= target * mean;
            if done || n >= self.mc_max_samples {
                return MeasureEstimate::new(mean, half, method, n, target);
            }
        }
    }
}

/// Probability that `z − θ` lies in the set for `k = 1`, from the sections
/// of the two half-lines.
fn line_measure(shape: &SetShape, theta: f64, target: f64) -> MeasureEstimate {
    let plus = shape.ray_section(&[1.0], theta.abs() + 40.0);
    let minus = shape.ray_section(&[-1.0], theta.abs() + 40.0);
    let mut value = 0.0;
    for (lo, hi) in plus {
        value += norm_interval(lo + theta, hi + theta);
    }
    for (lo, hi) in minus {
        value += norm_interval(-hi + theta, -lo + theta);
    }
    // the origin is counted twice only as a null set
    MeasureEstimate::new(value, 1e-14 * value, Method::Product1d, 0, target)
}

fn product_measure(form: ProductForm, complemented: bool, theta: &[f64], target: f64) -> MeasureEstimate {
    let k = theta.len();
    let (a, shifted, inside) = match form {
        ProductForm::AllInside { a, rotation } => {
            let t = if rotation != 0.0 { rotate_slice(theta, rotation).to_vec() } else { theta.to_vec() };
            (a, t, true)
        }
        ProductForm::AllOutside { a } => (a, theta.to_vec(), false),
    };
    let pairs: Vec<(f64, f64)> = shifted
        .iter()
        .map(|&m| {
            let inn = norm_interval(m - a, m + a);
            let out = norm_cdf(m - a) + norm_sf(m + a);
            if inside {
                (inn, out)
            } else {
                (out, inn)
            }
        })
        .collect();
    let (prod, rest) = product_and_complement(&pairs);
    let value = if complemented { rest } else { prod };
    let err = 1e-14 * k as f64 * value + if prod >= 0.5 && complemented { 0.0 } else { 1e-300 };
    MeasureEstimate::new(value, err, Method::Product1d, 0, target)
}

/// `∫_{ra}^{rb} ρ e^{−(ρ+b)²/2 − d²/2} dρ`.
fn radial_integral(b: f64, d2: f64, ra: f64, rb: f64) -> f64 {
    let wa = ra + b;
    let wb = rb + b;
    let ea = libm::exp(-0.5 * (d2 + wa * wa));
    let eb = if wb.is_finite() { libm::exp(-0.5 * (d2 + wb * wb)) } else { 0.0 };
    let tail = b * libm::sqrt(2.0 * PI) * libm::exp(-0.5 * d2) * norm_interval(wa, wb);
    (ea - eb - tail).max(0.0)
}

fn polar_measure(shape: &SetShape, theta: &[f64], target: f64) -> MeasureEstimate {
    let n2 = theta[0] * theta[0] + theta[1] * theta[1];
    let rmax = libm::sqrt(n2) + 40.0;
    let density = |phi: f64| -> f64 {
        let (s, c) = libm::sincos(phi);
        let v = [c, s];
        let b = theta[0] * c + theta[1] * s;
        let d2 = (n2 - b * b).max(0.0);
        let total: f64 = shape.ray_section(&v, rmax).into_iter().map(|(ra, rb)| radial_integral(b, d2, ra, rb)).sum();
        total / (2.0 * PI)
    };
    let tol = Tolerance::new(TINY, 0.25 * target.min(1e-3)).with_max_intervals(2000);
    let (mut value, mut error, mut evals) = (0.0, 0.0, 0u64);
    let mut converged = true;
    for i in 0..8 {
        let a = i as f64 * FRAC_PI_4;
        let b = a + FRAC_PI_4;
        let r = integrate_pieces(
            |s| {
                let (phi, jac) = logistic_map(a, b, s);
                (density(phi) * jac, 0.0)
            },
            &[-40.0, -8.0, 0.0, 8.0, 40.0],
            tol,
        );
        value += r.value;
        error += r.error;
        evals += r.evaluations as u64;
        converged &= r.converged;
    }
    let mut est = MeasureEstimate::new(value, error, Method::Polar2d, evals, target);
    est.flagged |= !converged && est.rel_error > target;
    est
}

const Z_MAX: f64 = 38.5;

struct Slicer<'s> {
    shape: &'s SetShape,
    theta: &'s [f64],
    tol: Tolerance,
    evals: u64,
}

impl Slicer<'_> {
    /// Range of `x_j` over which the remaining coordinates can still reach
    /// the set, given the fixed prefix.
    fn range(&self, prefix: &[f64]) -> Option<(f64, f64)> {
        let k = self.theta.len();
        match *self.shape {
            SetShape::PBall { p, eps } if p > 0.0 => {
                p_ball_budget(p, eps, k, prefix.iter().map(|v| v.abs())).map(|h| (-h, h))
            }
            SetShape::Cube { a } => {
                if prefix.iter().all(|v| v.abs() <= a) {
                    Some((-a, a))
                } else {
                    None
                }
            }
            _ => Some((f64::NEG_INFINITY, f64::INFINITY)),
        }
    }

    /// Probability of the remaining coordinates given the prefix, with its
    /// error estimate.
    fn level(&mut self, prefix: &mut Vec<f64>) -> (f64, f64) {
        let j = prefix.len();
        let k = self.theta.len();
        let tj = self.theta[j];
        if j == k - 1 {
            self.evals += 1;
            prefix.push(0.0);
            let iv = section(self.shape, prefix, j).unwrap_or_default();
            prefix.pop();
            let v: f64 = iv.into_iter().map(|(lo, hi)| norm_interval(lo + tj, hi + tj)).sum();
            return (v, 0.0);
        }
        let Some((lo, hi)) = self.range(prefix) else {
            return (0.0, 0.0);
        };
        // integrate over z = x + θ_j with a sine map on [zlo, zhi]
        let zlo = (lo + tj).max(-Z_MAX);
        let zhi = (hi + tj).min(Z_MAX);
        if zhi <= zlo {
            return (0.0, 0.0);
        }
        let mid = 0.5 * (zlo + zhi);
        let half = 0.5 * (zhi - zlo);
        let mut pts: Vec<f64> = [tj, 0.0, -2.0, 2.0, -4.0, 4.0, -8.0, 8.0]
            .iter()
            .filter(|&&z| z > zlo && z < zhi)
            .map(|&z| libm::asin(((z - mid) / half).clamp(-1.0, 1.0)))
            .collect();
        pts.push(-core::f64::consts::FRAC_PI_2);
        pts.push(core::f64::consts::FRAC_PI_2);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let tol = self.tol;
        let r = integrate_pieces(
            |u| {
                let (s, c) = libm::sincos(u);
                let z = mid + half * s;
                let w = half * c * crate::special::norm_pdf(z);
                if w == 0.0 {
                    return (0.0, 0.0);
                }
                prefix.push(z - tj);
                let (v, e) = self.level(prefix);
                prefix.pop();
                (w * v, w * e)
            },
            &pts,
            tol,
        );
        (r.value, r.error)
    }
}

fn slice_measure(shape: &SetShape, theta: &[f64], target: f64) -> Result<MeasureEstimate> {
    let (base, complemented) = shape.base();
    if !matches!(base, SetShape::PBall { .. } | SetShape::Cube { .. }) {
        return Err(Error::Unsupported("sliced quadrature needs a p-ball or cube".into()));
    }
    let rel = 0.25 * target.min(1e-3);
    let mut slicer = Slicer { shape: base, theta, tol: Tolerance::new(1e-15, rel).with_max_intervals(200), evals: 0 };
    let (v, e) = slicer.level(&mut Vec::with_capacity(theta.len()));
    let value = if complemented { 1.0 - v } else { v };
    Ok(MeasureEstimate::new(value, e + 1e-15, Method::SliceQuad, slicer.evals, target))
}

/// A point of `A + θ` close to the origin (the point itself, its norm),
/// found from ray scans in several directions and refined by pattern search.
pub fn nearest_point(shape: &SetShape, theta: &[f64]) -> (Vec<f64>, f64) {
    let k = theta.len();
    let member = |y: &[f64]| {
        let x: Vec<f64> = y.iter().zip(theta).map(|(a, b)| a - b).collect();
        shape.contains_slice(&x)
    };
    let zero = alloc::vec![0.0; k];
    if member(&zero) {
        return (zero, 0.0);
    }
    let tn = crate::vector::euclidean_norm(theta);
    let rmax = tn + 40.0;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if tn > 0.0 {
        dirs.push(theta.iter().map(|t| t / tn).collect());
    }
    for i in 0..k {
        for s in [-1.0, 1.0] {
            let mut d = alloc::vec![0.0; k];
            d[i] = s;
            dirs.push(d);
        }
    }
    let patterns = if k <= 6 { 1usize << k } else { 2 };
    for m in 0..patterns {
        let d: Vec<f64> = (0..k).map(|j| if (m >> j) & 1 == 1 { -1.0 } else { 1.0 } / libm::sqrt(k as f64)).collect();
        dirs.push(d);
    }
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = f64::INFINITY;
    const STEPS: usize = 2000;
    for d in &dirs {
        let at = |r: f64| -> Vec<f64> { d.iter().map(|v| v * r).collect() };
        let mut prev = 0.0;
        for i in 1..=STEPS {
            let r = rmax * i as f64 / STEPS as f64;
            if r >= best_norm {
                break;
            }
            if member(&at(r)) {
                let (mut out, mut inn) = (prev, r);
                for _ in 0..60 {
                    let m = 0.5 * (out + inn);
                    if member(&at(m)) {
                        inn = m;
                    } else {
                        out = m;
                    }
                }
                if inn < best_norm {
                    best_norm = inn;
                    best = Some(at(inn));
                }
                break;
            }
            prev = r;
        }
    }
    let Some(mut y) = best else {
        return (theta.to_vec(), tn);
    };
    let mut step = 0.25 * best_norm;
    let norm = |y: &[f64]| crate::vector::euclidean_norm(y);
    while step > 1e-9 * best_norm.max(1.0) {
        let mut improved = false;
        let n0 = norm(&y);
        let mut cands: Vec<Vec<f64>> = Vec::with_capacity(2 * k + 1);
        cands.push(y.iter().map(|v| v * (1.0 - step / n0)).collect());
        for j in 0..k {
            for s in [-1.0, 1.0] {
                let mut c = y.clone();
                c[j] += s * step;
                cands.push(c);
            }
        }
        for c in cands {
            if norm(&c) < n0 && member(&c) {
                y = c;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let n = norm(&y);
    (y, n)
}

/// How a [`Grid`] extends beyond its box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Extension {
    Zero,
    Constant(f64),
    /// Nearest value on the boundary of the box.
    Clamp,
}

/// Values of a function on a regular tensor grid, interpolated multilinearly.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
    values: Vec<f64>,
    extension: Extension,
}

impl Grid {
    /// `values` are stored row-major with the last axis fastest; axis `j` has
    /// `n[j] ≥ 2` equally spaced points from `lo[j]` to `hi[j]`.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>, values: Vec<f64>, extension: Extension) -> Result<Self> {
        let k = lo.len();
        if k == 0 || hi.len() != k || n.len() != k {
            return Err(Error::invalid("grid bounds and sizes must have the same positive length"));
        }
        if n.iter().any(|&m| m < 2) || lo.iter().zip(&hi).any(|(a, b)| a.partial_cmp(b) != Some(core::cmp::Ordering::Less)) {
            return Err(Error::invalid("each grid axis needs at least two points and lo < hi"));
        }
        let total: usize = n.iter().product();
        if values.len() != total {
            return Err(Error::DimensionMismatch { expected: total, found: values.len() });
        }
        Ok(Self { lo, hi, n, values, extension })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>, f: F, extension: Extension) -> Result<Self> {
        let k = lo.len();
        let total: usize = n.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = alloc::vec![0usize; k];
        let mut x = alloc::vec![0.0; k];
        for _ in 0..total {
            for j in 0..k {
                x[j] = lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / (n[j] - 1) as f64;
            }
            values.push(f(&x));
            for j in (0..k).rev() {
                idx[j] += 1;
                if idx[j] < n[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
        Self::new(lo, hi, n, values, extension)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let k = self.dim();
        let mut base = 0usize;
        let mut stride = 1usize;
        let mut cell = alloc::vec![(0usize, 0.0f64); k];
        for j in (0..k).rev() {
            let mut xj = x[j];
            if xj < self.lo[j] || xj > self.hi[j] {
                match self.extension {
                    Extension::Zero => return 0.0,
                    Extension::Constant(c) => return c,
                    Extension::Clamp => xj = xj.clamp(self.lo[j], self.hi[j]),
                }
            }
            let h = (self.hi[j] - self.lo[j]) / (self.n[j] - 1) as f64;
            let pos = ((xj - self.lo[j]) / h).min((self.n[j] - 1) as f64);
            let i = (libm::floor(pos) as usize).min(self.n[j] - 2);
            cell[j] = (stride, pos - i as f64);
            base += i * stride;
            stride *= self.n[j];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << k) {
            let mut w = 1.0;
            let mut off = base;
            for (j, &(s, t)) in cell.iter().enumerate() {
                if (corner >> j) & 1 == 1 {
                    w *= t;
                    off += s;
                } else {
                    w *= 1.0 - t;
                }
            }
            if w != 0.0 {
                acc += w * self.values[off];
            }
        }
        acc
    }
}

/// Result of [`smooth`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothEstimate {
    pub value: f64,
    /// Difference between the last two node counts.
    pub abs_error: f64,
    pub nodes_per_axis: usize,
    pub converged: bool,
}

/// Total tensor nodes allowed per evaluation in [`smooth`].
pub const SMOOTH_NODE_BUDGET: usize = 1 << 22;

/// `E f(σZ + x)` by tensor Gauss–Hermite quadrature, doubling the nodes per
/// axis from 32 up to 512 (or the node budget) until two successive values
/// differ by less than `target`.
pub fn smooth(f: &Grid, sigma: f64, x: &RealVector, target: f64) -> Result<SmoothEstimate> {
    let k = f.dim();
    x.check_dim(k)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma must be positive and finite"));
    }
    let rule = |n: usize| -> f64 {
        let (t, w) = gauss_hermite(n);
        let scale = libm::pow(PI, -0.5 * k as f64);
        let mut idx = alloc::vec![0usize; k];
        let mut y = alloc::vec![0.0; k];
        let mut acc = 0.0;
        let total = libm::pow(n as f64, k as f64) as usize;
        for _ in 0..total {
            let mut wt = scale;
            for j in 0..k {
                y[j] = x[j] + sigma * SQRT_2 * t[idx[j]];
                wt *= w[idx[j]];
            }
            if wt > 0.0 {
                acc += wt * f.eval(&y);
            }
            for j in (0..k).rev() {
                idx[j] += 1;
                if idx[j] < n {
                    break;
                }
                idx[j] = 0;
            }
        }
        acc
    };
    let mut n = 32;
    let mut prev = rule(n);
    loop {
        let next_n = 2 * n;
        if next_n > 512 || libm::pow(next_n as f64, k as f64) > SMOOTH_NODE_BUDGET as f64 {
            return Ok(SmoothEstimate { value: prev, abs_error: f64::NAN, nodes_per_axis: n, converged: false });
        }
        let cur = rule(next_n);
        let diff = (cur - prev).abs();
        n = next_n;
        if diff < target {
            return Ok(SmoothEstimate { value: cur, abs_error: diff, nodes_per_axis: n, converged: true });
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::chi2_cdf;

    fn q(set: &str, k: usize, shift: &[f64]) -> GaussianShiftQuery {
        let spec = SetSpec::new(set.parse().unwrap(), k).unwrap();
        GaussianShiftQuery::new(spec, RealVector::from_slice(shift).unwrap()).unwrap()
    }

    #[test]
    fn cube_at_origin() {
        let e = MeasureEngine::default().measure(&q("cube:a=1", 2, &[0.0, 0.0])).unwrap();
        let one = norm_interval(-1.0, 1.0);
        assert_eq!(e.method, Method::Product1d);
        assert!((e.value - one * one).abs() < 1e-15);
        assert!((e.value - 0.466_065).abs() < 1e-6);
    }

    #[test]
    fn euclidean_ball_matches_chi_square() {
        for k in 1..=6 {
            let e = MeasureEngine::default().measure(&q("pball:p=2,eps=1.3", k, &alloc::vec![0.0; k])).unwrap();
            let exact = chi2_cdf(k as f64 * 1.69, k as f64);
            assert!((e.value - exact).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rotate2_basics() {
        let x = RealVector::from_slice(&[1.0, 0.0]).unwrap();
        let r = rotate2(&x, core::f64::consts::FRAC_PI_2).unwrap();
        assert!(r[0].abs() < 1e-16 && (r[1] - 1.0).abs() < 1e-16);
        assert_eq!(rotate2(&x, 0.0).unwrap(), x);
        assert!(rotate2(&RealVector::zeros(3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn methods_agree_in_the_plane() {
        let engine = MeasureEngine::default();
        for set in ["pball:p=3,eps=1", "pball:p=1,eps=1", "cube:a=0.8", "complement(pball:p=0.5,eps=0.7)"] {
            let base = q(set, 2, &[0.7, -0.4]);
            let polar = engine.measure(&base.clone().with_method(Method::Polar2d).with_target(1e-9).unwrap()).unwrap();
            let slice = engine.measure(&base.clone().with_method(Method::SliceQuad).with_target(1e-9).unwrap());
            if let Ok(slice) = slice {
                assert!((polar.value - slice.value).abs() < 1e-8, "{set}: {} vs {}", polar.value, slice.value);
            }
            let auto = engine.measure(&base).unwrap();
            assert!((polar.value - auto.value).abs() < 1e-7, "{set}: {} vs {}", polar.value, auto.value);
        }
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn smooth_constant_and_indicator() {
        let g = Grid::from_fn(alloc::vec![-5.0], alloc::vec![5.0], alloc::vec![11], |_| 2.5, Extension::Constant(2.5)).unwrap();
        let s = smooth(&g, 0.7, &RealVector::from_slice(&[0.3]).unwrap(), 1e-12).unwrap();
        assert!((s.value - 2.5).abs() < 1e-12);
        let ind = Grid::from_fn(
            alloc::vec![-1.0],
            alloc::vec![1.0],
            alloc::vec![2001],
            |_| 1.0,
            Extension::Zero,
        )
        .unwrap();
        let s = smooth(&ind, 1.0, &RealVector::from_slice(&[0.0]).unwrap(), 1e-3).unwrap();
        assert!((s.value - norm_interval(-1.0, 1.0)).abs() < 2e-2, "{}", s.value);
    }
}
