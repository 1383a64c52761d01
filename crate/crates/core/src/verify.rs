//! Numerical checks of the monotonicity results, the uniform-ball
//! counterexample, and an empirical power simulator.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, Executor};
use crate::gauss_measure::{GaussianShiftQuery, MeasureEngine, MeasureEstimate};
use crate::majorization::{muirhead_chain, schur2_compare};
use crate::means::{power_mean_abs, Schur2Kind, SchurCharacter};
use crate::sets::SetSpec;
use crate::vector::RealVector;

/// Slack (in combined error bounds) allowed before a comparison counts as a
/// violation.
pub const SLACK: f64 = 3.0;
/// Gap (in combined error bounds) required to call a difference strict.
pub const STRICT_GAP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyOptions {
    /// Relative accuracy requested from each measure evaluation.
    pub target: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { target: 1e-8, seed: 0 }
    }
}

fn measure_at(engine: &MeasureEngine<'_>, set: &SetSpec, theta: &RealVector, opts: &VerifyOptions) -> Result<MeasureEstimate> {
    let q = GaussianShiftQuery::new(set.clone(), theta.clone())?.with_seed(opts.seed);
    let target = if engine.choose_method(&q).is_monte_carlo() { opts.target.max(1e-2) } else { opts.target };
    engine.measure(&q.with_target(target)?)
}

/// Which way a measure must move as the shift becomes less spread in the
/// Schur² order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Expectation {
    /// Schur²-convex sets: the measure grows toward less spread shifts.
    Increases,
    /// Schur²-concave sets: the measure shrinks toward less spread shifts.
    Decreases,
    /// Euclidean balls and their complements.
    Constant,
}

fn expectation(c: SchurCharacter) -> Result<Expectation> {
    if c.spherical {
        return Ok(Expectation::Constant);
    }
    match c.value {
        Schur2Kind::Convex => Ok(Expectation::Increases),
        Schur2Kind::Concave => Ok(Expectation::Decreases),
        Schur2Kind::NeitherKnown => Err(Error::invalid("set has no known Schur² character")),
    }
}

/// Signed gap `m_less − m_more` in the expected direction and whether it is
/// within slack.
fn judge(exp: Expectation, m_less: &MeasureEstimate, m_more: &MeasureEstimate) -> (f64, f64, bool) {
    let err = m_less.abs_error + m_more.abs_error;
    let diff = m_less.value - m_more.value;
    match exp {
        Expectation::Increases => (diff, err, diff >= -SLACK * err),
        Expectation::Decreases => (-diff, err, -diff >= -SLACK * err),
        Expectation::Constant => (diff.abs(), err, diff.abs() <= SLACK * err),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairCheck {
    /// The less spread shift (`θ_1² ⪯ θ_2²`).
    pub theta1: RealVector,
    pub theta2: RealVector,
    pub m1: MeasureEstimate,
    pub m2: MeasureEstimate,
    /// Difference in the expected direction (absolute difference for
    /// spherical sets).
    pub gap: f64,
    pub error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonotonicityReport {
    pub set: SetSpec,
    pub expectation: Expectation,
    pub checks: Vec<PairCheck>,
    pub violations: usize,
    pub strict_gap_required: bool,
    pub strict_gap_found: bool,
    pub passed: bool,
}

/// Compares measures at shift pairs `(θ_1, θ_2)` with `θ_1² ⪯ θ_2²`.
pub fn check_schur2_monotonicity(
    engine: &MeasureEngine<'_>,
    set: &SetSpec,
    pairs: &[(RealVector, RealVector)],
    opts: &VerifyOptions,
) -> Result<MonotonicityReport> {
    let exp = expectation(set.classify())?;
    let mut checks = Vec::with_capacity(pairs.len());
    for (t1, t2) in pairs {
        if !schur2_compare(t2, t1)?.majorizes() {
            return Err(Error::invalid("each pair must satisfy theta1^2 <= theta2^2 in the majorization order"));
        }
        let m1 = measure_at(engine, set, t1, opts)?;
        let m2 = measure_at(engine, set, t2, opts)?;
        let (gap, error, ok) = judge(exp, &m1, &m2);
        checks.push(PairCheck { theta1: t1.clone(), theta2: t2.clone(), m1, m2, gap, error, ok });
    }
    let violations = checks.iter().filter(|c| !c.ok).count();
    let strict_gap_required = exp != Expectation::Constant;
    let strict_gap_found = checks.iter().any(|c| c.gap > STRICT_GAP * c.error);
    let passed = violations == 0 && (!strict_gap_required || strict_gap_found);
    Ok(MonotonicityReport { set: set.clone(), expectation: exp, checks, violations, strict_gap_required, strict_gap_found, passed })
}

/// Consecutive pairs `(less spread, more spread)` of shifts whose squares
/// follow a Muirhead chain from `a_sq` down to `b_sq`.
pub fn chain_shift_pairs(a_sq: &RealVector, b_sq: &RealVector) -> Result<Vec<(RealVector, RealVector)>> {
    if a_sq.coords().iter().chain(b_sq.coords()).any(|&v| v < 0.0) {
        return Err(Error::invalid("squared profiles must be nonnegative"));
    }
    let chain = muirhead_chain(a_sq, b_sq)?;
    let roots = |v: &RealVector| RealVector::new(v.coords().iter().map(|x| libm::sqrt(x.max(0.0))).collect());
    chain.windows(2).map(|w| Ok((roots(&w[1])?, roots(&w[0])?))).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationPoint {
    pub t: f64,
    pub estimate: MeasureEstimate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationReport {
    pub set: SetSpec,
    pub radius: f64,
    pub expectation: Expectation,
    pub points: Vec<RotationPoint>,
    pub violations: usize,
    pub passed: bool,
}

/// Measures at shifts `r(cos t, sin t)` along an increasing grid in
/// `[0, π/4]`; moving toward `π/4` makes the shift less spread.
pub fn check_rotation_monotonicity(
    engine: &MeasureEngine<'_>,
    set: &SetSpec,
    r: f64,
    t_grid: &[f64],
    opts: &VerifyOptions,
) -> Result<RotationReport> {
    if set.dim != 2 {
        return Err(Error::invalid("rotation checks need k = 2"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|&t| !(0.0..=PI / 4.0 + 1e-15).contains(&t)) {
        return Err(Error::invalid("t grid must increase within [0, pi/4]"));
    }
    let exp = expectation(set.classify())?;
    let points = t_grid
        .iter()
        .map(|&t| {
            let (s, c) = libm::sincos(t);
            let theta = RealVector::new(alloc::vec![r * c, r * s])?;
            Ok(RotationPoint { t, estimate: measure_at(engine, set, &theta, opts)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = points.windows(2).filter(|w| !judge(exp, &w[1].estimate, &w[0].estimate).2).count();
    Ok(RotationReport { set: set.clone(), radius: r, expectation: exp, points, violations, passed: violations == 0 })
}

/// The uniform-ball counterexample: `X` uniform on the Euclidean ball
/// `B(R)`, `A` the cube `[−1, 1]^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleConfig {
    pub k: usize,
    pub epsilon: f64,
}

impl CounterexampleConfig {
    pub fn new(k: usize, epsilon: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("need k >= 2"));
        }
        if !(epsilon > 0.0 && epsilon < libm::sqrt(k as f64) - 1.0) {
            return Err(Error::invalid("need 0 < epsilon < sqrt(k) - 1"));
        }
        Ok(Self { k, epsilon })
    }

    /// `R = (ε² + k − 1)/(2ε)`.
    pub fn big_r(&self) -> f64 {
        (self.epsilon * self.epsilon + self.k as f64 - 1.0) / (2.0 * self.epsilon)
    }

    /// `r = R − 1 − ε`.
    pub fn r(&self) -> f64 {
        self.big_r() - 1.0 - self.epsilon
    }

    /// `x_0 = r·e_1`.
    pub fn x0(&self) -> Result<RealVector> {
        RealVector::axis(self.k, 0, self.r())
    }

    /// `x_1 = (r/√k)·1`.
    pub fn x1(&self) -> Result<RealVector> {
        Ok(RealVector::ones(self.k)?.scaled(self.r() / libm::sqrt(self.k as f64)))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleReport {
    pub config: CounterexampleConfig,
    pub big_r: f64,
    pub r: f64,
    /// `vol(A)/vol(B(R))`.
    pub p_x0_exact: f64,
    pub p_x0: f64,
    pub p_x0_error: f64,
    pub p_x1: f64,
    pub p_x1_error: f64,
    /// `(1 + r)² + k − 1 − R²`, zero when the far corner of `A + x_0` is on
    /// the sphere.
    pub containment_residual: f64,
    /// `√k + r − R`, the distance from the corner of `A + x_1` to `B(R)`.
    pub vertex_gap: f64,
    pub shifts_ordered: bool,
    /// `true` when computed from closed-form areas (`k = 2`).
    pub exact: bool,
    pub samples: u64,
    pub passed: bool,
}

/// `∫∫` over `[0,x]×[0,y]` of the indicator of the disk of radius `rad`,
/// for `x, y ≥ 0`.
fn quadrant_area(x: f64, y: f64, rad: f64) -> f64 {
    let x = x.min(rad);
    let y = y.min(rad);
    if x * x + y * y <= rad * rad {
        return x * y;
    }
    let h = |u: f64| 0.5 * (u * libm::sqrt((rad * rad - u * u).max(0.0)) + rad * rad * libm::asin((u / rad).clamp(-1.0, 1.0)));
    let u0 = libm::sqrt((rad * rad - y * y).max(0.0)).min(x);
    y * u0 + h(x) - h(u0)
}

/// Area of `[x0, x1] × [y0, y1]` inside the disk of radius `rad`.
pub fn rect_disk_area(x0: f64, x1: f64, y0: f64, y1: f64, rad: f64) -> f64 {
    let g = |x: f64, y: f64| {
        let s = x.signum() * y.signum();
        s * quadrant_area(x.abs(), y.abs(), rad)
    };
    g(x1, y1) - g(x0, y1) - g(x1, y0) + g(x0, y0)
}

fn ball_volume(k: usize, rad: f64) -> f64 {
    let kf = k as f64;
    libm::exp(0.5 * kf * libm::log(PI) + kf * libm::log(rad) - libm::lgamma(0.5 * kf + 1.0))
}

pub fn run_counterexample(cfg: &CounterexampleConfig, exec: &dyn Executor, samples: u64, seed: u64) -> Result<CounterexampleReport> {
    let cfg = CounterexampleConfig::new(cfg.k, cfg.epsilon)?;
    let k = cfg.k;
    let big_r = cfg.big_r();
    let r = cfg.r();
    let kf = k as f64;
    let p_x0_exact = libm::pow(2.0, kf) / ball_volume(k, big_r);
    let containment_residual = (1.0 + r) * (1.0 + r) + kf - 1.0 - big_r * big_r;
    let vertex_gap = libm::sqrt(kf) + r - big_r;
    let shifts_ordered = schur2_compare(&cfg.x0()?, &cfg.x1()?)?.majorizes();
    let (p_x0, p_x0_error, p_x1, p_x1_error, exact, used) = if k == 2 {
        let disk = PI * big_r * big_r;
        let a0 = rect_disk_area(r - 1.0, r + 1.0, -1.0, 1.0, big_r);
        let m = r / libm::sqrt(2.0);
        let a1 = rect_disk_area(m - 1.0, m + 1.0, m - 1.0, m + 1.0, big_r);
        let rounding = 1e-13;
        (a0 / disk, rounding, a1 / disk, rounding, true, 0)
    } else {
        const CHUNK: usize = 1 << 14;
        let chunks = (samples as usize).div_ceil(CHUNK).max(1);
        let x0 = cfg.x0()?;
        let x1 = cfg.x1()?;
        let out = exec.map(chunks, &|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let mut pt = alloc::vec![0.0; k];
            let (mut h0, mut h1) = (0.0, 0.0);
            for _ in 0..CHUNK {
                let mut n2 = 0.0;
                for v in pt.iter_mut() {
                    *v = rng.sample(StandardNormal);
                    n2 += *v * *v;
                }
                let u: f64 = rng.random();
                let scale = big_r * libm::pow(u, 1.0 / kf) / libm::sqrt(n2);
                let inside = |x: &RealVector| pt.iter().zip(x.coords()).all(|(p, c)| (p * scale - c).abs() <= 1.0);
                h0 += f64::from(u8::from(inside(&x0)));
                h1 += f64::from(u8::from(inside(&x1)));
            }
            alloc::vec![h0, h1]
        });
        let n = (chunks * CHUNK) as f64;
        let (h0, h1) = out.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v[0], acc.1 + v[1]));
        let se = |h: f64| 2.0 * libm::sqrt((h / n) * (1.0 - h / n) / n);
        (h0 / n, se(h0), h1 / n, se(h1), false, chunks * CHUNK)
    };
    let gap = p_x0 - p_x1;
    let passed = shifts_ordered
        && vertex_gap > 0.0
        && containment_residual.abs() <= 1e-9 * big_r * big_r
        && gap > STRICT_GAP * (p_x0_error + p_x1_error)
        && (p_x0 - p_x0_exact).abs() <= SLACK * p_x0_error.max(1e-13);
    Ok(CounterexampleReport {
        config: cfg,
        big_r,
        r,
        p_x0_exact,
        p_x0,
        p_x0_error,
        p_x1,
        p_x1_error,
        containment_residual,
        vertex_gap,
        shifts_ordered,
        exact,
        samples: used as u64,
        passed,
    })
}

/// Distribution of the observation noise, scaled to identity covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Population {
    Gaussian,
    /// Independent uniforms on `[−√3, √3]`.
    UniformCube,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalDesign {
    pub n: usize,
    pub p: f64,
    pub c: f64,
    pub population: Population,
    /// Population mean `θ`; its length is the dimension.
    pub theta: RealVector,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmpiricalPower {
    pub rate: f64,
    /// Binomial standard error `√(rate(1 − rate)/replications)`.
    pub stderr: f64,
    pub replications: usize,
}

/// Replications per random stream in [`empirical_power`].
pub const REPLICATION_CHUNK: usize = 64;

/// Rejection frequency of `√n·⟨X̄_n⟩_p > c` over independent samples of
/// size `n`.
pub fn empirical_power(d: &EmpiricalDesign, exec: &dyn Executor) -> Result<EmpiricalPower> {
    if d.n == 0 || d.replications == 0 {
        return Err(Error::invalid("need n >= 1 and at least one replication"));
    }
    let k = d.theta.dim();
    let sqrt_n = libm::sqrt(d.n as f64);
    let root3 = libm::sqrt(3.0);
    let chunks = d.replications.div_ceil(REPLICATION_CHUNK);
    let out = exec.map(chunks, &|c| {
        let mut rng = chunk_rng(d.seed, c as u64);
        let reps = REPLICATION_CHUNK.min(d.replications - c * REPLICATION_CHUNK);
        let mut sum = alloc::vec![0.0; k];
        let mut rejections = 0.0;
        for _ in 0..reps {
            sum.iter_mut().for_each(|s| *s = 0.0);
            for _ in 0..d.n {
                for s in sum.iter_mut() {
                    let e: f64 = match d.population {
                        Population::Gaussian => rng.sample(StandardNormal),
                        Population::UniformCube => root3 * (2.0 * rng.random::<f64>() - 1.0),
                    };
                    *s += e;
                }
            }
            let stat = power_mean_abs(sum.iter().zip(d.theta.coords()).map(|(s, t)| (sqrt_n * t + s / sqrt_n).abs()), d.p);
            if stat > d.c {
                rejections += 1.0;
            }
        }
        alloc::vec![rejections]
    });
    let total: f64 = out.iter().map(|v| v[0]).sum();
    let reps = d.replications as f64;
    let rate = total / reps;
    Ok(EmpiricalPower { rate, stderr: libm::sqrt(rate * (1.0 - rate) / reps), replications: d.replications })
}

/// Classification of a set together with the empirical membership test:
/// how often a random pair `x ∈ S`, `y² ⪯ x²` (or the mirrored pair for
/// concave sets) breaks the implied closure property.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MembershipReport {
    pub character: SchurCharacter,
    pub trials: usize,
    /// Violations of "x ∈ S, y² ⪯ x² ⇒ y ∈ S" (convexity closure).
    pub convex_violations: usize,
    /// Violations of "y ∈ S, y² ⪯ x² ⇒ x ∈ S" (concavity closure).
    pub concave_violations: usize,
}

impl MembershipReport {
    /// Whether the sampled behaviour is consistent with the verdict.
    pub fn agrees(&self) -> bool {
        match self.character.value {
            _ if self.character.spherical => self.convex_violations == 0 && self.concave_violations == 0,
            Schur2Kind::Convex => self.convex_violations == 0,
            Schur2Kind::Concave => self.concave_violations == 0,
            Schur2Kind::NeitherKnown => self.convex_violations > 0 && self.concave_violations > 0,
        }
    }
}

/// Draws `trials` random pairs `(x, y)` with `y² ⪯ x²` and records
/// membership-closure violations in both directions. `y²` is obtained from
/// `x²` by a random T-transform, so the two points differ in two coordinates.
pub fn membership_test(set: &SetSpec, trials: usize, scale: f64, seed: u64) -> MembershipReport {
    let k = set.dim;
    let mut rng = chunk_rng(seed, 0);
    let (mut cv, mut cc) = (0, 0);
    let mut x = alloc::vec![0.0; k];
    for _ in 0..trials {
        for v in x.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            // occasionally place points on the axes, where (p,q)-balls with
            // q < 0 behave differently
            *v = if rng.random::<f64>() < 0.1 { 0.0 } else { scale * e };
        }
        let i = rng.random_range(0..k);
        let mut j = rng.random_range(0..k);
        if k > 1 {
            while j == i {
                j = rng.random_range(0..k);
            }
        }
        let lam: f64 = rng.random();
        let (a, b) = (x[i] * x[i], x[j] * x[j]);
        let mut y = x.clone();
        let ya = lam * a + (1.0 - lam) * b;
        let yb = lam * b + (1.0 - lam) * a;
        let si = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let sj = if rng.random::<bool>() { 1.0 } else { -1.0 };
        y[i] = si * libm::sqrt(ya);
        if k > 1 {
            y[j] = sj * libm::sqrt(yb);
        }
        let inx = set.shape.contains_slice(&x);
        let iny = set.shape.contains_slice(&y);
        if inx && !iny {
            cv += 1;
        }
        if iny && !inx {
            cc += 1;
        }
    }
    MembershipReport { character: set.classify(), trials, convex_violations: cv, concave_violations: cc }
}
