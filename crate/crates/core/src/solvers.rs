//! Critical values of p-mean tests and the shifts at which they reach a
//! prescribed power.

use crate::error::{Error, Result};
use crate::gauss_measure::{GaussianShiftQuery, MeasureEngine, MeasureEstimate, Method};
use crate::means::p_mean;
use crate::roots::{bisect, brent, Bracket};
use crate::sets::{SetShape, SetSpec};
use crate::special::{chi2_isf, norm_isf};
use crate::vector::RealVector;

/// One p-mean test comparison: dimension, exponent, size `alpha`, target
/// power `beta` and a direction `u` with `⟨u⟩_2 = 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestDesign {
    pub k: usize,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub u: RealVector,
}

impl TestDesign {
    pub fn new(k: usize, p: f64, alpha: f64, beta: f64, u: RealVector) -> Result<Self> {
        u.check_dim(k)?;
        if p.is_nan() {
            return Err(Error::invalid("p is NaN"));
        }
        if !(0.0 < alpha && alpha < beta && beta < 1.0) {
            return Err(Error::invalid("need 0 < alpha < beta < 1"));
        }
        if (p_mean(&u, 2.0) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("direction must satisfy <u>_2 = 1"));
        }
        Ok(Self { k, p, alpha, beta, u })
    }

    /// The same comparison with another exponent.
    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..self.clone() }
    }

    pub fn with_direction(&self, u: RealVector) -> Result<Self> {
        Self::new(self.k, self.p, self.alpha, self.beta, u)
    }
}

/// `u / ⟨u⟩_2`.
pub fn unit_direction(u: &RealVector) -> Result<RealVector> {
    let m = p_mean(u, 2.0);
    if m == 0.0 {
        return Err(Error::invalid("direction must be nonzero"));
    }
    let mut v = u.scaled(1.0 / m);
    // snap to exactly unit 2-mean where rounding leaves it a hair off
    let m2 = p_mean(&v, 2.0);
    if m2 != 1.0 {
        v = v.scaled(1.0 / m2);
    }
    Ok(v)
}

/// The diagonal direction `1 = (1, …, 1)`.
pub fn diagonal(k: usize) -> Result<RealVector> {
    RealVector::ones(k)
}

/// The coordinate direction `√k·e_1`.
pub fn coordinate(k: usize) -> Result<RealVector> {
    RealVector::axis(k, 0, libm::sqrt(k as f64))
}

/// Accuracy and search settings shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveOptions {
    /// Relative accuracy requested from quadrature measures.
    pub quad_target: f64,
    /// Relative accuracy requested from Monte Carlo measures.
    pub mc_target: f64,
    /// Seed used for every Monte Carlo evaluation, so that all points of a
    /// power curve share their random numbers.
    pub seed: u64,
    pub t_max: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { quad_target: 1e-10, mc_target: 2e-3, seed: 0, t_max: 1e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalValue {
    pub c: f64,
    /// Size `P(⟨Z⟩_p > c)` reached at `c`.
    pub achieved_alpha: f64,
    /// Bound on `|achieved_alpha − alpha|` including measure error.
    pub error: f64,
    /// `None` for closed forms.
    pub method: Option<Method>,
}

fn closed(c: f64, alpha: f64) -> CriticalValue {
    CriticalValue { c, achieved_alpha: alpha, error: 1e-12 * alpha.max(1e-300), method: None }
}

fn ball_query(k: usize, p: f64, c: f64, shift: RealVector, opts: &SolveOptions, complement: bool) -> Result<GaussianShiftQuery> {
    let shape = SetShape::p_ball(p, c)?;
    let shape = if complement { shape.complement() } else { shape };
    Ok(GaussianShiftQuery::new(SetSpec::new(shape, k)?, shift)?.with_seed(opts.seed))
}

fn evaluate(engine: &MeasureEngine<'_>, q: GaussianShiftQuery, opts: &SolveOptions) -> Result<MeasureEstimate> {
    let target = if engine.choose_method(&q).is_monte_carlo() { opts.mc_target } else { opts.quad_target };
    engine.measure(&q.with_target(target)?)
}

/// `P(⟨Z + shift⟩_p > c)`.
pub fn power(engine: &MeasureEngine<'_>, p: f64, c: f64, shift: &RealVector, opts: &SolveOptions) -> Result<MeasureEstimate> {
    evaluate(engine, ball_query(shift.dim(), p, c, shift.clone(), opts, true)?, opts)
}

fn acceptance(engine: &MeasureEngine<'_>, p: f64, c: f64, shift: &RealVector, opts: &SolveOptions) -> Result<MeasureEstimate> {
    evaluate(engine, ball_query(shift.dim(), p, c, shift.clone(), opts, false)?, opts)
}

/// The threshold `c` with `P(⟨Z⟩_p > c) = alpha` under the standard normal.
pub fn critical_value(engine: &MeasureEngine<'_>, k: usize, p: f64, alpha: f64, opts: &SolveOptions) -> Result<CriticalValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie in (0, 1)"));
    }
    if k == 0 || p.is_nan() {
        return Err(Error::invalid("need k >= 1 and a numeric p"));
    }
    let kf = k as f64;
    if k == 1 {
        return Ok(closed(norm_isf(0.5 * alpha), alpha));
    }
    if p == 2.0 {
        return Ok(closed(libm::sqrt(chi2_isf(alpha, kf) / kf), alpha));
    }
    if p == f64::INFINITY {
        // (2Φ(c) − 1)^k = 1 − α
        let s = -libm::expm1(libm::log1p(-alpha) / kf);
        return Ok(closed(norm_isf(0.5 * s), alpha));
    }
    if p == f64::NEG_INFINITY {
        // (2(1 − Φ(c)))^k = α
        return Ok(closed(norm_isf(0.5 * libm::pow(alpha, 1.0 / kf)), alpha));
    }
    let zero = RealVector::zeros(k)?;
    let size = |c: f64| power(engine, p, c, &zero, opts);
    let mut lo = norm_isf(0.5 * alpha);
    let mut hi = lo;
    let mut guard = 0;
    while size(lo)?.value <= alpha {
        lo *= 0.5;
        guard += 1;
        if guard > 200 {
            return Err(Error::invalid("could not bracket the critical value"));
        }
    }
    while size(hi)?.value >= alpha {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::invalid("could not bracket the critical value"));
        }
    }
    let method = engine.choose_method(&ball_query(k, p, hi, zero.clone(), opts, true)?);
    let mut failure = None;
    let mut f = |c: f64| match size(c) {
        Ok(e) => e.value - alpha,
        Err(err) => {
            failure = Some(err);
            0.0
        }
    };
    let b = if method.is_monte_carlo() {
        bisect(&mut f, lo, hi, 1e-7 * hi, 200)
    } else {
        brent(&mut f, lo, hi, 1e-13 * hi, 200)
    };
    if let Some(err) = failure {
        return Err(err);
    }
    let c = 0.5 * (b.lo + b.hi);
    let at = size(c)?;
    Ok(CriticalValue { c, achieved_alpha: at.value, error: (at.value - alpha).abs() + at.abs_error, method: Some(at.method) })
}

/// The shift `s = t·u` at which the level-`alpha` p-mean test has power
/// `beta`, if one exists within `t ≤ t_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShiftSolution {
    pub exists: bool,
    /// Multiple of `u`; `None` when no solution exists.
    pub t: Option<f64>,
    /// `‖s‖ = t·‖u‖`.
    pub norm: Option<f64>,
    /// Power reached at `t` (or at `t_max` when no solution exists).
    pub achieved_power: f64,
    /// Uncertainty in `t`: half the final bracket plus the measure error
    /// divided by the local slope of the power curve.
    pub solver_error: f64,
    /// Final bracket `[lo, hi]` containing `t`.
    pub bracket: (f64, f64),
    pub critical: CriticalValue,
    pub method: Method,
    /// `true` when the power curve was judged to have flattened below `beta`.
    pub flat: bool,
}

pub fn shift_solution(engine: &MeasureEngine<'_>, d: &TestDesign, opts: &SolveOptions) -> Result<ShiftSolution> {
    let critical = critical_value(engine, d.k, d.p, d.alpha, opts)?;
    shift_solution_with(engine, d, critical, opts)
}

/// [`shift_solution`] with a precomputed critical value.
pub fn shift_solution_with(
    engine: &MeasureEngine<'_>,
    d: &TestDesign,
    critical: CriticalValue,
    opts: &SolveOptions,
) -> Result<ShiftSolution> {
    let c = critical.c;
    let goal = 1.0 - d.beta;
    let acc = |t: f64| acceptance(engine, d.p, c, &d.u.scaled(t), opts);
    let method = acc(1.0)?.method;
    let mut hi = 1.0;
    let mut at_hi = acc(hi)?;
    while at_hi.value > goal {
        if hi >= opts.t_max {
            let half = acc(0.5 * opts.t_max)?;
            let slope = (half.value - at_hi.value) / (0.5 * opts.t_max);
            let flat = slope < 1e-12;
            return Ok(ShiftSolution {
                exists: false,
                t: None,
                norm: None,
                achieved_power: 1.0 - at_hi.value,
                solver_error: f64::NAN,
                bracket: (opts.t_max, f64::INFINITY),
                critical,
                method,
                flat,
            });
        }
        hi = (2.0 * hi).min(opts.t_max);
        at_hi = acc(hi)?;
    }
    let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    let mut failure = None;
    let b: Bracket = if method.is_monte_carlo() {
        let mut f = |t: f64| match acc(t) {
            Ok(e) => e.value - goal,
            Err(err) => {
                failure = Some(err);
                0.0
            }
        };
        bisect(&mut f, lo, hi, 1e-8 * hi.max(1.0), 200)
    } else {
        let lg = libm::log(goal);
        let mut f = |t: f64| match acc(t) {
            Ok(e) => libm::log(e.value.max(1e-300)) - lg,
            Err(err) => {
                failure = Some(err);
                0.0
            }
        };
        brent(&mut f, lo, hi, 1e-11 * hi.max(1.0), 300)
    };
    if let Some(err) = failure {
        return Err(err);
    }
    let t = 0.5 * (b.lo + b.hi);
    let at = acc(t)?;
    let h = 1e-4 * t.max(1e-3);
    let slope = ((acc(t - h)?.value - acc(t + h)?.value) / (2.0 * h)).abs();
    let measure_part = if slope > 0.0 { at.abs_error / slope } else { f64::INFINITY };
    let norm = t * d.u.norm();
    Ok(ShiftSolution {
        exists: true,
        t: Some(t),
        norm: Some(norm),
        achieved_power: 1.0 - at.value,
        solver_error: 0.5 * b.width() + measure_part,
        bracket: (b.lo, b.hi),
        critical,
        method,
        flat: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{norm_cdf, norm_interval};

    #[test]
    fn closed_form_critical_values() {
        let e = MeasureEngine::default();
        let o = SolveOptions::default();
        let c = critical_value(&e, 2, 2.0, 0.05, &o).unwrap().c;
        assert!((c - libm::sqrt(libm::log(20.0))).abs() < 1e-12);
        let c = critical_value(&e, 1, 0.7, 0.05, &o).unwrap().c;
        assert!((c - 1.959_963_984_540_054).abs() < 1e-12);
        let c = critical_value(&e, 2, f64::INFINITY, 0.05, &o).unwrap().c;
        let one = 2.0 * norm_cdf(c) - 1.0;
        assert!((one * one - 0.95).abs() < 1e-13);
        assert!(critical_value(&e, 2, 1.0, 1.0, &o).is_err());
    }

    #[test]
    fn numeric_critical_value_reproduces_size() {
        let e = MeasureEngine::default();
        let o = SolveOptions::default();
        let cv = critical_value(&e, 2, 3.0, 0.05, &o).unwrap();
        assert!((cv.achieved_alpha - 0.05).abs() < 1e-8, "{cv:?}");
    }

    #[test]
    fn one_dimensional_shift() {
        let e = MeasureEngine::default();
        let d = TestDesign::new(1, 1.0, 0.05, 0.9, RealVector::ones(1).unwrap()).unwrap();
        let s = shift_solution(&e, &d, &SolveOptions::default()).unwrap();
        let t = s.t.unwrap();
        let c = 1.959_963_984_540_054;
        assert!((norm_interval(-c - t, c - t) - 0.1).abs() < 1e-9);
        assert!(s.bracket.0 <= t && t <= s.bracket.1);
    }

    #[test]
    fn design_validation() {
        let u = RealVector::from_slice(&[1.0, 1.0]).unwrap();
        assert!(TestDesign::new(2, 1.0, 0.05, 0.95, u.clone()).is_ok());
        assert!(TestDesign::new(2, 1.0, 0.5, 0.4, u).is_err());
        assert!(TestDesign::new(2, 1.0, 0.05, 0.95, RealVector::from_slice(&[1.0, 0.0]).unwrap()).is_err());
        let v = unit_direction(&RealVector::from_slice(&[3.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p_mean(&v, 2.0), 1.0);
    }
}
