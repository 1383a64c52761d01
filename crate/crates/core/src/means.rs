//! Power means, truncated power means and (p,q)-means of absolute
//! coordinates, with their limit conventions and Schur² classification.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::majorization::sorted_desc;
use crate::vector::RealVector;

/// Above this `|p|` the power mean is evaluated with the extreme coordinate
/// factored out.
const LARGE_P: f64 = 50.0;
/// Below this `|p|` the power mean goes through `expm1`/`ln_1p` so it stays
/// continuous at `p = 0`.
const SMALL_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Tail {
    Smallest,
    Largest,
}

/// Which mean functional is in play.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum MeanSpec {
    PMean { p: f64 },
    /// Stored with `p >= q`.
    PqMean { p: f64, q: f64 },
    Truncated { ell: usize, tail: Tail, p: f64 },
}

impl MeanSpec {
    pub fn p_mean(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(MeanSpec::PMean { p })
    }

    /// Normalizes the pair so that `p >= q`.
    pub fn pq_mean(p: f64, q: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        let (p, q) = if p >= q { (p, q) } else { (q, p) };
        Ok(MeanSpec::PqMean { p, q })
    }

    pub fn truncated(ell: usize, tail: Tail, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if ell == 0 {
            return Err(Error::invalid("truncation length must be at least 1"));
        }
        Ok(MeanSpec::Truncated { ell, tail, p })
    }

    pub fn eval(&self, x: &RealVector) -> Result<f64> {
        match *self {
            MeanSpec::PMean { p } => Ok(p_mean(x, p)),
            MeanSpec::PqMean { p, q } => Ok(pq_mean(x, p, q)),
            MeanSpec::Truncated { ell, tail, p } => truncated_mean(x, ell, tail, p),
        }
    }

    pub fn classify(&self) -> SchurCharacter {
        classify_mean(self)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() {
        return Err(Error::invalid("exponent is NaN"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Schur2Kind {
    #[cfg_attr(feature = "serde", serde(rename = "SCHUR2_CONCAVE"))]
    Concave,
    #[cfg_attr(feature = "serde", serde(rename = "SCHUR2_CONVEX"))]
    Convex,
    NeitherKnown,
}

impl Schur2Kind {
    pub fn flipped(self) -> Self {
        match self {
            Schur2Kind::Concave => Schur2Kind::Convex,
            Schur2Kind::Convex => Schur2Kind::Concave,
            Schur2Kind::NeitherKnown => Schur2Kind::NeitherKnown,
        }
    }
}

/// Schur² verdict. `spherical` marks the Euclidean case, which is both
/// concave and convex; it is reported as `Convex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SchurCharacter {
    pub value: Schur2Kind,
    pub spherical: bool,
}

impl SchurCharacter {
    pub const fn new(value: Schur2Kind) -> Self {
        Self { value, spherical: false }
    }

    pub const fn spherical() -> Self {
        Self { value: Schur2Kind::Convex, spherical: true }
    }

    pub fn is_concave(&self) -> bool {
        self.spherical || self.value == Schur2Kind::Concave
    }

    pub fn is_convex(&self) -> bool {
        self.spherical || self.value == Schur2Kind::Convex
    }

    pub fn flipped(self) -> Self {
        Self { value: self.value.flipped(), spherical: self.spherical }
    }
}

pub fn p_mean(x: &RealVector, p: f64) -> f64 {
    power_mean_abs(x.coords().iter().map(|v| v.abs()), p)
}

/// Power mean of nonnegative values with `1/n` normalization.
pub(crate) fn power_mean_abs<I>(vals: I, p: f64) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let n = vals.clone().count() as f64;
    if p == f64::INFINITY {
        return vals.fold(0.0, f64::max);
    }
    if p == f64::NEG_INFINITY {
        return vals.fold(f64::INFINITY, f64::min);
    }
    if p <= 0.0 && vals.clone().any(|v| v == 0.0) {
        return 0.0;
    }
    if p == 0.0 {
        let s: f64 = vals.map(libm::log).sum();
        return libm::exp(s / n);
    }
    if p.abs() > LARGE_P {
        let m = if p > 0.0 { vals.clone().fold(0.0, f64::max) } else { vals.clone().fold(f64::INFINITY, f64::min) };
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = vals.map(|v| libm::pow(v / m, p)).sum();
        return m * libm::pow(s / n, 1.0 / p);
    }
    if p.abs() < SMALL_P {
        // mean of |x|^p - 1, kept accurate as p -> 0
        let s: f64 = vals.map(|v| if v == 0.0 { -1.0 } else { libm::expm1(p * libm::log(v)) }).sum();
        return libm::exp(libm::log1p(s / n) / p);
    }
    let s: f64 = vals.map(|v| libm::pow(v, p)).sum();
    libm::pow(s / n, 1.0 / p)
}

/// p-mean of the `ell` smallest or largest absolute coordinates.
pub fn truncated_mean(x: &RealVector, ell: usize, tail: Tail, p: f64) -> Result<f64> {
    if ell == 0 || ell > x.dim() {
        return Err(Error::invalid("truncation length out of range 1..=k"));
    }
    let abs: Vec<f64> = x.coords().iter().map(|v| v.abs()).collect();
    let sorted = sorted_desc(&abs);
    let chosen = match tail {
        Tail::Largest => &sorted[..ell],
        Tail::Smallest => &sorted[sorted.len() - ell..],
    };
    Ok(power_mean_abs(chosen.iter().copied(), p))
}

pub fn pq_mean(x: &RealVector, p: f64, q: f64) -> f64 {
    pq_mean_abs(x.coords().iter().map(|v| v.abs()), p, q)
}

fn log_sum_exp<I: Iterator<Item = f64> + Clone>(terms: I) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(terms.map(|t| libm::exp(t - m)).sum::<f64>())
}

/// (p,q)-mean of nonnegative values, extended by continuity.
pub(crate) fn pq_mean_abs<I>(vals: I, p: f64, q: f64) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let (p, q) = if p >= q { (p, q) } else { (q, p) };
    let n = vals.clone().count() as f64;
    let any_zero = vals.clone().any(|v| v == 0.0);
    if vals.clone().all(|v| v == 0.0) {
        return 0.0;
    }
    if p == f64::INFINITY {
        return vals.fold(0.0, f64::max);
    }
    if q == f64::NEG_INFINITY {
        return vals.fold(f64::INFINITY, f64::min);
    }
    let nonzero = vals.filter(|&v| v != 0.0);
    if p == q {
        if any_zero && p <= 0.0 {
            return 0.0;
        }
        let lse = log_sum_exp(nonzero.clone().map(|v| p * libm::log(v)));
        let s: f64 = nonzero.map(|v| {
            let lv = libm::log(v);
            libm::exp(p * lv - lse) * lv
        })
        .sum();
        return libm::exp(s);
    }
    if any_zero && q < 0.0 {
        return 0.0;
    }
    let ln_num = log_sum_exp(nonzero.clone().map(|v| p * libm::log(v)));
    let ln_den = if q == 0.0 { libm::log(n) } else { log_sum_exp(nonzero.map(|v| q * libm::log(v))) };
    libm::exp((ln_num - ln_den) / (p - q))
}

pub fn classify_mean(spec: &MeanSpec) -> SchurCharacter {
    use Schur2Kind::*;
    match *spec {
        MeanSpec::PMean { p } => {
            if p == 2.0 {
                SchurCharacter::spherical()
            } else if p < 2.0 {
                SchurCharacter::new(Concave)
            } else {
                SchurCharacter::new(Convex)
            }
        }
        MeanSpec::PqMean { p, q } => SchurCharacter::new(classify_pq(p, q)),
        MeanSpec::Truncated { tail, p, .. } => match tail {
            Tail::Smallest if p <= 2.0 => SchurCharacter::new(Concave),
            Tail::Largest if p >= 2.0 => SchurCharacter::new(Convex),
            _ => SchurCharacter::new(NeitherKnown),
        },
    }
}

pub(crate) fn classify_pq(p: f64, q: f64) -> Schur2Kind {
    let (p, q) = if p >= q { (p, q) } else { (q, p) };
    if p == f64::INFINITY && q == f64::NEG_INFINITY {
        return Schur2Kind::NeitherKnown;
    }
    if q <= 0.0 && (0.0..=2.0).contains(&p) {
        Schur2Kind::Concave
    } else if (0.0..=2.0).contains(&q) && 2.0 <= p {
        Schur2Kind::Convex
    } else {
        Schur2Kind::NeitherKnown
    }
}

/// Sign of `(∂/∂u_i − ∂/∂u_j)` applied to `u ↦ ⟨(√u_1, …, √u_k)⟩_{p,q}`,
/// computed from `p·u_i^{p/2−1}·Σu^{q/2} − q·u_i^{q/2−1}·Σu^{p/2}` (the
/// partial derivative up to a positive factor common to all `i`).
pub fn schur_ostrowski_sign(p: f64, q: f64, u: &RealVector, i: usize, j: usize) -> Result<i8> {
    let k = u.dim();
    if i >= k || j >= k || i == j {
        return Err(Error::invalid("indices must be distinct and in range"));
    }
    if p <= q || !p.is_finite() || !q.is_finite() {
        return Err(Error::invalid("need finite p > q"));
    }
    if u.coords().iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid("coordinates must be strictly positive"));
    }
    let d = schur_ostrowski_difference(p, q, u.coords(), i, j);
    Ok(if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    })
}

pub(crate) fn schur_ostrowski_difference(p: f64, q: f64, u: &[f64], i: usize, j: usize) -> f64 {
    let sp: f64 = u.iter().map(|&v| libm::pow(v, p / 2.0)).sum();
    let sq: f64 = u.iter().map(|&v| libm::pow(v, q / 2.0)).sum();
    let partial = |v: f64| p * libm::pow(v, p / 2.0 - 1.0) * sq - q * libm::pow(v, q / 2.0 - 1.0) * sp;
    if u[i] == u[j] {
        return 0.0;
    }
    partial(u[i]) - partial(u[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> RealVector {
        RealVector::from_slice(x).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn p_mean_examples() {
        for p in [f64::NEG_INFINITY, -3.0, -0.2, 0.0, 1e-9, 0.7, 2.0, 9.0, 80.0, f64::INFINITY] {
            assert!(close(p_mean(&v(&[1.0, 1.0, 1.0]), p), 1.0, 1e-14), "p={p}");
        }
        assert_eq!(p_mean(&v(&[3.0, 0.0, 4.0]), -1.0), 0.0);
        assert!(close(p_mean(&v(&[1.0, 2.0]), 0.0), core::f64::consts::SQRT_2, 1e-15));
        assert_eq!(p_mean(&v(&[1.0, -2.0, 2.0]), f64::INFINITY), 2.0);
        assert_eq!(p_mean(&v(&[1.0, -2.0, 2.0]), f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn p_mean_continuous_at_zero() {
        let x = v(&[0.3, 2.5, 1.7, 0.9]);
        let g = p_mean(&x, 0.0);
        for p in [1e-3, -1e-3, 1e-6, -1e-6, 1e-10] {
            assert!((p_mean(&x, p) - g).abs() < 2.0 * p.abs() * 10.0 + 1e-14, "p={p}");
        }
    }

    #[test]
    fn large_p_paths_agree() {
        let x = v(&[0.3, 2.5, 1.7, 0.9]);
        for p in [49.0, 50.0, -50.0, -49.0] {
            let direct = libm::pow(
                x.coords().iter().map(|c| libm::pow(c.abs(), p)).sum::<f64>() / 4.0,
                1.0 / p,
            );
            assert!(close(p_mean(&x, p), direct, 1e-13));
        }
        let big = v(&[1e300, 1e299]);
        assert!(p_mean(&big, 200.0).is_finite());
        assert!(close(p_mean(&big, 200.0), 1e300 * libm::pow(0.5, 1.0 / 200.0), 1e-12));
    }

    #[test]
    fn truncated_examples() {
        let x = v(&[1.0, -2.0, 5.0]);
        for p in [-1.0, 0.0, 1.0, 3.0] {
            assert!(close(truncated_mean(&x, 3, Tail::Smallest, p).unwrap(), p_mean(&x, p), 1e-15));
            assert!(close(truncated_mean(&x, 3, Tail::Largest, p).unwrap(), p_mean(&x, p), 1e-15));
            assert_eq!(truncated_mean(&x, 1, Tail::Smallest, p).unwrap(), 1.0);
        }
        let expected = libm::sqrt((4.0 + 25.0) / 2.0);
        assert!(close(truncated_mean(&x, 2, Tail::Largest, 2.0).unwrap(), expected, 1e-15));
        assert!(truncated_mean(&x, 0, Tail::Largest, 2.0).is_err());
        assert!(truncated_mean(&x, 4, Tail::Largest, 2.0).is_err());
    }

    #[test]
    fn pq_examples() {
        let c = v(&[1.7, 1.7, 1.7]);
        assert!(close(pq_mean(&c, 3.0, -1.0), 1.7, 1e-14));
        let x = v(&[0.4, 1.3, 2.2]);
        for p in [-2.0, 0.5, 1.0, 3.0] {
            assert!(close(pq_mean(&x, p, 0.0), p_mean(&x, p), 1e-13), "p={p}");
            assert_eq!(pq_mean(&x, p, 1.5), pq_mean(&x, 1.5, p));
        }
        let w = libm::pow(1.0, 0.2) * libm::pow(2.0, 0.8);
        assert!(close(pq_mean(&v(&[1.0, 2.0]), 2.0, 2.0), w, 1e-15));
        assert_eq!(pq_mean(&v(&[0.0, 0.0]), 2.0, 2.0), 0.0);
        assert_eq!(pq_mean(&v(&[2.5, 0.0]), 2.0, -0.4), 0.0);
        assert_eq!(pq_mean(&x, f64::INFINITY, 1.0), 2.2);
        assert_eq!(pq_mean(&x, 1.0, f64::NEG_INFINITY), 0.4);
    }

    #[test]
    fn pq_mean_is_continuous_across_p_equals_q() {
        let x = v(&[0.4, 1.3, 2.2]);
        let at = pq_mean(&x, 2.0, 2.0);
        assert!(close(pq_mean(&x, 2.0 + 1e-6, 2.0), at, 1e-5));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(MeanSpec::p_mean(3.0).unwrap().classify().value, Schur2Kind::Convex);
        assert_eq!(MeanSpec::p_mean(1.0).unwrap().classify().value, Schur2Kind::Concave);
        let two = MeanSpec::p_mean(2.0).unwrap().classify();
        assert!(two.spherical && two.is_concave() && two.is_convex());
        assert_eq!(MeanSpec::pq_mean(5.0, -1.0).unwrap().classify().value, Schur2Kind::NeitherKnown);
        assert_eq!(MeanSpec::pq_mean(0.7, 0.7).unwrap().classify().value, Schur2Kind::NeitherKnown);
        assert_eq!(MeanSpec::pq_mean(2.0, 2.0).unwrap().classify().value, Schur2Kind::Convex);
        assert_eq!(MeanSpec::pq_mean(-0.4, 2.0).unwrap().classify().value, Schur2Kind::Concave);
        let t = |tail, p| MeanSpec::truncated(2, tail, p).unwrap().classify().value;
        assert_eq!(t(Tail::Smallest, 1.0), Schur2Kind::Concave);
        assert_eq!(t(Tail::Largest, 3.0), Schur2Kind::Convex);
        assert_eq!(t(Tail::Largest, 1.0), Schur2Kind::NeitherKnown);
    }

    #[test]
    fn schur_ostrowski_edge_cases() {
        let ones = v(&[1.0, 1.0, 1.0]);
        assert_eq!(schur_ostrowski_sign(2.0, -1.0, &ones, 0, 2).unwrap(), 0);
        assert!(schur_ostrowski_sign(2.0, -1.0, &v(&[1.0, 0.0]), 0, 1).is_err());
        assert!(schur_ostrowski_sign(1.0, 2.0, &ones, 0, 1).is_err());
        assert!(schur_ostrowski_sign(2.0, 1.0, &ones, 1, 1).is_err());
        let u = v(&[3.0, 1.0]);
        assert_eq!(schur_ostrowski_sign(1.5, -0.5, &u, 0, 1).unwrap(), -1);
        assert_eq!(schur_ostrowski_sign(4.0, 1.0, &u, 0, 1).unwrap(), 1);
    }
}
