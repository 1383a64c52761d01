//! Schur majorization, its squared-coordinate variant, the hyperoctahedral
//! orbit representative and constructive Muirhead chains.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::RealVector;

/// Outcome of comparing `a` against `b` in the majorization order.
///
/// The verdict is directional: `StrictMajorizes` means `a ≻ b`. When `b ≻ a`
/// the comparison of `a` against `b` is `Incomparable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Majorization {
    EqualSorted,
    StrictMajorizes,
    /// All partial sums dominate within tolerance and none by more than it,
    /// yet the sorted vectors are not equal within tolerance.
    MajorizesNonstrict,
    Incomparable,
}

impl Majorization {
    /// `a ⪰ b` in any form, including equality of sorted vectors.
    pub fn majorizes(self) -> bool {
        !matches!(self, Majorization::Incomparable)
    }
}

/// Equality tolerance for sums and partial sums: `1e-12 · max(1, ‖a‖₁)`.
pub fn sum_tolerance(a: &[f64]) -> f64 {
    let l1: f64 = a.iter().map(|x| x.abs()).sum();
    1e-12 * l1.max(1.0)
}

pub(crate) fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn majorize_compare(a: &RealVector, b: &RealVector) -> Result<Majorization> {
    b.check_dim(a.dim())?;
    Ok(compare_slices(a.coords(), b.coords()))
}

pub(crate) fn compare_slices(a: &[f64], b: &[f64]) -> Majorization {
    let tol = sum_tolerance(a).max(sum_tolerance(b));
    let sa = sorted_desc(a);
    let sb = sorted_desc(b);
    let total_a: f64 = sa.iter().sum();
    let total_b: f64 = sb.iter().sum();
    if (total_a - total_b).abs() > tol {
        return Majorization::Incomparable;
    }
    if sa.iter().zip(&sb).all(|(x, y)| (x - y).abs() <= tol) {
        return Majorization::EqualSorted;
    }
    let mut pa = 0.0;
    let mut pb = 0.0;
    let mut strict = false;
    for (x, y) in sa.iter().zip(&sb) {
        pa += x;
        pb += y;
        let d = pa - pb;
        if d < -tol {
            return Majorization::Incomparable;
        }
        if d > tol {
            strict = true;
        }
    }
    if strict {
        Majorization::StrictMajorizes
    } else {
        Majorization::MajorizesNonstrict
    }
}

/// Compares `x²` against `y²` (coordinatewise squares).
pub fn schur2_compare(x: &RealVector, y: &RealVector) -> Result<Majorization> {
    majorize_compare(&x.squared(), &y.squared())
}

/// Orbit representative under the hyperoctahedral group: absolute values
/// sorted in descending order.
pub fn g_canonical(x: &RealVector) -> RealVector {
    let abs: Vec<f64> = x.coords().iter().map(|v| v.abs()).collect();
    RealVector::new(sorted_desc(&abs)).expect("canonical form of a valid vector is valid")
}

/// An element of the hyperoctahedral group `G_k`: `(g·x)_i = sign_i · x_{perm_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    negate: Vec<bool>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, negate: Vec<bool>) -> Result<Self> {
        let k = perm.len();
        if negate.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: negate.len() });
        }
        let mut seen = alloc::vec![false; k];
        for &p in &perm {
            if p >= k || seen[p] {
                return Err(Error::invalid("not a permutation"));
            }
            seen[p] = true;
        }
        Ok(Self { perm, negate })
    }

    pub fn identity(k: usize) -> Self {
        Self { perm: (0..k).collect(), negate: alloc::vec![false; k] }
    }

    /// Decodes the `index`-th of the `2^k · k!` group elements.
    pub fn from_index(k: usize, index: usize) -> Self {
        let signs = index % (1 << k);
        let mut rest = index >> k;
        let mut pool: Vec<usize> = (0..k).collect();
        let mut perm = Vec::with_capacity(k);
        for m in (1..=k).rev() {
            perm.push(pool.remove(rest % m));
            rest /= m;
        }
        let negate = (0..k).map(|i| signs & (1 << i) != 0).collect();
        Self { perm, negate }
    }

    /// `2^k · k!`.
    pub fn group_order(k: usize) -> usize {
        (1..=k).product::<usize>() << k
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.negate)
            .map(|(&p, &neg)| if neg { -x[p] } else { x[p] })
            .collect()
    }

    pub fn apply(&self, x: &RealVector) -> Result<RealVector> {
        x.check_dim(self.perm.len())?;
        RealVector::new(self.apply_slice(x.coords()))
    }
}

/// Chain `a = a⁽⁰⁾ ≻ a⁽¹⁾ ≻ … ≻ a⁽ᵐ⁾ = b` with `m ≤ k − 1`, consecutive links
/// differing in exactly two coordinates.
///
/// Each step is a Robin Hood transfer between the last coordinate (in sorted
/// order) where the current vector exceeds `b` and the first later one where
/// it falls short; every step makes at least one more coordinate agree with
/// `b`. The inputs must be similarly ordered (one permutation sorts both in
/// descending order), which holds whenever both are already sorted.
pub fn muirhead_chain(a: &RealVector, b: &RealVector) -> Result<Vec<RealVector>> {
    b.check_dim(a.dim())?;
    if majorize_compare(a, b)? != Majorization::StrictMajorizes {
        return Err(Error::NotMajorizing);
    }
    let k = a.dim();
    let (xa, xb) = (a.coords(), b.coords());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| xb[j].total_cmp(&xb[i]).then(xa[j].total_cmp(&xa[i])));
    if order.windows(2).any(|w| xa[w[0]] < xa[w[1]]) {
        return Err(Error::NotSimilarlyOrdered);
    }
    let tol = sum_tolerance(xa).max(sum_tolerance(xb));
    let target: Vec<f64> = order.iter().map(|&i| xb[i]).collect();
    let mut cur: Vec<f64> = order.iter().map(|&i| xa[i]).collect();
    let mut chain = alloc::vec![a.clone()];

    for _ in 0..k {
        let Some(j) = (0..k).rev().find(|&i| cur[i] - target[i] > tol) else {
            break;
        };
        let Some(l) = (j + 1..k).find(|&i| target[i] - cur[i] > tol) else {
            break;
        };
        let excess = cur[j] - target[j];
        let deficit = target[l] - cur[l];
        if excess <= deficit + tol {
            cur[l] += excess;
            cur[j] = target[j];
            if (target[l] - cur[l]).abs() <= tol {
                cur[l] = target[l];
            }
        } else {
            cur[j] -= deficit;
            cur[l] = target[l];
        }
        let mut coords = alloc::vec![0.0; k];
        for (pos, &i) in order.iter().enumerate() {
            coords[i] = cur[pos];
        }
        chain.push(RealVector::new(coords)?);
    }
    let last = chain.last().expect("chain starts with a");
    if last.coords().iter().zip(xb).any(|(x, y)| (x - y).abs() > tol) {
        return Err(Error::NotMajorizing);
    }
    let n = chain.len();
    chain[n - 1] = b.clone();
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> RealVector {
        RealVector::from_slice(x).unwrap()
    }

    #[test]
    fn basic_verdicts() {
        assert_eq!(majorize_compare(&v(&[2.0, 0.0]), &v(&[1.0, 1.0])).unwrap(), Majorization::StrictMajorizes);
        assert_eq!(majorize_compare(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap(), Majorization::EqualSorted);
        assert_eq!(majorize_compare(&v(&[3.0, 0.0]), &v(&[1.0, 1.0])).unwrap(), Majorization::Incomparable);
        assert_eq!(majorize_compare(&v(&[1.0, 1.0]), &v(&[2.0, 0.0])).unwrap(), Majorization::Incomparable);
        assert!(matches!(
            majorize_compare(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coordinate_direction_dominates_every_unit_profile() {
        let s3 = libm::sqrt(3.0);
        let u = v(&[s3, 0.0, 0.0]);
        assert_eq!(majorize_compare(&u.squared(), &v(&[1.0, 1.0, 1.0])).unwrap(), Majorization::StrictMajorizes);
    }

    #[test]
    fn schur2_examples() {
        let s2 = core::f64::consts::SQRT_2;
        assert_eq!(schur2_compare(&v(&[s2, 0.0]), &v(&[1.0, 1.0])).unwrap(), Majorization::StrictMajorizes);
        assert_eq!(schur2_compare(&v(&[-1.0, 1.0]), &v(&[1.0, -1.0])).unwrap(), Majorization::EqualSorted);
        let on_circle = |t: f64| v(&[libm::cos(t), libm::sin(t)]);
        let pi = core::f64::consts::PI;
        assert_eq!(
            schur2_compare(&on_circle(pi / 20.0), &on_circle(pi / 5.0)).unwrap(),
            Majorization::StrictMajorizes
        );
    }

    #[test]
    fn canonical_form() {
        assert_eq!(g_canonical(&v(&[-3.0, 1.0, -2.0])).coords(), &[3.0, 2.0, 1.0]);
        assert_eq!(g_canonical(&v(&[0.0, 0.0])).coords(), &[0.0, 0.0]);
        let x = v(&[0.3, -1.2]);
        for i in 0..SignedPermutation::group_order(2) {
            let g = SignedPermutation::from_index(2, i);
            assert_eq!(g_canonical(&g.apply(&x).unwrap()), g_canonical(&x));
        }
    }

    #[test]
    fn group_enumeration_is_exhaustive() {
        let x = v(&[1.0, 2.0, 3.0]);
        let mut images: Vec<Vec<f64>> = (0..SignedPermutation::group_order(3))
            .map(|i| SignedPermutation::from_index(3, i).apply(&x).unwrap().into_inner())
            .collect();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        images.dedup();
        assert_eq!(images.len(), 48);
    }

    fn check_chain(a: &[f64], b: &[f64]) -> Vec<RealVector> {
        let chain = muirhead_chain(&v(a), &v(b)).unwrap();
        assert_eq!(chain.first().unwrap().coords(), a);
        assert_eq!(chain.last().unwrap().coords(), b);
        assert!(chain.len() <= a.len());
        for w in chain.windows(2) {
            assert_eq!(majorize_compare(&w[0], &w[1]).unwrap(), Majorization::StrictMajorizes);
            let changed = w[0].coords().iter().zip(w[1].coords()).filter(|(x, y)| x != y).count();
            assert_eq!(changed, 2);
        }
        chain
    }

    #[test]
    fn chains() {
        let c = check_chain(&[2.0, 0.0], &[1.0, 1.0]);
        assert_eq!(c.len(), 2);
        check_chain(&[3.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        check_chain(&[4.0, 1.0, 1.0], &[2.0, 2.0, 2.0]);
        check_chain(&[0.0, 3.0, 1.0], &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn chain_rejects_bad_inputs() {
        assert_eq!(muirhead_chain(&v(&[1.0, 1.0]), &v(&[2.0, 0.0])), Err(Error::NotMajorizing));
        assert_eq!(muirhead_chain(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])), Err(Error::NotMajorizing));
        assert_eq!(
            muirhead_chain(&v(&[3.0, 0.0, 0.0]), &v(&[0.0, 1.0, 2.0])),
            Err(Error::NotSimilarlyOrdered)
        );
    }
}
