//! Symbolic sets built from power means, with exact membership and
//! one-dimensional sections.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::means::{classify_pq, power_mean_abs, pq_mean_abs, Schur2Kind, SchurCharacter};
use crate::vector::RealVector;

/// The set families. Parameters: exponent `p` (and `q`), radius `eps`,
/// centre offset `a`.
///
/// * `PBall`: `⟨x⟩_p ≤ eps`.
/// * `PqBall`: `⟨x⟩_{p,q} ≤ eps`, stored with `p ≥ q`.
/// * `HatB`: union over the hypercube group of p-balls centred at `a·g·1`.
/// * `CheckB`: union of p-balls centred at `±a·e_i`.
/// * `Cube`: `|x_j| ≤ a` for all `j`.
/// * `Complement`: the complement of another shape.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "String", into = "String"))]
pub enum SetShape {
    PBall { p: f64, eps: f64 },
    PqBall { p: f64, q: f64, eps: f64 },
    HatB { p: f64, a: f64, eps: f64 },
    CheckB { p: f64, a: f64, eps: f64 },
    Cube { a: f64 },
    Complement(Box<SetShape>),
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() {
        return Err(Error::invalid("exponent is NaN"));
    }
    Ok(())
}

fn check_radius(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("radius eps must be positive and finite"));
    }
    Ok(())
}

fn check_offset(a: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::invalid("offset a must be nonnegative and finite"));
    }
    Ok(())
}

impl SetShape {
    pub fn p_ball(p: f64, eps: f64) -> Result<Self> {
        check_exponent(p)?;
        check_radius(eps)?;
        Ok(Self::PBall { p, eps })
    }

    pub fn pq_ball(p: f64, q: f64, eps: f64) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        check_radius(eps)?;
        let (p, q) = if p >= q { (p, q) } else { (q, p) };
        Ok(Self::PqBall { p, q, eps })
    }

    pub fn hat_b(p: f64, a: f64, eps: f64) -> Result<Self> {
        check_exponent(p)?;
        if p < 1.0 {
            return Err(Error::invalid("hat ball membership needs p >= 1"));
        }
        check_offset(a)?;
        check_radius(eps)?;
        Ok(Self::HatB { p, a, eps })
    }

    pub fn check_b(p: f64, a: f64, eps: f64) -> Result<Self> {
        check_exponent(p)?;
        check_offset(a)?;
        check_radius(eps)?;
        Ok(Self::CheckB { p, a, eps })
    }

    pub fn cube(a: f64) -> Result<Self> {
        check_offset(a)?;
        Ok(Self::Cube { a })
    }

    /// The complement; complementing twice gives the original shape back.
    pub fn complement(self) -> Self {
        match self {
            Self::Complement(inner) => *inner,
            other => Self::Complement(Box::new(other)),
        }
    }

    /// Re-runs the constructor checks, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PBall { p, eps } => Self::p_ball(p, eps).map(|_| ()),
            Self::PqBall { p, q, eps } => {
                if p < q {
                    return Err(Error::invalid("pq ball must be stored with p >= q"));
                }
                Self::pq_ball(p, q, eps).map(|_| ())
            }
            Self::HatB { p, a, eps } => Self::hat_b(p, a, eps).map(|_| ()),
            Self::CheckB { p, a, eps } => Self::check_b(p, a, eps).map(|_| ()),
            Self::Cube { a } => Self::cube(a).map(|_| ()),
            Self::Complement(ref inner) => {
                if matches!(**inner, Self::Complement(_)) {
                    return Err(Error::invalid("nested complement"));
                }
                inner.validate()
            }
        }
    }

    /// The non-complemented shape and whether it was complemented.
    pub fn base(&self) -> (&SetShape, bool) {
        match self {
            Self::Complement(inner) => (inner, true),
            other => (other, false),
        }
    }

    pub fn is_complement(&self) -> bool {
        matches!(self, Self::Complement(_))
    }

    /// The image of the set under `x ↦ c·x` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        match *self {
            Self::PBall { p, eps } => Self::PBall { p, eps: eps * c },
            Self::PqBall { p, q, eps } => Self::PqBall { p, q, eps: eps * c },
            Self::HatB { p, a, eps } => Self::HatB { p, a: a * c, eps: eps * c },
            Self::CheckB { p, a, eps } => Self::CheckB { p, a: a * c, eps: eps * c },
            Self::Cube { a } => Self::Cube { a: a * c },
            Self::Complement(ref inner) => Self::Complement(Box::new(inner.scaled(c))),
        }
    }

    /// Membership of a point given as a slice.
    pub fn contains_slice(&self, x: &[f64]) -> bool {
        let abs = x.iter().map(|v| v.abs());
        match *self {
            Self::PBall { p, eps } => power_mean_abs(abs, p) <= eps,
            Self::PqBall { p, q, eps } => pq_mean_abs(abs, p, q) <= eps,
            Self::HatB { p, a, eps } => power_mean_abs(abs.map(|v| (v - a).abs()), p) <= eps,
            Self::CheckB { p, a, eps } => (0..x.len()).any(|i| {
                let s = if x[i] < 0.0 { -a } else { a };
                let shifted = x.iter().enumerate().map(|(j, v)| if j == i { (v - s).abs() } else { v.abs() });
                power_mean_abs(shifted, p) <= eps
            }),
            Self::Cube { a } => abs.fold(0.0, f64::max) <= a,
            Self::Complement(ref inner) => !inner.contains_slice(x),
        }
    }

    /// Schur² character of the set (that of its indicator function's
    /// defining mean; complements flip it).
    pub fn classify(&self) -> SchurCharacter {
        use Schur2Kind::*;
        match *self {
            Self::PBall { p, .. } => {
                if p == 2.0 {
                    SchurCharacter::spherical()
                } else if p < 2.0 {
                    SchurCharacter::new(Concave)
                } else {
                    SchurCharacter::new(Convex)
                }
            }
            Self::PqBall { p, q, .. } => {
                if p == 2.0 && q == 0.0 {
                    SchurCharacter::spherical()
                } else {
                    SchurCharacter::new(classify_pq(p, q))
                }
            }
            Self::HatB { p, .. } => SchurCharacter::new(if p >= 2.0 { Convex } else { NeitherKnown }),
            Self::CheckB { p, .. } => {
                SchurCharacter::new(if (1.0..=2.0).contains(&p) { Concave } else { NeitherKnown })
            }
            Self::Cube { .. } => SchurCharacter::new(Convex),
            Self::Complement(ref inner) => inner.classify().flipped(),
        }
    }

    /// Intersection of the set with the ray `{ρ·v : ρ ≥ 0}` as a sorted list
    /// of `ρ`-intervals. `v` should be a unit vector; `rmax` caps the search
    /// for sets whose sections are found numerically.
    pub fn ray_section(&self, v: &[f64], rmax: f64) -> Vec<(f64, f64)> {
        let abs = v.iter().map(|x| x.abs());
        let star = |m: f64, eps: f64| {
            if m == 0.0 {
                alloc::vec![(0.0, f64::INFINITY)]
            } else {
                alloc::vec![(0.0, eps / m)]
            }
        };
        match *self {
            Self::PBall { p, eps } => star(power_mean_abs(abs, p), eps),
            Self::PqBall { p, q, eps } => star(pq_mean_abs(abs, p, q), eps),
            Self::Cube { a } => {
                let m = abs.fold(0.0, f64::max);
                if a == 0.0 {
                    alloc::vec![(0.0, 0.0)]
                } else {
                    star(m, a)
                }
            }
            Self::HatB { p, a, eps } => {
                let hi = coordinate_bound(p, a, eps, v.len()) * libm::sqrt(v.len() as f64);
                let g = |r: f64| power_mean_abs(v.iter().map(|x| (r * x.abs() - a).abs()), p);
                convex_sublevel(g, eps, 0.0, hi).into_iter().collect()
            }
            Self::CheckB { p, a, eps } => {
                if p >= 1.0 {
                    let hi = coordinate_bound(p, a, eps, v.len()) * libm::sqrt(v.len() as f64);
                    let pieces = (0..v.len()).filter_map(|i| {
                        let s = if v[i] < 0.0 { -a } else { a };
                        let g = move |r: f64| {
                            power_mean_abs(
                                v.iter().enumerate().map(|(j, x)| if j == i { (r * x - s).abs() } else { (r * x).abs() }),
                                p,
                            )
                        };
                        convex_sublevel(g, eps, 0.0, hi)
                    });
                    merge(pieces.collect())
                } else {
                    let hi = if p > 0.0 {
                        rmax.min(coordinate_bound(p, a, eps, v.len()) * libm::sqrt(v.len() as f64))
                    } else {
                        rmax
                    };
                    scan_section(|r| self.contains_slice(&scale(v, r)), hi)
                }
            }
            Self::Complement(ref inner) => complement_within(&inner.ray_section(v, rmax), 0.0),
        }
    }
}

fn scale(v: &[f64], r: f64) -> Vec<f64> {
    v.iter().map(|x| r * x).collect()
}

/// A bound on `|x_j|` valid for every point of a hat or check ball with `p > 0`.
fn coordinate_bound(p: f64, a: f64, eps: f64, k: usize) -> f64 {
    let spread = if p == f64::INFINITY { eps } else { eps * libm::pow(k as f64, 1.0 / p) };
    a + spread
}

/// `{r ∈ [lo, hi] : g(r) ≤ level}` for convex `g`, as at most one interval.
fn convex_sublevel<G: Fn(f64) -> f64>(g: G, level: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-14 * hi.max(1.0) {
        if gc <= level || gd <= level {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    let inside = if gc <= level {
        c
    } else if gd <= level {
        d
    } else {
        let m = 0.5 * (a + b);
        if g(m) <= level {
            m
        } else {
            return None;
        }
    };
    let left = if g(lo) <= level { lo } else { bisect_edge(&g, level, lo, inside) };
    let right = if g(hi) <= level { hi } else { bisect_edge(&g, level, hi, inside) };
    Some((left, right))
}

/// Boundary between an `outside` point and an `inside` point, returned on
/// the inside.
fn bisect_edge<G: Fn(f64) -> f64>(g: &G, level: f64, outside: f64, inside: f64) -> f64 {
    bisect_membership(|r| g(r) <= level, outside, inside)
}

fn bisect_membership<M: Fn(f64) -> bool>(member: M, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (outside + inside);
        if m == outside || m == inside {
            break;
        }
        if member(m) {
            inside = m;
        } else {
            outside = m;
        }
    }
    inside
}

/// Sections of sets without convex structure: scan a 4096-point grid on
/// `[0, hi]` for membership changes, then polish each change by bisection.
fn scan_section<M: Fn(f64) -> bool>(member: M, hi: f64) -> Vec<(f64, f64)> {
    const N: usize = 4096;
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev_r = 0.0;
    let mut prev_in = member(0.0);
    if prev_in {
        start = Some(0.0);
    }
    for i in 1..=N {
        let r = hi * i as f64 / N as f64;
        let now = member(r);
        if now != prev_in {
            if now {
                start = Some(bisect_membership(&member, prev_r, r));
            } else if let Some(s) = start.take() {
                out.push((s, bisect_membership(&member, r, prev_r)));
            }
        }
        prev_in = now;
        prev_r = r;
    }
    if let Some(s) = start {
        out.push((s, f64::INFINITY));
    }
    out
}

/// Sorts and merges overlapping intervals.
pub(crate) fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.retain(|(lo, hi)| lo <= hi);
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// The closure of `[start, ∞) \ ⋃ iv` for sorted, merged intervals.
pub(crate) fn complement_within(iv: &[(f64, f64)], start: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = start;
    for &(lo, hi) in iv {
        if lo > cursor {
            out.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < f64::INFINITY {
        out.push((cursor, f64::INFINITY));
    }
    out
}

/// Largest `h` with `⟨(others…, h)⟩_p ≤ eps` monotone in `h`, i.e. the
/// section `{y : ⟨(others…, y)⟩_p ≤ eps} = [−h, h]`. `None` means empty;
/// `h` may be infinite. `others` are absolute values and `k` is the total
/// number of coordinates including `y`.
pub(crate) fn p_ball_budget<I: Iterator<Item = f64> + Clone>(p: f64, eps: f64, k: usize, others: I) -> Option<f64> {
    if p == f64::INFINITY {
        return if others.fold(0.0, f64::max) <= eps { Some(eps) } else { None };
    }
    if p == f64::NEG_INFINITY {
        return Some(if others.fold(f64::INFINITY, f64::min) <= eps { f64::INFINITY } else { eps });
    }
    if p <= 0.0 && others.clone().any(|v| v == 0.0) {
        return Some(f64::INFINITY);
    }
    if p == 0.0 {
        let s: f64 = others.map(|v| libm::log(v / eps)).sum();
        return Some(eps * libm::exp(-s));
    }
    let s: f64 = others.map(|v| libm::pow(v / eps, p)).sum();
    let r = k as f64 - s;
    if p > 0.0 {
        if r < 0.0 {
            None
        } else {
            Some(eps * libm::pow(r, 1.0 / p))
        }
    } else if r <= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(eps * libm::pow(r, 1.0 / p))
    }
}

/// `{t : ||t| − a| ≤ h}`.
fn shell(a: f64, h: f64) -> Vec<(f64, f64)> {
    if a - h <= 0.0 {
        alloc::vec![(-(a + h), a + h)]
    } else {
        alloc::vec![(-(a + h), -(a - h)), (a - h, a + h)]
    }
}

/// A set together with its ambient dimension.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SetSpec {
    pub shape: SetShape,
    pub dim: usize,
}

impl SetSpec {
    pub fn new(shape: SetShape, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        shape.validate()?;
        Ok(Self { shape, dim })
    }

    pub fn complement(self) -> Self {
        Self { shape: self.shape.complement(), dim: self.dim }
    }

    pub fn contains(&self, x: &RealVector) -> Result<bool> {
        x.check_dim(self.dim)?;
        Ok(self.shape.contains_slice(x.coords()))
    }

    pub fn classify(&self) -> SchurCharacter {
        self.shape.classify()
    }

    /// `{t : base with coordinate `axis` replaced by t ∈ S}` as sorted
    /// disjoint closed intervals (possibly unbounded).
    pub fn line_interval(&self, base: &RealVector, axis: usize) -> Result<Vec<(f64, f64)>> {
        base.check_dim(self.dim)?;
        if axis >= self.dim {
            return Err(Error::invalid("axis out of range"));
        }
        section(&self.shape, base.coords(), axis)
    }

    pub fn ray_section(&self, v: &[f64], rmax: f64) -> Vec<(f64, f64)> {
        self.shape.ray_section(v, rmax)
    }
}

/// Line sections for the shapes that admit closed forms.
pub(crate) fn section(shape: &SetShape, x: &[f64], axis: usize) -> Result<Vec<(f64, f64)>> {
    let k = x.len();
    let others = || x.iter().enumerate().filter(move |(j, _)| *j != axis).map(|(_, v)| v.abs());
    Ok(match *shape {
        SetShape::PBall { p, eps } => match p_ball_budget(p, eps, k, others()) {
            Some(h) => alloc::vec![(-h, h)],
            None => Vec::new(),
        },
        SetShape::Cube { a } => {
            if others().fold(0.0, f64::max) <= a {
                alloc::vec![(-a, a)]
            } else {
                Vec::new()
            }
        }
        SetShape::HatB { p, a, eps } => match p_ball_budget(p, eps, k, others().map(|v| (v - a).abs())) {
            Some(h) => shell(a, h),
            None => Vec::new(),
        },
        SetShape::CheckB { p, a, eps } => {
            let mut pieces = Vec::new();
            if let Some(h) = p_ball_budget(p, eps, k, others()) {
                pieces.extend(shell(a, h));
            }
            for i in (0..k).filter(|&i| i != axis) {
                let shifted = x
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != axis)
                    .map(|(j, v)| if j == i { (v.abs() - a).abs() } else { v.abs() });
                if let Some(h) = p_ball_budget(p, eps, k, shifted) {
                    pieces.push((-h, h));
                }
            }
            merge(pieces)
        }
        SetShape::PqBall { .. } => return Err(Error::Unsupported("line sections of (p,q)-balls".into())),
        SetShape::Complement(ref inner) => {
            let iv = section(inner, x, axis)?;
            complement_within(&iv, f64::NEG_INFINITY)
        }
    })
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for SetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::PBall { p, eps } => write!(f, "pball:p={},eps={}", fmt_num(p), fmt_num(eps)),
            Self::PqBall { p, q, eps } => write!(f, "pqball:p={},q={},eps={}", fmt_num(p), fmt_num(q), fmt_num(eps)),
            Self::HatB { p, a, eps } => write!(f, "hatb:p={},a={},eps={}", fmt_num(p), fmt_num(a), fmt_num(eps)),
            Self::CheckB { p, a, eps } => write!(f, "checkb:p={},a={},eps={}", fmt_num(p), fmt_num(a), fmt_num(eps)),
            Self::Cube { a } => write!(f, "cube:a={}", fmt_num(a)),
            Self::Complement(ref inner) => write!(f, "complement({inner})"),
        }
    }
}

fn parse_params(body: &str, keys: &[&str]) -> Result<Vec<f64>> {
    let mut out: Vec<Option<f64>> = alloc::vec![None; keys.len()];
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, val) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, found `{item}`")))?;
        let idx = keys
            .iter()
            .position(|k| *k == key.trim())
            .ok_or_else(|| Error::Parse(format!("unknown parameter `{}`", key.trim())))?;
        if out[idx].is_some() {
            return Err(Error::Parse(format!("duplicate parameter `{key}`")));
        }
        let v = f64::from_str(val.trim()).map_err(|_| Error::Parse(format!("bad number `{}`", val.trim())))?;
        out[idx] = Some(v);
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| Error::Parse(format!("missing parameter `{k}`"))))
        .collect()
}

impl FromStr for SetShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("complement(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse("unbalanced parenthesis in complement(...)".into()))?;
            return Ok(inner.parse::<SetShape>()?.complement());
        }
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `kind:params`, found `{s}`")))?;
        match kind.trim() {
            "pball" => {
                let v = parse_params(body, &["p", "eps"])?;
                Self::p_ball(v[0], v[1])
            }
            "pqball" => {
                let v = parse_params(body, &["p", "q", "eps"])?;
                Self::pq_ball(v[0], v[1], v[2])
            }
            "hatb" => {
                let v = parse_params(body, &["p", "a", "eps"])?;
                Self::hat_b(v[0], v[1], v[2])
            }
            "checkb" => {
                let v = parse_params(body, &["p", "a", "eps"])?;
                Self::check_b(v[0], v[1], v[2])
            }
            "cube" => {
                let v = parse_params(body, &["a"])?;
                Self::cube(v[0])
            }
            other => Err(Error::Parse(format!("unknown set kind `{other}`"))),
        }
    }
}

impl TryFrom<String> for SetShape {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SetShape> for String {
    fn from(s: SetShape) -> Self {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rv(x: &[f64]) -> RealVector {
        RealVector::from_slice(x).unwrap()
    }

    #[test]
    fn membership_examples() {
        let ball = SetSpec::new(SetShape::p_ball(2.0, 1.0).unwrap(), 3).unwrap();
        assert!(ball.contains(&rv(&[1.0, 1.0, 1.0])).unwrap());
        let pq = SetSpec::new(SetShape::pq_ball(2.0, -0.4, 1.0).unwrap(), 2).unwrap();
        for t in [-1e6, -3.0, 0.0, 7.5, 1e9] {
            assert!(pq.contains(&rv(&[t, 0.0])).unwrap());
        }
        let hat = SetShape::hat_b(3.0, 1.5, 0.2).unwrap();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                assert!(hat.contains_slice(&[1.5 * sx, 1.5 * sy]));
            }
        }
        assert!(!hat.contains_slice(&[0.0, 0.0]));
        let chk = SetShape::check_b(1.5, 1.0, 0.45).unwrap();
        assert!(chk.contains_slice(&[0.0, -1.0]));
        assert!(!chk.contains_slice(&[0.0, 0.0]));
    }

    #[test]
    fn line_interval_examples() {
        let ball = SetSpec::new(SetShape::p_ball(2.0, 1.0).unwrap(), 2).unwrap();
        let iv = ball.line_interval(&rv(&[0.0, 0.0]), 0).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].1 - 2f64.sqrt()).abs() < 1e-15 && iv[0].0 == -iv[0].1);
        let cube = SetSpec::new(SetShape::cube(1.0).unwrap(), 3).unwrap();
        assert_eq!(cube.line_interval(&rv(&[0.0, 0.3, -0.9]), 0).unwrap(), vec![(-1.0, 1.0)]);
        let l1 = SetSpec::new(SetShape::p_ball(1.0, 1.0).unwrap(), 2).unwrap();
        assert_eq!(l1.line_interval(&rv(&[9.0, 0.5]), 0).unwrap(), vec![(-1.5, 1.5)]);
        let comp = cube.clone().complement();
        assert_eq!(
            comp.line_interval(&rv(&[0.0, 0.0, 0.0]), 2).unwrap(),
            vec![(f64::NEG_INFINITY, -1.0), (1.0, f64::INFINITY)]
        );
        assert_eq!(comp.line_interval(&rv(&[0.0, 2.0, 0.0]), 2).unwrap(), vec![(f64::NEG_INFINITY, f64::INFINITY)]);
    }

    #[test]
    fn classification_examples() {
        use Schur2Kind::*;
        assert_eq!(SetShape::check_b(1.5, 1.0, 0.45).unwrap().classify().value, Concave);
        assert_eq!(SetShape::pq_ball(0.7, 0.7, 1.0).unwrap().classify().value, NeitherKnown);
        let c = SetShape::p_ball(2.0, 1.0).unwrap().complement().classify();
        assert!(c.is_convex() && c.spherical);
        assert_eq!(SetShape::cube(1.0).unwrap().classify().value, Convex);
        assert_eq!(SetShape::hat_b(4.5, 1.0, 0.9).unwrap().classify().value, Convex);
        assert_eq!(SetShape::p_ball(3.0, 1.0).unwrap().complement().classify().value, Concave);
    }

    #[test]
    fn text_round_trip() {
        for s in [
            "pball:p=2,eps=1",
            "pqball:p=2,q=-0.4,eps=1",
            "hatb:p=4.5,a=1,eps=0.849",
            "checkb:p=1.5,a=1,eps=0.45",
            "cube:a=1",
            "complement(pball:p=3,eps=1)",
            "pball:p=-inf,eps=0.5",
        ] {
            let shape: SetShape = s.parse().unwrap();
            assert_eq!(shape.to_string(), s);
            assert_eq!(shape.to_string().parse::<SetShape>().unwrap(), shape);
        }
        let swapped: SetShape = "pqball:q=2,p=-0.4,eps=1".parse().unwrap();
        assert_eq!(swapped, SetShape::pq_ball(2.0, -0.4, 1.0).unwrap());
        let dbl: SetShape = "complement(complement(cube:a=2))".parse().unwrap();
        assert_eq!(dbl, SetShape::cube(2.0).unwrap());
        assert!("pball:p=2".parse::<SetShape>().is_err());
        assert!("pball:p=2,eps=-1".parse::<SetShape>().is_err());
        assert!("hatb:p=0.5,a=1,eps=1".parse::<SetShape>().is_err());
        assert!("disk:r=1".parse::<SetShape>().is_err());
    }

    #[test]
    fn ray_sections() {
        let d = core::f64::consts::FRAC_1_SQRT_2;
        let ball = SetShape::p_ball(1.0, 1.0).unwrap();
        let s = ball.ray_section(&[d, d], 50.0);
        assert!((s[0].1 - 2f64.sqrt()).abs() < 1e-14);
        let hat = SetShape::hat_b(2.0, 1.0, 0.5).unwrap();
        let s = hat.ray_section(&[d, d], 50.0);
        assert_eq!(s.len(), 1);
        assert!((s[0].0 - (2f64.sqrt() - 0.5 * 2f64.sqrt())).abs() < 1e-12);
        assert!((s[0].1 - (2f64.sqrt() + 0.5 * 2f64.sqrt())).abs() < 1e-12);
        let comp = hat.complement().ray_section(&[d, d], 50.0);
        assert_eq!(comp.len(), 2);
        assert_eq!(comp[1].1, f64::INFINITY);
    }
}
