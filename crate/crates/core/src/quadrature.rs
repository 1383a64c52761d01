//! Adaptive Gauss–Kronrod integration and Gauss–Hermite nodes.
#![allow(clippy::excessive_precision)]

use alloc::vec::Vec;
use core::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 400 }
    }

    pub const fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// One 15-point Kronrod panel. The integrand returns `(value, error)` so that
/// nested integrals can pass their own error estimates outward.
fn gk15<F: FnMut(f64) -> (f64, f64)>(f: &mut F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ec) = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut inner = WGK[7] * ec;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, e1) = f(c - dx);
        let (f2, e2) = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        inner += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs() + inner * h.abs();
    Piece { a, b, value, error }
}

/// Adaptive Gauss–Kronrod (7/15) integration of a plain integrand.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    integrate_with_error(|x| (f(x), 0.0), a, b, tol)
}

/// Like [`integrate`] over consecutive breakpoints `pts[0] < pts[1] < …`.
pub fn integrate_pieces<F: FnMut(f64) -> (f64, f64)>(mut f: F, pts: &[f64], tol: Tolerance) -> Integral {
    let mut pieces: Vec<Piece> = Vec::new();
    let mut evaluations = 0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            pieces.push(gk15(&mut f, w[0], w[1]));
            evaluations += 15;
        }
    }
    refine(&mut f, pieces, evaluations, tol)
}

/// Adaptive integration where the integrand also reports its own absolute
/// error; those errors are integrated alongside the value.
pub fn integrate_with_error<F: FnMut(f64) -> (f64, f64)>(f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    integrate_pieces(f, &[a, b], tol)
}

fn refine<F: FnMut(f64) -> (f64, f64)>(f: &mut F, mut pieces: Vec<Piece>, mut evaluations: usize, tol: Tolerance) -> Integral {
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let goal = tol.abs.max(tol.rel * value.abs());
        if error <= goal || pieces.is_empty() {
            return Integral { value, error, evaluations, converged: true };
        }
        if pieces.len() >= tol.max_intervals {
            return Integral { value, error, evaluations, converged: false };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval cannot be split further in floating point
            return Integral { value, error, evaluations, converged: false };
        }
        pieces.push(gk15(f, p.a, m));
        pieces.push(gk15(f, m, p.b));
        evaluations += 30;
    }
}

/// Logistic substitution `x = a + (b − a)/(1 + e^{−s})`, `s ∈ [−span, span]`,
/// which clusters nodes at both endpoints of `[a, b]`.
pub fn logistic_map(a: f64, b: f64, s: f64) -> (f64, f64) {
    let e = libm::exp(-s.abs());
    let sig = if s >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    let jac = (b - a) * e / ((1.0 + e) * (1.0 + e));
    (a + (b - a) * sig, jac)
}

/// Gauss–Hermite nodes and weights for the weight `e^{−x²}`, ascending,
/// from the eigen-decomposition of the Jacobi matrix (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = alloc::vec![0.0; n];
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { libm::sqrt((i + 1) as f64 / 2.0) } else { 0.0 }).collect();
    // first components of the eigenvectors
    let mut z = alloc::vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    tridiagonal_ql(&mut d, &mut e, &mut z);
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, libm::sqrt(PI) * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // the rule is symmetric; enforce it exactly
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - i].0 - pairs[i].0);
        let w = 0.5 * (pairs[n - 1 - i].1 + pairs[i].1);
        pairs[i] = (-x, w);
        pairs[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, sub-diagonal
/// `e[0..n-1]`), applying the rotations to the row vector `z` only.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l || iter >= 60 {
                break;
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_smooth_and_kinked() {
        let r = integrate(libm::sin, 0.0, PI, Tolerance::new(1e-14, 1e-14));
        assert!((r.value - 2.0).abs() < 1e-13 && r.converged);
        let r = integrate(|x: f64| x.abs(), -1.0, 2.0, Tolerance::new(1e-12, 1e-12));
        assert!((r.value - 2.5).abs() < 1e-11);
        let r = integrate(libm::sqrt, 0.0, 1.0, Tolerance::new(1e-12, 1e-12));
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn logistic_map_covers_interval() {
        let r = integrate(
            |s| {
                let (x, j) = logistic_map(1.0, 3.0, s);
                x * x * j
            },
            -40.0,
            40.0,
            Tolerance::new(1e-13, 1e-13),
        );
        assert!((r.value - 26.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn hermite_moments() {
        for n in [1usize, 2, 5, 32, 64, 128, 512] {
            let (x, w) = gauss_hermite(n);
            let s0: f64 = w.iter().sum();
            assert!((s0 - libm::sqrt(PI)).abs() < 1e-12, "n={n} s0={s0}");
            if n >= 2 {
                let s2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
                assert!((s2 - 0.5 * libm::sqrt(PI)).abs() < 1e-12, "n={n}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
