//! Normal, gamma and chi-square distribution functions.
#![allow(clippy::excessive_precision)]

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::roots::brent;

/// `Φ(x)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 − Φ(x)`, accurate in the upper tail.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// `Φ(hi) − Φ(lo)` without cancellation in either tail.
pub fn norm_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else if hi <= 0.0 {
        norm_cdf(hi) - norm_cdf(lo)
    } else {
        1.0 - norm_cdf(lo) - norm_sf(hi)
    }
}

/// `Φ⁻¹(p)` by Wichura's AS 241 (PPND16), accurate to about 1e-16.
pub fn norm_ppf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = libm::sqrt(-libm::log(r));
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// `Φ⁻¹(1 − s)` for a small upper-tail mass `s`.
pub fn norm_isf(s: f64) -> f64 {
    -norm_ppf(s)
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;

/// Regularized lower and upper incomplete gamma functions `(P(a,x), Q(a,x))`.
pub fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = -x + a * libm::log(x) - libm::lgamma(a);
    if x < a + 1.0 {
        // series for P
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        let p = sum * libm::exp(log_prefactor);
        (p.min(1.0), (1.0 - p).max(0.0))
    } else {
        // modified Lentz continued fraction for Q
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let q = libm::exp(log_prefactor) * h;
        ((1.0 - q).max(0.0), q.min(1.0))
    }
}

pub fn chi2_cdf(x: f64, k: f64) -> f64 {
    gamma_pq(0.5 * k, 0.5 * x).0
}

pub fn chi2_sf(x: f64, k: f64) -> f64 {
    gamma_pq(0.5 * k, 0.5 * x).1
}

/// Upper quantile: the `x` with `P(χ²_k > x) = alpha`.
pub fn chi2_isf(alpha: f64, k: f64) -> f64 {
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    if alpha >= 1.0 {
        return 0.0;
    }
    let mut hi = k.max(1.0);
    while chi2_sf(hi, k) > alpha {
        hi *= 2.0;
    }
    let target = libm::log(alpha);
    let f = |x: f64| {
        let (p, q) = gamma_pq(0.5 * k, 0.5 * x);
        // compare on the smaller tail to keep relative precision
        if q < 0.5 {
            libm::log(q) - target
        } else {
            libm::log1p(-p) - target
        }
    };
    brent(f, 0.0, hi, 1e-15 * hi, 400).root
}

fn poisson_log_weight(j: usize, mu: f64) -> f64 {
    if mu == 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    j as f64 * libm::log(mu) - mu - libm::lgamma(j as f64 + 1.0)
}

/// Noncentral chi-square `(cdf, sf)` at `x` with `k` degrees of freedom and
/// noncentrality `lambda`, as a Poisson(λ/2) mixture of central laws summed
/// outward from the mode.
pub fn ncx2_cdf_sf(x: f64, k: f64, lambda: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if lambda <= 0.0 {
        let (p, q) = gamma_pq(0.5 * k, 0.5 * x);
        return (p, q);
    }
    let mu = 0.5 * lambda;
    let mode = libm::floor(mu) as usize;
    let mut cdf = 0.0;
    let mut sf = 0.0;
    // downward from the mode: the weights left below j sum to at most
    // w_j · (j/μ)/(1 − j/μ)
    let mut j = mode;
    loop {
        let w = libm::exp(poisson_log_weight(j, mu));
        let (p, q) = gamma_pq(0.5 * k + j as f64, 0.5 * x);
        cdf += w * p;
        sf += w * q;
        if j == 0 || w == 0.0 {
            break;
        }
        let ratio = j as f64 / mu;
        let rest = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if rest <= 1e-17 * cdf && rest * q <= 1e-17 * sf {
            break;
        }
        j -= 1;
    }
    // upward: the weights left above j sum to at most w_j · r/(1 − r) with
    // r = μ/(j + 1)
    let mut j = mode + 1;
    loop {
        let w = libm::exp(poisson_log_weight(j, mu));
        let (p, q) = gamma_pq(0.5 * k + j as f64, 0.5 * x);
        cdf += w * p;
        sf += w * q;
        let ratio = mu / (j + 1) as f64;
        let rest = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if (rest * p <= 1e-17 * cdf && rest <= 1e-17 * sf) || w == 0.0 || j > mode + 1_000_000 {
            break;
        }
        j += 1;
    }
    (cdf.min(1.0), sf.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_reference_values() {
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_sf(5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
        assert!((norm_interval(-1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-15);
        let tiny = norm_interval(8.0, 9.0);
        assert!((tiny / (norm_sf(8.0) - norm_sf(9.0)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ppf_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-5, 0.01, 0.3, 0.5, 0.7, 0.975, 1.0 - 1e-12] {
            let x = norm_ppf(p);
            let back = if x < 0.0 { norm_cdf(x) } else { 1.0 - norm_sf(x) };
            assert!((back - p).abs() <= 1e-14 * p.max(1e-300) + 4e-16, "p={p}");
        }
        assert!((norm_ppf(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
    }

    #[test]
    fn gamma_reference() {
        // P(1, x) = 1 - e^{-x}
        for &x in &[0.1, 1.0, 3.0, 30.0] {
            let (p, q) = gamma_pq(1.0, x);
            assert!((q - libm::exp(-x)).abs() < 1e-15 * libm::exp(-x).max(1e-300) + 1e-17);
            assert!((p + q - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn chi2_two_dof_closed_form() {
        // P(χ²₂ > x) = e^{-x/2}
        for &x in &[0.5, 2.0, 10.0, 60.0] {
            assert!((chi2_sf(x, 2.0) / libm::exp(-x / 2.0) - 1.0).abs() < 1e-13);
        }
        let x = chi2_isf(0.05, 2.0);
        assert!((x - 2.0 * libm::log(20.0)).abs() < 1e-12);
    }

    #[test]
    fn noncentral_reduces_to_central_and_sums_to_one() {
        let (c, s) = ncx2_cdf_sf(3.0, 3.0, 0.0);
        assert!((c - chi2_cdf(3.0, 3.0)).abs() < 1e-15 && (c + s - 1.0).abs() < 1e-15);
        for &(x, k, l) in &[(1.0, 2.0, 0.5), (10.0, 3.0, 8.0), (40.0, 2.0, 60.0), (0.2, 5.0, 30.0)] {
            let (c, s) = ncx2_cdf_sf(x, k, l);
            assert!((c + s - 1.0).abs() < 1e-13, "{x} {k} {l}: {c} {s}");
        }
    }

    #[test]
    fn noncentral_one_dof_matches_normal_interval() {
        // χ'²₁(λ) ≤ x  ⇔  |Z + √λ| ≤ √x
        for &(x, l) in &[(1.0, 0.3), (4.0, 9.0), (0.5, 25.0), (30.0, 2.0)] {
            let (c, s) = ncx2_cdf_sf(x, 1.0, l);
            let r = libm::sqrt(x);
            let m = libm::sqrt(l);
            let exact = norm_interval(-r - m, r - m);
            assert!((c - exact).abs() < 1e-13 * exact.max(1e-300) + 1e-16, "{x} {l}: {c} vs {exact}");
            assert!((s - (1.0 - exact)).abs() < 1e-13);
        }
    }
}
