//! Bracketing root finders.

/// Result of a bracketing solve: `root` lies in `[lo, hi]` and `f` changes
/// sign (or vanishes) across the bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Brent–Dekker: bisection safeguarded inverse quadratic / secant steps.
///
/// `f(lo)` and `f(hi)` must not share a strict sign. Stops once the bracket
/// is narrower than `2·xtol` (plus a few ulps) or `f` hits zero exactly.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Bracket {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Bracket { root: a, lo: a, hi: a, iterations: 0 };
    }
    if fb == 0.0 {
        return Bracket { root: b, lo: b, hi: b, iterations: 0 };
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for it in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            let (l, h) = if b < c { (b, c) } else { (c, b) };
            return Bracket { root: b, lo: l, hi: h, iterations: it };
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else if m > 0.0 { tol } else { -tol };
        fb = f(b);
    }
    let (l, h) = if b < c { (b, c) } else { (c, b) };
    Bracket { root: b, lo: l, hi: h, iterations: max_iter }
}

/// Plain bisection; robust when `f` is noisy (Monte Carlo estimates).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Bracket {
    let (mut a, mut b) = (lo, hi);
    let fa = f(a);
    let mut it = 0;
    while b - a > xtol && it < max_iter {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Bracket { root: m, lo: m, hi: m, iterations: it };
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        it += 1;
    }
    Bracket { root: 0.5 * (a + b), lo: a, hi: b, iterations: it }
}
