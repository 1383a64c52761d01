//! Plot data: planar set boundaries (1), measures of a shifted set (2),
//! efficiency against the exponent (3) and efficiency sectors over
//! directions (4).

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use schur2_core::are_analysis::{are_batch, are_direction_sweep};
use schur2_core::solvers::{coordinate, diagonal, SolveOptions, TestDesign};
use schur2_core::{GaussianShiftQuery, MeasureEngine, RealVector, Result, SetShape, SetSpec};

use crate::output::Table;

/// The nine sets drawn as planar boundary curves.
pub fn panel_sets() -> Result<Vec<SetShape>> {
    let mut sets = [(0.0, -1.0), (2.0, -0.4), (5.0, -1.0), (0.7, 0.7), (2.0, 2.0), (4.0, 1.0), (1.0, 0.0)]
        .into_iter()
        .map(|(p, q)| SetShape::pq_ball(p, q, 1.0))
        .collect::<Result<Vec<_>>>()?;
    sets.push(SetShape::hat_b(4.5, 1.0, 2f64.powf(-1.0 / 4.5) + 0.01)?);
    sets.push(SetShape::check_b(1.5, 1.0, 0.45)?);
    Ok(sets)
}

/// Boundary points of each panel set in the plane, found as the endpoints
/// of the set's sections along `n_angles` rays from the origin, out to
/// radius `extent`.
pub fn figure1(n_angles: usize, extent: f64) -> Result<Table> {
    let mut table = Table::new(&["panel", "set", "angle", "r", "x", "y"]);
    for (panel, shape) in panel_sets()?.into_iter().enumerate() {
        let label = shape.to_string();
        for j in 0..n_angles {
            let angle = TAU * j as f64 / n_angles as f64;
            let (s, c) = angle.sin_cos();
            let ends = shape.ray_section(&[c, s], extent).into_iter().flat_map(|(a, b)| [a, b]);
            for r in ends.filter(|&r| r > 0.0 && r < extent) {
                table.push(vec![(panel + 1).into(), label.clone().into(), angle.into(), r.into(), (r * c).into(), (r * s).into()]);
            }
        }
    }
    Ok(table)
}

/// Measures of the `(2, −0.4)`-ball shifted to radius `r` at angles `π/5`
/// and `π/20`, for each radius in `radii`.
pub fn figure2(engine: &MeasureEngine<'_>, radii: &[f64], target: f64, seed: u64) -> Result<Table> {
    let set = SetSpec::new(SetShape::pq_ball(2.0, -0.4, 1.0)?, 2)?;
    let mut table = Table::new(&["radius", "angle", "value", "abs_error", "rel_error", "method"]);
    for &radius in radii {
        for angle in [PI / 5.0, PI / 20.0] {
            let shift = RealVector::new(vec![radius * angle.cos(), radius * angle.sin()])?;
            let q = GaussianShiftQuery::new(set.clone(), shift)?.with_target(target)?.with_seed(seed);
            let m = engine.measure(&q)?;
            table.push(vec![
                radius.into(),
                angle.into(),
                m.value.into(),
                m.abs_error.into(),
                m.rel_error.into(),
                m.method.as_str().into(),
            ]);
        }
    }
    Ok(table)
}

/// `ψ(x) = 2x/(2|x| + 3)`, mapping the real line onto `(−1, 1)`.
pub fn psi(x: f64) -> f64 {
    if x.is_infinite() {
        return x.signum();
    }
    2.0 * x / (2.0 * x.abs() + 3.0)
}

/// Inverse of [`psi`] on `[−1, 1]`.
pub fn psi_inv(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return y.signum() * f64::INFINITY;
    }
    3.0 * y / (2.0 * (1.0 - y.abs()))
}

/// The exponents `p = 4ψ⁻¹(y)` for `n` equally spaced `y` in `[−1, 1]`.
pub fn figure3_exponents(n: usize) -> Vec<f64> {
    (0..n).map(|i| 4.0 * psi_inv(-1.0 + 2.0 * i as f64 / (n - 1) as f64)).collect()
}

/// ARE against p for the diagonal and coordinate directions, with both axes
/// also given on the ψ scale.
pub fn figure3(engine: &MeasureEngine<'_>, k: usize, n_p: usize, alpha: f64, beta: f64, opts: &SolveOptions) -> Result<Table> {
    let ps = figure3_exponents(n_p.max(2));
    let directions = [("diagonal", diagonal(k)?), ("coordinate", coordinate(k)?)];
    let mut designs = Vec::with_capacity(2 * ps.len());
    for (_, u) in &directions {
        for &p in &ps {
            designs.push(TestDesign::new(k, p, alpha, beta, u.clone())?);
        }
    }
    let results = are_batch(engine, &designs, opts);
    let mut table = Table::new(&["direction", "p", "psi_p", "are", "abs_error", "exists", "psi_are"]);
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        let name = directions[i / ps.len()].0;
        let p = r.design.p;
        table.push(vec![
            name.into(),
            p.into(),
            psi(p / 4.0).into(),
            r.are.into(),
            r.error.into(),
            r.exists().into(),
            psi(r.are).into(),
        ]);
    }
    Ok(table)
}

/// ARE of two exponents over the full circle of planar directions, sampled
/// at `8·m` equally spaced angles. Only the `m + 1` angles in `[0, π/4]` are
/// solved; the rest follow from the symmetries of the square.
pub fn figure4(engine: &MeasureEngine<'_>, p: f64, q: f64, m: usize, alpha: f64, beta: f64, opts: &SolveOptions) -> Result<Table> {
    let m = m.max(1);
    let sweep_p = are_direction_sweep(engine, p, alpha, beta, m + 1, opts)?;
    let sweep_q = are_direction_sweep(engine, q, alpha, beta, m + 1, opts)?;
    let mut table = Table::new(&["angle", "are_p", "are_q", "p_above_one", "q_above_one", "both_at_most_one"]);
    for i in 0..8 * m {
        let mut j = i % (2 * m);
        if j > m {
            j = 2 * m - j;
        }
        debug_assert!((sweep_p[j].angle - FRAC_PI_4 * j as f64 / m as f64).abs() < 1e-12);
        let (a, b) = (sweep_p[j].result.are, sweep_q[j].result.are);
        table.push(vec![
            (TAU * i as f64 / (8 * m) as f64).into(),
            a.into(),
            b.into(),
            (a > 1.0).into(),
            (b > 1.0).into(),
            (a <= 1.0 && b <= 1.0).into(),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_round_trip() {
        for y in [-0.9, -0.3, 0.0, 0.5, 0.99] {
            assert!((psi(psi_inv(y)) - y).abs() < 1e-14);
        }
        assert_eq!(psi(f64::INFINITY), 1.0);
        assert_eq!(psi_inv(-1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn nine_panels_with_boundaries() {
        assert_eq!(panel_sets().unwrap().len(), 9);
        let t = figure1(72, 3.0).unwrap();
        for panel in 1..=9i64 {
            assert!(t.rows.iter().any(|r| matches!(r[0], crate::output::Cell::Int(i) if i == panel)));
        }
    }
}
