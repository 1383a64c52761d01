//! Pitman asymptotic relative efficiency of p-mean tests against the
//! 2-mean (likelihood-ratio) test.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gauss_measure::MeasureEngine;
use crate::solvers::{coordinate, diagonal, shift_solution, ShiftSolution, SolveOptions, TestDesign};
use crate::vector::RealVector;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreResult {
    /// `‖s_2‖²/‖s_p‖²`, or 0 when `s_p` does not exist.
    pub are: f64,
    pub s2_norm: f64,
    pub sp_norm: Option<f64>,
    pub design: TestDesign,
    /// Propagated absolute error of `are`.
    pub error: f64,
}

impl AreResult {
    pub fn exists(&self) -> bool {
        self.sp_norm.is_some()
    }
}

fn combine(d: &TestDesign, s2: &ShiftSolution, sp: &ShiftSolution) -> AreResult {
    let s2n = s2.norm.unwrap_or(f64::NAN);
    let t2 = s2.t.unwrap_or(f64::NAN);
    match (sp.t, sp.norm) {
        (Some(tp), Some(spn)) => {
            let are = (s2n / spn) * (s2n / spn);
            let error = are * 2.0 * (s2.solver_error / t2 + sp.solver_error / tp);
            AreResult { are, s2_norm: s2n, sp_norm: Some(spn), design: d.clone(), error }
        }
        _ => AreResult { are: 0.0, s2_norm: s2n, sp_norm: None, design: d.clone(), error: 0.0 },
    }
}

fn solve2(engine: &MeasureEngine<'_>, d: &TestDesign, opts: &SolveOptions) -> Result<ShiftSolution> {
    let s = shift_solution(engine, &d.with_p(2.0), opts)?;
    if !s.exists {
        return Err(Error::invalid("the 2-mean test does not reach the target power"));
    }
    Ok(s)
}

pub fn are(engine: &MeasureEngine<'_>, d: &TestDesign, opts: &SolveOptions) -> Result<AreResult> {
    let s2 = solve2(engine, d, opts)?;
    if d.p == 2.0 {
        return Ok(combine(d, &s2, &s2)).map(|mut r| {
            r.are = 1.0;
            r.error = 0.0;
            r
        });
    }
    let sp = shift_solution(engine, d, opts)?;
    Ok(combine(d, &s2, &sp))
}

/// ARE at the diagonal direction `1` and the coordinate direction `√k·e_1`;
/// every other direction lies between them in the Schur² order.
pub fn are_extremes(
    engine: &MeasureEngine<'_>,
    k: usize,
    p: f64,
    alpha: f64,
    beta: f64,
    opts: &SolveOptions,
) -> Result<(AreResult, AreResult)> {
    let diag = TestDesign::new(k, p, alpha, beta, diagonal(k)?)?;
    let coord = TestDesign::new(k, p, alpha, beta, coordinate(k)?)?;
    Ok((are(engine, &diag, opts)?, are(engine, &coord, opts)?))
}

/// ARE for many designs, fanned out over the engine's executor. Each item
/// runs on a serial engine with the same Monte Carlo settings.
pub fn are_batch(engine: &MeasureEngine<'_>, designs: &[TestDesign], opts: &SolveOptions) -> Vec<Result<AreResult>> {
    let exec: &dyn Executor = engine.executor();
    let (chunk, batch, max) = (engine.mc_chunk, engine.mc_batch, engine.mc_max_samples);
    let encoded = exec.map(designs.len(), &|i| {
        let mut inner = MeasureEngine::default();
        inner.mc_chunk = chunk;
        inner.mc_batch = batch;
        inner.mc_max_samples = max;
        match are(&inner, &designs[i], opts) {
            Ok(r) => alloc::vec![1.0, r.are, r.s2_norm, r.sp_norm.unwrap_or(f64::NAN), r.error],
            Err(_) => alloc::vec![0.0],
        }
    });
    encoded
        .into_iter()
        .zip(designs)
        .map(|(v, d)| {
            if v[0] == 0.0 {
                // rerun serially to recover the error value
                are(engine, d, opts)
            } else {
                Ok(AreResult {
                    are: v[1],
                    s2_norm: v[2],
                    sp_norm: if v[3].is_nan() { None } else { Some(v[3]) },
                    design: d.clone(),
                    error: v[4],
                })
            }
        })
        .collect()
}

/// One point of a direction sweep in the plane.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    /// Angle of `u` from the first axis, in `[0, π/4]`.
    pub angle: f64,
    pub result: AreResult,
}

/// `u = √2·(cos t, sin t)` (so `⟨u⟩_2 = 1`).
pub fn planar_direction(t: f64) -> Result<RealVector> {
    let (s, c) = libm::sincos(t);
    RealVector::new(alloc::vec![core::f64::consts::SQRT_2 * c, core::f64::consts::SQRT_2 * s])
}

/// ARE over `n_angles` equally spaced angles in `[0, π/4]` at `k = 2`; the
/// hypercube symmetry covers all other directions.
pub fn are_direction_sweep(
    engine: &MeasureEngine<'_>,
    p: f64,
    alpha: f64,
    beta: f64,
    n_angles: usize,
    opts: &SolveOptions,
) -> Result<Vec<SweepPoint>> {
    if n_angles < 2 {
        return Err(Error::invalid("a sweep needs at least two angles"));
    }
    let angles: Vec<f64> = (0..n_angles).map(|i| FRAC_PI_4 * i as f64 / (n_angles - 1) as f64).collect();
    let designs = angles
        .iter()
        .map(|&t| TestDesign::new(2, p, alpha, beta, planar_direction(t)?))
        .collect::<Result<Vec<_>>>()?;
    are_batch(engine, &designs, opts)
        .into_iter()
        .zip(angles)
        .map(|(r, angle)| r.map(|result| SweepPoint { angle, result }))
        .collect()
}

/// ARE along paired grids of `alpha` (decreasing) and `beta` (increasing).
pub fn are_limit_trend(
    engine: &MeasureEngine<'_>,
    k: usize,
    p: f64,
    u: &RealVector,
    alphas: &[f64],
    betas: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<AreResult>> {
    if alphas.len() != betas.len() {
        return Err(Error::DimensionMismatch { expected: alphas.len(), found: betas.len() });
    }
    if alphas.windows(2).any(|w| w[1] >= w[0]) || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("alpha grid must decrease and beta grid must increase"));
    }
    let designs =
        alphas.iter().zip(betas).map(|(&a, &b)| TestDesign::new(k, p, a, b, u.clone())).collect::<Result<Vec<_>>>()?;
    are_batch(engine, &designs, opts).into_iter().collect()
}
