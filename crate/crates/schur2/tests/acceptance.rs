//! Acceptance checks for the library and the command-line tool. Each check
//! prints one PASS/FAIL line; the process exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{rngs::StdRng, Rng, SeedableRng};
use rand_distr::StandardNormal;
use schur2::RayonExecutor;
use schur2_core::are_analysis::{are, are_limit_trend};
use schur2_core::solvers::{
    coordinate, critical_value, diagonal, power, shift_solution, unit_direction, SolveOptions, TestDesign,
};
use schur2_core::verify::{
    chain_shift_pairs, check_rotation_monotonicity, check_schur2_monotonicity, empirical_power, membership_test,
    run_counterexample, CounterexampleConfig, EmpiricalDesign, Population, VerifyOptions, SLACK, STRICT_GAP,
};
use schur2_core::{GaussianShiftQuery, MeasureEngine, Method, RealVector, SetShape, SetSpec};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rv(x: &[f64]) -> RealVector {
    RealVector::from_slice(x).unwrap()
}

fn near_and_far_query(radius: f64, angle: f64) -> GaussianShiftQuery {
    let set = SetSpec::new(SetShape::pq_ball(2.0, -0.4, 1.0).unwrap(), 2).unwrap();
    GaussianShiftQuery::new(set, rv(&[radius * angle.cos(), radius * angle.sin()])).unwrap()
}

fn near_shift_measures(engine: &MeasureEngine<'_>) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (angle, want) in [(PI / 5.0, 0.5250), (PI / 20.0, 0.5268)] {
        let start = Instant::now();
        let q = near_and_far_query(1.0, angle).with_method(Method::Polar2d).with_target(1e-6).unwrap();
        let m = engine.measure(&q).unwrap();
        let took = start.elapsed();
        ok &= (m.value - want).abs() <= 0.0005 && took < Duration::from_secs(10) && m.method == Method::Polar2d;
        parts.push(format!("{:.6} (want {want}, {took:.1?})", m.value));
    }
    outcome(ok, parts.join(", "))
}

fn far_shift_measures(engine: &MeasureEngine<'_>) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (angle, want) in [(PI / 5.0, 1.5e-14), (PI / 20.0, 1.4e-6)] {
        let start = Instant::now();
        let m = engine.measure(&near_and_far_query(11.0, angle).with_target(1e-4).unwrap()).unwrap();
        let took = start.elapsed();
        let ratio = m.value / want;
        ok &= (1.0 / 1.5..=1.5).contains(&ratio)
            && took < Duration::from_secs(60)
            && matches!(m.method, Method::Polar2d | Method::McImportance);
        parts.push(format!("{:.4e} via {} (ratio {ratio:.3}, {took:.1?})", m.value, m.method));
    }
    outcome(ok, parts.join(", "))
}

fn are_goldens(engine: &MeasureEngine<'_>) -> Outcome {
    let opts = SolveOptions::default();
    let run = |p: f64, u: RealVector| are(engine, &TestDesign::new(2, p, 0.05, 0.95, u).unwrap(), &opts).unwrap();
    let one = run(1.0, diagonal(2).unwrap());
    let inf = run(f64::INFINITY, coordinate(2).unwrap());
    let p21 = run(2.1, coordinate(2).unwrap());
    let p19 = run(1.9, diagonal(2).unwrap());
    let ok = (one.are - 1.0317).abs() <= 0.003
        && (inf.are - one.are).abs() <= inf.error + one.error
        && (p21.are - 1.00429).abs() <= 0.003
        && (p19.are - 1.00459).abs() <= 0.003;
    outcome(
        ok,
        format!(
            "p=1 diag {:.7}, p=inf coord {:.7} (|diff| {:.1e} vs error {:.1e}), p=2.1 coord {:.7}, p=1.9 diag {:.7}",
            one.are,
            inf.are,
            (inf.are - one.are).abs(),
            inf.error + one.error,
            p21.are,
            p19.are
        ),
    )
}

/// `P(χ²_k > x)` from the finite sums for integer degrees of freedom.
fn chi2_sf(k: usize, x: f64) -> f64 {
    let h = x / 2.0;
    if k.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..k / 2 {
            term *= h / j as f64;
            sum += term;
        }
        (-h).exp() * sum
    } else {
        let mut term = (2.0 * x / PI).sqrt() * (-h).exp();
        let mut sum = 0.0;
        for j in 0..(k - 1) / 2 {
            sum += term;
            term *= x / (2 * j + 3) as f64;
        }
        libm::erfc(h.sqrt()) + sum
    }
}

fn chi2_isf(k: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(k, mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn chi_square_oracle(engine: &MeasureEngine<'_>) -> Outcome {
    let opts = SolveOptions::default();
    let mut worst = 0.0f64;
    for k in 1..=6 {
        for alpha in [0.1, 0.05, 0.01] {
            let c = critical_value(engine, k, 2.0, alpha, &opts).unwrap().c;
            let want = (chi2_isf(k, alpha) / k as f64).sqrt();
            worst = worst.max((c - want).abs());
        }
    }
    outcome(worst <= 1e-8, format!("max |c - c_oracle| = {worst:.2e} over 18 cases"))
}

fn monotonicity_suites(engine: &MeasureEngine<'_>) -> Outcome {
    let opts = VerifyOptions::default();
    let families = [SetShape::cube(1.0).unwrap(), SetShape::p_ball(1.0, 1.0).unwrap(), SetShape::p_ball(3.0, 1.0).unwrap()];
    let shapes: Vec<SetShape> = families.iter().cloned().chain(families.iter().cloned().map(SetShape::complement)).collect();
    let grid: Vec<f64> = (0..9).map(|i| FRAC_PI_4 * i as f64 / 8.0).collect();
    let mut rotation_runs = 0;
    let mut rotation_violations = 0;
    for shape in &shapes {
        let set = SetSpec::new(shape.clone(), 2).unwrap();
        for r in [1.0, 2.0, 4.0] {
            let rep = check_rotation_monotonicity(engine, &set, r, &grid, &opts).unwrap();
            rotation_runs += 1;
            rotation_violations += rep.violations;
        }
    }
    let profiles = [(vec![4.0, 0.0, 0.0], vec![4.0 / 3.0; 3]), (vec![3.0, 1.0, 0.0], vec![2.0, 1.0, 1.0])];
    let mut chain_runs = 0;
    let mut chain_pairs = 0;
    let mut chain_violations = 0;
    let mut chain_failed = 0;
    for shape in &shapes {
        let set = SetSpec::new(shape.clone(), 3).unwrap();
        for (a, b) in &profiles {
            let pairs = chain_shift_pairs(&rv(a), &rv(b)).unwrap();
            let rep = check_schur2_monotonicity(engine, &set, &pairs, &opts).unwrap();
            chain_runs += 1;
            chain_pairs += pairs.len();
            chain_violations += rep.violations;
            chain_failed += usize::from(!rep.passed);
        }
    }
    outcome(
        rotation_violations == 0 && chain_violations == 0 && chain_failed == 0,
        format!(
            "rotation: {rotation_runs} arcs, {rotation_violations} violations; chains: {chain_runs} runs, {chain_pairs} pairs, \
             {chain_violations} violations, {chain_failed} without a strict gap"
        ),
    )
}

fn counterexample() -> Outcome {
    let cfg = CounterexampleConfig::new(2, 0.15).unwrap();
    let r = run_counterexample(&cfg, &schur2_core::Serial, 0, 0).unwrap();
    let contained = 4.0 / (PI * r.big_r * r.big_r);
    let gap = r.p_x0 - r.p_x1;
    let error = r.p_x0_error + r.p_x1_error;
    let ok = (r.big_r - 3.41).abs() <= 0.01
        && (r.r - 2.26).abs() <= 0.01
        && gap > STRICT_GAP * error
        && (r.p_x0 - contained).abs() <= 1e-12
        && r.containment_residual.abs() <= 1e-12;
    outcome(
        ok,
        format!(
            "R = {:.4}, r = {:.4}, P(x0) = {:.6} (4/(pi R^2) = {contained:.6}), P(x1) = {:.6}, gap {gap:.2e} vs error {error:.1e}",
            r.big_r, r.r, r.p_x0, r.p_x1
        ),
    )
}

fn are_trend(engine: &MeasureEngine<'_>) -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let alphas = [1e-2, 1e-3, 1e-4];
    let betas = alphas.map(|a| 1.0 - a);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1.0, f64::INFINITY] {
        for (name, u) in [("diag", diagonal(2).unwrap()), ("coord", coordinate(2).unwrap())] {
            let seq = are_limit_trend(engine, 2, p, &u, &alphas, &betas, &opts).unwrap();
            ok &= seq.iter().all(|r| r.exists());
            let peak = (0..seq.len()).max_by(|&i, &j| seq[i].are.total_cmp(&seq[j].are)).unwrap();
            let falling = seq[peak..].windows(2).all(|w| w[1].are <= w[0].are + w[0].error + w[1].error);
            let last = seq.last().unwrap();
            ok &= falling && last.are <= 1.05 + last.error;
            let values: Vec<String> = seq.iter().map(|r| format!("{:.5}", r.are)).collect();
            parts.push(format!("p={p} {name} [{}]", values.join(", ")));
        }
    }
    let took = start.elapsed();
    ok &= took < Duration::from_secs(120);
    outcome(ok, format!("{} ({took:.1?})", parts.join("; ")))
}

fn power_monotone(engine: &MeasureEngine<'_>) -> Outcome {
    let opts = SolveOptions { quad_target: 1e-8, ..SolveOptions::default() };
    let mut rng = StdRng::seed_from_u64(20);
    let mut curves = 0;
    let mut steps = 0;
    let mut bad = Vec::new();
    for k in [2, 3] {
        for p in [f64::NEG_INFINITY, 0.0, 1.0, 2.0, 3.0, f64::INFINITY] {
            let c = critical_value(engine, k, p, 0.05, &opts).unwrap().c;
            for _ in 0..3 {
                let raw: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                let u = unit_direction(&rv(&raw)).unwrap();
                let curve: Vec<_> = (0..20)
                    .map(|i| power(engine, p, c, &u.scaled(0.25 * i as f64), &opts).unwrap())
                    .collect();
                curves += 1;
                for (i, w) in curve.windows(2).enumerate() {
                    steps += 1;
                    if w[1].value <= w[0].value - SLACK * (w[0].abs_error + w[1].abs_error) {
                        bad.push(format!("k={k} p={p} step {i}"));
                    }
                }
                let (first, last) = (&curve[0], &curve[19]);
                if last.value - first.value <= STRICT_GAP * (first.abs_error + last.abs_error) {
                    bad.push(format!("k={k} p={p} flat curve"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{curves} curves, {steps} steps, problems: {bad:?}"))
}

fn classification_vs_sampling() -> Outcome {
    let sets: Vec<(SetShape, usize)> = vec![
        (SetShape::p_ball(1.0, 1.0).unwrap(), 3),
        (SetShape::p_ball(3.0, 1.0).unwrap(), 3),
        (SetShape::p_ball(0.0, 0.8).unwrap(), 2),
        (SetShape::p_ball(2.0, 1.0).unwrap(), 3),
        (SetShape::pq_ball(5.0, -1.0, 1.0).unwrap(), 2),
        (SetShape::pq_ball(0.7, 0.7, 1.0).unwrap(), 2),
        (SetShape::pq_ball(2.0, -0.4, 1.0).unwrap(), 2),
        (SetShape::pq_ball(4.0, 1.0, 1.0).unwrap(), 3),
        (SetShape::cube(1.0).unwrap(), 3),
        (SetShape::hat_b(3.0, 1.0, 0.8).unwrap(), 2),
        (SetShape::check_b(1.5, 1.0, 0.6).unwrap(), 2),
        (SetShape::p_ball(3.0, 1.0).unwrap().complement(), 3),
    ];
    let mut disagreements = Vec::new();
    for (i, (shape, k)) in sets.iter().enumerate() {
        let set = SetSpec::new(shape.clone(), *k).unwrap();
        let rep = membership_test(&set, 100_000, 1.0, i as u64);
        if !rep.agrees() {
            disagreements.push(format!(
                "{shape} ({:?}: {} convex / {} concave violations)",
                rep.character.value, rep.convex_violations, rep.concave_violations
            ));
        }
    }
    outcome(disagreements.is_empty(), format!("{} sets, disagreements: {disagreements:?}", sets.len()))
}

fn empirical_calibration(engine: &MeasureEngine<'_>) -> Outcome {
    let opts = SolveOptions::default();
    let (n, reps, alpha, beta) = (400, 10_000, 0.05, 0.95);
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (k, p)) in [(2, 1.0), (2, 3.0), (3, f64::INFINITY)].into_iter().enumerate() {
        let d = TestDesign::new(k, p, alpha, beta, diagonal(k).unwrap()).unwrap();
        let s = shift_solution(engine, &d, &opts).unwrap();
        let t = s.t.expect("a shift exists along the diagonal");
        let base = EmpiricalDesign {
            n,
            p,
            c: s.critical.c,
            population: Population::Gaussian,
            theta: RealVector::zeros(k).unwrap(),
            replications: reps,
            seed: 100 + i as u64,
        };
        let size = empirical_power(&base, engine.executor()).unwrap();
        let shifted = EmpiricalDesign { theta: d.u.scaled(t / (n as f64).sqrt()), seed: 200 + i as u64, ..base };
        let pw = empirical_power(&shifted, engine.executor()).unwrap();
        let se = |q: f64| (q * (1.0 - q) / reps as f64).sqrt();
        let good = (size.rate - alpha).abs() <= 3.0 * se(alpha) && (pw.rate - beta).abs() <= 3.0 * se(beta);
        ok &= good;
        parts.push(format!("(k={k}, p={p}) size {:.4} power {:.4}", size.rate, pw.rate));
    }
    outcome(ok, parts.join("; "))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_schur2")).args(args).env_remove("SCHUR2_WORKERS").output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 4] = [
        &["measure", "--set", "pball:p=3,eps=1", "--shift", "0.3,0.2,0.1,0.5,0.4", "--target", "3e-3", "--seed", "7"],
        &[
            "measure", "--set", "pqball:p=2,q=-0.4,eps=1", "--shift", "1.5,0.4", "--method", "MC_IMPORTANCE", "--target",
            "5e-3", "--seed", "11",
        ],
        &["verify", "counterexample", "--k", "3", "--eps", "0.15", "--samples", "300000", "--seed", "5", "--format", "csv"],
        &[
            "verify", "power", "--k", "2", "--p", "1", "--u", "1,1", "--n", "50", "--replications", "2000", "--seed", "3",
        ],
    ];
    let mut mismatches = Vec::new();
    for args in commands {
        let single = run_cli(&[&["--workers", "1"], args].concat());
        let multi = run_cli(&[&["--workers", "4"], args].concat());
        if single != multi || single.1.is_empty() {
            mismatches.push(args.join(" "));
        }
    }
    let reseeded = run_cli(&["measure", "--set", "pball:p=3,eps=1", "--shift", "0.3,0.2,0.1,0.5,0.4", "--target", "3e-3", "--seed", "8"]);
    let original = run_cli(&["measure", "--set", "pball:p=3,eps=1", "--shift", "0.3,0.2,0.1,0.5,0.4", "--target", "3e-3", "--seed", "7"]);
    let seed_matters = reseeded.1 != original.1;
    outcome(
        mismatches.is_empty() && seed_matters,
        format!("4 Monte Carlo commands at 1 and 4 workers, mismatches: {mismatches:?}; output depends on seed: {seed_matters}"),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let exec = RayonExecutor::new(0).expect("thread pool");
    let engine = MeasureEngine::new(&exec);
    let checks: Vec<(&str, Check<'_>)> = vec![
        ("(2,-0.4)-ball measures at radius 1", Box::new(|| near_shift_measures(&engine))),
        ("(2,-0.4)-ball measures at radius 11", Box::new(|| far_shift_measures(&engine))),
        ("ARE golden values", Box::new(|| are_goldens(&engine))),
        ("chi-square critical values", Box::new(|| chi_square_oracle(&engine))),
        ("monotonicity suites", Box::new(|| monotonicity_suites(&engine))),
        ("uniform-ball counterexample", Box::new(counterexample)),
        ("ARE trend as alpha -> 0", Box::new(|| are_trend(&engine))),
        ("power increases along rays", Box::new(|| power_monotone(&engine))),
        ("classification vs sampling", Box::new(classification_vs_sampling)),
        ("empirical size and power", Box::new(|| empirical_calibration(&engine))),
        ("determinism across workers", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!result.passed);
        println!("criterion {:>2} {verdict} {name} ({:.1?}): {}", i + 1, start.elapsed(), result.detail);
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
