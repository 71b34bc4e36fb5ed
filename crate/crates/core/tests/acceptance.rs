//! Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
//! as arguments to run a subset.

use std::time::Instant;

use hessian_visc::axioms::check_f_axioms;
use hessian_visc::bellman::{bellman_inf, build_control_set, detect_outside_cone, random_interior_matrix, standard_frames, FrameSet};
use hessian_visc::grid::{abs2, rasterize_domain, DomainGrid, GridFunction, Shape};
use hessian_visc::hermitian::random_unitary;
use hessian_visc::rhs::{AffineInR, ConstantSource};
use hessian_visc::solver::{
    approximate_subsolution_sequence, decreasing_solution_sequence, perron_envelope, solve_dirichlet, SequenceConfig,
    SolverConfig,
};
use hessian_visc::verify::{check_subsolution, convex_combination, glue_max, pointwise_max};
use hessian_visc::{operator_eval, Error, HermitianMatrix, OperatorSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn ball(n: usize, r: f64, h: f64) -> DomainGrid {
    rasterize_domain(Shape::ball(vec![0.0; 2 * n], r).unwrap(), h).unwrap()
}

fn ma(n: usize) -> OperatorSpec {
    OperatorSpec::monge_ampere(n).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut specs = Vec::new();
    for n in 1..=3 {
        specs.push(ma(n));
        for k in 1..=n {
            specs.push(OperatorSpec::hessian(k, n).unwrap());
        }
    }
    for n in 2..=3 {
        specs.push(OperatorSpec::quotient(2, 1, n).unwrap());
    }
    let base = specs.clone();
    specs.extend(base.into_iter().map(|s| OperatorSpec::saturated(s).unwrap()));
    let mut violations = 0;
    let mut failing = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let report = check_f_axioms(spec, 1000, 1000 + i as u64).unwrap();
        if !report.passed() {
            violations += report.violations.len();
            failing.push(spec.to_string());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 10.0,
        format!("{} families x 1000 samples, {violations} violations {failing:?}, {secs:.2} s (limit 10 s)", specs.len()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let resolutions = [2, 4, 8, 16, 32];
    let mut problems = Vec::new();
    let mut worst_rel_gap = 0.0f64;
    let mut detected = 0;
    let specs = [ma(2), OperatorSpec::quotient(2, 1, 2).unwrap()];
    for spec in &specs {
        let frames = standard_frames::<f64>(2, FrameSet::CoordDiag);
        let sets: Vec<_> = resolutions.iter().map(|&r| build_control_set(spec, r, &frames).unwrap()).collect();
        for s in 0..100 {
            let b: HermitianMatrix<f64> = random_interior_matrix(2, 1.0, 2.0, &mut rng);
            let f = operator_eval(spec, &b).unwrap();
            let mut prev = f64::INFINITY;
            for (set, r) in sets.iter().zip(resolutions) {
                let gap = bellman_inf(set, &b).unwrap() - f;
                if gap < -1e-9 {
                    problems.push(format!("{spec} sample {s}: inf below F by {:e} at resolution {r}", -gap));
                }
                if gap > prev {
                    problems.push(format!("{spec} sample {s}: gap grew {prev:e} -> {gap:e} at resolution {r}"));
                }
                prev = gap;
            }
            worst_rel_gap = worst_rel_gap.max(prev / f);
            if prev > 0.05 * f {
                problems.push(format!("{spec} sample {s}: gap {:.3}% at resolution 32", 100.0 * prev / f));
            }
        }
        for _ in 0..100 {
            let u = random_unitary::<f64, _>(2, &mut rng);
            let vals = [rng.gen_range(0.5..=2.0), rng.gen_range(-2.0..=-0.1)];
            let b = HermitianMatrix::from_frame(&u, &vals);
            if detect_outside_cone(spec, &b, 10_000).unwrap().outside {
                detected += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = problems.is_empty() && detected == 200 && secs < 60.0;
    outcome(
        passed,
        format!(
            "worst gap at resolution 32 {:.3}% of F, outside detected {detected}/200, {} problems {:?}, {secs:.2} s",
            100.0 * worst_rel_gap,
            problems.len(),
            problems.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn solve_error(spec: &OperatorSpec, grid: &DomainGrid, psi: f64, exact: impl Fn(&[f64]) -> f64) -> (f64, f64, bool) {
    let start = Instant::now();
    let g = GridFunction::from_fn(grid, &exact);
    let (u, report) = solve_dirichlet(spec, grid, &ConstantSource(psi), &g, &SolverConfig::default()).unwrap();
    let err = u.max_abs_diff_where(&g, grid, None).unwrap();
    (err, start.elapsed().as_secs_f64(), report.converged)
}

fn criterion_3() -> Outcome {
    let (ea, ta, ca) = solve_error(&ma(1), &ball(1, 1.0, 0.02), 1.0, abs2);
    let cube = |h| rasterize_domain(Shape::cube(vec![-1.0; 4], vec![1.0; 4]).unwrap(), h).unwrap();
    let q = |x: &[f64]| x[0] * x[0] + x[1] * x[1] + 4.0 * (x[2] * x[2] + x[3] * x[3]);
    let (eb, tb, cb) = solve_error(&ma(2), &cube(0.1), 2.0, q);
    let (ec, tc, cc) = solve_error(&ma(2), &cube(0.05), 2.0, q);
    let a = ca && ea <= 1e-6 && ta < 5.0;
    let b = cb && eb <= 1e-4 && tb < 120.0;
    let c = cc && ec <= eb && tc < 1200.0;
    outcome(
        a && b && c,
        format!(
            "(a) err {ea:.2e} in {ta:.1} s [{}] (b) err {eb:.2e} in {tb:.1} s [{}] (c) err {ec:.2e} in {tc:.1} s [{}]; algebraic floor tol_solver*max|z|^2 = {:.0e}",
            verdict(a),
            verdict(b),
            verdict(c),
            SolverConfig::default().tol_solver * 4.0
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let grid = ball(2, 1.0, 0.1);
    let spec = ma(2);
    let psi = AffineInR { a: 1.0, b: 0.1 };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    let mut unconverged = 0;
    for _ in 0..20 {
        let lin: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (c0, quad, wave) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0), rng.gen_range(-0.5..0.5));
        let (d0, d1, axis) = (rng.gen_range(0.0..0.3), rng.gen_range(0.0..1.0), rng.gen_range(0..4));
        let g1 = GridFunction::from_fn(&grid, |x| g1_value(&lin, c0, quad, wave, x));
        let g2 = GridFunction::from_fn(&grid, |x| g1_value(&lin, c0, quad, wave, x) + d0 + d1 * (x[axis] + 1.0).powi(2));
        let cfg = SolverConfig::default();
        let (u1, r1) = solve_dirichlet(&spec, &grid, &psi, &g1, &cfg).unwrap();
        let (u2, r2) = solve_dirichlet(&spec, &grid, &psi, &g2, &cfg).unwrap();
        unconverged += usize::from(!r1.converged) + usize::from(!r2.converged);
        for (i, a) in u1.active() {
            worst = worst.max(a - u2.get(i));
        }
    }
    let sat = OperatorSpec::saturated(ma(2)).unwrap();
    let zero = GridFunction::constant(&grid, 0.0);
    let refused = matches!(
        solve_dirichlet(&sat, &grid, &ConstantSource(2.0), &zero, &SolverConfig::default()),
        Err(Error::HypothesisViolation { .. })
    );
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && unconverged == 0 && refused && secs < 600.0,
        format!("max(u1 - u2) = {worst:.2e} over 20 pairs, {unconverged} unconverged, saturated guard refused: {refused}, {secs:.1} s"),
    )
}

fn g1_value(lin: &[f64], c0: f64, quad: f64, wave: f64, x: &[f64]) -> f64 {
    c0 + lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + quad * abs2(x) + wave * (3.0 * x[0]).sin() * x[1]
}

fn kinked(x: &[f64]) -> f64 {
    (abs2(x) - 0.5).max(0.3 * abs2(x))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let spec = ma(2);
    let mut parts = Vec::new();
    let mut passed = true;
    for (eps, h) in [(0.1, 0.025), (0.05, 1.0 / 60.0)] {
        let grid = ball(2, 1.0, h);
        let u = GridFunction::from_fn(&grid, kinked);
        let psi = GridFunction::constant(&grid, 0.25);
        let r = check_subsolution(&spec, &u, &psi, &[eps]).unwrap();
        let ok = r.passed && r.worst_margin >= -1e-8;
        passed &= ok;
        parts.push(format!("eps {eps} (h {h:.4}): worst margin {:.3e} over {} nodes [{}]", r.worst_margin, r.evaluated_nodes, verdict(ok)));
        if eps == 0.1 {
            let broken = GridFunction::from_fn(&grid, |x| -abs2(x));
            let r = check_subsolution(&spec, &broken, &psi, &[eps]).unwrap();
            let frac = r.cone_violation_fraction();
            let ok = !r.passed && frac >= 0.99;
            passed &= ok;
            parts.push(format!("-|z|^2 cone violations {:.2}% [{}]", 100.0 * frac, verdict(ok)));
        }
    }
    outcome(passed, format!("{}; {:.1} s", parts.join("; "), start.elapsed().as_secs_f64()))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let grid = ball(2, 1.0, 0.025);
    let u = GridFunction::from_fn(&grid, kinked);
    let seq = approximate_subsolution_sequence(&ma(2), &u, &ConstantSource(0.25), 6, &SequenceConfig::default()).unwrap();
    let a = &seq.audit;
    let worst_margin = a.stages.iter().map(|s| s.check_worst_margin).fold(f64::INFINITY, f64::min);
    let json = serde_json::to_string(a).unwrap();
    outcome(
        seq.stages.len() == 6 && a.nonincreasing && a.all_strictly_positive && a.convergence_bounds_hold,
        format!(
            "j = {}..{}, R = {}, scale {:.3}, nonincreasing violations {}, min stage margin {worst_margin:.3e}, bounds hold {}, audit {} bytes, {:.1} s",
            a.j_start,
            a.j_start + 5,
            a.big_r,
            a.scale,
            a.nonincreasing_violations + a.below_mollified_violations,
            a.convergence_bounds_hold,
            json.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let grid = ball(2, 1.0, 0.1);
    let spec = ma(2);
    let psi = ConstantSource(1.0);
    let v = GridFunction::constant(&grid, 4.0);
    let cfg = SolverConfig::default();
    let (env, env_report) = perron_envelope(&spec, &grid, &psi, &v, &cfg).unwrap();
    let (sol, _) = solve_dirichlet(&spec, &grid, &psi, &v, &cfg).unwrap();
    let diff = env.max_abs_diff_where(&sol, &grid, None).unwrap();
    let sub = Shape::ball(vec![0.0; 4], 0.6).unwrap();
    let seq = decreasing_solution_sequence(&spec, &env, &sub, &psi, 6, &cfg, &SequenceConfig::default()).unwrap();
    let a = &seq.audit;
    let last = *a.gaps.last().unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        env_report.converged && diff <= 1e-3 && a.all_converged && a.nonincreasing_violations == 0 && a.bound_holds && secs < 900.0,
        format!(
            "|envelope - solve| = {diff:.2e} after {} sweeps, nonincreasing violations {}, last gap {last:.3e} vs bound {:.3e}, {secs:.1} s",
            env_report.iterations, a.nonincreasing_violations, a.bound
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = ma(1);
    let grid = ball(1, 1.0, 0.05);
    let eps = [0.1];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();

    let quad = |a: f64, c: [f64; 2], k: f64| move |x: &[f64]| a * ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) + k;
    let u1 = GridFunction::from_fn(&grid, quad(1.0, [0.2, 0.0], -0.3));
    let u2 = GridFunction::from_fn(&grid, quad(1.5, [-0.3, 0.1], -0.6));
    let one = GridFunction::constant(&grid, 1.0);
    let m = pointwise_max(&u1, &u2).unwrap();
    let r = check_subsolution(&spec, &m, &one, &eps).unwrap();
    if !r.passed {
        failures.push(format!("max of two: margin {:e}", r.worst_margin));
    }

    for t in 0..10 {
        let (a, b, rho) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..2.0), rng.gen_range(0.3..0.6));
        let centre = [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)];
        let lift = rng.gen_range(0.0..0.5);
        let sub = grid.restricted(&Shape::ball(centre.to_vec(), rho).unwrap()).unwrap();
        // boundary nodes of G lie within h of the circle of radius rho, where v ≤ lift ≤ u
        let u = GridFunction::from_fn(&grid, |x| b * abs2(x) + lift);
        let r2 = (rho + grid.h()).powi(2);
        let v = GridFunction::from_fn(&sub, |x| a * ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2) - r2) + lift);
        let w = glue_max(&u, &v).unwrap();
        let r = check_subsolution(&spec, &w, &one, &eps).unwrap();
        if !r.passed {
            failures.push(format!("glue {t}: margin {:e}", r.worst_margin));
        }
    }

    for t in 0..10 {
        let (a1, a2) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
        let c1 = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let c2 = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let u1 = GridFunction::from_fn(&grid, quad(a1, c1, 0.0));
        let u2 = GridFunction::from_fn(&grid, quad(a2, c2, 0.0));
        let p1 = GridFunction::constant(&grid, a1 * rng.gen_range(0.2..1.0));
        let p2 = GridFunction::constant(&grid, a2 * rng.gen_range(0.2..1.0));
        let certified = check_subsolution(&spec, &u1, &p1, &eps).unwrap().passed && check_subsolution(&spec, &u2, &p2, &eps).unwrap().passed;
        let tt = rng.gen_range(0.0..=1.0);
        let (w, p) = convex_combination(&spec, &u1, &p1, &u2, &p2, tt).unwrap();
        let r = check_subsolution(&spec, &w, &p, &eps).unwrap();
        if !certified || !r.passed {
            failures.push(format!("convex {t}: inputs certified {certified}, margin {:e}", r.worst_margin));
        }
    }
    outcome(failures.is_empty(), format!("1 max + 10 glue + 10 convex instances, failures {failures:?}"))
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Outcome); 8] = [
        (1, "f-axioms suite", criterion_1),
        (2, "Bellman representation", criterion_2),
        (3, "exact-solution solves", criterion_3),
        (4, "discrete comparison", criterion_4),
        (5, "subsolution criterion", criterion_5),
        (6, "approximating subsolution sequence", criterion_6),
        (7, "Perron envelope and decreasing solutions", criterion_7),
        (8, "stability operations", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let o = run();
        println!("{} criterion {id} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
