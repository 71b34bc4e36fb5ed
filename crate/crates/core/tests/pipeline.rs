use std::collections::BTreeMap;

use hessian_visc::grid::{abs2, rasterize_domain, DomainGrid, GridFunction, NodeClass, Shape};
use hessian_visc::rhs::ConstantSource;
use hessian_visc::solver::{decreasing_solution_sequence, perron_envelope, solve_dirichlet, SequenceConfig, SolverConfig};
use hessian_visc::verify::check_subsolution;
use hessian_visc::OperatorSpec;

fn disc(h: f64) -> DomainGrid {
    rasterize_domain(Shape::ball(vec![0.0; 2], 1.0).unwrap(), h).unwrap()
}

#[test]
fn disc_classification_matches_golden_listing() {
    let golden = include_str!("data/disc_h0.1_nodes.csv");
    let expected: BTreeMap<(i64, i64), &str> = golden
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].parse().unwrap(), f[1].parse().unwrap()), f[2])
        })
        .collect();
    let g = disc(0.1);
    let mut seen = BTreeMap::new();
    for i in 0..g.len() {
        let name = match g.class(i) {
            NodeClass::Interior => "interior",
            NodeClass::Boundary => "boundary",
            NodeClass::Exterior => continue,
        };
        let x = g.position(i).unwrap();
        seen.insert(((x[0] / 0.1).round() as i64, (x[1] / 0.1).round() as i64), name);
    }
    assert_eq!(seen, expected);
    assert_eq!((g.interior_count(), g.boundary_count()), (305, 72));
}

#[test]
fn single_stage_lies_above_the_envelope() {
    let g = disc(0.05);
    let spec = OperatorSpec::monge_ampere(1).unwrap();
    let psi = ConstantSource(1.0);
    let cfg = SolverConfig::default();
    let (env, _) = perron_envelope(&spec, &g, &psi, &GridFunction::constant(&g, 2.0), &cfg).unwrap();
    let sub = Shape::ball(vec![0.0; 2], 0.5).unwrap();
    let seq = decreasing_solution_sequence(&spec, &env, &sub, &psi, 1, &cfg, &SequenceConfig::default()).unwrap();
    assert_eq!(seq.stages.len(), 1);
    let env_sub = env.transfer(&seq.sub_grid).unwrap();
    let stage = &seq.stages[0].field;
    assert!(stage.active().all(|(i, v)| v >= env_sub.get(i) - cfg.tol_solver));
    assert_eq!(seq.audit.below_envelope_violations, 0);
}

#[test]
fn zero_envelope_sequence_decreases_to_zero() {
    let g = disc(0.05);
    let spec = OperatorSpec::monge_ampere(1).unwrap();
    let psi = ConstantSource(0.0);
    let env = GridFunction::constant(&g, 0.0);
    let sub = Shape::ball(vec![0.0; 2], 0.6).unwrap();
    let cfg = SolverConfig::default();
    let seq = decreasing_solution_sequence(&spec, &env, &sub, &psi, 5, &cfg, &SequenceConfig::default()).unwrap();
    let gaps = &seq.audit.gaps;
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    // boundary nodes of the sub-grid lie within h outside radius 0.6
    let max_r2 = (0.6 + g.h()).powi(2) + 1e-9;
    for (st, gap) in seq.stages.iter().zip(gaps) {
        let term = seq.approximation.big_r / (2f64.powi(st.j as i32 + 1) * seq.approximation.r) * max_r2;
        assert!(*gap <= term + 1e-9, "stage {}: {gap} > {term}", st.j);
    }
}

#[test]
fn single_precision_solve() {
    let g = disc(0.05);
    let spec = OperatorSpec::monge_ampere(1).unwrap();
    let boundary = GridFunction::<f32>::from_fn(&g, |x| abs2(x) as f32);
    let cfg = SolverConfig { tol_solver: 1e-4, ..SolverConfig::default() };
    let (u, report) = solve_dirichlet(&spec, &g, &ConstantSource(1.0f32), &boundary, &cfg).unwrap();
    assert!(report.converged, "{report:?}");
    assert!(u.max_abs_diff_where(&boundary, &g, None).unwrap() < 1e-3);
    let psi = GridFunction::<f32>::constant(&g, 1.0);
    assert!(check_subsolution(&spec, &u, &psi.map(|p| p - 0.01), &[0.1]).unwrap().passed);
}

#[test]
fn csv_round_trip_preserves_values() {
    let g = disc(0.1);
    let u = GridFunction::<f64>::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] / 3.0);
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let back = GridFunction::<f64>::read_csv(&g, buf.as_slice()).unwrap();
    assert!(u.active().all(|(i, v)| v == back.get(i)));
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x1,y1,value"));
}
