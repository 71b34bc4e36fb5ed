use hessian_visc::bellman::{bellman_inf, build_control_set, random_interior_matrix, standard_frames, FrameSet};
use hessian_visc::grid::{rasterize_domain, GridFunction, NodeClass, Shape};
use hessian_visc::hermitian::{eigen_decompose, random_hermitian};
use hessian_visc::solver::{discrete_bellman_operator, SchemeStencil, SolverConfig, Tau};
use hessian_visc::verify::glue_max;
use hessian_visc::{f_eval, operator_eval, EigenTuple, OperatorSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn specs() -> impl Strategy<Value = OperatorSpec> {
    prop_oneof![
        (1usize..=3).prop_map(|n| OperatorSpec::monge_ampere(n).unwrap()),
        (1usize..=3).prop_flat_map(|n| (1..=n).prop_map(move |k| OperatorSpec::hessian(k, n).unwrap())),
        (2usize..=3).prop_map(|n| OperatorSpec::quotient(2, 1, n).unwrap()),
        (2usize..=3).prop_map(|n| OperatorSpec::saturated(OperatorSpec::monge_ampere(n).unwrap()).unwrap()),
    ]
}

fn tuple_for(spec: OperatorSpec) -> impl Strategy<Value = (OperatorSpec, Vec<f64>)> {
    let n = spec.n();
    (Just(spec), prop::collection::vec(0.1f64..10.0, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_symmetric_and_increasing((spec, x) in specs().prop_flat_map(tuple_for), bump in 0.01f64..1.0, k in 0usize..3) {
        let f = f_eval(&spec, &EigenTuple::new(x.clone()).unwrap()).unwrap();
        let mut rev = x.clone();
        rev.reverse();
        prop_assert_eq!(f_eval(&spec, &EigenTuple::new(rev).unwrap()).unwrap(), f);
        let mut up = x.clone();
        let k = k % x.len();
        up[k] += bump;
        prop_assert!(f_eval(&spec, &EigenTuple::new(up).unwrap()).unwrap() > f);
    }

    #[test]
    fn eigen_reconstruction(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian::<f64, _>(n, &mut rng);
        let e = eigen_decompose(&h);
        prop_assert!(e.reconstruct().as_matrix().max_abs_diff(h.as_matrix()) <= 1e-10 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn bellman_inf_dominates_f(seed in any::<u64>(), res in 1usize..12) {
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let controls = build_control_set(&spec, res, &standard_frames::<f64>(2, FrameSet::CoordDiag)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_interior_matrix::<f64, _>(2, 0.2, 5.0, &mut rng);
        prop_assert!(bellman_inf(&controls, &b).unwrap() >= operator_eval(&spec, &b).unwrap() - 1e-9);
    }

    #[test]
    fn scheme_is_degenerate_elliptic(seed in any::<u64>(), bump in 0.0f64..0.1) {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let controls = build_control_set(&spec, 4, &standard_frames::<f64>(2, FrameSet::CoordDiag)).unwrap();
        let stencil = SchemeStencil::new(&controls, g.h()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = GridFunction::from_fn(&g, |x| x.iter().map(|c| c * c * rand::Rng::gen_range(&mut rng, 0.5..2.0)).sum());
        let node = g.nodes_of(NodeClass::Interior).nth((seed % 50) as usize).unwrap();
        let base = discrete_bellman_operator(&stencil, &u, node).unwrap();
        let raised = u.map(|v| v + bump);
        let mut neighbours = raised.clone();
        neighbours.set(node, u.get(node));
        prop_assert!(discrete_bellman_operator(&stencil, &neighbours, node).unwrap() >= base - 1e-12);
        let mut centre = u.clone();
        centre.set(node, u.get(node) + bump);
        prop_assert!(discrete_bellman_operator(&stencil, &centre, node).unwrap() <= base + 1e-12);
    }

    #[test]
    fn glue_dominates_u(shift in -2.0f64..-0.3, scale in 0.5f64..3.0) {
        let g = rasterize_domain(Shape::ball(vec![0.0; 2], 1.0).unwrap(), 0.1).unwrap();
        let sub = g.restricted(&Shape::ball(vec![0.0; 2], 0.5).unwrap()).unwrap();
        let u = GridFunction::<f64>::constant(&g, 0.0);
        let v = GridFunction::from_fn(&sub, |x| scale * (x[0] * x[0] + x[1] * x[1]) + shift * 0.5);
        if let Ok(w) = glue_max(&u, &v) {
            prop_assert!(w.active().all(|(i, x)| x >= u.get(i)));
        }
    }

    #[test]
    fn solver_config_round_trips(tol in 1e-12f64..1e-2, res in 1usize..40, tau in prop::option::of(1e-4f64..1.0), pi in any::<bool>()) {
        let cfg = SolverConfig {
            tol_solver: tol,
            control_resolution: res,
            tau: tau.map_or(Tau::Auto, Tau::Value),
            policy_iteration: pi,
            ..SolverConfig::default()
        };
        prop_assert_eq!(cfg.to_string().parse::<SolverConfig>().unwrap(), cfg);
    }
}
