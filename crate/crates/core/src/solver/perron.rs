use std::time::Instant;

use super::config::SolverConfig;
use super::dirichlet::{audit_levels, Engine, HypothesisGuard, SolveReport};
use crate::cones::OperatorSpec;
use crate::error::{Error, Result};
use crate::grid::{DomainGrid, GridFunction};
use crate::rhs::{audit_source, sample_source, Source};
use crate::scalar::Scalar;

/// Maximal discrete subsolution below the discrete supersolution `v`:
/// `u ← min(v, u + τ(S_h[u] − ψ(z, u)))` from `u = v`, boundary pinned to `v`.
/// Stops once the obstacle residual `max |Δu| / τ` is at most `tol_solver`.
pub fn perron_envelope<T: Scalar>(
    spec: &OperatorSpec,
    grid: &DomainGrid,
    psi: &dyn Source<T>,
    v: &GridFunction<T>,
    cfg: &SolverConfig,
) -> Result<(GridFunction<T>, SolveReport)> {
    let start = Instant::now();
    let v = v.transfer(grid)?;
    let max_psi = sample_source(psi, &v).max_value().as_f64();
    let guard = HypothesisGuard::evaluate(spec, max_psi);
    guard.enforce()?;
    audit_source(psi, grid, &audit_levels(v.min_value(), v.max_value()))?;

    let engine = Engine::new(spec, grid, psi, cfg)?;
    let m = engine.m();
    let tol = T::lit(cfg.tol_solver);
    let mut res = vec![T::zero(); m];
    let mut policy = vec![0u32; m];
    let vals = v.values();
    engine.residual(vals, &mut res, &mut policy);
    let offending: Vec<usize> = (0..m).filter(|&p| res[p] > tol).map(|p| engine.table.interior[p]).collect();
    if !offending.is_empty() {
        return Err(Error::Precondition { message: "v is not a discrete supersolution (S_h[v] > psi)".into(), nodes: offending });
    }

    let tau = engine.tau(cfg);
    let limit = cfg.max_iters.unwrap_or(super::config::DEFAULT_SWEEPS);
    let mut u = vals.to_vec();
    let mut iterations = 0;
    let mut increases = 0;
    let mut worst;
    loop {
        engine.residual(&u, &mut res, &mut policy);
        worst = T::zero();
        for p in 0..m {
            let i = engine.table.interior[p];
            let step = (vals[i] - u[i]).min(tau * res[p]);
            worst = worst.max(step.abs() / tau);
            res[p] = step;
        }
        if worst <= tol || iterations >= limit {
            break;
        }
        iterations += 1;
        for p in 0..m {
            if res[p] > T::zero() {
                increases += 1;
            }
            u[engine.table.interior[p]] += res[p];
        }
    }
    let report = SolveReport {
        method: "perron".into(),
        iterations,
        linear_iterations: 0,
        final_residual: worst.as_f64(),
        tol_solver: cfg.tol_solver,
        converged: worst <= tol,
        monotone_violations: engine.monotone_violations(Some(tau)) + increases,
        hypothesis_guard: guard,
        tau: Some(tau.as_f64()),
        interior_nodes: m,
        controls: engine.stencil.controls().len(),
        dropped_controls: engine.stencil.dropped_controls(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((GridFunction::from_values(grid, u)?, report))
}
