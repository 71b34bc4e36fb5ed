use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{SolverConfig, Tau};
use super::linear::bicgstab;
use super::stencil::{evaluate_node, NodeTable, SchemeStencil, Workspace, NONE};
use crate::bellman::{build_control_set, standard_frames};
use crate::cones::{f_limit_at_infinity, OperatorSpec};
use crate::error::{Error, Result};
use crate::grid::{DomainGrid, GridFunction};
use crate::rhs::{audit_source, Source};
use crate::scalar::Scalar;
use crate::verify::extended_float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisGuard {
    #[serde(with = "extended_float")]
    pub limit_at_infinity: f64,
    pub max_psi: f64,
    pub passed: bool,
}

impl HypothesisGuard {
    pub fn evaluate(spec: &OperatorSpec, max_psi: f64) -> Self {
        let limit = f_limit_at_infinity::<f64>(spec);
        HypothesisGuard { limit_at_infinity: limit, max_psi, passed: limit > max_psi }
    }

    pub fn enforce(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::HypothesisViolation { limit: self.limit_at_infinity, max_psi: self.max_psi })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// `max |S_h[u] − ψ(z, u)|` over interior nodes (for envelopes, the
    /// obstacle residual `max |min(v − u, τ(S_h[u] − ψ))| / τ`).
    pub final_residual: f64,
    pub tol_solver: f64,
    pub converged: bool,
    pub monotone_violations: usize,
    pub hypothesis_guard: HypothesisGuard,
    pub tau: Option<f64>,
    pub interior_nodes: usize,
    pub controls: usize,
    pub dropped_controls: usize,
    pub wall_time_s: f64,
}

/// Scheme bound to a grid and a right-hand side.
pub(crate) struct Engine<'a, T: Scalar> {
    pub(crate) stencil: SchemeStencil<T>,
    pub(crate) table: NodeTable,
    positions: Vec<f64>,
    d: usize,
    psi: &'a dyn Source<T>,
    psi_fixed: Option<Vec<T>>,
}

impl<'a, T: Scalar> Engine<'a, T> {
    pub(crate) fn new(spec: &OperatorSpec, grid: &DomainGrid, psi: &'a dyn Source<T>, cfg: &SolverConfig) -> Result<Self> {
        if spec.n() != grid.n() {
            return Err(Error::arg(format!("operator has n = {}, grid has n = {}", spec.n(), grid.n())));
        }
        let frames = standard_frames::<T>(spec.n(), cfg.frames);
        let controls = build_control_set(spec, cfg.control_resolution, &frames)?;
        let stencil = SchemeStencil::new(&controls, grid.h())?;
        let table = NodeTable::build(&stencil, grid)?;
        let d = grid.real_dim();
        let mut positions = vec![0.0; table.interior.len() * d];
        grid.for_each_position(|idx, x| {
            let p = table.local[idx];
            if p != NONE {
                positions[p as usize * d..(p as usize + 1) * d].copy_from_slice(x);
            }
        });
        let mut engine = Engine { stencil, table, positions, d, psi, psi_fixed: None };
        if !psi.depends_on_r() {
            let fixed = (0..engine.table.interior.len()).map(|p| engine.psi_value(p, T::zero())).collect();
            engine.psi_fixed = Some(fixed);
        }
        Ok(engine)
    }

    fn psi_value(&self, p: usize, r: T) -> T {
        self.psi.value(self.table.interior[p], &self.positions[p * self.d..(p + 1) * self.d], r)
    }

    #[inline]
    pub(crate) fn psi_at(&self, p: usize, r: T) -> T {
        match &self.psi_fixed {
            Some(v) => v[p],
            None => self.psi_value(p, r),
        }
    }

    #[inline]
    fn dpsi_at(&self, p: usize, r: T) -> T {
        if self.psi_fixed.is_some() {
            T::zero()
        } else {
            self.psi.derivative_r(self.table.interior[p], &self.positions[p * self.d..(p + 1) * self.d], r)
        }
    }

    pub(crate) fn m(&self) -> usize {
        self.table.interior.len()
    }

    /// `res[p] = S_h[u] − ψ(z, u)` with the minimizing control; returns `max |res|`.
    pub(crate) fn residual(&self, u: &[T], res: &mut [T], policy: &mut [u32]) -> T {
        let mut ws = Workspace::new(&self.stencil);
        let mut worst = T::zero();
        for p in 0..self.m() {
            let (s, c) = evaluate_node(&self.stencil, &self.table, u, p, &mut ws);
            let r = s - self.psi_at(p, u[self.table.interior[p]]);
            res[p] = r;
            policy[p] = c as u32;
            worst = worst.max(r.abs());
        }
        worst
    }

    /// `0.9 / (max_c Σ 2·coefficient + Lip_r ψ)`.
    pub(crate) fn auto_tau(&self) -> T {
        T::lit(0.9) / (self.stencil.max_center() + self.psi.lipschitz_r())
    }

    pub(crate) fn tau(&self, cfg: &SolverConfig) -> T {
        match cfg.tau {
            Tau::Auto => self.auto_tau(),
            Tau::Value(t) => T::lit(t),
        }
    }

    /// Controls for which the explicit step `τ` breaks monotonicity, plus
    /// negative stencil coefficients.
    pub(crate) fn monotone_violations(&self, tau: Option<T>) -> usize {
        let structural = self.stencil.negative_coefficients();
        let step = match tau {
            Some(t) => {
                let lip = self.psi.lipschitz_r();
                self.stencil.controls().iter().filter(|c| t * (c.center + lip) > T::one()).count()
            }
            None => 0,
        };
        structural + step
    }

    /// `y = (diag(center_π + ψ_r) − offdiag_π)·x` on interior vectors.
    fn apply_policy(&self, policy: &[u32], diag: &[T], x: &[T], y: &mut [T]) {
        let local = &self.table.local;
        let ctls = self.stencil.controls();
        for p in 0..self.m() {
            let row = self.table.row(p);
            let mut acc = diag[p] * x[p];
            for &(dj, coef) in &ctls[policy[p] as usize].terms {
                for s in 0..2 {
                    let t = row[2 * dj + s];
                    let q = local[t as usize];
                    if q != NONE {
                        acc -= coef * x[q as usize];
                    }
                }
            }
            y[p] = acc;
        }
    }
}

fn max_psi_at_level<T: Scalar>(psi: &dyn Source<T>, grid: &DomainGrid, level: T) -> f64 {
    let mut m = f64::NEG_INFINITY;
    grid.for_each_position(|idx, x| {
        if grid.is_active(idx) {
            m = m.max(psi.value(idx, x, level).as_f64());
        }
    });
    m
}

/// Levels at which `ψ(·, r)` is audited for sign and monotonicity.
pub(crate) fn audit_levels<T: Scalar>(lo: T, hi: T) -> Vec<T> {
    vec![lo - T::one(), lo, T::zero(), hi, hi + T::one()]
}

/// Solves `S_h[u] = ψ(z, u)` at interior nodes with `u = g` pinned on boundary
/// nodes. The iteration starts from the constant `max g` in the interior, a
/// discrete supersolution.
pub fn solve_dirichlet<T: Scalar>(
    spec: &OperatorSpec,
    grid: &DomainGrid,
    psi: &dyn Source<T>,
    boundary: &GridFunction<T>,
    cfg: &SolverConfig,
) -> Result<(GridFunction<T>, SolveReport)> {
    let start = Instant::now();
    let g = boundary.transfer(grid)?;
    let boundary_nodes: Vec<usize> = grid.nodes_of(crate::grid::NodeClass::Boundary).collect();
    let (mut gmin, mut gmax) = (T::infinity(), T::neg_infinity());
    for &i in &boundary_nodes {
        gmin = gmin.min(g.get(i));
        gmax = gmax.max(g.get(i));
    }
    if boundary_nodes.is_empty() {
        return Err(Error::domain("grid has no boundary nodes"));
    }
    let guard = HypothesisGuard::evaluate(spec, max_psi_at_level(psi, grid, gmax));
    guard.enforce()?;
    audit_source(psi, grid, &audit_levels(gmin, gmax))?;

    let engine = Engine::new(spec, grid, psi, cfg)?;
    let m = engine.m();
    let tol = T::lit(cfg.tol_solver);
    let limit = cfg.iteration_limit();
    let mut u = g.values().to_vec();
    for &i in &engine.table.interior {
        u[i] = gmax;
    }
    let mut res = vec![T::zero(); m];
    let mut policy = vec![0u32; m];
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut worst;
    let tau;
    let method;
    if cfg.policy_iteration {
        method = "policy_iteration";
        tau = None;
        let mut diag = vec![T::zero(); m];
        let mut delta = vec![T::zero(); m];
        loop {
            worst = engine.residual(&u, &mut res, &mut policy);
            if worst <= tol || iterations >= limit {
                break;
            }
            iterations += 1;
            for p in 0..m {
                let r = u[engine.table.interior[p]];
                diag[p] = engine.stencil.controls()[policy[p] as usize].center + engine.dpsi_at(p, r);
            }
            delta.iter_mut().for_each(|x| *x = T::zero());
            let lin_tol = (tol * T::lit(0.25)).max(worst * T::lit(1e-6));
            let out = bicgstab(|x, y| engine.apply_policy(&policy, &diag, x, y), &diag, &res, &mut delta, lin_tol, cfg.max_linear_iters);
            linear_iterations += out.iterations;
            for p in 0..m {
                u[engine.table.interior[p]] += delta[p];
            }
        }
    } else {
        method = "damped";
        let t = engine.tau(cfg);
        tau = Some(t);
        loop {
            worst = engine.residual(&u, &mut res, &mut policy);
            if worst <= tol || iterations >= limit {
                break;
            }
            iterations += 1;
            for p in 0..m {
                u[engine.table.interior[p]] += t * res[p];
            }
        }
    }
    let report = SolveReport {
        method: method.into(),
        iterations,
        linear_iterations,
        final_residual: worst.as_f64(),
        tol_solver: cfg.tol_solver,
        converged: worst <= tol,
        monotone_violations: engine.monotone_violations(tau),
        hypothesis_guard: guard,
        tau: tau.map(|t| t.as_f64()),
        interior_nodes: m,
        controls: engine.stencil.controls().len(),
        dropped_controls: engine.stencil.dropped_controls(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((GridFunction::from_values(grid, u)?, report))
}

/// `S_h[u] − ψ(z, u)` at every interior node (NaN elsewhere).
pub fn scheme_residual<T: Scalar>(
    spec: &OperatorSpec,
    u: &GridFunction<T>,
    psi: &dyn Source<T>,
    cfg: &SolverConfig,
) -> Result<GridFunction<T>> {
    let grid = u.grid();
    let engine = Engine::new(spec, grid, psi, cfg)?;
    let m = engine.m();
    let mut res = vec![T::zero(); m];
    let mut policy = vec![0u32; m];
    engine.residual(u.values(), &mut res, &mut policy);
    let mut out = u.clone();
    for (p, &i) in engine.table.interior.iter().enumerate() {
        out.set(i, res[p]);
    }
    for i in grid.nodes_of(crate::grid::NodeClass::Boundary) {
        out.set(i, T::zero());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{abs2, rasterize_domain, Shape};
    use crate::rhs::{AffineInR, ConstantSource};

    #[test]
    fn laplace_type_problem_is_exact() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 2], 1.0).unwrap(), 0.05).unwrap();
        let spec = OperatorSpec::hessian(1, 1).unwrap();
        let b = GridFunction::<f64>::from_fn(&g, |x| if abs2(x) > 0.8 { abs2(x) } else { 0.0 });
        let (u, rep) = solve_dirichlet(&spec, &g, &ConstantSource(1.0), &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        let exact = GridFunction::from_fn(&g, abs2);
        assert!(u.max_abs_diff_where(&exact, &g, None).unwrap() < 1e-6);
    }

    #[test]
    fn monge_ampere_quadratic_on_a_box() {
        let g = rasterize_domain(Shape::cube(vec![-1.0; 4], vec![1.0; 4]).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let q = |x: &[f64]| x[0] * x[0] + x[1] * x[1] + 4.0 * (x[2] * x[2] + x[3] * x[3]);
        let b = GridFunction::<f64>::from_fn(&g, |x| if g.signed_distance(x) >= -1e-9 { q(x) } else { 0.0 });
        let (u, rep) = solve_dirichlet(&spec, &g, &ConstantSource(2.0), &b, &SolverConfig::default()).unwrap();
        assert!(rep.converged && rep.monotone_violations == 0, "{rep:?}");
        let exact = GridFunction::from_fn(&g, q);
        assert!(u.max_abs_diff_where(&exact, &g, None).unwrap() < 1e-6);
    }

    #[test]
    fn damped_and_policy_iteration_agree() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let psi = AffineInR { a: 1.0, b: 0.1 };
        let b = GridFunction::<f64>::from_fn(&g, |x| 0.5 + x[0] - 0.3 * x[3]);
        let (u1, r1) = solve_dirichlet(&spec, &g, &psi, &b, &SolverConfig::default()).unwrap();
        let (u2, r2) = solve_dirichlet(&spec, &g, &psi, &b, &SolverConfig::damped()).unwrap();
        assert!(r1.converged && r2.converged, "{r1:?} {r2:?}");
        assert!(r2.tau.is_some() && r2.monotone_violations == 0);
        let diff = u1.max_abs_diff_where(&u2, &g, None).unwrap();
        assert!(diff < 1e-6, "{diff}");
        let res = scheme_residual(&spec, &u1, &psi, &SolverConfig::default()).unwrap();
        assert!(res.max_abs() <= 1e-8);
    }

    #[test]
    fn saturated_guard_refuses() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::saturated(OperatorSpec::monge_ampere(2).unwrap()).unwrap();
        let b = GridFunction::<f64>::constant(&g, 0.0);
        let out = solve_dirichlet(&spec, &g, &ConstantSource(2.0), &b, &SolverConfig::default());
        assert!(matches!(out, Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 2], 1.0).unwrap(), 0.1).unwrap();
        let spec = OperatorSpec::monge_ampere(1).unwrap();
        let b = GridFunction::<f64>::constant(&g, 1.0);
        let cfg = SolverConfig { max_iters: Some(3), ..SolverConfig::damped() };
        let (_, rep) = solve_dirichlet(&spec, &g, &ConstantSource(1.0), &b, &cfg).unwrap();
        assert!(!rep.converged && rep.iterations == 3);
    }
}
