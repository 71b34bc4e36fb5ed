use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::dirichlet::{solve_dirichlet, SolveReport};
use crate::cones::{f_limit_at_infinity, OperatorSpec};
use crate::error::{Error, Result};
use crate::grid::{abs2, mollify_with, DomainGrid, GridFunction, MollifierKernel, Shape};
use crate::hermitian::{operator_eval, HermitianMatrix};
use crate::rhs::{sample_source, Source};
use crate::scalar::Scalar;
use crate::verify::{check_subsolution, extended_float};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    /// The `r ∈ (0, 1)` of the construction.
    pub r: f64,
    /// Largest mollification radius; `None` means `4h`.
    pub eps_max: Option<f64>,
    /// Radius of the stage checks; `None` means `2h`.
    pub eps_check: Option<f64>,
    pub bisection_steps: usize,
    /// Run the subsolution check on the input before building stages.
    pub verify_input: bool,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig { r: 0.5, eps_max: None, eps_check: None, bisection_steps: 40, verify_input: true }
    }
}

#[derive(Clone, Debug)]
pub struct SequenceStage<T> {
    pub j: usize,
    pub epsilon: f64,
    pub field: GridFunction<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageAudit {
    pub j: usize,
    pub epsilon: f64,
    /// `max |ψ*χ_ε − ψ|` on the common grid.
    pub psi_gap: f64,
    /// `max (u_j − u*χ_ε)`.
    pub gap_to_mollified: f64,
    /// `2^{-j}·scale`.
    pub gap_bound: f64,
    /// `max (u_j − u)` and `max (u*χ_ε − u)`.
    pub gap_to_input: f64,
    pub kernel_constant: f64,
    pub convergence_bound_holds: bool,
    #[serde(with = "extended_float")]
    pub check_worst_margin: f64,
    pub check_evaluated_nodes: usize,
    pub strictly_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceAudit {
    #[serde(rename = "R")]
    pub big_r: f64,
    pub r: f64,
    /// `R·max|z|² / (2r)` over the common grid.
    pub scale: f64,
    pub j_start: usize,
    pub eps_max: f64,
    pub eps_check: f64,
    pub max_psi: f64,
    pub input_check_passed: Option<bool>,
    pub stages: Vec<StageAudit>,
    /// Node pairs with `u_{j+1} > u_j` (exact comparison).
    pub nonincreasing_violations: usize,
    /// Nodes with `u_j < u*χ_{ε_j}`.
    pub below_mollified_violations: usize,
    pub nonincreasing: bool,
    pub all_strictly_positive: bool,
    pub convergence_bounds_hold: bool,
}

#[derive(Clone, Debug)]
pub struct SubsolutionSequence<T> {
    /// Common grid: the input grid eroded by `eps_max`.
    pub grid: DomainGrid,
    pub stages: Vec<SequenceStage<T>>,
    pub audit: SequenceAudit,
}

/// Smallest `R = 2^m` with `F((R/2)·I) > target`: `H(R|z|²/2) = (R/2)·I`.
fn select_big_r(spec: &OperatorSpec, target: f64) -> Option<f64> {
    (-30..=60).map(|m| 2f64.powi(m)).find(|&big_r| {
        let half = HermitianMatrix::<f64>::identity(spec.n()).scale(big_r / 2.0);
        operator_eval(spec, &half).is_ok_and(|f| f > target)
    })
}

fn psi_gap<T: Scalar>(psi: &GridFunction<T>, eps: f64, common: &DomainGrid) -> Result<f64> {
    let grid = psi.grid();
    let kernel = MollifierKernel::new(grid.real_dim(), grid.h(), eps)?;
    let m = mollify_with(psi, &kernel, &grid.eroded(eps)?)?;
    Ok(m.transfer(common)?.max_abs_diff_where(&psi.transfer(common)?, common, None)?.as_f64())
}

/// Stages `u_j = u*χ_{ε_j} + R|z|²/(2^{j+1} r)` for `j = j_start, ..` with
/// `j_start` the least integer above `-log2 r`, on the input grid eroded by
/// `eps_max`. `ε_j` is the largest radius in `[2h, ε_{j-1}]` (bisection) whose
/// measured gap `|ψ*χ_ε − ψ|` stays below `2^{-j}`.
pub fn approximate_subsolution_sequence<T: Scalar>(
    spec: &OperatorSpec,
    u: &GridFunction<T>,
    psi: &dyn Source<T>,
    count: usize,
    cfg: &SequenceConfig,
) -> Result<SubsolutionSequence<T>> {
    let grid = u.grid();
    if spec.n() != grid.n() {
        return Err(Error::arg(format!("operator has n = {}, grid has n = {}", spec.n(), grid.n())));
    }
    if psi.depends_on_r() {
        return Err(Error::arg("the approximation sequence needs psi independent of r"));
    }
    if !(cfg.r > 0.0 && cfg.r < 1.0) {
        return Err(Error::arg(format!("r = {} must lie in (0, 1)", cfg.r)));
    }
    let h = grid.h();
    let eps_max = cfg.eps_max.unwrap_or(4.0 * h);
    let eps_check = cfg.eps_check.unwrap_or(2.0 * h);
    if eps_max < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::arg(format!("eps_max = {eps_max} is below 2h")));
    }
    let common = grid.eroded(eps_max)?;
    let psi_grid = sample_source(psi, u);
    let max_psi = psi_grid.transfer(&common)?.max_value().as_f64();
    let limit = f_limit_at_infinity::<f64>(spec);
    if !(limit > max_psi) {
        return Err(Error::HypothesisViolation { limit, max_psi });
    }
    // saturated families may need a smaller r than requested
    let r = if limit > max_psi + cfg.r { cfg.r } else { 0.5 * (limit - max_psi) };
    let big_r = select_big_r(spec, max_psi + r).ok_or(Error::HypothesisViolation { limit, max_psi })?;
    let j_start = (-r.log2()).floor() as usize + 1;
    let mut max_z2 = 0.0f64;
    common.for_each_position(|i, x| {
        if common.is_active(i) {
            max_z2 = max_z2.max(abs2(x));
        }
    });
    let scale = big_r * max_z2 / (2.0 * r);

    let input_check_passed = if cfg.verify_input {
        let rep = check_subsolution(spec, u, &psi_grid, &[eps_max])?;
        if !rep.passed {
            return Err(Error::Precondition {
                message: format!("input is not a subsolution (worst margin {:e})", rep.worst_margin),
                nodes: rep.violations.iter().map(|v| v.node).collect(),
            });
        }
        Some(true)
    } else {
        None
    };

    let psi_common = psi_grid.transfer(&common)?;
    let u_common = u.transfer(&common)?;
    let mut stages: Vec<SequenceStage<T>> = Vec::with_capacity(count);
    let mut audits = Vec::with_capacity(count);
    let mut eps_prev = eps_max;
    let mut cached: Option<(f64, GridFunction<T>)> = None;
    let (mut nonincreasing_violations, mut below) = (0, 0);
    for j in j_start..j_start + count {
        let target = 0.5f64.powi(j as i32);
        let mut gap = psi_gap(&psi_grid, eps_prev, &common)?;
        let eps = if gap < target {
            eps_prev
        } else {
            let lo_gap = psi_gap(&psi_grid, 2.0 * h, &common)?;
            if !(lo_gap < target) {
                return Err(Error::Schedule {
                    message: format!("|psi*chi - psi| = {lo_gap:e} at eps = 2h exceeds 2^-{j}"),
                    achievable_from: j_start,
                    achievable_to: j.saturating_sub(1),
                });
            }
            let (mut lo, mut hi) = (2.0 * h, eps_prev);
            gap = lo_gap;
            for _ in 0..cfg.bisection_steps {
                let mid = 0.5 * (lo + hi);
                let g = psi_gap(&psi_grid, mid, &common)?;
                if g < target {
                    lo = mid;
                    gap = g;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        eps_prev = eps;
        let mollified = match cached.take() {
            Some((e, m)) if e == eps => m,
            _ => {
                let kernel = MollifierKernel::new(grid.real_dim(), h, eps)?;
                mollify_with(u, &kernel, &grid.eroded(eps)?)?.transfer(&common)?
            }
        };
        let coef = T::lit(big_r / (2f64.powi(j as i32 + 1) * r));
        let mut values = mollified.values().to_vec();
        common.for_each_position(|i, x| {
            if common.is_active(i) {
                values[i] += coef * T::lit(abs2(x));
            }
        });
        let field = GridFunction::from_values(&common, values)?;

        let mut gap_m = T::neg_infinity();
        let mut gap_u = T::neg_infinity();
        let mut kc = T::neg_infinity();
        for (i, v) in field.active() {
            let m = mollified.get(i);
            if v < m {
                below += 1;
            }
            gap_m = gap_m.max(v - m);
            gap_u = gap_u.max(v - u_common.get(i));
            kc = kc.max(m - u_common.get(i));
        }
        if let Some(prev) = stages.last() {
            nonincreasing_violations += field.active().filter(|&(i, v)| v > prev.field.get(i)).count();
        }
        let check = check_subsolution(spec, &field, &psi_common, &[eps_check])?;
        let gap_bound = target * scale;
        let (gap_m, gap_u, kc) = (gap_m.as_f64(), gap_u.as_f64(), kc.as_f64());
        let slack = 1e-12 * (1.0 + scale);
        audits.push(StageAudit {
            j,
            epsilon: eps,
            psi_gap: gap,
            gap_to_mollified: gap_m,
            gap_bound,
            gap_to_input: gap_u,
            kernel_constant: kc,
            convergence_bound_holds: gap_m <= gap_bound + slack && gap_u <= gap_bound + kc.max(0.0) + slack,
            check_worst_margin: check.worst_margin,
            check_evaluated_nodes: check.evaluated_nodes,
            strictly_positive: check.worst_margin > 0.0,
        });
        cached = Some((eps, mollified));
        stages.push(SequenceStage { j, epsilon: eps, field });
    }
    let audit = SequenceAudit {
        big_r,
        r,
        scale,
        j_start,
        eps_max,
        eps_check,
        max_psi,
        input_check_passed,
        nonincreasing: nonincreasing_violations == 0 && below == 0,
        all_strictly_positive: audits.iter().all(|a| a.strictly_positive),
        convergence_bounds_hold: audits.iter().all(|a| a.convergence_bound_holds),
        stages: audits,
        nonincreasing_violations,
        below_mollified_violations: below,
    };
    Ok(SubsolutionSequence { grid: common, stages, audit })
}

#[derive(Clone, Debug)]
pub struct SolutionStage<T> {
    pub j: usize,
    pub field: GridFunction<T>,
    pub report: SolveReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecreasingAudit {
    pub h: f64,
    pub count: usize,
    pub tol: f64,
    /// Node pairs with `u_{j+1} > u_j + tol`.
    pub nonincreasing_violations: usize,
    /// Nodes with `u_j < envelope − tol`.
    pub below_envelope_violations: usize,
    /// `max_U (u_j − envelope)` per stage.
    pub gaps: Vec<f64>,
    /// `R·max_U|z|² / (2r)`.
    pub scale: f64,
    /// `5·(h² + 2^{-count})·scale`.
    pub bound: f64,
    pub bound_holds: bool,
    pub all_converged: bool,
}

#[derive(Clone, Debug)]
pub struct DecreasingSequence<T> {
    pub sub_grid: DomainGrid,
    pub approximation: SequenceAudit,
    pub stages: Vec<SolutionStage<T>>,
    pub audit: DecreasingAudit,
}

/// Solutions on `sub` with boundary data from the approximation sequence of
/// `envelope` (a maximal subsolution on the full grid). `eps_max` defaults
/// to `2h` and is capped by the distance from `sub` to the boundary.
pub fn decreasing_solution_sequence<T: Scalar>(
    spec: &OperatorSpec,
    envelope: &GridFunction<T>,
    sub: &Shape,
    psi: &dyn Source<T>,
    count: usize,
    solver: &SolverConfig,
    seq: &SequenceConfig,
) -> Result<DecreasingSequence<T>> {
    let grid = envelope.grid();
    let h = grid.h();
    let margin = grid
        .shape()
        .containment_margin(sub)
        .map(|m| m - grid.inset())
        .filter(|&m| m >= 0.0)
        .ok_or_else(|| Error::domain("sub-domain is not contained in the domain"))?;
    let eps_max = seq.eps_max.unwrap_or(2.0 * h).min(margin);
    if eps_max < 2.0 * h * (1.0 - 1e-12) {
        return Err(Error::domain(format!("sub-domain lies within {margin} of the boundary; 2h = {} is needed", 2.0 * h)));
    }
    let cfg = SequenceConfig { eps_max: Some(eps_max), verify_input: false, ..seq.clone() };
    let approx = approximate_subsolution_sequence(spec, envelope, psi, count, &cfg)?;
    let sub_grid = approx.grid.restricted(sub)?;
    let env_sub = envelope.transfer(&sub_grid)?;
    let tol = solver.tol_solver;
    let mut stages: Vec<SolutionStage<T>> = Vec::with_capacity(count);
    let (mut nonincreasing_violations, mut below) = (0, 0);
    let mut gaps = Vec::with_capacity(count);
    for stage in &approx.stages {
        let boundary = stage.field.transfer(&sub_grid)?;
        let (field, report) = solve_dirichlet(spec, &sub_grid, psi, &boundary, solver)?;
        let mut gap = T::neg_infinity();
        for (i, v) in field.active() {
            let e = env_sub.get(i);
            gap = gap.max(v - e);
            if v < e - T::lit(tol) {
                below += 1;
            }
        }
        if let Some(prev) = stages.last() {
            nonincreasing_violations += field.active().filter(|&(i, v)| v > prev.field.get(i) + T::lit(tol)).count();
        }
        gaps.push(gap.as_f64());
        stages.push(SolutionStage { j: stage.j, field, report });
    }
    let mut max_z2 = 0.0f64;
    sub_grid.for_each_position(|i, x| {
        if sub_grid.is_active(i) {
            max_z2 = max_z2.max(abs2(x));
        }
    });
    let scale = approx.audit.big_r * max_z2 / (2.0 * approx.audit.r);
    let bound = 5.0 * (h * h + 0.5f64.powi(count as i32)) * scale;
    let audit = DecreasingAudit {
        h,
        count,
        tol,
        nonincreasing_violations,
        below_envelope_violations: below,
        bound_holds: gaps.last().is_some_and(|&g| g <= bound),
        gaps,
        scale,
        bound,
        all_converged: stages.iter().all(|s| s.report.converged),
    };
    Ok(DecreasingSequence { sub_grid, approximation: approx.audit, stages, audit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_domain, MollifierKernel};
    use crate::rhs::{ConstantSource, FieldSource};

    fn ball(n: usize, h: f64) -> DomainGrid {
        rasterize_domain(Shape::ball(vec![0.0; 2 * n], 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn ladder_selection() {
        let ma = OperatorSpec::monge_ampere(2).unwrap();
        assert_eq!(select_big_r(&ma, 0.75), Some(2.0));
        assert_eq!(select_big_r(&ma, 1.0), Some(4.0));
        let sat = OperatorSpec::saturated(ma).unwrap();
        assert_eq!(select_big_r(&sat, 1.0), None);
    }

    #[test]
    fn quadratic_closed_form() {
        let g = ball(2, 0.125);
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let seq = approximate_subsolution_sequence(&spec, &u, &ConstantSource(0.0), 3, &SequenceConfig::default()).unwrap();
        assert_eq!(seq.stages.len(), 3);
        let a = &seq.audit;
        assert_eq!((a.big_r, a.r, a.j_start), (2.0, 0.5, 2));
        assert!(a.nonincreasing && a.all_strictly_positive && a.convergence_bounds_hold, "{a:?}");
        let kc = MollifierKernel::new(4, 0.125, 0.5).unwrap().second_moment();
        for st in &seq.stages {
            let c = 2.0 / (2f64.powi(st.j as i32 + 1) * 0.5);
            for (i, v) in st.field.active() {
                let x = seq.grid.position(i).unwrap();
                assert!((v - (abs2(&x) * (1.0 + c) + kc)).abs() < 1e-12);
            }
        }
        for w in seq.stages.windows(2) {
            assert!(w[0].field.active().all(|(i, v)| v > w[1].field.get(i) || abs2(&seq.grid.position(i).unwrap()) == 0.0));
        }
    }

    #[test]
    fn empty_and_refused() {
        let g = ball(1, 0.1);
        let spec = OperatorSpec::monge_ampere(1).unwrap();
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let s = approximate_subsolution_sequence(&spec, &u, &ConstantSource(0.0), 0, &SequenceConfig::default()).unwrap();
        assert!(s.stages.is_empty());
        let sat = OperatorSpec::saturated(spec.clone()).unwrap();
        assert!(matches!(
            approximate_subsolution_sequence(&sat, &u, &ConstantSource(1.0), 2, &SequenceConfig::default()),
            Err(Error::HypothesisViolation { .. })
        ));
        let bad = GridFunction::<f64>::from_fn(&g, |x| -abs2(x));
        assert!(matches!(
            approximate_subsolution_sequence(&spec, &bad, &ConstantSource(0.0), 2, &SequenceConfig::default()),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn saturated_uses_a_smaller_r() {
        let g = ball(1, 0.1);
        let sat = OperatorSpec::saturated(OperatorSpec::monge_ampere(1).unwrap()).unwrap();
        let u = GridFunction::<f64>::from_fn(&g, |x| 3.0 * abs2(x));
        let s = approximate_subsolution_sequence(&sat, &u, &ConstantSource(0.7), 2, &SequenceConfig::default()).unwrap();
        assert!((s.audit.r - 0.15).abs() < 1e-12);
        assert_eq!(s.audit.j_start, 3);
        assert!(s.audit.all_strictly_positive);
    }

    #[test]
    fn varying_psi_forces_smaller_radii() {
        let g = ball(1, 0.02);
        let spec = OperatorSpec::monge_ampere(1).unwrap();
        let u = GridFunction::<f64>::from_fn(&g, |x| 2.0 * abs2(x));
        let psi = FieldSource("quadratic:1".parse().unwrap());
        let cfg = SequenceConfig { eps_max: Some(0.2), ..SequenceConfig::default() };
        let s = approximate_subsolution_sequence(&spec, &u, &psi, 6, &cfg).unwrap();
        let eps: Vec<f64> = s.stages.iter().map(|st| st.epsilon).collect();
        assert!(eps.windows(2).all(|w| w[0] >= w[1]) && eps[5] < 0.2, "{eps:?}");
        assert!(s.audit.nonincreasing && s.audit.all_strictly_positive, "{:?}", s.audit);
        for a in &s.audit.stages {
            assert!(a.psi_gap < 0.5f64.powi(a.j as i32));
        }
        let too_many = approximate_subsolution_sequence(&spec, &u, &psi, 20, &cfg);
        match too_many {
            Err(Error::Schedule { achievable_from, achievable_to, .. }) => assert!(achievable_from == 2 && achievable_to >= 4),
            other => panic!("expected schedule error, got {:?}", other.map(|s| s.audit)),
        }
    }

    #[test]
    fn decreasing_solutions_on_a_subdisc() {
        let g = ball(1, 0.05);
        let spec = OperatorSpec::monge_ampere(1).unwrap();
        let psi = ConstantSource(1.0);
        let v = GridFunction::<f64>::constant(&g, 1.0);
        let (env, _) = crate::solver::perron_envelope(&spec, &g, &psi, &v, &SolverConfig::default()).unwrap();
        let sub = Shape::ball(vec![0.0; 2], 0.6).unwrap();
        let seq = decreasing_solution_sequence(&spec, &env, &sub, &psi, 4, &SolverConfig::default(), &SequenceConfig::default()).unwrap();
        let a = &seq.audit;
        assert!(a.all_converged && a.nonincreasing_violations == 0 && a.below_envelope_violations == 0, "{a:?}");
        assert!(a.gaps.windows(2).all(|w| w[0] >= w[1]));
        assert!(a.bound_holds, "{a:?}");
    }
}
