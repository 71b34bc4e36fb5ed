//! Grid-level verification: the mollification criterion for subsolutions,
//! max / gluing / convex-combination constructions, and a comparison oracle.

use serde::{Deserialize, Serialize};

use crate::cones::{f_limit_at_infinity, OperatorSpec};
use crate::error::{Error, Result};
use crate::grid::{discrete_laplacian, for_each_hessian, mollify_with, GridFunction, MollifierKernel, NodeClass};
use crate::hermitian::operator_eval;
use crate::rhs::{sample_source, Source};
use crate::scalar::Scalar;

/// Reports keep at most this many individual violations.
pub const MAX_LISTED_VIOLATIONS: usize = 100;

/// JSON numbers cannot hold infinities; these are written as "-inf" / "inf" / "nan".
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number '{other}'"))),
            },
        }
    }
}

/// `1e-8·(1 + scale)`.
pub fn default_tol_verify(scale: f64) -> f64 {
    1e-8 * (1.0 + scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: usize,
    pub position: Vec<f64>,
    #[serde(with = "extended_float")]
    pub lhs: f64,
    #[serde(with = "extended_float")]
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub evaluated_nodes: usize,
    /// Interior nodes of the eroded grid whose Hessian stencil was incomplete.
    pub skipped_nodes: usize,
    #[serde(with = "extended_float")]
    pub worst_margin: f64,
    pub violations: usize,
    pub cone_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub kind: String,
    pub spec: String,
    pub epsilons: Vec<f64>,
    pub tol_verify: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonDiagnosis {
    Passed,
    /// Ordering fails although both certificates and the hypothesis hold.
    CounterexampleCandidate,
    SubsolutionCertificateFailed,
    SupersolutionCertificateFailed,
    BoundaryOrderViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDetails {
    pub diagnosis: ComparisonDiagnosis,
    pub certificate: String,
    pub certificate_valid: bool,
    pub subsolution_passed: bool,
    #[serde(with = "extended_float")]
    pub subsolution_worst_margin: f64,
    pub boundary_order_violations: usize,
    pub limit_at_infinity: f64,
    pub max_psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    #[serde(with = "extended_float")]
    pub worst_margin: f64,
    pub evaluated_nodes: usize,
    pub violation_count: usize,
    pub cone_violations: usize,
    pub violations: Vec<Violation>,
    pub per_epsilon: Vec<EpsilonSummary>,
    pub params: ReportParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub comparison: Option<ComparisonDetails>,
}

impl VerificationReport {
    /// Share of evaluated nodes whose mollified Hessian left the closed cone.
    pub fn cone_violation_fraction(&self) -> f64 {
        if self.evaluated_nodes == 0 {
            0.0
        } else {
            self.cone_violations as f64 / self.evaluated_nodes as f64
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_dims<T: Scalar>(spec: &OperatorSpec, u: &GridFunction<T>) -> Result<()> {
    if spec.n() != u.grid().n() {
        return Err(Error::arg(format!("operator has n = {}, grid has n = {}", spec.n(), u.grid().n())));
    }
    Ok(())
}

/// For every `ε`: `F(H(u*χ_ε)) − ψ*χ_ε` at every interior node of the
/// `ε`-eroded grid with a complete Hessian stencil. `-inf` margins are cone
/// violations (the mollified Hessian leaves the closed cone).
pub fn check_subsolution<T: Scalar>(
    spec: &OperatorSpec,
    u: &GridFunction<T>,
    psi: &GridFunction<T>,
    epsilons: &[f64],
) -> Result<VerificationReport> {
    check_subsolution_with_tol(spec, u, psi, epsilons, default_tol_verify(u.max_abs().as_f64()))
}

pub fn check_subsolution_with_tol<T: Scalar>(
    spec: &OperatorSpec,
    u: &GridFunction<T>,
    psi: &GridFunction<T>,
    epsilons: &[f64],
    tol_verify: f64,
) -> Result<VerificationReport> {
    check_dims(spec, u)?;
    let grid = u.grid();
    if !grid.same_storage(psi.grid()) {
        return Err(Error::arg("u and psi live on different grids"));
    }
    if epsilons.is_empty() {
        return Err(Error::arg("at least one mollification radius is required"));
    }
    for (i, _) in u.active() {
        let p = psi.get(i);
        if !psi.grid().is_active(i) || p.is_nan() {
            return Err(Error::arg(format!("psi has no value at node {i}")));
        }
        if p < T::zero() {
            return Err(Error::arg(format!("psi is negative at node {i}")));
        }
    }
    let h = grid.h();
    let mut report = VerificationReport {
        passed: false,
        worst_margin: f64::INFINITY,
        evaluated_nodes: 0,
        violation_count: 0,
        cone_violations: 0,
        violations: Vec::new(),
        per_epsilon: Vec::new(),
        params: ReportParams {
            kind: "subsolution".into(),
            spec: spec.to_string(),
            epsilons: epsilons.to_vec(),
            tol_verify,
        },
        comparison: None,
    };
    for &eps in epsilons {
        let kernel = MollifierKernel::new(grid.real_dim(), h, eps)?;
        let out_grid = grid.eroded(eps)?;
        let mu = mollify_with(u, &kernel, &out_grid)?;
        let mpsi = mollify_with(psi, &kernel, &out_grid)?;
        let mut summary = EpsilonSummary {
            epsilon: eps,
            evaluated_nodes: 0,
            skipped_nodes: 0,
            worst_margin: f64::INFINITY,
            violations: 0,
            cone_violations: 0,
        };
        let mut failure = None;
        summary.skipped_nodes = for_each_hessian(&mu, |i| out_grid.is_interior(i), |idx, x, hm| {
            let lhs = match operator_eval(spec, &hm) {
                Ok(v) => v.as_f64(),
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            let rhs = mpsi.get(idx).as_f64();
            let margin = lhs - rhs;
            summary.evaluated_nodes += 1;
            summary.worst_margin = summary.worst_margin.min(margin);
            if lhs == f64::NEG_INFINITY {
                summary.cone_violations += 1;
            }
            if margin < -tol_verify {
                summary.violations += 1;
                if report.violations.len() < MAX_LISTED_VIOLATIONS {
                    report.violations.push(Violation { node: idx, position: x.to_vec(), lhs, rhs, epsilon: Some(eps) });
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if summary.evaluated_nodes == 0 {
            return Err(Error::EmptyDomain(format!("no node of the {eps}-eroded grid has a complete Hessian stencil")));
        }
        report.evaluated_nodes += summary.evaluated_nodes;
        report.violation_count += summary.violations;
        report.cone_violations += summary.cone_violations;
        report.worst_margin = report.worst_margin.min(summary.worst_margin);
        report.per_epsilon.push(summary);
    }
    report.passed = report.worst_margin >= -tol_verify;
    Ok(report)
}

/// `max(u, v)` on `v`'s active nodes, `u` elsewhere on `u`'s grid. `v` lives
/// on a sub-domain `G` sharing `u`'s storage; at every boundary node of `G`
/// that is interior to `u`'s domain, `v ≤ u` must hold within `tol_verify`.
pub fn glue_max<T: Scalar>(u: &GridFunction<T>, v: &GridFunction<T>) -> Result<GridFunction<T>> {
    let (gu, gv) = (u.grid(), v.grid());
    if !gu.same_storage(gv) {
        return Err(Error::arg("u and v live on different storage"));
    }
    let tol = T::lit(default_tol_verify(u.max_abs().max(v.max_abs()).as_f64()));
    let mut offending = Vec::new();
    let mut out = u.clone();
    for (i, vi) in v.active() {
        if !gu.is_active(i) {
            return Err(Error::domain(format!("node {i} of G lies outside u's domain")));
        }
        let ui = u.get(i);
        if gv.class(i) == NodeClass::Boundary && gu.is_interior(i) && vi > ui + tol {
            offending.push(i);
        }
        out.set(i, ui.max(vi));
    }
    if !offending.is_empty() {
        return Err(Error::Precondition { message: "v exceeds u on the boundary of G".into(), nodes: offending });
    }
    Ok(out)
}

/// Pointwise `max(u, w)` on `u`'s grid.
pub fn pointwise_max<T: Scalar>(u: &GridFunction<T>, w: &GridFunction<T>) -> Result<GridFunction<T>> {
    u.zip_with(w, |a, b| a.max(b))
}

/// `(t·u1 + (1−t)·u2, t·ψ1 + (1−t)·ψ2)`.
pub fn convex_combination<T: Scalar>(
    spec: &OperatorSpec,
    u1: &GridFunction<T>,
    psi1: &GridFunction<T>,
    u2: &GridFunction<T>,
    psi2: &GridFunction<T>,
    t: f64,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::arg(format!("t = {t} is outside [0, 1]")));
    }
    check_dims(spec, u1)?;
    let (a, b) = (T::lit(t), T::lit(1.0 - t));
    let w = u1.zip_with(u2, |x, y| a * x + b * y)?;
    let psi = psi1.zip_with(psi2, |x, y| a * x + b * y)?;
    Ok((w, psi))
}

/// Grid-checkable supersolution classes accepted by [`check_comparison`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupersolutionCertificate {
    /// `v` constant: `F(0) = 0 ≤ ψ`.
    Constant,
    /// `Δ_h v ≤ 0` at interior nodes: `tr Hv ≤ 0` keeps `Hv` off the open cone.
    DiscreteHarmonic,
    /// Solver output with supersolution-side residual at most `tol_solver`.
    SolverOutput { residual: f64, tol_solver: f64 },
}

impl SupersolutionCertificate {
    fn name(&self) -> &'static str {
        match self {
            SupersolutionCertificate::Constant => "constant",
            SupersolutionCertificate::DiscreteHarmonic => "discrete_harmonic",
            SupersolutionCertificate::SolverOutput { .. } => "solver_output",
        }
    }

    fn holds<T: Scalar>(&self, v: &GridFunction<T>) -> Result<bool> {
        Ok(match *self {
            SupersolutionCertificate::Constant => v.constant_value().is_some(),
            SupersolutionCertificate::DiscreteHarmonic => {
                let g = v.grid();
                let tol = default_tol_verify(v.max_abs().as_f64()) / (g.h() * g.h());
                for i in g.nodes_of(NodeClass::Interior) {
                    if discrete_laplacian(v, i)?.as_f64() > tol {
                        return Ok(false);
                    }
                }
                true
            }
            SupersolutionCertificate::SolverOutput { residual, tol_solver } => residual <= tol_solver,
        })
    }
}

/// Comparison oracle: checks `u ≤ v + tol_verify` at interior nodes after
/// re-checking both certificates, the boundary ordering and the guard
/// `lim f(R,..,R) > max ψ(z, v(z))`. The subsolution side of `u` is checked
/// against the sampled field `ψ(z, u(z))` at the radii `epsilons`.
pub fn check_comparison<T: Scalar>(
    spec: &OperatorSpec,
    u: &GridFunction<T>,
    v: &GridFunction<T>,
    certificate: SupersolutionCertificate,
    psi: &dyn Source<T>,
    epsilons: &[f64],
) -> Result<VerificationReport> {
    check_dims(spec, u)?;
    let grid = u.grid();
    if !grid.same_storage(v.grid()) {
        return Err(Error::arg("u and v live on different grids"));
    }
    let psi_v = sample_source(psi, &v.transfer(grid)?);
    let max_psi = psi_v.max_value().as_f64();
    let limit = f_limit_at_infinity::<f64>(spec);
    if !(limit > max_psi) {
        return Err(Error::HypothesisViolation { limit, max_psi });
    }
    let tol_verify = default_tol_verify(u.max_abs().max(v.max_abs()).as_f64());
    let certificate_valid = certificate.holds(v)?;
    let psi_u = sample_source(psi, u);
    let sub = check_subsolution_with_tol(spec, u, &psi_u, epsilons, tol_verify)?;

    let mut report = VerificationReport {
        passed: false,
        worst_margin: f64::INFINITY,
        evaluated_nodes: 0,
        violation_count: 0,
        cone_violations: 0,
        violations: Vec::new(),
        per_epsilon: Vec::new(),
        params: ReportParams { kind: "comparison".into(), spec: spec.to_string(), epsilons: epsilons.to_vec(), tol_verify },
        comparison: None,
    };
    let mut boundary_violations = 0;
    let tol = T::lit(tol_verify);
    for (i, ui) in u.active() {
        let vi = v.get(i);
        if grid.class(i) == NodeClass::Boundary {
            if ui > vi + tol {
                boundary_violations += 1;
            }
            continue;
        }
        let margin = (vi - ui).as_f64();
        report.evaluated_nodes += 1;
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -tol_verify {
            report.violation_count += 1;
            if report.violations.len() < MAX_LISTED_VIOLATIONS {
                report.violations.push(Violation {
                    node: i,
                    position: grid.position(i).unwrap_or_default(),
                    lhs: ui.as_f64(),
                    rhs: vi.as_f64(),
                    epsilon: None,
                });
            }
        }
    }
    report.passed = report.worst_margin >= -tol_verify;
    let diagnosis = if report.passed {
        ComparisonDiagnosis::Passed
    } else if boundary_violations > 0 {
        ComparisonDiagnosis::BoundaryOrderViolated
    } else if !certificate_valid {
        ComparisonDiagnosis::SupersolutionCertificateFailed
    } else if !sub.passed {
        ComparisonDiagnosis::SubsolutionCertificateFailed
    } else {
        ComparisonDiagnosis::CounterexampleCandidate
    };
    report.comparison = Some(ComparisonDetails {
        diagnosis,
        certificate: certificate.name().into(),
        certificate_valid,
        subsolution_passed: sub.passed,
        subsolution_worst_margin: sub.worst_margin,
        boundary_order_violations: boundary_violations,
        limit_at_infinity: limit,
        max_psi,
    });
    report.per_epsilon = sub.per_epsilon;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{abs2, rasterize_domain, DomainGrid, Shape};
    use crate::rhs::ConstantSource;

    fn ball(n: usize, r: f64, h: f64) -> DomainGrid {
        rasterize_domain(Shape::ball(vec![0.0; 2 * n], r).unwrap(), h).unwrap()
    }

    fn ma(n: usize) -> OperatorSpec {
        OperatorSpec::monge_ampere(n).unwrap()
    }

    #[test]
    fn quadratic_passes_with_unit_margin() {
        let g = ball(2, 1.0, 0.1);
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let psi = GridFunction::constant(&g, 0.0);
        let r = check_subsolution(&ma(2), &u, &psi, &[0.2]).unwrap();
        assert!(r.passed);
        assert!(r.evaluated_nodes > 0);
        assert!((r.worst_margin - 1.0).abs() < 1e-9, "{}", r.worst_margin);
    }

    #[test]
    fn hessian_one_with_large_psi_fails() {
        let g = ball(1, 1.0, 0.05);
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let psi = GridFunction::constant(&g, 4.0);
        let r = check_subsolution(&OperatorSpec::hessian(1, 1).unwrap(), &u, &psi, &[0.1]).unwrap();
        assert!(!r.passed);
        assert_eq!(r.violation_count, r.evaluated_nodes);
        assert!((r.worst_margin + 3.0).abs() < 1e-9);
        assert_eq!(r.cone_violations, 0);
    }

    #[test]
    fn concave_field_breaks_the_cone() {
        let g = ball(2, 1.0, 0.125);
        let u = GridFunction::<f64>::from_fn(&g, |x| -abs2(x));
        let psi = GridFunction::constant(&g, 0.0);
        let r = check_subsolution(&ma(2), &u, &psi, &[0.25]).unwrap();
        assert!(!r.passed);
        assert_eq!(r.cone_violations, r.evaluated_nodes);
        assert_eq!(r.worst_margin, f64::NEG_INFINITY);
        assert_eq!(r.violations.len(), MAX_LISTED_VIOLATIONS.min(r.evaluated_nodes));
        let json = r.to_json().unwrap();
        assert!(json.contains("\"-inf\""));
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.worst_margin, f64::NEG_INFINITY);
    }

    #[test]
    fn preconditions() {
        let g = ball(1, 1.0, 0.1);
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let neg = GridFunction::constant(&g, -1.0);
        assert!(check_subsolution(&ma(1), &u, &neg, &[0.2]).is_err());
        let zero = GridFunction::constant(&g, 0.0);
        assert!(check_subsolution(&ma(1), &u, &zero, &[0.15]).is_err());
        assert!(matches!(check_subsolution(&ma(2), &u, &zero, &[0.2]), Err(Error::Argument(_))));
    }

    #[test]
    fn glue_examples() {
        let g = ball(1, 1.0, 0.05);
        let sub = g.restricted(&Shape::ball(vec![0.0; 2], 0.5).unwrap()).unwrap();
        let u = GridFunction::<f64>::constant(&g, 0.0);
        // v ≤ u everywhere on G
        let low = GridFunction::<f64>::from_fn(&sub, |x| abs2(x) - 2.0);
        let out = glue_max(&u, &low).unwrap();
        assert!(out.active().all(|(_, v)| v == 0.0));
        // classic construction: boundary nodes of G sit up to h outside radius 1/2
        let rho = 0.5 + g.h();
        let v = GridFunction::<f64>::from_fn(&sub, |x| abs2(x) - rho * rho);
        let out = glue_max(&u, &v).unwrap();
        for (i, w) in out.active() {
            let expect = if sub.is_active(i) { v.get(i).max(0.0) } else { 0.0 };
            assert_eq!(w, expect);
        }
        // ordering violated on ∂G
        let bad = GridFunction::<f64>::from_fn(&sub, |x| abs2(x));
        match glue_max(&u, &bad) {
            Err(Error::Precondition { nodes, .. }) => assert_eq!(nodes.len(), sub.boundary_count()),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn glue_on_whole_domain_is_max() {
        let g = ball(1, 1.0, 0.1);
        let u = GridFunction::<f64>::from_fn(&g, |x| x[0]);
        let v = GridFunction::<f64>::from_fn(&g, |x| x[1]);
        let out = glue_max(&u, &v).unwrap();
        for (i, w) in out.active() {
            assert_eq!(w, u.get(i).max(v.get(i)));
        }
    }

    #[test]
    fn convex_combination_examples() {
        let g = ball(2, 1.0, 0.125);
        let spec = ma(2);
        let u1 = GridFunction::<f64>::from_fn(&g, abs2);
        let u2 = GridFunction::<f64>::from_fn(&g, |x| 2.0 * abs2(x));
        let (p1, p2) = (GridFunction::constant(&g, 1.0), GridFunction::constant(&g, 2.0));
        let (w, p) = convex_combination(&spec, &u1, &p1, &u2, &p2, 1.0).unwrap();
        assert!(w.active().all(|(i, v)| v == u1.get(i)) && p.constant_value() == Some(1.0));
        let (w, p) = convex_combination(&spec, &u1, &p1, &u1, &p2, 0.5).unwrap();
        assert!(w.active().all(|(i, v)| v == u1.get(i)) && p.constant_value() == Some(1.5));
        let (w, p) = convex_combination(&spec, &u1, &p1, &u2, &p2, 0.5).unwrap();
        let r = check_subsolution(&spec, &w, &p, &[0.25]).unwrap();
        assert!(r.passed && r.worst_margin >= -1e-9);
        assert!(convex_combination(&spec, &u1, &p1, &u2, &p2, 1.5).is_err());
    }

    #[test]
    fn comparison_examples() {
        let g = ball(1, 1.0, 0.1);
        let spec = ma(1);
        let rho = 1.0 + g.h();
        let u = GridFunction::<f64>::from_fn(&g, |x| abs2(x) - rho * rho);
        let v = GridFunction::<f64>::constant(&g, 0.0);
        let one = ConstantSource(1.0);
        let r = check_comparison(&spec, &u, &v, SupersolutionCertificate::Constant, &one, &[0.2]).unwrap();
        assert!(r.passed);
        let d = r.comparison.unwrap();
        assert_eq!(d.diagnosis, ComparisonDiagnosis::Passed);
        assert!(d.subsolution_passed && d.certificate_valid);

        let r = check_comparison(&spec, &u, &u, SupersolutionCertificate::SolverOutput { residual: 0.0, tol_solver: 1e-8 }, &one, &[0.2]).unwrap();
        assert!(r.passed && r.worst_margin == 0.0);

        let sat = OperatorSpec::saturated(ma(1)).unwrap();
        let two = ConstantSource(2.0);
        assert!(matches!(
            check_comparison(&sat, &u, &v, SupersolutionCertificate::Constant, &two, &[0.2]),
            Err(Error::HypothesisViolation { .. })
        ));
    }

    #[test]
    fn comparison_diagnoses() {
        let g = ball(1, 1.0, 0.1);
        let spec = ma(1);
        let one = ConstantSource(1.0);
        let u = GridFunction::<f64>::constant(&g, 1.0);
        let v = GridFunction::<f64>::constant(&g, 0.0);
        let r = check_comparison(&spec, &u, &v, SupersolutionCertificate::Constant, &one, &[0.2]).unwrap();
        assert_eq!(r.comparison.unwrap().diagnosis, ComparisonDiagnosis::BoundaryOrderViolated);

        // a bump above a constant on the interior: not a subsolution of F = 1
        let bump = GridFunction::<f64>::from_fn(&g, |x| if abs2(x) < 0.25 { 0.5 } else { 0.0 });
        let r = check_comparison(&spec, &bump, &v, SupersolutionCertificate::Constant, &one, &[0.2]).unwrap();
        assert_eq!(r.comparison.unwrap().diagnosis, ComparisonDiagnosis::SubsolutionCertificateFailed);

        let convex = GridFunction::<f64>::from_fn(&g, abs2);
        let r = check_comparison(&spec, &bump, &convex, SupersolutionCertificate::DiscreteHarmonic, &one, &[0.2]).unwrap();
        assert_eq!(r.comparison.unwrap().diagnosis, ComparisonDiagnosis::SupersolutionCertificateFailed);

        let harmonic = GridFunction::<f64>::from_fn(&g, |x| x[0] * x[0] - x[1] * x[1]);
        assert!(SupersolutionCertificate::DiscreteHarmonic.holds(&harmonic).unwrap());
    }
}
