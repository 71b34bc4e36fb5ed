use std::fs;
use std::path::Path;

use hessian_visc::analytic::Field;
use hessian_visc::axioms::{check_f_axioms, AxiomCheck};
use hessian_visc::bellman::{bellman_inf, build_control_set, detect_outside_cone, standard_frames};
use hessian_visc::grid::{DomainDescriptor, DomainGrid, GridFunction};
use hessian_visc::hermitian::eigenvalues;
use hessian_visc::rhs::{sample_source, SampledSource, Source, SourceSpec};
use hessian_visc::solver::{
    approximate_subsolution_sequence, decreasing_solution_sequence, perron_envelope, scheme_residual, solve_dirichlet,
};
use hessian_visc::verify::{check_comparison, check_subsolution, SupersolutionCertificate};
use hessian_visc::{matrix_in_cone, operator_eval, Closure, Error, HermitianMatrix, OperatorSpec};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Library(Error),
    Verification { message: String, details: Value },
    NonConvergence { message: String, details: Value },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Library(e) => match e {
                Error::HypothesisViolation { .. } => 3,
                Error::Precondition { .. } | Error::Schedule { .. } => 2,
                _ => 1,
            },
            Failure::Verification { .. } => 2,
            Failure::NonConvergence { .. } => 4,
        }
    }

    pub fn diagnostic(&self, command: &str) -> Value {
        let (kind, message, details) = match self {
            Failure::Usage(m) => ("usage", m.clone(), Value::Null),
            Failure::Library(e) => {
                let details = match e {
                    Error::HypothesisViolation { limit, max_psi } => {
                        json!({ "limit_at_infinity": ext(*limit), "max_psi": ext(*max_psi) })
                    }
                    Error::Precondition { nodes, .. } => json!({
                        "offending_nodes": nodes.len(),
                        "first_nodes": nodes.iter().take(100).collect::<Vec<_>>(),
                    }),
                    Error::Schedule { achievable_from, achievable_to, .. } => {
                        json!({ "achievable_from": achievable_from, "achievable_to": achievable_to })
                    }
                    _ => Value::Null,
                };
                (error_kind(e), e.to_string(), details)
            }
            Failure::Verification { message, details } => ("verification_failure", message.clone(), details.clone()),
            Failure::NonConvergence { message, details } => ("non_convergence", message.clone(), details.clone()),
        };
        json!({
            "command": command,
            "exit_code": self.exit_code(),
            "kind": kind,
            "message": message,
            "details": details,
        })
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Argument(_) => "argument",
        Error::Domain(_) => "domain",
        Error::Refinement(_) => "refinement",
        Error::EmptyDomain(_) => "empty_domain",
        Error::Precondition { .. } => "precondition",
        Error::HypothesisViolation { .. } => "hypothesis_violation",
        Error::Schedule { .. } => "schedule",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<String> for Failure {
    fn from(m: String) -> Self {
        Failure::Usage(m)
    }
}

type Outcome = Result<(), Failure>;

/// JSON number, or `"inf"`, `"-inf"`, `"nan"`.
pub fn ext(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// Moves every `wall_time_s` into `timing` so reports stay reproducible.
fn split_timing(v: &mut Value, path: &str, timing: &mut serde_json::Map<String, Value>) {
    match v {
        Value::Object(map) => {
            if let Some(t) = map.remove("wall_time_s") {
                timing.insert(if path.is_empty() { "total".into() } else { path.to_string() }, t);
            }
            for (k, child) in map.iter_mut() {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                split_timing(child, &p, timing);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                split_timing(child, &format!("{path}[{i}]"), timing);
            }
        }
        _ => {}
    }
}

pub fn write_json(dir: &Path, name: &str, mut value: Value) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let mut timing = serde_json::Map::new();
    split_timing(&mut value, "", &mut timing);
    fs::write(dir.join(name), serde_json::to_string_pretty(&value).map_err(Error::from)? + "\n").map_err(Error::from)?;
    if !timing.is_empty() {
        let stem = name.trim_end_matches(".json");
        fs::write(dir.join(format!("{stem}.timing.json")), serde_json::to_string_pretty(&Value::Object(timing)).map_err(Error::from)?)
            .map_err(Error::from)?;
    }
    Ok(())
}

fn write_csv(dir: &Path, name: &str, u: &GridFunction<f64>) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let file = fs::File::create(dir.join(name)).map_err(Error::from)?;
    u.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn to_value<S: serde::Serialize>(s: &S) -> Result<Value, Failure> {
    Ok(serde_json::to_value(s).map_err(Error::from)?)
}

fn spec(rc: &RunConfig) -> Result<OperatorSpec, Failure> {
    Ok(rc.require("spec")?.parse()?)
}

fn grid(rc: &RunConfig) -> Result<DomainGrid, Failure> {
    let desc: DomainDescriptor = rc.require("domain")?.parse()?;
    Ok(DomainGrid::from_descriptor(&desc)?)
}

fn field(text: &str, grid: &DomainGrid) -> Result<GridFunction<f64>, Failure> {
    if let Ok(f) = text.parse::<Field>() {
        return Ok(f.sample(grid)?);
    }
    let path = Path::new(text);
    if path.is_file() {
        let file = fs::File::open(path).map_err(Error::from)?;
        return Ok(GridFunction::read_csv(grid, std::io::BufReader::new(file))?);
    }
    Err(Failure::Usage(format!("'{text}' is neither an analytic field nor a readable CSV file")))
}

fn source(rc: &RunConfig, grid: &DomainGrid) -> Result<Box<dyn Source<f64>>, Failure> {
    let text = rc.require("psi")?;
    match text.parse::<SourceSpec>() {
        Ok(s) => Ok(s.build()),
        Err(_) if Path::new(text).is_file() => Ok(Box::new(SampledSource(field(text, grid)?))),
        Err(e) => Err(e.into()),
    }
}

fn epsilons(rc: &RunConfig, h: f64) -> Result<Vec<f64>, Failure> {
    match rc.get("epsilons") {
        None => Ok(vec![2.0 * h]),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad epsilon '{t}'"))))
            .collect(),
    }
}

fn matrix(text: &str) -> Result<HermitianMatrix<f64>, Failure> {
    let t = text.trim();
    let json_text = if t.starts_with('[') {
        t.to_string()
    } else if Path::new(t).is_file() {
        fs::read_to_string(t).map_err(Error::from)?
    } else {
        let entries = t
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad matrix entry '{x}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != entries.len() {
            return Err(Failure::Usage(format!("{} real entries do not form a square matrix", entries.len())));
        }
        return Ok(HermitianMatrix::from_real_rows(n, &entries)?);
    };
    Ok(serde_json::from_str(&json_text).map_err(Error::from)?)
}

fn subdomain(text: &str, grid: &DomainGrid) -> Result<hessian_visc::grid::Shape, Failure> {
    let mut t = text.trim().to_string();
    if !t.contains("n=") {
        t.push_str(&format!(";n={}", grid.n()));
    }
    if !t.contains("h=") {
        t.push_str(&format!(";h={}", grid.h()));
    }
    Ok(t.parse::<DomainDescriptor>()?.shape)
}

fn common(rc: &RunConfig, spec: &OperatorSpec, grid: &DomainGrid) -> Value {
    json!({
        "spec": spec.to_string(),
        "domain": grid.describe(),
        "psi": rc.get("psi"),
        "seed": rc.get("seed"),
    })
}

pub fn run(rc: &RunConfig) -> Outcome {
    match rc.command {
        Command::Axioms => axioms(rc),
        Command::Eval => eval(rc),
        Command::Verify => verify(rc),
        Command::Solve => solve(rc),
        Command::Envelope => envelope(rc),
        Command::Sequence => sequence(rc),
    }
}

fn axioms(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let samples = rc.number("samples", 1000usize)?;
    let seed = rc.number("seed", 0u64)?;
    let report = check_f_axioms(&spec, samples, seed)?;
    let checks = [AxiomCheck::Symmetry, AxiomCheck::Monotonicity, AxiomCheck::Concavity, AxiomCheck::Homogeneity, AxiomCheck::Gradient];
    let counts: serde_json::Map<String, Value> =
        checks.iter().map(|&c| (to_value(&c).unwrap().as_str().unwrap_or("").to_string(), json!(report.count(c)))).collect();
    let passed = report.passed();
    let mut value = to_value(&report)?;
    value["passed"] = json!(passed);
    value["violation_counts"] = Value::Object(counts);
    write_json(&rc.out, "axioms.json", value)?;
    if !passed {
        return Err(Failure::Verification {
            message: format!("{} axiom violations", report.violations.len()),
            details: json!({ "report": "axioms.json" }),
        });
    }
    Ok(())
}

fn eval(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let b = matrix(rc.require("matrix")?)?;
    if b.n() != spec.n() {
        return Err(Failure::Usage(format!("matrix is {0}x{0}, operator has n = {1}", b.n(), spec.n())));
    }
    let resolution = rc.number("resolution", rc.solver.control_resolution)?;
    let budget = rc.number("scan_budget", 10_000usize)?;
    let controls = build_control_set(&spec, resolution, &standard_frames(spec.n(), rc.solver.frames))?;
    let inf = bellman_inf(&controls, &b)?;
    let scan = detect_outside_cone(&spec, &b, budget)?;
    let value = json!({
        "spec": spec.to_string(),
        "matrix": to_value(&b)?,
        "eigenvalues": eigenvalues(&b).as_slice(),
        "in_closed_cone": matrix_in_cone(&b, spec.cone(), Closure::Closed)?,
        "f_eval": ext(operator_eval(&spec, &b)?),
        "bellman_inf": ext(inf),
        "resolution": resolution,
        "frames": rc.solver.frames.to_string(),
        "controls": controls.len(),
        "outside_scan": {
            "outside": scan.outside,
            "evaluations": scan.evaluations,
            "tol_neg": scan.tol_neg,
            "best_value": ext(scan.best_value),
        },
    });
    write_json(&rc.out, "eval.json", value)
}

fn verify(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let grid = grid(rc)?;
    let psi = source(rc, &grid)?;
    let u = field(rc.require("field")?, &grid)?;
    let eps = epsilons(rc, grid.h())?;
    let report = match rc.get("super") {
        None => check_subsolution(&spec, &u, &sample_source(psi.as_ref(), &u), &eps)?,
        Some(text) => {
            let v = field(text, &grid)?;
            let certificate = match rc.get("certificate").unwrap_or("constant") {
                "constant" => SupersolutionCertificate::Constant,
                "harmonic" => SupersolutionCertificate::DiscreteHarmonic,
                "solver" => {
                    let res = scheme_residual(&spec, &v, psi.as_ref(), &rc.solver)?;
                    SupersolutionCertificate::SolverOutput { residual: res.max_value(), tol_solver: rc.solver.tol_solver }
                }
                other => return Err(Failure::Usage(format!("unknown certificate '{other}' (constant, harmonic, solver)"))),
            };
            check_comparison(&spec, &u, &v, certificate, psi.as_ref(), &eps)?
        }
    };
    let mut value = to_value(&report)?;
    value["run"] = common(rc, &spec, &grid);
    write_json(&rc.out, "verify.json", value)?;
    if !report.passed {
        return Err(Failure::Verification {
            message: format!("{} violations (worst margin {:e})", report.violation_count, report.worst_margin),
            details: json!({ "report": "verify.json", "violation_count": report.violation_count }),
        });
    }
    Ok(())
}

fn not_converged(what: &str, residual: f64, iterations: usize) -> Failure {
    Failure::NonConvergence {
        message: format!("{what} stopped after {iterations} iterations at residual {residual:e}"),
        details: json!({ "final_residual": ext(residual), "iterations": iterations }),
    }
}

fn solve(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let grid = grid(rc)?;
    let psi = source(rc, &grid)?;
    let g = field(rc.require("boundary")?, &grid)?;
    let (u, report) = solve_dirichlet(&spec, &grid, psi.as_ref(), &g, &rc.solver)?;
    write_csv(&rc.out, "solution.csv", &u)?;
    let mut value = json!({ "run": common(rc, &spec, &grid), "solver": rc.solver.to_string(), "report": to_value(&report)? });
    let exact = rc.get("exact").or_else(|| rc.get("boundary").filter(|b| b.parse::<Field>().is_ok()));
    if let Some(name) = exact {
        let e = field(name, &grid)?;
        value["exact"] = json!(name);
        value["max_error"] = ext(u.max_abs_diff_where(&e, &grid, None)?);
    }
    write_json(&rc.out, "report.json", value)?;
    if !report.converged {
        return Err(not_converged("solver", report.final_residual, report.iterations));
    }
    Ok(())
}

fn envelope(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let grid = grid(rc)?;
    let psi = source(rc, &grid)?;
    let v = field(rc.get("boundary").or(rc.get("super")).ok_or("'envelope' needs --boundary (the supersolution v)".to_string())?, &grid)?;
    let (u, report) = perron_envelope(&spec, &grid, psi.as_ref(), &v, &rc.solver)?;
    write_csv(&rc.out, "envelope.csv", &u)?;
    let value = json!({ "run": common(rc, &spec, &grid), "solver": rc.solver.to_string(), "report": to_value(&report)? });
    write_json(&rc.out, "report.json", value)?;
    if !report.converged {
        return Err(not_converged("perron iteration", report.final_residual, report.iterations));
    }
    Ok(())
}

fn sequence(rc: &RunConfig) -> Outcome {
    let spec = spec(rc)?;
    let grid = grid(rc)?;
    let psi = source(rc, &grid)?;
    let u = field(rc.require("field")?, &grid)?;
    let count = rc.number("count", 6usize)?;
    let seq_cfg = rc.sequence()?;
    let mut value = json!({ "run": common(rc, &spec, &grid), "count": count });
    match rc.get("subdomain") {
        None => {
            let seq = approximate_subsolution_sequence(&spec, &u, psi.as_ref(), count, &seq_cfg)?;
            let mut files = Vec::new();
            for st in &seq.stages {
                let name = format!("stage_{:02}.csv", st.j);
                write_csv(&rc.out, &name, &st.field)?;
                files.push(name);
            }
            let a = &seq.audit;
            let ok = a.nonincreasing && a.all_strictly_positive && a.convergence_bounds_hold;
            value["common_grid"] = json!(seq.grid.describe());
            value["stage_files"] = json!(files);
            value["audit"] = to_value(a)?;
            value["passed"] = json!(ok);
            write_json(&rc.out, "summary.json", value)?;
            if !ok {
                return Err(Failure::Verification { message: "approximation sequence audit failed".into(), details: json!({ "report": "summary.json" }) });
            }
        }
        Some(text) => {
            let sub = subdomain(text, &grid)?;
            let seq = decreasing_solution_sequence(&spec, &u, &sub, psi.as_ref(), count, &rc.solver, &seq_cfg)?;
            let mut files = Vec::new();
            let mut reports = Vec::new();
            for st in &seq.stages {
                let name = format!("solution_{:02}.csv", st.j);
                write_csv(&rc.out, &name, &st.field)?;
                files.push(name);
                reports.push(to_value(&st.report)?);
            }
            let a = &seq.audit;
            let ok = a.nonincreasing_violations == 0 && a.bound_holds;
            value["sub_grid"] = json!(seq.sub_grid.describe());
            value["stage_files"] = json!(files);
            value["approximation"] = to_value(&seq.approximation)?;
            value["audit"] = to_value(a)?;
            value["solves"] = Value::Array(reports);
            value["passed"] = json!(ok && a.all_converged);
            value["solver"] = json!(rc.solver.to_string());
            write_json(&rc.out, "summary.json", value)?;
            if !a.all_converged {
                let worst = seq.stages.iter().find(|s| !s.report.converged).map(|s| &s.report);
                let (res, it) = worst.map(|r| (r.final_residual, r.iterations)).unwrap_or((f64::NAN, 0));
                return Err(not_converged("stage solve", res, it));
            }
            if !ok {
                return Err(Failure::Verification { message: "decreasing sequence audit failed".into(), details: json!({ "report": "summary.json" }) });
            }
        }
    }
    Ok(())
}
