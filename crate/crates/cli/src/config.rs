use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use hessian_visc::solver::{SequenceConfig, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Axioms,
    Eval,
    Verify,
    Solve,
    Envelope,
    Sequence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Axioms => "axioms",
            Command::Eval => "eval",
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Envelope => "envelope",
            Command::Sequence => "sequence",
        }
    }
}

/// Evaluate, verify and solve complex Hessian equations F(Hu) = psi(z, u).
#[derive(Debug, Parser)]
#[command(name = "hvisc", version)]
pub struct Cli {
    pub command: Command,
    /// Operator, e.g. `ma:n=2`, `hess:k=2,n=3`, `quot:k=2,l=1,n=3`, `sat(ma:n=2)`.
    #[arg(long)]
    pub spec: Option<String>,
    /// `ball:c=0,0;r=1;h=0.1` or `box:lo=-1,-1;hi=1,1;h=0.1`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Right-hand side: `lin:a,b`, an analytic field, or a CSV path.
    #[arg(long)]
    pub psi: Option<String>,
    /// Boundary data (solve) or supersolution (envelope): field name or CSV.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Field under test: analytic field name or CSV path.
    #[arg(long)]
    pub field: Option<String>,
    /// Comma-separated mollification radii.
    #[arg(long)]
    pub epsilons: Option<String>,
    #[arg(long)]
    pub count: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<String>,
    /// `key=value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hermitian matrix for `eval`: real row-major list, JSON `[[re,im],..]`, or JSON file.
    #[arg(long)]
    pub matrix: Option<String>,
    /// Sub-domain for the decreasing solution sequence, e.g. `ball:c=0;r=0.6`.
    #[arg(long)]
    pub subdomain: Option<String>,
    /// Supersolution for the comparison check in `verify`.
    #[arg(long = "super")]
    pub supersolution: Option<String>,
    /// `constant`, `harmonic` or `solver`.
    #[arg(long)]
    pub certificate: Option<String>,
    /// Exact solution for `solve` error reporting.
    #[arg(long)]
    pub exact: Option<String>,
    /// Extra `key=value` settings, `;`-separated (solver and command keys).
    #[arg(long)]
    pub set: Vec<String>,
}

const KEYS: &[&str] = &[
    "spec", "domain", "psi", "boundary", "field", "epsilons", "count", "out", "seed", "matrix", "subdomain", "super",
    "certificate", "exact", "samples", "resolution", "scan_budget", "r", "eps_max", "eps_check", "bisection_steps",
];

#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub values: BTreeMap<String, String>,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

fn parse_pairs(text: &str, into: &mut BTreeMap<String, String>) -> Result<(), String> {
    for item in text.split(['\n', ';']) {
        let item = item.split('#').next().unwrap_or("").trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got '{item}'"))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) && !SolverConfig::is_key(&k) {
            return Err(format!("unknown config key '{k}'"));
        }
        into.insert(k, v.trim().to_string());
    }
    Ok(())
}

/// Values that themselves contain `;` (domains and sub-domains) are read
/// one per line from config files.
fn parse_file(text: &str, into: &mut BTreeMap<String, String>) -> Result<(), String> {
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("expected key=value, got '{line}'"))?;
        let k = k.trim();
        if matches!(k, "domain" | "subdomain" | "solver") {
            into.insert(k.to_string(), v.trim().to_string());
        } else {
            parse_pairs(line, into)?;
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            parse_file(&text, &mut values)?;
        }
        for s in &cli.set {
            parse_pairs(s, &mut values)?;
        }
        let flags = [
            ("spec", cli.spec),
            ("domain", cli.domain),
            ("psi", cli.psi),
            ("boundary", cli.boundary),
            ("field", cli.field),
            ("epsilons", cli.epsilons),
            ("count", cli.count),
            ("seed", cli.seed),
            ("matrix", cli.matrix),
            ("subdomain", cli.subdomain),
            ("super", cli.supersolution),
            ("certificate", cli.certificate),
            ("exact", cli.exact),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        if let Some(out) = cli.out {
            values.insert("out".into(), out.display().to_string());
        }
        let mut solver = SolverConfig::default();
        if let Some(s) = values.get("solver") {
            solver = s.parse().map_err(|e| format!("{e}"))?;
        }
        for (k, v) in &values {
            if SolverConfig::is_key(k) {
                solver.set(k, v).map_err(|e| format!("{e}"))?;
            }
        }
        let out = PathBuf::from(values.get("out").map(String::as_str).unwrap_or("hvisc-out"));
        Ok(RunConfig { command: cli.command, values, solver, out })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, String> {
        self.get(key).ok_or_else(|| format!("'{}' needs --{key}", self.command.name()))
    }

    pub fn number<N: std::str::FromStr>(&self, key: &str, default: N) -> Result<N, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("bad value '{v}' for '{key}'")),
        }
    }

    pub fn optional_f64(&self, key: &str) -> Result<Option<f64>, String> {
        self.get(key).map(|v| v.parse().map_err(|_| format!("bad value '{v}' for '{key}'"))).transpose()
    }

    pub fn sequence(&self) -> Result<SequenceConfig, String> {
        let d = SequenceConfig::default();
        Ok(SequenceConfig {
            r: self.number("r", d.r)?,
            eps_max: self.optional_f64("eps_max")?,
            eps_check: self.optional_f64("eps_check")?,
            bisection_steps: self.number("bisection_steps", d.bisection_steps)?,
            verify_input: d.verify_input,
        })
    }
}
