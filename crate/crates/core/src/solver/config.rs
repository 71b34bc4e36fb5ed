use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bellman::FrameSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tau {
    Auto,
    Value(f64),
}

/// Solver settings; text form is `key=value` pairs separated by newlines or `;`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_solver: f64,
    /// Newton steps with policy iteration, sweeps otherwise; `None` picks a default.
    pub max_iters: Option<usize>,
    pub tau: Tau,
    pub policy_iteration: bool,
    pub control_resolution: usize,
    pub frames: FrameSet,
    pub max_linear_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_solver: 1e-8,
            max_iters: None,
            tau: Tau::Auto,
            policy_iteration: true,
            control_resolution: 10,
            frames: FrameSet::CoordDiag,
            max_linear_iters: 20_000,
        }
    }
}

pub const DEFAULT_NEWTON_STEPS: usize = 100;
pub const DEFAULT_SWEEPS: usize = 500_000;

impl SolverConfig {
    pub fn damped() -> Self {
        SolverConfig { policy_iteration: false, ..Default::default() }
    }

    pub fn iteration_limit(&self) -> usize {
        self.max_iters.unwrap_or(if self.policy_iteration { DEFAULT_NEWTON_STEPS } else { DEFAULT_SWEEPS })
    }

    /// Applies one `key=value` setting. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::parse(format!("bad value '{value}' for solver key '{key}'"));
        let value = value.trim();
        match key.trim() {
            "scheme" => {
                if value != "bellman" {
                    return Err(Error::parse(format!("unknown scheme '{value}' (bellman)")));
                }
            }
            "tol_solver" => {
                let t: f64 = value.parse().map_err(|_| bad())?;
                if !(t > 0.0) {
                    return Err(bad());
                }
                self.tol_solver = t;
            }
            "max_iters" => self.max_iters = Some(value.parse().map_err(|_| bad())?),
            "tau" => {
                self.tau = if value == "auto" {
                    Tau::Auto
                } else {
                    let t: f64 = value.parse().map_err(|_| bad())?;
                    if !(t > 0.0) {
                        return Err(bad());
                    }
                    Tau::Value(t)
                }
            }
            "policy_iteration" => {
                self.policy_iteration = match value {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(bad()),
                }
            }
            "control_resolution" => {
                let r: usize = value.parse().map_err(|_| bad())?;
                if r == 0 {
                    return Err(bad());
                }
                self.control_resolution = r;
            }
            "frames" => self.frames = value.parse()?,
            "max_linear_iters" => self.max_linear_iters = value.parse().map_err(|_| bad())?,
            other => return Err(Error::parse(format!("unknown solver key '{other}'"))),
        }
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        matches!(
            key,
            "scheme" | "tol_solver" | "max_iters" | "tau" | "policy_iteration" | "control_resolution" | "frames" | "max_linear_iters"
        )
    }
}

impl FromStr for SolverConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        for item in s.split(['\n', ';']) {
            let item = item.split('#').next().unwrap_or("").trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item.split_once('=').ok_or_else(|| Error::parse(format!("expected key=value, got '{item}'")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

impl fmt::Display for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scheme=bellman;tol_solver={}", self.tol_solver)?;
        if let Some(m) = self.max_iters {
            write!(f, ";max_iters={m}")?;
        }
        match self.tau {
            Tau::Auto => write!(f, ";tau=auto")?,
            Tau::Value(t) => write!(f, ";tau={t}")?,
        }
        write!(
            f,
            ";policy_iteration={};control_resolution={};frames={};max_linear_iters={}",
            if self.policy_iteration { "on" } else { "off" },
            self.control_resolution,
            self.frames,
            self.max_linear_iters
        )
    }
}
