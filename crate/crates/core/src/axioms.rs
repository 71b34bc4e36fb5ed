//! Randomized audit of the structural hypotheses on `f`: symmetry, strict
//! monotonicity, concavity, degree-1 homogeneity, and the analytic gradient.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{f_eval, f_gradient, EigenTuple, OperatorSpec};
use crate::error::Result;

pub const CONCAVITY_TOL: f64 = 1e-9;
pub const EULER_REL_TOL: f64 = 1e-8;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomCheck {
    Symmetry,
    Monotonicity,
    Concavity,
    Homogeneity,
    Gradient,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub check: AxiomCheck,
    pub sample: usize,
    pub point: Vec<f64>,
    /// Size of the violation in the check's own units.
    pub amount: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomReport {
    pub spec: OperatorSpec,
    pub samples: usize,
    pub seed: u64,
    pub homogeneity_skipped: bool,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, check: AxiomCheck) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

fn sample_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.1..10.0)).collect()
}

fn eval(spec: &OperatorSpec, x: &[f64]) -> Result<f64> {
    f_eval(spec, &EigenTuple::new(x.to_vec())?)
}

/// Draws `sample_count` points with entries in [0.1, 10] (inside Γ_n ⊆ Γ_k)
/// and records every failed check.
pub fn check_f_axioms(spec: &OperatorSpec, sample_count: usize, seed: u64) -> Result<AxiomReport> {
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut flag = |check, sample, point: &[f64], amount: f64| {
        violations.push(AxiomViolation { check, sample, point: point.to_vec(), amount });
    };

    for s in 0..sample_count {
        let x = sample_point(&mut rng, n);
        let y = sample_point(&mut rng, n);
        let fx = eval(spec, &x)?;

        let mut perm = x.clone();
        perm.shuffle(&mut rng);
        let fp = eval(spec, &perm)?;
        if fp.to_bits() != fx.to_bits() {
            flag(AxiomCheck::Symmetry, s, &x, (fp - fx).abs());
        }

        let i = rng.gen_range(0..n);
        let mut bumped = x.clone();
        bumped[i] += rng.gen_range(0.05..1.0);
        let fb = eval(spec, &bumped)?;
        if fb <= fx {
            flag(AxiomCheck::Monotonicity, s, &x, fx - fb);
        }

        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let fy = eval(spec, &y)?;
        let fm = eval(spec, &mid)?;
        let slack = fm - 0.5 * (fx + fy);
        if slack < -CONCAVITY_TOL {
            flag(AxiomCheck::Concavity, s, &x, -slack);
        }

        let grad = f_gradient(spec, &EigenTuple::new(x.clone())?)?.into_vec();
        if spec.is_homogeneous() {
            let euler: f64 = x.iter().zip(&grad).map(|(a, g)| a * g).sum();
            let rel = (euler - fx).abs() / fx.abs().max(f64::MIN_POSITIVE);
            if rel > EULER_REL_TOL {
                flag(AxiomCheck::Homogeneity, s, &x, rel);
            }
        }

        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut worst = 0.0f64;
        for (j, &gj) in grad.iter().enumerate() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += FD_STEP;
            xm[j] -= FD_STEP;
            let fd = (eval(spec, &xp)? - eval(spec, &xm)?) / (2.0 * FD_STEP);
            worst = worst.max((fd - gj).abs() / gmax);
        }
        if worst > GRADIENT_REL_TOL || grad.iter().any(|&g| g <= 0.0) {
            flag(AxiomCheck::Gradient, s, &x, worst);
        }
    }

    Ok(AxiomReport {
        spec: spec.clone(),
        samples: sample_count,
        seed,
        homogeneity_skipped: !spec.is_homogeneous(),
        violations,
    })
}
