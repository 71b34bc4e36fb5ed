use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CONTAIN_TOL: f64 = 1e-12;

/// Bounded convex domain in `R^{2n}` with exact signed distance. Coordinates
/// are ordered `x1, y1, .., xn, yn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Shape {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = Shape::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = Shape::Box { lo, hi };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let d = self.real_dim();
        if d == 0 || d % 2 != 0 {
            return Err(Error::arg(format!("real dimension must be a positive even number, got {d}")));
        }
        match self {
            Shape::Ball { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::arg("ball needs a finite center and a positive radius"));
                }
            }
            Shape::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                    return Err(Error::arg("box needs finite corners with lo < hi on every axis"));
                }
            }
        }
        Ok(())
    }

    pub fn real_dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lo, .. } => lo.len(),
        }
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.real_dim() / 2
    }

    /// Negative inside, zero on the boundary, distance to the boundary outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Ball { center, radius } => {
                center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum::<f64>().sqrt() - radius
            }
            Shape::Box { lo, hi } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for ((a, b), xi) in lo.iter().zip(hi).zip(x) {
                    let q = (xi - 0.5 * (a + b)).abs() - 0.5 * (b - a);
                    outside += q.max(0.0) * q.max(0.0);
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            Shape::Ball { radius, .. } => *radius,
            Shape::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Shape::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            Shape::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Geometric containment `inner ⊆ self`.
    pub fn contains_shape(&self, inner: &Shape) -> bool {
        self.contains_shape_with_margin(inner, 0.0)
    }

    /// Largest `m` with `inner ⊆ {sd ≤ -m}`, or `None` if `inner ⊄ self`.
    pub fn containment_margin(&self, inner: &Shape) -> Option<f64> {
        if !self.contains_shape(inner) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, self.inradius());
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.contains_shape_with_margin(inner, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// `inner ⊆ {x : sd(x) ≤ -margin}`.
    pub fn contains_shape_with_margin(&self, inner: &Shape, m: f64) -> bool {
        if inner.real_dim() != self.real_dim() {
            return false;
        }
        match (self, inner) {
            (Shape::Ball { center: c, radius: r }, Shape::Ball { center: ci, radius: ri }) => {
                let d: f64 = c.iter().zip(ci).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                d + ri <= r - m + CONTAIN_TOL
            }
            (Shape::Ball { center: c, radius: r }, Shape::Box { lo, hi }) => {
                let far: f64 = c
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(ci, (a, b))| {
                        let m = (a - ci).abs().max((b - ci).abs());
                        m * m
                    })
                    .sum();
                far.sqrt() <= r - m + CONTAIN_TOL
            }
            (Shape::Box { lo, hi }, Shape::Ball { center, radius }) => center
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (a, b))| c - radius >= a + m - CONTAIN_TOL && c + radius <= b - m + CONTAIN_TOL),
            (Shape::Box { lo, hi }, Shape::Box { lo: li, hi: hi_i }) => lo
                .iter()
                .zip(li)
                .all(|(a, b)| *b >= a + m - CONTAIN_TOL)
                && hi.iter().zip(hi_i).all(|(a, b)| *b <= a - m + CONTAIN_TOL),
        }
    }
}
