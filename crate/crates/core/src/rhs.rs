//! Right-hand sides `ψ(z, r)`, nonnegative and nondecreasing in `r`.

use std::fmt;
use std::str::FromStr;

use crate::analytic::Field;
use crate::error::{Error, Result};
use crate::grid::{DomainGrid, GridFunction};
use crate::scalar::Scalar;

pub trait Source<T: Scalar>: Send + Sync {
    /// `ψ` at storage node `node` (position `z`) for solution value `r`.
    fn value(&self, node: usize, z: &[f64], r: T) -> T;

    /// `∂ψ/∂r ≥ 0` (one-sided where ψ has a kink).
    fn derivative_r(&self, _node: usize, _z: &[f64], _r: T) -> T {
        T::zero()
    }

    /// Upper bound on `∂ψ/∂r`.
    fn lipschitz_r(&self) -> T {
        T::zero()
    }

    fn depends_on_r(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantSource<T>(pub T);

impl<T: Scalar> Source<T> for ConstantSource<T> {
    fn value(&self, _: usize, _: &[f64], _: T) -> T {
        self.0
    }

    fn describe(&self) -> String {
        format!("const:{}", self.0)
    }
}

/// `ψ(z, r) = a + b·max(r, 0)` with `b ≥ 0`.
#[derive(Clone, Copy, Debug)]
pub struct AffineInR<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> Source<T> for AffineInR<T> {
    fn value(&self, _: usize, _: &[f64], r: T) -> T {
        self.a + self.b * r.max(T::zero())
    }

    fn derivative_r(&self, _: usize, _: &[f64], r: T) -> T {
        if r > T::zero() {
            self.b
        } else {
            T::zero()
        }
    }

    fn lipschitz_r(&self) -> T {
        self.b
    }

    fn depends_on_r(&self) -> bool {
        self.b != T::zero()
    }

    fn describe(&self) -> String {
        format!("lin:{},{}", self.a, self.b)
    }
}

/// `ψ(z)` read from grid samples (storage index).
#[derive(Clone, Debug)]
pub struct SampledSource<T>(pub GridFunction<T>);

impl<T: Scalar> Source<T> for SampledSource<T> {
    fn value(&self, node: usize, _: &[f64], _: T) -> T {
        self.0.get(node)
    }

    fn describe(&self) -> String {
        "sampled".into()
    }
}

/// `ψ(z)` from an analytic field.
#[derive(Clone, Debug)]
pub struct FieldSource(pub Field);

impl<T: Scalar> Source<T> for FieldSource {
    fn value(&self, _: usize, z: &[f64], _: T) -> T {
        T::lit(self.0.eval(z))
    }

    fn describe(&self) -> String {
        self.0.to_string()
    }
}

/// Text form of a right-hand side: `lin:a,b` or any analytic field name.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Affine { a: f64, b: f64 },
    Field(Field),
}

impl FromStr for SourceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("lin:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::parse(format!("lin source needs 'lin:a,b', got '{s}'")));
            }
            let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::parse(format!("bad number '{t}'")));
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            if b < 0.0 {
                return Err(Error::arg("psi must be nondecreasing in r (b >= 0)"));
            }
            return Ok(SourceSpec::Affine { a, b });
        }
        Ok(SourceSpec::Field(s.parse()?))
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Affine { a, b } => write!(f, "lin:{a},{b}"),
            SourceSpec::Field(field) => write!(f, "{field}"),
        }
    }
}

impl SourceSpec {
    pub fn build<T: Scalar>(&self) -> Box<dyn Source<T>> {
        match self {
            SourceSpec::Affine { a, b } => Box::new(AffineInR { a: T::lit(*a), b: T::lit(*b) }),
            SourceSpec::Field(Field::Const(c)) => Box::new(ConstantSource(T::lit(*c))),
            SourceSpec::Field(field) => Box::new(FieldSource(field.clone())),
        }
    }
}

/// `z ↦ ψ(z, r(z))` sampled on the active nodes of `r`'s grid.
pub fn sample_source<T: Scalar>(psi: &dyn Source<T>, r: &GridFunction<T>) -> GridFunction<T> {
    let grid = r.grid();
    let mut values = vec![T::nan(); grid.len()];
    grid.for_each_position(|idx, z| {
        if grid.is_active(idx) {
            values[idx] = psi.value(idx, z, r.get(idx));
        }
    });
    GridFunction::from_values(grid, values).expect("finite source samples")
}

/// Samples `ψ` at every active node for each `r` in `levels` and checks `ψ ≥ 0`
/// and monotonicity in `r`. Returns the largest value seen.
pub fn audit_source<T: Scalar>(psi: &dyn Source<T>, grid: &DomainGrid, levels: &[T]) -> Result<T> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut worst: Option<String> = None;
    let mut max_psi = T::neg_infinity();
    grid.for_each_position(|idx, z| {
        if worst.is_some() || !grid.is_active(idx) {
            return;
        }
        let mut prev = T::neg_infinity();
        for &r in &sorted {
            let v = psi.value(idx, z, r);
            if !(v >= T::zero()) {
                worst = Some(format!("psi({z:?}, {r}) = {v} is negative"));
                return;
            }
            if v < prev {
                worst = Some(format!("psi decreases in r at {z:?}"));
                return;
            }
            prev = v;
            max_psi = max_psi.max(v);
        }
    });
    match worst {
        Some(msg) => Err(Error::arg(msg)),
        None => Ok(max_psi),
    }
}
