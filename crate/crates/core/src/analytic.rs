//! Built-in analytic fields, addressable by name from configs and the CLI.
//!
//! `zero`, `const:c`, `abs2`, `neg-abs2`, `quadratic:a1,..,an[;c]`
//! (`Σ a_α |z_α|^2 + c`) and `max(f|g)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{DomainGrid, GridFunction};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Zero,
    Const(f64),
    Abs2,
    NegAbs2,
    Quadratic { coeffs: Vec<f64>, constant: f64 },
    Max(Box<Field>, Box<Field>),
}

impl Field {
    /// Value at real coordinates `x1, y1, .., xn, yn`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Field::Zero => 0.0,
            Field::Const(c) => *c,
            Field::Abs2 => x.iter().map(|c| c * c).sum(),
            Field::NegAbs2 => -x.iter().map(|c| c * c).sum::<f64>(),
            Field::Quadratic { coeffs, constant } => {
                coeffs.iter().enumerate().map(|(a, c)| c * (x[2 * a] * x[2 * a] + x[2 * a + 1] * x[2 * a + 1])).sum::<f64>()
                    + constant
            }
            Field::Max(f, g) => f.eval(x).max(g.eval(x)),
        }
    }

    /// Complex dimension the field requires, if it fixes one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Field::Quadratic { coeffs, .. } => Some(coeffs.len()),
            Field::Max(f, g) => f.dimension().or_else(|| g.dimension()),
            _ => None,
        }
    }

    pub fn sample<T: Scalar>(&self, grid: &DomainGrid) -> Result<GridFunction<T>> {
        if let Some(n) = self.dimension() {
            if n != grid.n() {
                return Err(Error::arg(format!("field '{self}' is for n = {n}, grid has n = {}", grid.n())));
            }
        }
        Ok(GridFunction::from_fn(grid, |x| T::lit(self.eval(x))))
    }
}

fn split_top_level(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '|' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::parse(format!("bad number '{t}' in field '{s}'")));
        match s {
            "zero" => return Ok(Field::Zero),
            "abs2" => return Ok(Field::Abs2),
            "neg-abs2" => return Ok(Field::NegAbs2),
            _ => {}
        }
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(Field::Const(num(c)?));
        }
        if let Some(rest) = s.strip_prefix("quadratic:") {
            let (coeffs, constant) = match rest.split_once(';') {
                Some((a, c)) => (a, num(c)?),
                None => (rest, 0.0),
            };
            let coeffs = coeffs.split(',').map(num).collect::<Result<Vec<_>>>()?;
            return Ok(Field::Quadratic { coeffs, constant });
        }
        if let Some(inner) = s.strip_prefix("max(").and_then(|r| r.strip_suffix(')')) {
            let (a, b) = split_top_level(inner).ok_or_else(|| Error::parse(format!("max needs 'max(f|g)', got '{s}'")))?;
            return Ok(Field::Max(Box::new(a.parse()?), Box::new(b.parse()?)));
        }
        Err(Error::parse(format!(
            "unknown field '{s}' (zero, const:c, abs2, neg-abs2, quadratic:a1,..,an[;c], max(f|g))"
        )))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Zero => f.write_str("zero"),
            Field::Const(c) => write!(f, "const:{c}"),
            Field::Abs2 => f.write_str("abs2"),
            Field::NegAbs2 => f.write_str("neg-abs2"),
            Field::Quadratic { coeffs, constant } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                if *constant == 0.0 {
                    write!(f, "quadratic:{}", cs.join(","))
                } else {
                    write!(f, "quadratic:{};{constant}", cs.join(","))
                }
            }
            Field::Max(a, b) => write!(f, "max({a}|{b})"),
        }
    }
}
