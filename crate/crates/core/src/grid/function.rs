use std::io::{Read, Write};

use super::domain::{DomainGrid, NodeClass};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real values on the active (interior or boundary) nodes of a grid. Exterior
/// storage slots hold NaN.
#[derive(Clone, Debug)]
pub struct GridFunction<T> {
    grid: DomainGrid,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn from_fn(grid: &DomainGrid, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let mut values = vec![T::nan(); grid.len()];
        grid.for_each_position(|idx, x| {
            if grid.is_active(idx) {
                values[idx] = f(x);
            }
        });
        GridFunction { grid: grid.clone(), values }
    }

    pub fn constant(grid: &DomainGrid, c: T) -> Self {
        let values = (0..grid.len()).map(|i| if grid.is_active(i) { c } else { T::nan() }).collect();
        GridFunction { grid: grid.clone(), values }
    }

    /// Takes storage-indexed values; active entries must be finite.
    pub fn from_values(grid: &DomainGrid, mut values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if grid.is_active(i) {
                if !v.is_finite() {
                    return Err(Error::domain(format!("non-finite value at active node {i}")));
                }
            } else {
                *v = T::nan();
            }
        }
        Ok(GridFunction { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> T {
        self.values[idx]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: T) {
        self.values[idx] = v;
    }

    pub fn active(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.values.iter().enumerate().filter(|(i, _)| self.grid.is_active(*i)).map(|(i, &v)| (i, v))
    }

    /// Re-homes the values on another classification of the same storage.
    pub fn transfer(&self, target: &DomainGrid) -> Result<Self> {
        if !self.grid.same_storage(target) {
            return Err(Error::arg("grids do not share storage"));
        }
        let mut values = vec![T::nan(); target.len()];
        for (i, v) in values.iter_mut().enumerate() {
            if target.is_active(i) {
                if !self.grid.is_active(i) {
                    return Err(Error::domain(format!("node {i} is active in the target but has no value")));
                }
                *v = self.values[i];
            }
        }
        Ok(GridFunction { grid: target.clone(), values })
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.grid.is_active(i) { f(v) } else { T::nan() })
            .collect();
        GridFunction { grid: self.grid.clone(), values }
    }

    /// Pointwise combination on `self`'s active nodes; `other` must be active there too.
    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        if !self.grid.same_storage(&other.grid) {
            return Err(Error::arg("grid functions live on different storage"));
        }
        let mut values = vec![T::nan(); self.values.len()];
        for (i, out) in values.iter_mut().enumerate() {
            if self.grid.is_active(i) {
                if !other.grid.is_active(i) {
                    return Err(Error::domain(format!("node {i} has no value in the second field")));
                }
                *out = f(self.values[i], other.values[i]);
            }
        }
        Ok(GridFunction { grid: self.grid.clone(), values })
    }

    pub fn max_value(&self) -> T {
        self.active().fold(T::neg_infinity(), |m, (_, v)| m.max(v))
    }

    pub fn min_value(&self) -> T {
        self.active().fold(T::infinity(), |m, (_, v)| m.min(v))
    }

    pub fn max_abs(&self) -> T {
        self.active().fold(T::zero(), |m, (_, v)| m.max(v.abs()))
    }

    /// `max |self - other|` over nodes of class `class` in `on` (same storage).
    pub fn max_abs_diff_where(&self, other: &Self, on: &DomainGrid, class: Option<NodeClass>) -> Result<T> {
        if !self.grid.same_storage(&other.grid) || !self.grid.same_storage(on) {
            return Err(Error::arg("grid functions live on different storage"));
        }
        let mut worst = T::zero();
        for i in 0..on.len() {
            let take = match class {
                Some(c) => on.class(i) == c,
                None => on.is_active(i),
            };
            if take {
                let d = (self.values[i] - other.values[i]).abs();
                if d.is_nan() {
                    return Err(Error::domain(format!("node {i} has no value in one of the fields")));
                }
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    /// Whether every active value is the same number.
    pub fn constant_value(&self) -> Option<T> {
        let mut it = self.active().map(|(_, v)| v);
        let first = it.next()?;
        it.all(|v| v == first).then_some(first)
    }

    /// CSV `x1,y1,..,xn,yn,value`, one row per active node, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.grid.n();
        let mut header: Vec<String> = (1..=n).flat_map(|a| [format!("x{a}"), format!("y{a}")]).collect();
        header.push("value".into());
        wr.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(2 * n + 1);
        let mut failure = None;
        self.grid.for_each_position(|idx, x| {
            if failure.is_some() || !self.grid.is_active(idx) {
                return;
            }
            row.clear();
            row.extend(x.iter().map(|c| format!("{c:.16e}")));
            row.push(format!("{:.16e}", self.values[idx].as_f64()));
            if let Err(e) = wr.write_record(&row) {
                failure = Some(e);
            }
        });
        if let Some(e) = failure {
            return Err(e.into());
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV format above; every active node of `grid` must appear.
    pub fn read_csv<R: Read>(grid: &DomainGrid, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let d = grid.real_dim();
        let headers = rd.headers()?.clone();
        if headers.len() != d + 1 || &headers[d] != "value" {
            return Err(Error::parse(format!("expected {} coordinate columns and 'value'", d)));
        }
        let mut values = vec![T::nan(); grid.len()];
        let mut x = vec![0.0; d];
        for rec in rd.records() {
            let rec = rec?;
            for (axis, xi) in x.iter_mut().enumerate() {
                *xi = rec[axis].trim().parse().map_err(|_| Error::parse(format!("bad coordinate '{}'", &rec[axis])))?;
            }
            let v: f64 = rec[d].trim().parse().map_err(|_| Error::parse(format!("bad value '{}'", &rec[d])))?;
            let idx = grid
                .index_of_position(&x)
                .ok_or_else(|| Error::parse(format!("row {:?} is not a grid node", x)))?;
            values[idx] = T::lit(v);
        }
        for (i, v) in values.iter().enumerate() {
            if grid.is_active(i) && !v.is_finite() {
                return Err(Error::parse(format!("active node {:?} missing from CSV", grid.position(i))));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn cast<U: Scalar>(&self) -> GridFunction<U> {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| U::lit(v.as_f64())).collect() }
    }
}

/// `|z|^2` in real coordinates.
pub fn abs2(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_domain, Shape};

    fn disc() -> DomainGrid {
        rasterize_domain(Shape::ball(vec![0.0; 2], 1.0).unwrap(), 0.2).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = disc();
        let u = GridFunction::<f64>::from_fn(&g, |x| x[0].sin() + 1.0 / 3.0 * x[1]);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,y1,value\n"));
        assert_eq!(text.lines().count(), 1 + g.interior_count() + g.boundary_count());
        let back = GridFunction::<f64>::read_csv(&g, buf.as_slice()).unwrap();
        for (i, v) in u.active() {
            assert_eq!(back.get(i), v);
        }
    }

    #[test]
    fn csv_rejects_missing_rows() {
        let g = disc();
        let text = "x1,y1,value\n0,0,1\n";
        assert!(GridFunction::<f64>::read_csv(&g, text.as_bytes()).is_err());
    }

    #[test]
    fn transfer_and_exterior_nan() {
        let g = disc();
        let e = g.eroded(0.4).unwrap();
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let t = u.transfer(&e).unwrap();
        for i in 0..g.len() {
            assert_eq!(t.get(i).is_nan(), !e.is_active(i));
        }
        assert!(t.transfer(&g).is_err());
    }
}
