use std::collections::BTreeMap;

use super::domain::DomainGrid;
use super::function::GridFunction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Standard bump `exp(-1/(1-t^2))`, `t = |o|h/ε`, sampled at lattice offsets
/// with `|o|h < ε` and normalized to unit mass.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    epsilon: f64,
    h: f64,
    offsets: Vec<Vec<i32>>,
    weights: Vec<f64>,
}

impl MollifierKernel {
    pub fn new(real_dim: usize, h: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 2.0 * h * (1.0 - 1e-12)) {
            return Err(Error::arg(format!("mollifier radius {epsilon} is below 2h = {}", 2.0 * h)));
        }
        let reach = (epsilon / h).ceil() as i32;
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut o = vec![-reach; real_dim];
        loop {
            let r2: f64 = o.iter().map(|&c| (c as f64 * h).powi(2)).sum();
            let t2 = r2 / (epsilon * epsilon);
            if t2 < 1.0 {
                offsets.push(o.clone());
                weights.push((-1.0 / (1.0 - t2)).exp());
            }
            let mut axis = 0;
            loop {
                if axis == real_dim {
                    let mass: f64 = weights.iter().sum();
                    weights.iter_mut().for_each(|w| *w /= mass);
                    return Ok(MollifierKernel { epsilon, h, offsets, weights });
                }
                o[axis] += 1;
                if o[axis] <= reach {
                    break;
                }
                o[axis] = -reach;
                axis += 1;
            }
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn offsets(&self) -> &[Vec<i32>] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_o |o h|^2`: the constant the kernel adds to `|z|^2`.
    pub fn second_moment(&self) -> f64 {
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(o, w)| w * o.iter().map(|&c| (c as f64 * self.h).powi(2)).sum::<f64>())
            .sum()
    }

    /// Offsets grouped by their prefix (all but the last axis).
    fn grouped(&self) -> Vec<(Vec<i32>, Vec<(i32, f64)>)> {
        let mut groups: BTreeMap<Vec<i32>, Vec<(i32, f64)>> = BTreeMap::new();
        for (o, &w) in self.offsets.iter().zip(&self.weights) {
            let d = o.len();
            groups.entry(o[..d - 1].to_vec()).or_default().push((o[d - 1], w));
        }
        groups.into_iter().collect()
    }
}

/// `u * χ_ε` on `eroded_domain(grid, ε)`. Every kernel footprint must be active
/// in `u`'s grid, which holds by construction of the erosion.
pub fn mollify<T: Scalar>(u: &GridFunction<T>, epsilon: f64) -> Result<GridFunction<T>> {
    let grid = u.grid();
    let kernel = MollifierKernel::new(grid.real_dim(), grid.h(), epsilon)?;
    let out_grid = grid.eroded(epsilon)?;
    mollify_with(u, &kernel, &out_grid)
}

pub fn mollify_with<T: Scalar>(u: &GridFunction<T>, kernel: &MollifierKernel, out_grid: &DomainGrid) -> Result<GridFunction<T>> {
    let grid = u.grid();
    if !grid.same_storage(out_grid) {
        return Err(Error::arg("output grid must share storage with the input"));
    }
    if let Some(c) = u.constant_value() {
        return Ok(GridFunction::constant(out_grid, c));
    }
    let groups: Vec<(Vec<i32>, Vec<(i32, T)>)> = kernel
        .grouped()
        .into_iter()
        .map(|(p, v)| (p, v.into_iter().map(|(o, w)| (o, T::lit(w))).collect()))
        .collect();
    let src = u.values();
    let mut values = vec![T::nan(); grid.len()];
    let mut acc: Vec<T> = Vec::new();
    for li in 0..grid.lines().len() {
        let line = grid.line_ref(li);
        let active: Vec<i32> = line.range().filter(|&k| out_grid.is_active(line.index(k).unwrap())).collect();
        let (Some(&ka), Some(&kb)) = (active.first(), active.last()) else { continue };
        acc.clear();
        acc.resize((kb - ka + 1) as usize, T::zero());
        for (prefix, taps) in &groups {
            let nb = grid
                .neighbor_line(li, prefix)
                .ok_or_else(|| Error::domain("mollifier footprint leaves the stored lattice"))?;
            for &(o, w) in taps {
                let (lo, hi) = (nb.range().start - o, nb.range().end - o);
                if ka < lo || kb >= hi {
                    return Err(Error::domain("mollifier footprint leaves the stored lattice"));
                }
                let base = nb.index(ka + o).unwrap();
                for (j, a) in acc.iter_mut().enumerate() {
                    *a += w * src[base + j];
                }
            }
        }
        for k in active {
            let idx = line.index(k).unwrap();
            let v = acc[(k - ka) as usize];
            if !v.is_finite() {
                return Err(Error::domain(format!("mollifier footprint at node {idx} reaches exterior nodes")));
            }
            values[idx] = v;
        }
    }
    GridFunction::from_values(out_grid, values)
}
