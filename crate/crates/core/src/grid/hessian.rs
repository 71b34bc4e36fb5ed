use num_complex::Complex;

use super::function::GridFunction;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::scalar::Scalar;

/// Stencil of the discrete complex Hessian: the centre, `±e_p` on every real
/// axis, and the four diagonal points `±e_p ± e_q` for every pair of real axes
/// belonging to different complex coordinates.
#[derive(Clone, Debug)]
pub struct HessianStencil {
    n: usize,
    offsets: Vec<Vec<i32>>,
    axis: Vec<[usize; 2]>,
    cross: Vec<(usize, usize, [usize; 4])>,
}

impl HessianStencil {
    pub fn new(n: usize) -> Self {
        let d = 2 * n;
        let mut offsets = vec![vec![0; d]];
        let mut push = |o: Vec<i32>| {
            offsets.push(o);
            offsets.len() - 1
        };
        let unit = |p: usize, s: i32| {
            let mut o = vec![0; d];
            o[p] = s;
            o
        };
        let axis: Vec<[usize; 2]> = (0..d).map(|p| [push(unit(p, 1)), push(unit(p, -1))]).collect();
        let mut cross = Vec::new();
        for p in 0..d {
            for q in (p + 1)..d {
                if p / 2 == q / 2 {
                    continue;
                }
                let mut slots = [0; 4];
                for (j, (sp, sq)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                    let mut o = vec![0; d];
                    o[p] = sp;
                    o[q] = sq;
                    slots[j] = push(o);
                }
                cross.push((p, q, slots));
            }
        }
        HessianStencil { n, offsets, axis, cross }
    }

    pub fn offsets(&self) -> &[Vec<i32>] {
        &self.offsets
    }

    /// Hessian from stencil samples `s[j] = u(x + offsets[j]·h)`.
    pub fn assemble<T: Scalar>(&self, s: &[T], h: f64) -> HermitianMatrix<T> {
        let n = self.n;
        let h2 = T::lit(h * h);
        let quarter = T::lit(0.25);
        let c = s[0];
        let second = |p: usize| (s[self.axis[p][0]] - c - c + s[self.axis[p][1]]) / h2;
        let mut mixed = vec![T::zero(); 4 * n * n];
        for &(p, q, sl) in &self.cross {
            let x = (s[sl[0]] - s[sl[1]] - s[sl[2]] + s[sl[3]]) / (T::lit(4.0) * h2);
            mixed[p * 2 * n + q] = x;
            mixed[q * 2 * n + p] = x;
        }
        let m = |p: usize, q: usize| mixed[p * 2 * n + q];
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in 0..n {
            data[a * n + a] = Complex::new(quarter * (second(2 * a) + second(2 * a + 1)), T::zero());
            for b in 0..n {
                if a == b {
                    continue;
                }
                let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
                let re = quarter * (m(xa, xb) + m(ya, yb));
                let im = quarter * (m(xa, yb) - m(ya, xb));
                data[a * n + b] = Complex::new(re, im);
            }
        }
        HermitianMatrix::new(n, data).expect("finite stencil values")
    }
}

/// `Hu` at `node` by centred differences; every stencil node must be active.
pub fn discrete_complex_hessian<T: Scalar>(u: &GridFunction<T>, node: usize) -> Result<HermitianMatrix<T>> {
    let grid = u.grid();
    if !grid.is_interior(node) {
        return Err(Error::domain(format!("node {node} is not interior")));
    }
    let st = HessianStencil::new(grid.n());
    let mut s = Vec::with_capacity(st.offsets().len());
    for o in st.offsets() {
        let nb = grid
            .neighbor(node, o)
            .filter(|&j| grid.is_active(j))
            .ok_or_else(|| Error::domain(format!("Hessian stencil at node {node} is unavailable")))?;
        s.push(u.get(nb));
    }
    Ok(st.assemble(&s, grid.h()))
}

/// Visits every node accepted by `select` whose full Hessian stencil is active
/// in `u`, passing the node index, its position and `Hu` there. Returns the
/// number of selected nodes whose stencil was incomplete.
pub fn for_each_hessian<T: Scalar>(
    u: &GridFunction<T>,
    mut select: impl FnMut(usize) -> bool,
    mut visit: impl FnMut(usize, &[f64], HermitianMatrix<T>),
) -> usize {
    let grid = u.grid();
    let st = HessianStencil::new(grid.n());
    let d = grid.real_dim();
    let vals = u.values();
    let mut skipped = 0;
    let mut samples = vec![T::zero(); st.offsets().len()];
    let mut x = vec![0.0; d];
    let prefixes: Vec<Vec<i32>> = st.offsets().iter().map(|o| o[..d - 1].to_vec()).collect();
    for li in 0..grid.lines().len() {
        let line = grid.line_ref(li);
        let nbs: Vec<_> = prefixes.iter().map(|p| grid.neighbor_line(li, p)).collect();
        for k in line.range() {
            let idx = line.index(k).unwrap();
            if !select(idx) {
                continue;
            }
            let mut ok = true;
            for (j, o) in st.offsets().iter().enumerate() {
                match nbs[j].and_then(|nb| nb.index(k + o[d - 1])) {
                    Some(t) if grid.is_active(t) && vals[t].is_finite() => samples[j] = vals[t],
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                skipped += 1;
                continue;
            }
            grid.line_position(li, k, &mut x);
            visit(idx, &x, st.assemble(&samples, grid.h()));
        }
    }
    skipped
}

/// Sum of the real-axis second differences.
pub fn discrete_laplacian<T: Scalar>(u: &GridFunction<T>, node: usize) -> Result<T> {
    let grid = u.grid();
    let d = grid.real_dim();
    let c = u.get(node);
    let h2 = T::lit(grid.h() * grid.h());
    let mut acc = T::zero();
    for p in 0..d {
        let mut o = vec![0; d];
        let mut side = [T::zero(); 2];
        for (j, s) in [1, -1].into_iter().enumerate() {
            o[p] = s;
            let nb = grid
                .neighbor(node, &o)
                .filter(|&t| grid.is_active(t))
                .ok_or_else(|| Error::domain(format!("Laplacian stencil at node {node} is unavailable")))?;
            side[j] = u.get(nb);
        }
        acc += (side[0] - c - c + side[1]) / h2;
    }
    Ok(acc)
}
