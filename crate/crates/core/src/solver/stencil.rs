use serde::Serialize;

use crate::bellman::ControlSet;
use crate::cones::OperatorSpec;
use crate::error::{Error, Result};
use crate::grid::{DomainGrid, GridFunction, NodeClass};
use crate::hermitian::HermitianMatrix;
use crate::scalar::Scalar;

/// Sentinel for a missing (inactive or unstored) neighbour.
pub(crate) const NONE: u32 = u32::MAX;

/// Real lattice direction `offset`, the integer multiple of a unit vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Direction {
    pub offset: Vec<i32>,
    pub norm2: i32,
}

/// A frame whose columns `v_i` have lattice directions for both `v_i` and
/// `i·v_i` (their real embeddings).
#[derive(Clone, Debug, Serialize)]
pub struct FrameStencil {
    pub name: String,
    pub columns: Vec<[usize; 2]>,
}

/// One control of the scheme: `Σ_i g_i ¼(D²_a + D²_b) + offset` over the
/// columns of `frame`, flattened into per-direction coefficients.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct StencilControl<T> {
    pub frame: usize,
    pub weights: Vec<T>,
    pub offset: T,
    /// `(direction, coefficient)`; the centre carries `-2·Σ coefficient`.
    pub terms: Vec<(usize, T)>,
    pub center: T,
}

#[derive(Clone, Debug)]
pub struct SchemeStencil<T> {
    spec: OperatorSpec,
    h: f64,
    directions: Vec<Direction>,
    frames: Vec<FrameStencil>,
    controls: Vec<StencilControl<T>>,
    frame_controls: Vec<Vec<usize>>,
    dropped_controls: usize,
    source_hessians: Vec<HermitianMatrix<T>>,
}

/// Integer direction parallel to the real vector `a`, if one with entries of
/// magnitude at most 4 exists.
fn lattice_direction(a: &[f64]) -> Option<Vec<i32>> {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m < 1e-12 {
        return None;
    }
    'scale: for base in 1..=4 {
        let s = base as f64 / m;
        let mut out = Vec::with_capacity(a.len());
        for &x in a {
            let c = x * s;
            let r = c.round();
            if (c - r).abs() > 1e-9 {
                continue 'scale;
            }
            out.push(r as i32);
        }
        // first nonzero entry positive: ±a give the same second difference
        if let Some(&first) = out.iter().find(|&&c| c != 0) {
            if first < 0 {
                out.iter_mut().for_each(|c| *c = -*c);
            }
        }
        return Some(out);
    }
    None
}

fn real_embedding<T: Scalar>(v: &[num_complex::Complex<T>]) -> (Vec<f64>, Vec<f64>) {
    let a = v.iter().flat_map(|c| [c.re.as_f64(), c.im.as_f64()]).collect();
    // i·(x + iy) = -y + ix
    let b = v.iter().flat_map(|c| [-c.im.as_f64(), c.re.as_f64()]).collect();
    (a, b)
}

impl<T: Scalar> SchemeStencil<T> {
    /// Keeps the controls whose frame columns are lattice representable.
    pub fn new(controls: &ControlSet<T>, h: f64) -> Result<Self> {
        let spec = controls.spec.clone();
        let mut directions: Vec<Direction> = Vec::new();
        let mut intern = |o: Vec<i32>| -> usize {
            if let Some(j) = directions.iter().position(|d| d.offset == o) {
                return j;
            }
            let norm2 = o.iter().map(|c| c * c).sum();
            directions.push(Direction { offset: o, norm2 });
            directions.len() - 1
        };
        for p in 0..2 * spec.n() {
            let mut e = vec![0; 2 * spec.n()];
            e[p] = 1;
            intern(e);
        }
        let mut frame_map: Vec<Option<usize>> = Vec::with_capacity(controls.frames.len());
        let mut frames = Vec::new();
        for f in &controls.frames {
            let mut cols = Vec::with_capacity(f.n());
            let mut ok = true;
            for j in 0..f.n() {
                let (a, b) = real_embedding(&f.matrix.column(j));
                match (lattice_direction(&a), lattice_direction(&b)) {
                    (Some(da), Some(db)) => cols.push([intern(da), intern(db)]),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                frames.push(FrameStencil { name: f.name.clone(), columns: cols });
                frame_map.push(Some(frames.len() - 1));
            } else {
                frame_map.push(None);
            }
        }
        let quarter_h2 = T::lit(0.25 / (h * h));
        let mut out = Vec::new();
        let mut frame_controls = vec![Vec::new(); frames.len()];
        let mut source_hessians = Vec::new();
        let mut dropped = 0;
        for c in &controls.controls {
            let Some(fi) = frame_map[c.frame] else {
                dropped += 1;
                continue;
            };
            let mut terms: Vec<(usize, T)> = Vec::new();
            for (g, col) in c.weights.iter().zip(&frames[fi].columns) {
                for &d in col {
                    let coef = *g * quarter_h2 / T::lit(directions[d].norm2 as f64);
                    match terms.iter_mut().find(|(e, _)| *e == d) {
                        Some(t) => t.1 += coef,
                        None => terms.push((d, coef)),
                    }
                }
            }
            let center = T::lit(2.0) * terms.iter().map(|t| t.1).sum::<T>();
            frame_controls[fi].push(out.len());
            source_hessians.push(c.minorant.htilde.clone());
            out.push(StencilControl { frame: fi, weights: c.weights.clone(), offset: c.minorant.offset, terms, center });
        }
        if out.is_empty() {
            return Err(Error::domain("no control has lattice-representable directions"));
        }
        Ok(SchemeStencil { spec, h, directions, frames, controls: out, frame_controls, dropped_controls: dropped, source_hessians })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn frames(&self) -> &[FrameStencil] {
        &self.frames
    }

    pub fn controls(&self) -> &[StencilControl<T>] {
        &self.controls
    }

    pub fn dropped_controls(&self) -> usize {
        self.dropped_controls
    }

    /// `H̃` of control `c`.
    pub fn htilde(&self, c: usize) -> &HermitianMatrix<T> {
        &self.source_hessians[c]
    }

    /// `max_c Σ 2·coefficients`: the stability constant of the explicit iteration.
    pub fn max_center(&self) -> T {
        self.controls.iter().fold(T::zero(), |m, c| m.max(c.center))
    }

    /// Coefficients that break degenerate ellipticity (always 0 for valid weights).
    pub fn negative_coefficients(&self) -> usize {
        self.controls.iter().flat_map(|c| c.terms.iter()).filter(|t| !(t.1 >= T::zero())).count()
    }

    /// `Σ_i g_i v_i* B v_i + offset` for control `c`, the continuous form the
    /// directional decomposition discretizes.
    pub fn directional_value(&self, c: usize, b: &HermitianMatrix<T>, frame_matrix: &crate::hermitian::ComplexMatrix<T>) -> T {
        let ctl = &self.controls[c];
        let mut s = ctl.offset;
        for (i, g) in ctl.weights.iter().enumerate() {
            s += *g * b.quadratic_form(&frame_matrix.column(i));
        }
        s
    }
}

/// Neighbour tables of `grid`'s interior nodes for a stencil's directions.
#[derive(Clone, Debug)]
pub struct NodeTable {
    pub(crate) interior: Vec<usize>,
    /// `interior.len() × directions × 2` storage indices (`+`, `-`), `NONE` if inactive.
    pub(crate) nbr: Vec<u32>,
    /// Per interior node: bit `f` set iff every direction of frame `f` resolves.
    pub(crate) frame_ok: Vec<u64>,
    /// Storage index → interior position, `NONE` elsewhere.
    pub(crate) local: Vec<u32>,
    pub(crate) ndir: usize,
}

impl NodeTable {
    pub fn build<T: Scalar>(stencil: &SchemeStencil<T>, grid: &DomainGrid) -> Result<Self> {
        if grid.len() >= NONE as usize {
            return Err(Error::arg("grid too large for 32-bit neighbour tables"));
        }
        if stencil.frames.len() > 64 {
            return Err(Error::arg("at most 64 frames are supported"));
        }
        if (grid.h() - stencil.h).abs() > 1e-12 * grid.h() {
            return Err(Error::arg("stencil spacing differs from the grid spacing"));
        }
        let d = grid.real_dim();
        if stencil.directions.iter().any(|dir| dir.offset.len() != d) {
            return Err(Error::arg("stencil dimension differs from the grid"));
        }
        let ndir = stencil.directions.len();
        let mut interior = Vec::with_capacity(grid.interior_count());
        let mut local = vec![NONE; grid.len()];
        let mut nbr = Vec::with_capacity(grid.interior_count() * ndir * 2);
        let offsets: Vec<[Vec<i32>; 2]> = stencil
            .directions
            .iter()
            .map(|dir| [dir.offset.clone(), dir.offset.iter().map(|c| -c).collect()])
            .collect();
        for li in 0..grid.lines().len() {
            let line = grid.line_ref(li);
            let nb_lines: Vec<[Option<crate::grid::LineRef>; 2]> = offsets
                .iter()
                .map(|[p, m]| [grid.neighbor_line(li, &p[..d - 1]), grid.neighbor_line(li, &m[..d - 1])])
                .collect();
            for k in line.range() {
                let idx = line.index(k).unwrap();
                if !grid.is_interior(idx) {
                    continue;
                }
                local[idx] = interior.len() as u32;
                interior.push(idx);
                for (j, [p, m]) in offsets.iter().enumerate() {
                    for (s, o) in [p, m].into_iter().enumerate() {
                        let t = nb_lines[j][s]
                            .and_then(|nl| nl.index(k + o[d - 1]))
                            .filter(|&t| grid.is_active(t))
                            .map_or(NONE, |t| t as u32);
                        nbr.push(t);
                    }
                }
            }
        }
        let mut frame_ok = Vec::with_capacity(interior.len());
        for p in 0..interior.len() {
            let row = &nbr[p * ndir * 2..(p + 1) * ndir * 2];
            let mut mask = 0u64;
            for (fi, f) in stencil.frames.iter().enumerate() {
                if f.columns.iter().flatten().all(|&dj| row[2 * dj] != NONE && row[2 * dj + 1] != NONE) {
                    mask |= 1 << fi;
                }
            }
            if mask == 0 {
                return Err(Error::domain(format!("no stencil frame resolves at interior node {}", interior[p])));
            }
            frame_ok.push(mask);
        }
        Ok(NodeTable { interior, nbr, frame_ok, local, ndir })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub(crate) fn row(&self, p: usize) -> &[u32] {
        &self.nbr[p * self.ndir * 2..(p + 1) * self.ndir * 2]
    }
}

/// Scratch buffers for node evaluations.
pub(crate) struct Workspace<T> {
    d2: Vec<T>,
    w: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub(crate) fn new<S>(stencil: &SchemeStencil<S>) -> Self {
        Workspace { d2: vec![T::zero(); stencil.directions.len()], w: vec![T::zero(); stencil.spec.n()] }
    }
}

/// `S_h[u]` at interior position `p` of `table`, with the minimizing control.
pub(crate) fn evaluate_node<T: Scalar>(
    stencil: &SchemeStencil<T>,
    table: &NodeTable,
    u: &[T],
    p: usize,
    ws: &mut Workspace<T>,
) -> (T, usize) {
    let row = table.row(p);
    let c = u[table.interior[p]];
    let mask = table.frame_ok[p];
    let quarter_h2 = T::lit(0.25 / (stencil.h * stencil.h));
    for (j, dir) in stencil.directions.iter().enumerate() {
        let (a, b) = (row[2 * j], row[2 * j + 1]);
        ws.d2[j] = if a != NONE && b != NONE {
            (u[a as usize] - c - c + u[b as usize]) / T::lit(dir.norm2 as f64)
        } else {
            T::nan()
        };
    }
    let mut best = (T::infinity(), usize::MAX);
    for (fi, f) in stencil.frames.iter().enumerate() {
        if mask & (1 << fi) == 0 {
            continue;
        }
        for (i, col) in f.columns.iter().enumerate() {
            ws.w[i] = (ws.d2[col[0]] + ws.d2[col[1]]) * quarter_h2;
        }
        for &ci in &stencil.frame_controls[fi] {
            let ctl = &stencil.controls[ci];
            let mut v = ctl.offset;
            for (g, w) in ctl.weights.iter().zip(&ws.w) {
                v += *g * *w;
            }
            if v < best.0 {
                best = (v, ci);
            }
        }
    }
    best
}

/// `S_h[u](node)`: minimum over the controls resolvable at `node`.
pub fn discrete_bellman_operator<T: Scalar>(stencil: &SchemeStencil<T>, u: &GridFunction<T>, node: usize) -> Result<T> {
    let grid = u.grid();
    if grid.class(node) != NodeClass::Interior {
        return Err(Error::domain(format!("node {node} is not interior")));
    }
    let d = grid.real_dim();
    let mut ws = Workspace::new(stencil);
    let quarter_h2 = T::lit(0.25 / (stencil.h * stencil.h));
    let c = u.get(node);
    for (j, dir) in stencil.directions.iter().enumerate() {
        let minus: Vec<i32> = dir.offset.iter().map(|x| -x).collect();
        let a = grid.neighbor(node, &dir.offset).filter(|&t| grid.is_active(t));
        let b = grid.neighbor(node, &minus).filter(|&t| grid.is_active(t));
        ws.d2[j] = match (a, b) {
            (Some(a), Some(b)) => (u.get(a) - c - c + u.get(b)) / T::lit(dir.norm2 as f64),
            _ => T::nan(),
        };
        debug_assert_eq!(dir.offset.len(), d);
    }
    let mut best = T::infinity();
    let mut any = false;
    for (fi, f) in stencil.frames.iter().enumerate() {
        if f.columns.iter().flatten().any(|&j| ws.d2[j].is_nan()) {
            continue;
        }
        any = true;
        for (i, col) in f.columns.iter().enumerate() {
            ws.w[i] = (ws.d2[col[0]] + ws.d2[col[1]]) * quarter_h2;
        }
        for &ci in &stencil.frame_controls[fi] {
            let ctl = &stencil.controls[ci];
            let v = ctl.offset + ctl.weights.iter().zip(&ws.w).map(|(g, w)| *g * *w).sum::<T>();
            best = best.min(v);
        }
    }
    if !any {
        return Err(Error::domain(format!("no stencil direction set resolves at node {node}")));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::{build_control_set, standard_frames, FrameSet};
    use crate::grid::{abs2, rasterize_domain, Shape};
    use crate::hermitian::{random_hermitian, trace_pair};
    use rand::SeedableRng;

    fn stencil(spec: &OperatorSpec, res: usize, set: FrameSet, h: f64) -> SchemeStencil<f64> {
        let frames = standard_frames(spec.n(), set);
        SchemeStencil::new(&build_control_set(spec, res, &frames).unwrap(), h).unwrap()
    }

    #[test]
    fn lattice_directions() {
        let r = 0.5f64.sqrt();
        assert_eq!(lattice_direction(&[r, 0.0, -r, 0.0]), Some(vec![1, 0, -1, 0]));
        assert_eq!(lattice_direction(&[0.0, -1.0]), Some(vec![0, 1]));
        assert_eq!(lattice_direction(&[0.6, 0.8]), Some(vec![3, 4]));
        assert_eq!(lattice_direction(&[0.3, 0.7f64.sqrt()]), None);
    }

    #[test]
    fn directions_include_coordinates() {
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let st = stencil(&spec, 4, FrameSet::CoordDiag, 0.1);
        for p in 0..4 {
            let mut e = vec![0; 4];
            e[p] = 1;
            assert!(st.directions().iter().any(|d| d.offset == e));
        }
        assert_eq!(st.directions().len(), 12);
        assert_eq!(st.dropped_controls(), 0);
        assert_eq!(st.negative_coefficients(), 0);
    }

    #[test]
    fn decomposition_reproduces_trace_pair() {
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let frames = standard_frames::<f64>(2, FrameSet::CoordDiag);
        let cs = build_control_set(&spec, 4, &frames).unwrap();
        let st = SchemeStencil::new(&cs, 0.1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = random_hermitian::<f64, _>(2, &mut rng);
            for (c, ctl) in cs.controls.iter().enumerate() {
                let lhs = st.directional_value(c, &b, &cs.frames[ctl.frame].matrix);
                let rhs = trace_pair(&ctl.minorant.htilde, &b).unwrap() + ctl.minorant.offset;
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn quadratic_examples() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let st = stencil(&spec, 2, FrameSet::CoordDiag, 0.25);
        let u = GridFunction::<f64>::from_fn(&g, abs2);
        let aff = GridFunction::<f64>::from_fn(&g, |x| 1.0 + x[0] - 2.0 * x[3]);
        let st4 = stencil(&spec, 10, FrameSet::CoordDiag, 0.25);
        let q = GridFunction::<f64>::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1] + 4.0 * (x[2] * x[2] + x[3] * x[3]));
        for i in g.nodes_of(NodeClass::Interior) {
            assert!((discrete_bellman_operator(&st, &u, i).unwrap() - 1.0).abs() < 1e-12);
            assert!(discrete_bellman_operator(&st, &aff, i).unwrap().abs() < 1e-12);
            assert!((discrete_bellman_operator(&st4, &q, i).unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_ellipticity_by_perturbation() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.25).unwrap();
        let spec = OperatorSpec::quotient(2, 1, 2).unwrap();
        let st = stencil(&spec, 4, FrameSet::CoordDiag, 0.25);
        let u = GridFunction::<f64>::from_fn(&g, |x| abs2(x) + 0.3 * x[0] * x[2] + (x[1] * 3.0).sin() * 0.05);
        let centre = g.index_of_position(&[0.0; 4]).unwrap();
        let base = discrete_bellman_operator(&st, &u, centre).unwrap();
        let delta = 1e-3;
        let bound = st.max_center() * delta;
        for dir in st.directions() {
            for s in [1, -1] {
                let o: Vec<i32> = dir.offset.iter().map(|c| c * s).collect();
                let j = g.neighbor(centre, &o).unwrap();
                let mut w = u.clone();
                w.set(j, u.get(j) + delta);
                let v = discrete_bellman_operator(&st, &w, centre).unwrap();
                assert!(v >= base - 1e-12 && v - base <= bound + 1e-12);
            }
        }
        let mut w = u.clone();
        w.set(centre, u.get(centre) + delta);
        assert!(discrete_bellman_operator(&st, &w, centre).unwrap() <= base);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let g = rasterize_domain(Shape::ball(vec![0.0; 4], 1.0).unwrap(), 0.2).unwrap();
        let spec = OperatorSpec::monge_ampere(2).unwrap();
        let st = stencil(&spec, 4, FrameSet::CoordDiag, 0.2);
        let t = NodeTable::build(&st, &g).unwrap();
        assert_eq!(t.interior().len(), g.interior_count());
        let u = GridFunction::<f64>::from_fn(&g, |x| abs2(x) + x[0] * x[3] * 0.4 + x[1].exp());
        let mut ws = Workspace::new(&st);
        for (p, &i) in t.interior().iter().enumerate() {
            let (v, _) = evaluate_node(&st, &t, u.values(), p, &mut ws);
            assert_eq!(v, discrete_bellman_operator(&st, &u, i).unwrap());
        }
        // near the sphere only the coordinate frame resolves at some nodes
        assert!(t.frame_ok.iter().any(|&m| m == 1));
    }
}
