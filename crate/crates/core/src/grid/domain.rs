use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::shape::Shape;
use crate::error::{Error, Result};

/// Relative slack (in units of h) used when classifying nodes against a signed distance.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Smallest admissible inradius, in units of h.
pub const MIN_INRADIUS_STEPS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum NodeClass {
    Exterior = 0,
    Boundary = 1,
    Interior = 2,
}

impl NodeClass {
    #[inline]
    fn from_u8(v: u8) -> Self {
        match v {
            2 => NodeClass::Interior,
            1 => NodeClass::Boundary,
            _ => NodeClass::Exterior,
        }
    }
}

/// Stored nodes along the last lattice axis for one fixed prefix.
#[derive(Clone, Copy, Debug)]
pub struct Line {
    pub prefix: usize,
    pub start: usize,
    pub lo: i32,
    pub len: u32,
}

/// Index arithmetic for one line: node `k` (last-axis index) lives at `base + k`.
#[derive(Clone, Copy, Debug)]
pub struct LineRef {
    base: isize,
    lo: i32,
    hi: i32,
}

impl LineRef {
    #[inline]
    pub fn index(&self, k: i32) -> Option<usize> {
        if k >= self.lo && k < self.hi {
            Some((self.base + k as isize) as usize)
        } else {
            None
        }
    }

    pub fn range(&self) -> std::ops::Range<i32> {
        self.lo..self.hi
    }
}

#[derive(Debug)]
struct Lattice {
    h: f64,
    /// Node `i` on an axis sits at `anchor + h·(i - shift)`.
    anchor: Vec<f64>,
    shift: Vec<i64>,
    dims: Vec<usize>,
    lines: Vec<Line>,
    lookup: Vec<u32>,
    len: usize,
}

const NO_LINE: u32 = u32::MAX;

impl Lattice {
    fn d(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    fn coord(&self, axis: usize, i: i64) -> f64 {
        self.anchor[axis] + self.h * (i - self.shift[axis]) as f64
    }

    fn prefix_coords(&self, mut prefix: usize, out: &mut [i64]) {
        for axis in (0..self.d() - 1).rev() {
            out[axis] = (prefix % self.dims[axis]) as i64;
            prefix /= self.dims[axis];
        }
    }

    fn prefix_id(&self, coords: &[i64]) -> Option<usize> {
        let mut id = 0usize;
        for (axis, &c) in coords.iter().enumerate() {
            if c < 0 || c as usize >= self.dims[axis] {
                return None;
            }
            id = id * self.dims[axis] + c as usize;
        }
        Some(id)
    }

    fn build(base: &Shape, h: f64, anchor: Vec<f64>, shift: Vec<i64>, dims: Vec<usize>) -> Result<Self> {
        let d = dims.len();
        let prefixes: usize = dims[..d - 1].iter().product();
        if prefixes >= NO_LINE as usize {
            return Err(Error::arg("lattice too large"));
        }
        let last = dims[d - 1];
        let limit = h * (1.0 + CLASSIFY_TOL);
        let mut lat = Lattice { h, anchor, shift, dims, lines: Vec::new(), lookup: vec![NO_LINE; prefixes], len: 0 };
        let mut pc = vec![0i64; d - 1];
        let mut x = vec![0.0; d];
        for p in 0..prefixes {
            lat.prefix_coords(p, &mut pc);
            for axis in 0..d - 1 {
                x[axis] = lat.coord(axis, pc[axis]);
            }
            let mut first = None;
            let mut end = 0;
            for k in 0..last {
                x[d - 1] = lat.coord(d - 1, k as i64);
                if base.signed_distance(&x) <= limit {
                    if first.is_none() {
                        first = Some(k);
                    }
                    end = k + 1;
                }
            }
            if let Some(lo) = first {
                lat.lookup[p] = lat.lines.len() as u32;
                lat.lines.push(Line { prefix: p, start: lat.len, lo: lo as i32, len: (end - lo) as u32 });
                lat.len += end - lo;
            }
        }
        Ok(lat)
    }
}

/// Rasterized domain: a lattice of spacing `h` with per-node classification.
/// Eroded and restricted grids share storage with the grid they came from, so
/// node indices (and grid-function values) carry over between them.
#[derive(Clone, Debug)]
pub struct DomainGrid {
    lattice: Arc<Lattice>,
    class: Arc<Vec<u8>>,
    shape: Shape,
    inset: f64,
    interior: usize,
    boundary: usize,
}

fn classify(shape: &Shape, inset: f64, h: f64, x: &[f64]) -> NodeClass {
    let s = shape.signed_distance(x) + inset;
    if s < -CLASSIFY_TOL * h {
        NodeClass::Interior
    } else if s <= h * (1.0 + CLASSIFY_TOL) {
        NodeClass::Boundary
    } else {
        NodeClass::Exterior
    }
}

/// Builds the lattice and classification for `shape` at spacing `h`.
pub fn rasterize_domain(shape: Shape, h: f64) -> Result<DomainGrid> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::arg("grid spacing must be positive"));
    }
    if shape.inradius() < MIN_INRADIUS_STEPS * h * (1.0 - 1e-12) {
        return Err(Error::Refinement(format!(
            "inradius {} is below {MIN_INRADIUS_STEPS}h = {}",
            shape.inradius(),
            MIN_INRADIUS_STEPS * h
        )));
    }
    let d = shape.real_dim();
    let (anchor, shift, dims) = match &shape {
        Shape::Ball { center, radius } => {
            let k = (radius / h - 1e-9).ceil() as usize + 1;
            (center.clone(), vec![k as i64; d], vec![2 * k + 1; d])
        }
        Shape::Box { lo, hi } => {
            (lo.clone(), vec![0; d], lo.iter().zip(hi).map(|(a, b)| ((b - a) / h + 1e-9).floor() as usize + 1).collect())
        }
    };
    let lattice = Lattice::build(&shape, h, anchor, shift, dims)?;
    DomainGrid::classified(Arc::new(lattice), shape, 0.0)
}

impl DomainGrid {
    fn classified(lattice: Arc<Lattice>, shape: Shape, inset: f64) -> Result<Self> {
        let d = lattice.d();
        let mut class = vec![0u8; lattice.len];
        let mut x = vec![0.0; d];
        let mut pc = vec![0i64; d - 1];
        let (mut interior, mut boundary) = (0, 0);
        for line in &lattice.lines {
            lattice.prefix_coords(line.prefix, &mut pc);
            for axis in 0..d - 1 {
                x[axis] = lattice.coord(axis, pc[axis]);
            }
            for j in 0..line.len as usize {
                x[d - 1] = lattice.coord(d - 1, (line.lo as usize + j) as i64);
                let c = classify(&shape, inset, lattice.h, &x);
                match c {
                    NodeClass::Interior => interior += 1,
                    NodeClass::Boundary => boundary += 1,
                    NodeClass::Exterior => {}
                }
                class[line.start + j] = c as u8;
            }
        }
        if interior == 0 {
            return Err(Error::EmptyDomain(format!("no interior nodes (inset {inset})")));
        }
        Ok(DomainGrid { lattice, class: Arc::new(class), shape, inset, interior, boundary })
    }

    pub fn from_descriptor(desc: &DomainDescriptor) -> Result<Self> {
        rasterize_domain(desc.shape.clone(), desc.h)
    }

    /// Interior iff the signed distance is below `-(inset + epsilon)`.
    pub fn eroded(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= self.h() * (1.0 - 1e-12)) {
            return Err(Error::arg(format!("erosion {epsilon} is below the grid spacing {}", self.h())));
        }
        Self::classified(self.lattice.clone(), self.shape.clone(), self.inset + epsilon)
    }

    /// Same storage, classified against `sub`, which must lie inside this
    /// domain (its shape eroded by the current inset).
    pub fn restricted(&self, sub: &Shape) -> Result<Self> {
        if !self.shape.contains_shape_with_margin(sub, self.inset) {
            return Err(Error::domain("sub-domain is not contained in the domain"));
        }
        if sub.inradius() < MIN_INRADIUS_STEPS * self.h() * (1.0 - 1e-12) {
            return Err(Error::Refinement(format!("sub-domain inradius {} is below {MIN_INRADIUS_STEPS}h", sub.inradius())));
        }
        Self::classified(self.lattice.clone(), sub.clone(), 0.0)
    }

    pub fn n(&self) -> usize {
        self.lattice.d() / 2
    }

    pub fn real_dim(&self) -> usize {
        self.lattice.d()
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn inset(&self) -> f64 {
        self.inset
    }

    /// Stored node count (all classes).
    pub fn len(&self) -> usize {
        self.lattice.len
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.len == 0
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary
    }

    pub fn dims(&self) -> &[usize] {
        &self.lattice.dims
    }

    /// Position of lattice coordinate `i` on `axis`.
    pub fn axis_coord(&self, axis: usize, i: i64) -> f64 {
        self.lattice.coord(axis, i)
    }

    pub fn same_storage(&self, other: &DomainGrid) -> bool {
        Arc::ptr_eq(&self.lattice, &other.lattice)
    }

    #[inline]
    pub fn class(&self, idx: usize) -> NodeClass {
        NodeClass::from_u8(self.class[idx])
    }

    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        self.class[idx] == NodeClass::Interior as u8
    }

    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        self.class[idx] != NodeClass::Exterior as u8
    }

    pub fn nodes_of(&self, class: NodeClass) -> impl Iterator<Item = usize> + '_ {
        let c = class as u8;
        self.class.iter().enumerate().filter(move |(_, &v)| v == c).map(|(i, _)| i)
    }

    pub fn lines(&self) -> &[Line] {
        &self.lattice.lines
    }

    pub fn line_ref(&self, line: usize) -> LineRef {
        let l = &self.lattice.lines[line];
        LineRef { base: l.start as isize - l.lo as isize, lo: l.lo, hi: l.lo + l.len as i32 }
    }

    /// Line whose prefix is `line`'s prefix shifted by `prefix_offset` (length d-1).
    pub fn neighbor_line(&self, line: usize, prefix_offset: &[i32]) -> Option<LineRef> {
        let lat = &self.lattice;
        let mut pc = vec![0i64; lat.d() - 1];
        lat.prefix_coords(lat.lines[line].prefix, &mut pc);
        for (c, o) in pc.iter_mut().zip(prefix_offset) {
            *c += *o as i64;
        }
        let id = lat.prefix_id(&pc)?;
        match lat.lookup[id] {
            NO_LINE => None,
            l => Some(self.line_ref(l as usize)),
        }
    }

    /// Real coordinates of node `k` on `line`.
    pub fn line_position(&self, line: usize, k: i32, out: &mut [f64]) {
        let lat = &self.lattice;
        let d = lat.d();
        let mut pc = vec![0i64; d - 1];
        lat.prefix_coords(lat.lines[line].prefix, &mut pc);
        for axis in 0..d - 1 {
            out[axis] = lat.coord(axis, pc[axis]);
        }
        out[d - 1] = lat.coord(d - 1, k as i64);
    }

    /// Calls `f(node, position)` for every stored node in storage order.
    pub fn for_each_position(&self, mut f: impl FnMut(usize, &[f64])) {
        let d = self.real_dim();
        let mut x = vec![0.0; d];
        for li in 0..self.lines().len() {
            let lr = self.line_ref(li);
            self.line_position(li, lr.lo, &mut x);
            for k in lr.range() {
                x[d - 1] = self.lattice.coord(d - 1, k as i64);
                f(lr.index(k).expect("in range"), &x);
            }
        }
    }

    fn line_of(&self, idx: usize) -> Option<usize> {
        if idx >= self.len() {
            return None;
        }
        let lines = &self.lattice.lines;
        let pos = lines.partition_point(|l| l.start <= idx);
        Some(pos - 1)
    }

    /// Integer lattice coordinates of a stored node.
    pub fn lattice_coords(&self, idx: usize) -> Option<Vec<i64>> {
        let li = self.line_of(idx)?;
        let lat = &self.lattice;
        let l = &lat.lines[li];
        let mut c = vec![0i64; lat.d()];
        lat.prefix_coords(l.prefix, &mut c[..lat.d() - 1]);
        c[lat.d() - 1] = (l.lo as usize + idx - l.start) as i64;
        Some(c)
    }

    pub fn position(&self, idx: usize) -> Option<Vec<f64>> {
        let c = self.lattice_coords(idx)?;
        Some(c.iter().enumerate().map(|(axis, &ci)| self.lattice.coord(axis, ci)).collect())
    }

    pub fn index_of_lattice(&self, coords: &[i64]) -> Option<usize> {
        let lat = &self.lattice;
        let d = lat.d();
        if coords.len() != d {
            return None;
        }
        let id = lat.prefix_id(&coords[..d - 1])?;
        match lat.lookup[id] {
            NO_LINE => None,
            l => self.line_ref(l as usize).index(i32::try_from(coords[d - 1]).ok()?),
        }
    }

    /// Stored node nearest to `x`, if `x` is within 1e-6·h of a lattice point.
    pub fn index_of_position(&self, x: &[f64]) -> Option<usize> {
        let lat = &self.lattice;
        if x.len() != lat.d() {
            return None;
        }
        let coords: Vec<i64> = (0..lat.d())
            .map(|axis| ((x[axis] - lat.anchor[axis]) / self.h()).round() as i64 + lat.shift[axis])
            .collect();
        if (0..lat.d()).any(|axis| (lat.coord(axis, coords[axis]) - x[axis]).abs() > 1e-6 * self.h()) {
            return None;
        }
        self.index_of_lattice(&coords)
    }

    pub fn neighbor(&self, idx: usize, offset: &[i32]) -> Option<usize> {
        let mut c = self.lattice_coords(idx)?;
        for (ci, o) in c.iter_mut().zip(offset) {
            *ci += *o as i64;
        }
        self.index_of_lattice(&c)
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        self.shape.signed_distance(x) + self.inset
    }

    pub fn describe(&self) -> String {
        let h = self.h();
        match &self.shape {
            Shape::Ball { center, radius } => format!("ball:c={};r={radius};h={h}", join(center)),
            Shape::Box { lo, hi } => format!("box:lo={};hi={};h={h}", join(lo), join(hi)),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Text form `ball:c=0,0;r=1;h=0.1` or `box:lo=-1,-1;hi=1,1;h=0.1`. An optional
/// `n=<complex dim>` key broadcasts a single coordinate to all `2n` axes.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainDescriptor {
    pub shape: Shape,
    pub h: f64,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::parse(format!("bad number '{t}'"))))
        .collect()
}

impl FromStr for DomainDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').ok_or_else(|| Error::parse(format!("bad domain '{s}'")))?;
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::parse(format!("bad domain field '{part}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |key: &str| kv.get(key).ok_or_else(|| Error::parse(format!("domain '{s}' is missing '{key}'")));
        let h: f64 = take("h")?.parse().map_err(|_| Error::parse("bad h"))?;
        let n: Option<usize> = match kv.get("n") {
            Some(v) => Some(v.parse().map_err(|_| Error::parse("bad n"))?),
            None => None,
        };
        let widen = |v: Vec<f64>| -> Result<Vec<f64>> {
            match (v.len(), n) {
                (1, Some(n)) => Ok(vec![v[0]; 2 * n]),
                (len, Some(n)) if len != 2 * n => Err(Error::parse(format!("expected {} coordinates", 2 * n))),
                _ => Ok(v),
            }
        };
        let known: &[&str] = match kind.trim() {
            "ball" => &["c", "r", "h", "n"],
            "box" => &["lo", "hi", "h", "n"],
            other => return Err(Error::parse(format!("unknown domain kind '{other}'"))),
        };
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::parse(format!("unknown domain field '{k}'")));
        }
        let shape = if kind.trim() == "ball" {
            let r: f64 = take("r")?.parse().map_err(|_| Error::parse("bad r"))?;
            Shape::ball(widen(parse_list(take("c")?)?)?, r)?
        } else {
            Shape::cube(widen(parse_list(take("lo")?)?)?, widen(parse_list(take("hi")?)?)?)?
        };
        Ok(DomainDescriptor { shape, h })
    }
}

impl fmt::Display for DomainDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Ball { center, radius } => write!(f, "ball:c={};r={radius};h={}", join(center), self.h),
            Shape::Box { lo, hi } => write!(f, "box:lo={};hi={};h={}", join(lo), join(hi), self.h),
        }
    }
}
