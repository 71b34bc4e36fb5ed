//! `F` as an infimum of affine functionals `B ↦ trace(H̃B) + c`: supergradient
//! minorants, finite control sets, the discrete infimum, and a scan that
//! certifies a matrix lies outside the closed cone.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cones::{f_eval, f_gradient, Closure, ConeSpec, EigenTuple, OperatorSpec};
use crate::cones::cone_contains;
use crate::error::{Error, Result};
use crate::hermitian::{eigen_decompose, operator_eval, trace_pair, ComplexMatrix, HermitianMatrix};
use crate::scalar::Scalar;

/// `B ↦ trace(htilde·B) + offset`, produced from the control `source`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearMinorant<T> {
    pub htilde: HermitianMatrix<T>,
    pub offset: T,
    pub source: HermitianMatrix<T>,
}

impl<T: Scalar> LinearMinorant<T> {
    pub fn apply(&self, b: &HermitianMatrix<T>) -> Result<T> {
        Ok(trace_pair(&self.htilde, b)? + self.offset)
    }
}

/// Unitary frame; its columns are the complex directions of a control.
#[derive(Clone, Debug)]
pub struct Frame<T> {
    pub name: String,
    pub matrix: ComplexMatrix<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn identity(n: usize) -> Self {
        Frame { name: "coord".into(), matrix: ComplexMatrix::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.max_abs_diff(&ComplexMatrix::identity(self.n())) == T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSet {
    Coord,
    CoordDiag,
}

impl std::str::FromStr for FrameSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coord" => Ok(FrameSet::Coord),
            "coord+diag" => Ok(FrameSet::CoordDiag),
            other => Err(Error::parse(format!("unknown frame set '{other}' (coord | coord+diag)"))),
        }
    }
}

impl std::fmt::Display for FrameSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrameSet::Coord => "coord",
            FrameSet::CoordDiag => "coord+diag",
        })
    }
}

/// Identity frame, plus for `CoordDiag` the frames `(e_α ± e_β)/√2` and
/// `(e_α ± i·e_β)/√2` for every pair α < β (other columns stay coordinate).
pub fn standard_frames<T: Scalar>(n: usize, set: FrameSet) -> Vec<Frame<T>> {
    let mut frames = vec![Frame::identity(n)];
    if set == FrameSet::Coord {
        return frames;
    }
    let r = T::one() / T::lit(2.0).sqrt();
    for a in 0..n {
        for b in (a + 1)..n {
            for (tag, phase) in [("re", Complex::new(T::one(), T::zero())), ("im", Complex::new(T::zero(), T::one()))] {
                let mut m = ComplexMatrix::identity(n);
                m.set(a, a, Complex::new(r, T::zero()));
                m.set(b, a, phase * r);
                m.set(a, b, Complex::new(r, T::zero()));
                m.set(b, b, -phase * r);
                frames.push(Frame { name: format!("diag-{tag}({},{})", a + 1, b + 1), matrix: m });
            }
        }
    }
    frames
}

/// Control = minorant generated by `U diag(μ) U*`, together with the frame
/// index and the per-column weights `g` with `H̃ = Σ g_i u_i u_i*`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Control<T> {
    pub minorant: LinearMinorant<T>,
    pub frame: usize,
    pub weights: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ControlSet<T> {
    pub spec: OperatorSpec,
    pub resolution: usize,
    pub frame_names: Vec<String>,
    pub controls: Vec<Control<T>>,
    #[serde(skip)]
    pub frames: Vec<Frame<T>>,
}

impl<T: Scalar> ControlSet<T> {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn minorants(&self) -> impl Iterator<Item = &LinearMinorant<T>> {
        self.controls.iter().map(|c| &c.minorant)
    }

    /// Set holding exactly the given minorants (frame data is their own eigenframe).
    pub fn from_minorants(spec: &OperatorSpec, minorants: Vec<LinearMinorant<T>>) -> Result<Self> {
        let mut frames = Vec::new();
        let mut controls = Vec::new();
        for m in minorants {
            let e = eigen_decompose(&m.htilde);
            frames.push(Frame { name: format!("eig{}", frames.len()), matrix: e.vectors });
            controls.push(Control { minorant: m, frame: frames.len() - 1, weights: e.values.into_vec() });
        }
        Ok(ControlSet {
            spec: spec.clone(),
            resolution: 0,
            frame_names: frames.iter().map(|f| f.name.clone()).collect(),
            controls,
            frames,
        })
    }
}

/// `Φ(H)`: the supergradient `U diag(∇f(λ)) U*` and its offset.
pub fn supergradient_minorant<T: Scalar>(spec: &OperatorSpec, h: &HermitianMatrix<T>) -> Result<LinearMinorant<T>> {
    if h.n() != spec.n() {
        return Err(Error::arg("matrix dimension differs from operator dimension"));
    }
    let e = eigen_decompose(h);
    let grad = f_gradient(spec, &e.values)?;
    let htilde = HermitianMatrix::from_frame(&e.vectors, grad.as_slice());
    let offset = operator_eval(spec, h)? - trace_pair(&htilde, h)?;
    Ok(LinearMinorant { htilde, offset, source: h.clone() })
}

/// Integer compositions `m` of `total` into `n` parts with `lo <= m_i <= hi`.
fn compositions(n: usize, total: i64, lo: i64, hi: i64, out: &mut Vec<Vec<i64>>) {
    fn rec(n: usize, left: i64, lo: i64, hi: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() + 1 == n {
            if (lo..=hi).contains(&left) {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let rest = (n - cur.len() - 1) as i64;
        for m in lo..=hi {
            let remaining = left - m;
            if remaining < rest * lo || remaining > rest * hi {
                continue;
            }
            cur.push(m);
            rec(n, remaining, lo, hi, cur, out);
            cur.pop();
        }
    }
    rec(n, total, lo, hi, &mut Vec::with_capacity(n), out);
}

/// Points `μ = m/(n·r)` of the simplex lattice lying in the open cone. For k ≥ 2
/// entries may be negative (bounded by |μ_i| < 1); Γ_1 keeps the positive part.
pub fn simplex_controls<T: Scalar>(cone: ConeSpec, resolution: usize) -> Vec<EigenTuple<T>> {
    let n = cone.n();
    let total = (n * resolution) as i64;
    let (lo, hi) = if cone.k() == 1 || cone.k() == n { (1, total) } else { (-(total - 1), total - 1) };
    let mut ms = Vec::new();
    compositions(n, total, lo, hi, &mut ms);
    let denom = T::from_usize_lossy(n * resolution);
    ms.into_iter()
        .map(|m| EigenTuple::new(m.iter().map(|&mi| T::lit(mi as f64) / denom).collect()).expect("finite"))
        .filter(|mu| cone_contains(mu, cone, Closure::Open).unwrap_or(false))
        .collect()
}

pub const SATURATED_LADDER: std::ops::RangeInclusive<i32> = -4..=4;

/// Tolerance on reproducing `H̃` from frame weights.
const FRAME_RECONSTRUCTION_TOL: f64 = 1e-10;

pub fn build_control_set<T: Scalar>(spec: &OperatorSpec, resolution: usize, frames: &[Frame<T>]) -> Result<ControlSet<T>> {
    if resolution < 1 {
        return Err(Error::arg("control resolution must be at least 1"));
    }
    let n = spec.n();
    if frames.iter().any(|f| f.n() != n) {
        return Err(Error::arg("frame dimension differs from operator dimension"));
    }
    let mut all: Vec<Frame<T>> = Vec::with_capacity(frames.len() + 1);
    if !frames.iter().any(Frame::is_identity) {
        all.push(Frame::identity(n));
    }
    all.extend(frames.iter().cloned());

    let mus = simplex_controls::<T>(spec.cone(), resolution);
    let scales: Vec<T> = if spec.is_saturated() {
        SATURATED_LADDER.map(|p| T::lit(2f64.powi(p))).collect()
    } else {
        vec![T::one()]
    };

    let mut controls = Vec::with_capacity(all.len() * mus.len() * scales.len());
    for (fi, frame) in all.iter().enumerate() {
        for mu in &mus {
            for &s in &scales {
                let x: Vec<T> = mu.as_slice().iter().map(|&m| m * s).collect();
                let x = EigenTuple::new(x)?;
                let g = f_gradient(spec, &x)?.into_vec();
                let source = HermitianMatrix::from_frame(&frame.matrix, x.as_slice());
                let htilde = HermitianMatrix::from_frame(&frame.matrix, &g);
                let euler: T = g.iter().zip(x.as_slice()).map(|(&gi, &xi)| gi * xi).sum();
                let offset = f_eval(spec, &x)? - euler;
                let offset = if spec.is_homogeneous() { T::zero() } else { offset };
                let check = trace_pair(&htilde, &source)? + offset;
                let fx = f_eval(spec, &x)?;
                if (check - fx).abs() > T::tol_floor(FRAME_RECONSTRUCTION_TOL) * (T::one() + fx.abs()) {
                    return Err(Error::domain(format!("frame {} does not reproduce its minorant", frame.name)));
                }
                controls.push(Control { minorant: LinearMinorant { htilde, offset, source }, frame: fi, weights: g });
            }
        }
    }
    Ok(ControlSet {
        spec: spec.clone(),
        resolution,
        frame_names: all.iter().map(|f| f.name.clone()).collect(),
        controls,
        frames: all,
    })
}

/// `min_c trace(H̃_c B) + offset_c`.
pub fn bellman_inf<T: Scalar>(controls: &ControlSet<T>, b: &HermitianMatrix<T>) -> Result<T> {
    if controls.is_empty() {
        return Err(Error::arg("empty control set"));
    }
    let mut best = T::infinity();
    for c in &controls.controls {
        best = best.min(c.minorant.apply(b)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutsideConeScan<T> {
    pub outside: bool,
    pub evaluations: usize,
    pub tol_neg: T,
    /// Most negative value seen.
    pub best_value: T,
    pub witness: Option<LinearMinorant<T>>,
}

/// Default negativity threshold `1e-10·(1+|B|_F)`.
pub fn negativity_tolerance<T: Scalar>(b: &HermitianMatrix<T>) -> T {
    T::lit(1e-10) * (T::one() + b.frobenius_norm())
}

/// Semi-decision for `B ∉ closure(M(Γ,n))`: searches controls whose minorant is
/// strictly negative at `B`. `true` is a certificate; `false` is inconclusive.
pub fn detect_outside_cone<T: Scalar>(spec: &OperatorSpec, b: &HermitianMatrix<T>, scan_budget: usize) -> Result<OutsideConeScan<T>> {
    if scan_budget < 1 {
        return Err(Error::arg("scan budget must be at least 1"));
    }
    if b.n() != spec.n() {
        return Err(Error::arg("matrix dimension differs from operator dimension"));
    }
    let n = spec.n();
    let cone = spec.cone();
    let tol_neg = negativity_tolerance(b);
    let e = eigen_decompose(b);
    let lam = e.values.clone();
    let bnorm = b.frobenius_norm();

    let mut scan = OutsideConeScan { outside: false, evaluations: 0, tol_neg, best_value: T::infinity(), witness: None };

    // evaluates the minorant of U diag(x) U* at B without forming matrices
    let try_point = |x: &EigenTuple<T>, scan: &mut OutsideConeScan<T>| -> Result<bool> {
        scan.evaluations += 1;
        let g = f_gradient(spec, x)?;
        let fx = f_eval(spec, x)?;
        let euler: T = g.as_slice().iter().zip(x.as_slice()).map(|(&a, &b)| a * b).sum();
        let offset = if spec.is_homogeneous() { T::zero() } else { fx - euler };
        let value: T = g.as_slice().iter().zip(lam.as_slice()).map(|(&a, &b)| a * b).sum::<T>() + offset;
        if value < scan.best_value {
            scan.best_value = value;
        }
        if value < -tol_neg {
            let source = HermitianMatrix::from_frame(&e.vectors, x.as_slice());
            let htilde = HermitianMatrix::from_frame(&e.vectors, g.as_slice());
            scan.witness = Some(LinearMinorant { htilde, offset, source });
            scan.outside = true;
            return Ok(true);
        }
        Ok(scan.evaluations >= scan_budget)
    };

    // smallest shift putting λ + t·1 inside the open cone
    let inside = |t: T| cone_contains(&lam.shifted(t), cone, Closure::Open).unwrap_or(false);
    let (mut lo, mut hi) = (-lam[0] - T::one(), lam.max_abs() + T::one());
    if inside(lo) {
        lo = lo - bnorm - T::one();
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t0 = hi;
    let mut s = T::lit(0.5);
    for _ in 0..60 {
        let x = lam.shifted(t0 + s * (T::one() + bnorm));
        s *= T::lit(0.5);
        if try_point(&x, &mut scan)? {
            return Ok(scan);
        }
    }

    // anisotropic rays in B's eigenframe: one entry 2^p, the rest 1
    let one = T::one();
    for p in 1..=400i32 {
        for sign in [1i32, -1] {
            for i in 0..n {
                let mut x = vec![one; n];
                x[i] = T::lit(2f64.powi(sign * p / 4));
                let x = EigenTuple::new(x)?;
                if !cone_contains(&x, cone, Closure::Open)? {
                    continue;
                }
                if try_point(&x, &mut scan)? {
                    return Ok(scan);
                }
            }
        }
    }
    Ok(scan)
}

/// Random interior `B` of the closed matrix cone for `spec` with eigenvalues in `[lo, hi]`.
pub fn random_interior_matrix<T: Scalar, R: rand::Rng>(n: usize, lo: f64, hi: f64, rng: &mut R) -> HermitianMatrix<T> {
    let u = crate::hermitian::random_unitary::<T, R>(n, rng);
    let vals: Vec<T> = (0..n).map(|_| T::lit(rng.gen_range(lo..=hi))).collect();
    HermitianMatrix::from_frame(&u, &vals)
}
