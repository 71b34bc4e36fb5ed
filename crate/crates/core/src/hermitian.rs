//! Small dense complex matrices, Hermitian values, cyclic complex Jacobi
//! eigendecomposition, the trace pairing, and the matrix operator `F`.

use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cones::{cone_contains, f_eval, Closure, ConeSpec, EigenTuple, OperatorSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        ComplexMatrix { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::arg(format!("expected {} entries, got {}", n * n, data.len())));
        }
        Ok(ComplexMatrix { n, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let n = columns.len();
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::arg("column length differs from column count"));
            }
            for (i, &v) in col.iter().enumerate() {
                m.data[i * n + j] = v;
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.n + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }
}

/// n×n complex Hermitian matrix; symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: ComplexMatrix<T>,
}

impl<T: Scalar> HermitianMatrix<T> {
    /// Symmetrizes the row-major input as (A + A*)/2.
    pub fn new(n: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        let a = ComplexMatrix::from_rows(n, entries)?;
        if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::arg("matrix entries must be finite"));
        }
        Ok(Self::symmetrize(&a))
    }

    pub fn symmetrize(a: &ComplexMatrix<T>) -> Self {
        let n = a.n;
        let half = T::lit(0.5);
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            out.data[i * n + i] = Complex::new(a.get(i, i).re, T::zero());
            for j in (i + 1)..n {
                let v = (a.get(i, j) + a.get(j, i).conj()) * half;
                out.data[i * n + j] = v;
                out.data[j * n + i] = v.conj();
            }
        }
        HermitianMatrix { inner: out }
    }

    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(n, entries.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        let mut m = ComplexMatrix::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = Complex::new(v, T::zero());
        }
        HermitianMatrix { inner: m }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix { inner: ComplexMatrix::identity(n) }
    }

    /// `U · diag(values) · U*`.
    pub fn from_frame(u: &ComplexMatrix<T>, values: &[T]) -> Self {
        let n = u.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex::new(T::zero(), T::zero());
                for (k, &v) in values.iter().enumerate() {
                    s = s + u.get(i, k) * u.get(j, k).conj() * v;
                }
                out.data[i * n + j] = s;
            }
        }
        Self::symmetrize(&out)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.inner
    }

    pub fn frobenius_norm(&self) -> T {
        self.inner.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.inner.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> T {
        (0..self.n()).map(|i| self.get(i, i).re).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let data = self.inner.data.iter().zip(&other.inner.data).map(|(a, b)| *a + *b).collect();
        HermitianMatrix { inner: ComplexMatrix { n: self.n(), data } }
    }

    pub fn scale(&self, s: T) -> Self {
        let data = self.inner.data.iter().map(|a| *a * s).collect();
        HermitianMatrix { inner: ComplexMatrix { n: self.n(), data } }
    }

    pub fn shifted(&self, t: T) -> Self {
        self.add(&Self::identity(self.n()).scale(t))
    }

    /// `U H U*`.
    pub fn conjugated(&self, u: &ComplexMatrix<T>) -> Self {
        Self::symmetrize(&u.mul(&self.inner).mul(&u.adjoint()))
    }

    /// `v* H v` for a complex vector `v`.
    pub fn quadratic_form(&self, v: &[Complex<T>]) -> T {
        let n = self.n();
        let mut s = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for j in 0..n {
                s = s + v[i].conj() * self.get(i, j) * v[j];
            }
        }
        s.re
    }
}

impl<T: Scalar> Serialize for HermitianMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(T, T)> = self.inner.data.iter().map(|z| (z.re, z.im)).collect();
        pairs.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for HermitianMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<(T, T)>::deserialize(d)?;
        let n = (pairs.len() as f64).sqrt().round() as usize;
        if n * n != pairs.len() || n == 0 {
            return Err(D::Error::custom("matrix must have a positive square number of entries"));
        }
        HermitianMatrix::new(n, pairs.into_iter().map(|(re, im)| Complex::new(re, im)).collect())
            .map_err(D::Error::custom)
    }
}

/// Eigenvalues (descending) and a unitary matrix of eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub values: EigenTuple<T>,
    pub vectors: ComplexMatrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        HermitianMatrix::from_frame(&self.vectors, self.values.as_slice())
    }
}

const MAX_SWEEPS: usize = 64;

fn off_norm<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    let n = a.n;
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi: each (p,q) rotation is a phase that makes a_pq real
/// followed by a real Givens rotation annihilating it.
pub fn eigen_decompose<T: Scalar>(h: &HermitianMatrix<T>) -> EigenDecomposition<T> {
    let n = h.n();
    let mut a = h.inner.clone();
    let mut u = ComplexMatrix::<T>::identity(n);
    let target = T::tol_floor(1e-12) * h.frobenius_norm();

    let zero = Complex::new(T::zero(), T::zero());
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag == T::zero() {
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // V restricted to (p,q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let pc = phase.conj();
                let v_pp = Complex::new(c, T::zero());
                let v_pq = Complex::new(s, T::zero());
                let v_qp = pc * (-s);
                let v_qq = pc * c;
                // A <- A V (columns p, q)
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * v_pp + aiq * v_qp);
                    a.set(i, q, aip * v_pq + aiq * v_qq);
                }
                // A <- V* A (rows p, q)
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, v_pp.conj() * apj + v_qp.conj() * aqj);
                    a.set(q, j, v_pq.conj() * apj + v_qq.conj() * aqj);
                }
                a.set(p, q, zero);
                a.set(q, p, zero);
                a.set(p, p, Complex::new(a.get(p, p).re, T::zero()));
                a.set(q, q, Complex::new(a.get(q, q).re, T::zero()));
                for i in 0..n {
                    let uip = u.get(i, p);
                    let uiq = u.get(i, q);
                    u.set(i, p, uip * v_pp + uiq * v_qp);
                    u.set(i, q, uip * v_pq + uiq * v_qq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps tie order reproducible
    order.sort_by(|&i, &j| {
        a.get(j, j).re.partial_cmp(&a.get(i, i).re).unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_j, u.get(i, old_j));
        }
    }
    EigenDecomposition { values: EigenTuple::new(values).expect("finite eigenvalues"), vectors }
}

/// Eigenvalues, descending; closed form for n ≤ 2.
pub fn eigenvalues<T: Scalar>(h: &HermitianMatrix<T>) -> EigenTuple<T> {
    match h.n() {
        1 => EigenTuple::new(vec![h.get(0, 0).re]).expect("finite"),
        2 => {
            let (a, d) = (h.get(0, 0).re, h.get(1, 1).re);
            let half = T::lit(0.5);
            let mean = (a + d) * half;
            let rad = ((a - d) * half).hypot(h.get(0, 1).norm());
            EigenTuple::new(vec![mean + rad, mean - rad]).expect("finite")
        }
        _ => eigen_decompose(h).values,
    }
}

/// `trace(AB) = Σ_{j,k} a_jk b_kj`.
pub fn trace_pair<T: Scalar>(a: &HermitianMatrix<T>, b: &HermitianMatrix<T>) -> Result<T> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::arg(format!("trace pairing of {n}x{n} with {}x{}", b.n(), b.n())));
    }
    let mut s = Complex::new(T::zero(), T::zero());
    for j in 0..n {
        for k in 0..n {
            s = s + a.get(j, k) * b.get(k, j);
        }
    }
    debug_assert!(
        s.im.abs() <= T::tol_floor(1e-12) * (T::one() + a.frobenius_norm() * b.frobenius_norm()),
        "imaginary trace residue {:?}",
        s.im
    );
    Ok(s.re)
}

pub fn matrix_in_cone<T: Scalar>(h: &HermitianMatrix<T>, cone: ConeSpec, closure: Closure) -> Result<bool> {
    if h.n() != cone.n() {
        return Err(Error::arg("matrix dimension differs from cone dimension"));
    }
    cone_contains(&eigenvalues(h), cone, closure)
}

/// `F(H) = f(λ(H))` on the closed matrix cone, −∞ elsewhere.
pub fn operator_eval<T: Scalar>(spec: &OperatorSpec, h: &HermitianMatrix<T>) -> Result<T> {
    if h.n() != spec.n() {
        return Err(Error::arg("matrix dimension differs from operator dimension"));
    }
    f_eval(spec, &eigenvalues(h))
}

/// Haar-ish random unitary from Gram–Schmidt on complex Gaussian-like columns.
pub fn random_unitary<T: Scalar, R: rand::Rng>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    loop {
        let mut cols: Vec<Vec<Complex<T>>> = Vec::with_capacity(n);
        let mut degenerate = false;
        for _ in 0..n {
            let mut v: Vec<Complex<T>> = (0..n)
                .map(|_| {
                    let (a, b) = gaussian_pair(rng);
                    Complex::new(T::lit(a), T::lit(b))
                })
                .collect();
            for c in &cols {
                let dot = c.iter().zip(&v).fold(Complex::new(T::zero(), T::zero()), |s, (ci, vi)| s + ci.conj() * *vi);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi = *vi - *ci * dot;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if norm < T::lit(1e-6) {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|z| *z = *z / norm);
            cols.push(v);
        }
        if !degenerate {
            return ComplexMatrix::from_columns(&cols).expect("square frame");
        }
    }
}

fn gaussian_pair<R: rand::Rng>(rng: &mut R) -> (f64, f64) {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<T: Scalar, R: rand::Rng>(n: usize, rng: &mut R) -> HermitianMatrix<T> {
    let data = (0..n * n)
        .map(|_| {
            let (a, b) = gaussian_pair(rng);
            Complex::new(T::lit(a), T::lit(b))
        })
        .collect();
    HermitianMatrix::new(n, data).expect("finite entries")
}
