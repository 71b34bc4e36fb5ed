//! Jacobi-preconditioned BiCGSTAB for the frozen-policy systems.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Solves `A x = b` from the initial `x`, stopping once `max|b - A x| ≤ tol`.
/// `apply(v, out)` writes `A v`; `diag` is the Jacobi preconditioner. Breakdowns
/// and stagnating recurrences restart from the true residual.
pub fn bicgstab<T: Scalar>(
    mut apply: impl FnMut(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iters: usize,
) -> LinearOutcome {
    let m = b.len();
    let inv: Vec<T> = diag.iter().map(|d| T::one() / *d).collect();
    let mut r = vec![T::zero(); m];
    let mut v = vec![T::zero(); m];
    let mut p = vec![T::zero(); m];
    let mut y = vec![T::zero(); m];
    let mut z = vec![T::zero(); m];
    let mut s = vec![T::zero(); m];
    let mut t = vec![T::zero(); m];
    let mut it = 0;
    loop {
        let res = true_residual(&mut apply, b, x, &mut r);
        if res <= tol || it >= max_iters {
            return LinearOutcome { iterations: it, residual: res.as_f64(), converged: res <= tol };
        }
        let r0 = r.clone();
        let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
        v.iter_mut().for_each(|e| *e = T::zero());
        p.iter_mut().for_each(|e| *e = T::zero());
        while it < max_iters {
            it += 1;
            let rho_new = dot(&r0, &r);
            if rho_new == T::zero() || !rho_new.is_finite() {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..m {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                y[i] = p[i] * inv[i];
            }
            apply(&y, &mut v);
            alpha = rho / dot(&r0, &v);
            if !alpha.is_finite() {
                break;
            }
            for i in 0..m {
                s[i] = r[i] - alpha * v[i];
            }
            if max_abs(&s) <= tol {
                for i in 0..m {
                    x[i] += alpha * y[i];
                }
                break;
            }
            for i in 0..m {
                z[i] = s[i] * inv[i];
            }
            apply(&z, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
            for i in 0..m {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            if max_abs(&r) <= tol || omega == T::zero() {
                break;
            }
        }
    }
}

fn true_residual<T: Scalar>(apply: &mut impl FnMut(&[T], &mut [T]), b: &[T], x: &[T], out: &mut [T]) -> T {
    apply(x, out);
    for i in 0..b.len() {
        out[i] = b[i] - out[i];
    }
    max_abs(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian with a nonsymmetric drift, an M-matrix.
    fn op(m: usize) -> impl FnMut(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            for i in 0..m {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < m { x[i + 1] } else { 0.0 };
                y[i] = 2.5 * x[i] - 1.5 * l - 0.9 * r;
            }
        }
    }

    #[test]
    fn solves_nonsymmetric_m_matrix() {
        let m = 200;
        let exact: Vec<f64> = (0..m).map(|i| ((i as f64) * 0.05).sin()).collect();
        let mut b = vec![0.0; m];
        op(m)(&exact, &mut b);
        let mut x = vec![0.0; m];
        let out = bicgstab(op(m), &vec![2.5; m], &b, &mut x, 1e-12, 2000);
        assert!(out.converged, "{out:?}");
        let err = x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let mut x = vec![0.0; 10];
        let out = bicgstab(op(10), &vec![2.5; 10], &vec![0.0; 10], &mut x, 1e-12, 10);
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }
}
