//! Elementary symmetric polynomials, Gårding cones Γ_k and the admissible
//! symmetric functions `f` acting on eigenvalue tuples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of R^n, typically the eigenvalues of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigenTuple<T>(Vec<T>);

impl<T: Scalar> EigenTuple<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::arg("eigen tuple must have at least one entry"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("eigen tuple entries must be finite"));
        }
        Ok(EigenTuple(entries))
    }

    pub fn from_f64(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| T::lit(x)).collect())
    }

    pub fn constant(n: usize, value: T) -> Self {
        EigenTuple(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Copy shifted by `t` along (1,...,1).
    pub fn shifted(&self, t: T) -> Self {
        EigenTuple(self.0.iter().map(|&x| x + t).collect())
    }

    /// Copy with entries sorted in descending order.
    pub fn sorted_desc(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        EigenTuple(v)
    }
}

impl<T> std::ops::Index<usize> for EigenTuple<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// The cone Γ_k ⊂ R^n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeSpec {
    n: usize,
    k: usize,
}

impl ConeSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("cone dimension n must be positive"));
        }
        if k == 0 || k > n {
            return Err(Error::arg(format!("cone index k={k} must satisfy 1 <= k <= n={n}")));
        }
        Ok(ConeSpec { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Open cone or its closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    MongeAmpere,
    HessianK(usize),
    HessianQuotient { k: usize, l: usize },
    /// `g ∘ f_base` with `g(t) = t / (1 + t)`.
    Saturated(Box<Family>),
}

/// The pair (Γ_k, f) defining the operator `F(H) = f(λ(H))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperatorSpec {
    cone: ConeSpec,
    family: Family,
}

impl OperatorSpec {
    pub fn monge_ampere(n: usize) -> Result<Self> {
        Ok(OperatorSpec { cone: ConeSpec::new(n, n)?, family: Family::MongeAmpere })
    }

    pub fn hessian(k: usize, n: usize) -> Result<Self> {
        Ok(OperatorSpec { cone: ConeSpec::new(n, k)?, family: Family::HessianK(k) })
    }

    pub fn quotient(k: usize, l: usize, n: usize) -> Result<Self> {
        if l == 0 || l >= k {
            return Err(Error::arg(format!("quotient requires 1 <= l < k, got k={k}, l={l}")));
        }
        Ok(OperatorSpec { cone: ConeSpec::new(n, k)?, family: Family::HessianQuotient { k, l } })
    }

    pub fn saturated(base: OperatorSpec) -> Result<Self> {
        if matches!(base.family, Family::Saturated(_)) {
            return Err(Error::arg("saturation wraps an unsaturated family only"));
        }
        Ok(OperatorSpec { cone: base.cone, family: Family::Saturated(Box::new(base.family)) })
    }

    pub fn n(&self) -> usize {
        self.cone.n
    }

    pub fn cone(&self) -> ConeSpec {
        self.cone
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_saturated(&self) -> bool {
        matches!(self.family, Family::Saturated(_))
    }

    /// Degree-1 homogeneous families (everything except the saturated wrapper).
    pub fn is_homogeneous(&self) -> bool {
        !self.is_saturated()
    }

    fn base(&self) -> &Family {
        match &self.family {
            Family::Saturated(b) => b,
            f => f,
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_family(f: &mut fmt::Formatter<'_>, fam: &Family, n: usize) -> fmt::Result {
            match fam {
                Family::MongeAmpere => write!(f, "ma:n={n}"),
                Family::HessianK(k) => write!(f, "hess:k={k},n={n}"),
                Family::HessianQuotient { k, l } => write!(f, "quot:k={k},l={l},n={n}"),
                Family::Saturated(b) => {
                    write!(f, "sat(")?;
                    write_family(f, b, n)?;
                    write!(f, ")")
                }
            }
        }
        write_family(f, &self.family, self.cone.n)
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("sat(") {
            let inner = inner
                .strip_suffix(')')
                .ok_or_else(|| Error::parse(format!("unbalanced saturation in '{s}'")))?;
            return OperatorSpec::saturated(inner.parse()?);
        }
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("operator spec '{s}' lacks ':'")))?;
        let mut n = None;
        let mut k = None;
        let mut l = None;
        for kv in params.split(',') {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("bad parameter '{kv}' in '{s}'")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("bad integer '{value}' in '{s}'")))?;
            match key.trim() {
                "n" => n = Some(value),
                "k" => k = Some(value),
                "l" => l = Some(value),
                other => return Err(Error::parse(format!("unknown key '{other}' in '{s}'"))),
            }
        }
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::parse(format!("missing '{name}' in '{s}'")))
        };
        match kind.trim() {
            "ma" => OperatorSpec::monge_ampere(need(n, "n")?),
            "hess" => OperatorSpec::hessian(need(k, "k")?, need(n, "n")?),
            "quot" => OperatorSpec::quotient(need(k, "k")?, need(l, "l")?, need(n, "n")?),
            other => Err(Error::parse(format!("unknown operator family '{other}'"))),
        }
    }
}

impl Serialize for OperatorSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OperatorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// σ_0..=σ_k of `x` by the product recurrence.
fn elementary_all<T: Scalar>(x: &[T], k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for (i, &xi) in x.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            let prev = e[j - 1];
            e[j] += xi * prev;
        }
    }
    e
}

/// σ_j(x with entry `skip` removed) for j = 0..=k.
fn elementary_without<T: Scalar>(x: &[T], skip: usize, k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    let mut seen = 0;
    for (i, &xi) in x.iter().enumerate() {
        if i == skip {
            continue;
        }
        seen += 1;
        for j in (1..=k.min(seen)).rev() {
            let prev = e[j - 1];
            e[j] += xi * prev;
        }
    }
    e
}

/// k-th elementary symmetric polynomial.
pub fn sigma_k<T: Scalar>(x: &EigenTuple<T>, k: usize) -> Result<T> {
    if k == 0 || k > x.len() {
        return Err(Error::arg(format!("sigma_k requires 1 <= k <= {}, got {k}", x.len())));
    }
    Ok(elementary_all(x.as_slice(), k)[k])
}

fn check_len<T>(x: &EigenTuple<T>, n: usize) -> Result<()> {
    if x.0.len() != n {
        return Err(Error::arg(format!("tuple length {} does not match dimension {n}", x.0.len())));
    }
    Ok(())
}

fn open_contains<T: Scalar>(x: &[T], k: usize) -> bool {
    elementary_all(x, k)[1..].iter().all(|&s| s > T::zero())
}

/// Default ray-test tolerance for closure membership.
pub fn closure_tolerance<T: Scalar>(x: &EigenTuple<T>) -> T {
    T::lit(1e-10) * (T::one() + x.max_abs())
}

pub fn cone_contains<T: Scalar>(x: &EigenTuple<T>, cone: ConeSpec, closure: Closure) -> Result<bool> {
    match closure {
        Closure::Open => {
            check_len(x, cone.n)?;
            Ok(open_contains(x.as_slice(), cone.k))
        }
        Closure::Closed => cone_contains_with_tol(x, cone, closure_tolerance(x)),
    }
}

/// Closure membership via the ray test `x + delta·(1,..,1) ∈ Γ_k`.
pub fn cone_contains_with_tol<T: Scalar>(x: &EigenTuple<T>, cone: ConeSpec, delta: T) -> Result<bool> {
    check_len(x, cone.n)?;
    Ok(open_contains(x.shifted(delta).as_slice(), cone.k))
}

fn pow_root<T: Scalar>(x: T, degree: usize) -> T {
    match degree {
        1 => x,
        2 => x.sqrt(),
        3 => x.cbrt(),
        d => x.powf(T::one() / T::from_usize_lossy(d)),
    }
}

/// Closed form of the unsaturated family on the open cone.
fn base_value<T: Scalar>(family: &Family, n: usize, x: &[T]) -> T {
    match *family {
        Family::MongeAmpere => pow_root(elementary_all(x, n)[n], n),
        Family::HessianK(k) => pow_root(elementary_all(x, k)[k], k),
        Family::HessianQuotient { k, l } => {
            let e = elementary_all(x, k);
            pow_root(e[k] / e[l], k - l)
        }
        Family::Saturated(_) => unreachable!("saturation handled by caller"),
    }
}

fn saturate<T: Scalar>(t: T) -> T {
    t / (T::one() + t)
}

/// `f(x)`: closed form on the open cone, 0 on its boundary, -inf outside the closure.
pub fn f_eval<T: Scalar>(spec: &OperatorSpec, x: &EigenTuple<T>) -> Result<T> {
    check_len(x, spec.n())?;
    // Sorting first makes the value exactly permutation invariant.
    let sorted = x.sorted_desc();
    let xs = sorted.as_slice();
    let k = spec.cone.k;
    if open_contains(xs, k) {
        let base = base_value(spec.base(), spec.n(), xs);
        Ok(if spec.is_saturated() { saturate(base) } else { base })
    } else if open_contains(sorted.shifted(closure_tolerance(&sorted)).as_slice(), k) {
        Ok(T::zero())
    } else {
        Ok(T::neg_infinity())
    }
}

fn base_gradient<T: Scalar>(family: &Family, n: usize, x: &[T]) -> Vec<T> {
    let power_rule = |k: usize| -> Vec<T> {
        let sk = elementary_all(x, k)[k];
        let kk = T::from_usize_lossy(k);
        let coef = pow_root(sk, k) / (kk * sk);
        (0..x.len()).map(|i| coef * elementary_without(x, i, k - 1)[k - 1]).collect()
    };
    match *family {
        Family::MongeAmpere => power_rule(n),
        Family::HessianK(k) => power_rule(k),
        Family::HessianQuotient { k, l } => {
            let e = elementary_all(x, k);
            let (sk, sl) = (e[k], e[l]);
            let q = sk / sl;
            let d = T::from_usize_lossy(k - l);
            let coef = pow_root(q, k - l) / (d * q);
            (0..x.len())
                .map(|i| {
                    let w = elementary_without(x, i, k - 1);
                    let dq = (w[k - 1] * sl - sk * w[l - 1]) / (sl * sl);
                    coef * dq
                })
                .collect()
        }
        Family::Saturated(_) => unreachable!("saturation handled by caller"),
    }
}

/// Closed-form gradient of `f` at an open-cone point, in the order of `x`.
pub fn f_gradient<T: Scalar>(spec: &OperatorSpec, x: &EigenTuple<T>) -> Result<EigenTuple<T>> {
    check_len(x, spec.n())?;
    if !open_contains(x.as_slice(), spec.cone.k) {
        return Err(Error::domain("gradient requested outside the open cone"));
    }
    let mut g = base_gradient(spec.base(), spec.n(), x.as_slice());
    if spec.is_saturated() {
        let t = base_value(spec.base(), spec.n(), x.as_slice());
        let d = T::one() / ((T::one() + t) * (T::one() + t));
        g.iter_mut().for_each(|gi| *gi *= d);
    }
    Ok(EigenTuple(g))
}

/// `lim_{R→∞} f(R,..,R)`.
pub fn f_limit_at_infinity<T: Scalar>(spec: &OperatorSpec) -> T {
    if spec.is_saturated() {
        T::one()
    } else {
        T::infinity()
    }
}

pub use crate::axioms::{check_f_axioms, AxiomCheck, AxiomReport, AxiomViolation};
