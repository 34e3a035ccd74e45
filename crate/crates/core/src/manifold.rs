//! Statistical manifolds: a coordinate box plus a metric-tensor field.
//!
//! Four manifolds are built in:
//!
//! * `gaussian`: `l` independent Gaussians, coordinates `(μ₁..μ_l, σ₁..σ_l)`,
//!   `ds² = Σ dμ_k²/σ_k² + 2 dσ_k²/σ_k²`.
//! * `iho`: conformally flat, `g = (1 + ½ Σ ω_k² θ_k²) δ`, on all of `ℝ^l`.
//! * `integrable`: `ds² = dμ_A²/μ_A² + dμ_B²/μ_B²`.
//! * `chaotic`: `ds² = 4 dμ_A²/μ_A² + dμ_B²/σ_B² + 2 dσ_B²/σ_B²`.
//!
//! Anything else can be plugged in through [`MetricField`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Points closer than this to a finite bound count as outside the domain.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> Interval<T> {
    pub fn real_line() -> Self {
        Self { lower: T::neg_infinity(), upper: T::infinity() }
    }

    pub fn positive() -> Self {
        Self { lower: T::zero(), upper: T::infinity() }
    }

    /// Half-line `(a, ∞)` with finite `a`: a scale-type coordinate.
    pub fn is_scale_type(&self) -> bool {
        self.lower.is_finite() && self.upper.is_infinite()
    }

    /// Distance to the nearest finite bound (infinite if there is none).
    pub fn distance_to_boundary(&self, x: T) -> T {
        let lo = if self.lower.is_finite() { x - self.lower } else { T::infinity() };
        let hi = if self.upper.is_finite() { self.upper - x } else { T::infinity() };
        lo.min(hi)
    }

    pub fn contains(&self, x: T) -> bool {
        x.is_finite() && self.distance_to_boundary(x) > T::lit(BOUNDARY_MARGIN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox<T> {
    pub bounds: Vec<Interval<T>>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(bounds: Vec<Interval<T>>) -> Result<Self> {
        for (i, b) in bounds.iter().enumerate() {
            if !(b.lower < b.upper) {
                return Err(Error::InvalidParameter {
                    name: format!("domain[{i}]"),
                    reason: "lower bound must be below upper bound".into(),
                });
            }
        }
        Ok(Self { bounds })
    }

    pub fn unbounded(n: usize) -> Self {
        Self { bounds: vec![Interval::real_line(); n] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn check(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: theta.len() });
        }
        for (i, (&x, b)) in theta.iter().zip(&self.bounds).enumerate() {
            if !b.contains(x) {
                return Err(Error::OutOfDomain {
                    index: i,
                    value: x.as_f64(),
                    lower: b.lower.as_f64(),
                    upper: b.upper.as_f64(),
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[T]) -> bool {
        self.check(theta).is_ok()
    }
}

/// A metric-tensor field `Θ ↦ g_{μν}(Θ)`.
pub trait MetricField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    /// Symmetric `n × n` matrix at an in-domain point.
    fn metric(&self, theta: &[T]) -> Matrix<T>;

    /// `∂_ρ g_{μν}` as `n` matrices indexed by `ρ`, when known in closed form.
    fn metric_derivative(&self, _theta: &[T]) -> Option<Vec<Matrix<T>>> {
        None
    }

    /// Closed-form `√|det g|`, when cheaper than a factorization.
    fn volume_element(&self, _theta: &[T]) -> Option<T> {
        None
    }
}

/// `ds² = Σ_k dμ_k²/σ_k² + 2 dσ_k²/σ_k²` over `(μ₁..μ_l, σ₁..σ_l)`.
#[derive(Debug, Clone)]
pub struct GaussianMetric {
    pub l: usize,
}

impl<T: Real> MetricField<T> for GaussianMetric {
    fn dim(&self) -> usize {
        2 * self.l
    }

    fn metric(&self, theta: &[T]) -> Matrix<T> {
        let l = self.l;
        let mut g = Matrix::zeros(2 * l);
        for k in 0..l {
            let inv = (theta[l + k] * theta[l + k]).recip();
            g[(k, k)] = inv;
            g[(l + k, l + k)] = T::lit(2.0) * inv;
        }
        g
    }

    fn metric_derivative(&self, theta: &[T]) -> Option<Vec<Matrix<T>>> {
        let l = self.l;
        let n = 2 * l;
        let mut d = vec![Matrix::zeros(n); n];
        for k in 0..l {
            let s = theta[l + k];
            let c = T::lit(-2.0) / (s * s * s);
            d[l + k][(k, k)] = c;
            d[l + k][(l + k, l + k)] = T::lit(2.0) * c;
        }
        Some(d)
    }

    fn volume_element(&self, theta: &[T]) -> Option<T> {
        let l = self.l;
        let root2 = T::SQRT_2();
        Some((0..l).fold(T::one(), |acc, k| acc * root2 / (theta[l + k] * theta[l + k])))
    }
}

/// `g = (1 − Φ) δ` with `Φ(Θ) = −½ Σ ω_k² θ_k²`.
#[derive(Debug, Clone)]
pub struct IhoMetric<T> {
    pub omega: Vec<T>,
}

impl<T: Real> IhoMetric<T> {
    /// Conformal factor `1 − Φ(Θ)`.
    pub fn conformal_factor(&self, theta: &[T]) -> T {
        let half = T::lit(0.5);
        T::one() + self.omega.iter().zip(theta).map(|(&w, &x)| half * w * w * x * x).sum::<T>()
    }
}

impl<T: Real> MetricField<T> for IhoMetric<T> {
    fn dim(&self) -> usize {
        self.omega.len()
    }

    fn metric(&self, theta: &[T]) -> Matrix<T> {
        let f = self.conformal_factor(theta);
        Matrix::from_diagonal(&vec![f; self.omega.len()])
    }

    fn metric_derivative(&self, theta: &[T]) -> Option<Vec<Matrix<T>>> {
        let n = self.omega.len();
        Some(
            (0..n)
                .map(|r| {
                    let df = self.omega[r] * self.omega[r] * theta[r];
                    Matrix::from_diagonal(&vec![df; n])
                })
                .collect(),
        )
    }

    fn volume_element(&self, theta: &[T]) -> Option<T> {
        let f = self.conformal_factor(theta);
        Some(f.powf(T::from_usize_lossy(self.omega.len()) * T::lit(0.5)))
    }
}

/// Diagonal metric whose entries are `c_i / x_{s(i)}²` for a coordinate `s(i)`.
///
/// Covers the two level-statistics manifolds.
#[derive(Debug, Clone)]
pub struct InverseSquareMetric<T> {
    coeffs: Vec<T>,
    scale_of: Vec<usize>,
}

impl<T: Real> InverseSquareMetric<T> {
    /// `diag(1/μ_A², 1/μ_B²)`.
    pub fn integrable() -> Self {
        Self { coeffs: vec![T::one(), T::one()], scale_of: vec![0, 1] }
    }

    /// `diag(4/μ_A², 1/σ_B², 2/σ_B²)` over `(μ_A, μ_B, σ_B)`.
    pub fn chaotic() -> Self {
        Self { coeffs: vec![T::lit(4.0), T::one(), T::lit(2.0)], scale_of: vec![0, 2, 2] }
    }
}

impl<T: Real> MetricField<T> for InverseSquareMetric<T> {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn metric(&self, theta: &[T]) -> Matrix<T> {
        let diag: Vec<T> = self
            .coeffs
            .iter()
            .zip(&self.scale_of)
            .map(|(&c, &s)| c / (theta[s] * theta[s]))
            .collect();
        Matrix::from_diagonal(&diag)
    }

    fn metric_derivative(&self, theta: &[T]) -> Option<Vec<Matrix<T>>> {
        let n = self.coeffs.len();
        let mut d = vec![Matrix::zeros(n); n];
        for (i, (&c, &s)) in self.coeffs.iter().zip(&self.scale_of).enumerate() {
            let x = theta[s];
            d[s][(i, i)] = T::lit(-2.0) * c / (x * x * x);
        }
        Some(d)
    }

    fn volume_element(&self, theta: &[T]) -> Option<T> {
        Some(
            self.coeffs
                .iter()
                .zip(&self.scale_of)
                .fold(T::one(), |acc, (&c, &s)| acc * c.sqrt() / theta[s].abs()),
        )
    }
}

/// Position-independent metric. The identity gives Euclidean space.
#[derive(Debug, Clone)]
pub struct ConstantMetric<T> {
    pub g: Matrix<T>,
}

impl<T: Real> MetricField<T> for ConstantMetric<T> {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn metric(&self, _theta: &[T]) -> Matrix<T> {
        self.g.clone()
    }

    fn metric_derivative(&self, _theta: &[T]) -> Option<Vec<Matrix<T>>> {
        let n = self.g.dim();
        Some(vec![Matrix::zeros(n); n])
    }
}

/// Metric given by a closure; derivatives come from finite differences.
pub struct FnMetric<T, F> {
    n: usize,
    f: F,
    _marker: std::marker::PhantomData<fn() -> T>,
}

impl<T, F> FnMetric<T, F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f, _marker: std::marker::PhantomData }
    }
}

impl<T: Real, F> MetricField<T> for FnMetric<T, F>
where
    F: Fn(&[T]) -> Matrix<T> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, theta: &[T]) -> Matrix<T> {
        (self.f)(theta)
    }
}

/// Named constant attached to a manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

pub type Params = BTreeMap<String, ParamValue>;

/// Parses `k=v[,k=v…]`, where a list value is written `1.0;2.0;3.0`.
pub fn parse_params(s: &str) -> Result<Params> {
    let mut out = Params::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::InvalidParameter {
            name: item.to_string(),
            reason: "expected key=value".into(),
        })?;
        let parse = |x: &str| {
            x.trim().parse::<f64>().map_err(|_| Error::InvalidParameter {
                name: k.trim().to_string(),
                reason: format!("`{x}` is not a number"),
            })
        };
        let value = if v.contains(';') {
            ParamValue::List(v.split(';').filter(|x| !x.trim().is_empty()).map(parse).collect::<Result<_>>()?)
        } else {
            ParamValue::Scalar(parse(v)?)
        };
        out.insert(k.trim().to_string(), value);
    }
    Ok(out)
}

#[derive(Clone)]
pub struct ManifoldSpec<T> {
    pub name: String,
    pub domain: DomainBox<T>,
    pub params: Params,
    metric: Arc<dyn MetricField<T>>,
}

impl<T: Real> fmt::Debug for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldSpec")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("params", &self.params)
            .finish()
    }
}

impl<T: Real> ManifoldSpec<T> {
    /// Wraps a user-supplied metric field.
    pub fn custom(
        name: impl Into<String>,
        metric: Arc<dyn MetricField<T>>,
        domain: DomainBox<T>,
    ) -> Result<Self> {
        if metric.dim() != domain.dim() || metric.dim() == 0 {
            return Err(Error::Dimension { expected: metric.dim(), got: domain.dim() });
        }
        Ok(Self { name: name.into(), domain, params: Params::new(), metric })
    }

    /// Constant metric on all of `ℝⁿ`.
    pub fn constant(g: Matrix<T>) -> Result<Self> {
        g.cholesky()?;
        let n = g.dim();
        Self::custom("constant", Arc::new(ConstantMetric { g }), DomainBox::unbounded(n))
    }

    /// The `iho` manifold for the given frequencies.
    pub fn iho(omega: &[T]) -> Result<Self> {
        if omega.is_empty() || omega.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "omega".into(),
                reason: "frequencies must be positive and finite".into(),
            });
        }
        let mut params = Params::new();
        params.insert("omega".into(), ParamValue::List(omega.iter().map(|w| w.as_f64()).collect()));
        Ok(Self {
            name: "iho".into(),
            domain: DomainBox::unbounded(omega.len()),
            params,
            metric: Arc::new(IhoMetric { omega: omega.to_vec() }),
        })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::constant(Matrix::identity(n)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn field(&self) -> &dyn MetricField<T> {
        self.metric.as_ref()
    }

    /// Metric at `theta`, validated for domain, symmetry and positive definiteness.
    pub fn metric_at(&self, theta: &[T]) -> Result<Matrix<T>> {
        self.domain.check(theta)?;
        let g = self.metric.metric(theta);
        check_metric(&g)?;
        Ok(g)
    }

    /// `√|det g(Θ)|`.
    pub fn volume_element(&self, theta: &[T]) -> Result<T> {
        self.domain.check(theta)?;
        if let Some(v) = self.metric.volume_element(theta) {
            return Ok(v);
        }
        let g = self.metric.metric(theta);
        check_metric(&g)?;
        Ok(g.cholesky()?.sqrt_det())
    }

    /// Volume element without the domain and symmetry checks; for hot
    /// integration loops over points already known to be in the domain.
    pub(crate) fn volume_element_unchecked(&self, theta: &[T]) -> Result<T> {
        match self.metric.volume_element(theta) {
            Some(v) => Ok(v),
            None => Ok(self.metric.metric(theta).cholesky()?.sqrt_det()),
        }
    }

    pub fn scalar_param(&self, key: &str) -> Option<f64> {
        match self.params.get(key) {
            Some(ParamValue::Scalar(x)) => Some(*x),
            _ => None,
        }
    }
}

fn check_metric<T: Real>(g: &Matrix<T>) -> Result<()> {
    let asym = g.max_asymmetry();
    if asym > T::epsilon() * T::lit(64.0) * g.max_abs() {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }
    g.cholesky().map(|_| ())
}

fn require_count(params: &Params, key: &str) -> Result<Option<usize>> {
    match params.get(key) {
        None => Ok(None),
        Some(ParamValue::Scalar(x)) if *x >= 1.0 && x.fract() == 0.0 => Ok(Some(*x as usize)),
        Some(v) => Err(Error::InvalidParameter {
            name: key.into(),
            reason: format!("must be an integer >= 1, got {v:?}"),
        }),
    }
}

fn frequencies(params: &Params) -> Result<Option<Vec<f64>>> {
    let list = match params.get("omega") {
        None => return Ok(None),
        Some(ParamValue::Scalar(x)) => vec![*x],
        Some(ParamValue::List(v)) => v.clone(),
    };
    if list.is_empty() {
        return Err(Error::InvalidParameter { name: "omega".into(), reason: "empty list".into() });
    }
    if let Some(bad) = list.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "omega".into(),
            reason: format!("frequencies must be positive, got {bad}"),
        });
    }
    Ok(Some(list))
}

/// Builds one of the four built-in manifolds.
pub fn build_manifold<T: Real>(name: &str, params: &Params) -> Result<ManifoldSpec<T>> {
    let allowed: &[&str] = match name {
        "gaussian" => &["l"],
        "iho" => &["l", "omega"],
        "integrable" | "chaotic" => &[],
        other => return Err(Error::UnknownManifold(other.to_string())),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParameter {
            name: k.clone(),
            reason: format!("not a parameter of the `{name}` manifold"),
        });
    }
    let (metric, domain): (Arc<dyn MetricField<T>>, DomainBox<T>) = match name {
        "gaussian" => {
            let l = require_count(params, "l")?.ok_or_else(|| Error::InvalidParameter {
                name: "l".into(),
                reason: "required for the gaussian manifold".into(),
            })?;
            let mut bounds = vec![Interval::real_line(); l];
            bounds.extend(vec![Interval::positive(); l]);
            (Arc::new(GaussianMetric { l }), DomainBox::new(bounds)?)
        }
        "iho" => {
            let omega = frequencies(params)?.ok_or_else(|| Error::InvalidParameter {
                name: "omega".into(),
                reason: "required for the iho manifold".into(),
            })?;
            if let Some(l) = require_count(params, "l")? {
                if l != omega.len() {
                    return Err(Error::InvalidParameter {
                        name: "omega".into(),
                        reason: format!("expected {l} frequencies, got {}", omega.len()),
                    });
                }
            }
            let n = omega.len();
            let omega = omega.into_iter().map(T::lit).collect();
            (Arc::new(IhoMetric { omega }), DomainBox::unbounded(n))
        }
        "integrable" => (
            Arc::new(InverseSquareMetric::integrable()),
            DomainBox::new(vec![Interval::positive(); 2])?,
        ),
        _ => (
            Arc::new(InverseSquareMetric::chaotic()),
            DomainBox::new(vec![Interval::positive(), Interval::real_line(), Interval::positive()])?,
        ),
    };
    Ok(ManifoldSpec { name: name.to_string(), domain, params: params.clone(), metric })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Params {
        parse_params(s).unwrap()
    }

    #[test]
    fn gaussian_l1_layout() {
        let m = build_manifold::<f64>("gaussian", &p("l=1")).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.domain.bounds[0], Interval::real_line());
        assert_eq!(m.domain.bounds[1], Interval::positive());
        assert_eq!(m.metric_at(&[0.0, 2.0]).unwrap(), Matrix::from_diagonal(&[0.25, 0.5]));
    }

    #[test]
    fn metric_values() {
        let integrable = build_manifold::<f64>("integrable", &Params::new()).unwrap();
        assert_eq!(integrable.metric_at(&[1.0, 1.0]).unwrap(), Matrix::identity(2));
        let g = integrable.metric_at(&[2.0, 5.0]).unwrap();
        assert_eq!(g, Matrix::from_diagonal(&[0.25, 0.04]));

        let chaotic = build_manifold::<f64>("chaotic", &Params::new()).unwrap();
        assert_eq!(chaotic.dim(), 3);
        assert_eq!(chaotic.metric_at(&[2.0, 0.0, 1.0]).unwrap(), Matrix::from_diagonal(&[1.0, 1.0, 2.0]));

        let iho = build_manifold::<f64>("iho", &p("l=2,omega=1;2")).unwrap();
        let (a, b) = (0.3, -0.7);
        let f = 1.0 + 0.5 * (a * a + 4.0 * b * b);
        assert_eq!(iho.metric_at(&[a, b]).unwrap(), Matrix::from_diagonal(&[f, f]));
    }

    #[test]
    fn volume_elements() {
        let g1 = build_manifold::<f64>("gaussian", &p("l=1")).unwrap();
        assert!((g1.volume_element(&[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let int = build_manifold::<f64>("integrable", &Params::new()).unwrap();
        assert!((int.volume_element(&[2.0, 3.0]).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let ch = build_manifold::<f64>("chaotic", &Params::new()).unwrap();
        assert!((ch.volume_element(&[1.0, 0.0, 1.0]).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_volume_matches_factorization() {
        let iho = build_manifold::<f64>("iho", &p("omega=1;2;0.5")).unwrap();
        let th = [0.4, -1.2, 2.0];
        let fast = iho.volume_element(&th).unwrap();
        let slow = iho.field().metric(&th).cholesky().unwrap().sqrt_det();
        assert!((fast - slow).abs() < 1e-13 * slow);
    }

    #[test]
    fn domain_errors() {
        let m = build_manifold::<f64>("gaussian", &p("l=1")).unwrap();
        assert!(matches!(m.metric_at(&[0.0, 0.0]), Err(Error::OutOfDomain { index: 1, .. })));
        assert!(matches!(m.metric_at(&[0.0, -1.0]), Err(Error::OutOfDomain { .. })));
        assert!(matches!(m.metric_at(&[0.0, 5e-13]), Err(Error::OutOfDomain { .. })));
        assert!(matches!(m.metric_at(&[0.0]), Err(Error::Dimension { .. })));
        assert!(m.metric_at(&[0.0, 2e-12]).is_ok());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(build_manifold::<f64>("torus", &Params::new()), Err(Error::UnknownManifold(_))));
        assert!(build_manifold::<f64>("gaussian", &Params::new()).is_err());
        assert!(build_manifold::<f64>("gaussian", &p("l=0")).is_err());
        assert!(build_manifold::<f64>("gaussian", &p("l=1.5")).is_err());
        assert!(build_manifold::<f64>("iho", &p("omega=1;-2")).is_err());
        assert!(build_manifold::<f64>("iho", &p("l=3,omega=1;2")).is_err());
        assert!(build_manifold::<f64>("integrable", &p("l=2")).is_err());
    }

    #[test]
    fn user_metric_must_be_positive_definite() {
        let m = ManifoldSpec::custom(
            "indefinite",
            Arc::new(FnMetric::new(2, |_: &[f64]| Matrix::from_diagonal(&[1.0, -1.0]))),
            DomainBox::unbounded(2),
        )
        .unwrap();
        assert_eq!(m.metric_at(&[0.0, 0.0]).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn parses_param_lists() {
        let params = p("l=3, omega=1.0;2.0;3.0");
        assert_eq!(params["l"], ParamValue::Scalar(3.0));
        assert_eq!(params["omega"], ParamValue::List(vec![1.0, 2.0, 3.0]));
        assert!(parse_params("l").is_err());
        assert!(parse_params("l=x").is_err());
    }
}
