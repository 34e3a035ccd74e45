//! Fisher–Rao metrics computed from parametric log-densities.
//!
//! Built-in families:
//!
//! | name                  | parameters | density                                   |
//! |-----------------------|------------|-------------------------------------------|
//! | `gaussian`            | `(μ, σ)`   | `N(μ, σ²)`                                |
//! | `exponential-spacing` | `(μ)`      | `(1/μ) e^{−s/μ}` (Poisson level spacings) |
//! | `wigner-dyson`        | `(μ)`      | `(πs/2μ²) e^{−πs²/4μ²}` (Wigner surmise)  |

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::{DomainBox, Interval};
use crate::quadrature::{integrate_adaptive, stream_rng, Estimate, IntegrationScheme, Moments, SchemeKind, SupportMap, MC_BLOCK};
use crate::scalar::Real;

/// Parametric family `p(x | Θ)`.
pub trait DistributionFamily<T: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn param_dim(&self) -> usize;

    fn param_domain(&self) -> DomainBox<T>;

    fn sample_dim(&self) -> usize {
        1
    }

    /// Support of a univariate sample variable.
    fn support(&self) -> Interval<T> {
        Interval::real_line()
    }

    /// `log p(x | Θ)` without argument validation.
    fn log_density(&self, x: &[T], theta: &[T]) -> T;

    /// `∂_Θ log p(x | Θ)` in closed form, if available.
    fn score(&self, _x: &[T], _theta: &[T]) -> Option<Vec<T>> {
        None
    }

    /// Centre and width used to map an infinite support onto `(0, 1)`.
    fn location_scale(&self, _theta: &[T]) -> (T, T) {
        (T::zero(), T::one())
    }

    /// Draws one sample; families without a sampler cannot use Monte Carlo.
    fn sample(&self, _rng: &mut ChaCha8Rng, _theta: &[T]) -> Option<Vec<T>> {
        None
    }

    fn fisher_metric(&self, theta: &[T], scheme: &IntegrationScheme) -> Result<FisherEstimate<T>> {
        univariate_fisher(self, theta, scheme)
    }
}

/// Fisher metric with its error. `error` is the largest per-entry
/// quadrature error estimate or Monte Carlo standard error.
#[derive(Debug, Clone, Serialize)]
pub struct FisherEstimate<T> {
    pub metric: Matrix<T>,
    pub error: T,
    /// Per-entry standard errors (Monte Carlo only).
    pub standard_errors: Option<Matrix<T>>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianFamily;

impl<T: Real> DistributionFamily<T> for GaussianFamily {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn param_dim(&self) -> usize {
        2
    }
    fn param_domain(&self) -> DomainBox<T> {
        DomainBox { bounds: vec![Interval::real_line(), Interval::positive()] }
    }
    fn log_density(&self, x: &[T], theta: &[T]) -> T {
        let (mu, sigma) = (theta[0], theta[1]);
        let z = (x[0] - mu) / sigma;
        -T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() - sigma.ln() - T::lit(0.5) * z * z
    }
    fn score(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let (mu, sigma) = (theta[0], theta[1]);
        let d = x[0] - mu;
        Some(vec![d / (sigma * sigma), (d * d / (sigma * sigma) - T::one()) / sigma])
    }
    fn location_scale(&self, theta: &[T]) -> (T, T) {
        (theta[0], theta[1])
    }
    fn sample(&self, rng: &mut ChaCha8Rng, theta: &[T]) -> Option<Vec<T>> {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        Some(vec![theta[0] + theta[1] * T::lit(z)])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialSpacing;

impl<T: Real> DistributionFamily<T> for ExponentialSpacing {
    fn name(&self) -> &str {
        "exponential-spacing"
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_domain(&self) -> DomainBox<T> {
        DomainBox { bounds: vec![Interval::positive()] }
    }
    fn support(&self) -> Interval<T> {
        Interval::positive()
    }
    fn log_density(&self, x: &[T], theta: &[T]) -> T {
        -theta[0].ln() - x[0] / theta[0]
    }
    fn score(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let mu = theta[0];
        Some(vec![(x[0] - mu) / (mu * mu)])
    }
    fn location_scale(&self, theta: &[T]) -> (T, T) {
        (T::zero(), theta[0])
    }
    fn sample(&self, rng: &mut ChaCha8Rng, theta: &[T]) -> Option<Vec<T>> {
        let u: f64 = rng.random();
        Some(vec![-theta[0] * T::lit((1.0 - u).ln())])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WignerDysonSpacing;

impl<T: Real> DistributionFamily<T> for WignerDysonSpacing {
    fn name(&self) -> &str {
        "wigner-dyson"
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_domain(&self) -> DomainBox<T> {
        DomainBox { bounds: vec![Interval::positive()] }
    }
    fn support(&self) -> Interval<T> {
        Interval::positive()
    }
    fn log_density(&self, x: &[T], theta: &[T]) -> T {
        let (s, mu) = (x[0], theta[0]);
        let pi = T::PI();
        (pi * s / T::lit(2.0)).ln() - T::lit(2.0) * mu.ln() - pi * s * s / (T::lit(4.0) * mu * mu)
    }
    fn score(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let (s, mu) = (x[0], theta[0]);
        Some(vec![-T::lit(2.0) / mu + T::PI() * s * s / (T::lit(2.0) * mu * mu * mu)])
    }
    fn location_scale(&self, theta: &[T]) -> (T, T) {
        (T::zero(), theta[0])
    }
    fn sample(&self, rng: &mut ChaCha8Rng, theta: &[T]) -> Option<Vec<T>> {
        // inverse CDF: F(s) = 1 − exp(−πs²/4μ²)
        let u: f64 = rng.random();
        let s = (-4.0 * (1.0 - u).ln() / std::f64::consts::PI).sqrt();
        Some(vec![theta[0] * T::lit(s)])
    }
}

/// Independent product of families.
///
/// Parameters are laid out slot-major: the first parameter of every
/// component in order, then every second parameter, and so on. Two
/// Gaussians give `(μ₁, μ₂, σ₁, σ₂)`; Wigner–Dyson × Gaussian gives
/// `(μ_A, μ_B, σ_B)`.
pub struct ProductFamily<T> {
    name: String,
    components: Vec<Arc<dyn DistributionFamily<T>>>,
    /// `slots[k][j]` is the global index of parameter `j` of component `k`.
    slots: Vec<Vec<usize>>,
    sample_offsets: Vec<usize>,
}

impl<T: Real> ProductFamily<T> {
    pub fn components(&self) -> &[Arc<dyn DistributionFamily<T>>] {
        &self.components
    }

    /// Global parameter indices of component `k`.
    pub fn slots(&self, k: usize) -> &[usize] {
        &self.slots[k]
    }

    fn split_theta(&self, theta: &[T], k: usize) -> Vec<T> {
        self.slots[k].iter().map(|&i| theta[i]).collect()
    }

    fn split_x<'a>(&self, x: &'a [T], k: usize) -> &'a [T] {
        let lo = self.sample_offsets[k];
        &x[lo..lo + self.components[k].sample_dim()]
    }
}

/// Independent product family whose Fisher metric is block diagonal.
pub fn compose_product<T: Real>(families: Vec<Arc<dyn DistributionFamily<T>>>) -> Result<ProductFamily<T>> {
    if families.is_empty() {
        return Err(Error::InvalidArgument("product of an empty list of families".into()));
    }
    let max_params = families.iter().map(|f| f.param_dim()).max().unwrap_or(0);
    let mut slots = vec![Vec::new(); families.len()];
    let mut next = 0;
    for j in 0..max_params {
        for (k, f) in families.iter().enumerate() {
            if j < f.param_dim() {
                slots[k].push(next);
                next += 1;
            }
        }
    }
    let mut sample_offsets = Vec::with_capacity(families.len());
    let mut off = 0;
    for f in &families {
        sample_offsets.push(off);
        off += f.sample_dim();
    }
    let name = families.iter().map(|f| f.name().to_string()).collect::<Vec<_>>().join("*");
    Ok(ProductFamily { name, components: families, slots, sample_offsets })
}

impl<T: Real> DistributionFamily<T> for ProductFamily<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn param_dim(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }

    fn param_domain(&self) -> DomainBox<T> {
        let mut bounds = vec![Interval::real_line(); self.param_dim()];
        for (k, f) in self.components.iter().enumerate() {
            for (b, &i) in f.param_domain().bounds.into_iter().zip(&self.slots[k]) {
                bounds[i] = b;
            }
        }
        DomainBox { bounds }
    }

    fn sample_dim(&self) -> usize {
        self.components.iter().map(|f| f.sample_dim()).sum()
    }

    fn log_density(&self, x: &[T], theta: &[T]) -> T {
        (0..self.components.len())
            .map(|k| self.components[k].log_density(self.split_x(x, k), &self.split_theta(theta, k)))
            .sum()
    }

    fn score(&self, x: &[T], theta: &[T]) -> Option<Vec<T>> {
        let mut out = vec![T::zero(); self.param_dim()];
        for (k, f) in self.components.iter().enumerate() {
            let th = self.split_theta(theta, k);
            let xk = self.split_x(x, k);
            let s = f.score(xk, &th).unwrap_or_else(|| fd_score(f.as_ref(), xk, &th));
            for (v, &i) in s.into_iter().zip(&self.slots[k]) {
                out[i] = v;
            }
        }
        Some(out)
    }

    fn sample(&self, rng: &mut ChaCha8Rng, theta: &[T]) -> Option<Vec<T>> {
        let mut out = Vec::with_capacity(self.sample_dim());
        for (k, f) in self.components.iter().enumerate() {
            out.extend(f.sample(rng, &self.split_theta(theta, k))?);
        }
        Some(out)
    }

    fn fisher_metric(&self, theta: &[T], scheme: &IntegrationScheme) -> Result<FisherEstimate<T>> {
        let n = self.param_dim();
        let mut metric = Matrix::zeros(n);
        let mut se = match scheme.kind {
            SchemeKind::MonteCarlo => Some(Matrix::zeros(n)),
            SchemeKind::AdaptiveQuadrature => None,
        };
        let mut error = T::zero();
        let mut evaluations = 0;
        for (k, f) in self.components.iter().enumerate() {
            let block = fisher_metric(f.as_ref(), &self.split_theta(theta, k), scheme)?;
            metric.set_block(&self.slots[k], &block.metric);
            if let (Some(total), Some(part)) = (se.as_mut(), block.standard_errors.as_ref()) {
                total.set_block(&self.slots[k], part);
            }
            error = error.max(block.error);
            evaluations += block.evaluations;
        }
        Ok(FisherEstimate { metric, error, standard_errors: se, evaluations })
    }
}

/// Central-difference score with step `1e−6 · max(1, |Θ_i|)`.
pub fn fd_score<T: Real, F: DistributionFamily<T> + ?Sized>(f: &F, x: &[T], theta: &[T]) -> Vec<T> {
    let mut th = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = T::lit(1e-6) * T::one().max(theta[i].abs());
            th[i] = theta[i] + h;
            let up = f.log_density(x, &th);
            th[i] = theta[i] - h;
            let down = f.log_density(x, &th);
            th[i] = theta[i];
            (up - down) / (h + h)
        })
        .collect()
}

fn score_of<T: Real, F: DistributionFamily<T> + ?Sized>(f: &F, x: &[T], theta: &[T]) -> Vec<T> {
    f.score(x, theta).unwrap_or_else(|| fd_score(f, x, theta))
}

fn check_theta<T: Real, F: DistributionFamily<T> + ?Sized>(f: &F, theta: &[T]) -> Result<()> {
    if theta.len() != f.param_dim() {
        return Err(Error::Dimension { expected: f.param_dim(), got: theta.len() });
    }
    f.param_domain().check(theta)
}

/// Validated `log p(x | Θ)`.
pub fn family_log_density<T: Real, F: DistributionFamily<T> + ?Sized>(f: &F, x: &[T], theta: &[T]) -> Result<T> {
    check_theta(f, theta)?;
    if x.len() != f.sample_dim() {
        return Err(Error::Dimension { expected: f.sample_dim(), got: x.len() });
    }
    if f.sample_dim() == 1 {
        let s = f.support();
        if !(x[0] >= s.lower && x[0] <= s.upper) {
            return Err(Error::Support { value: x[0].as_f64(), lower: s.lower.as_f64(), upper: s.upper.as_f64() });
        }
    }
    let lp = f.log_density(x, theta);
    if lp.is_finite() {
        Ok(lp)
    } else {
        let s = f.support();
        Err(Error::Support { value: x[0].as_f64(), lower: s.lower.as_f64(), upper: s.upper.as_f64() })
    }
}

/// `E[∂_μ log p · ∂_ν log p]` at `theta`.
pub fn fisher_metric<T: Real, F: DistributionFamily<T> + ?Sized>(
    f: &F,
    theta: &[T],
    scheme: &IntegrationScheme,
) -> Result<FisherEstimate<T>> {
    scheme.validate()?;
    check_theta(f, theta)?;
    f.fisher_metric(theta, scheme)
}

/// Expectation `E[h(x)]` of a univariate family by adaptive quadrature.
pub fn expectation<T: Real, F, H>(f: &F, theta: &[T], h: H, tol: T, budget: usize) -> Result<Estimate<T>>
where
    F: DistributionFamily<T> + ?Sized,
    H: Fn(T) -> T,
{
    let s = f.support();
    let (c, w) = f.location_scale(theta);
    let map = SupportMap::new(s.lower, s.upper, c, w);
    let (a, b) = map.range();
    integrate_adaptive(
        |t| {
            let (x, jac) = map.map(t);
            let p = f.log_density(&[x], theta).exp();
            if p == T::zero() || jac == T::zero() {
                return Ok(T::zero());
            }
            Ok(p * h(x) * jac)
        },
        a,
        b,
        tol,
        budget,
    )
}

fn univariate_fisher<T: Real, F: DistributionFamily<T> + ?Sized>(
    f: &F,
    theta: &[T],
    scheme: &IntegrationScheme,
) -> Result<FisherEstimate<T>> {
    if f.sample_dim() != 1 {
        return match scheme.kind {
            SchemeKind::MonteCarlo => monte_carlo_fisher(f, theta, scheme),
            SchemeKind::AdaptiveQuadrature => Err(Error::InvalidScheme(
                "adaptive quadrature supports univariate families and products of them".into(),
            )),
        };
    }
    match scheme.kind {
        SchemeKind::MonteCarlo => monte_carlo_fisher(f, theta, scheme),
        SchemeKind::AdaptiveQuadrature => quadrature_fisher(f, theta, scheme),
    }
}

fn quadrature_fisher<T: Real, F: DistributionFamily<T> + ?Sized>(
    f: &F,
    theta: &[T],
    scheme: &IntegrationScheme,
) -> Result<FisherEstimate<T>> {
    let tol = T::lit(scheme.tolerance);
    let mut remaining = scheme.budget;
    let mut evaluations = 0;
    let mut run = |h: &dyn Fn(T) -> T| -> Result<Estimate<T>> {
        let est = expectation(f, theta, h, tol, remaining)?;
        remaining = remaining.saturating_sub(est.evaluations);
        evaluations += est.evaluations;
        Ok(est)
    };

    let mass = run(&|_| T::one()).map_err(|e| match e {
        Error::QuadratureBudget { .. } | Error::InvalidArgument(_) => Error::NonNormalizable(f64::INFINITY),
        other => other,
    })?;
    if !((mass.value - T::one()).abs() <= T::lit(1e-6)) {
        return Err(Error::NonNormalizable(mass.value.as_f64()));
    }

    let n = f.param_dim();
    let mut metric = Matrix::zeros(n);
    let mut error = mass.error;
    let score = |x: T| score_of(f, &[x], theta);
    for i in 0..n {
        let est = run(&|x| {
            let s = score(x);
            s[i] * s[i]
        })?;
        metric[(i, i)] = est.value;
        error = error.max(est.error);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // off-diagonal entries are judged against the geometric mean of
            // their diagonals, since many vanish identically
            let scale = (metric[(i, i)] * metric[(j, j)]).sqrt();
            let est = expectation(
                f,
                theta,
                |x| {
                    let s = score(x);
                    s[i] * s[j] / scale
                },
                tol,
                remaining,
            );
            let est = offdiag_floor(est, tol)?;
            remaining = remaining.saturating_sub(est.evaluations);
            evaluations += est.evaluations;
            metric[(i, j)] = est.value * scale;
            metric[(j, i)] = est.value * scale;
            error = error.max(est.error * scale);
        }
    }
    Ok(FisherEstimate { metric, error, standard_errors: None, evaluations })
}

/// Entries that are zero within tolerance never meet a purely relative
/// criterion; accept them once the absolute error is below `tol`.
fn offdiag_floor<T: Real>(est: Result<Estimate<T>>, tol: T) -> Result<Estimate<T>> {
    match est {
        Ok(e) => Ok(e),
        Err(Error::QuadratureBudget { achieved, budget, target }) => {
            if achieved <= tol.as_f64() {
                Ok(Estimate { value: T::zero(), error: T::lit(achieved), evaluations: budget })
            } else {
                Err(Error::QuadratureBudget { budget, achieved, target })
            }
        }
        Err(e) => Err(e),
    }
}

fn monte_carlo_fisher<T: Real, F: DistributionFamily<T> + ?Sized>(
    f: &F,
    theta: &[T],
    scheme: &IntegrationScheme,
) -> Result<FisherEstimate<T>> {
    let n = f.param_dim();
    let samples = scheme.budget;
    let blocks = samples.div_ceil(MC_BLOCK);
    let partial: Vec<Option<Vec<Moments<T>>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(scheme.seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = vec![Moments::default(); n * n];
            for _ in 0..count {
                let x = f.sample(&mut rng, theta)?;
                let s = score_of(f, &x, theta);
                for i in 0..n {
                    for j in 0..n {
                        acc[i * n + j].push(s[i] * s[j]);
                    }
                }
            }
            Some(acc)
        })
        .collect();
    let mut total = vec![Moments::default(); n * n];
    for p in partial {
        let block = p.ok_or_else(|| Error::InvalidScheme(format!("family `{}` has no sampler", f.name())))?;
        for (t, b) in total.iter_mut().zip(&block) {
            t.merge(b);
        }
    }
    let mut metric = Matrix::zeros(n);
    let mut se = Matrix::zeros(n);
    let mut error = T::zero();
    for i in 0..n {
        for j in 0..n {
            let e = total[i * n + j].estimate();
            metric[(i, j)] = e.value;
            se[(i, j)] = e.error;
            error = error.max(e.error);
        }
    }
    Ok(FisherEstimate { metric, error, standard_errors: Some(se), evaluations: samples })
}

/// Looks up a built-in family; accepts both `wigner-dyson` and `wigner_dyson_spacing` spellings.
pub fn family_by_name<T: Real>(name: &str) -> Result<Arc<dyn DistributionFamily<T>>> {
    match name.replace('_', "-").as_str() {
        "gaussian" | "gaussian-1d" => Ok(Arc::new(GaussianFamily)),
        "exponential-spacing" | "exponential" | "poisson" => Ok(Arc::new(ExponentialSpacing)),
        "wigner-dyson" | "wigner-dyson-spacing" => Ok(Arc::new(WignerDysonSpacing)),
        _ => Err(Error::UnknownFamily(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> IntegrationScheme {
        IntegrationScheme::quadrature(1_000_000, 1e-11)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn log_density_examples() {
        let g = family_log_density(&GaussianFamily, &[0.0], &[0.0, 1.0]).unwrap();
        assert!((g + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!((g - (-0.918939)).abs() < 1e-6);
        let e = family_log_density(&ExponentialSpacing, &[2.0], &[2.0]).unwrap();
        assert!((e - (0.5f64.ln() - 1.0)).abs() < 1e-15);
        let w = family_log_density(&WignerDysonSpacing, &[1.0], &[1.0]).unwrap();
        let pi = std::f64::consts::PI;
        assert!((w - ((pi / 2.0).ln() - pi / 4.0)).abs() < 1e-15);
        assert!((w - (-0.333816)).abs() < 1e-6);
    }

    #[test]
    fn support_and_domain_errors() {
        assert!(matches!(family_log_density(&ExponentialSpacing, &[-1.0], &[1.0]), Err(Error::Support { .. })));
        assert!(matches!(family_log_density(&WignerDysonSpacing, &[0.0], &[1.0]), Err(Error::Support { .. })));
        assert!(matches!(family_log_density(&GaussianFamily, &[0.0], &[0.0, -1.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn fisher_examples() {
        let g = fisher_metric(&GaussianFamily, &[0.0, 1.0], &quad()).unwrap();
        assert!(close(g.metric[(0, 0)], 1.0, 1e-9) && close(g.metric[(1, 1)], 2.0, 1e-9));
        assert!(g.metric[(0, 1)].abs() < 1e-9);
        let e = fisher_metric(&ExponentialSpacing, &[2.0], &quad()).unwrap();
        assert!(close(e.metric[(0, 0)], 0.25, 1e-9));
        let w = fisher_metric(&WignerDysonSpacing, &[1.0], &quad()).unwrap();
        assert!(close(w.metric[(0, 0)], 4.0, 1e-9));
    }

    #[test]
    fn product_examples() {
        let gg = compose_product::<f64>(vec![Arc::new(GaussianFamily), Arc::new(GaussianFamily)]).unwrap();
        let m = fisher_metric(&gg, &[0.0, 0.0, 1.0, 1.0], &quad()).unwrap().metric;
        let want = [1.0, 1.0, 2.0, 2.0];
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { want[i] } else { 0.0 };
                assert!((m[(i, j)] - w).abs() < 1e-9, "{i},{j}: {}", m[(i, j)]);
            }
        }
        let ee = compose_product::<f64>(vec![Arc::new(ExponentialSpacing), Arc::new(ExponentialSpacing)]).unwrap();
        let m = fisher_metric(&ee, &[1.0, 1.0], &quad()).unwrap().metric;
        assert!((m[(0, 0)] - 1.0).abs() < 1e-9 && (m[(1, 1)] - 1.0).abs() < 1e-9 && m[(0, 1)] == 0.0);
        let wg = compose_product::<f64>(vec![Arc::new(WignerDysonSpacing), Arc::new(GaussianFamily)]).unwrap();
        let m = fisher_metric(&wg, &[1.0, 0.0, 1.0], &quad()).unwrap().metric;
        assert!((m[(0, 0)] - 4.0).abs() < 1e-8 && (m[(1, 1)] - 1.0).abs() < 1e-9 && (m[(2, 2)] - 2.0).abs() < 1e-9);
        // off-blocks are structurally zero
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn product_of_nothing_rejected() {
        assert!(compose_product::<f64>(vec![]).is_err());
    }

    #[test]
    fn finite_difference_score_matches_closed_form() {
        let th = [0.3f64, 1.7];
        let x = [1.1];
        let a = GaussianFamily.score(&x, &th).unwrap();
        let b = fd_score(&GaussianFamily, &x, &th);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    struct Flat;
    impl DistributionFamily<f64> for Flat {
        fn name(&self) -> &str {
            "flat"
        }
        fn param_dim(&self) -> usize {
            1
        }
        fn param_domain(&self) -> DomainBox<f64> {
            DomainBox { bounds: vec![Interval::positive()] }
        }
        fn support(&self) -> Interval<f64> {
            Interval::positive()
        }
        fn log_density(&self, _x: &[f64], theta: &[f64]) -> f64 {
            -theta[0].ln()
        }
    }

    #[test]
    fn non_normalizable_rejected() {
        let err = fisher_metric(&Flat, &[1.0], &IntegrationScheme::quadrature(5000, 1e-8)).unwrap_err();
        assert!(matches!(err, Error::NonNormalizable(_)), "{err:?}");
        let err = fisher_metric(&Flat, &[1.0], &IntegrationScheme::monte_carlo(100, 1)).unwrap_err();
        assert!(matches!(err, Error::InvalidScheme(_)));
    }

    #[test]
    fn works_in_f32() {
        let s = IntegrationScheme::quadrature(100_000, 1e-5);
        let m = fisher_metric::<f32, _>(&GaussianFamily, &[0.0, 2.0], &s).unwrap().metric;
        assert!((m[(0, 0)] - 0.25).abs() < 1e-4 && (m[(1, 1)] - 0.5).abs() < 1e-4);
    }
}
