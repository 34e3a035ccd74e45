//! Connection and curvature of a [`ManifoldSpec`] at a point.
//!
//! Conventions:
//!
//! ```text
//! Γ^ρ_{μν}   = ½ g^{ρλ} (∂_μ g_{λν} + ∂_ν g_{λμ} − ∂_λ g_{μν})
//! R^μ_{νρσ}  = ∂_ρ Γ^μ_{νσ} − ∂_σ Γ^μ_{νρ} + Γ^μ_{ρλ} Γ^λ_{νσ} − Γ^μ_{σλ} Γ^λ_{νρ}
//! R_{νσ}     = R^ρ_{νρσ},   R = g^{νσ} R_{νσ}
//! ```
//!
//! With these signs the hyperbolic plane has negative scalar curvature.
//! Metric derivatives are analytic where the field provides them and central
//! differences otherwise; Christoffel derivatives always use a five-point
//! stencil.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::ManifoldSpec;
use crate::scalar::Real;

/// Relative finite-difference steps. Each coordinate's step is
/// `factor · min(max(1, |Θ_ρ|), distance to its finite bound)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOptions<T> {
    pub metric_step: T,
    pub christoffel_step: T,
}

impl<T: Real> Default for CurvatureOptions<T> {
    fn default() -> Self {
        Self { metric_step: T::lit(1e-5), christoffel_step: T::lit(1e-4) }
    }
}

/// `Γ^ρ_{μν}` stored as `data[(ρ·n + μ)·n + ν]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Christoffel<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Christoffel<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, rho: usize, mu: usize, nu: usize) -> T {
        self.data[(rho * self.n + mu) * self.n + nu]
    }

    /// `Γ^ρ_{μν} v^μ w^ν` for every `ρ`.
    pub fn contract(&self, v: &[T], w: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|rho| {
                let mut acc = T::zero();
                for mu in 0..n {
                    if v[mu] == T::zero() {
                        continue;
                    }
                    let base = (rho * n + mu) * n;
                    let mut row = T::zero();
                    for nu in 0..n {
                        row += self.data[base + nu] * w[nu];
                    }
                    acc += v[mu] * row;
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Dense rank-4 array indexed `[a][b][c][d]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor4<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor4<T> {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        self.data[self.idx(a, b, c, d)]
    }

    #[inline]
    fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: T) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Curvature objects at one point.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureBundle<T> {
    pub point: Vec<T>,
    pub metric: Matrix<T>,
    pub metric_inverse: Matrix<T>,
    /// Mixed Riemann tensor `R^μ_{νρσ}`.
    pub riemann: Tensor4<T>,
    pub ricci: Matrix<T>,
    pub scalar: T,
}

/// Two tangent vectors spanning a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPlane<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
}

/// Smallest admissible Gram determinant for a tangent plane.
pub const MIN_GRAM: f64 = 1e-12;

impl<T: Real> CurvatureBundle<T> {
    /// `R_{μνρσ} = g_{μλ} R^λ_{νρσ}`.
    pub fn lowered(&self) -> Tensor4<T> {
        let n = self.metric.dim();
        let mut out = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = (0..n).map(|l| self.metric[(a, l)] * self.riemann.get(l, b, c, d)).sum();
                        out.set(a, b, c, d, v);
                    }
                }
            }
        }
        out
    }

    /// `K(u, v) = R_{μνρσ} u^μ v^ν u^ρ v^σ / (|u|²|v|² − ⟨u,v⟩²)`.
    pub fn sectional(&self, plane: &TangentPlane<T>) -> Result<T> {
        let n = self.metric.dim();
        let (u, v) = (&plane.u, &plane.v);
        if u.len() != n || v.len() != n {
            return Err(Error::Dimension { expected: n, got: u.len().min(v.len()) });
        }
        let uu = self.metric.bilinear(u, u);
        let vv = self.metric.bilinear(v, v);
        let uv = self.metric.bilinear(u, v);
        let gram = uu * vv - uv * uv;
        if !(gram > T::lit(MIN_GRAM)) {
            return Err(Error::DegeneratePlane(gram.as_f64()));
        }
        // R(u,v)v = R^μ_{νρσ} v^ν u^ρ v^σ
        let mut rv = vec![T::zero(); n];
        for (mu, out) in rv.iter_mut().enumerate() {
            let mut acc = T::zero();
            for nu in 0..n {
                for rho in 0..n {
                    for sigma in 0..n {
                        acc += self.riemann.get(mu, nu, rho, sigma) * v[nu] * u[rho] * v[sigma];
                    }
                }
            }
            *out = acc;
        }
        Ok(self.metric.bilinear(&rv, u) / gram)
    }

    /// Coordinate basis orthonormalized by Gram–Schmidt in `g`.
    pub fn orthonormal_frame(&self) -> Vec<Vec<T>> {
        let n = self.metric.dim();
        let mut frame: Vec<Vec<T>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![T::zero(); n];
            e[i] = T::one();
            for f in &frame {
                let p = self.metric.bilinear(&e, f);
                for (x, &y) in e.iter_mut().zip(f) {
                    *x -= p * y;
                }
            }
            let norm = self.metric.bilinear(&e, &e).sqrt();
            e.iter_mut().for_each(|x| *x /= norm);
            frame.push(e);
        }
        frame
    }

    /// Sectional curvature of every plane `(e_i, e_j)`, `i < j`, of the
    /// orthonormal frame. Twice their sum is the scalar curvature.
    pub fn sectional_by_plane(&self) -> Result<Vec<((usize, usize), T)>> {
        let frame = self.orthonormal_frame();
        let n = frame.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let k = self.sectional(&TangentPlane { u: frame[i].clone(), v: frame[j].clone() })?;
                out.push(((i, j), k));
            }
        }
        Ok(out)
    }

    /// `W_{μνρσ} = R_{μνρσ} − R/(n(n−1)) (g_{μρ}g_{νσ} − g_{μσ}g_{νρ})`.
    pub fn weyl_anisotropy(&self) -> Result<Tensor4<T>> {
        let n = self.metric.dim();
        if n < 2 {
            return Err(Error::InvalidArgument("anisotropy tensor needs dimension >= 2".into()));
        }
        let g = &self.metric;
        let k = self.scalar / T::from_usize_lossy(n * (n - 1));
        let mut w = self.lowered();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let iso = k * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)]);
                        let v = w.get(a, b, c, d) - iso;
                        w.set(a, b, c, d, v);
                    }
                }
            }
        }
        Ok(w)
    }
}

fn steps<T: Real>(m: &ManifoldSpec<T>, theta: &[T], factor: T, reach: T) -> Result<Vec<T>> {
    theta
        .iter()
        .zip(&m.domain.bounds)
        .enumerate()
        .map(|(i, (&x, b))| {
            let dist = b.distance_to_boundary(x);
            let scale = T::one().max(x.abs()).min(dist);
            let h = factor * scale;
            if !(reach * h < dist) {
                return Err(Error::BoundaryProximity { index: i, distance: dist.as_f64(), needed: (reach * h).as_f64() });
            }
            Ok(h)
        })
        .collect()
}

/// `∂_ρ g_{μν}` for every `ρ`.
pub fn metric_derivatives<T: Real>(m: &ManifoldSpec<T>, theta: &[T], opts: &CurvatureOptions<T>) -> Result<Vec<Matrix<T>>> {
    m.domain.check(theta)?;
    if let Some(d) = m.field().metric_derivative(theta) {
        return Ok(d);
    }
    let h = steps(m, theta, opts.metric_step, T::lit(2.0))?;
    let mut th = theta.to_vec();
    let n = theta.len();
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        th[r] = theta[r] + h[r];
        let up = m.field().metric(&th);
        th[r] = theta[r] - h[r];
        let down = m.field().metric(&th);
        th[r] = theta[r];
        let mut d = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = (up[(i, j)] - down[(i, j)]) / (h[r] + h[r]);
            }
        }
        out.push(d);
    }
    Ok(out)
}

fn christoffel_from<T: Real>(g_inv: &Matrix<T>, dg: &[Matrix<T>]) -> Christoffel<T> {
    let n = g_inv.dim();
    // first-kind symbols Γ_{λμν} = ½(∂_μ g_{λν} + ∂_ν g_{λμ} − ∂_λ g_{μν})
    let half = T::lit(0.5);
    let mut first = vec![T::zero(); n * n * n];
    for l in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let v = half * (dg[mu][(l, nu)] + dg[nu][(l, mu)] - dg[l][(mu, nu)]);
                first[(l * n + mu) * n + nu] = v;
                first[(l * n + nu) * n + mu] = v;
            }
        }
    }
    let mut data = vec![T::zero(); n * n * n];
    for rho in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let v: T = (0..n).map(|l| g_inv[(rho, l)] * first[(l * n + mu) * n + nu]).sum();
                data[(rho * n + mu) * n + nu] = v;
                data[(rho * n + nu) * n + mu] = v;
            }
        }
    }
    Christoffel { n, data }
}

// Γ together with the metric and its inverse at the same point.
fn connection<T: Real>(m: &ManifoldSpec<T>, theta: &[T], opts: &CurvatureOptions<T>) -> Result<(Matrix<T>, Matrix<T>, Christoffel<T>)> {
    let g = m.metric_at(theta)?;
    let g_inv = g.cholesky()?.inverse();
    let dg = metric_derivatives(m, theta, opts)?;
    let gamma = christoffel_from(&g_inv, &dg);
    Ok((g, g_inv, gamma))
}

/// Levi-Civita connection coefficients `Γ^ρ_{μν}` at `theta`.
pub fn christoffel<T: Real>(m: &ManifoldSpec<T>, theta: &[T]) -> Result<Christoffel<T>> {
    christoffel_with(m, theta, &CurvatureOptions::default())
}

pub fn christoffel_with<T: Real>(m: &ManifoldSpec<T>, theta: &[T], opts: &CurvatureOptions<T>) -> Result<Christoffel<T>> {
    connection(m, theta, opts).map(|(_, _, c)| c)
}

/// Riemann, Ricci and scalar curvature at `theta`.
pub fn curvature_tensors<T: Real>(m: &ManifoldSpec<T>, theta: &[T]) -> Result<CurvatureBundle<T>> {
    curvature_tensors_with(m, theta, &CurvatureOptions::default())
}

pub fn curvature_tensors_with<T: Real>(
    m: &ManifoldSpec<T>,
    theta: &[T],
    opts: &CurvatureOptions<T>,
) -> Result<CurvatureBundle<T>> {
    let (g, g_inv, gamma) = connection(m, theta, opts)?;
    let n = theta.len();
    let h = steps(m, theta, opts.christoffel_step, T::lit(2.0))?;

    // dgamma[r] = ∂_r Γ, five-point stencil
    let mut th = theta.to_vec();
    let mut dgamma: Vec<Vec<T>> = Vec::with_capacity(n);
    let (c8, c12) = (T::lit(8.0), T::lit(12.0));
    for r in 0..n {
        let mut at = |offset: T| -> Result<Christoffel<T>> {
            th[r] = theta[r] + offset;
            let out = christoffel_with(m, &th, opts);
            th[r] = theta[r];
            out
        };
        let p2 = at(h[r] + h[r])?;
        let p1 = at(h[r])?;
        let m1 = at(-h[r])?;
        let m2 = at(-(h[r] + h[r]))?;
        let d = (0..n * n * n)
            .map(|i| (m2.data[i] - p2.data[i] + c8 * (p1.data[i] - m1.data[i])) / (c12 * h[r]))
            .collect();
        dgamma.push(d);
    }
    let dg = |r: usize, a: usize, b: usize, c: usize| dgamma[r][(a * n + b) * n + c];

    let mut riemann = Tensor4::zeros(n);
    for mu in 0..n {
        for nu in 0..n {
            for rho in 0..n {
                for sigma in (rho + 1)..n {
                    let mut v = dg(rho, mu, nu, sigma) - dg(sigma, mu, nu, rho);
                    for l in 0..n {
                        v += gamma.get(mu, rho, l) * gamma.get(l, nu, sigma) - gamma.get(mu, sigma, l) * gamma.get(l, nu, rho);
                    }
                    riemann.set(mu, nu, rho, sigma, v);
                    riemann.set(mu, nu, sigma, rho, -v);
                }
            }
        }
    }
    let mut ricci = Matrix::zeros(n);
    for nu in 0..n {
        for sigma in 0..n {
            ricci[(nu, sigma)] = (0..n).map(|rho| riemann.get(rho, nu, rho, sigma)).sum();
        }
    }
    let mut scalar = T::zero();
    for nu in 0..n {
        for sigma in 0..n {
            scalar += g_inv[(nu, sigma)] * ricci[(nu, sigma)];
        }
    }
    Ok(CurvatureBundle { point: theta.to_vec(), metric: g, metric_inverse: g_inv, riemann, ricci, scalar })
}

/// Sectional curvature of the plane spanned by `plane.u`, `plane.v`.
pub fn sectional_curvature<T: Real>(m: &ManifoldSpec<T>, theta: &[T], plane: &TangentPlane<T>) -> Result<T> {
    curvature_tensors(m, theta)?.sectional(plane)
}

/// Deviation of the lowered Riemann tensor from constant curvature.
pub fn weyl_anisotropy<T: Real>(m: &ManifoldSpec<T>, theta: &[T]) -> Result<Tensor4<T>> {
    curvature_tensors(m, theta)?.weyl_anisotropy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_manifold, parse_params, Params};

    fn gaussian(l: usize) -> ManifoldSpec<f64> {
        build_manifold("gaussian", &parse_params(&format!("l={l}")).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_christoffel_by_hand() {
        // index 0 = μ, 1 = σ
        let g = christoffel(&gaussian(1), &[0.0, 1.0]).unwrap();
        assert!((g.get(0, 0, 1) + 1.0).abs() < 1e-15);
        assert!((g.get(0, 1, 0) + 1.0).abs() < 1e-15);
        assert!((g.get(1, 0, 0) - 0.5).abs() < 1e-15);
        assert!((g.get(1, 1, 1) + 1.0).abs() < 1e-15);
        assert_eq!(g.get(0, 0, 0), 0.0);
        assert_eq!(g.get(0, 1, 1), 0.0);
        assert_eq!(g.get(1, 0, 1), 0.0);
    }

    #[test]
    fn integrable_christoffel_by_hand() {
        let m = build_manifold::<f64>("integrable", &Params::new()).unwrap();
        let g = christoffel(&m, &[1.0, 1.0]).unwrap();
        assert!((g.get(0, 0, 0) + 1.0).abs() < 1e-15);
        assert!((g.get(1, 1, 1) + 1.0).abs() < 1e-15);
        for (r, a, b) in [(0, 0, 1), (0, 1, 1), (1, 0, 0), (1, 0, 1)] {
            assert_eq!(g.get(r, a, b), 0.0);
        }
    }

    #[test]
    fn flat_metric_has_no_connection() {
        let m = ManifoldSpec::constant(Matrix::from_row_major(2, vec![2.0, 0.5, 0.5, 1.0])).unwrap();
        let g = christoffel(&m, &[3.0, -1.0]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert_eq!(curvature_tensors(&m, &[0.0, 0.0]).unwrap().riemann.max_abs(), 0.0);
    }

    #[test]
    fn scalar_curvature_examples() {
        let r = curvature_tensors(&gaussian(1), &[0.3, 0.7]).unwrap().scalar;
        assert!((r + 1.0).abs() < 1e-8, "{r}");
        let int = build_manifold::<f64>("integrable", &Params::new()).unwrap();
        assert!(curvature_tensors(&int, &[2.0, 0.5]).unwrap().scalar.abs() < 1e-10);
        let ch = build_manifold::<f64>("chaotic", &Params::new()).unwrap();
        let r = curvature_tensors(&ch, &[1.5, -2.0, 0.4]).unwrap().scalar;
        assert!((r + 1.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn sectional_examples() {
        let b = curvature_tensors(&gaussian(1), &[0.0, 1.0]).unwrap();
        let k = b.sectional(&TangentPlane { u: vec![1.0, 0.0], v: vec![0.0, 1.0] }).unwrap();
        assert!((k + 0.5).abs() < 1e-8);
        // the same plane in another basis
        let k2 = b.sectional(&TangentPlane { u: vec![1.0, 2.0], v: vec![-3.0, 0.5] }).unwrap();
        assert!((k2 - k).abs() < 1e-8);
        let degenerate = b.sectional(&TangentPlane { u: vec![1.0, 1.0], v: vec![2.0, 2.0] });
        assert!(matches!(degenerate, Err(Error::DegeneratePlane(_))));
    }

    #[test]
    fn gaussian_l2_sectional_sum() {
        let b = curvature_tensors(&gaussian(2), &[0.1, -0.4, 1.3, 0.8]).unwrap();
        let planes = b.sectional_by_plane().unwrap();
        assert_eq!(planes.len(), 6);
        let unordered: f64 = planes.iter().map(|(_, k)| k).sum();
        // two hyperbolic factors of curvature −½, mixed planes flat
        assert!((unordered + 1.0).abs() < 1e-6, "{unordered}");
        assert!((2.0 * unordered - b.scalar).abs() < 1e-6);
        assert!((b.scalar + 2.0).abs() < 1e-6);
    }

    #[test]
    fn anisotropy_examples() {
        let w = weyl_anisotropy(&gaussian(1), &[0.0, 1.0]).unwrap();
        assert!(w.max_abs() < 1e-6);
        let int = build_manifold::<f64>("integrable", &Params::new()).unwrap();
        assert!(weyl_anisotropy(&int, &[1.0, 1.0]).unwrap().max_abs() < 1e-6);
        let w = weyl_anisotropy(&gaussian(2), &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(w.max_abs() > 0.1);
        // R_{μ₁σ₁μ₁σ₁} = −1, isotropic part −(2/12)·2 → −2/3
        assert!((w.max_abs() - 2.0 / 3.0).abs() < 1e-6, "{}", w.max_abs());
    }

    #[test]
    fn small_scale_coordinates_use_relative_steps() {
        let r = curvature_tensors(&gaussian(1), &[0.0, 1e-7]).unwrap().scalar;
        assert!((r + 1.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn boundary_proximity_for_finite_difference_metrics() {
        use crate::manifold::{DomainBox, FnMetric, Interval};
        use std::sync::Arc;
        // domain bounded on both sides so the relative step is capped
        let m = ManifoldSpec::custom(
            "box",
            Arc::new(FnMetric::new(1, |_: &[f64]| Matrix::identity(1))),
            DomainBox::new(vec![Interval { lower: 0.0, upper: 1.0 }]).unwrap(),
        )
        .unwrap();
        let opts = CurvatureOptions { metric_step: 0.6, christoffel_step: 1e-4 };
        assert!(matches!(christoffel_with(&m, &[0.5], &opts), Err(Error::BoundaryProximity { .. })));
    }
}
