//! Geodesic deviation: `D²J^μ/dτ² + R^μ_{νρσ} Θ̇^ν J^ρ Θ̇^σ = 0`.
//!
//! The field is integrated together with its geodesic. With `P = DJ/dτ`
//! the first-order system is
//!
//! ```text
//! dJ^μ/dτ = P^μ − Γ^μ_{αβ} Θ̇^α J^β
//! dP^μ/dτ = −R^μ_{νρσ} Θ̇^ν J^ρ Θ̇^σ − Γ^μ_{αβ} Θ̇^α P^β
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::geodesic::{GeodesicPath, BOUNDARY_EXIT};
use crate::geometry::{christoffel, curvature_tensors};
use crate::manifold::ManifoldSpec;
use crate::ode::{solve, OdeSystem, Termination};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiSample<T> {
    pub tau: T,
    pub j: Vec<T>,
    pub dj: Vec<T>,
    /// `√(g_{μν} J^μ J^ν)`.
    pub intensity: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobiField<T> {
    pub samples: Vec<JacobiSample<T>>,
    /// Manifold name and initial point of the reference geodesic.
    pub path_id: String,
    pub status: Termination,
}

impl<T: Real> JacobiField<T> {
    pub fn taus(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn intensities(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.intensity).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit<T> {
    pub exponent: T,
    pub intercept: T,
    pub window: (T, T),
    pub r2: T,
    pub points: usize,
}

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_POINTS: usize = 10;

struct DeviationFlow<'a, T: Real> {
    m: &'a ManifoldSpec<T>,
}

impl<T: Real> OdeSystem<T> for DeviationFlow<'_, T> {
    fn dim(&self) -> usize {
        4 * self.m.dim()
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.m.dim();
        let theta = &y[..n];
        let v = &y[n..2 * n];
        let j = &y[2 * n..3 * n];
        let p = &y[3 * n..];
        let gamma = christoffel(self.m, theta)?;
        let curv = curvature_tensors(self.m, theta)?;
        let acc = gamma.contract(v, v);
        let gj = gamma.contract(v, j);
        let gp = gamma.contract(v, p);
        for mu in 0..n {
            dy[mu] = v[mu];
            dy[n + mu] = -acc[mu];
            dy[2 * n + mu] = p[mu] - gj[mu];
            let mut r = T::zero();
            for nu in 0..n {
                if v[nu] == T::zero() {
                    continue;
                }
                for rho in 0..n {
                    if j[rho] == T::zero() {
                        continue;
                    }
                    for sigma in 0..n {
                        r += curv.riemann.get(mu, nu, rho, sigma) * v[nu] * j[rho] * v[sigma];
                    }
                }
            }
            dy[3 * n + mu] = -r - gp[mu];
        }
        Ok(())
    }

    fn check(&self, _t: T, y: &[T]) -> Option<Termination> {
        let n = self.m.dim();
        if y.iter().any(|x| !x.is_finite()) {
            return Some(Termination::Overflow);
        }
        let near = self
            .m
            .domain
            .bounds
            .iter()
            .zip(&y[..n])
            .any(|(b, &x)| !(b.distance_to_boundary(x) > T::lit(BOUNDARY_EXIT)));
        near.then_some(Termination::BoundaryExit)
    }
}

fn path_id<T: Real>(p: &GeodesicPath<T>) -> String {
    let s = p.initial_state();
    let fmt = |v: &[T]| v.iter().map(|x| format!("{:e}", x.as_f64())).collect::<Vec<_>>().join(",");
    format!("{}@tau={:e};theta={};thetadot={}", p.metadata.manifold, s.tau.as_f64(), fmt(&s.theta), fmt(&s.theta_dot))
}

/// Solves the deviation equation along `p` from `(J₀, DJ₀)`, sampled at the
/// path's sample times and with the path's step control.
pub fn integrate_jlc<T: Real>(m: &ManifoldSpec<T>, p: &GeodesicPath<T>, j0: &[T], dj0: &[T]) -> Result<JacobiField<T>> {
    let n = m.dim();
    if p.dim() != n {
        return Err(Error::Dimension { expected: n, got: p.dim() });
    }
    if j0.len() != n || dj0.len() != n {
        return Err(Error::Dimension { expected: n, got: j0.len().max(dj0.len()) });
    }
    if !(p.tau_end() > p.tau_start()) {
        return Err(Error::InvalidArgument("reference geodesic has an empty span".into()));
    }
    let s0 = p.initial_state();
    let mut y0 = s0.theta.clone();
    y0.extend_from_slice(&s0.theta_dot);
    y0.extend_from_slice(j0);
    y0.extend_from_slice(dj0);
    let times: Vec<T> = p.samples.iter().map(|s| s.tau).collect();
    let sol = solve(&DeviationFlow { m }, s0.tau, &y0, p.tau_end(), &p.metadata.control, &times)?;
    let mut samples = Vec::with_capacity(sol.times.len());
    for (&tau, y) in sol.times.iter().zip(&sol.states) {
        let g = m.metric_at(&y[..n])?;
        let j = y[2 * n..3 * n].to_vec();
        let norm2 = g.bilinear(&j, &j).max(T::zero());
        samples.push(JacobiSample { tau, j, dj: y[3 * n..].to_vec(), intensity: norm2.sqrt() });
    }
    Ok(JacobiField { samples, path_id: path_id(p), status: sol.status })
}

/// Standard initial data: `J₀ = 0` and `DJ₀` of unit `g`-norm orthogonal to
/// `Θ̇(0)`, taken by Gram–Schmidt from `Σᵢ eᵢ/√g_ii` (or the first coordinate
/// axis that is not parallel to `Θ̇`). The diagonal scaling gives every
/// coordinate direction equal weight regardless of its units.
pub fn default_initial_conditions<T: Real>(m: &ManifoldSpec<T>, p: &GeodesicPath<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = m.dim();
    let s0 = p.initial_state();
    let g = m.metric_at(&s0.theta)?;
    let v = &s0.theta_dot;
    let vv = g.bilinear(v, v);
    let mut candidates = vec![g.diagonal().into_iter().map(|d| d.sqrt().recip()).collect::<Vec<T>>()];
    for i in 0..n {
        let mut e = vec![T::zero(); n];
        e[i] = g.diagonal()[i].sqrt().recip();
        candidates.push(e);
    }
    for c in candidates {
        let mut w = c.clone();
        if vv > T::zero() {
            let coef = g.bilinear(&c, v) / vv;
            for i in 0..n {
                w[i] -= coef * v[i];
            }
        }
        let ww = g.bilinear(&w, &w);
        let cc = g.bilinear(&c, &c);
        if ww > T::lit(1e-8) * cc {
            let s = ww.sqrt();
            return Ok((vec![T::zero(); n], w.into_iter().map(|x| x / s).collect()));
        }
    }
    Err(Error::InvalidArgument("no direction orthogonal to the velocity (dimension 1?)".into()))
}

/// Last 60% of the span `[a, b]`.
pub fn default_window<T: Real>(a: T, b: T) -> (T, T) {
    (a + T::lit(0.4) * (b - a), b)
}

/// Least-squares fit of `ln ‖J‖` against `τ` over the window.
pub fn divergence_exponent<T: Real>(f: &JacobiField<T>, window: (T, T)) -> Result<ExponentFit<T>> {
    fit_exponent(&f.taus(), &f.intensities(), window)
}

/// As [`divergence_exponent`], on raw `(τ, intensity)` series.
pub fn fit_exponent<T: Real>(taus: &[T], intensity: &[T], window: (T, T)) -> Result<ExponentFit<T>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidArgument("fit window must satisfy lo < hi".into()));
    }
    if taus.len() != intensity.len() {
        return Err(Error::Dimension { expected: taus.len(), got: intensity.len() });
    }
    let (first, last) = match (taus.first(), taus.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: 0 }),
    };
    let slack = T::lit(1e-9) * (T::one() + hi.abs());
    if lo < first - slack || hi > last + slack {
        let bad = if lo < first { lo } else { hi };
        return Err(Error::OutsideSpan { tau: bad.as_f64(), start: first.as_f64(), end: last.as_f64() });
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in taus.iter().zip(intensity) {
        if t >= lo - slack && t <= hi + slack {
            if !(v > T::zero()) {
                return Err(Error::ZeroIntensity(t.as_f64()));
            }
            x.push(t);
            y.push(v.ln());
        }
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_FIT_POINTS, got: x.len() });
    }
    let line = fit_line(&x, &y)?;
    Ok(ExponentFit { exponent: line.slope, intercept: line.intercept, window, r2: line.r2, points: x.len() })
}
