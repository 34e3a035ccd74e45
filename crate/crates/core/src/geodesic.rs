//! Geodesic flow `Θ̈^ρ + Γ^ρ_{μν} Θ̇^μ Θ̇^ν = 0` and the inverted-oscillator
//! flow `θ̈_k = ω_k² θ_k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::christoffel;
use crate::manifold::{IhoMetric, ManifoldSpec};
use crate::ode::{solve, DenseSegment, OdeSystem, Solution, StepControl, Termination};
use crate::scalar::Real;

/// Integration stops once a coordinate is this close to a finite bound.
pub const BOUNDARY_EXIT: f64 = 1e-9;

/// Overflow guard for the oscillator flow.
pub const IHO_OVERFLOW: f64 = 1e150;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState<T> {
    pub tau: T,
    pub theta: Vec<T>,
    pub theta_dot: Vec<T>,
}

impl<T: Real> GeodesicState<T> {
    pub fn new(tau: T, theta: Vec<T>, theta_dot: Vec<T>) -> Result<Self> {
        if theta.len() != theta_dot.len() {
            return Err(Error::Dimension { expected: theta.len(), got: theta_dot.len() });
        }
        if theta_dot.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("velocity must be finite".into()));
        }
        Ok(Self { tau, theta, theta_dot })
    }

    fn packed(&self) -> Vec<T> {
        let mut y = self.theta.clone();
        y.extend_from_slice(&self.theta_dot);
        y
    }

    fn unpack(tau: T, y: &[T]) -> Self {
        let n = y.len() / 2;
        Self { tau, theta: y[..n].to_vec(), theta_dot: y[n..2 * n].to_vec() }
    }
}

/// Integrator bookkeeping attached to a path.
#[derive(Debug, Clone, Serialize)]
pub struct PathMetadata<T> {
    pub manifold: String,
    pub control: StepControl<T>,
    pub status: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub evaluations: usize,
    /// Requested end of the integration.
    pub tau_max: T,
}

/// Sampled geodesic plus the continuous interpolant between samples.
#[derive(Debug, Clone)]
pub struct GeodesicPath<T> {
    pub samples: Vec<GeodesicState<T>>,
    pub metadata: PathMetadata<T>,
    /// `g_{μν} Θ̇^μ Θ̇^ν` at the start.
    pub initial_norm: T,
    initial: GeodesicState<T>,
    end: GeodesicState<T>,
    segments: Vec<DenseSegment<T>>,
    // running coordinate extremes at the end of each segment
    prefix_min: Vec<Vec<T>>,
    prefix_max: Vec<Vec<T>>,
}

impl<T: Real> GeodesicPath<T> {
    fn from_solution(
        sol: Solution<T>,
        s0: &GeodesicState<T>,
        initial_norm: T,
        manifold: String,
        control: StepControl<T>,
        tau_max: T,
    ) -> Self {
        let n = s0.theta.len();
        let mut samples: Vec<GeodesicState<T>> =
            sol.times.iter().zip(&sol.states).map(|(&t, y)| GeodesicState::unpack(t, y)).collect();
        if samples.first().is_none_or(|s| s.tau > s0.tau) {
            samples.insert(0, s0.clone());
        }
        let end = GeodesicState::unpack(sol.t_end, &sol.y_end);
        if samples.last().is_some_and(|s| s.tau < end.tau) {
            samples.push(end.clone());
        }
        let mut prefix_min = Vec::with_capacity(sol.segments.len());
        let mut prefix_max = Vec::with_capacity(sol.segments.len());
        let (mut lo, mut hi) = (s0.theta.clone(), s0.theta.clone());
        for seg in &sol.segments {
            segment_extremes(seg, n, seg.t0, seg.t1(), &mut lo, &mut hi);
            prefix_min.push(lo.clone());
            prefix_max.push(hi.clone());
        }
        Self {
            samples,
            metadata: PathMetadata {
                manifold,
                control,
                status: sol.status,
                accepted_steps: sol.accepted,
                rejected_steps: sol.rejected,
                evaluations: sol.evaluations,
                tau_max,
            },
            initial_norm,
            initial: s0.clone(),
            end,
            segments: sol.segments,
            prefix_min,
            prefix_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial.theta.len()
    }

    pub fn initial_state(&self) -> &GeodesicState<T> {
        &self.initial
    }

    pub fn final_state(&self) -> &GeodesicState<T> {
        &self.end
    }

    pub fn tau_start(&self) -> T {
        self.initial.tau
    }

    /// Last parameter value actually reached.
    pub fn tau_end(&self) -> T {
        self.end.tau
    }

    pub fn status(&self) -> Termination {
        self.metadata.status
    }

    fn check_span(&self, tau: T) -> Result<()> {
        if tau < self.tau_start() || tau > self.tau_end() || !tau.is_finite() {
            return Err(Error::OutsideSpan {
                tau: tau.as_f64(),
                start: self.tau_start().as_f64(),
                end: self.tau_end().as_f64(),
            });
        }
        Ok(())
    }

    // index of the segment containing tau (tau within span, segments nonempty)
    fn segment_index(&self, tau: T) -> usize {
        let k = self.segments.partition_point(|s| s.t1() < tau);
        k.min(self.segments.len() - 1)
    }

    /// Interpolated state at any `τ` in the integrated span.
    pub fn state_at(&self, tau: T) -> Result<GeodesicState<T>> {
        self.check_span(tau)?;
        if tau == self.tau_start() || self.segments.is_empty() {
            return Ok(GeodesicState { tau, ..self.initial.clone() });
        }
        if tau == self.tau_end() {
            return Ok(self.end.clone());
        }
        let seg = &self.segments[self.segment_index(tau)];
        let mut y = vec![T::zero(); 2 * self.dim()];
        seg.eval(tau, &mut y);
        Ok(GeodesicState::unpack(tau, &y))
    }

    /// Per-coordinate `[min, max]` of `Θ(s)` over `s ∈ [τ_start, τ]`.
    pub fn coordinate_range(&self, tau: T) -> Result<(Vec<T>, Vec<T>)> {
        self.check_span(tau)?;
        let n = self.dim();
        if self.segments.is_empty() || tau == self.tau_start() {
            return Ok((self.initial.theta.clone(), self.initial.theta.clone()));
        }
        let k = self.segment_index(tau);
        let (mut lo, mut hi) = if k == 0 {
            (self.initial.theta.clone(), self.initial.theta.clone())
        } else {
            (self.prefix_min[k - 1].clone(), self.prefix_max[k - 1].clone())
        };
        let seg = &self.segments[k];
        if tau >= seg.t1() {
            return Ok((self.prefix_min[k].clone(), self.prefix_max[k].clone()));
        }
        segment_extremes(seg, n, seg.t0, tau, &mut lo, &mut hi);
        Ok((lo, hi))
    }
}

// Widens lo/hi by the extremes of the position components over [a, b]
// within one segment. Interior extrema are located from sign changes of
// the interpolated velocity.
fn segment_extremes<T: Real>(seg: &DenseSegment<T>, n: usize, a: T, b: T, lo: &mut [T], hi: &mut [T]) {
    const PIECES: usize = 8;
    let mut y = vec![T::zero(); 2 * n];
    let mut prev_t = a;
    let mut prev = vec![T::zero(); 2 * n];
    seg.eval(a, &mut prev);
    let widen = |x: &[T], lo: &mut [T], hi: &mut [T]| {
        for i in 0..n {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    };
    widen(&prev, lo, hi);
    for p in 1..=PIECES {
        let t = a + (b - a) * T::from_usize_lossy(p) / T::from_usize_lossy(PIECES);
        seg.eval(t, &mut y);
        widen(&y, lo, hi);
        for i in 0..n {
            let (v0, v1) = (prev[n + i], y[n + i]);
            if v0 * v1 < T::zero() {
                let (mut l, mut r) = (prev_t, t);
                let mut tmp = vec![T::zero(); 2 * n];
                for _ in 0..60 {
                    let m = (l + r) * T::lit(0.5);
                    if !(l < m && m < r) {
                        break;
                    }
                    seg.eval(m, &mut tmp);
                    if tmp[n + i] * v0 > T::zero() {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                seg.eval((l + r) * T::lit(0.5), &mut tmp);
                lo[i] = lo[i].min(tmp[i]);
                hi[i] = hi[i].max(tmp[i]);
            }
        }
        prev.copy_from_slice(&y);
        prev_t = t;
    }
}

struct GeodesicFlow<'a, T: Real> {
    m: &'a ManifoldSpec<T>,
}

impl<T: Real> OdeSystem<T> for GeodesicFlow<'_, T> {
    fn dim(&self) -> usize {
        2 * self.m.dim()
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.m.dim();
        let (theta, v) = y.split_at(n);
        let gamma = christoffel(self.m, theta)?;
        let acc = gamma.contract(v, v);
        dy[..n].copy_from_slice(v);
        for i in 0..n {
            dy[n + i] = -acc[i];
        }
        Ok(())
    }

    fn check(&self, _t: T, y: &[T]) -> Option<Termination> {
        boundary_status(self.m, &y[..self.m.dim()])
    }
}

fn boundary_status<T: Real>(m: &ManifoldSpec<T>, theta: &[T]) -> Option<Termination> {
    if theta.iter().any(|x| !x.is_finite()) {
        return Some(Termination::Overflow);
    }
    let near = m
        .domain
        .bounds
        .iter()
        .zip(theta)
        .any(|(b, &x)| !(b.distance_to_boundary(x) > T::lit(BOUNDARY_EXIT)));
    near.then_some(Termination::BoundaryExit)
}

/// Evenly spaced grid with `count` points on `[a, b]`.
pub fn uniform_grid<T: Real>(a: T, b: T, count: usize) -> Vec<T> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let last = T::from_usize_lossy(count - 1);
            (0..count)
                .map(|i| if i + 1 == count { b } else { a + (b - a) * T::from_usize_lossy(i) / last })
                .collect()
        }
    }
}

/// Integrates the geodesic through `s0` up to `τ_max`, sampling at
/// `sample_times` (strictly increasing, inside `[s0.τ, τ_max]`).
pub fn integrate_geodesic<T: Real>(
    m: &ManifoldSpec<T>,
    s0: &GeodesicState<T>,
    tau_max: T,
    control: &StepControl<T>,
    sample_times: &[T],
) -> Result<GeodesicPath<T>> {
    if s0.theta.len() != m.dim() || s0.theta_dot.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: s0.theta.len().max(s0.theta_dot.len()) });
    }
    let g = m.metric_at(&s0.theta)?;
    if boundary_status(m, &s0.theta).is_some() {
        return Err(Error::InvalidArgument("initial point lies within the boundary-exit margin".into()));
    }
    let norm = g.bilinear(&s0.theta_dot, &s0.theta_dot);
    let sol = solve(&GeodesicFlow { m }, s0.tau, &s0.packed(), tau_max, control, sample_times)?;
    Ok(GeodesicPath::from_solution(sol, s0, norm, m.name.clone(), *control, tau_max))
}

/// `g(Θ̇, Θ̇)(τᵢ) − g(Θ̇, Θ̇)(τ₀)` at every sample.
pub fn norm_drift<T: Real>(m: &ManifoldSpec<T>, p: &GeodesicPath<T>) -> Result<Vec<T>> {
    p.samples
        .iter()
        .map(|s| Ok(m.metric_at(&s.theta)?.bilinear(&s.theta_dot, &s.theta_dot) - p.initial_norm))
        .collect()
}

/// `g(ξ, Θ̇)(τᵢ)` at every sample; constant when `ξ` is a Killing field.
pub fn killing_conservation<T: Real, F>(m: &ManifoldSpec<T>, xi: F, p: &GeodesicPath<T>) -> Result<Vec<T>>
where
    F: Fn(&[T]) -> Vec<T>,
{
    p.samples
        .iter()
        .map(|s| {
            let v = xi(&s.theta);
            if v.len() != m.dim() {
                return Err(Error::Dimension { expected: m.dim(), got: v.len() });
            }
            Ok(m.metric_at(&s.theta)?.bilinear(&v, &s.theta_dot))
        })
        .collect()
}

struct OscillatorFlow<'a, T> {
    omega: &'a [T],
}

impl<T: Real> OdeSystem<T> for OscillatorFlow<'_, T> {
    fn dim(&self) -> usize {
        2 * self.omega.len()
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.omega.len();
        for k in 0..n {
            dy[k] = y[n + k];
            dy[n + k] = self.omega[k] * self.omega[k] * y[k];
        }
        Ok(())
    }

    fn check(&self, _t: T, y: &[T]) -> Option<Termination> {
        let n = self.omega.len();
        y[..n]
            .iter()
            .any(|x| !(x.abs() <= T::lit(IHO_OVERFLOW)))
            .then_some(Termination::Overflow)
    }
}

/// Independent inverted oscillators `θ̈_k = ω_k² θ_k` from `init[k] = (θ_k, θ̇_k)`
/// at `τ = 0`. The path lives on the conformally flat `iho` manifold with
/// the same frequencies.
pub fn iho_trajectories<T: Real>(
    omega: &[T],
    init: &[(T, T)],
    tau_max: T,
    control: &StepControl<T>,
    sample_times: &[T],
) -> Result<GeodesicPath<T>> {
    if omega.is_empty() {
        return Err(Error::InvalidParameter { name: "omega".into(), reason: "at least one frequency required".into() });
    }
    if let Some(w) = omega.iter().find(|w| !(**w > T::zero()) || !w.is_finite()) {
        return Err(Error::InvalidParameter { name: "omega".into(), reason: format!("frequencies must be positive, got {w}") });
    }
    if init.len() != omega.len() {
        return Err(Error::Dimension { expected: omega.len(), got: init.len() });
    }
    let theta: Vec<T> = init.iter().map(|p| p.0).collect();
    let theta_dot: Vec<T> = init.iter().map(|p| p.1).collect();
    if theta.iter().chain(&theta_dot).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("oscillator initial data must be finite".into()));
    }
    let s0 = GeodesicState::new(T::zero(), theta, theta_dot)?;
    let factor = IhoMetric { omega: omega.to_vec() }.conformal_factor(&s0.theta);
    let norm = factor * s0.theta_dot.iter().map(|&v| v * v).sum::<T>();
    let sol = solve(&OscillatorFlow { omega }, T::zero(), &s0.packed(), tau_max, control, sample_times)?;
    Ok(GeodesicPath::from_solution(sol, &s0, norm, "iho".into(), *control, tau_max))
}
