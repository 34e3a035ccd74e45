//! Information-geometrodynamical entropy along a trajectory:
//!
//! ```text
//! w(τ′) = ∫_{region(τ′)} √g dΘ
//! V(τ)  = 1/(τ − τ₀) ∫_{τ₀}^{τ} w(τ′) dτ′
//! S(τ)  = ln V(τ)
//! ```
//!
//! `region(τ′)` is the coordinate-aligned bounding box of the trajectory
//! over `[τ₀, τ′]`.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::geodesic::{iho_trajectories, GeodesicPath};
use crate::manifold::ManifoldSpec;
use crate::ode::StepControl;
use crate::quadrature::{
    integrate_adaptive, integrate_box, monte_carlo_box, stream_rng, AxisMap, Estimate, IntegrationScheme, Proposal,
    SchemeKind,
};
use crate::scalar::Real;

/// Winning fit must reach this `r²`.
pub const R2_THRESHOLD: f64 = 0.98;
/// ... and beat the other model by at least this much.
pub const R2_MARGIN: f64 = 0.01;
/// Minimum points inside a classification window.
pub const MIN_CLASSIFY_POINTS: usize = 10;

const OUTER_TOLERANCE: f64 = 1e-8;
const OUTER_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExploredRegion<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> ExploredRegion<T> {
    /// Bounding box of `p` over `[τ₀, τ′]`.
    pub fn from_path(p: &GeodesicPath<T>, tau_prime: T) -> Result<Self> {
        let (lower, upper) = p.coordinate_range(tau_prime)?;
        Ok(Self { lower, upper })
    }

    /// First coordinate with zero extent, if any.
    pub fn degenerate_axis(&self) -> Option<usize> {
        self.lower.iter().zip(&self.upper).position(|(a, b)| !(b > a))
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.lower.iter().zip(&other.lower).all(|(a, b)| a <= b) && other.upper.iter().zip(&self.upper).all(|(a, b)| a <= b)
    }
}

/// `∫ √g dΘ` over the region explored by `p` up to `τ′`.
///
/// Uses nested adaptive quadrature (log-mapped on scale-type axes) when
/// `n ≤ 3` and the scheme asks for quadrature; Monte Carlo otherwise, with
/// a `1/x²` proposal on scale-type axes. `scheme.budget` is the evaluation
/// budget or the sample count respectively.
pub fn statistical_weight<T: Real>(
    m: &ManifoldSpec<T>,
    p: &GeodesicPath<T>,
    tau_prime: T,
    scheme: &IntegrationScheme,
) -> Result<Estimate<T>> {
    scheme.validate()?;
    if p.dim() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: p.dim() });
    }
    let region = ExploredRegion::from_path(p, tau_prime)?;
    region_weight(m, &region, scheme)
}

/// `∫ √g dΘ` over an explicit box.
pub fn region_weight<T: Real>(m: &ManifoldSpec<T>, region: &ExploredRegion<T>, scheme: &IntegrationScheme) -> Result<Estimate<T>> {
    if let Some(k) = region.degenerate_axis() {
        return Err(Error::DegenerateSweep(k));
    }
    m.domain.check(&region.lower)?;
    m.domain.check(&region.upper)?;
    let scale_bound = |k: usize| {
        let b = m.domain.bounds[k];
        b.is_scale_type().then_some(b.lower)
    };
    let f = |x: &[T]| m.volume_element_unchecked(x);
    let n = m.dim();
    if scheme.kind == SchemeKind::AdaptiveQuadrature && n <= 3 {
        let axes: Vec<AxisMap<T>> =
            (0..n).map(|k| AxisMap::for_interval(region.lower[k], region.upper[k], scale_bound(k))).collect();
        integrate_box(&f, &axes, T::lit(scheme.tolerance), scheme.budget)
    } else {
        let axes: Vec<Proposal<T>> =
            (0..n).map(|k| Proposal::for_interval(region.lower[k], region.upper[k], scale_bound(k))).collect();
        monte_carlo_box(&f, &axes, scheme.budget, scheme.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IgeSeries<T> {
    pub tau: Vec<T>,
    /// `w(τⱼ)`.
    pub weight: Vec<T>,
    /// `V(τⱼ)`.
    pub volume: Vec<T>,
    /// `S(τⱼ)`.
    pub entropy: Vec<T>,
    /// Error estimate of `V(τⱼ)`.
    pub volume_error: Vec<T>,
}

impl<T: Real> IgeSeries<T> {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// Entropy series on `grid` (strictly increasing, inside `(τ₀, τ_end]`).
pub fn ige_series<T: Real>(m: &ManifoldSpec<T>, p: &GeodesicPath<T>, grid: &[T], scheme: &IntegrationScheme) -> Result<IgeSeries<T>> {
    scheme.validate()?;
    let t0 = p.tau_start();
    if grid.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("IGE grid must be strictly increasing".into()));
    }
    if !(grid[0] > t0) || grid[grid.len() - 1] > p.tau_end() {
        let bad = if grid[0] > t0 { grid[grid.len() - 1] } else { grid[0] };
        return Err(Error::OutsideSpan { tau: bad.as_f64(), start: t0.as_f64(), end: p.tau_end().as_f64() });
    }
    let mut out = IgeSeries {
        tau: Vec::with_capacity(grid.len()),
        weight: Vec::with_capacity(grid.len()),
        volume: Vec::with_capacity(grid.len()),
        entropy: Vec::with_capacity(grid.len()),
        volume_error: Vec::with_capacity(grid.len()),
    };
    let mut integral = T::zero();
    let mut integral_err = T::zero();
    let mut worst_rel = T::zero();
    let mut a = t0;
    for &b in grid {
        let est = integrate_adaptive(
            |t: T| {
                let w = statistical_weight(m, p, t, scheme)?;
                if w.value > T::zero() {
                    worst_rel = worst_rel.max(w.error / w.value);
                }
                Ok(w.value)
            },
            a,
            b,
            T::lit(OUTER_TOLERANCE),
            OUTER_BUDGET,
        )?;
        integral += est.value;
        integral_err += est.error;
        let w = statistical_weight(m, p, b, scheme)?;
        let span = b - t0;
        let v = integral / span;
        out.tau.push(b);
        out.weight.push(w.value);
        out.volume.push(v);
        out.entropy.push(v.ln());
        out.volume_error.push(integral_err / span + worst_rel * v);
        a = b;
    }
    if let Some(j) = out.entropy.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("entropy is not finite at tau = {}", out.tau[j])));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthClass {
    Linear,
    Logarithmic,
    Undetermined,
}

impl std::fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GrowthClass::Linear => "LINEAR",
            GrowthClass::Logarithmic => "LOGARITHMIC",
            GrowthClass::Undetermined => "UNDETERMINED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthClassification<T> {
    pub class: GrowthClass,
    /// Slope of the better-fitting model (`a` or `c`).
    pub rate: T,
    pub r2_linear: T,
    pub r2_log: T,
    pub slope_linear: T,
    pub slope_log: T,
    pub window: (T, T),
    pub points: usize,
}

/// Compares `S = aτ + b` with `S = c ln τ + d` over the window.
pub fn classify_growth<T: Real>(s: &IgeSeries<T>, window: (T, T)) -> Result<GrowthClassification<T>> {
    classify_points(&s.tau, &s.entropy, window)
}

pub fn classify_points<T: Real>(tau: &[T], entropy: &[T], window: (T, T)) -> Result<GrowthClassification<T>> {
    let (lo, hi) = window;
    if !(lo < hi) || !(lo > T::zero()) {
        return Err(Error::InvalidArgument("classification window must satisfy 0 < lo < hi".into()));
    }
    if tau.len() != entropy.len() {
        return Err(Error::Dimension { expected: tau.len(), got: entropy.len() });
    }
    let (mut x, mut lx, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (&t, &v) in tau.iter().zip(entropy) {
        if t >= lo && t <= hi {
            x.push(t);
            lx.push(t.ln());
            y.push(v);
        }
    }
    if x.len() < MIN_CLASSIFY_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_CLASSIFY_POINTS, got: x.len() });
    }
    let lin = fit_line(&x, &y)?;
    let log = fit_line(&lx, &y)?;
    let (thr, margin) = (T::lit(R2_THRESHOLD), T::lit(R2_MARGIN));
    let class = if lin.r2 >= thr && lin.r2 - log.r2 >= margin {
        GrowthClass::Linear
    } else if log.r2 >= thr && log.r2 - lin.r2 >= margin {
        GrowthClass::Logarithmic
    } else {
        GrowthClass::Undetermined
    };
    let rate = match class {
        GrowthClass::Linear => lin.slope,
        GrowthClass::Logarithmic => log.slope,
        GrowthClass::Undetermined if lin.r2 >= log.r2 => lin.slope,
        GrowthClass::Undetermined => log.slope,
    };
    Ok(GrowthClassification {
        class,
        rate,
        r2_linear: lin.r2,
        r2_log: log.r2,
        slope_linear: lin.slope,
        slope_log: log.slope,
        window,
        points: x.len(),
    })
}

/// Gaussian frequency spectrum truncated to `ω > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencySpectrum {
    pub l: usize,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
}

impl FrequencySpectrum {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidParameter { name: "l".into(), reason: "must be at least 1".into() });
        }
        if !(self.mean > 0.0) || !self.mean.is_finite() {
            return Err(Error::InvalidParameter { name: "omega_mean".into(), reason: "must be positive".into() });
        }
        if !(self.std >= 0.0) || !self.std.is_finite() {
            return Err(Error::InvalidParameter { name: "omega_std".into(), reason: "must be non-negative".into() });
        }
        Ok(())
    }

    /// Frequencies of draw `index`; each draw has its own random stream.
    pub fn draw(&self, index: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if self.std == 0.0 {
            return Ok(vec![self.mean; self.l]);
        }
        let normal = Normal::new(self.mean, self.std).map_err(|e| Error::InvalidParameter {
            name: "omega_std".into(),
            reason: e.to_string(),
        })?;
        let mut rng = stream_rng(self.seed, index);
        let mut out = Vec::with_capacity(self.l);
        while out.len() < self.l {
            let w: f64 = normal.sample(&mut rng);
            if w > 0.0 {
                out.push(w);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleIge<T> {
    /// Draw-averaged `w`, `V` and `S`. `S` is the mean of the per-draw
    /// entropies, not the log of the mean volume.
    pub series: IgeSeries<T>,
    pub classification: GrowthClassification<T>,
    pub frequencies: Vec<Vec<f64>>,
    /// Grid points dropped because a draw stopped early.
    pub dropped_points: usize,
}

// mean anchored at the first value so identical inputs reproduce it exactly
fn anchored_mean<T: Real>(xs: impl Iterator<Item = T>) -> T {
    let mut it = xs.peekable();
    let x0 = *it.peek().expect("at least one draw");
    let (mut acc, mut n) = (T::zero(), 0usize);
    for x in it {
        acc += x - x0;
        n += 1;
    }
    x0 + acc / T::from_usize_lossy(n)
}

/// Ensemble-averaged entropy for inverted oscillators with frequencies drawn
/// from `spectrum`. `init` gives `(θ_k, θ̇_k)` per oscillator; a single pair
/// is used for all of them. The grid is truncated to the span every draw
/// actually reached.
#[allow(clippy::too_many_arguments)]
pub fn ensemble_ige<T: Real>(
    spectrum: &FrequencySpectrum,
    init: &[(T, T)],
    grid: &[T],
    samples: usize,
    scheme: &IntegrationScheme,
    control: &StepControl<T>,
    window: (T, T),
) -> Result<EnsembleIge<T>> {
    spectrum.validate()?;
    if samples == 0 {
        return Err(Error::InvalidParameter { name: "samples".into(), reason: "must be at least 1".into() });
    }
    let init: Vec<(T, T)> = match init.len() {
        1 => vec![init[0]; spectrum.l],
        k if k == spectrum.l => init.to_vec(),
        k => return Err(Error::Dimension { expected: spectrum.l, got: k }),
    };
    let tau_max = *grid.last().ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
    let frequencies: Vec<Vec<f64>> = (0..samples as u64).map(|i| spectrum.draw(i)).collect::<Result<_>>()?;
    let paths: Vec<(ManifoldSpec<T>, GeodesicPath<T>)> = frequencies
        .par_iter()
        .map(|w| {
            let omega: Vec<T> = w.iter().map(|&x| T::lit(x)).collect();
            let path = iho_trajectories(&omega, &init, tau_max, control, &[])?;
            Ok((ManifoldSpec::iho(&omega)?, path))
        })
        .collect::<Result<_>>()?;
    let reach = paths.iter().map(|(_, p)| p.tau_end()).fold(tau_max, |a, b| a.min(b));
    let usable: Vec<T> = grid.iter().copied().filter(|&t| t <= reach).collect();
    let dropped = grid.len() - usable.len();
    if usable.is_empty() {
        return Err(Error::TooFewPoints { needed: MIN_CLASSIFY_POINTS, got: 0 });
    }
    let per_draw: Vec<IgeSeries<T>> =
        paths.par_iter().map(|(m, p)| ige_series(m, p, &usable, scheme)).collect::<Result<_>>()?;
    let k = usable.len();
    let column = |f: &dyn Fn(&IgeSeries<T>) -> &Vec<T>, j: usize| anchored_mean(per_draw.iter().map(|s| f(s)[j]));
    let series = IgeSeries {
        tau: usable.clone(),
        weight: (0..k).map(|j| column(&|s| &s.weight, j)).collect(),
        volume: (0..k).map(|j| column(&|s| &s.volume, j)).collect(),
        entropy: (0..k).map(|j| column(&|s| &s.entropy, j)).collect(),
        volume_error: (0..k).map(|j| column(&|s| &s.volume_error, j)).collect(),
    };
    let classification = classify_growth(&series, window)?;
    Ok(EnsembleIge { series, classification, frequencies, dropped_points: dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{integrate_geodesic, uniform_grid, GeodesicState};
    use crate::manifold::{build_manifold, parse_params};

    fn manifold(name: &str, params: &str) -> ManifoldSpec<f64> {
        build_manifold(name, &parse_params(params).unwrap()).unwrap()
    }

    fn tight() -> StepControl<f64> {
        StepControl::with_tolerances(1e-11, 1e-14)
    }

    fn log_geodesic(tau: f64) -> (ManifoldSpec<f64>, GeodesicPath<f64>) {
        let m = manifold("integrable", "");
        let r = 0.5f64.sqrt();
        let s0 = GeodesicState::new(0.0, vec![1.0, 1.0], vec![r, r]).unwrap();
        let p = integrate_geodesic(&m, &s0, tau, &tight(), &[]).unwrap();
        (m, p)
    }

    #[test]
    fn integrable_weight_closed_form() {
        let (m, p) = log_geodesic(2.0);
        let w = statistical_weight(&m, &p, 2.0, &IntegrationScheme::default()).unwrap();
        assert!((w.value - 2.0).abs() < 1e-6, "{}", w.value);
    }

    #[test]
    fn unit_interval_volume() {
        let m = ManifoldSpec::euclidean(1);
        let s0 = GeodesicState::new(0.0, vec![0.0], vec![1.0]).unwrap();
        let p = integrate_geodesic(&m, &s0, 1.0, &tight(), &[]).unwrap();
        let w = statistical_weight(&m, &p, 1.0, &IntegrationScheme::default()).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_coordinate_is_reported() {
        let m = manifold("gaussian", "l=1");
        let s0 = GeodesicState::new(0.0, vec![0.0, 1.0], vec![0.0, 0.5]).unwrap();
        let p = integrate_geodesic(&m, &s0, 1.0, &tight(), &[]).unwrap();
        let err = statistical_weight(&m, &p, 1.0, &IntegrationScheme::default()).unwrap_err();
        assert_eq!(err, Error::DegenerateSweep(0));
    }

    #[test]
    fn integrable_entropy_closed_form() {
        let (m, p) = log_geodesic(10.0);
        let grid = uniform_grid(1.0, 10.0, 10);
        let s = ige_series(&m, &p, &grid, &IntegrationScheme::default()).unwrap();
        let last = *s.entropy.last().unwrap();
        assert!((last - (2.0 * 10f64.ln() - 6f64.ln())).abs() < 1e-3);
        assert!((last - 2.813411).abs() < 1e-3);
        for (t, v) in s.tau.iter().zip(&s.volume) {
            assert!((v - t * t / 6.0).abs() < 1e-6 * (t * t / 6.0));
        }
        let c = classify_growth(&s, (1.0, 10.0)).unwrap();
        assert_eq!(c.class, GrowthClass::Logarithmic);
        assert!((c.rate - 2.0).abs() < 1e-6);
    }

    #[test]
    fn synthetic_classification() {
        let t = uniform_grid(1.0, 20.0, 40);
        let lin: Vec<f64> = t.iter().map(|x| 0.5 * x + 1.0).collect();
        let c = classify_points(&t, &lin, (1.0, 20.0)).unwrap();
        assert_eq!(c.class, GrowthClass::Linear);
        assert!((c.rate - 0.5).abs() < 1e-12);
        let log: Vec<f64> = t.iter().map(|x| 2.0 * x.ln() + 0.3).collect();
        let c = classify_points(&t, &log, (1.0, 20.0)).unwrap();
        assert_eq!(c.class, GrowthClass::Logarithmic);
        assert!((c.rate - 2.0).abs() < 1e-12);
        assert!(matches!(classify_points(&t, &log, (1.0, 2.0)), Err(Error::TooFewPoints { .. })));
        let noise: Vec<f64> = t.iter().enumerate().map(|(i, _)| (i % 2) as f64).collect();
        assert_eq!(classify_points(&t, &noise, (1.0, 20.0)).unwrap().class, GrowthClass::Undetermined);
    }

    #[test]
    fn zero_width_spectrum_is_deterministic() {
        let s = FrequencySpectrum { l: 2, mean: 1.5, std: 0.0, seed: 9 };
        assert_eq!(s.draw(0).unwrap(), vec![1.5, 1.5]);
        let s = FrequencySpectrum { l: 3, mean: 0.1, std: 1.0, seed: 9 };
        let a = s.draw(4).unwrap();
        assert!(a.iter().all(|&w| w > 0.0));
        assert_eq!(a, s.draw(4).unwrap());
        assert_ne!(a, s.draw(5).unwrap());
    }

    #[test]
    fn region_grows_monotonically() {
        let m = manifold("chaotic", "");
        let s0 = GeodesicState::new(0.0, vec![1.0, 0.0, 1.0], vec![0.5, 1.0, -0.3]).unwrap();
        let p = integrate_geodesic(&m, &s0, 5.0, &tight(), &[]).unwrap();
        let grid = uniform_grid(0.1, 5.0, 25);
        let mut prev: Option<(ExploredRegion<f64>, f64)> = None;
        for &t in &grid {
            let r = ExploredRegion::from_path(&p, t).unwrap();
            let w = region_weight(&m, &r, &IntegrationScheme::default()).unwrap().value;
            if let Some((pr, pw)) = &prev {
                assert!(r.contains(pr));
                assert!(w >= *pw);
            }
            prev = Some((r, w));
        }
    }
}
