//! Numerical integration: globally adaptive Gauss–Kronrod (7/15) in one
//! dimension, nested tensor-product integration over boxes, and Monte Carlo
//! with counter-derived random streams.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integral value with its error estimate (quadrature) or standard error
/// (Monte Carlo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    AdaptiveQuadrature,
    MonteCarlo,
}

/// How an expectation or volume integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationScheme {
    pub kind: SchemeKind,
    /// Maximum integrand evaluations (quadrature) or sample count (Monte Carlo).
    pub budget: usize,
    /// Target relative error, also used as an absolute floor.
    pub tolerance: f64,
    pub seed: u64,
}

impl IntegrationScheme {
    pub fn quadrature(budget: usize, tolerance: f64) -> Self {
        Self { kind: SchemeKind::AdaptiveQuadrature, budget, tolerance, seed: 0 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { kind: SchemeKind::MonteCarlo, budget: samples, tolerance: 1e-3, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 16 {
            return Err(Error::InvalidScheme(format!("budget must be >= 16, got {}", self.budget)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidScheme(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        Ok(())
    }
}

impl Default for IntegrationScheme {
    fn default() -> Self {
        Self::quadrature(2_000_000, 1e-10)
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// One 15-point Kronrod rule on `[a, b]` with the QUADPACK error heuristic.
fn gk15<T: Real, F>(f: &mut F, a: T, b: T) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center)?;
    let mut resk = fc * T::lit(WGK[7]);
    let mut resg = fc * T::lit(WG[3]);
    let mut resabs = resk.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        resk += w * (f1 + f2);
        resabs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let reskh = resk * half;
    let mut resasc = T::lit(WGK[7]) * (fc - reskh).abs();
    for j in 0..7 {
        resasc += T::lit(WGK[j]) * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let hl = half_len.abs();
    let result = resk * half_len;
    let resabs = resabs * hl;
    let resasc = resasc * hl;
    let mut err = ((resk - resg) * half_len).abs();
    if resasc != T::zero() && err != T::zero() {
        err = resasc * T::one().min((T::lit(200.0) * err / resasc).powf(T::lit(1.5)));
    }
    let uflow = T::min_positive_value() / (T::lit(50.0) * T::epsilon());
    if resabs > uflow {
        err = err.max(T::lit(50.0) * T::epsilon() * resabs);
    }
    if !result.is_finite() {
        return Err(Error::InvalidArgument("integrand produced a non-finite value".into()));
    }
    Ok((result, err))
}

/// Globally adaptive Gauss–Kronrod integration of `f` over finite `[a, b]`.
///
/// Stops once the summed error estimate is below `tol * max(|I|, floor)`;
/// errors with the achieved estimate if `max_evals` runs out first.
pub fn integrate_adaptive<T: Real, F>(mut f: F, a: T, b: T, tol: T, max_evals: usize) -> Result<Estimate<T>>
where
    F: FnMut(T) -> Result<T>,
{
    integrate_adaptive_floor(&mut f, a, b, tol, T::zero(), max_evals)
}

fn integrate_adaptive_floor<T: Real, F>(
    f: &mut F,
    a: T,
    b: T,
    tol: T,
    abs_floor: T,
    max_evals: usize,
) -> Result<Estimate<T>>
where
    F: FnMut(T) -> Result<T>,
{
    if a == b {
        return Ok(Estimate { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let (v, e) = gk15(f, a, b)?;
    let mut evals = 15;
    let mut total = v;
    let mut total_err = e;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    loop {
        let target = tol * total.abs().max(abs_floor);
        if total_err <= target {
            return Ok(Estimate { value: total, error: total_err, evaluations: evals });
        }
        if evals + 30 > max_evals {
            return Err(Error::QuadratureBudget {
                budget: max_evals,
                achieved: total_err.as_f64(),
                target: target.as_f64(),
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(worst.a < mid && mid < worst.b) {
            // interval cannot be split further in this precision
            return Ok(Estimate { value: total, error: total_err, evaluations: evals });
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        evals += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        // re-sum to avoid drift from the running updates
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Map from an integration variable to a coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisMap<T> {
    /// `x = t`, `t ∈ [a, b]`.
    Linear { a: T, b: T },
    /// `x = shift + eᵘ`, `u ∈ [ln(a − shift), ln(b − shift)]`.
    Log { a: T, b: T, shift: T },
}

impl<T: Real> AxisMap<T> {
    /// Log map for scale-type coordinates, linear otherwise.
    pub fn for_interval(a: T, b: T, lower_bound: Option<T>) -> Self {
        match lower_bound {
            Some(c) if a > c => AxisMap::Log { a, b, shift: c },
            _ => AxisMap::Linear { a, b },
        }
    }

    fn range(&self) -> (T, T) {
        match *self {
            AxisMap::Linear { a, b } => (a, b),
            AxisMap::Log { a, b, shift } => ((a - shift).ln(), (b - shift).ln()),
        }
    }

    #[inline]
    fn map(&self, t: T) -> (T, T) {
        match *self {
            AxisMap::Linear { .. } => (t, T::one()),
            AxisMap::Log { shift, .. } => {
                let e = t.exp();
                (shift + e, e)
            }
        }
    }
}

struct BoxIntegrator<'a, T, F> {
    f: &'a F,
    axes: &'a [AxisMap<T>],
    tol: T,
    remaining: usize,
    worst_inner_rel: T,
    point: Vec<T>,
}

impl<T: Real, F> BoxIntegrator<'_, T, F>
where
    F: Fn(&[T]) -> Result<T>,
{
    fn level(&mut self, axis: usize) -> Result<Estimate<T>> {
        let (lo, hi) = self.axes[axis].range();
        let map = self.axes[axis];
        let last = axis + 1 == self.axes.len();
        let tol = if last { self.tol } else { self.tol * T::lit(0.5) };
        let budget = self.remaining;
        if last && budget < 15 {
            return Err(Error::QuadratureBudget { budget: 0, achieved: f64::INFINITY, target: self.tol.as_f64() });
        }
        let mut used = 0usize;
        let est = {
            let mut g = |t: T| -> Result<T> {
                let (x, jac) = map.map(t);
                self.point[axis] = x;
                if last {
                    used += 1;
                    Ok((self.f)(&self.point)? * jac)
                } else {
                    let inner = self.level(axis + 1)?;
                    if inner.value != T::zero() {
                        self.worst_inner_rel = self.worst_inner_rel.max(inner.error / inner.value.abs());
                    }
                    Ok(inner.value * jac)
                }
            };
            integrate_adaptive_floor(&mut g, lo, hi, tol, T::zero(), budget)
        };
        if last {
            self.remaining = self.remaining.saturating_sub(used);
        }
        est
    }
}

/// Nested adaptive integration of `f` over the tensor-product box given by
/// `axes`. The reported error adds the worst relative inner error.
pub fn integrate_box<T: Real, F>(f: &F, axes: &[AxisMap<T>], tol: T, budget: usize) -> Result<Estimate<T>>
where
    F: Fn(&[T]) -> Result<T>,
{
    if axes.is_empty() {
        return Err(Error::InvalidArgument("empty integration box".into()));
    }
    let mut it = BoxIntegrator {
        f,
        axes,
        tol,
        remaining: budget,
        worst_inner_rel: T::zero(),
        point: vec![T::zero(); axes.len()],
    };
    let est = it.level(0).map_err(|e| match e {
        Error::QuadratureBudget { achieved, target, .. } => Error::QuadratureBudget { budget, achieved, target },
        other => other,
    })?;
    Ok(Estimate {
        value: est.value,
        error: est.error + it.worst_inner_rel * est.value.abs(),
        evaluations: budget - it.remaining,
    })
}

/// Samples per random stream block. Block `b` always uses stream `b` of
/// the seeded generator, so results do not depend on how blocks are
/// scheduled across threads.
pub const MC_BLOCK: usize = 4096;

/// Generator for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-axis proposal for Monte Carlo volume integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal<T> {
    Uniform { a: T, b: T },
    /// Density `∝ (x − shift)⁻²` on `[a, b]`, uniform in `1/(x − shift)`.
    Reciprocal { a: T, b: T, shift: T },
}

impl<T: Real> Proposal<T> {
    pub fn for_interval(a: T, b: T, lower_bound: Option<T>) -> Self {
        match lower_bound {
            Some(c) if a > c => Proposal::Reciprocal { a, b, shift: c },
            _ => Proposal::Uniform { a, b },
        }
    }

    /// Draw `x` with `u ∈ [0,1)`; returns `(x, 1/q(x))`.
    #[inline]
    fn draw(&self, u: f64) -> (T, T) {
        let u = T::lit(u);
        match *self {
            Proposal::Uniform { a, b } => (a + (b - a) * u, b - a),
            Proposal::Reciprocal { a, b, shift } => {
                let (ra, rb) = ((a - shift).recip(), (b - shift).recip());
                let r = ra + (rb - ra) * u;
                let d = r.recip();
                (shift + d, d * d * (ra - rb))
            }
        }
    }
}

/// Monte Carlo estimate of `∫ f` over a box with the given per-axis proposals.
pub fn monte_carlo_box<T: Real, F>(f: &F, axes: &[Proposal<T>], samples: usize, seed: u64) -> Result<Estimate<T>>
where
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let blocks = samples.div_ceil(MC_BLOCK);
    let n = axes.len();
    let partial: Vec<Result<Moments<T>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut x = vec![T::zero(); n];
            let mut acc = Moments::default();
            for _ in 0..count {
                let mut w = T::one();
                for (xi, ax) in x.iter_mut().zip(axes) {
                    let (v, iw) = ax.draw(rng.random::<f64>());
                    *xi = v;
                    w *= iw;
                }
                acc.push(f(&x)? * w);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::default();
    for r in partial {
        total.merge(&r?);
    }
    Ok(total.estimate())
}

/// Running mean and centred second moment; blocks merge in a fixed order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments<T> {
    count: usize,
    mean: T,
    m2: T,
}

impl<T: Real> Default for Moments<T> {
    fn default() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }
}

impl<T: Real> Moments<T> {
    #[inline]
    pub(crate) fn push(&mut self, y: T) {
        self.count += 1;
        let d = y - self.mean;
        self.mean += d / T::from_usize_lossy(self.count);
        self.m2 += d * (y - self.mean);
    }

    pub(crate) fn merge(&mut self, o: &Self) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let (na, nb) = (T::from_usize_lossy(self.count), T::from_usize_lossy(o.count));
        let nn = na + nb;
        let d = o.mean - self.mean;
        self.mean += d * nb / nn;
        self.m2 += o.m2 + d * d * na * nb / nn;
        self.count += o.count;
    }

    /// Mean with its standard error.
    pub(crate) fn estimate(&self) -> Estimate<T> {
        let var = if self.count > 1 {
            (self.m2 / T::from_usize_lossy(self.count - 1)).max(T::zero())
        } else {
            T::zero()
        };
        let nn = T::from_usize_lossy(self.count.max(1));
        Estimate { value: self.mean, error: (var / nn).sqrt(), evaluations: self.count }
    }
}

/// Change of variables from `t ∈ (0, 1)` onto an infinite or semi-infinite
/// support, centred at `center` with width `scale`.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SupportMap<T> {
    Finite { a: T, b: T },
    /// `x = a + s·t/(1−t)`
    Upper { a: T, s: T },
    /// `x = b − s·t/(1−t)`
    Lower { b: T, s: T },
    /// `x = c + s·ln(t/(1−t))`
    Whole { c: T, s: T },
}

impl<T: Real> SupportMap<T> {
    pub(crate) fn new(lower: T, upper: T, center: T, scale: T) -> Self {
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => SupportMap::Finite { a: lower, b: upper },
            (true, false) => SupportMap::Upper { a: lower, s: scale },
            (false, true) => SupportMap::Lower { b: upper, s: scale },
            (false, false) => SupportMap::Whole { c: center, s: scale },
        }
    }

    pub(crate) fn range(&self) -> (T, T) {
        match *self {
            SupportMap::Finite { a, b } => (a, b),
            _ => (T::zero(), T::one()),
        }
    }

    /// `(x, dx/dt)`
    #[inline]
    pub(crate) fn map(&self, t: T) -> (T, T) {
        match *self {
            SupportMap::Finite { .. } => (t, T::one()),
            SupportMap::Upper { a, s } => {
                let om = T::one() - t;
                (a + s * t / om, s / (om * om))
            }
            SupportMap::Lower { b, s } => {
                let om = T::one() - t;
                (b - s * t / om, s / (om * om))
            }
            SupportMap::Whole { c, s } => {
                let om = T::one() - t;
                (c + s * (t / om).ln(), s / (t * om))
            }
        }
    }
}
