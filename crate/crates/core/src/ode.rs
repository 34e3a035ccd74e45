//! Explicit Runge–Kutta integration of first-order systems.
//!
//! The default method is the Dormand–Prince 5(4) pair with its 4th-order
//! continuous extension, so solutions can be sampled at arbitrary times
//! without forcing the step size. A classical fixed-step RK4 with cubic
//! Hermite interpolation is available for reproducibility studies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `y' = f(t, y)`.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()>;

    /// Inspected after every accepted step; `Some` stops the integration.
    fn check(&self, _t: T, _y: &[T]) -> Option<Termination> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The trajectory reached the neighbourhood of the domain boundary.
    BoundaryExit,
    /// A component exceeded the overflow guard.
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method<T> {
    DormandPrince,
    /// Classical RK4 with a fixed step.
    Rk4 { step: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: T,
    pub max_steps: usize,
    pub method: Method<T>,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-14),
            max_step: T::infinity(),
            max_steps: 1_000_000,
            method: Method::DormandPrince,
        }
    }
}

impl<T: Real> StepControl<T> {
    pub fn with_tolerances(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > T::zero()) || !(self.atol > T::zero()) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.max_step > T::zero()) {
            return Err(Error::InvalidArgument("max_step must be positive".into()));
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > T::zero()) {
                return Err(Error::InvalidArgument("RK4 step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Interpolant over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone)]
pub struct DenseSegment<T> {
    pub t0: T,
    pub h: T,
    kind: Interp,
    coeffs: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
enum Interp {
    Dopri,
    Hermite,
}

impl<T: Real> DenseSegment<T> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn eval(&self, t: T, out: &mut [T]) {
        let n = out.len();
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let c = &self.coeffs;
        match self.kind {
            Interp::Dopri => {
                for i in 0..n {
                    out[i] = c[i] + th * (c[n + i] + th1 * (c[2 * n + i] + th * (c[3 * n + i] + th1 * c[4 * n + i])));
                }
            }
            Interp::Hermite => {
                // c = [y0, y1, h f0, h f1]
                let (th2, th3) = (th * th, th * th * th);
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                let h00 = two * th3 - three * th2 + T::one();
                let h10 = th3 - two * th2 + th;
                let h01 = three * th2 - two * th3;
                let h11 = th3 - th2;
                for i in 0..n {
                    out[i] = h00 * c[i] + h10 * c[2 * n + i] + h01 * c[n + i] + h11 * c[3 * n + i];
                }
            }
        }
    }

    /// State at the end of the segment.
    pub fn end_state(&self, out: &mut [T]) {
        let n = out.len();
        match self.kind {
            Interp::Dopri => {
                for i in 0..n {
                    out[i] = self.coeffs[i] + self.coeffs[n + i];
                }
            }
            Interp::Hermite => out.copy_from_slice(&self.coeffs[n..2 * n]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub segments: Vec<DenseSegment<T>>,
    pub status: Termination,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub t_end: T,
    pub y_end: Vec<T>,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn is_domain_error(e: &Error) -> bool {
    matches!(e, Error::OutOfDomain { .. } | Error::NotPositiveDefinite | Error::BoundaryProximity { .. })
}

struct Sampler<'a, T> {
    times: &'a [T],
    next: usize,
    out_t: Vec<T>,
    out_y: Vec<Vec<T>>,
}

impl<T: Real> Sampler<'_, T> {
    fn take_segment(&mut self, seg: &DenseSegment<T>, y_end: &[T]) {
        let t1 = seg.t1();
        while self.next < self.times.len() && self.times[self.next] <= t1 {
            let t = self.times[self.next];
            let y = if t == t1 {
                y_end.to_vec()
            } else {
                let mut y = vec![T::zero(); y_end.len()];
                seg.eval(t, &mut y);
                y
            };
            self.out_t.push(t);
            self.out_y.push(y);
            self.next += 1;
        }
    }
}

/// Integrates `sys` from `(t0, y0)` to `t_end`, returning states at every
/// entry of `sample_times` (sorted, within `[t0, t_end]`) that was reached.
pub fn solve<T: Real, S: OdeSystem<T>>(
    sys: &S,
    t0: T,
    y0: &[T],
    t_end: T,
    control: &StepControl<T>,
    sample_times: &[T],
) -> Result<Solution<T>> {
    control.validate()?;
    if !(t_end > t0) {
        return Err(Error::InvalidArgument("end time must exceed start time".into()));
    }
    if y0.len() != sys.dim() {
        return Err(Error::Dimension { expected: sys.dim(), got: y0.len() });
    }
    if sample_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
    }
    if let (Some(&first), Some(&last)) = (sample_times.first(), sample_times.last()) {
        if first < t0 || last > t_end {
            return Err(Error::OutsideSpan { tau: if first < t0 { first } else { last }.as_f64(), start: t0.as_f64(), end: t_end.as_f64() });
        }
    }
    let mut sampler = Sampler { times: sample_times, next: 0, out_t: Vec::new(), out_y: Vec::new() };
    while sampler.next < sample_times.len() && sample_times[sampler.next] == t0 {
        sampler.out_t.push(t0);
        sampler.out_y.push(y0.to_vec());
        sampler.next += 1;
    }
    let run = match control.method {
        Method::DormandPrince => dopri(sys, t0, y0, t_end, control, &mut sampler),
        Method::Rk4 { step } => rk4(sys, t0, y0, t_end, step, control, &mut sampler),
    }?;
    Ok(Solution { times: sampler.out_t, states: sampler.out_y, ..run })
}

fn error_norm<T: Real>(err: &[T], y0: &[T], y1: &[T], c: &StepControl<T>) -> T {
    let n = err.len();
    let mut acc = T::zero();
    for i in 0..n {
        let sc = c.atol + c.rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / T::from_usize_lossy(n)).sqrt()
}

fn initial_step<T: Real, S: OdeSystem<T>>(sys: &S, t0: T, y0: &[T], f0: &[T], c: &StepControl<T>) -> Result<T> {
    let n = y0.len();
    let norm = |v: &[T]| {
        let mut acc = T::zero();
        for i in 0..n {
            let r = v[i] / (c.atol + c.rtol * y0[i].abs());
            acc += r * r;
        }
        (acc / T::from_usize_lossy(n)).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    h0 = h0.min(c.max_step);
    let y1: Vec<T> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![T::zero(); n];
    if sys.rhs(t0 + h0, &y1, &mut f1).is_err() {
        return Ok(h0 * T::lit(0.01));
    }
    let diff: Vec<T> = (0..n).map(|i| f1[i] - f0[i]).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    Ok((T::lit(100.0) * h0).min(h1).min(c.max_step))
}

fn dopri<T: Real, S: OdeSystem<T>>(
    sys: &S,
    t0: T,
    y0: &[T],
    t_end: T,
    c: &StepControl<T>,
    sampler: &mut Sampler<'_, T>,
) -> Result<Solution<T>> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    sys.rhs(t, &y, &mut k[0])?;
    let mut evaluations = 1;
    let mut h = initial_step(sys, t, &y, &k[0], c)?;
    evaluations += 1;
    let mut segments = Vec::new();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;
    let mut ytmp = vec![T::zero(); n];
    let mut y1 = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];
    let mut status = Termination::Completed;
    let mut domain_failures = 0usize;

    while t < t_end {
        if accepted + rejected >= c.max_steps {
            return Err(Error::MaxSteps(c.max_steps));
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h.abs() <= T::lit(16.0) * T::epsilon() * t.abs() || h.abs() < T::min_positive_value() {
            if domain_failures > 0 {
                status = Termination::BoundaryExit;
                break;
            }
            return Err(Error::StepUnderflow(t.as_f64()));
        }

        let mut stage_err = None;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += T::lit(a) * kj[i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            evaluations += 1;
            if let Err(e) = sys.rhs(t + T::lit(C[s]) * h, &ytmp, &mut tail[0]) {
                stage_err = Some(e);
                break;
            }
            if s == 6 {
                y1.copy_from_slice(&ytmp);
            }
        }
        if let Some(e) = stage_err {
            if !is_domain_error(&e) {
                return Err(e);
            }
            domain_failures += 1;
            rejected += 1;
            h = h * T::lit(0.25);
            last_rejected = true;
            continue;
        }

        for i in 0..n {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    acc += T::lit(E[j]) * kj[i];
                }
            }
            err[i] = h * acc;
        }
        let en = error_norm(&err, &y, &y1, c);
        if !en.is_finite() {
            rejected += 1;
            h = h * T::lit(0.25);
            last_rejected = true;
            continue;
        }
        if en <= T::one() {
            let mut coeffs = vec![T::zero(); 5 * n];
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                coeffs[i] = y[i];
                coeffs[n + i] = ydiff;
                coeffs[2 * n + i] = bspl;
                coeffs[3 * n + i] = ydiff - h * k[6][i] - bspl;
                let mut d = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        d += T::lit(D[j]) * kj[i];
                    }
                }
                coeffs[4 * n + i] = h * d;
            }
            let seg = DenseSegment { t0: t, h, kind: Interp::Dopri, coeffs };
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&y1);
            sampler.take_segment(&seg, &y);
            segments.push(seg);
            k.swap(0, 6);
            accepted += 1;
            domain_failures = 0;
            if let Some(stop) = sys.check(t, &y) {
                status = stop;
                break;
            }
            let mut fac = T::lit(0.9) * en.max(T::lit(1e-10)).powf(T::lit(-0.2));
            fac = fac.max(T::lit(0.2)).min(T::lit(10.0));
            if last_rejected {
                fac = fac.min(T::one());
            }
            last_rejected = false;
            h = (h * fac).min(c.max_step);
        } else {
            rejected += 1;
            let fac = (T::lit(0.9) * en.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * fac;
            last_rejected = true;
        }
    }
    Ok(Solution {
        times: Vec::new(),
        states: Vec::new(),
        segments,
        status,
        accepted,
        rejected,
        evaluations,
        t_end: t,
        y_end: y,
    })
}

fn rk4<T: Real, S: OdeSystem<T>>(
    sys: &S,
    t0: T,
    y0: &[T],
    t_end: T,
    step: T,
    c: &StepControl<T>,
    sampler: &mut Sampler<'_, T>,
) -> Result<Solution<T>> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let mut segments = Vec::new();
    let mut status = Termination::Completed;
    let mut evaluations = 0;
    let mut accepted = 0;
    let half = T::lit(0.5);
    sys.rhs(t, &y, &mut k1)?;
    // step count fixed up front so rounding in t cannot add a sliver step
    let ratio = (t_end - t0) / step;
    let steps = ratio.round().max(T::one());
    let steps = if (ratio - steps).abs() <= T::lit(1e-9) * steps { steps } else { ratio.ceil() };
    let steps = steps.to_usize().unwrap_or(usize::MAX);
    if steps > c.max_steps {
        return Err(Error::MaxSteps(c.max_steps));
    }
    for k in 0..steps {
        let t_next = if k + 1 == steps { t_end } else { t0 + step * T::from_usize_lossy(k + 1) };
        let h = t_next - t;
        let stage = |k_in: &[T], scale: T, tmp: &mut Vec<T>, y: &[T]| {
            for i in 0..n {
                tmp[i] = y[i] + scale * k_in[i];
            }
        };
        let res: Result<()> = (|| {
            stage(&k1, half * h, &mut tmp, &y);
            sys.rhs(t + half * h, &tmp, &mut k2)?;
            stage(&k2, half * h, &mut tmp, &y);
            sys.rhs(t + half * h, &tmp, &mut k3)?;
            stage(&k3, h, &mut tmp, &y);
            sys.rhs(t + h, &tmp, &mut k4)?;
            Ok(())
        })();
        evaluations += 3;
        if let Err(e) = res {
            if is_domain_error(&e) {
                status = Termination::BoundaryExit;
                break;
            }
            return Err(e);
        }
        let sixth = T::one() / T::lit(6.0);
        let y_new: Vec<T> = (0..n)
            .map(|i| y[i] + h * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
            .collect();
        let mut f_new = vec![T::zero(); n];
        evaluations += 1;
        if let Err(e) = sys.rhs(t + h, &y_new, &mut f_new) {
            if is_domain_error(&e) {
                status = Termination::BoundaryExit;
                break;
            }
            return Err(e);
        }
        let mut coeffs = Vec::with_capacity(4 * n);
        coeffs.extend_from_slice(&y);
        coeffs.extend_from_slice(&y_new);
        coeffs.extend(k1.iter().map(|&v| v * h));
        coeffs.extend(f_new.iter().map(|&v| v * h));
        let seg = DenseSegment { t0: t, h, kind: Interp::Hermite, coeffs };
        t = t_next;
        y = y_new;
        k1 = f_new;
        sampler.take_segment(&seg, &y);
        segments.push(seg);
        accepted += 1;
        if let Some(stop) = sys.check(t, &y) {
            status = stop;
            break;
        }
    }
    Ok(Solution { times: Vec::new(), states: Vec::new(), segments, status, accepted, rejected: 0, evaluations, t_end: t, y_end: y })
}
