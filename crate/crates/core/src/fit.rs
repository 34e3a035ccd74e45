//! Ordinary least-squares straight-line fits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r2: T,
}

/// Fits `y = slope·x + intercept`.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: x.len() });
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: T = x.iter().zip(y).map(|(&a, &b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy == T::zero() { T::one() } else { (T::one() - ss_res / syy).max(T::zero()).min(T::one()) };
    Ok(LineFit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 1.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-14);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn noisy_r2_below_one() {
        let f = fit_line(&[0.0f64, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((f.slope - 0.2).abs() < 1e-12);
        assert!((f.r2 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[2.0]).is_err());
    }
}
