use serde::Serialize;

use crate::error::{Error, Result};

/// Ordinary least squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// OLS fit; callers pass logarithms when fitting power laws.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::UndefinedFit("non-finite point".into()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let distinct = points.iter().any(|p| p.0 != points[0].0);
    if points.len() < 2 || !distinct || !(sxx > 0.0) {
        return Err(Error::UndefinedFit("need at least two distinct x values".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
}

impl Aggregate {
    /// Summary of the finite values; NaN fields when there are none.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self { count: 0, mean: f64::NAN, std: f64::NAN, median: f64::NAN, q10: f64::NAN, q90: f64::NAN, max: f64::NAN };
        }
        let count = v.len();
        let mean = v.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        v.sort_by(f64::total_cmp);
        Self {
            count,
            mean,
            std,
            median: quantile_sorted(&v, 0.5),
            q10: quantile_sorted(&v, 0.1),
            q90: quantile_sorted(&v, 0.9),
            max: v[count - 1],
        }
    }
}

/// Linear interpolation between order statistics (`h = (n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, -0.5 * i as f64 + 1.0)).collect();
        let f = fit_rate(&pts).unwrap();
        approx::assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_points() {
        let f = fit_rate(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!((f.slope, f.intercept), (1.0, 0.0));
    }

    #[test]
    fn alternating_noise_by_hand() {
        // x = 1..6, y = -0.5 x + e, e = +0.01, -0.01, ...
        // Sxx = 17.5, Sxy(noise) = sum (x - 3.5) e = 0.01 * (-2.5 + 1.5 - 0.5 - 0.5 + 1.5 - 2.5) ... = -0.03
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|i| {
                let e = if i % 2 == 1 { 0.01 } else { -0.01 };
                (i as f64, -0.5 * i as f64 + e)
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        let hand = -0.5 + (-0.03) / 17.5;
        approx::assert_abs_diff_eq!(f.slope, hand, epsilon = 1e-14);
        assert!((f.slope + 0.5).abs() < 0.01);
    }

    #[test]
    fn degenerate_x() {
        assert!(matches!(fit_rate(&[(1.0, 2.0), (1.0, 3.0)]), Err(Error::UndefinedFit(_))));
        assert!(fit_rate(&[(1.0, 2.0)]).is_err());
        assert!(fit_rate(&[]).is_err());
    }

    #[test]
    fn aggregate_quantiles() {
        let a = Aggregate::of(&[4.0, 1.0, 3.0, 2.0, f64::NAN, 5.0]);
        assert_eq!(a.count, 5);
        assert_eq!(a.mean, 3.0);
        assert_eq!(a.median, 3.0);
        approx::assert_abs_diff_eq!(a.q10, 1.4, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(a.q90, 4.6, epsilon = 1e-15);
        assert!(Aggregate::of(&[f64::NAN]).mean.is_nan());
    }
}
