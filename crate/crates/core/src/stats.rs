//! Sample moments and summary statistics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub skew: f64,
    pub kurtosis: f64,
}

impl Moments {
    /// Mean, unbiased variance, skewness and excess kurtosis.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self { mean: f64::NAN, var: f64::NAN, skew: f64::NAN, kurtosis: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let var = if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
        let (skew, kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Self { mean, var, skew, kurtosis }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance together with its standard error, the latter
/// from the fourth central moment.
pub fn variance_with_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d2 = (x - m) * (x - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    let var = m2 / (n - 1.0);
    let m2n = m2 / n;
    let se = ((m4 / n - m2n * m2n).max(0.0) / n).sqrt();
    (var, se)
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_symmetric_sample() {
        let m = Moments::of(&[-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(m.mean, 0.0);
        assert!((m.var - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.skew, 0.0);
        assert!((m.kurtosis + 2.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_identical_is_variance() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let (v, _) = variance_with_se(&xs);
        assert!((covariance(&xs, &xs) - v).abs() < 1e-12);
    }
}
