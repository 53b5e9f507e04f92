//! Sample summaries and the two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean, unbiased variance and a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl McSummary {
    /// Two-pass summary in sample order, so equal inputs give bit-equal output.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "a summary needs at least two samples, got {n}"
            )));
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let variance = ss / (n - 1) as f64;
        let stderr = (variance / n as f64).sqrt();
        Ok(Self {
            n,
            mean,
            variance,
            stderr,
            ci95_low: mean - Z95 * stderr,
            ci95_high: mean + Z95 * stderr,
        })
    }

    /// Summary of 0/1 outcomes.
    pub fn from_indicators(hits: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "a summary needs at least two samples, got {n}"
            )));
        }
        let p = hits as f64 / n as f64;
        let variance = p * (1.0 - p) * n as f64 / (n - 1) as f64;
        let stderr = (variance / n as f64).sqrt();
        Ok(Self {
            n,
            mean: p,
            variance,
            stderr,
            ci95_low: p - Z95 * stderr,
            ci95_high: p + Z95 * stderr,
        })
    }
}

/// Result of a two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    /// `sup |F₁ − F₂|`.
    pub statistic: f64,
    /// Asymptotic p-value with the Stephens small-sample correction.
    pub p_value: f64,
}

/// Two-sample KS test. Samples containing NaN are rejected.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Domain("KS test samples contain NaN".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    let p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    Ok(KsResult { statistic: d, p_value: p })
}

/// `Q(t) = P(sup|B⁰| > t)` for the Brownian bridge.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // Theta-function form, fast for small t.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * t * t);
        let s: f64 = (1..=6).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=20)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * t * t).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}
