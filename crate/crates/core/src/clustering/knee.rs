//! Kneedle knee location for a decreasing convex curve such as WCSS vs k.

use crate::error::{Error, Result};

pub const KNEEDLE_SENSITIVITY: f64 = 1.0;

/// Relative slack allowed when checking that the curve is non-increasing.
const MONOTONE_TOLERANCE: f64 = 1e-9;

/// Returns the k at the knee, or `None` when no local maximum of the
/// difference curve is confirmed by a subsequent drop below its threshold.
pub fn elbow_knee(curve: &[(usize, f64)]) -> Result<Option<usize>> {
    if curve.len() < 4 {
        return Err(Error::InvalidCurve(format!(
            "need at least 4 points, got {}",
            curve.len()
        )));
    }
    for w in curve.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidCurve(
                "k values must be strictly increasing".into(),
            ));
        }
        if w[1].1 > w[0].1 + MONOTONE_TOLERANCE * w[0].1.abs().max(1.0) {
            return Err(Error::InvalidCurve(format!(
                "wcss increases from k={} to k={}",
                w[0].0, w[1].0
            )));
        }
    }

    let n = curve.len();
    let (x0, x1) = (curve[0].0 as f64, curve[n - 1].0 as f64);
    let ymax = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let ymin = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if ymax - ymin <= 0.0 {
        return Ok(None);
    }
    let xs: Vec<f64> = curve
        .iter()
        .map(|p| (p.0 as f64 - x0) / (x1 - x0))
        .collect();
    // Flipping y turns the decreasing convex curve into an increasing concave
    // one, whose knee maximizes y - x.
    let diff: Vec<f64> = curve
        .iter()
        .zip(&xs)
        .map(|(p, x)| 1.0 - (p.1 - ymin) / (ymax - ymin) - x)
        .collect();
    let mean_dx = xs.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (n - 1) as f64;

    let maxima: Vec<usize> = (1..n - 1)
        .filter(|&i| diff[i] > diff[i - 1] && diff[i] >= diff[i + 1])
        .collect();
    for (mi, &i) in maxima.iter().enumerate() {
        let threshold = diff[i] - KNEEDLE_SENSITIVITY * mean_dx;
        let end = maxima.get(mi + 1).copied().unwrap_or(n);
        if (i + 1..end).any(|j| diff[j] < threshold) {
            return Ok(Some(curve[i].0));
        }
    }
    Ok(None)
}
