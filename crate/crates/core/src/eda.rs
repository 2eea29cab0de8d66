//! Aggregate anomaly screening on sale prices: Benford first-digit
//! conformance, round-number clustering and a Hill tail estimate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::TransactionRecord;

/// Chi-squared 95th percentile at 8 degrees of freedom.
pub const BENFORD_CRITICAL_5PCT: f64 = 15.507;
pub const BENFORD_DOF: usize = 8;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;
pub const MIN_TAIL_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigitDistribution {
    /// Index 0 holds digit 1.
    pub counts: [u64; 9],
    pub proportions: [f64; 9],
}

impl DigitDistribution {
    pub fn from_counts(counts: [u64; 9]) -> Self {
        let total: u64 = counts.iter().sum();
        let mut proportions = [0.0; 9];
        if total > 0 {
            for (p, &c) in proportions.iter_mut().zip(&counts) {
                *p = c as f64 / total as f64;
            }
        }
        Self {
            counts,
            proportions,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenfordTestResult {
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub critical_value_5pct: f64,
    pub reject: bool,
}

pub fn benford_expected(digit: u32) -> f64 {
    (1.0 + 1.0 / digit as f64).log10()
}

/// Leading nonzero digit of a positive finite number.
pub fn first_significant_digit(p: f64) -> Option<u32> {
    if !(p.is_finite() && p > 0.0) {
        return None;
    }
    // Scientific notation always starts with the leading significant digit.
    format!("{p:e}").chars().next().and_then(|c| c.to_digit(10))
}

pub fn first_digit_distribution(prices: &[f64]) -> Result<DigitDistribution> {
    if prices.is_empty() {
        return Err(Error::InvalidInput("empty price list".into()));
    }
    let mut counts = [0u64; 9];
    for &p in prices {
        let d = first_significant_digit(p)
            .ok_or_else(|| Error::InvalidInput(format!("non-positive price {p}")))?;
        counts[d as usize - 1] += 1;
    }
    Ok(DigitDistribution::from_counts(counts))
}

pub fn benford_chi_squared(dist: &DigitDistribution) -> BenfordTestResult {
    let n = dist.total() as f64;
    let chi_squared = (1..=9u32)
        .map(|d| {
            let expected = n * benford_expected(d);
            let observed = dist.counts[d as usize - 1] as f64;
            (observed - expected).powi(2) / expected
        })
        .sum::<f64>();
    BenfordTestResult {
        chi_squared,
        degrees_of_freedom: BENFORD_DOF,
        critical_value_5pct: BENFORD_CRITICAL_5PCT,
        reject: chi_squared > BENFORD_CRITICAL_5PCT,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundPriceHistogram {
    pub max_price: u64,
    pub counts: BTreeMap<u64, u64>,
    /// Share of in-range mass that rounds to a multiple of 5.
    pub multiple_of_5_ratio: f64,
}

/// Histogram of prices rounded half-up to whole units, restricted to
/// `[0, max_price]`.
pub fn round_price_histogram(prices: &[f64], max_price: u64) -> Result<RoundPriceHistogram> {
    if max_price < 1 {
        return Err(Error::InvalidInput("max_price must be at least 1".into()));
    }
    let mut counts = BTreeMap::new();
    for &p in prices {
        let r = (p + 0.5).floor();
        if r >= 0.0 && r <= max_price as f64 {
            *counts.entry(r as u64).or_insert(0u64) += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let fives: u64 = counts
        .iter()
        .filter(|(k, _)| *k % 5 == 0)
        .map(|(_, c)| c)
        .sum();
    let multiple_of_5_ratio = if total > 0 {
        fives as f64 / total as f64
    } else {
        0.0
    };
    Ok(RoundPriceHistogram {
        max_price,
        counts,
        multiple_of_5_ratio,
    })
}

/// Hill estimator of the power-law tail index over the largest
/// `tail_fraction` of the sample.
pub fn tail_exponent(prices: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.2) {
        return Err(Error::InvalidInput(format!(
            "tail_fraction {tail_fraction} outside (0, 0.2]"
        )));
    }
    let k = (tail_fraction * prices.len() as f64).floor() as usize;
    if k < MIN_TAIL_SAMPLES || k >= prices.len() {
        return Err(Error::InvalidInput(format!(
            "insufficient tail: {k} samples, need {MIN_TAIL_SAMPLES}"
        )));
    }
    let mut sorted = prices.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[k];
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidInput("tail threshold is not positive".into()));
    }
    let sum: f64 = sorted[..k].iter().map(|x| (x / threshold).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::InvalidInput("constant tail".into()));
    }
    Ok(k as f64 / sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenfordReport {
    pub distribution: DigitDistribution,
    pub expected_proportions: [f64; 9],
    #[serde(flatten)]
    pub test: BenfordTestResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub tail_fraction: f64,
    pub alpha: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdaReport {
    pub priced_transactions: usize,
    pub benford: Option<BenfordReport>,
    pub round_hist: RoundPriceHistogram,
    pub tail: TailReport,
}

/// Runs all three screens on the positive-priced records (zero-valued
/// transfers are excluded).
pub fn run_eda(
    records: &[TransactionRecord],
    max_price: u64,
    tail_fraction: f64,
) -> Result<EdaReport> {
    let prices: Vec<f64> = records
        .iter()
        .filter(|r| r.value_eth > 0.0)
        .map(|r| r.value_eth)
        .collect();
    let benford = if prices.is_empty() {
        None
    } else {
        let distribution = first_digit_distribution(&prices)?;
        let test = benford_chi_squared(&distribution);
        let mut expected_proportions = [0.0; 9];
        for (d, e) in expected_proportions.iter_mut().enumerate() {
            *e = benford_expected(d as u32 + 1);
        }
        Some(BenfordReport {
            distribution,
            expected_proportions,
            test,
        })
    };
    let tail = match tail_exponent(&prices, tail_fraction) {
        Ok(alpha) => TailReport {
            tail_fraction,
            alpha: Some(alpha),
            error: None,
        },
        Err(e) => TailReport {
            tail_fraction,
            alpha: None,
            error: Some(e.to_string()),
        },
    };
    Ok(EdaReport {
        priced_transactions: prices.len(),
        benford,
        round_hist: round_price_histogram(&prices, max_price)?,
        tail,
    })
}
