use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::TransactionRecord;

/// Smoothing factor of a 7-period exponential moving average, 2 / (7 + 1).
pub const EMA_ALPHA: f64 = 0.25;
pub const ATR_WINDOW: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Bull,
    Bear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Volatility {
    Volatile,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyPoint {
    pub day: NaiveDate,
    pub trades: usize,
    pub mean_price_eth: f64,
    pub high_price_eth: f64,
    pub low_price_eth: f64,
    pub close_price_eth: f64,
    pub ema7: f64,
    pub true_range: f64,
    pub atr14: f64,
    pub regime: Regime,
    pub volatility: Volatility,
}

/// Daily price series of one collection over its trading days only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectionDailySeries {
    pub days: Vec<DailyPoint>,
}

impl CollectionDailySeries {
    pub fn on(&self, day: NaiveDate) -> Option<&DailyPoint> {
        self.days
            .binary_search_by(|p| p.day.cmp(&day))
            .ok()
            .map(|i| &self.days[i])
    }
}

/// Builds the series from one collection's sales, given in chronological
/// order. Transfers in the input are ignored.
pub fn collection_daily_series<'a, I>(sales: I) -> Result<CollectionDailySeries>
where
    I: IntoIterator<Item = &'a TransactionRecord>,
{
    // (day, count, sum, high, low, close)
    let mut buckets: Vec<(NaiveDate, usize, f64, f64, f64, f64)> = Vec::new();
    for r in sales.into_iter().filter(|r| r.value_eth > 0.0) {
        let day = r.day();
        let p = r.value_eth;
        match buckets.last_mut() {
            Some(b) if b.0 == day => {
                b.1 += 1;
                b.2 += p;
                b.3 = b.3.max(p);
                b.4 = b.4.min(p);
                b.5 = p;
            }
            Some(b) if b.0 > day => {
                return Err(Error::InvalidInput(
                    "sales not in chronological order".into(),
                ))
            }
            _ => buckets.push((day, 1, p, p, p, p)),
        }
    }
    if buckets.is_empty() {
        return Err(Error::InvalidInput("collection has no sales".into()));
    }

    let mut days: Vec<DailyPoint> = Vec::with_capacity(buckets.len());
    let mut ranges: Vec<f64> = Vec::with_capacity(buckets.len());
    let mut sorted_atr: Vec<f64> = Vec::with_capacity(buckets.len());
    for (day, trades, sum, high, low, close) in buckets {
        let mean = sum / trades as f64;
        let (ema7, regime, true_range) = match days.last() {
            None => (mean, Regime::Bull, high - low),
            Some(prev) => {
                let regime = if mean >= prev.ema7 {
                    Regime::Bull
                } else {
                    Regime::Bear
                };
                let pc = prev.close_price_eth;
                (
                    EMA_ALPHA * mean + (1.0 - EMA_ALPHA) * prev.ema7,
                    regime,
                    high.max(pc) - low.min(pc),
                )
            }
        };
        ranges.push(true_range);
        let window = &ranges[ranges.len().saturating_sub(ATR_WINDOW)..];
        let atr14 = window.iter().sum::<f64>() / window.len() as f64;
        let pos = sorted_atr.partition_point(|x| *x < atr14);
        sorted_atr.insert(pos, atr14);
        let median = crate::stats::quantile_sorted(&sorted_atr, 0.5);
        let volatility = if atr14 > median {
            Volatility::Volatile
        } else {
            Volatility::Stable
        };
        days.push(DailyPoint {
            day,
            trades,
            mean_price_eth: mean,
            high_price_eth: high,
            low_price_eth: low,
            close_price_eth: close,
            ema7,
            true_range,
            atr14,
            regime,
            volatility,
        });
    }
    Ok(CollectionDailySeries { days })
}
