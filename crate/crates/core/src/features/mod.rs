//! Wallet behavioral features: four network, eleven monetary and eleven
//! temporal measurements per wallet, plus the collection-level daily price
//! series (EMA7, ATR, market regimes) several of them depend on.

mod matrix;
mod series;
mod wallet;

use serde::{Deserialize, Serialize};

pub use matrix::{
    assemble_feature_matrix, pearson_matrix, prune_correlated, read_matrix_csv, standardize,
    write_correlation_csv, DroppedFeature, FeatureMatrix, PruneResult,
};
pub use series::{
    collection_daily_series, CollectionDailySeries, DailyPoint, Regime, Volatility, ATR_WINDOW,
    EMA_ALPHA,
};
pub use wallet::{extract_features, LedgerIndex, WalletFeatures};

pub const FEATURE_COUNT: usize = 26;

/// Column order of the feature matrix.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "in_degree",
    "out_degree",
    "unique_in_ratio",
    "unique_out_ratio",
    "total_in_usd",
    "total_out_usd",
    "avg_in_usd",
    "avg_out_usd",
    "sd_in_usd",
    "sd_out_usd",
    "profit_transfers_usd",
    "profit_ratio",
    "transfer_ratio",
    "relative_sell",
    "relative_buy",
    "in_interval_days",
    "out_interval_days",
    "diff_interval_days",
    "max_trans_per_day",
    "avg_trans_per_day",
    "sd_trans_per_day",
    "avg_minted_days",
    "market_trend_buy",
    "market_trend_sell",
    "buy_atr",
    "sell_atr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureCategory {
    Network,
    Monetary,
    Temporal,
}

impl FeatureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureCategory::Network => "network",
            FeatureCategory::Monetary => "monetary",
            FeatureCategory::Temporal => "temporal",
        }
    }
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

pub fn category_of(name: &str) -> Option<FeatureCategory> {
    feature_index(name).map(|i| match i {
        0..=3 => FeatureCategory::Network,
        4..=14 => FeatureCategory::Monetary,
        _ => FeatureCategory::Temporal,
    })
}
