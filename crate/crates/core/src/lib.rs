//! Wash-trading screening for NFT ledgers: ingestion, exploratory statistics,
//! wallet feature engineering, K-means clustering with validity diagnostics,
//! PCA and rule-based cluster labeling, plus a synthetic market generator
//! with planted behavioral archetypes.

pub mod analysis;
pub mod clustering;
pub mod eda;
pub mod error;
pub mod features;
pub mod ingest;
pub mod matrix;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, WalletFeatures, FEATURE_NAMES};
pub use ingest::{RateTable, TransactionKind, TransactionRecord};
pub use matrix::Matrix;
