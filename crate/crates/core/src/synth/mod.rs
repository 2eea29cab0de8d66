//! Synthetic NFT markets with planted, labeled trader archetypes.
//!
//! Collections follow geometric random-walk prices that alternate between
//! calm and volatile regimes. Retail wallets form the background market;
//! the other archetypes trade against it (or, for wash rings, among
//! themselves) with the behaviors described on [`ArchetypeConfig`].

mod config;
mod market;

pub use config::{Archetype, ArchetypeConfig, MarketConfig, SynthConfig};
pub use market::{generate_market, read_truth_csv, CollectionInfo, SyntheticLedger, Tier};

use chrono::NaiveDate;

fn archetype(kind: Archetype, wallet_count: usize) -> ArchetypeConfig {
    ArchetypeConfig {
        archetype: kind,
        wallet_count,
        trade_rate: 0.0,
        active_days: [0, 0],
        counterparty_pool: [0, 0],
        transfer_probability: 0.0,
        buy_markup: [1.0, 1.0],
        markup: [1.0, 1.0],
        holding_days: [0, 0],
        purchases: [0, 0],
        mint_offset_days: [0, 0],
    }
}

impl ArchetypeConfig {
    /// Frozen per-archetype parameters of the keystone market.
    pub fn default_for(kind: Archetype) -> Self {
        match kind {
            Archetype::Retail => ArchetypeConfig {
                trade_rate: 0.06,
                active_days: [90, 180],
                transfer_probability: 0.05,
                buy_markup: [0.95, 1.05],
                markup: [0.95, 1.05],
                ..archetype(Archetype::Retail, 950)
            },
            Archetype::Hodler => ArchetypeConfig {
                purchases: [1, 3],
                ..archetype(Archetype::Hodler, 600)
            },
            Archetype::Inactive => ArchetypeConfig {
                holding_days: [70, 110],
                purchases: [3, 5],
                mint_offset_days: [10, 40],
                buy_markup: [0.95, 1.05],
                markup: [0.95, 1.05],
                ..archetype(Archetype::Inactive, 250)
            },
            Archetype::Collector => ArchetypeConfig {
                trade_rate: 0.05,
                active_days: [200, 300],
                buy_markup: [1.1, 1.25],
                markup: [1.35, 1.6],
                holding_days: [15, 45],
                purchases: [6, 10],
                mint_offset_days: [120, 540],
                ..archetype(Archetype::Collector, 250)
            },
            Archetype::WashTrader => ArchetypeConfig {
                trade_rate: 1.5,
                active_days: [60, 120],
                counterparty_pool: [3, 5],
                transfer_probability: 0.5,
                markup: [1.02, 1.02],
                purchases: [1, 2],
                ..archetype(Archetype::WashTrader, 250)
            },
            Archetype::Institutional => ArchetypeConfig {
                trade_rate: 3.0,
                active_days: [300, 500],
                buy_markup: [0.95, 1.05],
                markup: [0.95, 1.05],
                ..archetype(Archetype::Institutional, 7)
            },
        }
    }
}

impl SynthConfig {
    /// The frozen five-archetype market used as the clustering oracle.
    pub fn keystone() -> Self {
        let market = MarketConfig {
            start_date: NaiveDate::from_ymd_opt(2022, 1, 1).expect("valid date"),
            duration_days: 540,
            cheap_collections: 6,
            mid_collections: 4,
            premium_collections: 3,
            tokens_per_collection: [200, 300],
            mint_window_days: 150,
            cheap_price_eth: [0.02, 0.08],
            mid_price_eth: [0.2, 0.5],
            premium_price_eth: [1.5, 3.0],
            regime_block_days: [20, 35],
            calm_sigma: 0.01,
            volatile_sigma: 0.08,
            calm_settle_days: 10,
            eth_usd_start: 2500.0,
            eth_usd_sigma: 0.03,
        };
        SynthConfig {
            seed: 20_240_501,
            market,
            archetypes: [
                Archetype::Hodler,
                Archetype::Retail,
                Archetype::Inactive,
                Archetype::Collector,
                Archetype::WashTrader,
            ]
            .into_iter()
            .map(ArchetypeConfig::default_for)
            .collect(),
        }
    }

    /// A market of about 1.25 million transactions over a quarter of a
    /// million wallets, with all six archetypes. Used for throughput runs.
    pub fn scale() -> Self {
        let mut cfg = Self::keystone();
        cfg.market.cheap_collections = 660;
        cfg.market.mid_collections = 440;
        cfg.market.premium_collections = 330;
        let counts = [
            (Archetype::Hodler, 128_000),
            (Archetype::Retail, 70_000),
            (Archetype::Inactive, 40_000),
            (Archetype::Collector, 15_000),
            (Archetype::WashTrader, 5_000),
            (Archetype::Institutional, 7),
        ];
        cfg.archetypes = counts
            .into_iter()
            .map(|(kind, n)| ArchetypeConfig {
                wallet_count: n,
                ..ArchetypeConfig::default_for(kind)
            })
            .collect();
        cfg
    }

    /// A single-archetype variant of the keystone market, for checking an
    /// archetype's construction in isolation. Non-retail archetypes keep a
    /// retail market to trade with.
    pub fn only(kind: Archetype, wallet_count: usize) -> Self {
        let mut cfg = Self::keystone();
        cfg.archetypes = vec![ArchetypeConfig {
            wallet_count,
            ..ArchetypeConfig::default_for(kind)
        }];
        if !matches!(kind, Archetype::Hodler | Archetype::Retail) {
            cfg.archetypes
                .push(ArchetypeConfig::default_for(Archetype::Retail));
        }
        cfg
    }
}
