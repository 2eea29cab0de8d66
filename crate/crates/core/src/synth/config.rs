use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Archetype {
    Hodler,
    Retail,
    Inactive,
    Collector,
    WashTrader,
    Institutional,
}

impl Archetype {
    pub const ALL: [Archetype; 6] = [
        Archetype::Hodler,
        Archetype::Retail,
        Archetype::Inactive,
        Archetype::Collector,
        Archetype::WashTrader,
        Archetype::Institutional,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::Hodler => "Hodler",
            Archetype::Retail => "Retail",
            Archetype::Inactive => "Inactive",
            Archetype::Collector => "Collector",
            Archetype::WashTrader => "WashTrader",
            Archetype::Institutional => "Institutional",
        }
    }

    /// The cluster label the default rules give this behavior.
    pub fn expected_label(self) -> &'static str {
        match self {
            Archetype::Hodler => "hodler",
            Archetype::Retail => "general",
            Archetype::Inactive => "inactive",
            Archetype::Collector => "collector",
            Archetype::WashTrader => "wash_candidate",
            Archetype::Institutional => "institutional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Archetype::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl std::fmt::Display for Archetype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Behavior of one archetype. Ranges are inclusive `[low, high]` and sampled
/// uniformly per wallet or per event.
///
/// How each archetype reads the parameters:
/// - Hodler: buys `purchases` tokens of one collection at their mint and
///   never sells.
/// - Retail: trades at `trade_rate` per day during an `active_days` window
///   against other retail wallets, and issues the market's primary sales.
/// - Inactive: makes `purchases` buys separated by `holding_days` gaps, then
///   sells one token.
/// - Collector: buys `purchases` premium tokens at least `mint_offset_days`
///   after their mint, paying `buy_markup` over the market, and resells each
///   after `holding_days` at `markup`.
/// - WashTrader: forms closed rings of `counterparty_pool` wallets cycling a
///   few cheap tokens on calm market days at `trade_rate` trades per member.
/// - Institutional: trades with the open market at `trade_rate` per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeConfig {
    pub archetype: Archetype,
    pub wallet_count: usize,
    pub trade_rate: f64,
    pub active_days: [u32; 2],
    pub counterparty_pool: [u32; 2],
    pub transfer_probability: f64,
    pub buy_markup: [f64; 2],
    pub markup: [f64; 2],
    pub holding_days: [u32; 2],
    pub purchases: [u32; 2],
    pub mint_offset_days: [u32; 2],
}

/// Collections, price process and exchange rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub start_date: NaiveDate,
    pub duration_days: u32,
    /// Number of cheap, mid-priced and premium collections.
    pub cheap_collections: usize,
    pub mid_collections: usize,
    pub premium_collections: usize,
    pub tokens_per_collection: [u32; 2],
    /// Collections mint at a uniform day in `[0, mint_window_days]`.
    pub mint_window_days: u32,
    pub cheap_price_eth: [f64; 2],
    pub mid_price_eth: [f64; 2],
    pub premium_price_eth: [f64; 2],
    /// Lengths of the alternating calm and volatile price regimes.
    pub regime_block_days: [u32; 2],
    pub calm_sigma: f64,
    pub volatile_sigma: f64,
    /// Days into a calm block before wash rings start trading in it.
    pub calm_settle_days: u32,
    pub eth_usd_start: f64,
    pub eth_usd_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub market: MarketConfig,
    pub archetypes: Vec<ArchetypeConfig>,
}

fn check_range_u(errs: &mut Vec<String>, field: String, r: [u32; 2]) {
    if r[0] > r[1] {
        errs.push(format!("{field}: low {} exceeds high {}", r[0], r[1]));
    }
}

fn check_range_f(errs: &mut Vec<String>, field: String, r: [f64; 2], positive: bool) {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] {
        errs.push(format!(
            "{field}: [{}, {}] is not an ordered finite range",
            r[0], r[1]
        ));
    } else if positive && r[0] <= 0.0 {
        errs.push(format!("{field}: values must be positive"));
    }
}

impl SynthConfig {
    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let m = &self.market;
        if m.duration_days < 14 {
            errs.push(format!(
                "market.duration_days: {} is below 14",
                m.duration_days
            ));
        }
        if m.cheap_collections + m.mid_collections + m.premium_collections == 0 {
            errs.push("market: at least one collection is required".into());
        }
        if m.mint_window_days >= m.duration_days {
            errs.push("market.mint_window_days: must be shorter than duration_days".into());
        }
        check_range_u(
            &mut errs,
            "market.tokens_per_collection".into(),
            m.tokens_per_collection,
        );
        if m.tokens_per_collection[0] == 0 {
            errs.push("market.tokens_per_collection: collections need tokens".into());
        }
        check_range_f(
            &mut errs,
            "market.cheap_price_eth".into(),
            m.cheap_price_eth,
            true,
        );
        check_range_f(
            &mut errs,
            "market.mid_price_eth".into(),
            m.mid_price_eth,
            true,
        );
        check_range_f(
            &mut errs,
            "market.premium_price_eth".into(),
            m.premium_price_eth,
            true,
        );
        check_range_u(
            &mut errs,
            "market.regime_block_days".into(),
            m.regime_block_days,
        );
        if m.regime_block_days[0] == 0 {
            errs.push("market.regime_block_days: blocks must last at least a day".into());
        }
        for (name, v) in [
            ("calm_sigma", m.calm_sigma),
            ("volatile_sigma", m.volatile_sigma),
            ("eth_usd_sigma", m.eth_usd_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(format!("market.{name}: must be a non-negative number"));
            }
        }
        if !(m.eth_usd_start.is_finite() && m.eth_usd_start > 0.0) {
            errs.push("market.eth_usd_start: must be positive".into());
        }

        if !self.archetypes.iter().any(|a| a.wallet_count > 0) {
            errs.push("archetypes: at least one archetype needs wallets".into());
        }
        for (i, a) in self.archetypes.iter().enumerate() {
            let f = |name: &str| format!("archetypes[{i}].{name}");
            if self.archetypes[..i]
                .iter()
                .any(|b| b.archetype == a.archetype)
            {
                errs.push(format!("{}: {} listed twice", f("archetype"), a.archetype));
            }
            if !(a.trade_rate.is_finite() && a.trade_rate >= 0.0) {
                errs.push(format!("{}: rates must be non-negative", f("trade_rate")));
            }
            if !(0.0..=1.0).contains(&a.transfer_probability) {
                errs.push(format!(
                    "{}: probabilities lie in [0, 1]",
                    f("transfer_probability")
                ));
            }
            check_range_u(&mut errs, f("active_days"), a.active_days);
            check_range_u(&mut errs, f("counterparty_pool"), a.counterparty_pool);
            check_range_u(&mut errs, f("holding_days"), a.holding_days);
            check_range_u(&mut errs, f("purchases"), a.purchases);
            check_range_u(&mut errs, f("mint_offset_days"), a.mint_offset_days);
            check_range_f(&mut errs, f("buy_markup"), a.buy_markup, true);
            check_range_f(&mut errs, f("markup"), a.markup, true);
            if a.active_days[1] >= m.duration_days {
                errs.push(format!(
                    "{}: window must fit inside duration_days",
                    f("active_days")
                ));
            }
            if a.archetype == Archetype::WashTrader && a.counterparty_pool[0] < 2 {
                errs.push(format!(
                    "{}: rings need at least 2 wallets",
                    f("counterparty_pool")
                ));
            }
        }
        let has = |k: Archetype| {
            self.archetypes
                .iter()
                .any(|a| a.archetype == k && a.wallet_count > 0)
        };
        if !has(Archetype::Retail)
            && self
                .archetypes
                .iter()
                .any(|a| a.wallet_count > 0 && a.archetype != Archetype::Hodler)
        {
            errs.push("archetypes: trading archetypes need a Retail market to trade with".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn archetype(&self, kind: Archetype) -> Option<&ArchetypeConfig> {
        self.archetypes.iter().find(|a| a.archetype == kind)
    }
}
