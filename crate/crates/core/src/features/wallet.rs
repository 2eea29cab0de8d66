use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use super::series::{collection_daily_series, CollectionDailySeries, Regime, Volatility};
use super::FEATURE_COUNT;
use crate::error::{Error, Result};
use crate::ingest::{chronological_order, RateTable, TransactionRecord};
use crate::stats::{mean, population_sd};

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct WalletFeatures {
    pub wallet: String,
    pub in_degree: f64,
    pub out_degree: f64,
    pub unique_in_ratio: f64,
    pub unique_out_ratio: f64,
    pub total_in_usd: f64,
    pub total_out_usd: f64,
    pub avg_in_usd: f64,
    pub avg_out_usd: f64,
    pub sd_in_usd: f64,
    pub sd_out_usd: f64,
    pub profit_transfers_usd: f64,
    pub profit_ratio: f64,
    pub transfer_ratio: f64,
    pub relative_sell: f64,
    pub relative_buy: f64,
    pub in_interval_days: f64,
    pub out_interval_days: f64,
    pub diff_interval_days: f64,
    pub max_trans_per_day: f64,
    pub avg_trans_per_day: f64,
    pub sd_trans_per_day: f64,
    pub avg_minted_days: f64,
    pub market_trend_buy: f64,
    pub market_trend_sell: f64,
    pub buy_atr: f64,
    pub sell_atr: f64,
}

impl WalletFeatures {
    /// Values in `FEATURE_NAMES` order.
    pub fn to_row(&self) -> [f64; FEATURE_COUNT] {
        [
            self.in_degree,
            self.out_degree,
            self.unique_in_ratio,
            self.unique_out_ratio,
            self.total_in_usd,
            self.total_out_usd,
            self.avg_in_usd,
            self.avg_out_usd,
            self.sd_in_usd,
            self.sd_out_usd,
            self.profit_transfers_usd,
            self.profit_ratio,
            self.transfer_ratio,
            self.relative_sell,
            self.relative_buy,
            self.in_interval_days,
            self.out_interval_days,
            self.diff_interval_days,
            self.max_trans_per_day,
            self.avg_trans_per_day,
            self.sd_trans_per_day,
            self.avg_minted_days,
            self.market_trend_buy,
            self.market_trend_sell,
            self.buy_atr,
            self.sell_atr,
        ]
    }
}

/// One ledger record with its wallet, token and market context resolved.
#[derive(Debug, Clone, Copy)]
struct Event {
    from: u32,
    to: u32,
    token: u32,
    seconds: f64,
    day: i64,
    mint_day: i64,
    value_eth: f64,
    usd: f64,
    ema7: f64,
    bull: bool,
    volatile: bool,
}

impl Event {
    fn is_sale(&self) -> bool {
        self.value_eth > 0.0
    }
}

/// Interned, chronologically ordered view of a ledger.
pub struct LedgerIndex {
    wallets: Vec<String>,
    events: Vec<Event>,
    by_wallet: Vec<Vec<u32>>,
    series: BTreeMap<String, CollectionDailySeries>,
}

fn day_number(d: NaiveDate) -> i64 {
    d.signed_duration_since(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap())
        .num_days()
}

impl LedgerIndex {
    pub fn build(records: &[TransactionRecord], rates: &RateTable) -> Result<Self> {
        let order = chronological_order(records);

        let addresses: BTreeSet<&str> = records
            .iter()
            .flat_map(|r| [r.from_address.as_str(), r.to_address.as_str()])
            .collect();
        let wallets: Vec<String> = addresses.iter().map(|s| s.to_string()).collect();
        let wallet_id: HashMap<&str, u32> = addresses
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, i as u32))
            .collect();

        let mut by_collection: BTreeMap<&str, Vec<&TransactionRecord>> = BTreeMap::new();
        for &i in &order {
            let r = &records[i];
            if r.value_eth > 0.0 {
                by_collection.entry(&r.token_address).or_default().push(r);
            }
        }
        let series: BTreeMap<String, CollectionDailySeries> = by_collection
            .par_iter()
            .map(|(c, sales)| {
                collection_daily_series(sales.iter().copied()).map(|s| (c.to_string(), s))
            })
            .collect::<Result<_>>()?;

        let mut token_id: HashMap<(&str, &str), u32> = HashMap::new();
        let mut mint_days: Vec<i64> = Vec::new();
        let mut events = Vec::with_capacity(records.len());
        for &i in &order {
            let r = &records[i];
            let key = (r.token_address.as_str(), r.token_id.as_str());
            let day = r.day();
            let token = *token_id.entry(key).or_insert_with(|| {
                mint_days.push(day_number(day));
                (mint_days.len() - 1) as u32
            });
            let usd = if r.value_eth > 0.0 {
                r.value_eth * rates.rate_on(day)?.eth_usd
            } else {
                0.0
            };
            let (ema7, bull, volatile) = if r.value_eth > 0.0 {
                let p = series[&r.token_address]
                    .on(day)
                    .expect("every sale day is a trading day");
                (
                    p.ema7,
                    p.regime == Regime::Bull,
                    p.volatility == Volatility::Volatile,
                )
            } else {
                (0.0, false, false)
            };
            events.push(Event {
                from: wallet_id[r.from_address.as_str()],
                to: wallet_id[r.to_address.as_str()],
                token,
                seconds: r.timestamp.timestamp() as f64
                    + r.timestamp.timestamp_subsec_nanos() as f64 * 1e-9,
                day: day_number(day),
                mint_day: mint_days[token as usize],
                value_eth: r.value_eth,
                usd,
                ema7,
                bull,
                volatile,
            });
        }

        let mut by_wallet: Vec<Vec<u32>> = vec![Vec::new(); wallets.len()];
        for (i, e) in events.iter().enumerate() {
            by_wallet[e.from as usize].push(i as u32);
            if e.to != e.from {
                by_wallet[e.to as usize].push(i as u32);
            }
        }

        Ok(Self {
            wallets,
            events,
            by_wallet,
            series,
        })
    }

    pub fn wallets(&self) -> &[String] {
        &self.wallets
    }

    pub fn series(&self) -> &BTreeMap<String, CollectionDailySeries> {
        &self.series
    }

    pub fn transaction_count(&self) -> usize {
        self.events.len()
    }

    fn wallet_events(&self, w: usize) -> impl Iterator<Item = &Event> + '_ {
        self.by_wallet[w]
            .iter()
            .map(move |&i| &self.events[i as usize])
    }

    /// In-degree, out-degree and the two unique-counterparty ratios.
    pub fn network_features(&self, w: usize, f: &mut WalletFeatures) {
        let w = w as u32;
        let mut sellers = HashSet::new();
        let mut buyers = HashSet::new();
        let (mut indeg, mut outdeg) = (0usize, 0usize);
        for e in self.wallet_events(w as usize) {
            if e.to == w {
                indeg += 1;
                sellers.insert(e.from);
            }
            if e.from == w {
                outdeg += 1;
                buyers.insert(e.to);
            }
        }
        f.in_degree = indeg as f64;
        f.out_degree = outdeg as f64;
        f.unique_in_ratio = ratio(sellers.len(), indeg);
        f.unique_out_ratio = ratio(buyers.len(), outdeg);
    }

    /// Volume statistics, transfer profit, LIFO profit ratio, transfer ratio
    /// and prices relative to the collection EMA7.
    pub fn monetary_features(&self, w: usize, f: &mut WalletFeatures) {
        let w = w as u32;
        let mut buys_usd = Vec::new();
        let mut sells_usd = Vec::new();
        let mut rel_buy = Vec::new();
        let mut rel_sell = Vec::new();
        let mut profit_ratios = Vec::new();
        let mut profit_transfers = 0.0;
        let mut transfers = 0usize;
        let mut total = 0usize;
        // Per token: stack of non-zero acquisition prices, and whether the
        // currently held copy arrived by transfer.
        let mut cost_stack: HashMap<u32, Vec<f64>> = HashMap::new();
        let mut held_by_transfer: HashMap<u32, bool> = HashMap::new();

        for e in self.wallet_events(w as usize) {
            total += 1;
            if !e.is_sale() {
                transfers += 1;
            }
            if e.from == w {
                if e.is_sale() {
                    sells_usd.push(e.usd);
                    rel_sell.push(e.value_eth / e.ema7);
                    if held_by_transfer.get(&e.token) == Some(&true) {
                        profit_transfers += e.usd;
                    }
                    if let Some(cost) = cost_stack.get_mut(&e.token).and_then(Vec::pop) {
                        profit_ratios.push((e.usd - cost) / cost);
                    }
                }
                held_by_transfer.remove(&e.token);
            }
            if e.to == w {
                if e.is_sale() {
                    buys_usd.push(e.usd);
                    rel_buy.push(e.value_eth / e.ema7);
                    cost_stack.entry(e.token).or_default().push(e.usd);
                }
                held_by_transfer.insert(e.token, !e.is_sale());
            }
        }

        f.total_in_usd = buys_usd.iter().sum();
        f.total_out_usd = sells_usd.iter().sum();
        f.avg_in_usd = mean(&buys_usd);
        f.avg_out_usd = mean(&sells_usd);
        f.sd_in_usd = population_sd(&buys_usd);
        f.sd_out_usd = population_sd(&sells_usd);
        f.profit_transfers_usd = profit_transfers;
        f.profit_ratio = mean(&profit_ratios);
        f.transfer_ratio = ratio(transfers, total);
        f.relative_sell = mean(&rel_sell);
        f.relative_buy = mean(&rel_buy);
    }

    /// Intervals, per-day activity, token age at trade time and regime
    /// balances.
    pub fn temporal_features(&self, w: usize, f: &mut WalletFeatures) {
        let w = w as u32;
        let mut in_times = Vec::new();
        let mut out_times = Vec::new();
        let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
        let mut minted_days = Vec::new();
        let (mut buys, mut buy_bull, mut buy_volatile) = (0i64, 0i64, 0i64);
        let (mut sells, mut sell_bull, mut sell_volatile) = (0i64, 0i64, 0i64);

        for e in self.wallet_events(w as usize) {
            *per_day.entry(e.day).or_default() += 1;
            minted_days.push((e.day - e.mint_day) as f64);
            if e.to == w {
                in_times.push(e.seconds);
                if e.is_sale() {
                    buys += 1;
                    buy_bull += e.bull as i64;
                    buy_volatile += e.volatile as i64;
                }
            }
            if e.from == w {
                out_times.push(e.seconds);
                if e.is_sale() {
                    sells += 1;
                    sell_bull += e.bull as i64;
                    sell_volatile += e.volatile as i64;
                }
            }
        }

        f.in_interval_days = mean_gap_days(&in_times);
        f.out_interval_days = mean_gap_days(&out_times);
        f.diff_interval_days = f.in_interval_days - f.out_interval_days;
        let counts: Vec<f64> = per_day.values().map(|&c| c as f64).collect();
        f.max_trans_per_day = counts.iter().copied().fold(0.0, f64::max);
        f.avg_trans_per_day = mean(&counts);
        f.sd_trans_per_day = population_sd(&counts);
        f.avg_minted_days = mean(&minted_days);
        f.market_trend_buy = balance(buy_bull, buys);
        f.market_trend_sell = balance(sell_bull, sells);
        f.buy_atr = balance(buy_volatile, buys);
        f.sell_atr = balance(sell_volatile, sells);
    }

    pub fn wallet_features(&self, w: usize) -> WalletFeatures {
        let mut f = WalletFeatures {
            wallet: self.wallets[w].clone(),
            ..Default::default()
        };
        self.network_features(w, &mut f);
        self.monetary_features(w, &mut f);
        self.temporal_features(w, &mut f);
        f
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// (hits - misses) / total, where hits counts one side of a binary split.
fn balance(hits: i64, total: i64) -> f64 {
    if total == 0 {
        0.0
    } else {
        (2 * hits - total) as f64 / total as f64
    }
}

/// Mean gap between consecutive sorted timestamps, in fractional days.
fn mean_gap_days(times: &[f64]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64 / SECONDS_PER_DAY
}

/// Computes every wallet's features, ordered lexicographically by address.
pub fn extract_features(
    records: &[TransactionRecord],
    rates: &RateTable,
) -> Result<(LedgerIndex, Vec<WalletFeatures>)> {
    if records.is_empty() {
        return Err(Error::NoWallets);
    }
    let index = LedgerIndex::build(records, rates)?;
    let features = (0..index.wallets.len())
        .into_par_iter()
        .map(|w| index.wallet_features(w))
        .collect();
    Ok((index, features))
}
