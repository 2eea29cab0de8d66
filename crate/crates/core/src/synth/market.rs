use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, Duration, NaiveTime, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::Serialize;

use super::config::{Archetype, ArchetypeConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::ingest::{Rate, RateTable, TransactionRecord};

const SECONDS_PER_DAY: i64 = 86_400;
const FIRST_BLOCK: u64 = 14_000_000;
const BLOCK_SECONDS: i64 = 12;
/// Probability that a wash ring trades on an eligible calm day.
const RING_ACTIVE_PROBABILITY: f64 = 0.8;
/// Share of collector resales bought by another collector rather than retail.
const COLLECTOR_TO_COLLECTOR: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Cheap,
    Mid,
    Premium,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectionInfo {
    pub address: String,
    pub tier: Tier,
    pub mint_day: u32,
    pub tokens: u32,
}

#[derive(Debug, Clone)]
pub struct SyntheticLedger {
    pub transactions: Vec<TransactionRecord>,
    pub truth: BTreeMap<String, Archetype>,
    pub rates: RateTable,
    pub collections: Vec<CollectionInfo>,
}

impl SyntheticLedger {
    pub fn write_truth_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["wallet", "archetype"])?;
        for (wallet, a) in &self.truth {
            wtr.write_record([wallet.as_str(), a.as_str()])?;
        }
        wtr.flush().map_err(|e| Error::io("truth.csv", e))
    }
}

pub fn read_truth_csv<R: std::io::Read>(r: R) -> Result<BTreeMap<String, Archetype>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let a = Archetype::parse(rec.get(1).unwrap_or(""))
            .ok_or_else(|| Error::InvalidInput(format!("unknown archetype in {rec:?}")))?;
        out.insert(rec.get(0).unwrap_or("").to_string(), a);
    }
    Ok(out)
}

fn uniform_u(rng: &mut ChaCha8Rng, r: [u32; 2]) -> u32 {
    rng.random_range(r[0]..=r[1])
}

fn uniform_f(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map_or(0, |d| d.sample(rng) as u32)
}

fn address(rng: &mut ChaCha8Rng) -> String {
    let bytes: [u8; 20] = rng.random();
    let mut s = String::with_capacity(42);
    s.push_str("0x");
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// An unordered set of tokens with O(1) insert, remove and random pick.
#[derive(Debug, Default, Clone)]
struct Pool {
    items: Vec<usize>,
}

impl Pool {
    fn insert(&mut self, t: usize, pos: &mut [usize]) {
        pos[t] = self.items.len();
        self.items.push(t);
    }

    fn remove(&mut self, t: usize, pos: &mut [usize]) {
        let i = pos[t];
        let last = *self.items.last().expect("token present");
        self.items.swap_remove(i);
        if last != t {
            pos[last] = i;
        }
        pos[t] = usize::MAX;
    }
}

struct Collection {
    info: CollectionInfo,
    first_token: usize,
    /// Walk price per day from mint on; `None` before mint.
    price: Vec<Option<f64>>,
    calm: Vec<bool>,
    /// Days elapsed in the current regime block.
    block_age: Vec<u32>,
}

impl Collection {
    fn price_on(&self, day: u32) -> Option<f64> {
        self.price.get(day as usize).copied().flatten()
    }
}

struct Wallet {
    address: String,
    archetype: Archetype,
    holdings: Vec<usize>,
    active_from: u32,
    active_to: u32,
}

struct PendingTrade {
    token: usize,
    from: usize,
    to: usize,
    value_eth: f64,
}

struct Ring {
    members: Vec<usize>,
    collection: usize,
    tokens_wanted: u32,
    start: u32,
    end: u32,
    acquired: bool,
}

struct CollectorPlan {
    wallet: usize,
    remaining: u32,
    /// (token, resale day)
    resales: Vec<(usize, u32)>,
}

struct InactivePlan {
    wallet: usize,
    buy_days: Vec<u32>,
    sell_day: u32,
}

struct Market {
    rng: ChaCha8Rng,
    cfg: SynthConfig,
    collections: Vec<Collection>,
    token_collection: Vec<usize>,
    token_mint_day: Vec<u32>,
    owner: Vec<Option<usize>>,
    wallets: Vec<Wallet>,
    retail: Vec<usize>,
    /// Retail-held tokens overall and per collection.
    retail_pool: Pool,
    retail_pool_pos: Vec<usize>,
    collection_pool: Vec<Pool>,
    collection_pool_pos: Vec<usize>,
    today: Vec<PendingTrade>,
    records: Vec<TransactionRecord>,
}

impl Market {
    fn params(&self, kind: Archetype) -> Option<ArchetypeConfig> {
        self.cfg
            .archetype(kind)
            .filter(|a| a.wallet_count > 0)
            .cloned()
    }

    fn is_retail(&self, w: usize) -> bool {
        self.wallets[w].archetype == Archetype::Retail
    }

    fn noise_sigma(&self, c: usize, day: u32) -> f64 {
        let col = &self.collections[c];
        if col.calm[day as usize] {
            self.cfg.market.calm_sigma
        } else {
            self.cfg.market.volatile_sigma
        }
    }

    /// Market price of a trade in collection `c` today, scaled by `markup`
    /// and perturbed by regime-dependent noise.
    fn trade_price(&mut self, c: usize, day: u32, markup: f64, noisy: bool) -> f64 {
        let base = self.collections[c]
            .price_on(day)
            .expect("collection minted");
        let eps = if noisy {
            let s = self.noise_sigma(c, day);
            Normal::new(0.0, s).map_or(0.0, |d| d.sample(&mut self.rng))
        } else {
            0.0
        };
        let p = base * markup * eps.exp();
        ((p * 1e6).round() / 1e6).max(1e-6)
    }

    fn trade(&mut self, token: usize, from: usize, to: usize, value_eth: f64) {
        debug_assert_eq!(self.owner[token], Some(from));
        debug_assert_ne!(from, to);
        let c = self.token_collection[token];
        if self.is_retail(from) {
            self.retail_pool.remove(token, &mut self.retail_pool_pos);
            self.collection_pool[c].remove(token, &mut self.collection_pool_pos);
        }
        if self.is_retail(to) {
            self.retail_pool.insert(token, &mut self.retail_pool_pos);
            self.collection_pool[c].insert(token, &mut self.collection_pool_pos);
        }
        let h = &mut self.wallets[from].holdings;
        if let Some(i) = h.iter().position(|&t| t == token) {
            h.swap_remove(i);
        }
        self.wallets[to].holdings.push(token);
        self.owner[token] = Some(to);
        self.today.push(PendingTrade {
            token,
            from,
            to,
            value_eth,
        });
    }

    /// First sale of a freshly minted token from its issuer.
    fn mint(&mut self, token: usize, issuer: usize, buyer: usize, value_eth: f64) {
        self.owner[token] = Some(issuer);
        self.wallets[issuer].holdings.push(token);
        if self.is_retail(issuer) {
            let c = self.token_collection[token];
            self.retail_pool.insert(token, &mut self.retail_pool_pos);
            self.collection_pool[c].insert(token, &mut self.collection_pool_pos);
        }
        self.trade(token, issuer, buyer, value_eth);
    }

    fn random_retail(&mut self, exclude: usize) -> Option<usize> {
        if self.retail.is_empty() || (self.retail.len() == 1 && self.retail[0] == exclude) {
            return None;
        }
        loop {
            let w = self.retail[self.rng.random_range(0..self.retail.len())];
            if w != exclude {
                return Some(w);
            }
        }
    }

    fn random_active_retail(&mut self, day: u32, exclude: usize) -> Option<usize> {
        for _ in 0..16 {
            let w = self.random_retail(exclude)?;
            let wl = &self.wallets[w];
            if (wl.active_from..=wl.active_to).contains(&day) {
                return Some(w);
            }
        }
        self.random_retail(exclude)
    }

    /// A retail-held token not owned by `buyer`, optionally restricted to
    /// one collection or filtered by a predicate.
    fn pick_retail_token(
        &mut self,
        buyer: usize,
        collection: Option<usize>,
        accept: impl Fn(&Market, usize) -> bool,
    ) -> Option<usize> {
        for _ in 0..32 {
            let pool = match collection {
                Some(c) => &self.collection_pool[c],
                None => &self.retail_pool,
            };
            if pool.items.is_empty() {
                return None;
            }
            let t = pool.items[self.rng.random_range(0..pool.items.len())];
            if self.owner[t] != Some(buyer) && accept(self, t) {
                return Some(t);
            }
        }
        None
    }

    fn flush_day(&mut self, day: u32) {
        let n = self.today.len();
        if n == 0 {
            return;
        }
        let n_slots = SECONDS_PER_DAY as usize;
        let mut offsets: Vec<i64> = if n <= n_slots {
            rand::seq::index::sample(&mut self.rng, n_slots, n)
                .into_iter()
                .map(|s| s as i64)
                .collect()
        } else {
            (0..n)
                .map(|_| self.rng.random_range(0..SECONDS_PER_DAY))
                .collect()
        };
        offsets.sort_unstable();
        let midnight = DateTime::<Utc>::from_naive_utc_and_offset(
            self.cfg.market.start_date.and_time(NaiveTime::MIN),
            Utc,
        ) + Duration::days(day as i64);
        for (trade, off) in std::mem::take(&mut self.today).into_iter().zip(offsets) {
            let ts = midnight + Duration::seconds(off);
            let elapsed = day as i64 * SECONDS_PER_DAY + off;
            let c = self.token_collection[trade.token];
            self.records.push(TransactionRecord {
                token_address: self.collections[c].info.address.clone(),
                token_id: (trade.token - self.collections[c].first_token).to_string(),
                from_address: self.wallets[trade.from].address.clone(),
                to_address: self.wallets[trade.to].address.clone(),
                value_eth: trade.value_eth,
                block_number: FIRST_BLOCK + (elapsed / BLOCK_SECONDS) as u64,
                timestamp: ts,
            });
        }
    }
}

fn build_collections(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Collection> {
    let m = &cfg.market;
    let days = m.duration_days as usize;
    let tiers = std::iter::repeat_n(Tier::Cheap, m.cheap_collections)
        .chain(std::iter::repeat_n(Tier::Mid, m.mid_collections))
        .chain(std::iter::repeat_n(Tier::Premium, m.premium_collections));
    let mut first_token = 0;
    let mut out = Vec::new();
    for tier in tiers {
        let address = address(rng);
        let mint_day = rng.random_range(0..=m.mint_window_days);
        let tokens = uniform_u(rng, m.tokens_per_collection);
        let base = uniform_f(
            rng,
            match tier {
                Tier::Cheap => m.cheap_price_eth,
                Tier::Mid => m.mid_price_eth,
                Tier::Premium => m.premium_price_eth,
            },
        );
        let mut calm = vec![true; days];
        let mut block_age = vec![0; days];
        let mut is_calm = rng.random_bool(0.5);
        let mut left = uniform_u(rng, m.regime_block_days);
        let mut age = 0;
        for d in 0..days {
            if left == 0 {
                is_calm = !is_calm;
                left = uniform_u(rng, m.regime_block_days);
                age = 0;
            }
            calm[d] = is_calm;
            block_age[d] = age;
            age += 1;
            left -= 1;
        }
        let mut price = vec![None; days];
        let mut log_p = base.ln();
        for d in mint_day as usize..days {
            if d > mint_day as usize {
                let s = if calm[d] {
                    m.calm_sigma
                } else {
                    m.volatile_sigma
                };
                log_p += Normal::new(0.0, s).map_or(0.0, |n| n.sample(rng));
            }
            price[d] = Some(log_p.exp());
        }
        out.push(Collection {
            info: CollectionInfo {
                address,
                tier,
                mint_day,
                tokens,
            },
            first_token,
            price,
            calm,
            block_age,
        });
        first_token += tokens as usize;
    }
    out
}

fn build_rates(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<RateTable> {
    let m = &cfg.market;
    let mut usd = m.eth_usd_start;
    let mut entries = Vec::with_capacity(m.duration_days as usize);
    for d in 0..m.duration_days {
        if d > 0 {
            usd *= Normal::new(0.0, m.eth_usd_sigma)
                .map_or(0.0, |n| n.sample(rng))
                .exp();
        }
        let gas = rng.random_range(0.001..0.004);
        entries.push((
            m.start_date + Duration::days(d as i64),
            Rate {
                eth_usd: (usd * 100.0).round() / 100.0,
                gas_eth: (gas * 1e6f64).round() / 1e6,
            },
        ));
    }
    RateTable::from_entries(entries)
}

/// Generates a ledger with planted archetypes. The same config always
/// yields the same ledger.
pub fn generate_market(cfg: &SynthConfig) -> Result<SyntheticLedger> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.market.clone();
    let days = m.duration_days;
    let rates = build_rates(cfg, &mut rng)?;
    let collections = build_collections(cfg, &mut rng);
    let n_tokens: usize = collections.iter().map(|c| c.info.tokens as usize).sum();
    let mut token_collection = Vec::with_capacity(n_tokens);
    let mut token_mint_day = Vec::with_capacity(n_tokens);
    for (ci, c) in collections.iter().enumerate() {
        for _ in 0..c.info.tokens {
            token_collection.push(ci);
            let d = (c.info.mint_day + rng.random_range(0..=2)).min(days - 1);
            token_mint_day.push(d);
        }
    }

    // Wallets, in a shuffled order so addresses carry no archetype signal.
    let mut wallets = Vec::new();
    for a in &cfg.archetypes {
        for _ in 0..a.wallet_count {
            let len = uniform_u(&mut rng, a.active_days).min(days - 1);
            let from = rng.random_range(0..=(days - 1 - len));
            wallets.push(Wallet {
                address: address(&mut rng),
                archetype: a.archetype,
                holdings: Vec::new(),
                active_from: from,
                active_to: from + len,
            });
        }
    }
    wallets.shuffle(&mut rng);
    let retail: Vec<usize> = (0..wallets.len())
        .filter(|&w| wallets[w].archetype == Archetype::Retail)
        .collect();
    let creators_only = retail.is_empty();
    if creators_only {
        // Without a retail market each collection gets a creator wallet that
        // hands out its tokens as zero-value mints.
        for _ in 0..collections.len() {
            wallets.push(Wallet {
                address: address(&mut rng),
                archetype: Archetype::Retail,
                holdings: Vec::new(),
                active_from: 0,
                active_to: 0,
            });
        }
    }

    let mut market = Market {
        rng,
        cfg: cfg.clone(),
        token_collection,
        token_mint_day,
        owner: vec![None; n_tokens],
        retail_pool: Pool::default(),
        retail_pool_pos: vec![usize::MAX; n_tokens],
        collection_pool: vec![Pool::default(); collections.len()],
        collection_pool_pos: vec![usize::MAX; n_tokens],
        collections,
        wallets,
        retail,
        today: Vec::new(),
        records: Vec::new(),
    };

    // Primary buyers: hodlers claim tokens of one collection each; the rest
    // go to retail.
    let mut primary_buyer: Vec<Option<usize>> = vec![None; n_tokens];
    if let Some(h) = market.params(Archetype::Hodler) {
        let hodlers: Vec<usize> = (0..market.wallets.len())
            .filter(|&w| market.wallets[w].archetype == Archetype::Hodler)
            .collect();
        let mut free: Vec<Vec<usize>> = market
            .collections
            .iter()
            .map(|c| (c.first_token..c.first_token + c.info.tokens as usize).collect())
            .collect();
        for f in free.iter_mut() {
            f.shuffle(&mut market.rng);
        }
        for w in hodlers {
            let want = uniform_u(&mut market.rng, h.purchases).max(1);
            let open: Vec<usize> = (0..free.len()).filter(|&c| !free[c].is_empty()).collect();
            let Some(&c) = open.get(market.rng.random_range(0..open.len().max(1))) else {
                break;
            };
            for _ in 0..want {
                if let Some(t) = free[c].pop() {
                    primary_buyer[t] = Some(w);
                }
            }
        }
    }
    let mut issuer: Vec<usize> = Vec::with_capacity(n_tokens);
    if creators_only {
        let base = market.wallets.len() - market.collections.len();
        for t in 0..n_tokens {
            issuer.push(base + market.token_collection[t]);
        }
    } else {
        let mut order = market.retail.clone();
        for t in 0..n_tokens {
            if t % order.len() == 0 {
                order.shuffle(&mut market.rng);
            }
            issuer.push(order[t % order.len()]);
        }
    }
    let mut mints_by_day: Vec<Vec<usize>> = vec![Vec::new(); days as usize];
    for t in 0..n_tokens {
        mints_by_day[market.token_mint_day[t] as usize].push(t);
    }

    let retail_cfg = market.params(Archetype::Retail);
    let mut rings = plan_rings(&mut market);
    let mut collectors = plan_collectors(&mut market);
    let mut inactive = plan_inactive(&mut market);
    let institutional_cfg = market.params(Archetype::Institutional);
    let institutions: Vec<usize> = (0..market.wallets.len())
        .filter(|&w| market.wallets[w].archetype == Archetype::Institutional)
        .collect();

    for day in 0..days {
        // primary sales
        for t in std::mem::take(&mut mints_by_day[day as usize]) {
            let c = market.token_collection[t];
            let seller = issuer[t];
            if creators_only {
                if let Some(b) = primary_buyer[t] {
                    market.mint(t, seller, b, 0.0);
                }
                continue;
            }
            let buyer = match primary_buyer[t] {
                Some(b) => Some(b),
                None => market.random_active_retail(day, seller),
            };
            if let Some(b) = buyer {
                let p = market.trade_price(c, day, 1.0, true);
                market.mint(t, seller, b, p);
            }
        }

        if let Some(r) = &retail_cfg {
            retail_day(&mut market, r, day);
        }
        inactive_day(&mut market, &mut inactive, day);
        collector_day(&mut market, &mut collectors, day);
        ring_day(&mut market, &mut rings, day);
        if let Some(cfg) = &institutional_cfg {
            institutional_day(&mut market, cfg, &institutions, day);
        }
        market.flush_day(day);
    }

    let truth = market
        .wallets
        .iter()
        .map(|w| (w.address.clone(), w.archetype))
        .collect();
    Ok(SyntheticLedger {
        transactions: market.records,
        truth,
        rates,
        collections: market.collections.into_iter().map(|c| c.info).collect(),
    })
}

fn retail_day(market: &mut Market, r: &ArchetypeConfig, day: u32) {
    for i in 0..market.retail.len() {
        let w = market.retail[i];
        let (from, to) = (market.wallets[w].active_from, market.wallets[w].active_to);
        if day < from || day > to {
            continue;
        }
        let mut n = poisson(&mut market.rng, r.trade_rate);
        if day == from {
            n = n.max(1);
        }
        for _ in 0..n {
            let Some(t) = market.pick_retail_token(w, None, |m, t| {
                m.collections[m.token_collection[t]].info.tier != Tier::Premium
            }) else {
                break;
            };
            let seller = market.owner[t].expect("owned");
            let c = market.token_collection[t];
            let value = if market.rng.random_bool(r.transfer_probability) {
                0.0
            } else {
                let mk = uniform_f(&mut market.rng, r.buy_markup);
                market.trade_price(c, day, mk, true)
            };
            market.trade(t, seller, w, value);
        }
    }
}

fn plan_inactive(market: &mut Market) -> Vec<InactivePlan> {
    let Some(p) = market.params(Archetype::Inactive) else {
        return Vec::new();
    };
    let days = market.cfg.market.duration_days;
    let earliest = market
        .collections
        .iter()
        .map(|c| c.info.mint_day + 3)
        .min()
        .unwrap_or(0);
    let mut out = Vec::new();
    for w in 0..market.wallets.len() {
        if market.wallets[w].archetype != Archetype::Inactive {
            continue;
        }
        let n = uniform_u(&mut market.rng, p.purchases).max(1);
        let gaps: Vec<u32> = (1..n)
            .map(|_| uniform_u(&mut market.rng, p.holding_days))
            .collect();
        let span: u32 = gaps.iter().sum();
        let tail = uniform_u(&mut market.rng, p.mint_offset_days);
        let latest_start = days.saturating_sub(span + tail + 1).max(earliest);
        let start = market.rng.random_range(earliest..=latest_start);
        let mut buy_days = vec![start];
        for g in gaps {
            buy_days.push(buy_days.last().unwrap() + g);
        }
        let sell_day = buy_days.last().unwrap() + tail;
        out.push(InactivePlan {
            wallet: w,
            buy_days: buy_days.into_iter().filter(|&d| d < days).collect(),
            sell_day: sell_day.min(days - 1),
        });
    }
    out
}

fn inactive_day(market: &mut Market, plans: &mut [InactivePlan], day: u32) {
    let Some(p) = market.params(Archetype::Inactive) else {
        return;
    };
    for plan in plans.iter_mut() {
        let w = plan.wallet;
        if plan.buy_days.contains(&day) {
            if let Some(t) = market.pick_retail_token(w, None, |_, _| true) {
                let seller = market.owner[t].expect("owned");
                let mk = uniform_f(&mut market.rng, p.buy_markup);
                let v = market.trade_price(market.token_collection[t], day, mk, true);
                market.trade(t, seller, w, v);
            }
        }
        if day == plan.sell_day && !market.wallets[w].holdings.is_empty() {
            let t = market.wallets[w].holdings[0];
            if let Some(b) = market.random_active_retail(day, w) {
                let mk = uniform_f(&mut market.rng, p.markup);
                let v = market.trade_price(market.token_collection[t], day, mk, true);
                market.trade(t, w, b, v);
            }
        }
    }
}

fn plan_collectors(market: &mut Market) -> Vec<CollectorPlan> {
    let Some(p) = market.params(Archetype::Collector) else {
        return Vec::new();
    };
    (0..market.wallets.len())
        .filter(|&w| market.wallets[w].archetype == Archetype::Collector)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|w| CollectorPlan {
            wallet: w,
            remaining: uniform_u(&mut market.rng, p.purchases),
            resales: Vec::new(),
        })
        .collect()
}

fn collector_day(market: &mut Market, plans: &mut [CollectorPlan], day: u32) {
    let Some(p) = market.params(Archetype::Collector) else {
        return;
    };
    let premium: Vec<usize> = (0..market.collections.len())
        .filter(|&c| market.collections[c].info.tier == Tier::Premium)
        .collect();
    let mut handoffs: Vec<(usize, usize)> = Vec::new();
    for pi in 0..plans.len() {
        let w = plans[pi].wallet;
        // resales due today
        let mut i = 0;
        while i < plans[pi].resales.len() {
            let (t, due) = plans[pi].resales[i];
            if due <= day && market.owner[t] == Some(w) {
                let to_collector =
                    plans.len() > 1 && market.rng.random_bool(COLLECTOR_TO_COLLECTOR);
                let buyer = if to_collector {
                    let mut q = market.rng.random_range(0..plans.len() - 1);
                    if q >= pi {
                        q += 1;
                    }
                    Some((plans[q].wallet, Some(q)))
                } else {
                    market.random_active_retail(day, w).map(|b| (b, None))
                };
                if let Some((b, plan)) = buyer {
                    let mk = uniform_f(&mut market.rng, p.markup);
                    let v = market.trade_price(market.token_collection[t], day, mk, true);
                    market.trade(t, w, b, v);
                    if let Some(q) = plan {
                        handoffs.push((q, t));
                    }
                }
                plans[pi].resales.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let wl = &market.wallets[w];
        if plans[pi].remaining == 0 || day < wl.active_from || day > wl.active_to {
            continue;
        }
        let left = (wl.active_to - day + 1) as f64;
        let rate = p.trade_rate.max(plans[pi].remaining as f64 / left);
        if premium.is_empty() || !market.rng.random_bool(rate.min(1.0)) {
            continue;
        }
        let c = premium[market.rng.random_range(0..premium.len())];
        let min_age = p.mint_offset_days[0];
        let max_age = p.mint_offset_days[1];
        let Some(t) = market.pick_retail_token(w, Some(c), |m, t| {
            let age = day.saturating_sub(m.token_mint_day[t]);
            day >= m.token_mint_day[t] && (min_age..=max_age).contains(&age)
        }) else {
            continue;
        };
        let seller = market.owner[t].expect("owned");
        let mk = uniform_f(&mut market.rng, p.buy_markup);
        let v = market.trade_price(c, day, mk, true);
        market.trade(t, seller, w, v);
        let hold = uniform_u(&mut market.rng, p.holding_days);
        plans[pi].resales.push((t, day + hold));
        plans[pi].remaining -= 1;
    }
    for (q, t) in handoffs {
        let hold = uniform_u(&mut market.rng, p.holding_days);
        plans[q].resales.push((t, day + hold));
    }
}

fn plan_rings(market: &mut Market) -> Vec<Ring> {
    let Some(p) = market.params(Archetype::WashTrader) else {
        return Vec::new();
    };
    let days = market.cfg.market.duration_days;
    let mut members: Vec<usize> = (0..market.wallets.len())
        .filter(|&w| market.wallets[w].archetype == Archetype::WashTrader)
        .collect();
    members.shuffle(&mut market.rng);
    let cheap: Vec<usize> = (0..market.collections.len())
        .filter(|&c| market.collections[c].info.tier == Tier::Cheap)
        .collect();
    let targets = if cheap.is_empty() {
        (0..market.collections.len()).collect()
    } else {
        cheap
    };
    let mut rings = Vec::new();
    let mut rest = &members[..];
    while !rest.is_empty() {
        let mut size = uniform_u(&mut market.rng, p.counterparty_pool) as usize;
        if rest.len() < size + p.counterparty_pool[0] as usize {
            size = rest.len();
        }
        let (ring, tail) = rest.split_at(size);
        rest = tail;
        let c = targets[market.rng.random_range(0..targets.len())];
        let mint = market.collections[c].info.mint_day + 3;
        let len = uniform_u(&mut market.rng, p.active_days);
        let latest = days.saturating_sub(len + 1).max(mint);
        let start = market.rng.random_range(mint..=latest);
        for &w in ring {
            market.wallets[w].active_from = start;
            market.wallets[w].active_to = (start + len).min(days - 1);
        }
        rings.push(Ring {
            members: ring.to_vec(),
            collection: c,
            tokens_wanted: uniform_u(&mut market.rng, p.purchases).max(1),
            start,
            end: (start + len).min(days - 1),
            acquired: false,
        });
    }
    rings
}

fn ring_day(market: &mut Market, rings: &mut [Ring], day: u32) {
    let Some(p) = market.params(Archetype::WashTrader) else {
        return;
    };
    let settle = market.cfg.market.calm_settle_days;
    for ring in rings.iter_mut() {
        if day < ring.start || day > ring.end || ring.members.len() < 2 {
            continue;
        }
        let c = ring.collection;
        if !ring.acquired {
            for i in 0..ring.tokens_wanted as usize {
                let w = ring.members[i % ring.members.len()];
                let Some(t) = market.pick_retail_token(w, Some(c), |_, _| true) else {
                    break;
                };
                let seller = market.owner[t].expect("owned");
                let v = market.trade_price(c, day, 1.0, true);
                market.trade(t, seller, w, v);
                ring.acquired = true;
            }
            continue;
        }
        let col = &market.collections[c];
        if !col.calm[day as usize] || col.block_age[day as usize] < settle {
            continue;
        }
        if !market.rng.random_bool(RING_ACTIVE_PROBABILITY) {
            continue;
        }
        let tokens: Vec<usize> = ring
            .members
            .iter()
            .flat_map(|&w| market.wallets[w].holdings.iter().copied())
            .filter(|&t| market.token_collection[t] == c)
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let n = poisson(&mut market.rng, p.trade_rate * ring.members.len() as f64).max(1);
        let mk = uniform_f(&mut market.rng, p.markup);
        let price = market.trade_price(c, day, mk, false);
        for _ in 0..n {
            let t = tokens[market.rng.random_range(0..tokens.len())];
            let from = market.owner[t].expect("owned");
            let others: Vec<usize> = ring
                .members
                .iter()
                .copied()
                .filter(|&w| w != from)
                .collect();
            let to = others[market.rng.random_range(0..others.len())];
            let v = if market.rng.random_bool(p.transfer_probability) {
                0.0
            } else {
                price
            };
            market.trade(t, from, to, v);
        }
    }
}

fn institutional_day(market: &mut Market, p: &ArchetypeConfig, who: &[usize], day: u32) {
    for &w in who {
        let wl = &market.wallets[w];
        if day < wl.active_from || day > wl.active_to {
            continue;
        }
        let n = poisson(&mut market.rng, p.trade_rate);
        for _ in 0..n {
            let sell = !market.wallets[w].holdings.is_empty() && market.rng.random_bool(0.5);
            if sell {
                let h = &market.wallets[w].holdings;
                let t = h[market.rng.random_range(0..h.len())];
                if let Some(b) = market.random_active_retail(day, w) {
                    let mk = uniform_f(&mut market.rng, p.markup);
                    let v = market.trade_price(market.token_collection[t], day, mk, true);
                    market.trade(t, w, b, v);
                }
            } else if let Some(t) = market.pick_retail_token(w, None, |_, _| true) {
                let seller = market.owner[t].expect("owned");
                let mk = uniform_f(&mut market.rng, p.buy_markup);
                let v = market.trade_price(market.token_collection[t], day, mk, true);
                market.trade(t, seller, w, v);
            }
        }
    }
}
