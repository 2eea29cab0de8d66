//! Single-file SQLite cache of accepted ledger records and rates.

use std::path::Path;

use chrono::NaiveDate;
use rusqlite::{params, Connection};

use super::{format_timestamp, parse_timestamp, Rate, RateTable, TransactionRecord};
use crate::error::{Error, Result};

pub struct LedgerStore {
    conn: Connection,
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS transactions (
    token_address   TEXT    NOT NULL,
    token_id        TEXT    NOT NULL,
    block_number    INTEGER NOT NULL,
    ordinal         INTEGER NOT NULL,
    from_address    TEXT    NOT NULL,
    to_address      TEXT    NOT NULL,
    value_eth       REAL    NOT NULL,
    block_timestamp TEXT    NOT NULL,
    PRIMARY KEY (token_address, token_id, block_number, ordinal)
);
CREATE TABLE IF NOT EXISTS rates (
    date    TEXT PRIMARY KEY,
    eth_usd REAL NOT NULL,
    gas_eth REAL NOT NULL
);
";

impl LedgerStore {
    pub fn open(path: &Path) -> Result<Self> {
        let conn = Connection::open(path)?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self { conn })
    }

    pub fn in_memory() -> Result<Self> {
        let conn = Connection::open_in_memory()?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self { conn })
    }

    /// Replaces the stored ledger and rates.
    pub fn replace(&mut self, records: &[TransactionRecord], rates: &RateTable) -> Result<()> {
        let tx = self.conn.transaction()?;
        tx.execute("DELETE FROM transactions", [])?;
        tx.execute("DELETE FROM rates", [])?;
        {
            let mut ins =
                tx.prepare("INSERT INTO transactions VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)")?;
            for (ordinal, r) in records.iter().enumerate() {
                ins.execute(params![
                    r.token_address,
                    r.token_id,
                    r.block_number as i64,
                    ordinal as i64,
                    r.from_address,
                    r.to_address,
                    r.value_eth,
                    format_timestamp(&r.timestamp),
                ])?;
            }
            let mut ins = tx.prepare("INSERT INTO rates VALUES (?1, ?2, ?3)")?;
            for (d, rate) in rates.iter() {
                ins.execute(params![
                    d.format("%Y-%m-%d").to_string(),
                    rate.eth_usd,
                    rate.gas_eth
                ])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    /// Records in their original input order.
    pub fn transactions(&self) -> Result<Vec<TransactionRecord>> {
        let mut stmt = self.conn.prepare(
            "SELECT token_address, token_id, from_address, to_address, value_eth,
                    block_number, block_timestamp
             FROM transactions ORDER BY ordinal",
        )?;
        let rows = stmt.query_map([], |row| {
            Ok((
                row.get::<_, String>(0)?,
                row.get::<_, String>(1)?,
                row.get::<_, String>(2)?,
                row.get::<_, String>(3)?,
                row.get::<_, f64>(4)?,
                row.get::<_, i64>(5)?,
                row.get::<_, String>(6)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (token_address, token_id, from_address, to_address, value_eth, block, ts) = row?;
            let timestamp = parse_timestamp(&ts)
                .ok_or_else(|| Error::InvalidInput(format!("corrupt timestamp in store: {ts}")))?;
            out.push(TransactionRecord {
                token_address,
                token_id,
                from_address,
                to_address,
                value_eth,
                block_number: block as u64,
                timestamp,
            });
        }
        Ok(out)
    }

    pub fn rates(&self) -> Result<RateTable> {
        let mut stmt = self
            .conn
            .prepare("SELECT date, eth_usd, gas_eth FROM rates ORDER BY date")?;
        let rows = stmt.query_map([], |row| {
            Ok((
                row.get::<_, String>(0)?,
                row.get::<_, f64>(1)?,
                row.get::<_, f64>(2)?,
            ))
        })?;
        let mut entries = Vec::new();
        for row in rows {
            let (d, eth_usd, gas_eth) = row?;
            let date = NaiveDate::parse_from_str(&d, "%Y-%m-%d")
                .map_err(|_| Error::InvalidInput(format!("corrupt date in store: {d}")))?;
            entries.push((date, Rate { eth_usd, gas_eth }));
        }
        RateTable::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_transactions_str;

    #[test]
    fn store_round_trip() {
        let text =
            "token_address,token_id,from_address,to_address,value,block_number,block_timestamp\n\
                    0xc1,7,0xaa,0xbb,0.25,9,2021-03-01T10:00:00.5Z\n\
                    0xc1,7,0xbb,0xaa,0,3,2021-03-02T10:00:00Z\n";
        let recs = parse_transactions_str(text).unwrap().records;
        let rates = RateTable::from_entries([(
            NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(),
            Rate {
                eth_usd: 1500.0,
                gas_eth: 0.00002,
            },
        )])
        .unwrap();
        let mut store = LedgerStore::in_memory().unwrap();
        store.replace(&recs, &rates).unwrap();
        assert_eq!(store.transactions().unwrap(), recs);
        assert_eq!(store.rates().unwrap(), rates);
    }
}
