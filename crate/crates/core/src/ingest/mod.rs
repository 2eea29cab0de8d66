//! Transaction ledger and exchange-rate ingestion.
//!
//! Ledgers arrive either as line-delimited JSON or as CSV with a header row.
//! Malformed lines never abort a load; they are collected into a rejected-line
//! report alongside exact duplicates.

mod rates;
mod store;

use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use rates::{load_rate_table, to_usd, Rate, RateLoad, RateTable, RejectedRateRow};
pub use store::LedgerStore;

/// Field names of a ledger record, in interchange order.
pub const TRANSACTION_FIELDS: [&str; 7] = [
    "token_address",
    "token_id",
    "from_address",
    "to_address",
    "value",
    "block_number",
    "block_timestamp",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    pub token_address: String,
    pub token_id: String,
    pub from_address: String,
    pub to_address: String,
    pub value_eth: f64,
    pub block_number: u64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransactionKind {
    Sale,
    Transfer,
}

impl TransactionRecord {
    pub fn kind(&self) -> TransactionKind {
        classify_transaction(self)
    }

    pub fn is_sale(&self) -> bool {
        self.kind() == TransactionKind::Sale
    }

    pub fn day(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn involves(&self, wallet: &str) -> bool {
        self.from_address == wallet || self.to_address == wallet
    }

    fn dedup_key(&self) -> (String, String, String, String, u64, u64, i64, u32) {
        (
            self.token_address.clone(),
            self.token_id.clone(),
            self.from_address.clone(),
            self.to_address.clone(),
            self.value_eth.to_bits(),
            self.block_number,
            self.timestamp.timestamp(),
            self.timestamp.timestamp_subsec_nanos(),
        )
    }
}

pub fn classify_transaction(record: &TransactionRecord) -> TransactionKind {
    if record.value_eth > 0.0 {
        TransactionKind::Sale
    } else {
        TransactionKind::Transfer
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedLine {
    pub line_number: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedLedger {
    pub records: Vec<TransactionRecord>,
    pub rejected: Vec<RejectedLine>,
}

impl ParsedLedger {
    pub fn count_kind(&self, kind: TransactionKind) -> usize {
        self.records.iter().filter(|r| r.kind() == kind).count()
    }
}

/// Parses a ledger, sniffing JSON-lines versus CSV by the first non-blank
/// character.
pub fn parse_transactions<R: Read>(mut reader: R) -> Result<ParsedLedger> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<transactions>", e))?;
    parse_transactions_str(&text)
}

pub fn parse_transactions_str(text: &str) -> Result<ParsedLedger> {
    let first = text.trim_start().chars().next();
    let parsed: Vec<(usize, std::result::Result<TransactionRecord, String>)> = match first {
        None => return Ok(ParsedLedger::default()),
        Some('{') => {
            let lines: Vec<(usize, &str)> = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| (i + 1, l))
                .collect();
            lines
                .par_iter()
                .map(|&(n, line)| (n, parse_json_line(line)))
                .collect()
        }
        Some(_) => parse_csv_rows(text)?,
    };
    Ok(dedup(parsed))
}

fn dedup(parsed: Vec<(usize, std::result::Result<TransactionRecord, String>)>) -> ParsedLedger {
    let mut out = ParsedLedger::default();
    let mut seen = HashSet::new();
    for (line_number, res) in parsed {
        match res {
            Ok(rec) => {
                if seen.insert(rec.dedup_key()) {
                    out.records.push(rec);
                } else {
                    out.rejected.push(RejectedLine {
                        line_number,
                        reason: "duplicate record".into(),
                    });
                }
            }
            Err(reason) => out.rejected.push(RejectedLine {
                line_number,
                reason,
            }),
        }
    }
    out
}

fn parse_json_line(line: &str) -> std::result::Result<TransactionRecord, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("malformed json: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "malformed json: not an object".to_string())?;
    let field = |name: &str| -> std::result::Result<String, String> {
        match obj.get(name) {
            None | Some(serde_json::Value::Null) => Err(format!("missing field {name}")),
            Some(serde_json::Value::String(s)) if s.trim().is_empty() => {
                Err(format!("missing field {name}"))
            }
            Some(serde_json::Value::String(s)) => Ok(s.trim().to_string()),
            Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
            Some(other) => Err(format!("invalid {name}: {other}")),
        }
    };
    let fields: Vec<String> = TRANSACTION_FIELDS
        .iter()
        .map(|f| field(f))
        .collect::<std::result::Result<_, _>>()?;
    build_record(&fields)
}

fn parse_csv_rows(
    text: &str,
) -> Result<Vec<(usize, std::result::Result<TransactionRecord, String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let index: Vec<Option<usize>> = TRANSACTION_FIELDS
        .iter()
        .map(|f| headers.iter().position(|h| h == *f))
        .collect();
    if let Some(pos) = index.iter().position(Option::is_none) {
        return Err(Error::InvalidInput(format!(
            "transaction header is missing column {}",
            TRANSACTION_FIELDS[pos]
        )));
    }
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        rows.push((line, row));
    }
    Ok(rows
        .par_iter()
        .map(|(line, row)| {
            let mut fields = Vec::with_capacity(7);
            for (name, idx) in TRANSACTION_FIELDS.iter().zip(&index) {
                match row.get(idx.unwrap()) {
                    Some(v) if !v.is_empty() => fields.push(v.to_string()),
                    _ => return (*line, Err(format!("missing field {name}"))),
                }
            }
            (*line, build_record(&fields))
        })
        .collect())
}

fn build_record(fields: &[String]) -> std::result::Result<TransactionRecord, String> {
    let value_eth: f64 = fields[4]
        .parse()
        .map_err(|_| format!("invalid value: {}", fields[4]))?;
    if !value_eth.is_finite() || value_eth < 0.0 {
        return Err(format!("invalid value: {}", fields[4]));
    }
    let block_number: u64 = fields[5]
        .parse()
        .map_err(|_| format!("invalid block_number: {}", fields[5]))?;
    if block_number > i64::MAX as u64 {
        return Err(format!("invalid block_number: {}", fields[5]));
    }
    let timestamp = parse_timestamp(&fields[6])
        .ok_or_else(|| format!("invalid block_timestamp: {}", fields[6]))?;
    Ok(TransactionRecord {
        token_address: fields[0].to_ascii_lowercase(),
        token_id: fields[1].clone(),
        from_address: fields[2].to_ascii_lowercase(),
        to_address: fields[3].to_ascii_lowercase(),
        value_eth,
        block_number,
        timestamp,
    })
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f UTC",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    None
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    token_address: &'a str,
    token_id: &'a str,
    from_address: &'a str,
    to_address: &'a str,
    value: String,
    block_number: u64,
    block_timestamp: String,
}

/// Writes records as JSON lines in the ingest interchange format.
pub fn write_jsonl<W: Write>(records: &[TransactionRecord], mut w: W) -> Result<()> {
    for r in records {
        let line = JsonRecord {
            token_address: &r.token_address,
            token_id: &r.token_id,
            from_address: &r.from_address,
            to_address: &r.to_address,
            value: format!("{}", r.value_eth),
            block_number: r.block_number,
            block_timestamp: format_timestamp(&r.timestamp),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn write_rejected_csv<W: Write>(rejected: &[RejectedLine], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["line_number", "reason"])?;
    for r in rejected {
        wtr.write_record([r.line_number.to_string(), r.reason.clone()])?;
    }
    wtr.flush().map_err(|e| Error::io("<rejected>", e))?;
    Ok(())
}

/// Orders records chronologically: timestamp, then block number, then input
/// position. Returns indices into `records`.
pub fn chronological_order(records: &[TransactionRecord]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.timestamp
            .cmp(&rb.timestamp)
            .then(ra.block_number.cmp(&rb.block_number))
            .then(a.cmp(&b))
    });
    idx
}
