use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub eth_usd: f64,
    /// Loaded for completeness; no wallet feature consumes it.
    pub gas_eth: f64,
}

/// Daily ETH/USD and gas/ETH rates. Lookups on days without a quote carry the
/// most recent earlier quote forward.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    rates: BTreeMap<NaiveDate, Rate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRateRow {
    pub line_number: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RateLoad {
    pub table: RateTable,
    pub rejected: Vec<RejectedRateRow>,
}

impl RateTable {
    pub fn from_entries<I: IntoIterator<Item = (NaiveDate, Rate)>>(entries: I) -> Result<Self> {
        let mut rates = BTreeMap::new();
        for (date, rate) in entries {
            if !(rate.eth_usd > 0.0 && rate.gas_eth > 0.0) {
                return Err(Error::InvalidInput(format!("non-positive rate on {date}")));
            }
            if rates.insert(date, rate).is_some() {
                return Err(Error::DuplicateRateDate(date));
            }
        }
        Ok(Self { rates })
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.rates.keys().next().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NaiveDate, &Rate)> {
        self.rates.iter()
    }

    pub fn rate_on(&self, date: NaiveDate) -> Result<Rate> {
        self.rates
            .range(..=date)
            .next_back()
            .map(|(_, r)| *r)
            .ok_or(Error::RateUnavailable(date))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["date", "eth_usd", "gas_eth"])?;
        for (d, r) in &self.rates {
            wtr.write_record([
                d.format("%Y-%m-%d").to_string(),
                format!("{}", r.eth_usd),
                format!("{}", r.gas_eth),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<rates>", e))?;
        Ok(())
    }
}

pub fn to_usd(value_eth: f64, date: NaiveDate, rates: &RateTable) -> Result<f64> {
    Ok(value_eth * rates.rate_on(date)?.eth_usd)
}

/// Loads `date,eth_usd,gas_eth` rows. Rows with unparseable or non-positive
/// rates are rejected; a repeated date fails the whole load.
pub fn load_rate_table<R: Read>(reader: R) -> Result<RateLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("rate header is missing column {name}")))
    };
    let (di, ui, gi) = (col("date")?, col("eth_usd")?, col("gas_eth")?);
    let mut rates = BTreeMap::new();
    let mut rejected = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line_number = row.position().map_or(0, |p| p.line() as usize);
        let parsed = (|| -> std::result::Result<(NaiveDate, Rate), String> {
            let date_s = row.get(di).unwrap_or("");
            let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
                .map_err(|_| format!("invalid date: {date_s}"))?;
            let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
                let s = row.get(i).unwrap_or("");
                let v: f64 = s.parse().map_err(|_| format!("invalid {name}: {s}"))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("non-positive {name}: {s}"));
                }
                Ok(v)
            };
            Ok((
                date,
                Rate {
                    eth_usd: num(ui, "eth_usd")?,
                    gas_eth: num(gi, "gas_eth")?,
                },
            ))
        })();
        match parsed {
            Ok((date, rate)) => {
                if rates.insert(date, rate).is_some() {
                    return Err(Error::DuplicateRateDate(date));
                }
            }
            Err(reason) => rejected.push(RejectedRateRow {
                line_number,
                reason,
            }),
        }
    }
    Ok(RateLoad {
        table: RateTable { rates },
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn rows_out_of_order_are_sorted() {
        let csv = "date,eth_usd,gas_eth\n2021-01-03,3,0.1\n2021-01-01,1,0.1\n2021-01-02,2,0.1\n";
        let t = load_rate_table(csv.as_bytes()).unwrap().table;
        let dates: Vec<_> = t.iter().map(|(d, _)| *d).collect();
        assert_eq!(
            dates,
            vec![d("2021-01-01"), d("2021-01-02"), d("2021-01-03")]
        );
    }

    #[test]
    fn negative_rate_rejected() {
        let csv = "date,eth_usd,gas_eth\n2021-01-01,-1,0.1\n2021-01-02,2,0.1\n";
        let load = load_rate_table(csv.as_bytes()).unwrap();
        assert_eq!(load.table.len(), 1);
        assert_eq!(load.rejected.len(), 1);
        assert_eq!(load.rejected[0].line_number, 2);
    }

    #[test]
    fn duplicate_date_is_error() {
        let csv = "date,eth_usd,gas_eth\n2021-01-01,1,0.1\n2021-01-01,2,0.1\n";
        assert!(matches!(
            load_rate_table(csv.as_bytes()),
            Err(Error::DuplicateRateDate(_))
        ));
    }

    #[test]
    fn gap_day_carries_forward() {
        let csv = "date,eth_usd,gas_eth\n2021-01-01,1000,0.1\n2021-01-03,2000,0.1\n";
        let t = load_rate_table(csv.as_bytes()).unwrap().table;
        assert_eq!(t.rate_on(d("2021-01-02")).unwrap().eth_usd, 1000.0);
        assert_eq!(to_usd(1.0, d("2021-01-02"), &t).unwrap(), 1000.0);
    }

    #[test]
    fn usd_conversion() {
        let csv = "date,eth_usd,gas_eth\n2021-01-01,1500,0.1\n";
        let t = load_rate_table(csv.as_bytes()).unwrap().table;
        assert_eq!(to_usd(2.0, d("2021-01-01"), &t).unwrap(), 3000.0);
        assert_eq!(to_usd(0.0, d("2021-06-01"), &t).unwrap(), 0.0);
        assert!(matches!(
            to_usd(1.0, d("2020-12-31"), &t),
            Err(Error::RateUnavailable(_))
        ));
    }
}
