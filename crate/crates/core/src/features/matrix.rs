use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{category_of, WalletFeatures, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub wallets: Vec<String>,
    pub feature_names: Vec<String>,
    pub values: Matrix,
    pub standardized: bool,
    /// Means and population standard deviations of the unstandardized
    /// columns; present once standardized.
    pub column_means: Option<Vec<f64>>,
    pub column_sds: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Keeps only the named columns, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown feature {n}")))
            })
            .collect::<Result<_>>()?;
        let pick = |v: &Option<Vec<f64>>| v.as_ref().map(|v| idx.iter().map(|&j| v[j]).collect());
        Ok(FeatureMatrix {
            wallets: self.wallets.clone(),
            feature_names: names.to_vec(),
            values: self.values.select_columns(&idx),
            standardized: self.standardized,
            column_means: pick(&self.column_means),
            column_sds: pick(&self.column_sds),
        })
    }

    /// Maps standardized values back to raw units.
    pub fn destandardize_row(&self, row: &[f64]) -> Vec<f64> {
        match (&self.column_means, &self.column_sds) {
            (Some(m), Some(s)) => row
                .iter()
                .zip(m.iter().zip(s))
                .map(|(z, (mu, sd))| mu + z * sd)
                .collect(),
            _ => row.to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["wallet".to_string()];
        header.extend(self.feature_names.iter().cloned());
        wtr.write_record(&header)?;
        for (i, wallet) in self.wallets.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.cols() + 1);
            rec.push(wallet.clone());
            rec.extend(self.values.row(i).iter().map(|v| format!("{v}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }
}

/// Reads a feature matrix CSV (`wallet` followed by feature columns).
pub fn read_matrix_csv<R: Read>(r: R, standardized: bool) -> Result<FeatureMatrix> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("wallet") {
        return Err(Error::InvalidInput(
            "feature CSV must start with a wallet column".into(),
        ));
    }
    let feature_names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut wallets = Vec::new();
    let mut data = Vec::new();
    for row in rdr.records() {
        let row = row?;
        wallets.push(row[0].to_string());
        for v in row.iter().skip(1) {
            data.push(
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad feature value {v}")))?,
            );
        }
    }
    let values = Matrix::from_vec(wallets.len(), feature_names.len(), data);
    Ok(FeatureMatrix {
        wallets,
        feature_names,
        values,
        standardized,
        column_means: None,
        column_sds: None,
    })
}

/// Stacks wallet features into a raw matrix with rows sorted by address.
pub fn assemble_feature_matrix(features: &[WalletFeatures]) -> Result<FeatureMatrix> {
    if features.is_empty() {
        return Err(Error::NoWallets);
    }
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| features[a].wallet.cmp(&features[b].wallet));
    let rows: Vec<[f64; 26]> = order.iter().map(|&i| features[i].to_row()).collect();
    Ok(FeatureMatrix {
        wallets: order.iter().map(|&i| features[i].wallet.clone()).collect(),
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        values: Matrix::from_rows(&rows),
        standardized: false,
        column_means: None,
        column_sds: None,
    })
}

fn is_constant(sd: f64, mean: f64) -> bool {
    sd <= 1e-12 * mean.abs().max(1.0)
}

/// Z-scores every column with the population standard deviation. Constant
/// columns become all zeros.
pub fn standardize(matrix: &FeatureMatrix) -> FeatureMatrix {
    let (m, n) = (matrix.rows(), matrix.cols());
    let mut means = vec![0.0; n];
    let mut sds = vec![0.0; n];
    for j in 0..n {
        let col = matrix.values.column(j);
        means[j] = crate::stats::mean(&col);
        sds[j] = if m > 0 {
            (col.iter().map(|x| (x - means[j]).powi(2)).sum::<f64>() / m as f64).sqrt()
        } else {
            0.0
        };
    }
    let mut values = Matrix::zeros(m, n);
    for i in 0..m {
        let src = matrix.values.row(i);
        let dst = values.row_mut(i);
        for j in 0..n {
            dst[j] = if is_constant(sds[j], means[j]) {
                0.0
            } else {
                (src[j] - means[j]) / sds[j]
            };
        }
    }
    FeatureMatrix {
        wallets: matrix.wallets.clone(),
        feature_names: matrix.feature_names.clone(),
        values,
        standardized: true,
        column_means: Some(means),
        column_sds: Some(sds),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub correlated_with: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedFeature>,
    /// Full Pearson correlation matrix over every input column.
    pub correlation: Matrix,
}

pub fn pearson_matrix(values: &Matrix) -> Matrix {
    let (m, n) = (values.rows(), values.cols());
    let means: Vec<f64> = (0..n)
        .map(|j| crate::stats::mean(&values.column(j)))
        .collect();
    let mut cov = Matrix::zeros(n, n);
    for row in values.iter_rows() {
        for a in 0..n {
            let da = row[a] - means[a];
            for b in a..n {
                let v = cov.get(a, b) + da * (row[b] - means[b]);
                cov.set(a, b, v);
            }
        }
    }
    let sd: Vec<f64> = (0..n)
        .map(|j| (cov.get(j, j) / m.max(1) as f64).sqrt())
        .collect();
    let mut r = Matrix::zeros(n, n);
    for a in 0..n {
        r.set(a, a, 1.0);
        for b in a + 1..n {
            let v = if is_constant(sd[a], means[a]) || is_constant(sd[b], means[b]) {
                0.0
            } else {
                (cov.get(a, b) / m as f64 / (sd[a] * sd[b])).clamp(-1.0, 1.0)
            };
            r.set(a, b, v);
            r.set(b, a, v);
        }
    }
    r
}

/// Drops, for every same-category pair with |r| above `threshold`, the
/// column that comes later in feature order.
#[allow(clippy::needless_range_loop)]
pub fn prune_correlated(matrix: &FeatureMatrix, threshold: f64) -> PruneResult {
    let correlation = pearson_matrix(&matrix.values);
    let n = matrix.cols();
    let mut dropped: Vec<DroppedFeature> = Vec::new();
    let mut is_dropped = vec![false; n];
    for b in 0..n {
        for a in 0..b {
            let same =
                category_of(&matrix.feature_names[a]) == category_of(&matrix.feature_names[b]);
            let r = correlation.get(a, b);
            if same && r.abs() > threshold {
                if !is_dropped[b] {
                    dropped.push(DroppedFeature {
                        feature: matrix.feature_names[b].clone(),
                        correlated_with: matrix.feature_names[a].clone(),
                        r,
                    });
                }
                is_dropped[b] = true;
            }
        }
    }
    PruneResult {
        retained: (0..n)
            .filter(|&j| !is_dropped[j])
            .map(|j| matrix.feature_names[j].clone())
            .collect(),
        dropped,
        correlation,
    }
}

pub fn write_correlation_csv<W: Write>(names: &[String], corr: &Matrix, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["feature".to_string()];
    header.extend(names.iter().cloned());
    wtr.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(corr.row(i).iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<correlation>", e))?;
    Ok(())
}
