use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::{category_of, FeatureCategory, FeatureMatrix};
use crate::stats::{mean, population_sd, quantile_sorted};

pub const GENERAL_LABEL: &str = "general";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub feature: String,
    pub category: Option<FeatureCategory>,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Values outside `[q1 - 1.5·IQR, q3 + 1.5·IQR]`.
    pub outliers: usize,
}

impl FeatureSummary {
    fn of(feature: &str, values: &mut [f64]) -> Self {
        let category = category_of(feature);
        if values.is_empty() {
            return FeatureSummary {
                feature: feature.to_string(),
                category,
                mean: 0.0,
                sd: 0.0,
                min: 0.0,
                q1: 0.0,
                median: 0.0,
                q3: 0.0,
                max: 0.0,
                outliers: 0,
            };
        }
        values.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(values, 0.25);
        let q3 = quantile_sorted(values, 0.75);
        let iqr = q3 - q1;
        let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        FeatureSummary {
            feature: feature.to_string(),
            category,
            mean: mean(values),
            sd: population_sd(values),
            min: values[0],
            q1,
            median: quantile_sorted(values, 0.5),
            q3,
            max: values[values.len() - 1],
            outliers: values.iter().filter(|&&x| x < lo || x > hi).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub label: String,
    pub features: Vec<FeatureSummary>,
}

impl ClusterProfile {
    pub fn feature(&self, name: &str) -> Option<&FeatureSummary> {
        self.features.iter().find(|f| f.feature == name)
    }
}

/// Per-cluster statistics of every column of a raw-unit matrix.
pub fn cluster_profiles(
    raw: &FeatureMatrix,
    assignments: &[usize],
    k: usize,
) -> Result<Vec<ClusterProfile>> {
    if raw.standardized {
        return Err(Error::InvalidInput(
            "cluster profiles need raw feature values".into(),
        ));
    }
    if assignments.len() != raw.rows() {
        return Err(Error::InvalidInput(format!(
            "{} assignments for {} wallets",
            assignments.len(),
            raw.rows()
        )));
    }
    if let Some(&bad) = assignments.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidInput(format!(
            "cluster id {bad} out of range for k = {k}"
        )));
    }
    let mut members = vec![Vec::new(); k];
    for (i, &c) in assignments.iter().enumerate() {
        members[c].push(i);
    }
    Ok(members
        .par_iter()
        .enumerate()
        .map(|(cluster, rows)| {
            let features = raw
                .feature_names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let mut col: Vec<f64> = rows.iter().map(|&i| raw.values.get(i, j)).collect();
                    FeatureSummary::of(name, &mut col)
                })
                .collect();
            ClusterProfile {
                cluster,
                size: rows.len(),
                label: GENERAL_LABEL.to_string(),
                features,
            }
        })
        .collect())
}

/// Sorted copies of every raw column, for wallet-population percentiles.
#[derive(Debug, Clone)]
pub struct PopulationStats {
    names: Vec<String>,
    sorted: Vec<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl PopulationStats {
    pub fn new(raw: &FeatureMatrix) -> Self {
        let sorted: Vec<Vec<f64>> = (0..raw.cols())
            .map(|j| {
                let mut c = raw.values.column(j);
                c.sort_by(f64::total_cmp);
                c
            })
            .collect();
        PopulationStats {
            names: raw.feature_names.clone(),
            means: sorted.iter().map(|c| mean(c)).collect(),
            sds: sorted.iter().map(|c| population_sd(c)).collect(),
            sorted,
        }
    }

    pub fn wallets(&self) -> usize {
        self.sorted.first().map_or(0, Vec::len)
    }

    fn column(&self, feature: &str) -> Option<usize> {
        self.names.iter().position(|n| n == feature)
    }

    pub fn has_feature(&self, feature: &str) -> bool {
        self.column(feature).is_some()
    }

    pub fn mean(&self, feature: &str) -> Option<f64> {
        self.column(feature).map(|j| self.means[j])
    }

    pub fn sd(&self, feature: &str) -> Option<f64> {
        self.column(feature).map(|j| self.sds[j])
    }

    /// `p` in percent, linear interpolation between order statistics.
    pub fn percentile(&self, feature: &str, p: f64) -> Option<f64> {
        let j = self.column(feature)?;
        if self.sorted[j].is_empty() {
            return None;
        }
        Some(quantile_sorted(&self.sorted[j], p / 100.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn raw(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix {
            wallets: (0..rows.len()).map(|i| format!("w{i}")).collect(),
            feature_names: vec!["in_degree".into(), "total_in_usd".into()],
            values: Matrix::from_rows(rows),
            standardized: false,
            column_means: None,
            column_sds: None,
        }
    }

    #[test]
    fn single_cluster_means_are_column_means() {
        let m = raw(&[vec![1.0, 10.0], vec![2.0, 30.0], vec![6.0, 5.0]]);
        let p = cluster_profiles(&m, &[0, 0, 0], 1).unwrap();
        assert_eq!(p[0].size, 3);
        assert!((p[0].features[0].mean - 3.0).abs() < 1e-12);
        assert!((p[0].features[1].mean - 15.0).abs() < 1e-12);
    }

    #[test]
    fn four_wallets_two_clusters() {
        // cluster 0: in_degree {1, 4}, cluster 1: {2, 10}
        let m = raw(&[
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![4.0, 0.0],
            vec![10.0, 0.0],
        ]);
        let p = cluster_profiles(&m, &[0, 1, 0, 1], 2).unwrap();
        let a = &p[0].features[0];
        assert_eq!(
            (a.min, a.q1, a.median, a.q3, a.max),
            (1.0, 1.75, 2.5, 3.25, 4.0)
        );
        let b = &p[1].features[0];
        assert_eq!(
            (b.min, b.q1, b.median, b.q3, b.max),
            (2.0, 4.0, 6.0, 8.0, 10.0)
        );
        assert_eq!(p[0].size + p[1].size, 4);
    }

    #[test]
    fn outliers_counted() {
        let rows: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0, 100.0]
            .iter()
            .map(|&x| vec![x, 0.0])
            .collect();
        let p = cluster_profiles(&raw(&rows), &[0; 5], 1).unwrap();
        assert_eq!(p[0].features[0].outliers, 1);
    }

    #[test]
    fn percentiles() {
        let rows: Vec<Vec<f64>> = (0..=100).map(|x| vec![x as f64, 0.0]).collect();
        let s = PopulationStats::new(&raw(&rows));
        assert_eq!(s.percentile("in_degree", 90.0), Some(90.0));
        assert_eq!(s.percentile("in_degree", 99.9), Some(99.9));
        assert_eq!(s.mean("in_degree"), Some(50.0));
        assert!(s.percentile("nope", 50.0).is_none());
    }
}
