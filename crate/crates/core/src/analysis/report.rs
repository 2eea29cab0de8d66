use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::pca::PcaProjection;
use super::profile::ClusterProfile;
use super::rules::WASH_LABEL;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Raw features listed next to each wash candidate.
pub const WASH_KEY_FEATURES: [&str; 7] = [
    "in_degree",
    "out_degree",
    "transfer_ratio",
    "max_trans_per_day",
    "total_in_usd",
    "total_out_usd",
    "avg_minted_days",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaSummary {
    pub n_components: usize,
    pub feature_names: Vec<String>,
    pub explained_variance_ratio: Vec<f64>,
    pub cumulative_ratio: f64,
    pub degenerate: Vec<bool>,
    pub loadings_std: Vec<Vec<f64>>,
}

impl PcaSummary {
    pub fn new(pca: &PcaProjection, feature_names: &[String]) -> Self {
        PcaSummary {
            n_components: pca.n_components(),
            feature_names: feature_names.to_vec(),
            explained_variance_ratio: pca.explained_variance_ratio.clone(),
            cumulative_ratio: pca.cumulative_ratio(),
            degenerate: pca.degenerate.clone(),
            loadings_std: pca.components.iter_rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub share: f64,
    pub label: String,
    pub means: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WashSummary {
    pub wallets: usize,
    pub percentage: f64,
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub wallets: usize,
    pub k: usize,
    pub eda: serde_json::Value,
    pub features: serde_json::Value,
    pub k_selection: serde_json::Value,
    pub cross_validation: serde_json::Value,
    pub pca: PcaSummary,
    pub clusters: Vec<ClusterSummary>,
    pub wash: WashSummary,
}

pub fn wash_summary(profiles: &[ClusterProfile], wallets: usize) -> WashSummary {
    let clusters: Vec<usize> = profiles
        .iter()
        .filter(|p| p.label == WASH_LABEL)
        .map(|p| p.cluster)
        .collect();
    let count: usize = profiles
        .iter()
        .filter(|p| p.label == WASH_LABEL)
        .map(|p| p.size)
        .sum();
    WashSummary {
        wallets: count,
        percentage: if wallets == 0 {
            0.0
        } else {
            100.0 * count as f64 / wallets as f64
        },
        clusters,
    }
}

/// Assembles the master report. Upstream stage summaries are embedded as
/// they were serialized.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    eda: &impl Serialize,
    features: &impl Serialize,
    k_selection: &impl Serialize,
    cross_validation: &impl Serialize,
    pca: &PcaProjection,
    clustering_features: &[String],
    profiles: &[ClusterProfile],
) -> Result<Report> {
    let wallets: usize = profiles.iter().map(|p| p.size).sum();
    let clusters = profiles
        .iter()
        .map(|p| ClusterSummary {
            cluster: p.cluster,
            size: p.size,
            share: if wallets == 0 {
                0.0
            } else {
                p.size as f64 / wallets as f64
            },
            label: p.label.clone(),
            means: p
                .features
                .iter()
                .map(|f| (f.feature.clone(), f.mean))
                .collect(),
        })
        .collect();
    Ok(Report {
        wallets,
        k: profiles.len(),
        eda: serde_json::to_value(eda)?,
        features: serde_json::to_value(features)?,
        k_selection: serde_json::to_value(k_selection)?,
        cross_validation: serde_json::to_value(cross_validation)?,
        pca: PcaSummary::new(pca, clustering_features),
        clusters,
        wash: wash_summary(profiles, wallets),
    })
}

pub fn write_pca_scores_csv<W: Write>(
    w: W,
    wallets: &[String],
    pca: &PcaProjection,
    assignments: &[usize],
) -> Result<()> {
    if wallets.len() != pca.scores.rows() || assignments.len() != wallets.len() {
        return Err(Error::InvalidInput(
            "PCA scores, wallets and assignments disagree in length".into(),
        ));
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["wallet".to_string()];
    header.extend((1..=pca.n_components()).map(|c| format!("pc{c}")));
    header.push("cluster".into());
    wtr.write_record(&header)?;
    for (i, wallet) in wallets.iter().enumerate() {
        let mut rec = vec![wallet.clone()];
        rec.extend(pca.scores.row(i).iter().map(f64::to_string));
        rec.push(assignments[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("pca_scores.csv", e))
}

pub fn write_radar_csv<W: Write>(w: W, profiles: &[ClusterProfile]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["cluster", "category", "feature", "mean"])?;
    for p in profiles {
        let mut rows: Vec<_> = p.features.iter().collect();
        rows.sort_by_key(|f| f.category);
        for f in rows {
            wtr.write_record([
                p.cluster.to_string(),
                f.category.map_or("other", |c| c.as_str()).to_string(),
                f.feature.clone(),
                f.mean.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("radar.csv", e))
}

pub fn write_boxplot_csv<W: Write>(w: W, profiles: &[ClusterProfile]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "cluster", "feature", "min", "q1", "median", "q3", "max", "outliers",
    ])?;
    for p in profiles {
        for f in &p.features {
            wtr.write_record([
                p.cluster.to_string(),
                f.feature.clone(),
                f.min.to_string(),
                f.q1.to_string(),
                f.median.to_string(),
                f.q3.to_string(),
                f.max.to_string(),
                f.outliers.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("boxplot.csv", e))
}

/// Wallets of wash-labeled clusters with their key raw features. Writes
/// only the header when there are none.
pub fn write_wash_candidates_csv<W: Write>(
    w: W,
    raw: &FeatureMatrix,
    assignments: &[usize],
    profiles: &[ClusterProfile],
) -> Result<usize> {
    let cols: Vec<usize> = WASH_KEY_FEATURES
        .iter()
        .map(|n| {
            raw.column_index(n)
                .ok_or_else(|| Error::InvalidInput(format!("raw matrix lacks {n}")))
        })
        .collect::<Result<_>>()?;
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["wallet", "cluster", "label"];
    header.extend(WASH_KEY_FEATURES);
    wtr.write_record(&header)?;
    let mut written = 0;
    for (i, &c) in assignments.iter().enumerate() {
        let Some(p) = profiles.iter().find(|p| p.cluster == c) else {
            continue;
        };
        if p.label != WASH_LABEL {
            continue;
        }
        let mut rec = vec![raw.wallets[i].clone(), c.to_string(), p.label.clone()];
        rec.extend(cols.iter().map(|&j| raw.values.get(i, j).to_string()));
        wtr.write_record(&rec)?;
        written += 1;
    }
    wtr.flush()
        .map_err(|e| Error::io("wash_candidates.csv", e))?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::profile::cluster_profiles;
    use crate::features::FEATURE_NAMES;
    use crate::matrix::Matrix;

    fn raw() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| vec![i as f64; FEATURE_NAMES.len()])
            .collect();
        FeatureMatrix {
            wallets: (0..4).map(|i| format!("w{i}")).collect(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            values: Matrix::from_rows(&rows),
            standardized: false,
            column_means: None,
            column_sds: None,
        }
    }

    #[test]
    fn export_row_counts() {
        let m = raw();
        let p = cluster_profiles(&m, &[0, 1, 1, 2], 3).unwrap();
        let mut radar = Vec::new();
        write_radar_csv(&mut radar, &p).unwrap();
        let mut bp = Vec::new();
        write_boxplot_csv(&mut bp, &p).unwrap();
        let lines = |b: &[u8]| String::from_utf8_lossy(b).lines().count();
        assert_eq!(lines(&radar), 1 + 3 * 26);
        assert_eq!(lines(&bp), 1 + 3 * 26);
    }

    #[test]
    fn empty_wash_set() {
        let m = raw();
        let p = cluster_profiles(&m, &[0, 0, 1, 1], 2).unwrap();
        let mut out = Vec::new();
        assert_eq!(
            write_wash_candidates_csv(&mut out, &m, &[0, 0, 1, 1], &p).unwrap(),
            0
        );
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
        assert_eq!(wash_summary(&p, 4).percentage, 0.0);
    }

    #[test]
    fn wash_percentage() {
        let m = raw();
        let mut p = cluster_profiles(&m, &[0, 0, 0, 1], 2).unwrap();
        p[1].label = WASH_LABEL.into();
        let s = wash_summary(&p, 4);
        assert_eq!((s.wallets, s.percentage), (1, 25.0));
        let mut out = Vec::new();
        write_wash_candidates_csv(&mut out, &m, &[0, 0, 0, 1], &p).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("w3,1,wash_candidate,3,"));
    }
}
