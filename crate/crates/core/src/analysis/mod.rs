//! Projection, per-cluster statistics and rule-based labeling of a fitted
//! clustering, plus the report and plot-data exports.

mod pca;
mod profile;
mod report;
mod rules;

pub use pca::{pca_fit, PcaProjection};
pub use profile::{
    cluster_profiles, ClusterProfile, FeatureSummary, PopulationStats, GENERAL_LABEL,
};
pub use report::{
    build_report, wash_summary, write_boxplot_csv, write_pca_scores_csv, write_radar_csv,
    write_wash_candidates_csv, ClusterSummary, PcaSummary, Report, WashSummary, WASH_KEY_FEATURES,
};
pub use rules::{
    default_rules, label_clusters, parse_rules, ClusterStat, Comparison, Condition, GlobalStat,
    LabelRule, Operand, Term, DEFAULT_RULES, WASH_LABEL,
};
