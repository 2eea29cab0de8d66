//! K-means fitting, cluster-validity indices, knee location and the
//! k-selection and cross-validation drivers built on them.

mod kmeans;
mod knee;
mod selection;
mod validity;

pub use kmeans::{
    assign_nearest, kmeans_fit, kmeans_fit_from, kmeans_fit_traced, kmeans_plus_plus, restart_seed,
    KMeansModel, KMeansParams,
};
pub use knee::{elbow_knee, KNEEDLE_SENSITIVITY};
pub use selection::{
    choose_k, cross_validate, select_k, CrossValidationReport, CvSplit, CvSummary, KRow,
    KSelectionReport, SelectParams, Selection,
};
pub use validity::{cluster_sizes, davies_bouldin, silhouette, wcss};
