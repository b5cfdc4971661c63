//! Clustering with embedded feature selection.
//!
//! Alternates k-means on the projected samples `X W` with an l1-constrained
//! projected-gradient solve for the `d x dbar` weight matrix `W`. Features
//! whose weight row survives the projection are the selected ones.

pub mod dataio;
pub mod driver;
mod error;
pub mod kmeans;
mod linalg;
pub mod metrics;
pub mod objective;
pub mod projection;
pub mod solver;
mod types;

pub use driver::{k_sparse, selected_features, sweep_eta, SweepRecord};
pub use error::{Error, Result};
pub use linalg::spectral_norm_seeded;
pub use metrics::{accuracy, ari, nmi, NmiNormalization, Scores};
pub use objective::{centroids, frobenius_residual, gradient, objective, spectral_norm};
pub use projection::{project_l1_ball, project_simplex, ProjectionBudget, ProjectionMethod};
pub use types::{
    CentroidMatrix, ClusteringResult, DataMatrix, LabelAssignment, SolverConfig, WeightMatrix,
    BUDGET_SLACK,
};
