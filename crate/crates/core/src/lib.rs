//! Community detection with an unknown number of blocks.
//!
//! The crate recovers both the number of communities and the memberships of
//! a stochastic-block-model graph by solving a trace-penalized semidefinite
//! program over row-stochastic, entrywise nonnegative PSD matrices, choosing
//! the penalty by a grid search that scores each solution by the fraction of
//! its spectrum carried by the leading eigenvalues, and certifying exact
//! recovery with an explicit dual witness.
//!
//! Module map:
//!
//! * [`sbm`]: block models, partitions, graph sampling, ground truth.
//! * [`projections`]: exact Euclidean projections onto the constraint sets.
//! * [`solver`]: first-order splitting solver for the penalized and the
//!   known-`r` programs, plus the operator norm.
//! * [`spur`]: the penalty grid search and sweep reports.
//! * [`certificate`]: dual certificate construction and KKT verification.
//! * [`metrics`]: label extraction, NMI and the spectral baseline estimators.
//! * [`io`]: edge lists, GML subset, label files and experiment configs.

pub mod certificate;
pub mod datasets;
mod error;
pub mod io;
mod linalg;
pub mod metrics;
pub mod projections;
pub mod sbm;
pub mod solver;
pub mod spur;

pub use error::{Error, Result};

pub use certificate::{
    build_certificate, certify_recovery, gamma_entry_condition, verify, CertificateReport,
    DualCertificate,
};
pub use metrics::{
    bethe_hessian_estimate_r, extract_labels, nmi, spectral_labels, usvt_estimate_r,
    BetheHessianVariant, LabelExtraction,
};
pub use projections::{
    project_affine, project_nonneg, project_psd, project_psd_affine, SymmetricMatrix,
};
pub use sbm::{
    assortativity, ground_truth_matrix, lambda_interval, sample_sbm, separation_holds,
    AdjacencyMatrix, Assortativity, AssortativityClass, BlockModel, ClusteringMatrix, Feasibility,
    LambdaInterval, Partition,
};
pub use solver::{
    operator_norm, solve, solve_resumable, solve_sdp_lambda, solve_sdp_pw, Program, SolverConfig,
    SolverResult, SolverState, Splitting,
};
pub use spur::{
    lambda_grid, lambda_sweep_report, score, spur, GridMode, GridPoint, Score, SpurOptions,
    SpurResult,
};
