//! Method-of-moments estimation for stochastic Kronecker graphs.
//!
//! The crate counts four graph features (edges, hairpins, tripins and
//! triangles), evaluates their closed-form expectations under a 2x2
//! symmetric Kronecker initiator `[[a, b], [b, c]]` raised to the power `r`,
//! and fits `(a, b, c)` by minimizing a moment-matching objective. An exact
//! coin-flipping sampler is included for validating fits on synthetic graphs.
//!
//! ```
//! use kronmom::{expected_features, KroneckerParams};
//!
//! let complete = KroneckerParams::new(1.0, 1.0, 1.0, 2).unwrap();
//! let e = expected_features(&complete);
//! assert_eq!(e.edges, 6.0);
//! assert_eq!(e.triangles, 4.0);
//! ```

pub mod estimator;
pub mod experiment;
pub mod features;
pub mod fold;
pub mod generator;
pub mod graph;
pub mod moments;
pub mod objective;
pub mod optimize;
pub mod params;
pub mod report;

pub use estimator::{
    fit_best, fit_direct, fit_grid, fit_leading, fit_leading_with_step, fit_partial,
    leading_feasible_by_degrees, FeatureRatios, FitError, FitMethod, FitOptions, FitResult,
    HeldOut, LeadingTransforms, MethodOutcome,
};
pub use experiment::{read_observed, run_experiment, ExperimentConfig, ExperimentError, Observed};
pub use features::{
    count_degree_features, count_features, count_triangles, Feature, FeatureCounts, FeatureError,
};
pub use fold::{fold_identity_check, restricted_sum, FoldCheck, FoldIdentity, Tensor};
pub use generator::{cell_probability, GenerateError, GeneratorJob};
pub use graph::{choose_r, load_edge_list, read_edge_list, GraphError, LoadReport, SimpleGraph};
pub use moments::{
    brute_force_expected, dominance_exponent, expected_features, Dominance, ExpectedFeatures,
    FullSum, MomentError, ProbabilityMatrix,
};
pub use objective::{
    evaluate_objective, objective_from_expected, objective_value, Distance, FeatureSet,
    Normalization, Objective, ObjectiveSpec, SpecError,
};
pub use params::{KroneckerParams, ParamError};
pub use report::TableRow;
