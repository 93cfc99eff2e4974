//! Shared inputs for the benchmarks.

use kronmom::{FeatureCounts, GeneratorJob, KroneckerParams, SimpleGraph};

/// The dense-core parameters used throughout the synthetic studies.
pub fn dense_core(r: u32) -> KroneckerParams {
    KroneckerParams::new(0.99, 0.48, 0.25, r).expect("valid parameters")
}

/// One fixed realization at power `r`.
pub fn sample_graph(r: u32) -> SimpleGraph {
    GeneratorJob::new(dense_core(r), 1)
        .generate()
        .expect("r within the in-memory limit")
}

/// Counts of a collaboration graph with 5242 vertices.
pub fn collaboration_counts() -> FeatureCounts {
    FeatureCounts {
        vertices: 5242,
        edges: 14484,
        hairpins: 229867,
        tripins: 2482738,
        triangles: 48260,
    }
}
