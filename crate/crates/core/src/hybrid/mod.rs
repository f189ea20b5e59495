//! Quantum-only and cluster-decomposed solve pipelines.

mod archive;
mod config;
mod encoded;
mod pipeline;
mod record;
mod rerank;
mod solve;
mod stitch;

pub use archive::{append_archive, best_entry, load_archive, ArchiveEntry};
pub use config::{Encoding, Method, SolveConfig, MAX_QUBO_CITIES, MAX_QUBO_QUBITS};
pub use encoded::{CostModel, EncodedRoute};
pub use pipeline::{
    greedy_order, optimize_parameters, output_distribution, sample_final, solve_route,
    training_runs, valid_candidates, Candidate, Optimized, RouteOutcome, STALL_TOL_KM,
    STALL_WINDOW, THRESHOLD_SHOTS,
};
pub use record::RunRecord;
pub use rerank::{fit_cost_model, ml_rerank, pick_from_pool, route_features, training_set, Ranked};
pub use solve::{
    greedy_tour, partition_cities, solve, solve_classical, solve_hybrid, solve_quantum, Outcome,
};
pub use stitch::{group_centroid, stitch_clusters};
