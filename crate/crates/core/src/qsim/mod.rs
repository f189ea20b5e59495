//! Statevector simulation of QAOA circuits with optional stochastic noise.

mod circuit;
mod noise;
mod qaoa;
mod sampling;
mod state;

pub use circuit::{circuit_metrics, Circuit, CircuitMetrics, Gate};
pub use noise::{
    apply_gate_noise, NoiseModel, DEFAULT_P1Q, DEFAULT_P2Q, DEFAULT_READOUT_FLIP, T1_MEDIAN_US,
    T2_MEDIAN_US,
};
pub use qaoa::{
    build_compact_cost_circuit, build_qaoa_circuit, qubits_for, CompactEncoding, QaoaParams,
    MAX_COMPACT_CITIES, MAX_COMPACT_FREE,
};
pub use sampling::{
    apply_readout_noise, bitstring, index_of_bitstring, sample, sample_distribution, SampleCounts,
    DEFAULT_SHOTS,
};
pub use state::{expected_energy, expected_from_table, simulate, Statevector};
