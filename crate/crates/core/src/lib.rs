//! Hybrid quantum-classical solver for small fixed-endpoint TSP instances.
//!
//! The numeric core (geometry, encodings, simulator, metrics, clustering) is
//! generic over [`Scalar`]; the aliases below fix it to `f64`, which is what
//! the pipelines and the CLI use.

pub mod classical;
pub mod error;
pub mod experiment;
pub mod hybrid;
pub mod instance;
pub mod metrics;
pub mod ml;
pub mod optim;
pub mod perm;
pub mod qsim;
pub mod qubo;
pub mod route;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DistanceMatrix = instance::DistanceMatrix<f64>;
pub type Instance = instance::TspInstance<f64>;
pub type Qubo = qubo::QuboModel<f64>;
pub type Ising = qubo::IsingModel<f64>;
pub type Statevector = qsim::Statevector<f64>;
pub type Circuit = qsim::Circuit<f64>;
pub type QaoaParams = qsim::QaoaParams<f64>;
pub type ClusterModel = ml::ClusterModel<f64>;

pub use hybrid::{Method, RunRecord, SolveConfig};
