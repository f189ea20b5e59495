use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Median single-qubit gate error of the reference backend.
pub const DEFAULT_P1Q: f64 = 2.726e-4;
/// Median two-qubit (ECR) gate error of the reference backend.
pub const DEFAULT_P2Q: f64 = 7.984e-3;
pub const DEFAULT_READOUT_FLIP: f64 = 0.01;

/// Median relaxation and dephasing times (microseconds). Recorded for
/// reference only; the simulator does not model decay.
pub const T1_MEDIAN_US: f64 = 262.75;
pub const T2_MEDIAN_US: f64 = 169.99;

/// Depolarizing gate noise plus asymmetric readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub p1q: f64,
    pub p2q: f64,
    pub p_read0to1: f64,
    pub p_read1to0: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p1q: DEFAULT_P1Q,
            p2q: DEFAULT_P2Q,
            p_read0to1: DEFAULT_READOUT_FLIP,
            p_read1to0: DEFAULT_READOUT_FLIP,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            p1q: 0.0,
            p2q: 0.0,
            p_read0to1: 0.0,
            p_read1to0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1q", self.p1q),
            ("p2q", self.p2q),
            ("p_read0to1", self.p_read0to1),
            ("p_read1to0", self.p_read1to0),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn has_gate_noise(&self) -> bool {
        self.p1q > 0.0 || self.p2q > 0.0
    }

    pub fn has_readout_noise(&self) -> bool {
        self.p_read0to1 > 0.0 || self.p_read1to0 > 0.0
    }
}

/// One stochastic trajectory of depolarizing noise: after every gate, each
/// touched qubit independently receives a uniformly random Pauli with
/// probability `p1q` (single-qubit gate) or `p2q` (multi-qubit gate).
/// Returns the noisy circuit and the number of inserted Paulis.
pub fn apply_gate_noise<F: Scalar>(
    circuit: &Circuit<F>,
    noise: &NoiseModel,
    seed: u64,
) -> Result<(Circuit<F>, usize)> {
    noise.validate()?;
    circuit.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nq = circuit.num_qubits();
    let mut out = Circuit::new(nq);
    let mut inserted = 0;
    for g in circuit.gates() {
        out.push_unchecked(g.clone());
        let qs = g.qubits(nq);
        let p = if qs.len() == 1 { noise.p1q } else { noise.p2q };
        if p <= 0.0 {
            continue;
        }
        for q in qs {
            if rng.gen::<f64>() < p {
                let pauli = match rng.gen_range(0..3) {
                    0 => Gate::X { target: q },
                    1 => Gate::Y { target: q },
                    _ => Gate::Z { target: q },
                };
                out.push_unchecked(pauli);
                inserted += 1;
            }
        }
    }
    Ok((out, inserted))
}
