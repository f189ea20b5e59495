use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A gate of the simulator's native set.
///
/// `PhaseDiagonal` multiplies amplitude `z` by `exp(-i * phases[z])` and acts
/// on every qubit of the register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Gate<F> {
    H { target: usize },
    X { target: usize },
    Y { target: usize },
    Z { target: usize },
    Rx { target: usize, angle: F },
    Rz { target: usize, angle: F },
    Rzz { targets: [usize; 2], angle: F },
    PhaseDiagonal { phases: Arc<Vec<F>> },
}

impl<F> Gate<F> {
    /// Qubits the gate touches; `PhaseDiagonal` reports all `num_qubits`.
    pub fn qubits(&self, num_qubits: usize) -> Vec<usize> {
        match self {
            Gate::H { target }
            | Gate::X { target }
            | Gate::Y { target }
            | Gate::Z { target }
            | Gate::Rx { target, .. }
            | Gate::Rz { target, .. } => vec![*target],
            Gate::Rzz { targets, .. } => targets.to_vec(),
            Gate::PhaseDiagonal { .. } => (0..num_qubits).collect(),
        }
    }

    pub fn is_pauli(&self) -> bool {
        matches!(self, Gate::X { .. } | Gate::Y { .. } | Gate::Z { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit<F> {
    num_qubits: usize,
    gates: Vec<Gate<F>>,
}

impl<F: Scalar> Circuit<F> {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate<F>] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate after checking its targets against the register.
    pub fn push(&mut self, gate: Gate<F>) -> Result<()> {
        self.check(&gate)?;
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate<F>) {
        self.gates.push(gate);
    }

    pub fn check(&self, gate: &Gate<F>) -> Result<()> {
        let q = self.num_qubits;
        match gate {
            Gate::Rzz {
                targets: [a, b], ..
            } if a == b => Err(Error::invalid(format!(
                "RZZ targets must differ, got {a} twice"
            ))),
            Gate::PhaseDiagonal { phases } if phases.len() != 1usize << q => {
                Err(Error::LengthMismatch {
                    expected: 1usize << q,
                    actual: phases.len(),
                })
            }
            _ => {
                for t in gate.qubits(q) {
                    if t >= q {
                        return Err(Error::QubitOutOfRange {
                            index: t,
                            num_qubits: q,
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gates.iter().try_for_each(|g| self.check(g))
    }

    pub fn metrics(&self) -> CircuitMetrics {
        circuit_metrics(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub depth: usize,
    pub total_gates: usize,
}

/// Gate count and depth under greedy layering: each gate goes into the
/// earliest layer in which all of its qubits are free.
pub fn circuit_metrics<F: Scalar>(circuit: &Circuit<F>) -> CircuitMetrics {
    let mut next_free = vec![0usize; circuit.num_qubits()];
    let mut depth = 0;
    for g in circuit.gates() {
        let qs = g.qubits(circuit.num_qubits());
        let layer = qs.iter().map(|&q| next_free[q]).max().unwrap_or(0);
        for &q in &qs {
            next_free[q] = layer + 1;
        }
        depth = depth.max(layer + 1);
    }
    CircuitMetrics {
        depth,
        total_gates: circuit.len(),
    }
}
