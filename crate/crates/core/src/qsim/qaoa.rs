//! QAOA circuit construction for the one-hot Ising encoding and for the
//! compact permutation-index encoding.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::instance::TspInstance;
use crate::perm::{factorial, rank, unrank};
use crate::qubo::IsingModel;
use crate::route::RouteProblem;
use crate::scalar::Scalar;

/// Largest free-city count the compact encoding accepts (720 permutations, 10 qubits).
pub const MAX_COMPACT_FREE: usize = 6;
/// Largest instance size for the compact encoding.
pub const MAX_COMPACT_CITIES: usize = MAX_COMPACT_FREE + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams<F> {
    pub gammas: Vec<F>,
    pub betas: Vec<F>,
}

impl<F: Scalar> QaoaParams<F> {
    pub fn new(gammas: Vec<F>, betas: Vec<F>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::invalid(format!(
                "need p >= 1 gammas and betas of equal length, got {} and {}",
                gammas.len(),
                betas.len()
            )));
        }
        Ok(QaoaParams { gammas, betas })
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    /// Flat `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub fn to_vec(&self) -> Vec<F> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_slice(x: &[F]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "flat parameter vector must have even length",
            ));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }
}

fn hadamards<F: Scalar>(circuit: &mut Circuit<F>) {
    for q in 0..circuit.num_qubits() {
        circuit.push_unchecked(Gate::H { target: q });
    }
}

fn mixer<F: Scalar>(circuit: &mut Circuit<F>, beta: F) {
    let angle = beta + beta;
    for q in 0..circuit.num_qubits() {
        circuit.push_unchecked(Gate::Rx { target: q, angle });
    }
}

/// `H^n`, then per layer `RZ(2 gamma h_i)` for nonzero fields, `RZZ(2 gamma J_ij)`
/// for nonzero couplings, and `RX(2 beta)` on every qubit.
pub fn build_qaoa_circuit<F: Scalar>(
    ising: &IsingModel<F>,
    params: &QaoaParams<F>,
) -> Result<Circuit<F>> {
    if ising.num_spins == 0 {
        return Err(Error::invalid("Ising model has no spins"));
    }
    let mut couplings: Vec<_> = ising.j.iter().filter(|t| t.w != F::zero()).collect();
    couplings.sort_by_key(|t| (t.i, t.j));
    let mut c = Circuit::new(ising.num_spins);
    hadamards(&mut c);
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        let two_g = gamma + gamma;
        for (i, &h) in ising.h.iter().enumerate() {
            if h != F::zero() {
                c.push(Gate::Rz {
                    target: i,
                    angle: two_g * h,
                })?;
            }
        }
        for t in &couplings {
            c.push(Gate::Rzz {
                targets: [t.i, t.j],
                angle: two_g * t.w,
            })?;
        }
        mixer(&mut c, beta);
    }
    Ok(c)
}

/// Permutation-index encoding of a route: basis state `z < m!` is the
/// `z`-th lexicographic ordering of the `m` free cities; larger `z` are
/// invalid and carry the worst route cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactEncoding<F> {
    route: RouteProblem<F>,
    num_qubits: usize,
    costs: Vec<F>,
    invalid_energy: F,
}

impl<F: Scalar> CompactEncoding<F> {
    pub fn new(route: RouteProblem<F>) -> Result<Self> {
        let m = route.free().len();
        if m == 0 {
            return Err(Error::invalid("route has no free cities to encode"));
        }
        if m > MAX_COMPACT_FREE {
            return Err(Error::Infeasible(format!(
                "compact encoding supports at most {MAX_COMPACT_FREE} free cities \
                 ({MAX_COMPACT_CITIES}-city instances), got {m}"
            )));
        }
        let count = factorial(m).expect("small factorial");
        let num_qubits = qubits_for(count);
        let costs: Vec<F> = (0..count)
            .map(|k| route.cost(&route.order_from_perm(&unrank(k, m))))
            .collect();
        let invalid_energy = costs.iter().copied().fold(F::zero(), F::max);
        Ok(CompactEncoding {
            route,
            num_qubits,
            costs,
            invalid_energy,
        })
    }

    pub fn for_instance(instance: &TspInstance<F>) -> Result<Self> {
        if instance.n() > MAX_COMPACT_CITIES {
            return Err(Error::Infeasible(format!(
                "compact encoding supports at most {MAX_COMPACT_CITIES} cities, got {}",
                instance.n()
            )));
        }
        Self::new(RouteProblem::from_instance(instance))
    }

    pub fn route(&self) -> &RouteProblem<F> {
        &self.route
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_permutations(&self) -> usize {
        self.costs.len()
    }

    pub fn energy_of_index(&self, z: usize) -> F {
        self.costs.get(z).copied().unwrap_or(self.invalid_energy)
    }

    pub fn energy_table(&self) -> Vec<F> {
        (0..1usize << self.num_qubits)
            .map(|z| self.energy_of_index(z))
            .collect()
    }

    /// Full route order for basis state `z`, or `None` when out of range.
    pub fn decode(&self, z: usize) -> Option<Vec<usize>> {
        (z < self.costs.len()).then(|| {
            let perm = unrank(z, self.route.free().len());
            self.route.full_order(&self.route.order_from_perm(&perm))
        })
    }

    /// Basis index of a full route order.
    pub fn encode(&self, full_order: &[usize]) -> Result<usize> {
        let free = self.route.free();
        let inner: Vec<usize> = full_order
            .iter()
            .copied()
            .filter(|c| Some(*c) != self.route.head() && Some(*c) != self.route.tail())
            .collect();
        if inner.len() != free.len() || self.route.full_order(&inner) != full_order {
            return Err(Error::MalformedTour(format!(
                "order {full_order:?} does not fit the encoded route"
            )));
        }
        let perm = inner
            .iter()
            .map(|c| free.iter().position(|f| f == c))
            .collect::<Option<Vec<usize>>>()
            .ok_or_else(|| Error::MalformedTour("city not in route".into()))?;
        Ok(rank(&perm))
    }

    /// QAOA circuit with a diagonal cost layer `exp(-i gamma E(z) / energy_scale)`.
    pub fn circuit(&self, params: &QaoaParams<F>, energy_scale: F) -> Circuit<F> {
        let table = self.energy_table();
        let mut c = Circuit::new(self.num_qubits);
        hadamards(&mut c);
        for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
            let phases: Vec<F> = table.iter().map(|&e| gamma * e / energy_scale).collect();
            c.push_unchecked(Gate::PhaseDiagonal {
                phases: Arc::new(phases),
            });
            mixer(&mut c, beta);
        }
        c
    }
}

/// `ceil(log2(count))`, at least one qubit.
pub fn qubits_for(count: usize) -> usize {
    let mut q = 0;
    while (1usize << q) < count {
        q += 1;
    }
    q.max(1)
}

/// Compact QAOA circuit for a full instance, phases in raw kilometers.
pub fn build_compact_cost_circuit<F: Scalar>(
    instance: &TspInstance<F>,
    params: &QaoaParams<F>,
) -> Result<Circuit<F>> {
    Ok(CompactEncoding::for_instance(instance)?.circuit(params, F::one()))
}
