use serde::{Deserialize, Serialize};

use super::config::Encoding;
use crate::error::{Error, Result};
use crate::instance::path_cost;
use crate::qsim::{build_qaoa_circuit, Circuit, CompactEncoding, QaoaParams};
use crate::qubo::{encode_route_qubo, qubo_to_ising, Decoded, IsingModel, QuboModel};
use crate::route::RouteProblem;

/// Diagonal cost operator of a QAOA problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CostModel {
    /// Spin Hamiltonian; the circuit uses it divided by `scale`.
    Ising {
        model: IsingModel<f64>,
        table: Vec<f64>,
        scale: f64,
    },
    /// Arbitrary diagonal energies applied as one phase layer divided by `scale`.
    Diagonal {
        num_qubits: usize,
        table: Vec<f64>,
        scale: f64,
    },
}

impl CostModel {
    /// Wrap an Ising model; angles are normalized by its largest coefficient.
    pub fn ising(model: IsingModel<f64>) -> Self {
        let m = model.max_abs_coefficient();
        let table = model.energy_table();
        CostModel::Ising {
            model,
            table,
            scale: if m > 0.0 { m } else { 1.0 },
        }
    }

    /// Wrap a diagonal table of length `2^q`; angles are normalized by its spread.
    pub fn diagonal(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() || !table.len().is_power_of_two() {
            return Err(Error::invalid(format!(
                "diagonal table length {} is not a power of two",
                table.len()
            )));
        }
        let (lo, hi) = table
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let spread = hi - lo;
        Ok(CostModel::Diagonal {
            num_qubits: table.len().trailing_zeros() as usize,
            table,
            scale: if spread > 0.0 { spread } else { 1.0 },
        })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            CostModel::Ising { model, .. } => model.num_spins,
            CostModel::Diagonal { num_qubits, .. } => *num_qubits,
        }
    }

    /// Energy of every basis state, in problem units.
    pub fn table(&self) -> &[f64] {
        match self {
            CostModel::Ising { table, .. } | CostModel::Diagonal { table, .. } => table,
        }
    }

    pub fn circuit(&self, params: &QaoaParams<f64>) -> Result<Circuit<f64>> {
        match self {
            CostModel::Ising { model, scale, .. } => {
                build_qaoa_circuit(&model.scaled(1.0 / scale), params)
            }
            CostModel::Diagonal {
                num_qubits,
                table,
                scale,
            } => {
                let mut c = Circuit::new(*num_qubits);
                for q in 0..*num_qubits {
                    c.push(crate::qsim::Gate::H { target: q })?;
                }
                for (&g, &b) in params.gammas.iter().zip(&params.betas) {
                    let phases: Vec<f64> = table.iter().map(|&e| g * e / scale).collect();
                    c.push(crate::qsim::Gate::PhaseDiagonal {
                        phases: std::sync::Arc::new(phases),
                    })?;
                    for q in 0..*num_qubits {
                        c.push(crate::qsim::Gate::Rx {
                            target: q,
                            angle: 2.0 * b,
                        })?;
                    }
                }
                Ok(c)
            }
        }
    }
}

/// A route subproblem bound to one qubit encoding.
#[derive(Debug, Clone)]
pub enum EncodedRoute {
    Qubo(QuboModel<f64>),
    Compact(CompactEncoding<f64>),
}

impl EncodedRoute {
    pub fn new(route: &RouteProblem<f64>, encoding: Encoding, alpha: f64) -> Result<Self> {
        let m = route.free().len();
        if !encoding.fits(m) {
            return Err(Error::Infeasible(match encoding {
                Encoding::Qubo => format!(
                    "qubo encoding of {m} free cities needs {} qubits, above the {}-qubit limit \
                     (at most {} cities)",
                    m * m,
                    super::config::MAX_QUBO_QUBITS,
                    super::config::MAX_QUBO_CITIES
                ),
                Encoding::Compact => format!(
                    "compact encoding supports at most {} cities, route has {}",
                    crate::qsim::MAX_COMPACT_CITIES,
                    m + 2
                ),
            }));
        }
        Ok(match encoding {
            Encoding::Qubo => EncodedRoute::Qubo(encode_route_qubo(route, alpha)?),
            Encoding::Compact => EncodedRoute::Compact(CompactEncoding::new(route.clone())?),
        })
    }

    pub fn encoding(&self) -> Encoding {
        match self {
            EncodedRoute::Qubo(_) => Encoding::Qubo,
            EncodedRoute::Compact(_) => Encoding::Compact,
        }
    }

    pub fn route(&self) -> &RouteProblem<f64> {
        match self {
            EncodedRoute::Qubo(q) => q.route(),
            EncodedRoute::Compact(c) => c.route(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            EncodedRoute::Qubo(q) => q.num_vars,
            EncodedRoute::Compact(c) => c.num_qubits(),
        }
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        Ok(match self {
            EncodedRoute::Qubo(q) => CostModel::ising(qubo_to_ising(q)),
            EncodedRoute::Compact(c) => CostModel::diagonal(c.energy_table())?,
        })
    }

    /// Full route order of basis state `z`, or `None` if it encodes no route.
    pub fn decode(&self, z: usize) -> Option<Vec<usize>> {
        match self {
            EncodedRoute::Qubo(q) => {
                let bits = crate::qubo::bits_of_index(z, q.num_vars);
                match q.decode(&bits).ok()? {
                    Decoded::Valid(order) => Some(order),
                    Decoded::Invalid(_) => None,
                }
            }
            EncodedRoute::Compact(c) => c.decode(z),
        }
    }

    /// Basis state of a full route order.
    pub fn encode(&self, full_order: &[usize]) -> Result<usize> {
        match self {
            EncodedRoute::Qubo(q) => Ok(crate::qubo::index_of_bits(&q.encode_order(full_order)?)),
            EncodedRoute::Compact(c) => c.encode(full_order),
        }
    }

    /// Route cost of a full order (closing edge included for closed routes).
    pub fn order_cost(&self, full_order: &[usize]) -> f64 {
        let r = self.route();
        path_cost(r.distances(), full_order) + r.constant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{european_cities, select_subinstance, TspInstance};

    fn route(n: usize, seed: u64) -> RouteProblem<f64> {
        let inst: TspInstance<f64> = select_subinstance(&european_cities(), n, seed, 8).unwrap();
        RouteProblem::from_instance(&inst)
    }

    #[test]
    fn both_encodings_share_the_optimum() {
        for n in [4, 5] {
            let r = route(n, 1);
            let (_, opt) = r.brute_force();
            for enc in [Encoding::Qubo, Encoding::Compact] {
                let e = EncodedRoute::new(&r, enc, 2.0).unwrap();
                let cm = e.cost_model().unwrap();
                let (z, &min) = cm
                    .table()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                assert!((min - opt).abs() < 1e-9);
                let order = e.decode(z).unwrap();
                assert!((e.order_cost(&order) - opt).abs() < 1e-9);
                assert_eq!(e.encode(&order).unwrap(), z);
            }
        }
    }

    #[test]
    fn infeasible_encodings_name_the_limit() {
        let r = route(8, 0);
        let err = EncodedRoute::new(&r, Encoding::Qubo, 2.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        assert!(err.to_string().contains("16-qubit"), "{err}");
        assert!(EncodedRoute::new(&r, Encoding::Compact, 2.0).is_ok());
    }

    #[test]
    fn diagonal_circuit_shape() {
        let cm = CostModel::diagonal(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = cm
            .circuit(&QaoaParams::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap())
            .unwrap();
        assert_eq!(c.len(), 2 + 2 * (1 + 2));
        assert!(CostModel::diagonal(vec![0.0; 3]).is_err());
    }
}
