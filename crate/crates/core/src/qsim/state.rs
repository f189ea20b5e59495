use num_complex::Complex;

use super::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::qubo::IsingModel;
use crate::scalar::Scalar;

/// Pure state of `num_qubits` qubits. Amplitude `z` belongs to the basis state
/// whose bit `i` is the value of qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector<F> {
    num_qubits: usize,
    amp: Vec<Complex<F>>,
}

impl<F: Scalar> Statevector<F> {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, z: usize) -> Self {
        let mut amp = vec![Complex::new(F::zero(), F::zero()); 1usize << num_qubits];
        amp[z] = Complex::new(F::one(), F::zero());
        Statevector { num_qubits, amp }
    }

    /// Wrap raw amplitudes, normalizing them. Length must be a power of two.
    pub fn from_amplitudes(amp: Vec<Complex<F>>) -> Result<Self> {
        let len = amp.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let norm = amp.iter().map(|a| a.norm_sqr()).sum::<F>().sqrt();
        if norm <= F::zero() || !norm.is_finite() {
            return Err(Error::invalid("amplitudes have zero or non-finite norm"));
        }
        let amp = amp.into_iter().map(|a| a / norm).collect();
        Ok(Statevector {
            num_qubits: len.trailing_zeros() as usize,
            amp,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<F>] {
        &self.amp
    }

    pub fn probabilities(&self) -> Vec<F> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> F {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate<F>) -> Result<()> {
        let n = self.num_qubits;
        let check = |q: usize| {
            if q < n {
                Ok(1usize << q)
            } else {
                Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: n,
                })
            }
        };
        let half = F::lit(0.5);
        match gate {
            Gate::H { target } => {
                let s = F::FRAC_1_SQRT_2();
                self.pairwise(check(*target)?, |a, b| ((a + b) * s, (a - b) * s));
            }
            Gate::X { target } => self.pairwise(check(*target)?, |a, b| (b, a)),
            Gate::Y { target } => {
                let i = Complex::<F>::i();
                self.pairwise(check(*target)?, |a, b| (-i * b, i * a));
            }
            Gate::Z { target } => self.pairwise(check(*target)?, |a, b| (a, -b)),
            Gate::Rx { target, angle } => {
                let (s, c) = (*angle * half).sin_cos();
                let c = Complex::new(c, F::zero());
                let mis = Complex::new(F::zero(), -s);
                self.pairwise(check(*target)?, |a, b| (c * a + mis * b, mis * a + c * b));
            }
            Gate::Rz { target, angle } => {
                let lo = Complex::from_polar(F::one(), -*angle * half);
                let hi = Complex::from_polar(F::one(), *angle * half);
                self.pairwise(check(*target)?, |a, b| (a * lo, b * hi));
            }
            Gate::Rzz {
                targets: [qa, qb],
                angle,
            } => {
                let (ma, mb) = (check(*qa)?, check(*qb)?);
                if ma == mb {
                    return Err(Error::invalid("RZZ targets must differ"));
                }
                let same = Complex::from_polar(F::one(), -*angle * half);
                let diff = Complex::from_polar(F::one(), *angle * half);
                for (z, a) in self.amp.iter_mut().enumerate() {
                    let parity = ((z & ma) != 0) ^ ((z & mb) != 0);
                    *a = *a * if parity { diff } else { same };
                }
            }
            Gate::PhaseDiagonal { phases } => {
                if phases.len() != self.amp.len() {
                    return Err(Error::LengthMismatch {
                        expected: self.amp.len(),
                        actual: phases.len(),
                    });
                }
                for (a, &p) in self.amp.iter_mut().zip(phases.iter()) {
                    *a = *a * Complex::from_polar(F::one(), -p);
                }
            }
        }
        Ok(())
    }

    /// Apply a 2x2 map to every amplitude pair differing only in the `mask` bit.
    fn pairwise(
        &mut self,
        mask: usize,
        f: impl Fn(Complex<F>, Complex<F>) -> (Complex<F>, Complex<F>),
    ) {
        let len = self.amp.len();
        let mut base = 0;
        while base < len {
            for z in base..base + mask {
                let (a, b) = f(self.amp[z], self.amp[z | mask]);
                self.amp[z] = a;
                self.amp[z | mask] = b;
            }
            base += mask << 1;
        }
    }
}

/// Run `circuit` on `initial` (or `|0...0>`), gate by gate.
pub fn simulate<F: Scalar>(
    circuit: &Circuit<F>,
    initial: Option<Statevector<F>>,
) -> Result<Statevector<F>> {
    let mut state = match initial {
        Some(s) if s.num_qubits() != circuit.num_qubits() => {
            return Err(Error::LengthMismatch {
                expected: circuit.num_qubits(),
                actual: s.num_qubits(),
            })
        }
        Some(s) => s,
        None => Statevector::zero(circuit.num_qubits()),
    };
    for g in circuit.gates() {
        state.apply(g)?;
    }
    Ok(state)
}

/// `sum_z |amp_z|^2 * E(z)` for the Ising energy `E`.
pub fn expected_energy<F: Scalar>(ising: &IsingModel<F>, state: &Statevector<F>) -> Result<F> {
    if ising.num_spins != state.num_qubits() {
        return Err(Error::LengthMismatch {
            expected: ising.num_spins,
            actual: state.num_qubits(),
        });
    }
    Ok(state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(z, a)| a.norm_sqr() * ising.energy_of_index(z))
        .sum())
}

/// Expectation of a precomputed diagonal energy table.
pub fn expected_from_table<F: Scalar>(table: &[F], state: &Statevector<F>) -> Result<F> {
    if table.len() != state.amplitudes().len() {
        return Err(Error::LengthMismatch {
            expected: state.amplitudes().len(),
            actual: table.len(),
        });
    }
    Ok(state
        .amplitudes()
        .iter()
        .zip(table)
        .map(|(a, &e)| a.norm_sqr() * e)
        .sum())
}
