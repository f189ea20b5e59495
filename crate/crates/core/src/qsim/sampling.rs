use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::state::Statevector;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_SHOTS: usize = 4096;

/// Measurement histogram. Bitstring keys list qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub num_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl SampleCounts {
    pub fn new(num_qubits: usize) -> Self {
        SampleCounts {
            num_qubits,
            shots: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, z: usize, n: u64) {
        *self
            .counts
            .entry(bitstring(z, self.num_qubits))
            .or_insert(0) += n;
        self.shots += n;
    }

    pub fn count_of(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn frequency(&self, bits: &str) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.count_of(bits) as f64 / self.shots as f64
        }
    }

    /// `(basis index, count)` pairs in ascending bitstring order.
    pub fn by_index(&self) -> Vec<(usize, u64)> {
        self.counts
            .iter()
            .map(|(k, &v)| (index_of_bitstring(k), v))
            .collect()
    }

    /// Dense histogram over all `2^num_qubits` basis states.
    pub fn dense(&self) -> Vec<u64> {
        let mut out = vec![0; 1usize << self.num_qubits];
        for (z, c) in self.by_index() {
            out[z] += c;
        }
        out
    }

    /// Fold another histogram over the same register into this one.
    pub fn merge(&mut self, other: &SampleCounts) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::LengthMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        for (k, &v) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += v;
        }
        self.shots += other.shots;
        Ok(())
    }

    /// The `{bitstring: count}` JSON export.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.counts).expect("string-keyed map")
    }
}

pub fn bitstring(z: usize, num_qubits: usize) -> String {
    (0..num_qubits)
        .map(|i| if (z >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn index_of_bitstring(bits: &str) -> usize {
    bits.bytes()
        .enumerate()
        .fold(0, |acc, (i, b)| acc | (((b == b'1') as usize) << i))
}

/// Push a measurement distribution through independent per-qubit readout
/// flips, in place.
pub fn apply_readout_noise(probs: &mut [f64], noise: &NoiseModel) {
    if !noise.has_readout_noise() {
        return;
    }
    let (p01, p10) = (noise.p_read0to1, noise.p_read1to0);
    let mut mask = 1;
    while mask < probs.len() {
        for z in 0..probs.len() {
            if z & mask == 0 {
                let (a, b) = (probs[z], probs[z | mask]);
                probs[z] = a * (1.0 - p01) + b * p10;
                probs[z | mask] = a * p01 + b * (1.0 - p10);
            }
        }
        mask <<= 1;
    }
}

/// Draw `shots` i.i.d. outcomes from `|amp|^2`, then flip each measured bit
/// with the readout probabilities of `noise` (if given).
pub fn sample<F: Scalar>(
    state: &Statevector<F>,
    shots: usize,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<SampleCounts> {
    if let Some(n) = noise {
        n.validate()?;
    }
    let probs: Vec<f64> = state
        .probabilities()
        .iter()
        .map(|p| p.to_f64_lossy())
        .collect();
    draw(
        &probs,
        state.num_qubits(),
        shots,
        noise.filter(|n| n.has_readout_noise()),
        seed,
    )
}

/// Draw `shots` outcomes from an explicit distribution over `2^num_qubits`
/// basis states. Weights need not be normalized.
pub fn sample_distribution(probs: &[f64], shots: usize, seed: u64) -> Result<SampleCounts> {
    if probs.is_empty() || !probs.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "distribution length {} is not a power of two",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid(
            "distribution has negative or non-finite weights",
        ));
    }
    draw(
        probs,
        probs.len().trailing_zeros() as usize,
        shots,
        None,
        seed,
    )
}

fn draw(
    probs: &[f64],
    nq: usize,
    shots: usize,
    readout: Option<&NoiseModel>,
    seed: u64,
) -> Result<SampleCounts> {
    if shots == 0 {
        return Err(Error::invalid("shots must be >= 1"));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0f64;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::invalid("distribution has zero total weight"));
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * total;
        let mut z = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        if let Some(n) = readout {
            for q in 0..nq {
                let bit = (z >> q) & 1 == 1;
                let p = if bit { n.p_read1to0 } else { n.p_read0to1 };
                if p > 0.0 && rng.gen::<f64>() < p {
                    z ^= 1 << q;
                }
            }
        }
        hist[z] += 1;
    }
    let mut counts = SampleCounts::new(nq);
    for (z, &c) in hist.iter().enumerate() {
        if c > 0 {
            counts.record(z, c);
        }
    }
    Ok(counts)
}
