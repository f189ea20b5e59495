use crate::qsim::{bitstring, SampleCounts};

/// `[bit_0, .., bit_{q-1}, count / shots]` for one sampled bitstring.
pub fn featurize(bits: &str, counts: &SampleCounts) -> Vec<f64> {
    let mut v: Vec<f64> = bits
        .bytes()
        .map(|b| if b == b'1' { 1.0 } else { 0.0 })
        .collect();
    v.push(counts.frequency(bits));
    v
}

/// Feature rows for every observed bitstring, in ascending key order.
pub fn featurize_all(counts: &SampleCounts) -> Vec<(String, Vec<f64>)> {
    counts
        .counts
        .keys()
        .map(|k| (k.clone(), featurize(k, counts)))
        .collect()
}

pub fn featurize_index(z: usize, counts: &SampleCounts) -> Vec<f64> {
    featurize(&bitstring(z, counts.num_qubits), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{sample, simulate, Circuit, Gate};

    #[test]
    fn fixed_examples() {
        let mut c = SampleCounts::new(4);
        c.record(0b0101, 25);
        c.record(0b0011, 75);
        assert_eq!(featurize("0000", &c), vec![0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(featurize("1010", &c), vec![1.0, 0.0, 1.0, 0.0, 0.25]);
        assert_eq!(featurize_index(0b0101, &c), vec![1.0, 0.0, 1.0, 0.0, 0.25]);
    }

    #[test]
    fn frequency_column_sums_to_one() {
        let mut circ = Circuit::<f64>::new(4);
        for q in 0..4 {
            circ.push(Gate::Rx {
                target: q,
                angle: 0.5 + q as f64,
            })
            .unwrap();
        }
        let counts = sample(&simulate(&circ, None).unwrap(), 1000, None, 2).unwrap();
        let rows = featurize_all(&counts);
        assert!(rows.iter().all(|(_, r)| r.len() == 5));
        let total: f64 = rows.iter().map(|(_, r)| r[4]).sum();
        assert!(total <= 1.0 + 1e-12 && total > 1.0 - 1e-12);
    }
}
