//! QUBO encoding of fixed-endpoint routes, the Ising change of variables, and
//! bitstring decoding.
//!
//! Variable `x[c * m + t]` is 1 when free city `c` (position in the route's
//! free list) occupies slot `t`; `m` is the number of free cities. Bit `i` of
//! a basis-state index is variable `i`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Tour, TspInstance};
use crate::route::RouteProblem;
use crate::scalar::Scalar;

pub const DEFAULT_PENALTY_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarSlot {
    /// City index in the instance.
    pub city: usize,
    pub slot: usize,
    pub var: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTerm<F> {
    pub i: usize,
    pub j: usize,
    pub w: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel<F> {
    pub num_vars: usize,
    /// Dense linear coefficients, one per variable.
    pub linear: Vec<F>,
    /// Upper-triangular couplings, sorted by `(i, j)` with `i < j`.
    pub quadratic: Vec<QuadTerm<F>>,
    pub offset: F,
    pub penalty: F,
    pub var_map: Vec<VarSlot>,
    route: RouteProblem<F>,
}

/// Which constraint a decoded bitstring violates first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A city is assigned to `ones` slots instead of exactly one.
    City { city: usize, ones: usize },
    /// A slot holds `ones` cities instead of exactly one.
    Slot { slot: usize, ones: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::City { city, ones } => write!(f, "city {city} occupies {ones} slots"),
            Violation::Slot { slot, ones } => write!(f, "slot {slot} holds {ones} cities"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    /// Full route order, pinned ends included.
    Valid(Vec<usize>),
    Invalid(Violation),
}

impl Decoded {
    pub fn into_order(self) -> Option<Vec<usize>> {
        match self {
            Decoded::Valid(o) => Some(o),
            Decoded::Invalid(_) => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Decoded::Valid(_))
    }
}

/// Encode a fixed-endpoint instance. Penalty weight is `alpha * n * max_edge`.
pub fn encode_tsp_qubo<F: Scalar>(instance: &TspInstance<F>, alpha: F) -> Result<QuboModel<F>> {
    if instance.n() < 3 {
        return Err(Error::invalid("QUBO encoding needs at least 3 cities"));
    }
    encode_route_qubo(&RouteProblem::from_instance(instance), alpha)
}

pub fn encode_route_qubo<F: Scalar>(route: &RouteProblem<F>, alpha: F) -> Result<QuboModel<F>> {
    if alpha < F::one() || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "penalty multiplier {alpha} must be >= 1"
        )));
    }
    let m = route.free().len();
    if m == 0 {
        return Err(Error::invalid("route has no free cities to encode"));
    }
    let dist = route.distances();
    let cities = route.all_cities();
    let max_edge = dist.max_edge_among(&cities);
    let scale = if max_edge > F::zero() {
        max_edge
    } else {
        F::one()
    };
    let penalty = alpha * F::from_usize_lossy(route.num_cities()) * scale;
    let two_a = penalty + penalty;

    let var = |c: usize, t: usize| c * m + t;
    let mut linear = vec![F::zero(); m * m];
    let mut quad: BTreeMap<(usize, usize), F> = BTreeMap::new();
    let mut add_quad = |a: usize, b: usize, w: F| {
        let key = if a < b { (a, b) } else { (b, a) };
        let e = quad.entry(key).or_insert_with(F::zero);
        *e = *e + w;
    };

    let free = route.free();
    if let Some(h) = route.head() {
        for (c, &city) in free.iter().enumerate() {
            linear[var(c, 0)] = linear[var(c, 0)] + dist.get(h, city);
        }
    }
    if let Some(tl) = route.tail() {
        for (c, &city) in free.iter().enumerate() {
            linear[var(c, m - 1)] = linear[var(c, m - 1)] + dist.get(city, tl);
        }
    }
    for t in 0..m.saturating_sub(1) {
        for (c, &a) in free.iter().enumerate() {
            for (c2, &b) in free.iter().enumerate() {
                if c != c2 {
                    add_quad(var(c, t), var(c2, t + 1), dist.get(a, b));
                }
            }
        }
    }

    // Each one-hot group contributes A * (1 - sum x)^2 = A - A sum x + 2A sum_{i<j} x_i x_j;
    // every variable sits in one city group and one slot group.
    for l in linear.iter_mut() {
        *l = *l - two_a;
    }
    for c in 0..m {
        for t in 0..m {
            for t2 in (t + 1)..m {
                add_quad(var(c, t), var(c, t2), two_a);
            }
        }
    }
    for t in 0..m {
        for c in 0..m {
            for c2 in (c + 1)..m {
                add_quad(var(c, t), var(c2, t), two_a);
            }
        }
    }

    let offset = route.constant() + two_a * F::from_usize_lossy(m);
    let var_map = (0..m)
        .flat_map(|c| {
            (0..m).map(move |t| VarSlot {
                city: free[c],
                slot: t,
                var: var(c, t),
            })
        })
        .collect();
    let quadratic = quad
        .into_iter()
        .filter(|(_, w)| *w != F::zero())
        .map(|((i, j), w)| QuadTerm { i, j, w })
        .collect();

    Ok(QuboModel {
        num_vars: m * m,
        linear,
        quadratic,
        offset,
        penalty,
        var_map,
        route: route.clone(),
    })
}

impl<F: Scalar> QuboModel<F> {
    pub fn route(&self) -> &RouteProblem<F> {
        &self.route
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_vars {
            return Err(Error::LengthMismatch {
                expected: self.num_vars,
                actual: len,
            });
        }
        Ok(())
    }

    pub fn energy(&self, bits: &[bool]) -> Result<F> {
        self.check_len(bits.len())?;
        let mut e = self.offset;
        for (l, &b) in self.linear.iter().zip(bits) {
            if b {
                e = e + *l;
            }
        }
        for q in &self.quadratic {
            if bits[q.i] && bits[q.j] {
                e = e + q.w;
            }
        }
        Ok(e)
    }

    /// Energy of the basis state whose bit `i` is variable `i`.
    pub fn energy_of_index(&self, z: usize) -> F {
        let bit = |i: usize| (z >> i) & 1 == 1;
        let mut e = self.offset;
        for (i, l) in self.linear.iter().enumerate() {
            if bit(i) {
                e = e + *l;
            }
        }
        for q in &self.quadratic {
            if bit(q.i) && bit(q.j) {
                e = e + q.w;
            }
        }
        e
    }

    pub fn decode(&self, bits: &[bool]) -> Result<Decoded> {
        self.check_len(bits.len())?;
        let m = self.route.free().len();
        for c in 0..m {
            let ones = (0..m).filter(|&t| bits[c * m + t]).count();
            if ones != 1 {
                return Ok(Decoded::Invalid(Violation::City {
                    city: self.route.free()[c],
                    ones,
                }));
            }
        }
        let mut order = Vec::with_capacity(m);
        for t in 0..m {
            let hits: Vec<usize> = (0..m).filter(|&c| bits[c * m + t]).collect();
            if hits.len() != 1 {
                return Ok(Decoded::Invalid(Violation::Slot {
                    slot: t,
                    ones: hits.len(),
                }));
            }
            order.push(self.route.free()[hits[0]]);
        }
        Ok(Decoded::Valid(self.route.full_order(&order)))
    }

    /// One-hot bits for a full route order (pinned ends included).
    pub fn encode_order(&self, full_order: &[usize]) -> Result<Vec<bool>> {
        let free = self.route.free();
        let m = free.len();
        let inner: Vec<usize> = full_order
            .iter()
            .copied()
            .filter(|c| Some(*c) != self.route.head() && Some(*c) != self.route.tail())
            .collect();
        if inner.len() != m || self.route.full_order(&inner) != full_order {
            return Err(Error::MalformedTour(format!(
                "order {full_order:?} does not fit the encoded route"
            )));
        }
        let mut bits = vec![false; m * m];
        for (t, city) in inner.iter().enumerate() {
            let c = free
                .iter()
                .position(|f| f == city)
                .ok_or_else(|| Error::MalformedTour(format!("city {city} not encoded")))?;
            bits[c * m + t] = true;
        }
        Ok(bits)
    }
}

pub fn qubo_energy<F: Scalar>(model: &QuboModel<F>, bits: &[bool]) -> Result<F> {
    model.energy(bits)
}

/// Decode to a [`Tour`] when the model encodes a full instance.
pub fn decode_bitstring<F: Scalar>(
    model: &QuboModel<F>,
    bits: &[bool],
) -> Result<Result<Tour, Violation>> {
    Ok(match model.decode(bits)? {
        Decoded::Valid(order) => Ok(Tour::new(order)),
        Decoded::Invalid(v) => Err(v),
    })
}

/// Spin model `E(s) = constant + sum h_i s_i + sum J_ij s_i s_j`, `s = 1 - 2x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel<F> {
    pub num_spins: usize,
    pub h: Vec<F>,
    pub j: Vec<QuadTerm<F>>,
    pub constant: F,
}

impl<F: Scalar> IsingModel<F> {
    pub fn zero(num_spins: usize) -> Self {
        IsingModel {
            num_spins,
            h: vec![F::zero(); num_spins],
            j: Vec::new(),
            constant: F::zero(),
        }
    }

    pub fn energy(&self, spins: &[i8]) -> Result<F> {
        if spins.len() != self.num_spins {
            return Err(Error::LengthMismatch {
                expected: self.num_spins,
                actual: spins.len(),
            });
        }
        let s = |i: usize| F::from_i8(spins[i]).expect("spin");
        let mut e = self.constant;
        for (i, h) in self.h.iter().enumerate() {
            e = e + *h * s(i);
        }
        for t in &self.j {
            e = e + t.w * s(t.i) * s(t.j);
        }
        Ok(e)
    }

    /// Energy of basis state `z`: bit 0 maps to spin +1, bit 1 to spin -1.
    pub fn energy_of_index(&self, z: usize) -> F {
        let s = |i: usize| {
            if (z >> i) & 1 == 1 {
                -F::one()
            } else {
                F::one()
            }
        };
        let mut e = self.constant;
        for (i, h) in self.h.iter().enumerate() {
            e = e + *h * s(i);
        }
        for t in &self.j {
            e = e + t.w * s(t.i) * s(t.j);
        }
        e
    }

    /// Energies of every basis state, indexed by `z`.
    pub fn energy_table(&self) -> Vec<F> {
        (0..1usize << self.num_spins)
            .map(|z| self.energy_of_index(z))
            .collect()
    }

    /// Largest absolute field or coupling, zero for the empty model.
    pub fn max_abs_coefficient(&self) -> F {
        self.h
            .iter()
            .copied()
            .chain(self.j.iter().map(|t| t.w))
            .fold(F::zero(), |m, v| m.max(v.abs()))
    }

    /// Copy with every field and coupling multiplied by `factor` (the constant too).
    pub fn scaled(&self, factor: F) -> Self {
        IsingModel {
            num_spins: self.num_spins,
            h: self.h.iter().map(|&v| v * factor).collect(),
            j: self
                .j
                .iter()
                .map(|t| QuadTerm {
                    i: t.i,
                    j: t.j,
                    w: t.w * factor,
                })
                .collect(),
            constant: self.constant * factor,
        }
    }
}

pub fn spins_from_bits(bits: &[bool]) -> Vec<i8> {
    bits.iter().map(|&b| if b { -1 } else { 1 }).collect()
}

pub fn qubo_to_ising<F: Scalar>(model: &QuboModel<F>) -> IsingModel<F> {
    let half = F::lit(0.5);
    let quarter = F::lit(0.25);
    let mut h: Vec<F> = model.linear.iter().map(|&a| -a * half).collect();
    let mut constant = model.offset
        + model
            .linear
            .iter()
            .fold(F::zero(), |acc, &a| acc + a * half);
    let mut j = Vec::with_capacity(model.quadratic.len());
    for q in &model.quadratic {
        let b4 = q.w * quarter;
        constant = constant + b4;
        h[q.i] = h[q.i] - b4;
        h[q.j] = h[q.j] - b4;
        j.push(QuadTerm {
            i: q.i,
            j: q.j,
            w: b4,
        });
    }
    IsingModel {
        num_spins: model.num_vars,
        h,
        j,
        constant,
    }
}

pub fn bits_of_index(z: usize, len: usize) -> Vec<bool> {
    (0..len).map(|i| (z >> i) & 1 == 1).collect()
}

pub fn index_of_bits(bits: &[bool]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{brute_force_optimal, brute_force_worst, enumerate_tours};
    use crate::instance::{european_cities, select_subinstance};

    fn inst(n: usize, seed: u64) -> TspInstance<f64> {
        select_subinstance(&european_cities(), n, seed, 10).unwrap()
    }

    fn three_city() -> TspInstance<f64> {
        let pool = european_cities();
        let pick = |n: &str| pool.iter().find(|c| c.name == n).unwrap().clone();
        TspInstance::with_endpoints(
            vec![pick("Calais"), pick("Zurich"), pick("Milan")],
            "Calais",
            "Milan",
        )
        .unwrap()
    }

    /// Independent evaluator: symmetric dense matrix from the sparse terms.
    fn dense_energy(model: &QuboModel<f64>, bits: &[bool]) -> f64 {
        let n = model.num_vars;
        let mut q = vec![vec![0.0; n]; n];
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = model.linear[i];
        }
        for t in &model.quadratic {
            q[t.i][t.j] += t.w / 2.0;
            q[t.j][t.i] += t.w / 2.0;
        }
        let x: Vec<f64> = bits.iter().map(|&b| b as u8 as f64).collect();
        let mut e = model.offset;
        for i in 0..n {
            for j in 0..n {
                e += x[i] * q[i][j] * x[j];
            }
        }
        e
    }

    #[test]
    fn three_cities_single_variable() {
        let i = three_city();
        let m = encode_tsp_qubo(&i, 2.0).unwrap();
        assert_eq!(m.num_vars, 1);
        let (_, c) = brute_force_optimal(&i).unwrap();
        assert!((m.energy(&[true]).unwrap() - c).abs() < 1e-9);
        let e0 = m.energy(&[false]).unwrap();
        // Both the city group and the slot group are empty.
        assert!((e0 - (i.dist(2, 0) + 2.0 * m.penalty)).abs() < 1e-9);
        assert!(e0 > c);
    }

    #[test]
    fn two_cities_rejected() {
        let pool = european_cities();
        let i = TspInstance::<f64>::with_endpoints(
            vec![pool[3].clone(), pool[5].clone()],
            "Calais",
            "Milan",
        )
        .unwrap();
        assert!(encode_tsp_qubo(&i, 2.0).is_err());
        assert!(encode_tsp_qubo(&three_city(), 0.5).is_err());
    }

    #[test]
    fn exhaustive_minimum_matches_brute_force() {
        for (n, vars) in [(4, 4), (5, 9)] {
            let i = inst(n, 1);
            let m = encode_tsp_qubo(&i, 2.0).unwrap();
            assert_eq!(m.num_vars, vars);
            let min = (0..1usize << vars)
                .map(|z| m.energy_of_index(z))
                .fold(f64::INFINITY, f64::min);
            let (_, c) = brute_force_optimal(&i).unwrap();
            assert!((min - c).abs() < 1e-9, "n={n}: {min} vs {c}");
        }
    }

    #[test]
    fn zero_bits_pay_full_penalty() {
        let i = inst(4, 0);
        let m = encode_tsp_qubo(&i, 2.0).unwrap();
        let e = m.energy(&[false; 4]).unwrap();
        // Four violated one-hot groups, A each, plus the closing edge.
        assert!((e - (i.dist(i.end(), i.start()) + 4.0 * m.penalty)).abs() < 1e-9);
        assert!((e - m.offset).abs() < 1e-12);
    }

    #[test]
    fn valid_assignments_match_tour_cost() {
        for n in 3..=6 {
            let i = if n == 3 { three_city() } else { inst(n, 5) };
            let m = encode_tsp_qubo(&i, 2.0).unwrap();
            for t in enumerate_tours(&i) {
                let bits = m.encode_order(t.order()).unwrap();
                let e = m.energy(&bits).unwrap();
                assert!((e - i.tour_cost(&t).unwrap()).abs() < 1e-9);
                assert_eq!(decode_bitstring(&m, &bits).unwrap(), Ok(t));
            }
        }
    }

    #[test]
    fn sparse_matches_dense_evaluator() {
        let i = inst(4, 2);
        let m = encode_tsp_qubo(&i, 2.0).unwrap();
        for z in 0..16 {
            let bits = bits_of_index(z, 4);
            assert!((m.energy(&bits).unwrap() - dense_energy(&m, &bits)).abs() < 1e-9);
        }
        let i5 = inst(5, 8);
        let m5 = encode_tsp_qubo(&i5, 3.0).unwrap();
        for z in (0..512).step_by(7) {
            let bits = bits_of_index(z, 9);
            assert!((m5.energy(&bits).unwrap() - dense_energy(&m5, &bits)).abs() < 1e-9);
        }
    }

    #[test]
    fn penalty_dominance() {
        for n in 4..=5 {
            for seed in 0..4 {
                let i = inst(n, seed);
                let m = encode_tsp_qubo(&i, 2.0).unwrap();
                let worst = brute_force_worst(&i);
                for z in 0..1usize << m.num_vars {
                    let bits = bits_of_index(z, m.num_vars);
                    if !m.decode(&bits).unwrap().is_valid() {
                        assert!(m.energy(&bits).unwrap() > worst);
                    }
                }
            }
        }
    }

    #[test]
    fn decode_cases() {
        let i = inst(5, 0);
        let m = encode_tsp_qubo(&i, 2.0).unwrap();
        // Identity assignment: free city c in slot c.
        let mut bits = vec![false; 9];
        for c in 0..3 {
            bits[c * 3 + c] = true;
        }
        let mid = i.intermediates();
        let expect: Vec<usize> = std::iter::once(i.start())
            .chain(mid)
            .chain([i.end()])
            .collect();
        assert_eq!(m.decode(&bits).unwrap(), Decoded::Valid(expect));
        assert!(matches!(
            m.decode(&[false; 9]).unwrap(),
            Decoded::Invalid(Violation::City { ones: 0, .. })
        ));
        assert!(m.decode(&[false; 4]).is_err());
        assert!(m.energy(&[false; 10]).is_err());

        let m4 = encode_tsp_qubo(&inst(4, 0), 2.0).unwrap();
        let valid = (0..16)
            .filter(|&z| m4.decode(&bits_of_index(z, 4)).unwrap().is_valid())
            .count();
        assert_eq!(valid, 2);
    }

    #[test]
    fn ising_single_linear_term() {
        let i = three_city();
        let m = encode_tsp_qubo(&i, 2.0).unwrap();
        let is = qubo_to_ising(&m);
        assert_eq!(is.num_spins, 1);
        assert!(is.j.is_empty());
        assert!((is.h[0] + m.linear[0] / 2.0).abs() < 1e-12);
        assert!((is.constant - (m.offset + m.linear[0] / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn ising_of_zero_model() {
        let m = QuboModel::<f64> {
            num_vars: 3,
            linear: vec![0.0; 3],
            quadratic: vec![],
            offset: 7.5,
            penalty: 0.0,
            var_map: vec![],
            route: RouteProblem::from_instance(&inst(5, 0)),
        };
        let is = qubo_to_ising(&m);
        assert_eq!(is.h, vec![0.0; 3]);
        assert!(is.j.is_empty());
        assert_eq!(is.constant, 7.5);
    }

    #[test]
    fn ising_matches_qubo_exhaustively() {
        for (n, seed) in [(4, 0), (4, 7), (5, 3)] {
            let m = encode_tsp_qubo(&inst(n, seed), 2.0).unwrap();
            let is = qubo_to_ising(&m);
            for z in 0..1usize << m.num_vars {
                let bits = bits_of_index(z, m.num_vars);
                let a = m.energy(&bits).unwrap();
                let b = is.energy(&spins_from_bits(&bits)).unwrap();
                assert!((a - b).abs() < 1e-9);
                assert!((is.energy_of_index(z) - a).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn json_view_has_expected_fields() {
        let m = encode_tsp_qubo(&inst(4, 0), 2.0).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        for key in ["num_vars", "linear", "quadratic", "offset", "var_map"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: QuboModel<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }
}
