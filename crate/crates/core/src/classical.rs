//! Exact brute-force baseline.

use crate::error::{Error, Result};
use crate::instance::{Tour, TspInstance};
use crate::perm::Lexicographic;
use crate::scalar::Scalar;

/// Default cap on instance size for exhaustive search.
pub const DEFAULT_BRUTE_FORCE_LIMIT: usize = 12;

/// All fixed-endpoint tours of `instance`, in lexicographic order of the
/// intermediate cities' storage positions. Yields `(n - 2)!` tours.
pub fn enumerate_tours<F: Scalar>(instance: &TspInstance<F>) -> impl Iterator<Item = Tour> + '_ {
    let mid = instance.intermediates();
    let (s, e) = (instance.start(), instance.end());
    Lexicographic::new(mid.len()).map(move |perm| {
        let mut order = Vec::with_capacity(perm.len() + 2);
        order.push(s);
        order.extend(perm.iter().map(|&k| mid[k]));
        order.push(e);
        Tour::new(order)
    })
}

/// Minimum-cost tour; the first minimum in enumeration order wins ties.
pub fn brute_force_optimal<F: Scalar>(instance: &TspInstance<F>) -> Result<(Tour, F)> {
    brute_force_optimal_bounded(instance, DEFAULT_BRUTE_FORCE_LIMIT)
}

pub fn brute_force_optimal_bounded<F: Scalar>(
    instance: &TspInstance<F>,
    limit: usize,
) -> Result<(Tour, F)> {
    if instance.n() > limit {
        return Err(Error::Infeasible(format!(
            "brute force limited to {limit} cities, instance has {}",
            instance.n()
        )));
    }
    let mut best: Option<(Tour, F)> = None;
    for tour in enumerate_tours(instance) {
        let c = instance.cycle_cost_unchecked(tour.order());
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((tour, c));
        }
    }
    Ok(best.expect("at least one tour"))
}

/// Largest tour cost over all tours.
pub fn brute_force_worst<F: Scalar>(instance: &TspInstance<F>) -> F {
    enumerate_tours(instance)
        .map(|t| instance.cycle_cost_unchecked(t.order()))
        .fold(F::zero(), F::max)
}

/// Greedy nearest-neighbor tour from the start city, visiting the end city last.
pub fn nearest_neighbor_tour<F: Scalar>(instance: &TspInstance<F>) -> Tour {
    let mut left = instance.intermediates();
    let mut order = vec![instance.start()];
    while !left.is_empty() {
        let cur = *order.last().unwrap();
        let (k, _) = left
            .iter()
            .enumerate()
            .fold((0, F::infinity()), |(bk, bd), (k, &c)| {
                let d = instance.dist(cur, c);
                if d < bd {
                    (k, d)
                } else {
                    (bk, bd)
                }
            });
        order.push(left.remove(k));
    }
    order.push(instance.end());
    Tour::new(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{european_cities, select_subinstance, City};
    use std::collections::HashSet;

    fn inst(n: usize, seed: u64) -> TspInstance<f64> {
        select_subinstance(&european_cities(), n, seed, 10).unwrap()
    }

    fn three_city() -> TspInstance<f64> {
        let pool = european_cities();
        let pick = |n: &str| pool.iter().find(|c| c.name == n).unwrap().clone();
        TspInstance::with_endpoints(
            vec![pick("Calais"), pick("Paris"), pick("Milan")],
            "Calais",
            "Milan",
        )
        .unwrap()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_tours(&three_city()).count(), 1);
        assert_eq!(enumerate_tours(&inst(5, 0)).count(), 6);
        let i8 = inst(8, 0);
        let tours: Vec<Tour> = enumerate_tours(&i8).collect();
        assert_eq!(tours.len(), 720);
        for t in &tours {
            i8.validate_tour(t).unwrap();
        }
        let distinct: HashSet<&Tour> = tours.iter().collect();
        assert_eq!(distinct.len(), 720);
    }

    #[test]
    fn three_city_optimum_is_the_only_tour() {
        let i = three_city();
        let (t, c) = brute_force_optimal(&i).unwrap();
        assert_eq!(t.order(), &[0, 1, 2]);
        assert_eq!(c, i.tour_cost(&t).unwrap());
    }

    #[test]
    fn optimum_dominates_every_tour() {
        for n in 4..=7 {
            for seed in 0..3 {
                let i = inst(n, seed);
                let (_, best) = brute_force_optimal(&i).unwrap();
                for t in enumerate_tours(&i) {
                    assert!(best <= i.tour_cost(&t).unwrap());
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let i = inst(7, 4);
        assert_eq!(
            brute_force_optimal(&i).unwrap(),
            brute_force_optimal(&i).unwrap()
        );
    }

    #[test]
    fn invariant_under_relabeling() {
        let i = inst(7, 9);
        let (_, c0) = brute_force_optimal(&i).unwrap();
        let perm: Vec<usize> = (0..i.n()).rev().collect();
        let (r, _) = i.relabeled(&perm).unwrap();
        let (_, c1) = brute_force_optimal(&r).unwrap();
        assert!((c0 - c1).abs() < 1e-9);
    }

    #[test]
    fn size_bound_enforced() {
        let cities: Vec<City> = (0..13)
            .map(|k| City::new(format!("c{k}"), k as f64, 0.0).unwrap())
            .collect();
        let big = TspInstance::<f64>::new(cities, 0, 1).unwrap();
        let err = brute_force_optimal(&big).unwrap_err();
        assert!(err.to_string().contains("12"));
    }

    #[test]
    fn nearest_neighbor_is_valid() {
        let i = inst(8, 1);
        i.validate_tour(&nearest_neighbor_tour(&i)).unwrap();
    }
}
