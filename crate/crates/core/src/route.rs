//! Route subproblems shared by the QUBO and compact encodings.
//!
//! A [`RouteProblem`] orders a set of *free* cities between an optional
//! pinned head and an optional pinned tail. A full fixed-endpoint tour is the
//! special case with both ends pinned plus the closing edge; a cluster of the
//! hybrid pipeline is an open path with zero, one or two pinned ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{path_cost, DistanceMatrix, TspInstance};
use crate::perm::Lexicographic;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteProblem<F> {
    dist: DistanceMatrix<F>,
    free: Vec<usize>,
    head: Option<usize>,
    tail: Option<usize>,
    closed: bool,
}

impl<F: Scalar> RouteProblem<F> {
    /// The closed fixed-endpoint tour of `instance`.
    pub fn from_instance(instance: &TspInstance<F>) -> Self {
        RouteProblem {
            dist: instance.distances().clone(),
            free: instance.intermediates(),
            head: Some(instance.start()),
            tail: Some(instance.end()),
            closed: true,
        }
    }

    /// An open path over `nodes`, with optional pinned ends that must belong to `nodes`.
    pub fn open_path(
        dist: &DistanceMatrix<F>,
        nodes: &[usize],
        head: Option<usize>,
        tail: Option<usize>,
    ) -> Result<Self> {
        for pin in [head, tail].into_iter().flatten() {
            if !nodes.contains(&pin) {
                return Err(Error::invalid(format!(
                    "pinned city {pin} not among path nodes"
                )));
            }
        }
        if head.is_some() && head == tail && nodes.len() > 1 {
            return Err(Error::invalid("head and tail pinned to the same city"));
        }
        if nodes.iter().any(|&c| c >= dist.len()) {
            return Err(Error::invalid("path node out of range"));
        }
        let free = nodes
            .iter()
            .copied()
            .filter(|&c| Some(c) != head && Some(c) != tail)
            .collect();
        Ok(RouteProblem {
            dist: dist.clone(),
            free,
            head,
            tail: if head == tail { None } else { tail },
            closed: false,
        })
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn head(&self) -> Option<usize> {
        self.head
    }

    pub fn tail(&self) -> Option<usize> {
        self.tail
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn distances(&self) -> &DistanceMatrix<F> {
        &self.dist
    }

    /// Total city count including pinned ends.
    pub fn num_cities(&self) -> usize {
        self.free.len() + self.head.is_some() as usize + self.tail.is_some() as usize
    }

    /// All cities of the route, pinned ends included.
    pub fn all_cities(&self) -> Vec<usize> {
        self.head
            .into_iter()
            .chain(self.free.iter().copied())
            .chain(self.tail)
            .collect()
    }

    /// Constant part of the cost: the closing edge of a closed route.
    pub fn constant(&self) -> F {
        match (self.closed, self.head, self.tail) {
            (true, Some(h), Some(t)) => self.dist.get(t, h),
            _ => F::zero(),
        }
    }

    /// Expand an ordering of the free cities (given as city indices) to the full route.
    pub fn full_order(&self, free_order: &[usize]) -> Vec<usize> {
        self.head
            .into_iter()
            .chain(free_order.iter().copied())
            .chain(self.tail)
            .collect()
    }

    /// Cost of the route with free cities in `free_order` (city indices).
    pub fn cost(&self, free_order: &[usize]) -> F {
        let full = self.full_order(free_order);
        if full.is_empty() {
            return F::zero();
        }
        path_cost(&self.dist, &full) + self.constant()
    }

    /// Free-city ordering for a permutation of slot indices into `free`.
    pub fn order_from_perm(&self, perm: &[usize]) -> Vec<usize> {
        perm.iter().map(|&k| self.free[k]).collect()
    }

    /// Exhaustive minimum over free-city orderings; the first minimum in
    /// lexicographic order wins ties.
    pub fn brute_force(&self) -> (Vec<usize>, F) {
        let mut best: Option<(Vec<usize>, F)> = None;
        for perm in Lexicographic::new(self.free.len()) {
            let order = self.order_from_perm(&perm);
            let c = self.cost(&order);
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((order, c));
            }
        }
        best.expect("at least one ordering")
    }

    /// Largest cost over all orderings.
    pub fn worst_cost(&self) -> F {
        Lexicographic::new(self.free.len())
            .map(|p| self.cost(&self.order_from_perm(&p)))
            .fold(F::zero(), F::max)
    }
}
