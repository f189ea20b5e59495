use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::City;
use crate::scalar::Scalar;

pub const DEFAULT_CLUSTERS: usize = 3;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<F> {
    pub k: usize,
    /// Centroids as `[lon, lat]`.
    pub centroids: Vec<[F; 2]>,
    /// Cluster id per input city.
    pub assignments: Vec<usize>,
    pub inertia: F,
    pub iterations: usize,
    pub converged: bool,
    /// Inertia after every assignment step.
    pub inertia_history: Vec<F>,
}

impl<F: Scalar> ClusterModel<F> {
    /// City indices per cluster, each in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

pub(crate) fn sq_dist<F: Scalar>(a: &[F; 2], b: &[F; 2]) -> F {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest<F: Scalar>(p: &[F; 2], centroids: &[[F; 2]]) -> usize {
    let mut best = 0;
    let mut bd = sq_dist(p, &centroids[0]);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < bd {
            bd = d;
            best = j;
        }
    }
    best
}

fn inertia<F: Scalar>(points: &[[F; 2]], centroids: &[[F; 2]], assign: &[usize]) -> F {
    points
        .iter()
        .zip(assign)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

/// k-means++ seeding: first centroid uniform, then proportional to squared
/// distance from the nearest chosen centroid.
fn seed_centroids<F: Scalar>(points: &[[F; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[F; 2]> {
    let mut chosen = vec![rng.gen_range(0..points.len())];
    while chosen.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|p| {
                chosen
                    .iter()
                    .map(|&c| sq_dist(p, &points[c]).to_f64_lossy())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a chosen one.
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        } else {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        };
        chosen.push(next);
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

/// Lloyd's algorithm on raw `(lon, lat)` degrees with the Euclidean metric.
///
/// Stops when an assignment step changes nothing or after `max_iter`
/// assignment steps. A cluster left empty by an update is moved onto the
/// point farthest from its own centroid.
pub fn kmeans<F: Scalar>(
    cities: &[City],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterModel<F>> {
    let points: Vec<[F; 2]> = cities
        .iter()
        .map(|c| [F::lit(c.lon), F::lit(c.lat)])
        .collect();
    kmeans_points(&points, k, max_iter, seed)
}

pub fn kmeans_points<F: Scalar>(
    points: &[[F; 2]],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterModel<F>> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if k > points.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let max_iter = max_iter.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut history = vec![inertia(points, &centroids, &assign)];
    let mut iterations = 1;
    let mut converged = false;

    while iterations < max_iter {
        // Update step.
        let mut sums = vec![[F::zero(); 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            sums[c][0] = sums[c][0] + p[0];
            sums[c][1] = sums[c][1] + p[1];
            counts[c] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                let n = F::from_usize_lossy(counts[j]);
                centroids[j] = [sums[j][0] / n, sums[j][1] / n];
            }
        }
        let mut reseeded = false;
        for j in 0..k {
            if counts[j] == 0 {
                reseeded = true;
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centroids[assign[a]]);
                        let db = sq_dist(&points[b], &centroids[assign[b]]);
                        da.partial_cmp(&db)
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(b.cmp(&a))
                    })
                    .expect("nonempty");
                centroids[j] = points[far];
                counts[assign[far]] -= 1;
                assign[far] = j;
                counts[j] = 1;
            }
        }

        // Assignment step; a point only moves to a strictly closer centroid.
        let mut changed = reseeded;
        for (i, p) in points.iter().enumerate() {
            let cand = nearest(p, &centroids);
            if sq_dist(p, &centroids[cand]) < sq_dist(p, &centroids[assign[i]]) {
                assign[i] = cand;
                changed = true;
            }
        }
        history.push(inertia(points, &centroids, &assign));
        iterations += 1;
        if !changed {
            converged = true;
            break;
        }
    }

    // Final centroids are the means of the final assignment.
    let mut sums = vec![[F::zero(); 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(&assign) {
        sums[c][0] = sums[c][0] + p[0];
        sums[c][1] = sums[c][1] + p[1];
        counts[c] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            let n = F::from_usize_lossy(counts[j]);
            centroids[j] = [sums[j][0] / n, sums[j][1] / n];
        }
    }
    let final_inertia = inertia(points, &centroids, &assign);
    Ok(ClusterModel {
        k,
        centroids,
        assignments: assign,
        inertia: final_inertia,
        iterations,
        converged,
        inertia_history: history,
    })
}
