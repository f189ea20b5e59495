use std::collections::HashSet;
use std::time::Instant;

use super::archive::{best_entry, ArchiveEntry};
use super::config::{Encoding, Method, SolveConfig};
use super::encoded::EncodedRoute;
use super::pipeline::{
    greedy_order, optimize_parameters, solve_route, training_runs, RouteOutcome,
};
use super::record::RunRecord;
use super::rerank::{fit_cost_model, pick_from_pool};
use super::stitch::stitch_clusters;
use crate::classical::brute_force_optimal;
use crate::error::{Error, Result};
use crate::instance::{haversine_km, Tour, TspInstance};
use crate::ml::{kmeans, DEFAULT_MAX_ITER};
use crate::qsim::{QaoaParams, SampleCounts};
use crate::route::RouteProblem;
use crate::seed::derive_seed;

const KMEANS_STREAM: u64 = 1000;
const ML_STREAM: u64 = 2000;
const FOREST_STREAM: u64 = 3000;

/// Result of one solve plus the parameter-archive entries it produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: RunRecord,
    pub archive: Vec<ArchiveEntry>,
}

#[derive(Default)]
struct Tally {
    evaluations: usize,
    depth: usize,
    gates: usize,
    valid_shots: u64,
    shots: u64,
    fallback: bool,
    archive: Vec<ArchiveEntry>,
}

impl Tally {
    fn add(&mut self, r: &RouteOutcome) {
        self.evaluations += r.optimized.evaluations;
        self.depth = self.depth.max(r.metrics.depth);
        self.gates = self.gates.max(r.metrics.total_gates);
        self.valid_shots += r.valid_shots;
        self.shots += r.counts.shots;
        self.fallback |= r.fallback_used;
    }

    fn archive(&mut self, n: usize, encoding: Encoding, params: &QaoaParams<f64>, energy: f64) {
        self.archive.push(ArchiveEntry {
            n,
            encoding,
            p: params.layers(),
            gammas: params.gammas.clone(),
            betas: params.betas.clone(),
            energy,
        });
    }

    fn valid_fraction(&self) -> f64 {
        if self.shots == 0 {
            1.0
        } else {
            self.valid_shots as f64 / self.shots as f64
        }
    }
}

/// Run `config.method` on `instance`. `archive` supplies warm starts for
/// the ML methods; it is only read.
pub fn solve(
    instance: &TspInstance<f64>,
    config: &SolveConfig,
    archive: &[ArchiveEntry],
) -> Result<Outcome> {
    config.validate()?;
    let clock = Instant::now();
    let (_, classical_cost) = brute_force_optimal(instance)?;
    let mut tally = Tally::default();
    let tour = match config.method {
        Method::Classical => brute_force_optimal(instance)?.0,
        Method::Quantum | Method::QuantumMl => quantum(instance, config, archive, &mut tally)?,
        Method::Hybrid | Method::HybridMl => hybrid(instance, config, archive, &mut tally)?,
    };
    let best_cost = instance.tour_cost(&tour)?;
    let record = RunRecord {
        method: config.method,
        n: instance.n(),
        seed: config.seed,
        best_cost,
        best_tour: tour,
        classical_cost,
        approximation_ratio: crate::metrics::approximation_ratio(best_cost, classical_cost)?,
        iterations_used: tally.evaluations,
        circuit_depth: tally.depth,
        total_gates: tally.gates,
        valid_sample_fraction: tally.valid_fraction(),
        wall_time: clock.elapsed().as_secs_f64(),
        fallback_used: tally.fallback,
    };
    Ok(Outcome {
        record,
        archive: tally.archive,
    })
}

pub fn solve_classical(instance: &TspInstance<f64>, config: &SolveConfig) -> Result<RunRecord> {
    with_method(instance, config, Method::Classical, &[])
}

pub fn solve_quantum(instance: &TspInstance<f64>, config: &SolveConfig) -> Result<RunRecord> {
    with_method(instance, config, Method::Quantum, &[])
}

/// `config.method` picks between the plain and the ML variant.
pub fn solve_hybrid(instance: &TspInstance<f64>, config: &SolveConfig) -> Result<RunRecord> {
    let method = if config.method.uses_ml() {
        Method::HybridMl
    } else {
        Method::Hybrid
    };
    with_method(instance, config, method, &[])
}

fn with_method(
    instance: &TspInstance<f64>,
    config: &SolveConfig,
    method: Method,
    archive: &[ArchiveEntry],
) -> Result<RunRecord> {
    let cfg = SolveConfig {
        method,
        ..config.clone()
    };
    Ok(solve(instance, &cfg, archive)?.record)
}

fn warm_start(
    archive: &[ArchiveEntry],
    n: usize,
    encoding: Encoding,
    p: usize,
) -> Option<QaoaParams<f64>> {
    best_entry(archive, n, encoding, p)
        .and_then(|e| QaoaParams::new(e.gammas.clone(), e.betas.clone()).ok())
}

fn forest_for(config: &SolveConfig) -> crate::ml::ForestConfig {
    crate::ml::ForestConfig {
        seed: derive_seed(config.seed ^ config.forest.seed, FOREST_STREAM),
        ..config.forest
    }
}

fn push_unique(pool: &mut Vec<Vec<usize>>, seen: &mut HashSet<Vec<usize>>, order: Vec<usize>) {
    if seen.insert(order.clone()) {
        pool.push(order);
    }
}

fn full_encoding(config: &SolveConfig, free: usize) -> Encoding {
    config.encoding.unwrap_or_else(|| Encoding::auto(free))
}

fn quantum(
    instance: &TspInstance<f64>,
    config: &SolveConfig,
    archive: &[ArchiveEntry],
    tally: &mut Tally,
) -> Result<Tour> {
    let route = RouteProblem::from_instance(instance);
    let n = instance.n();
    let ml = config.method.uses_ml();
    let init = if ml {
        warm_start(
            archive,
            n,
            full_encoding(config, route.free().len()),
            config.p,
        )
    } else {
        None
    };
    let out = solve_route(&route, config, init.as_ref(), derive_seed(config.seed, 0))?;
    tally.add(&out);
    tally.archive(
        n,
        out.encoding(),
        &out.optimized.params,
        out.optimized.energy,
    );
    if !ml {
        return Ok(Tour::new(out.order));
    }

    let model = out.encoded.cost_model()?;
    let training = training_runs(
        &model,
        &out.optimized.params,
        config,
        derive_seed(config.seed, ML_STREAM),
    )?;
    let mut pool = Vec::new();
    let mut seen = HashSet::new();
    for c in &out.candidates {
        push_unique(&mut pool, &mut seen, c.order.clone());
    }
    for (z, _) in training.by_index() {
        if let Some(o) = out.encoded.decode(z) {
            push_unique(&mut pool, &mut seen, o);
        }
    }
    if pool.is_empty() {
        return Ok(Tour::new(out.order));
    }
    let forest = fit_cost_model(&out.encoded, &training, &forest_for(config))?;
    let pick = pick_from_pool(
        &out.encoded,
        pool,
        &training,
        forest.as_ref(),
        config.rerank_top,
        |o| out.encoded.order_cost(o),
    )?;
    Ok(Tour::new(pick.unwrap_or(out.order)))
}

/// Cluster membership for the hybrid pipeline. When the start and end
/// cities land in one cluster and more than one cluster was requested, that
/// cluster is split between them by proximity.
pub fn partition_cities(
    instance: &TspInstance<f64>,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let k = k.min(instance.n());
    let model = kmeans::<f64>(instance.cities(), k, DEFAULT_MAX_ITER, seed)?;
    let mut groups = model.members();
    let (s, e) = (instance.start(), instance.end());
    if k > 1 {
        if let Some(g) = groups.iter().position(|m| m.contains(&s) && m.contains(&e)) {
            let cities = instance.cities();
            let (near_s, near_e): (Vec<usize>, Vec<usize>) = groups[g].iter().partition(|&&c| {
                c == s
                    || (c != e
                        && haversine_km::<f64>(&cities[c], &cities[s])
                            <= haversine_km::<f64>(&cities[c], &cities[e]))
            });
            groups[g] = near_s;
            groups.push(near_e);
        }
    }
    Ok(groups)
}

/// Solve every cluster as an open path. Returns, per cluster, its candidate
/// full paths with the chosen one first.
fn solve_clusters(
    instance: &TspInstance<f64>,
    groups: &[Vec<usize>],
    config: &SolveConfig,
    tally: &mut Tally,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let (s, e) = (instance.start(), instance.end());
    let dist = instance.distances();
    let mut lists = Vec::with_capacity(groups.len());
    for (j, nodes) in groups.iter().enumerate() {
        let head = nodes.contains(&s).then_some(s);
        let tail = nodes.contains(&e).then_some(e);
        let route = RouteProblem::open_path(dist, nodes, head, tail)?;
        if route.free().len() <= 1 || nodes.len() <= 2 {
            lists.push(vec![route.full_order(&route.brute_force().0)]);
            continue;
        }
        let out = solve_route(&route, config, None, derive_seed(config.seed, j as u64))?;
        tally.add(&out);
        let mut list = vec![out.order.clone()];
        list.extend(
            out.candidates
                .iter()
                .map(|c| c.order.clone())
                .filter(|o| *o != out.order),
        );
        lists.push(list);
    }
    Ok(lists)
}

/// Shorten the longest lists until the Cartesian product fits in `cap`.
fn trim_lists(lists: &mut [Vec<Vec<usize>>], cap: usize) {
    let product = |ls: &[Vec<Vec<usize>>]| {
        ls.iter()
            .fold(1usize, |a, l| a.saturating_mul(l.len().max(1)))
    };
    while product(lists) > cap {
        let longest = (0..lists.len())
            .max_by_key(|&i| (lists[i].len(), usize::MAX - i))
            .expect("nonempty");
        let len = lists[longest].len();
        lists[longest].truncate(len - 1);
    }
}

fn product_indices(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &len in lens {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..len).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

fn hybrid(
    instance: &TspInstance<f64>,
    config: &SolveConfig,
    archive: &[ArchiveEntry],
    tally: &mut Tally,
) -> Result<Tour> {
    let groups = partition_cities(instance, config.k, derive_seed(config.seed, KMEANS_STREAM))?;
    if groups.len() == 1 {
        return quantum(instance, config, archive, tally);
    }
    let mut lists = solve_clusters(instance, &groups, config, tally)?;
    let chosen: Vec<Vec<usize>> = lists.iter().map(|l| l[0].clone()).collect();
    let base = stitch_clusters(&chosen, instance)?;
    if !config.method.uses_ml() {
        return Ok(base);
    }

    trim_lists(&mut lists, config.max_variants);
    let mut pool = Vec::new();
    let mut seen = HashSet::new();
    push_unique(&mut pool, &mut seen, base.order().to_vec());
    let lens: Vec<usize> = lists.iter().map(Vec::len).collect();
    for pick in product_indices(&lens) {
        let paths: Vec<Vec<usize>> = pick
            .iter()
            .zip(&lists)
            .map(|(&i, l)| l[i].clone())
            .collect();
        push_unique(
            &mut pool,
            &mut seen,
            stitch_clusters(&paths, instance)?.into_order(),
        );
    }

    let route = RouteProblem::from_instance(instance);
    let free = route.free().len();
    let encoded = match EncodedRoute::new(&route, full_encoding(config, free), config.alpha) {
        Ok(enc) => enc,
        Err(Error::Infeasible(_)) if config.encoding.is_some() => {
            EncodedRoute::new(&route, Encoding::Compact, config.alpha)?
        }
        Err(err) => return Err(err),
    };
    let model = encoded.cost_model()?;
    let n = instance.n();
    let init = warm_start(archive, n, encoded.encoding(), config.p);
    let cost_of = |z: usize| encoded.decode(z).map(|o| encoded.order_cost(&o));
    let opt = optimize_parameters(
        &model,
        config,
        init.as_ref(),
        &cost_of,
        derive_seed(config.seed, ML_STREAM),
    )?;
    tally.evaluations += opt.evaluations;
    let metrics = model.circuit(&opt.params)?.metrics();
    tally.depth = tally.depth.max(metrics.depth);
    tally.gates = tally.gates.max(metrics.total_gates);
    tally.archive(n, encoded.encoding(), &opt.params, opt.energy);
    let training: SampleCounts = training_runs(
        &model,
        &opt.params,
        config,
        derive_seed(config.seed, ML_STREAM + 1),
    )?;
    for (z, _) in training.by_index() {
        if let Some(o) = encoded.decode(z) {
            push_unique(&mut pool, &mut seen, o);
        }
    }
    let forest = fit_cost_model(&encoded, &training, &forest_for(config))?;
    let pick = pick_from_pool(
        &encoded,
        pool,
        &training,
        forest.as_ref(),
        config.rerank_top,
        |o| encoded.order_cost(o),
    )?;
    Ok(pick.map(Tour::new).unwrap_or(base))
}

/// Nearest-neighbor tour from the start city, used when no valid sample exists.
pub fn greedy_tour(instance: &TspInstance<f64>) -> Tour {
    Tour::new(greedy_order(&RouteProblem::from_instance(instance)))
}
