use std::ops::ControlFlow;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Encoding, SolveConfig};
use super::encoded::{CostModel, EncodedRoute};
use crate::error::Result;
use crate::optim::{nelder_mead, NelderMeadOptions, TracePoint};
use crate::qsim::{
    apply_gate_noise, apply_readout_noise, sample, sample_distribution, simulate, CircuitMetrics,
    NoiseModel, QaoaParams, SampleCounts,
};
use crate::route::RouteProblem;
use crate::seed::derive_seed;

/// Energy improvement below which the optimizer counts an evaluation as stalled.
pub const STALL_TOL_KM: f64 = 1e-6;
pub const STALL_WINDOW: usize = 10;
/// Shots drawn per evaluation to test `cost_threshold`.
pub const THRESHOLD_SHOTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub params: QaoaParams<f64>,
    /// Best expected energy seen.
    pub energy: f64,
    pub evaluations: usize,
    /// Every evaluation across all starts; `best` is the running minimum.
    pub trace: Vec<TracePoint<f64>>,
    /// Running minimum of sampled valid costs, when a threshold is configured.
    pub sampled_best: Vec<Option<f64>>,
}

/// Measurement distribution of `params`, averaged over noise trajectories
/// and pushed through the readout channel.
pub fn output_distribution(
    model: &CostModel,
    params: &QaoaParams<f64>,
    noise: Option<&NoiseModel>,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let circuit = model.circuit(params)?;
    let mut probs = match noise.filter(|n| n.has_gate_noise()) {
        None => simulate(&circuit, None)?.probabilities(),
        Some(n) => {
            let t = trajectories.max(1);
            let mut acc = vec![0.0; 1usize << model.num_qubits()];
            for k in 0..t {
                let (noisy, _) = apply_gate_noise(&circuit, n, derive_seed(seed, k as u64))?;
                for (a, p) in acc.iter_mut().zip(simulate(&noisy, None)?.probabilities()) {
                    *a += p;
                }
            }
            acc.iter_mut().for_each(|a| *a /= t as f64);
            acc
        }
    };
    if let Some(n) = noise {
        apply_readout_noise(&mut probs, n);
    }
    Ok(probs)
}

fn random_params(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2 * p)
        .map(|_| rng.gen_range(0.0..std::f64::consts::PI))
        .collect()
}

/// Nelder-Mead over the `2p` QAOA angles minimizing the expected energy of
/// `model`. The first start is `init` when given, every other start is
/// uniform in `[0, pi)`. Each start runs until `config.max_iters`
/// evaluations, until the best energy stalls, or until a sampled valid cost
/// reaches `config.cost_threshold`. `sampled_cost` maps a basis state to its
/// route cost (`None` when it encodes no route) and is only used for the
/// threshold test.
pub fn optimize_parameters(
    model: &CostModel,
    config: &SolveConfig,
    init: Option<&QaoaParams<f64>>,
    sampled_cost: &dyn Fn(usize) -> Option<f64>,
    seed: u64,
) -> Result<Optimized> {
    let p = config.p;
    let opts = NelderMeadOptions {
        max_evals: config.max_iters,
        initial_step: 0.5,
        stall_tol: STALL_TOL_KM,
        stall_window: STALL_WINDOW,
    };
    let table = model.table();
    let mut trace: Vec<TracePoint<f64>> = Vec::new();
    let mut sampled_best: Vec<Option<f64>> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut sampled_min: Option<f64> = None;
    let mut first_err = None;
    let mut reached = false;

    for start in 0..config.restarts {
        if reached {
            break;
        }
        let x0 = match (start, init) {
            (0, Some(i)) if i.layers() == p => i.to_vec(),
            _ => random_params(p, derive_seed(seed, 1 << 32 | start as u64)),
        };
        let m = nelder_mead(
            |x: &[f64]| {
                let eval_seed = derive_seed(seed, sampled_best.len() as u64);
                let outcome = QaoaParams::from_slice(x).and_then(|params| {
                    output_distribution(
                        model,
                        &params,
                        config.noise.as_ref(),
                        config.noise_trajectories,
                        eval_seed,
                    )
                });
                let probs = match outcome {
                    Ok(pr) => pr,
                    Err(e) => {
                        first_err.get_or_insert(e);
                        sampled_best.push(sampled_min);
                        return ControlFlow::Break(f64::INFINITY);
                    }
                };
                let energy: f64 = probs.iter().zip(table).map(|(p, e)| p * e).sum();
                if let Some(th) = config.cost_threshold {
                    if let Ok(counts) =
                        sample_distribution(&probs, THRESHOLD_SHOTS, derive_seed(eval_seed, 1))
                    {
                        for (z, _) in counts.by_index() {
                            if let Some(c) = sampled_cost(z) {
                                sampled_min = Some(sampled_min.map_or(c, |b: f64| b.min(c)));
                            }
                        }
                    }
                    sampled_best.push(sampled_min);
                    if sampled_min.is_some_and(|b| b <= th) {
                        reached = true;
                        return ControlFlow::Break(energy);
                    }
                } else {
                    sampled_best.push(None);
                }
                ControlFlow::Continue(energy)
            },
            &x0,
            &opts,
        );
        if let Some(e) = first_err.take() {
            return Err(e);
        }
        let offset = trace.len();
        let prior = trace.last().map_or(f64::INFINITY, |t| t.best);
        trace.extend(m.trace.iter().map(|t| TracePoint {
            eval: offset + t.eval,
            value: t.value,
            best: t.best.min(prior),
        }));
        if best.as_ref().is_none_or(|(_, b)| m.value < *b) {
            best = Some((m.x, m.value));
        }
    }

    let (x, energy) = best.expect("at least one start");
    Ok(Optimized {
        params: QaoaParams::from_slice(&x)?,
        energy,
        evaluations: trace.len(),
        trace,
        sampled_best,
    })
}

/// Final measurement: `shots` draws split evenly across noise trajectories,
/// each with readout flips. Without gate noise a single state is sampled.
pub fn sample_final(
    model: &CostModel,
    params: &QaoaParams<f64>,
    config: &SolveConfig,
    seed: u64,
) -> Result<(SampleCounts, CircuitMetrics)> {
    let circuit = model.circuit(params)?;
    let metrics = circuit.metrics();
    let noise = config.noise.as_ref();
    let counts = match noise.filter(|n| n.has_gate_noise()) {
        None => sample(&simulate(&circuit, None)?, config.shots, noise, seed)?,
        Some(n) => {
            let t = config.final_trajectories.min(config.shots);
            let mut all = SampleCounts::new(model.num_qubits());
            for k in 0..t {
                let shots = config.shots / t + usize::from(k < config.shots % t);
                let (noisy, _) = apply_gate_noise(&circuit, n, derive_seed(seed, 2 * k as u64))?;
                let state = simulate(&noisy, None)?;
                all.merge(&sample(
                    &state,
                    shots,
                    Some(n),
                    derive_seed(seed, 2 * k as u64 + 1),
                )?)?;
            }
            all
        }
    };
    Ok((counts, metrics))
}

/// A distinct valid route observed in a histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub order: Vec<usize>,
    pub cost: f64,
    pub count: u64,
    pub index: usize,
}

/// Valid routes in `counts`, cheapest first; ties go to the more frequent,
/// then to the lower basis index.
pub fn valid_candidates(enc: &EncodedRoute, counts: &SampleCounts) -> (Vec<Candidate>, u64) {
    let mut out = Vec::new();
    let mut valid = 0;
    for (z, c) in counts.by_index() {
        if let Some(order) = enc.decode(z) {
            valid += c;
            out.push(Candidate {
                cost: enc.order_cost(&order),
                order,
                count: c,
                index: z,
            });
        }
    }
    out.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then(b.count.cmp(&a.count))
            .then(a.index.cmp(&b.index))
    });
    (out, valid)
}

/// Greedy nearest-neighbor ordering of a route from its head (or its first
/// free city), ending at its tail.
pub fn greedy_order(route: &RouteProblem<f64>) -> Vec<usize> {
    let d = route.distances();
    let mut left: Vec<usize> = route.free().to_vec();
    let mut inner = Vec::with_capacity(left.len());
    let mut cur = match route.head() {
        Some(h) => h,
        None => {
            let first = left.remove(0);
            inner.push(first);
            first
        }
    };
    while !left.is_empty() {
        let (k, _) = left
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bd), (k, &c)| {
                let dc = d.get(cur, c);
                if dc < bd {
                    (k, dc)
                } else {
                    (bk, bd)
                }
            });
        cur = left.remove(k);
        inner.push(cur);
    }
    route.full_order(&inner)
}

#[derive(Debug, Clone)]
pub struct RouteOutcome {
    pub encoded: EncodedRoute,
    pub optimized: Optimized,
    pub counts: SampleCounts,
    pub metrics: CircuitMetrics,
    /// Distinct valid sampled routes, cheapest first.
    pub candidates: Vec<Candidate>,
    pub valid_shots: u64,
    /// Chosen full order: the cheapest candidate, or the greedy fallback.
    pub order: Vec<usize>,
    pub cost: f64,
    pub fallback_used: bool,
}

impl RouteOutcome {
    pub fn encoding(&self) -> Encoding {
        self.encoded.encoding()
    }
}

/// Encode, optimize, sample and decode one route subproblem.
pub fn solve_route(
    route: &RouteProblem<f64>,
    config: &SolveConfig,
    init: Option<&QaoaParams<f64>>,
    seed: u64,
) -> Result<RouteOutcome> {
    let encoding = config
        .encoding
        .unwrap_or_else(|| Encoding::auto(route.free().len()));
    let encoded = EncodedRoute::new(route, encoding, config.alpha)?;
    let model = encoded.cost_model()?;
    let cost_of = |z: usize| encoded.decode(z).map(|o| encoded.order_cost(&o));
    let optimized = optimize_parameters(&model, config, init, &cost_of, derive_seed(seed, 1))?;
    let (counts, metrics) = sample_final(&model, &optimized.params, config, derive_seed(seed, 2))?;
    let (candidates, valid_shots) = valid_candidates(&encoded, &counts);
    let (order, fallback_used) = match candidates.first() {
        Some(c) => (c.order.clone(), false),
        None => {
            log::warn!(
                "no valid sample among {} shots; using nearest-neighbor route",
                counts.shots
            );
            (greedy_order(route), true)
        }
    };
    let cost = encoded.order_cost(&order);
    Ok(RouteOutcome {
        encoded,
        optimized,
        counts,
        metrics,
        candidates,
        valid_shots,
        order,
        cost,
        fallback_used,
    })
}

/// Union of `config.ml_runs` sampling runs of `params`, each with its own
/// noise trajectory and `config.ml_shots` shots.
pub fn training_runs(
    model: &CostModel,
    params: &QaoaParams<f64>,
    config: &SolveConfig,
    seed: u64,
) -> Result<SampleCounts> {
    let circuit = model.circuit(params)?;
    let noise = config.noise.as_ref();
    let clean = simulate(&circuit, None)?;
    let mut all = SampleCounts::new(model.num_qubits());
    for r in 0..config.ml_runs {
        let r = r as u64;
        let state = match noise.filter(|n| n.has_gate_noise()) {
            Some(n) => simulate(
                &apply_gate_noise(&circuit, n, derive_seed(seed, 2 * r))?.0,
                None,
            )?,
            None => clean.clone(),
        };
        all.merge(&sample(
            &state,
            config.ml_shots,
            noise,
            derive_seed(seed, 2 * r + 1),
        )?)?;
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::config::Method;
    use crate::instance::{european_cities, select_subinstance, TspInstance};
    use crate::qubo::IsingModel;

    fn inst(n: usize, seed: u64) -> TspInstance<f64> {
        select_subinstance(&european_cities(), n, seed, 8).unwrap()
    }

    fn never(_: usize) -> Option<f64> {
        None
    }

    #[test]
    fn zero_model_energy_is_constant() {
        let mut ising = IsingModel::<f64>::zero(2);
        ising.constant = 7.5;
        let model = CostModel::ising(ising);
        let cfg = SolveConfig::default();
        let o = optimize_parameters(&model, &cfg, None, &never, 3).unwrap();
        assert!(o.trace.iter().all(|t| (t.value - 7.5).abs() < 1e-12));
        assert!((o.energy - 7.5).abs() < 1e-12);
    }

    #[test]
    fn single_spin_matches_grid_minimum() {
        let mut ising = IsingModel::<f64>::zero(1);
        ising.h[0] = 1.0;
        let model = CostModel::ising(ising);
        let mut grid_min = f64::INFINITY;
        for i in 0..50 {
            for j in 0..50 {
                let g = std::f64::consts::PI * i as f64 / 50.0;
                let b = std::f64::consts::PI * j as f64 / 50.0;
                let params = QaoaParams::new(vec![g], vec![b]).unwrap();
                let probs = output_distribution(&model, &params, None, 1, 0).unwrap();
                let e: f64 = probs.iter().zip(model.table()).map(|(p, e)| p * e).sum();
                grid_min = grid_min.min(e);
            }
        }
        let o = optimize_parameters(&model, &SolveConfig::default(), None, &never, 0).unwrap();
        assert!(
            (o.energy - grid_min).abs() < 1e-2 || o.energy < grid_min,
            "{} vs {grid_min}",
            o.energy
        );
    }

    #[test]
    fn tsp_trace_is_monotone() {
        let enc = EncodedRoute::new(
            &RouteProblem::from_instance(&inst(4, 2)),
            Encoding::Qubo,
            2.0,
        )
        .unwrap();
        let model = enc.cost_model().unwrap();
        let cfg = SolveConfig {
            restarts: 3,
            ..SolveConfig::default()
        };
        let o = optimize_parameters(&model, &cfg, None, &never, 5).unwrap();
        assert!(o.trace.windows(2).all(|w| w[1].best <= w[0].best));
        assert_eq!(o.evaluations, o.trace.len());
        assert!(o.evaluations <= 3 * cfg.max_iters);
        assert_eq!(o.trace.last().unwrap().best, o.energy);
    }

    #[test]
    fn threshold_stops_early_and_sampled_best_is_monotone() {
        let route = RouteProblem::from_instance(&inst(5, 0));
        let (_, opt) = route.brute_force();
        let enc = EncodedRoute::new(&route, Encoding::Compact, 2.0).unwrap();
        let model = enc.cost_model().unwrap();
        let cfg = SolveConfig {
            cost_threshold: Some(route.worst_cost() + 1.0),
            ..SolveConfig::default()
        };
        let cost_of = |z: usize| enc.decode(z).map(|o| enc.order_cost(&o));
        let o = optimize_parameters(&model, &cfg, None, &cost_of, 1).unwrap();
        assert_eq!(o.evaluations, 1);

        let cfg = SolveConfig {
            cost_threshold: Some(opt * 0.5),
            max_iters: 30,
            ..SolveConfig::default()
        };
        let o = optimize_parameters(&model, &cfg, None, &cost_of, 1).unwrap();
        assert_eq!(o.sampled_best.len(), o.evaluations);
        let seen: Vec<f64> = o.sampled_best.iter().flatten().copied().collect();
        assert!(seen.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn small_route_reaches_optimum() {
        let route = RouteProblem::from_instance(&inst(4, 0));
        let (_, opt) = route.brute_force();
        let cfg = SolveConfig::new(Method::Quantum);
        let out = solve_route(&route, &cfg, None, 0).unwrap();
        assert!(!out.fallback_used);
        assert!((out.cost - opt).abs() < 1e-9);
        assert!(out.valid_shots > 0 && out.valid_shots <= out.counts.shots);
        assert_eq!(out.counts.shots, cfg.shots as u64);
    }

    #[test]
    fn noisy_final_sampling_spends_every_shot() {
        let enc = EncodedRoute::new(
            &RouteProblem::from_instance(&inst(6, 1)),
            Encoding::Compact,
            2.0,
        )
        .unwrap();
        let model = enc.cost_model().unwrap();
        let cfg = SolveConfig {
            noise: Some(NoiseModel::default()),
            shots: 1001,
            ..SolveConfig::default()
        };
        let params = QaoaParams::new(vec![0.4], vec![0.3]).unwrap();
        let (c, m) = sample_final(&model, &params, &cfg, 9).unwrap();
        assert_eq!(c.shots, 1001);
        assert_eq!(c.counts.values().sum::<u64>(), 1001);
        assert_eq!(m.total_gates, 2 * model.num_qubits() + 1);
        assert_eq!(sample_final(&model, &params, &cfg, 9).unwrap().0, c);
    }

    #[test]
    fn greedy_order_respects_pins() {
        let i = inst(6, 3);
        let route = RouteProblem::from_instance(&i);
        let g = greedy_order(&route);
        assert_eq!(g, crate::classical::nearest_neighbor_tour(&i).into_order());
        let open = RouteProblem::open_path(i.distances(), &[1, 2, 4], None, Some(4)).unwrap();
        let g = greedy_order(&open);
        assert_eq!(g.len(), 3);
        assert_eq!(*g.last().unwrap(), 4);
    }

    #[test]
    fn training_union_counts_all_runs() {
        let enc = EncodedRoute::new(
            &RouteProblem::from_instance(&inst(5, 2)),
            Encoding::Compact,
            2.0,
        )
        .unwrap();
        let model = enc.cost_model().unwrap();
        let cfg = SolveConfig {
            ml_runs: 7,
            ml_shots: 33,
            noise: Some(NoiseModel::default()),
            ..SolveConfig::default()
        };
        let params = QaoaParams::new(vec![0.2], vec![0.9]).unwrap();
        let u = training_runs(&model, &params, &cfg, 4).unwrap();
        assert_eq!(u.shots, 7 * 33);
    }
}
