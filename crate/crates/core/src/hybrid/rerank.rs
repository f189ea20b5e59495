use serde::{Deserialize, Serialize};

use super::encoded::EncodedRoute;
use crate::error::Result;
use crate::instance::Tour;
use crate::ml::{featurize_index, forest_fit, ForestConfig, ForestModel, TrainingSet};
use crate::qsim::SampleCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub tour: Tour,
    pub features: Vec<f64>,
    pub predicted: f64,
}

/// Sort candidates by predicted cost, ascending. The sort is stable, so equal
/// predictions keep their input order.
pub fn ml_rerank(candidates: Vec<(Tour, Vec<f64>)>, model: &ForestModel) -> Result<Vec<Ranked>> {
    let mut ranked = candidates
        .into_iter()
        .map(|(tour, features)| {
            let predicted = model.predict(&features)?;
            Ok(Ranked {
                tour,
                features,
                predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.predicted.total_cmp(&b.predicted));
    Ok(ranked)
}

/// One row per distinct valid bitstring of `counts`: its bits and observed
/// frequency as features, its route cost as label. `None` when fewer than two
/// valid bitstrings were observed.
pub fn training_set(enc: &EncodedRoute, counts: &SampleCounts) -> Option<TrainingSet> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (z, _) in counts.by_index() {
        if let Some(order) = enc.decode(z) {
            features.push(featurize_index(z, counts));
            labels.push(enc.order_cost(&order));
        }
    }
    if labels.len() < 2 {
        return None;
    }
    TrainingSet::new(features, labels).ok()
}

/// Fit the cost regressor on the valid samples of `counts`.
pub fn fit_cost_model(
    enc: &EncodedRoute,
    counts: &SampleCounts,
    config: &ForestConfig,
) -> Result<Option<ForestModel>> {
    match training_set(enc, counts) {
        Some(data) => Ok(Some(forest_fit(&data, config)?)),
        None => Ok(None),
    }
}

/// Features of a full route order in the encoding of `enc`.
pub fn route_features(
    enc: &EncodedRoute,
    order: &[usize],
    counts: &SampleCounts,
) -> Result<Vec<f64>> {
    Ok(featurize_index(enc.encode(order)?, counts))
}

/// Re-rank `pool` with `model` (when present), keep the first `top`, and
/// return the cheapest survivor by true cost. Ties keep rank order.
pub fn pick_from_pool(
    enc: &EncodedRoute,
    pool: Vec<Vec<usize>>,
    counts: &SampleCounts,
    model: Option<&ForestModel>,
    top: Option<usize>,
    true_cost: impl Fn(&[usize]) -> f64,
) -> Result<Option<Vec<usize>>> {
    let shortlist: Vec<Vec<usize>> = match model {
        Some(m) => {
            let cands = pool
                .into_iter()
                .map(|o| Ok((Tour::new(o.clone()), route_features(enc, &o, counts)?)))
                .collect::<Result<Vec<_>>>()?;
            let ranked = ml_rerank(cands, m)?;
            let keep = top.unwrap_or(ranked.len());
            ranked
                .into_iter()
                .take(keep)
                .map(|r| r.tour.into_order())
                .collect()
        }
        None => pool,
    };
    Ok(shortlist
        .into_iter()
        .fold(None, |best: Option<(Vec<usize>, f64)>, o| {
            let c = true_cost(&o);
            match best {
                Some((_, bc)) if bc <= c => best,
                _ => Some((o, c)),
            }
        })
        .map(|(o, _)| o))
}
