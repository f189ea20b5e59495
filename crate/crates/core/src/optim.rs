//! Nelder-Mead simplex minimization.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions<F> {
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    /// Edge length of the initial simplex along every axis.
    pub initial_step: F,
    /// Stop once the best value improved by less than `stall_tol`
    /// over the last `stall_window` evaluations.
    pub stall_tol: F,
    pub stall_window: usize,
}

impl<F: Scalar> Default for NelderMeadOptions<F> {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 100,
            initial_step: F::lit(0.5),
            stall_tol: F::lit(1e-6),
            stall_window: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEvals,
    Stalled,
    Halted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<F> {
    pub eval: usize,
    pub value: F,
    pub best: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum<F> {
    pub x: Vec<F>,
    pub value: F,
    pub evals: usize,
    pub reason: StopReason,
    pub trace: Vec<TracePoint<F>>,
}

struct Tracker<'a, F, O> {
    f: &'a mut O,
    opts: &'a NelderMeadOptions<F>,
    best_x: Vec<F>,
    best: F,
    trace: Vec<TracePoint<F>>,
    stop: Option<StopReason>,
}

impl<F: Scalar, O: FnMut(&[F]) -> ControlFlow<F, F>> Tracker<'_, F, O> {
    fn eval(&mut self, x: &[F]) -> F {
        let (value, halt) = match (self.f)(x) {
            ControlFlow::Continue(v) => (v, false),
            ControlFlow::Break(v) => (v, true),
        };
        // NaN never becomes the incumbent.
        if value < self.best {
            self.best = value;
            self.best_x = x.to_vec();
        }
        let eval = self.trace.len() + 1;
        self.trace.push(TracePoint {
            eval,
            value,
            best: self.best,
        });
        let w = self.opts.stall_window;
        if halt {
            self.stop = Some(StopReason::Halted);
        } else if eval >= self.opts.max_evals {
            self.stop = Some(StopReason::MaxEvals);
        } else if w > 0 && eval > w {
            let before = self.trace[eval - 1 - w].best;
            if before - self.best < self.opts.stall_tol {
                self.stop = Some(StopReason::Stalled);
            }
        }
        if value.is_nan() {
            F::infinity()
        } else {
            value
        }
    }
}

fn lerp<F: Scalar>(a: &[F], b: &[F], t: F) -> Vec<F> {
    a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
}

/// Minimize `f` from `x0` with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// `f` returns `Break(value)` to request termination after that evaluation.
/// The result is the best point ever evaluated.
pub fn nelder_mead<F, O>(mut f: O, x0: &[F], opts: &NelderMeadOptions<F>) -> Minimum<F>
where
    F: Scalar,
    O: FnMut(&[F]) -> ControlFlow<F, F>,
{
    let dim = x0.len();
    let mut t = Tracker {
        f: &mut f,
        opts,
        best_x: x0.to_vec(),
        best: F::infinity(),
        trace: Vec::new(),
        stop: None,
    };
    let (half, two) = (F::lit(0.5), F::lit(2.0));

    let mut simplex: Vec<(Vec<F>, F)> = Vec::with_capacity(dim + 1);
    let v = t.eval(x0);
    simplex.push((x0.to_vec(), v));
    for i in 0..dim {
        if t.stop.is_some() {
            break;
        }
        let mut x = x0.to_vec();
        x[i] = x[i] + opts.initial_step;
        let v = t.eval(&x);
        simplex.push((x, v));
    }

    while t.stop.is_none() && dim > 0 {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let worst = simplex[dim].1;
        let second = simplex[dim - 1].1;
        let best = simplex[0].1;
        let centroid: Vec<F> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<F>() / F::from_usize_lossy(dim))
            .collect();

        let xr = lerp(&centroid, &simplex[dim].0, -F::one());
        let vr = t.eval(&xr);
        if t.stop.is_some() {
            break;
        }
        if vr < best {
            let xe = lerp(&centroid, &simplex[dim].0, -two);
            let ve = t.eval(&xe);
            simplex[dim] = if ve < vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr < second {
            simplex[dim] = (xr, vr);
            continue;
        }
        let (xc, vc) = if vr < worst {
            let xc = lerp(&centroid, &xr, half);
            let vc = t.eval(&xc);
            (xc, vc)
        } else {
            let xc = lerp(&centroid, &simplex[dim].0, half);
            let vc = t.eval(&xc);
            (xc, vc)
        };
        if t.stop.is_some() {
            break;
        }
        if vc < worst.min(vr) {
            simplex[dim] = (xc, vc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let xs = lerp(&x0, &vertex.0, half);
            let vs = t.eval(&xs);
            *vertex = (xs, vs);
            if t.stop.is_some() {
                break;
            }
        }
    }

    Minimum {
        x: t.best_x,
        value: t.best,
        evals: t.trace.len(),
        reason: t.stop.unwrap_or(StopReason::MaxEvals),
        trace: t.trace,
    }
}
