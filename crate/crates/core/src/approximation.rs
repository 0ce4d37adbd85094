//! Repairing activations with vanishing derivatives at zero.
//!
//! Given an analytic base `g`, the sequence `f_k(x) = g(x) + (sin x + cos x)
//! / (s (k+1))` converges uniformly to `g` at rate `sqrt(2) / (s (k+1))`
//! while every `f_k` has nonvanishing derivatives at zero for the orders of
//! interest, provided `s` is chosen from the smallest nonzero derivative
//! magnitude of `g`. This module constructs the sequence and measures both
//! the activation-level and loss-level convergence.

use rayon::prelude::*;
use serde::Serialize;

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::network::{loss_eval, Dataset, NetSpec, Weights};
use crate::rng::CounterRng;

/// Smallest nonzero value among the derivatives of orders `0..count` of the
/// table; `None` when they all vanish.
pub(crate) fn delta_min_of_table(taylor: &[f64], count: usize) -> Option<f64> {
    taylor[..count]
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .reduce(f64::min)
}

/// Smallest nonzero magnitude among `g(0), g'(0), ..., g^(order-1)(0)`.
/// `None` means every inspected derivative vanishes.
pub fn delta_min(g: &Activation, order: usize) -> Result<Option<f64>> {
    let taylor = g.taylor_at_zero().ok_or_else(|| Error::MissingTaylorData {
        name: g.name().to_string(),
    })?;
    if order == 0 || order > taylor.len() {
        return Err(Error::UnsupportedOrder {
            name: g.name().to_string(),
            order: order.saturating_sub(1),
            max: taylor.len() - 1,
        });
    }
    Ok(delta_min_of_table(taylor, order))
}

/// The canonical perturbation scale: twice the reciprocal of the smallest
/// nonzero derivative magnitude, or 1 when every derivative vanishes (any
/// nonzero scale works in that case; 1 keeps runs deterministic).
pub fn choose_s(g: &Activation, order: usize) -> Result<f64> {
    Ok(match delta_min(g, order)? {
        Some(dm) => 2.0 / dm,
        None => 1.0,
    })
}

/// The repair sequence for one analytic base activation.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxSequence {
    base: Activation,
    s: f64,
    order: usize,
}

impl ApproxSequence {
    /// Builds the sequence with the canonical scale for the given number of
    /// derivative orders to protect.
    pub fn new(base: Activation, order: usize) -> Result<Self> {
        let s = choose_s(&base, order)?;
        Self::with_scale(base, order, s)
    }

    /// Builds the sequence with an explicit nonzero scale.
    pub fn with_scale(base: Activation, order: usize, s: f64) -> Result<Self> {
        if !base.is_analytic() {
            return Err(Error::MissingTaylorData {
                name: base.name().to_string(),
            });
        }
        let max = base
            .taylor_at_zero()
            .map(|t| t.len())
            .ok_or_else(|| Error::MissingTaylorData {
                name: base.name().to_string(),
            })?;
        if order == 0 || order > max {
            return Err(Error::UnsupportedOrder {
                name: base.name().to_string(),
                order: order.saturating_sub(1),
                max: max - 1,
            });
        }
        if s == 0.0 || !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "perturbation scale must be finite and nonzero, got {s}"
            )));
        }
        Ok(Self { base, s, order })
    }

    pub fn base(&self) -> &Activation {
        &self.base
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of derivative orders the construction protects.
    pub fn order(&self) -> usize {
        self.order
    }

    /// The trig amplitude at index `k`.
    pub fn amplitude(&self, k: usize) -> f64 {
        1.0 / (self.s * (k + 1) as f64)
    }

    /// Uniform distance bound `sqrt(2) / (|s| (k+1))`.
    pub fn uniform_bound(&self, k: usize) -> f64 {
        std::f64::consts::SQRT_2 / (self.s.abs() * (k + 1) as f64)
    }

    /// The k-th element `g + (sin + cos) / (s (k+1))`.
    pub fn f_k(&self, k: usize) -> Result<Activation> {
        self.base.with_trig_term(self.amplitude(k))
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// Supremum of `|f - g|` over the grid.
pub fn uniform_distance(f: &Activation, g: &Activation, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty evaluation grid".into()));
    }
    Ok(grid
        .iter()
        .map(|&x| (f.evaluate(x) - g.evaluate(x)).abs())
        .fold(0.0, f64::max))
}

/// Weight samples drawn uniformly from the infinity-ball of the given
/// radius: the bounded set standing in for a compact domain.
pub fn uniform_ball_weights(
    spec: &NetSpec,
    count: usize,
    radius: f64,
    seed: u64,
) -> Result<Vec<Weights>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    if count == 0 {
        return Err(Error::InvalidInput("need at least one weight sample".into()));
    }
    let dims = spec.dims();
    (0..count)
        .map(|sample| {
            let mut rng = CounterRng::new(seed, sample as u64);
            let mats = (0..dims.len() - 1)
                .map(|i| {
                    let data = (0..dims[i + 1] * dims[i])
                        .map(|_| rng.uniform_in(-radius, radius))
                        .collect();
                    crate::linalg::Matrix::new(dims[i + 1], dims[i], data)
                })
                .collect::<Result<Vec<_>>>()?;
            Weights::new(spec, mats)
        })
        .collect()
}

/// One row of the loss-convergence table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub k: usize,
    /// `sup_W |E_k(W) - E(W)|` over the weight samples.
    pub sup_gap: f64,
    /// Activation-level uniform bound at this k.
    pub bound: f64,
}

/// Loss-level convergence of the repaired networks to the original one.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `sup_gap * (k+1)` fitted at the first row; the decay hypothesis is
    /// `sup_gap(k) <= fitted_c / (k+1)`.
    pub fitted_c: f64,
    /// Gaps non-increasing along the requested ks, with 10% slack.
    pub non_increasing: bool,
}

/// For each requested `k`, rebuilds the network with activation `f_k` and
/// reports the worst-case absolute loss gap against the original activation
/// over the supplied weight samples.
pub fn loss_compact_convergence(
    spec: &NetSpec,
    seq: &ApproxSequence,
    weight_samples: &[Weights],
    data: &Dataset,
    ks: &[usize],
) -> Result<ConvergenceReport> {
    if weight_samples.is_empty() {
        return Err(Error::InvalidInput("need at least one weight sample".into()));
    }
    if ks.is_empty() {
        return Err(Error::InvalidInput("need at least one sequence index".into()));
    }
    data.check_shapes(spec)?;
    let base_losses: Vec<f64> = weight_samples
        .par_iter()
        .map(|w| loss_eval(spec, w, data))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let spec_k = NetSpec::new(spec.dims().to_vec(), seq.f_k(k)?, spec.loss().clone())?;
        let gaps: Vec<f64> = weight_samples
            .par_iter()
            .map(|w| loss_eval(&spec_k, w, data))
            .collect::<Result<Vec<_>>>()?;
        let sup_gap = gaps
            .iter()
            .zip(&base_losses)
            .map(|(ek, e)| (ek - e).abs())
            .fold(0.0, f64::max);
        rows.push(ConvergenceRow {
            k,
            sup_gap,
            bound: seq.uniform_bound(k),
        });
    }
    let fitted_c = rows[0].sup_gap * (rows[0].k + 1) as f64;
    let non_increasing = rows
        .windows(2)
        .all(|w| w[1].sup_gap <= 1.1 * w[0].sup_gap + 1e-15);
    Ok(ConvergenceReport {
        rows,
        fitted_c,
        non_increasing,
    })
}
