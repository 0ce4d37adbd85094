//! The constructive route to the global infimum: nudge the hidden weights
//! until the last hidden output has full column rank, solve the now-convex
//! last-layer problem exactly, and walk the straight line between the two
//! last-layer matrices while auditing that the loss never increases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{default_rank_tol, least_squares_right_solve, Matrix};
use crate::network::{check_data_distinct, hidden_output, Dataset, Loss, NetSpec, Weights};
use crate::rng::CounterRng;

/// Record of a perturbation run that never reached full rank.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbExhausted {
    pub best_rank: usize,
    pub target_rank: usize,
    pub tries: usize,
    pub best_weights: Weights,
}

/// Result of the full-rank perturbation search. Exhaustion is an expected
/// outcome for non-analytic activations, so it is a value, not an error.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PerturbOutcome {
    FullRank {
        weights: Weights,
        rank: usize,
        /// 0 means the starting weights were already full rank.
        tries_used: usize,
    },
    Exhausted(PerturbExhausted),
}

/// Searches the infinity-ball of radius `delta` around the hidden-layer
/// weights for a draw making `T_H` full column rank. The output layer is
/// never touched. Try 0 checks the unperturbed weights.
pub fn perturb_to_full_rank(
    spec: &NetSpec,
    data: &Dataset,
    w0: &Weights,
    delta: f64,
    max_tries: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<PerturbOutcome> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "perturbation radius must be positive and finite, got {delta}"
        )));
    }
    data.check_shapes(spec)?;
    let n = data.n_samples();
    if spec.last_hidden_dim() < n {
        return Err(Error::AssumptionViolated(format!(
            "last hidden width {} is below the sample count {n}; the full-rank target is unreachable",
            spec.last_hidden_dim()
        )));
    }
    if check_data_distinct(&data.x).is_none() {
        return Err(Error::DataNotDistinct);
    }
    let rank_of = |w: &Weights| -> Result<usize> {
        Ok(hidden_output(spec, w, &data.x)?.numerical_rank(rel_tol))
    };
    let mut best_rank = rank_of(w0)?;
    if best_rank == n {
        return Ok(PerturbOutcome::FullRank {
            weights: w0.clone(),
            rank: best_rank,
            tries_used: 0,
        });
    }
    let mut best_weights = w0.clone();
    for t in 1..=max_tries {
        let mut rng = CounterRng::new(seed, t as u64);
        let mut mats = w0.mats().to_vec();
        let hidden = mats.len() - 1;
        for mat in mats.iter_mut().take(hidden) {
            let bumped: Vec<f64> = mat
                .as_slice()
                .iter()
                .map(|v| v + rng.uniform_in(-delta, delta))
                .collect();
            *mat = Matrix::new(mat.rows(), mat.cols(), bumped)?;
        }
        let candidate = Weights::new(spec, mats)?;
        let rank = rank_of(&candidate)?;
        if rank == n {
            return Ok(PerturbOutcome::FullRank {
                weights: candidate,
                rank,
                tries_used: t,
            });
        }
        if rank > best_rank {
            best_rank = rank;
            best_weights = candidate;
        }
    }
    Ok(PerturbOutcome::Exhausted(PerturbExhausted {
        best_rank,
        target_rank: n,
        tries: max_tries,
        best_weights,
    }))
}

/// Output of the convex last-layer minimization.
#[derive(Debug, Clone, Serialize)]
pub struct LastLayerSolve {
    pub w_star: Matrix,
    pub achieved_loss: f64,
    /// For the quadratic closed form: whether the achieved loss is within
    /// `tol` of the loss infimum. For the iterative path: whether the
    /// improvement-based stop fired before the iteration cap.
    pub converged: bool,
    pub iters: usize,
}

/// Minimizes `l(Y, W T_H)` over the last layer `W`. Quadratic losses get
/// the exact least-squares solution; any other convex loss is driven by
/// gradient descent with backtracking until per-step improvement drops
/// below `tol`.
pub fn solve_last_layer(
    t_h: &Matrix,
    y: &Matrix,
    loss: &Loss,
    tol: f64,
    max_iters: usize,
) -> Result<LastLayerSolve> {
    if t_h.cols() != y.cols() {
        return Err(Error::DimensionMismatch(format!(
            "T_H has {} samples but Y has {}",
            t_h.cols(),
            y.cols()
        )));
    }
    if loss.is_quadratic() {
        let ls = least_squares_right_solve(t_h, y, default_rank_tol(t_h.rows(), t_h.cols()))?;
        let achieved_loss = loss.eval(y, &ls.solution.matmul(t_h)?)?;
        let converged = achieved_loss <= loss.infimum(y) + tol;
        return Ok(LastLayerSolve {
            w_star: ls.solution,
            achieved_loss,
            converged,
            iters: 0,
        });
    }
    let mut w = Matrix::zeros(y.rows(), t_h.rows());
    let mut current = loss.eval(y, &w.matmul(t_h)?)?;
    let mut converged = false;
    let mut iters = 0;
    // The accepted step doubles as the next starting guess, so flat tails
    // get covered in few iterations while Armijo still guards each move.
    let mut step = 1.0f64;
    for _ in 0..max_iters {
        iters += 1;
        let grad = loss.gradient(y, &w.matmul(t_h)?)?.matmul(&t_h.transpose())?;
        let grad_sq = {
            let f = grad.frobenius_norm();
            f * f
        };
        if grad_sq == 0.0 {
            converged = true;
            break;
        }
        step = (step * 2.0).min(1e12);
        let mut next = None;
        for _ in 0..80 {
            let candidate = match w.sub(&grad.scale(step)) {
                Ok(c) => c,
                Err(_) => {
                    step *= 0.5; // overshot into non-finite territory
                    continue;
                }
            };
            let value = match candidate.matmul(t_h).and_then(|out| loss.eval(y, &out)) {
                Ok(v) if v.is_finite() => v,
                _ => {
                    step *= 0.5;
                    continue;
                }
            };
            if value <= current - 1e-4 * step * grad_sq {
                next = Some((candidate, value));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, value)) = next else {
            converged = true; // no progress possible at float scale
            break;
        };
        let improvement = current - value;
        w = candidate;
        current = value;
        if improvement < tol {
            converged = true;
            break;
        }
    }
    Ok(LastLayerSolve {
        w_star: w,
        achieved_loss: current,
        converged,
        iters,
    })
}

/// One sampled point of the descent path.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub loss: f64,
}

/// Full audit record of one perturb-and-solve descent.
#[derive(Debug, Clone, Serialize)]
pub struct DescentTrace {
    pub delta: f64,
    pub tries_used: usize,
    pub w_perturbed: Weights,
    pub rank_t_h: usize,
    pub w_star_last: Matrix,
    pub path: Vec<PathPoint>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub infimum: f64,
    /// Non-increase along the path with a float slack, plus a strict drop
    /// from start to end whenever the start is not already at the infimum.
    pub monotone: bool,
}

/// Samples the straight-line path that keeps the hidden layers fixed and
/// blends the last layer from its current matrix to `w_star_last`.
/// The loss along this line is convex with its minimum at the endpoint.
pub fn build_decreasing_path(
    spec: &NetSpec,
    data: &Dataset,
    w_perturbed: &Weights,
    w_star_last: Matrix,
    samples: usize,
    tol: f64,
) -> Result<DescentTrace> {
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "path needs at least two samples, got {samples}"
        )));
    }
    data.check_shapes(spec)?;
    let t_h = hidden_output(spec, w_perturbed, &data.x)?;
    let rank_t_h = t_h.numerical_rank(default_rank_tol(t_h.rows(), t_h.cols()));
    let loss = spec.loss();
    let start = w_perturbed.last().matmul(&t_h)?;
    let end = w_star_last.matmul(&t_h)?;
    let mut path = Vec::with_capacity(samples);
    for j in 0..samples {
        let lambda = j as f64 / (samples - 1) as f64;
        let value = loss.eval(&data.y, &start.lerp(&end, lambda)?)?;
        path.push(PathPoint {
            lambda,
            loss: value,
        });
    }
    let initial_loss = path[0].loss;
    let final_loss = path[samples - 1].loss;
    let infimum = loss.infimum(&data.y);
    let slack = 1e-12 * initial_loss.abs();
    let non_increasing = path.windows(2).all(|w| w[1].loss <= w[0].loss + slack);
    let endpoint_ok = initial_loss <= infimum + tol || final_loss < initial_loss;
    Ok(DescentTrace {
        delta: 0.0,
        tries_used: 0,
        w_perturbed: w_perturbed.clone(),
        rank_t_h,
        w_star_last,
        path,
        initial_loss,
        final_loss,
        infimum,
        monotone: non_increasing && endpoint_ok,
    })
}

/// Knobs for [`global_descent`]. `rank_rel_tol` of `None` means the
/// size-based default tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct DescentConfig {
    pub max_tries: usize,
    pub seed: u64,
    pub rank_rel_tol: Option<f64>,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub path_samples: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_tries: 16,
            seed: 0,
            rank_rel_tol: None,
            solver_tol: 1e-10,
            solver_max_iters: 10_000,
            path_samples: 1000,
        }
    }
}

/// Outcome of a descent run. A perturbation search that never reaches full
/// rank is a structured finding rather than an error.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DescentOutcome {
    Reached(Box<DescentTrace>),
    PerturbationExhausted(PerturbExhausted),
}

/// Runs the whole construction: perturb the hidden layers to full rank,
/// minimize the convex last-layer problem, and audit the descent path.
pub fn global_descent(
    spec: &NetSpec,
    data: &Dataset,
    w0: &Weights,
    delta: f64,
    config: &DescentConfig,
) -> Result<DescentOutcome> {
    let t_h_dims = (spec.last_hidden_dim(), data.n_samples());
    let rel_tol = config
        .rank_rel_tol
        .unwrap_or_else(|| default_rank_tol(t_h_dims.0, t_h_dims.1));
    let perturbed = match perturb_to_full_rank(
        spec,
        data,
        w0,
        delta,
        config.max_tries,
        config.seed,
        rel_tol,
    )? {
        PerturbOutcome::FullRank {
            weights,
            tries_used,
            ..
        } => (weights, tries_used),
        PerturbOutcome::Exhausted(failure) => {
            return Ok(DescentOutcome::PerturbationExhausted(failure));
        }
    };
    let (w_perturbed, tries_used) = perturbed;
    let t_h = hidden_output(spec, &w_perturbed, &data.x)?;
    let solve = solve_last_layer(
        &t_h,
        &data.y,
        spec.loss(),
        config.solver_tol,
        config.solver_max_iters,
    )?;
    let mut trace = build_decreasing_path(
        spec,
        data,
        &w_perturbed,
        solve.w_star,
        config.path_samples,
        config.solver_tol,
    )?;
    trace.delta = delta;
    trace.tries_used = tries_used;
    Ok(DescentOutcome::Reached(Box::new(trace)))
}
