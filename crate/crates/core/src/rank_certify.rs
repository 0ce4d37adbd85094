//! Monte Carlo certification of the almost-everywhere full-rank behavior of
//! hidden representations, plus the small determinant and collision
//! experiments backing it.
//!
//! Sampling cannot prove a measure-zero statement; certificates are
//! explicitly labeled Monte Carlo evidence and carry their trial counts.
//! Per-trial seeds derive from (master seed, trial index) so results never
//! depend on thread scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::{scaled_vandermonde, Matrix};
use crate::network::{check_data_distinct, hidden_output, random_weights, Dataset, NetSpec};
use crate::rng::CounterRng;

/// Verdict of a full-rank certification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RankVerdict {
    /// Every sampled weight draw produced a full-rank hidden output.
    CertifiedFullRankAe,
    /// At least one draw was rank-deficient.
    DeficiencyObserved,
}

/// Monte Carlo evidence about the rank of the last hidden layer's output
/// under random weights.
#[derive(Debug, Clone, Serialize)]
pub struct RankCertificate {
    pub spec: NetSpec,
    pub n_samples: usize,
    /// Rank that counts as full: `min(d_H, N)`.
    pub target_rank: usize,
    pub trials: usize,
    pub full_rank_count: usize,
    pub rel_tol: f64,
    /// Smallest observed ratio of the target-rank-th singular value to the
    /// largest one, across all trials.
    pub min_smallest_singular: f64,
    pub seed: u64,
    pub scale: f64,
    pub verdict: RankVerdict,
    /// Per-trial relative smallest singular values, in trial order. Kept out
    /// of the JSON report; emitted separately as CSV.
    #[serde(skip)]
    pub per_trial_sigma_min_rel: Vec<f64>,
}

/// Draws `trials` independent hidden-layer weight tuples, computes the rank
/// of `T_H` for each, and summarizes the outcomes. The input data must have
/// a row with pairwise distinct entries.
pub fn certify_full_rank_measure(
    spec: &NetSpec,
    data: &Dataset,
    trials: usize,
    seed: u64,
    rel_tol: f64,
    scale: f64,
) -> Result<RankCertificate> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    data.check_shapes(spec)?;
    if check_data_distinct(&data.x).is_none() {
        return Err(Error::DataNotDistinct);
    }
    let n = data.n_samples();
    let target_rank = spec.last_hidden_dim().min(n);
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let trial_seed = CounterRng::new(seed, trial as u64).next_u64();
            let w = random_weights(spec, trial_seed, scale)?;
            let t_h = hidden_output(spec, &w, &data.x)?;
            let svals = t_h.singular_values();
            let sigma_max = svals[0];
            if sigma_max == 0.0 {
                return Ok(0.0);
            }
            Ok(svals[target_rank - 1].max(0.0) / sigma_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let full_rank_count = per_trial.iter().filter(|r| **r > rel_tol).count();
    let min_smallest_singular = per_trial.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if full_rank_count == trials {
        RankVerdict::CertifiedFullRankAe
    } else {
        RankVerdict::DeficiencyObserved
    };
    Ok(RankCertificate {
        spec: spec.clone(),
        n_samples: n,
        target_rank,
        trials,
        full_rank_count,
        rel_tol,
        min_smallest_singular,
        seed,
        scale,
        verdict,
        per_trial_sigma_min_rel: per_trial,
    })
}

/// Fraction of random Gaussian `w` for which `det(sigma(w x^T))` has
/// magnitude at most `tol`. The nodes must be pairwise distinct and at most
/// 8 of them (the determinant stays well-scaled there).
pub fn det_zero_frequency(
    x: &[f64],
    sigma: &Activation,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    let n = x.len();
    if n == 0 || n > 8 {
        return Err(Error::InvalidInput(format!(
            "need between 1 and 8 nodes, got {n}"
        )));
    }
    for i in 0..n {
        for j in i + 1..n {
            if x[i] == x[j] {
                return Err(Error::InvalidInput(format!(
                    "duplicate nodes x[{i}] = x[{j}] = {}",
                    x[i]
                )));
            }
        }
    }
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let hits = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<usize> {
            let mut rng = CounterRng::new(seed, trial as u64);
            let w: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, sigma.evaluate(w[i] * x[j]));
                }
            }
            Ok((m.determinant()?.abs() <= tol) as usize)
        })
        .sum::<Result<usize>>()?;
    Ok(hits as f64 / trials as f64)
}

/// Fraction of random Gaussian `w` for which `sigma(a.w)` and `sigma(b.w)`
/// agree within `tol`. The two directions must differ.
pub fn activation_collision_rate(
    a: &[f64],
    b: &[f64],
    sigma: &Activation,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "direction lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a == b {
        return Err(Error::InvalidInput(
            "collision rate needs two distinct directions".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = CounterRng::new(seed, trial as u64);
            let w: Vec<f64> = (0..a.len()).map(|_| rng.standard_normal()).collect();
            let dot = |v: &[f64]| v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
            ((sigma.evaluate(dot(a)) - sigma.evaluate(dot(b))).abs() <= tol) as usize
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// Nonsingularity evidence for the derivative-scaled Vandermonde matrix.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VandermondeCheck {
    pub abs_det: f64,
    /// Ratio of extreme singular values; large values mean the positive
    /// determinant is numerically fragile.
    pub condition: f64,
}

/// Builds the matrix with entries `x_k^j * sigma^(j)(0)` and reports its
/// determinant magnitude and conditioning. The activation must have nonzero
/// derivatives at zero through order `n - 1`.
pub fn vandermonde_nonsingularity(
    xs: &[f64],
    sigma: &Activation,
    n: usize,
) -> Result<VandermondeCheck> {
    if xs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} nodes for order {n}",
            xs.len()
        )));
    }
    let check = sigma.first_derivatives_nonzero(n)?;
    if let Some(order) = check.first_zero {
        return Err(Error::DerivativeVanishes {
            name: sigma.name().to_string(),
            order,
        });
    }
    let taylor = sigma.taylor_at_zero().expect("checked above");
    let m = scaled_vandermonde(xs, &taylor[..n])?;
    let svals = m.singular_values();
    let sigma_min = svals[n - 1].max(f64::MIN_POSITIVE);
    Ok(VandermondeCheck {
        abs_det: m.determinant()?.abs(),
        condition: svals[0] / sigma_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Loss;

    fn spec_with(dims: Vec<usize>, activation: &str) -> NetSpec {
        NetSpec::new(
            dims,
            Activation::builtin(activation).unwrap(),
            Loss::quadratic(),
        )
        .unwrap()
    }

    // Row 0 is a spread of distinct integers; later rows are random but
    // deterministic. Near-parallel rows would wreck conditioning, so the
    // rows are kept independent.
    fn distinct_dataset(input_dim: usize, output_dim: usize, n: usize) -> Dataset {
        let center = (n as f64 - 1.0) / 2.0;
        let mut rows = vec![(0..n).map(|i| i as f64 - center).collect::<Vec<f64>>()];
        let mut rng = CounterRng::new(2024, 0);
        for _ in 1..input_dim {
            rows.push((0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect());
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let y = Matrix::zeros(output_dim, n);
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn exp_network_is_always_full_rank() {
        let spec = spec_with(vec![2, 4, 5, 1], "exp");
        let data = distinct_dataset(2, 1, 5);
        let rel_tol = crate::linalg::default_rank_tol(5, 5);
        let cert = certify_full_rank_measure(&spec, &data, 200, 7, rel_tol, 0.25).unwrap();
        assert_eq!(cert.full_rank_count, 200);
        assert_eq!(cert.verdict, RankVerdict::CertifiedFullRankAe);
        assert_eq!(cert.target_rank, 5);
        assert!(cert.min_smallest_singular > 1e-8);
        assert_eq!(cert.per_trial_sigma_min_rel.len(), 200);
    }

    #[test]
    fn single_sample_always_rank_one() {
        let spec = spec_with(vec![1, 3, 1], "sigmoid");
        let x = Matrix::from_rows(&[vec![1.5]]).unwrap();
        let data = Dataset::new(x, Matrix::zeros(1, 1)).unwrap();
        let cert = certify_full_rank_measure(&spec, &data, 100, 3, 1e-10, 1.0).unwrap();
        assert_eq!(cert.target_rank, 1);
        assert_eq!(cert.full_rank_count, 100);
    }

    #[test]
    fn relu_on_one_dimensional_input_is_rank_deficient() {
        // Row i of T_1 is relu(w_i) * (1, 2, 3): zero when w_i <= 0 and a
        // multiple of (1, 2, 3) otherwise. The rank never genuinely exceeds
        // 1, so at tolerance 1e-10 every trial reads deficient.
        let spec = spec_with(vec![1, 3, 1], "relu");
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let data = Dataset::new(x, Matrix::zeros(1, 3)).unwrap();
        let cert = certify_full_rank_measure(&spec, &data, 2000, 11, 1e-10, 1.0).unwrap();
        assert_eq!(cert.verdict, RankVerdict::DeficiencyObserved);
        let deficiency = 1.0 - cert.full_rank_count as f64 / cert.trials as f64;
        assert!(deficiency >= 0.95, "deficiency frequency {deficiency}");
        assert_eq!(cert.min_smallest_singular, 0.0);
    }

    #[test]
    fn certificates_are_deterministic() {
        let spec = spec_with(vec![2, 4, 3, 1], "tanh");
        let data = distinct_dataset(2, 1, 3);
        let a = certify_full_rank_measure(&spec, &data, 64, 99, 1e-10, 0.5).unwrap();
        let b = certify_full_rank_measure(&spec, &data, 64, 99, 1e-10, 0.5).unwrap();
        assert_eq!(a.per_trial_sigma_min_rel, b.per_trial_sigma_min_rel);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn certification_preconditions() {
        let spec = spec_with(vec![2, 3, 1], "exp");
        let dup = Dataset::new(
            Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap(),
            Matrix::zeros(1, 2),
        )
        .unwrap();
        assert!(matches!(
            certify_full_rank_measure(&spec, &dup, 10, 1, 1e-10, 1.0),
            Err(Error::DataNotDistinct)
        ));
        let ok = distinct_dataset(2, 1, 2);
        assert!(certify_full_rank_measure(&spec, &ok, 0, 1, 1e-10, 1.0).is_err());
    }

    #[test]
    fn exp_determinants_never_vanish() {
        let exp = Activation::builtin("exp").unwrap();
        let f = det_zero_frequency(&[1.0, 2.0, 3.0], &exp, 10_000, 5, 1e-10).unwrap();
        assert_eq!(f, 0.0);
        let f1 = det_zero_frequency(&[1.0], &exp, 1000, 5, 1e-10).unwrap();
        assert_eq!(f1, 0.0);
    }

    #[test]
    fn zero_activation_determinants_always_vanish() {
        let f = det_zero_frequency(&[1.0, 2.0], &Activation::zero(), 500, 5, 1e-10).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn det_frequency_monotone_in_tolerance() {
        let sig = Activation::builtin("sigmoid").unwrap();
        let x = [0.5, 1.0, 1.5];
        let tight = det_zero_frequency(&x, &sig, 3000, 2, 1e-12).unwrap();
        let loose = det_zero_frequency(&x, &sig, 3000, 2, 1e-2).unwrap();
        assert!(tight <= loose);
    }

    #[test]
    fn det_check_rejects_bad_nodes() {
        let exp = Activation::builtin("exp").unwrap();
        assert!(det_zero_frequency(&[1.0, 1.0], &exp, 10, 0, 1e-10).is_err());
        assert!(det_zero_frequency(&[0.0; 9], &exp, 10, 0, 1e-10).is_err());
    }

    #[test]
    fn collision_rates() {
        let exp = Activation::builtin("exp").unwrap();
        let r = activation_collision_rate(&[1.0, 0.0], &[0.0, 1.0], &exp, 10_000, 13, 1e-12)
            .unwrap();
        assert_eq!(r, 0.0);

        let constant = Activation::zero();
        let r =
            activation_collision_rate(&[1.0, 0.0], &[0.0, 1.0], &constant, 1000, 13, 1e-12)
                .unwrap();
        assert_eq!(r, 1.0);

        // relu collides exactly when the shared coordinate is nonpositive.
        let relu = Activation::builtin("relu").unwrap();
        let r = activation_collision_rate(&[2.0, 0.0], &[1.0, 0.0], &relu, 10_000, 13, 1e-12)
            .unwrap();
        assert!((r - 0.5).abs() < 0.05, "rate {r}");

        assert!(activation_collision_rate(&[1.0], &[1.0], &exp, 10, 0, 1e-12).is_err());
    }

    #[test]
    fn vandermonde_checks() {
        let exp = Activation::builtin("exp").unwrap();
        let two = vandermonde_nonsingularity(&[1.0, 2.0], &exp, 2).unwrap();
        assert!((two.abs_det - 1.0).abs() < 1e-12);
        let three = vandermonde_nonsingularity(&[0.0, 1.0, 2.0], &exp, 3).unwrap();
        assert!((three.abs_det - 2.0).abs() < 1e-12);
        assert!(three.condition >= 1.0);

        let sigmoid = Activation::builtin("sigmoid").unwrap();
        match vandermonde_nonsingularity(&[0.0, 1.0, 2.0], &sigmoid, 3) {
            Err(Error::DerivativeVanishes { order, .. }) => assert_eq!(order, 2),
            other => panic!("expected vanishing-derivative error, got {other:?}"),
        }
    }
}
