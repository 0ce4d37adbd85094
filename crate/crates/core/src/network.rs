//! Bias-free fully connected feedforward networks and their training loss.
//!
//! The model is `T_1 = Phi(W_1 X)`, `T_i = Phi(W_i T_{i-1})` for the hidden
//! layers, and a linear output `T_{H+1} = W_{H+1} T_H`. The loss compares
//! the output against the target matrix columnwise over the whole dataset.

use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::CounterRng;

type EvalFn = dyn Fn(&Matrix, &Matrix) -> f64 + Send + Sync;
type GradFn = dyn Fn(&Matrix, &Matrix) -> Matrix + Send + Sync;
type InfFn = dyn Fn(&Matrix) -> f64 + Send + Sync;

#[derive(Clone)]
enum LossKind {
    Quadratic,
    Logistic,
    Custom {
        eval: Arc<EvalFn>,
        gradient: Arc<GradFn>,
        infimum: Arc<InfFn>,
    },
}

/// A training loss `l(Y, Yhat)`, convex and continuous in its second
/// argument, together with its gradient there and its exact infimum over
/// the second argument for fixed targets.
#[derive(Clone)]
pub struct Loss {
    name: String,
    kind: LossKind,
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Loss").field("name", &self.name).finish()
    }
}

impl Serialize for Loss {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Loss", 1)?;
        s.serialize_field("name", &self.name)?;
        s.end()
    }
}

impl Loss {
    /// Squared Frobenius distance `||Y - Yhat||_F^2`. Infimum 0.
    pub fn quadratic() -> Self {
        Self {
            name: "quadratic".into(),
            kind: LossKind::Quadratic,
        }
    }

    /// Entrywise `ln(1 + exp(-Y_ij * Yhat_ij))`, summed. Entries of `Y` act
    /// as labels; zero labels contribute a constant `ln 2`, which is why the
    /// infimum is `ln 2` times the number of zero entries.
    pub fn logistic() -> Self {
        Self {
            name: "logistic".into(),
            kind: LossKind::Logistic,
        }
    }

    /// A user-supplied loss. The caller promises convexity and continuity
    /// in the second argument and an exact infimum function.
    pub fn custom(
        name: &str,
        eval: Arc<EvalFn>,
        gradient: Arc<GradFn>,
        infimum: Arc<InfFn>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: LossKind::Custom {
                eval,
                gradient,
                infimum,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// True for the builtin squared-distance loss, which admits an exact
    /// closed-form minimization over a linear last layer.
    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, LossKind::Quadratic)
    }

    pub fn eval(&self, y: &Matrix, yhat: &Matrix) -> Result<f64> {
        check_same_shape(y, yhat)?;
        let v = match &self.kind {
            LossKind::Quadratic => y
                .as_slice()
                .iter()
                .zip(yhat.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
            LossKind::Logistic => y
                .as_slice()
                .iter()
                .zip(yhat.as_slice())
                .map(|(&label, &pred)| log1p_exp(-label * pred))
                .sum(),
            LossKind::Custom { eval, .. } => eval(y, yhat),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidInput(format!(
                "loss {} returned a non-finite value",
                self.name
            )))
        }
    }

    /// Gradient (or a subgradient) of the loss in the second argument.
    pub fn gradient(&self, y: &Matrix, yhat: &Matrix) -> Result<Matrix> {
        check_same_shape(y, yhat)?;
        match &self.kind {
            LossKind::Quadratic => Ok(yhat.sub(y)?.scale(2.0)),
            LossKind::Logistic => {
                let data = y
                    .as_slice()
                    .iter()
                    .zip(yhat.as_slice())
                    .map(|(&label, &pred)| -label * sigmoid(-label * pred))
                    .collect();
                Matrix::new(y.rows(), y.cols(), data)
            }
            LossKind::Custom { gradient, .. } => {
                let g = gradient(y, yhat);
                check_same_shape(y, &g)?;
                Ok(g)
            }
        }
    }

    /// Exact infimum of the loss over the second argument for fixed `y`.
    pub fn infimum(&self, y: &Matrix) -> f64 {
        match &self.kind {
            LossKind::Quadratic => 0.0,
            LossKind::Logistic => {
                let zeros = y.as_slice().iter().filter(|v| **v == 0.0).count();
                zeros as f64 * std::f64::consts::LN_2
            }
            LossKind::Custom { infimum, .. } => infimum(y),
        }
    }
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "loss arguments {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Numerically stable `ln(1 + exp(z))`.
fn log1p_exp(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Architecture plus activation and loss: everything fixed before weights.
#[derive(Debug, Clone, Serialize)]
pub struct NetSpec {
    dims: Vec<usize>,
    activation: Activation,
    loss: Loss,
}

impl NetSpec {
    /// `dims` lists `[d_0, d_1, ..., d_{H+1}]` and must contain at least one
    /// hidden layer (three entries).
    pub fn new(dims: Vec<usize>, activation: Activation, loss: Loss) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "need input, at least one hidden, and output layer; got dims {dims:?}"
            )));
        }
        if dims.iter().any(|d| *d == 0) {
            return Err(Error::InvalidInput(format!(
                "layer widths must be positive, got dims {dims:?}"
            )));
        }
        Ok(Self {
            dims,
            activation,
            loss,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// Number of hidden layers H.
    pub fn hidden_count(&self) -> usize {
        self.dims.len() - 2
    }

    /// Width of the last hidden layer.
    pub fn last_hidden_dim(&self) -> usize {
        self.dims[self.dims.len() - 2]
    }
}

/// The weight matrices `W_1 ... W_{H+1}`; `mats[i]` maps layer `i` to layer
/// `i+1` and has shape `dims[i+1] x dims[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weights {
    mats: Vec<Matrix>,
}

impl Weights {
    pub fn new(spec: &NetSpec, mats: Vec<Matrix>) -> Result<Self> {
        let dims = spec.dims();
        if mats.len() != dims.len() - 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} weight matrices, got {}",
                dims.len() - 1,
                mats.len()
            )));
        }
        for (i, m) in mats.iter().enumerate() {
            if m.rows() != dims[i + 1] || m.cols() != dims[i] {
                return Err(Error::DimensionMismatch(format!(
                    "weight {i} has shape {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    dims[i + 1],
                    dims[i]
                )));
            }
        }
        Ok(Self { mats })
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    /// The output-layer matrix `W_{H+1}`.
    pub fn last(&self) -> &Matrix {
        self.mats.last().unwrap()
    }

    /// Replaces the output-layer matrix, keeping the hidden layers.
    pub fn with_last(&self, spec: &NetSpec, last: Matrix) -> Result<Self> {
        let mut mats = self.mats.clone();
        *mats.last_mut().unwrap() = last;
        Self::new(spec, mats)
    }
}

/// Paired input and target matrices with one column per sample.
#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.cols() != y.cols() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} samples but Y has {}",
                x.cols(),
                y.cols()
            )));
        }
        Ok(Self { x, y })
    }

    /// Number of samples N.
    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    /// Validates that the dataset fits the network's input and output sizes.
    pub fn check_shapes(&self, spec: &NetSpec) -> Result<()> {
        if self.x.rows() != spec.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but the network expects {}",
                self.x.rows(),
                spec.input_dim()
            )));
        }
        if self.y.rows() != spec.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "Y has {} rows but the network outputs {}",
                self.y.rows(),
                spec.output_dim()
            )));
        }
        Ok(())
    }
}

/// Runs the network, returning every layer output `[T_1, ..., T_{H+1}]`.
/// The final entry is the linear output; no activation is applied there.
pub fn feedforward(spec: &NetSpec, w: &Weights, x: &Matrix) -> Result<Vec<Matrix>> {
    if x.rows() != spec.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} rows but the network expects {}",
            x.rows(),
            spec.input_dim()
        )));
    }
    let mats = w.mats();
    let mut layers = Vec::with_capacity(mats.len());
    let mut current = x.clone();
    for (i, m) in mats.iter().enumerate() {
        let pre = m.matmul(&current)?;
        current = if i + 1 < mats.len() {
            spec.activation().apply_elementwise(&pre)?
        } else {
            pre
        };
        layers.push(current.clone());
    }
    Ok(layers)
}

/// The last hidden layer's output `T_H`.
pub fn hidden_output(spec: &NetSpec, w: &Weights, x: &Matrix) -> Result<Matrix> {
    let layers = feedforward(spec, w, x)?;
    Ok(layers[layers.len() - 2].clone())
}

/// Empirical loss `E(W) = l(Y, W_{H+1} T_H)`.
pub fn loss_eval(spec: &NetSpec, w: &Weights, data: &Dataset) -> Result<f64> {
    data.check_shapes(spec)?;
    let layers = feedforward(spec, w, &data.x)?;
    spec.loss().eval(&data.y, layers.last().unwrap())
}

/// Smallest row index of `X` whose entries are pairwise distinct (compared
/// exactly on the stored values), if any such row exists.
pub fn check_data_distinct(x: &Matrix) -> Option<usize> {
    'rows: for k in 0..x.rows() {
        let row = x.row(k);
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                if row[i] == row[j] {
                    continue 'rows;
                }
            }
        }
        return Some(k);
    }
    None
}

/// Minimum absolute gap between entries of row `k`: a conditioning
/// diagnostic to go with the exact distinctness check.
pub fn min_row_gap(x: &Matrix, k: usize) -> f64 {
    let row = x.row(k);
    let mut gap = f64::INFINITY;
    for i in 0..row.len() {
        for j in i + 1..row.len() {
            gap = gap.min((row[i] - row[j]).abs());
        }
    }
    gap
}

/// Weights with i.i.d. `scale * N(0,1)` entries from the counter-based
/// generator. Identical `(spec, seed, scale)` always produce identical
/// weights, regardless of threading.
pub fn random_weights(spec: &NetSpec, seed: u64, scale: f64) -> Result<Weights> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "weight scale must be positive and finite, got {scale}"
        )));
    }
    let dims = spec.dims();
    let mut mats = Vec::with_capacity(dims.len() - 1);
    for i in 0..dims.len() - 1 {
        let mut rng = CounterRng::new(seed, i as u64);
        let data = (0..dims[i + 1] * dims[i])
            .map(|_| scale * rng.standard_normal())
            .collect();
        mats.push(Matrix::new(dims[i + 1], dims[i], data)?);
    }
    Weights::new(spec, mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn relu_spec(dims: Vec<usize>) -> NetSpec {
        NetSpec::new(dims, Activation::builtin("relu").unwrap(), Loss::quadratic()).unwrap()
    }

    fn hand_instance() -> (NetSpec, Weights, Matrix) {
        let spec = relu_spec(vec![1, 2, 1]);
        let w1 = Matrix::from_rows(&[vec![2.0], vec![-3.0]]).unwrap();
        let w2 = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let w = Weights::new(&spec, vec![w1, w2]).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        (spec, w, x)
    }

    #[test]
    fn feedforward_hand_example() {
        let (spec, w, x) = hand_instance();
        let layers = feedforward(&spec, &w, &x).unwrap();
        assert_eq!(layers.len(), 2);
        assert_eq!(layers[0].as_slice(), &[2.0, 0.0, 0.0, 3.0]);
        assert_eq!(layers[1].as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn feedforward_zero_weights_through_exp() {
        let spec = NetSpec::new(
            vec![2, 3, 1],
            Activation::builtin("exp").unwrap(),
            Loss::quadratic(),
        )
        .unwrap();
        let w = Weights::new(&spec, vec![Matrix::zeros(3, 2), Matrix::zeros(1, 3)]).unwrap();
        let x = Matrix::from_rows(&[vec![0.3, -0.7], vec![1.1, 0.2]]).unwrap();
        let layers = feedforward(&spec, &w, &x).unwrap();
        assert_eq!(layers[0].as_slice(), &[1.0; 6]);
        assert_eq!(layers[1].as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn feedforward_matches_per_neuron_scalar_oracle() {
        let spec = NetSpec::new(
            vec![2, 3, 2, 1],
            Activation::builtin("sigmoid").unwrap(),
            Loss::quadratic(),
        )
        .unwrap();
        let w = random_weights(&spec, 42, 0.8).unwrap();
        let mut rng = CounterRng::new(7, 0);
        let x = Matrix::new(2, 4, (0..8).map(|_| rng.standard_normal()).collect()).unwrap();
        let layers = feedforward(&spec, &w, &x).unwrap();

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        for sample in 0..4 {
            let mut prev: Vec<f64> = (0..2).map(|r| x.get(r, sample)).collect();
            for (li, mat) in w.mats().iter().enumerate() {
                let mut next = vec![0.0; mat.rows()];
                for (j, slot) in next.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, p) in prev.iter().enumerate() {
                        acc += mat.get(j, k) * p;
                    }
                    *slot = if li + 1 < w.mats().len() { sig(acc) } else { acc };
                }
                for (j, v) in next.iter().enumerate() {
                    assert!(
                        (layers[li].get(j, sample) - v).abs() < 1e-12,
                        "layer {li} neuron {j} sample {sample}"
                    );
                }
                prev = next;
            }
        }
    }

    #[test]
    fn loss_eval_quadratic_cases() {
        let (spec, w, x) = hand_instance();
        let data = Dataset::new(x.clone(), Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap()).unwrap();
        assert_eq!(loss_eval(&spec, &w, &data).unwrap(), 0.0);

        let zeros = Dataset::new(x, Matrix::zeros(1, 2)).unwrap();
        // output is [[2,3]], so the loss is 4 + 9
        assert_eq!(loss_eval(&spec, &w, &zeros).unwrap(), 13.0);
    }

    #[test]
    fn logistic_loss_values_and_infimum() {
        let loss = Loss::logistic();
        let y = Matrix::from_rows(&[vec![1.0, -1.0, 0.0]]).unwrap();
        let at_zero = loss.eval(&y, &Matrix::zeros(1, 3)).unwrap();
        assert!((at_zero - 3.0 * std::f64::consts::LN_2).abs() < 1e-14);
        assert!((loss.infimum(&y) - std::f64::consts::LN_2).abs() < 1e-15);
        // large margin in the right direction drives label terms to zero
        let good = Matrix::from_rows(&[vec![50.0, -50.0, 0.0]]).unwrap();
        let v = loss.eval(&y, &good).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn logistic_gradient_matches_finite_difference()
    {
        let loss = Loss::logistic();
        let y = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let yhat = Matrix::from_rows(&[vec![0.3, -0.4]]).unwrap();
        let g = loss.gradient(&y, &yhat).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut bumped = yhat.clone();
            bumped.set(0, j, yhat.get(0, j) + h);
            let fd = (loss.eval(&y, &bumped).unwrap() - loss.eval(&y, &yhat).unwrap()) / h;
            assert!((g.get(0, j) - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn distinct_row_detection() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(check_data_distinct(&a), Some(0));
        let b = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(check_data_distinct(&b), None);
        let c = Matrix::from_rows(&[vec![0.0, 0.0], vec![5.0, 7.0]]).unwrap();
        assert_eq!(check_data_distinct(&c), Some(1));
    }

    #[test]
    fn row_gap_diagnostic() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 4.0]]).unwrap();
        assert_eq!(min_row_gap(&a, 0), 1.0);
    }

    #[test]
    fn random_weights_deterministic_and_scaled() {
        let spec = relu_spec(vec![3, 5, 2]);
        let a = random_weights(&spec, 11, 0.5).unwrap();
        let b = random_weights(&spec, 11, 0.5).unwrap();
        assert_eq!(a, b);
        let c = random_weights(&spec, 12, 0.5).unwrap();
        assert_ne!(a, c);
        assert!(random_weights(&spec, 11, 0.0).is_err());
    }

    #[test]
    fn random_weight_mean_within_clt_band() {
        let spec = relu_spec(vec![100, 500, 100]);
        let w = random_weights(&spec, 3, 2.0).unwrap();
        let entries: Vec<f64> = w
            .mats()
            .iter()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect();
        let n = entries.len() as f64;
        assert!(n >= 1e5);
        let mean = entries.iter().sum::<f64>() / n;
        assert!(mean.abs() < 3.0 * 2.0 / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn spec_and_weight_validation() {
        assert!(NetSpec::new(
            vec![2, 3],
            Activation::builtin("relu").unwrap(),
            Loss::quadratic()
        )
        .is_err());
        let spec = relu_spec(vec![1, 2, 1]);
        assert!(Weights::new(&spec, vec![Matrix::zeros(2, 1)]).is_err());
        assert!(Weights::new(&spec, vec![Matrix::zeros(2, 2), Matrix::zeros(1, 2)]).is_err());
        let data = Dataset::new(Matrix::zeros(2, 3), Matrix::zeros(1, 3)).unwrap();
        assert!(data.check_shapes(&spec).is_err());
    }

    proptest! {
        #[test]
        fn hidden_neuron_permutation_preserves_loss(seed in 0u64..50) {
            let spec = NetSpec::new(
                vec![2, 4, 3, 2],
                Activation::builtin("tanh").unwrap(),
                Loss::quadratic(),
            ).unwrap();
            let w = random_weights(&spec, seed, 0.9).unwrap();
            let mut rng = CounterRng::new(seed, 99);
            let x = Matrix::new(2, 5, (0..10).map(|_| rng.standard_normal()).collect()).unwrap();
            let y = Matrix::new(2, 5, (0..10).map(|_| rng.standard_normal()).collect()).unwrap();
            let data = Dataset::new(x, y).unwrap();
            let base = loss_eval(&spec, &w, &data).unwrap();

            // Swap neurons 0 and 2 of the first hidden layer: rows of W_1,
            // columns of W_2.
            let mut w1_rows: Vec<Vec<f64>> = (0..4).map(|r| w.mats()[0].row(r).to_vec()).collect();
            w1_rows.swap(0, 2);
            let mut w2 = w.mats()[1].clone();
            for r in 0..3 {
                let a = w2.get(r, 0);
                w2.set(r, 0, w2.get(r, 2));
                w2.set(r, 2, a);
            }
            let permuted = Weights::new(&spec, vec![
                Matrix::from_rows(&w1_rows).unwrap(),
                w2,
                w.mats()[2].clone(),
            ]).unwrap();
            let after = loss_eval(&spec, &permuted, &data).unwrap();
            prop_assert!((base - after).abs() <= 1e-12 * base.abs().max(1.0));
        }

        #[test]
        fn loss_is_convex_in_last_layer(
            seed in 0u64..40,
            lambda in 0.0f64..1.0,
        ) {
            let spec = NetSpec::new(
                vec![2, 3, 2],
                Activation::builtin("sigmoid").unwrap(),
                Loss::quadratic(),
            ).unwrap();
            let mut rng = CounterRng::new(seed, 5);
            let x = Matrix::new(2, 4, (0..8).map(|_| rng.standard_normal()).collect()).unwrap();
            let y = Matrix::new(2, 4, (0..8).map(|_| rng.standard_normal()).collect()).unwrap();
            let data = Dataset::new(x, y).unwrap();
            let w = random_weights(&spec, seed, 1.0).unwrap();
            let last_a = Matrix::new(2, 3, (0..6).map(|_| rng.standard_normal()).collect()).unwrap();
            let last_b = Matrix::new(2, 3, (0..6).map(|_| rng.standard_normal()).collect()).unwrap();
            let blend = last_a.lerp(&last_b, lambda).unwrap();
            let e_blend = loss_eval(&spec, &w.with_last(&spec, blend).unwrap(), &data).unwrap();
            let e_a = loss_eval(&spec, &w.with_last(&spec, last_a).unwrap(), &data).unwrap();
            let e_b = loss_eval(&spec, &w.with_last(&spec, last_b).unwrap(), &data).unwrap();
            prop_assert!(e_blend <= (1.0 - lambda) * e_a + lambda * e_b + 1e-10);
        }

        #[test]
        fn midpoint_convexity_of_builtin_losses(seed in 0u64..60) {
            let mut rng = CounterRng::new(seed, 1);
            let dims = (2, 3);
            let mk = |rng: &mut CounterRng| {
                Matrix::new(dims.0, dims.1, (0..6).map(|_| rng.standard_normal()).collect()).unwrap()
            };
            let y = mk(&mut rng);
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let mid = a.lerp(&b, 0.5).unwrap();
            for loss in [Loss::quadratic(), Loss::logistic()] {
                let lm = loss.eval(&y, &mid).unwrap();
                let la = loss.eval(&y, &a).unwrap();
                let lb = loss.eval(&y, &b).unwrap();
                prop_assert!(lm <= 0.5 * la + 0.5 * lb + 1e-10, "{}", loss.name());
            }
        }
    }
}
