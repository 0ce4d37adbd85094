//! JSON configuration schema. One document can hold sections for several
//! subcommands; each command reads its own section and falls back to
//! defaults field by field. Unknown keys are rejected so typos surface
//! instead of silently running defaults.

use std::collections::BTreeMap;

use landscape_lab::{Activation, Error};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RootConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub certify_rank: Option<CertifyRankCfg>,
    pub descend: Option<DescendCfg>,
    pub approximate: Option<ApproximateCfg>,
    pub counterexample: Option<CounterexampleCfg>,
    pub scan: Option<ScanCfg>,
}

/// Activation selector: either a bare name or a name with parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivationCfg {
    Name(String),
    Detailed {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl ActivationCfg {
    pub fn build(&self) -> Result<Activation, Error> {
        match self {
            Self::Name(name) => Activation::builtin(name),
            Self::Detailed { name, params } => Activation::builtin_with(name, params),
        }
    }
}

impl Default for ActivationCfg {
    fn default() -> Self {
        Self::Name("exp".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyRankCfg {
    /// Full layer-width chain including input and output.
    pub dims: Vec<usize>,
    pub activation: ActivationCfg,
    /// Input samples as rows; some row must have pairwise distinct entries.
    pub x: Vec<Vec<f64>>,
    pub trials: usize,
    /// Relative singular-value cutoff; null means the size-based default.
    pub rel_tol: Option<f64>,
    /// Standard deviation of the Gaussian weight draws.
    pub scale: f64,
}

impl Default for CertifyRankCfg {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 5, 1],
            activation: ActivationCfg::default(),
            x: vec![
                vec![-2.0, -1.0, 0.0, 1.0, 2.0],
                vec![0.5, -0.5, 1.5, -1.5, 0.0],
            ],
            trials: 1000,
            rel_tol: None,
            scale: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescendCfg {
    pub dims: Vec<usize>,
    pub activation: ActivationCfg,
    /// "quadratic" or "logistic".
    pub loss: String,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// Radius of the hidden-weight perturbation ball.
    pub delta: f64,
    /// Scale of the random starting weights.
    pub init_scale: f64,
    pub max_tries: usize,
    pub rank_rel_tol: Option<f64>,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub path_samples: usize,
    /// Success threshold: final loss must be within
    /// `accept_tol * (1 + ||Y||_F^2)` of the loss infimum.
    pub accept_tol: f64,
}

impl Default for DescendCfg {
    fn default() -> Self {
        Self {
            dims: vec![1, 3, 1],
            activation: ActivationCfg::default(),
            loss: "quadratic".into(),
            x: vec![vec![0.5, -0.5, 1.5]],
            y: vec![vec![0.2, -0.1, 0.4]],
            delta: 1e-2,
            init_scale: 0.5,
            max_tries: 16,
            rank_rel_tol: None,
            solver_tol: 1e-10,
            solver_max_iters: 10_000,
            path_samples: 1000,
            accept_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproximateCfg {
    pub base: ActivationCfg,
    /// Number of derivative orders the construction keeps nonzero.
    pub order: usize,
    /// Checks elements k = 0 ..= k_max.
    pub k_max: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    /// Explicit scale s; null picks the canonical value from the base's
    /// derivative table.
    pub scale_override: Option<f64>,
    /// When set, each element is also checked for nonzero derivatives up to
    /// this count and the result reported per k.
    pub certify_orders: Option<usize>,
    /// Additive slack when comparing the measured sup to the bound.
    pub bound_slack: f64,
}

impl Default for ApproximateCfg {
    fn default() -> Self {
        Self {
            base: ActivationCfg::default(),
            order: 6,
            k_max: 9,
            grid_lo: -10.0,
            grid_hi: 10.0,
            grid_points: 2001,
            scale_override: None,
            certify_orders: None,
            bound_slack: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleCfg {
    pub width: usize,
    pub x: f64,
    pub y: f64,
    /// Radius of the sampled neighbourhood around the tuned point.
    pub radius: f64,
    pub samples: usize,
    /// Tolerance for all three clauses of the verification.
    pub tol: f64,
}

impl Default for CounterexampleCfg {
    fn default() -> Self {
        Self {
            width: 4,
            x: 1.0,
            y: 1.0,
            radius: 0.05,
            samples: 100_000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanCfg {
    /// "uv", "bowl", or "basin_plateau".
    pub surface: String,
    pub resolution: usize,
    /// Axis bounds; null uses the surface's standard box.
    pub ubox: Option<[f64; 2]>,
    pub vbox: Option<[f64; 2]>,
    /// Relative tolerances, scaled by the value spread during the scan.
    pub value_tol: f64,
    pub strict_margin: f64,
    /// Absolute tolerance for counting a component as global and for the
    /// verdict; null uses the scan's effective value tolerance. Coarse
    /// grids need this raised to the discretization error.
    pub global_tol: Option<f64>,
}

impl Default for ScanCfg {
    fn default() -> Self {
        Self {
            surface: "uv".into(),
            resolution: 401,
            ubox: None,
            vbox: None,
            value_tol: landscape_lab::landscape::DEFAULT_VALUE_TOL,
            strict_margin: landscape_lab::landscape::DEFAULT_STRICT_MARGIN,
            global_tol: None,
        }
    }
}
