//! Activation functions with analyticity metadata and exact Taylor data at
//! the origin.
//!
//! The Taylor tables for sigmoid and tanh come from integer-coefficient
//! polynomial recurrences evaluated in exact arithmetic, so entries like
//! `sigmoid''(0) = 0` are exact zeros, not tiny floats. Softplus and swish
//! derivatives are derived from the sigmoid table in closed form. Finite
//! differences exist only as a cross-check and are always flagged
//! approximate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Highest derivative order stored in the Taylor tables.
pub const MAX_TAYLOR_ORDER: usize = 16;

/// Derivative cycle of `sin x + cos x` at 0: orders 0,1,2,3 give
/// +1, +1, -1, -1 and then repeat.
const TRIG_CYCLE: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

#[derive(Debug, Clone)]
enum Kind {
    Relu,
    LeakyRelu { alpha: f64 },
    Sigmoid,
    Tanh,
    Softplus { beta: f64 },
    Swish,
    Exp,
    NegSin2 { c: f64 },
    Zero,
    /// base(x) + amplitude * (sin x + cos x)
    TrigShifted { base: Box<Kind>, amplitude: f64 },
}

impl Kind {
    fn evaluate(&self, x: f64) -> f64 {
        match self {
            Kind::Relu => x.max(0.0),
            Kind::LeakyRelu { alpha } => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Kind::Sigmoid => sigmoid(x),
            Kind::Tanh => x.tanh(),
            Kind::Softplus { beta } => {
                let z = beta * x;
                (z.max(0.0) + (-z.abs()).exp().ln_1p()) / beta
            }
            Kind::Swish => x * sigmoid(x),
            Kind::Exp => x.exp(),
            Kind::NegSin2 { c } => -(x - c).sin().powi(2),
            Kind::Zero => 0.0,
            Kind::TrigShifted { base, amplitude } => {
                base.evaluate(x) + amplitude * (x.sin() + x.cos())
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A scalar activation together with its name, parameters, and (when the
/// closed form allows) exact derivatives at zero.
#[derive(Debug, Clone, Serialize)]
pub struct Activation {
    name: String,
    params: BTreeMap<String, f64>,
    analytic: bool,
    #[serde(skip)]
    kind: Kind,
    #[serde(skip)]
    taylor: Option<Vec<f64>>,
}

/// A derivative value at zero, with a flag telling whether it came from the
/// exact table or a finite-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derivative {
    pub value: f64,
    pub approximate: bool,
}

/// Outcome of checking that the first `count` derivatives at zero (orders
/// `0..count`) are all nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonzeroDerivatives {
    /// Number of leading derivative orders that were inspected.
    pub count: usize,
    pub all_nonzero: bool,
    /// Lowest order whose derivative at zero vanishes, if any.
    pub first_zero: Option<usize>,
}

impl Activation {
    /// A builtin activation with default parameters.
    pub fn builtin(name: &str) -> Result<Self> {
        Self::builtin_with(name, &BTreeMap::new())
    }

    /// A builtin activation. Recognized names: `relu`, `leaky_relu` (param
    /// `alpha`, default 0.01), `sigmoid`, `tanh`, `softplus` (param `beta`,
    /// default 1), `swish`, `exp`, `negsin2` (param `c`, default 1, the
    /// function `-sin^2(x - c)`).
    pub fn builtin_with(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| -> Result<f64> {
            let v = params.get(key).copied().unwrap_or(default);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidInput(format!(
                    "parameter {key} of {name} must be finite"
                )))
            }
        };
        let allow = |keys: &[&str]| -> Result<()> {
            for k in params.keys() {
                if !keys.contains(&k.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "activation {name} does not take parameter {k}"
                    )));
                }
            }
            Ok(())
        };
        let (kind, taylor) = match name {
            "relu" => {
                allow(&[])?;
                (Kind::Relu, None)
            }
            "leaky_relu" => {
                allow(&["alpha"])?;
                let alpha = get("alpha", 0.01)?;
                (Kind::LeakyRelu { alpha }, None)
            }
            "sigmoid" => {
                allow(&[])?;
                (Kind::Sigmoid, Some(sigmoid_taylor()))
            }
            "tanh" => {
                allow(&[])?;
                (Kind::Tanh, Some(tanh_taylor()))
            }
            "softplus" => {
                allow(&["beta"])?;
                let beta = get("beta", 1.0)?;
                if beta <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "softplus beta must be positive, got {beta}"
                    )));
                }
                (Kind::Softplus { beta }, Some(softplus_taylor(beta)))
            }
            "swish" => {
                allow(&[])?;
                (Kind::Swish, Some(swish_taylor()))
            }
            "exp" => {
                allow(&[])?;
                (Kind::Exp, Some(vec![1.0; MAX_TAYLOR_ORDER + 1]))
            }
            "negsin2" => {
                allow(&["c"])?;
                let c = get("c", 1.0)?;
                (Kind::NegSin2 { c }, Some(negsin2_taylor(c)))
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown activation name {other:?}"
                )))
            }
        };
        let analytic = taylor.is_some();
        let mut kept = params.clone();
        match &kind {
            Kind::LeakyRelu { alpha } => {
                kept.insert("alpha".into(), *alpha);
            }
            Kind::Softplus { beta } => {
                kept.insert("beta".into(), *beta);
            }
            Kind::NegSin2 { c } => {
                kept.insert("c".into(), *c);
            }
            _ => {}
        }
        Ok(Self {
            name: name.to_string(),
            params: kept,
            analytic,
            kind,
            taylor,
        })
    }

    /// The identically-zero activation. Analytic with every derivative zero;
    /// useful as the degenerate base case for the repair sequence.
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            params: BTreeMap::new(),
            analytic: true,
            kind: Kind::Zero,
            taylor: Some(vec![0.0; MAX_TAYLOR_ORDER + 1]),
        }
    }

    /// `self(x) + amplitude * (sin x + cos x)`. Carries exact Taylor data
    /// whenever the base does.
    pub fn with_trig_term(&self, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidInput("amplitude must be finite".into()));
        }
        let taylor = self.taylor.as_ref().map(|t| {
            t.iter()
                .enumerate()
                .map(|(n, v)| v + amplitude * TRIG_CYCLE[n % 4])
                .collect()
        });
        let mut params = self.params.clone();
        params.insert("trig_amplitude".into(), amplitude);
        Ok(Self {
            name: format!("{}+trig", self.name),
            params,
            analytic: self.analytic,
            kind: Kind::TrigShifted {
                base: Box::new(self.kind.clone()),
                amplitude,
            },
            taylor,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// Exact derivatives at zero for orders `0..=MAX_TAYLOR_ORDER`, when the
    /// closed form provides them.
    pub fn taylor_at_zero(&self) -> Option<&[f64]> {
        self.taylor.as_deref()
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.kind.evaluate(x)
    }

    /// Applies the activation entrywise; shape is preserved. Overflow to a
    /// non-finite value is reported with the offending index.
    pub fn apply_elementwise(&self, a: &Matrix) -> Result<Matrix> {
        let data = a.as_slice().iter().map(|&x| self.evaluate(x)).collect();
        Matrix::new(a.rows(), a.cols(), data)
    }

    /// The derivative of the given order at zero. Exact from the Taylor
    /// table when available; otherwise a central finite-difference estimate
    /// (orders 0 through 4 only) flagged approximate.
    pub fn derivative_at_zero(&self, order: usize) -> Result<Derivative> {
        if let Some(taylor) = &self.taylor {
            return match taylor.get(order) {
                Some(&value) => Ok(Derivative {
                    value,
                    approximate: false,
                }),
                None => Err(Error::UnsupportedOrder {
                    name: self.name.clone(),
                    order,
                    max: taylor.len() - 1,
                }),
            };
        }
        if order > 4 {
            return Err(Error::UnsupportedOrder {
                name: self.name.clone(),
                order,
                max: 4,
            });
        }
        Ok(Derivative {
            value: self.finite_difference(order),
            approximate: true,
        })
    }

    /// Central finite difference with one Richardson extrapolation step.
    /// Diagnostic only; never accepted as certification evidence.
    fn finite_difference(&self, order: usize) -> f64 {
        let stencil = |h: f64| -> f64 {
            let f = |t: f64| self.evaluate(t);
            match order {
                0 => f(0.0),
                1 => (f(h) - f(-h)) / (2.0 * h),
                2 => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
                3 => (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h.powi(3)),
                4 => {
                    (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h))
                        / h.powi(4)
                }
                _ => unreachable!("orders above 4 rejected earlier"),
            }
        };
        let h = 1e-2;
        let coarse = stencil(h);
        let fine = stencil(h / 2.0);
        (4.0 * fine - coarse) / 3.0
    }

    /// Checks that the derivatives of orders `0..count` at zero are all
    /// nonzero, reading only the exact Taylor table. Activations without
    /// Taylor data cannot be certified and produce an error.
    pub fn first_derivatives_nonzero(&self, count: usize) -> Result<NonzeroDerivatives> {
        let taylor = self.taylor.as_ref().ok_or_else(|| Error::MissingTaylorData {
            name: self.name.clone(),
        })?;
        if count > taylor.len() {
            return Err(Error::UnsupportedOrder {
                name: self.name.clone(),
                order: count - 1,
                max: taylor.len() - 1,
            });
        }
        let first_zero = taylor[..count].iter().position(|v| *v == 0.0);
        Ok(NonzeroDerivatives {
            count,
            all_nonzero: first_zero.is_none(),
            first_zero,
        })
    }
}

/// Evaluates an integer-coefficient polynomial at 1/2 exactly as a dyadic
/// rational, then converts. All intermediate values stay well inside i128.
fn eval_at_half(coeffs: &[i128]) -> f64 {
    let k = coeffs.len() - 1;
    let num: i128 = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * (1i128 << (k - j)))
        .sum();
    num as f64 / (1i128 << k) as f64
}

/// sigmoid satisfies s' = s - s^2, so every derivative is an
/// integer-coefficient polynomial in s: P_0 = s, P_{n+1} = P_n' * (s - s^2).
/// Evaluating at s = 1/2 gives the exact derivative at x = 0.
fn sigmoid_taylor() -> Vec<f64> {
    let mut p: Vec<i128> = vec![0, 1];
    let mut out = Vec::with_capacity(MAX_TAYLOR_ORDER + 1);
    for _ in 0..=MAX_TAYLOR_ORDER {
        out.push(eval_at_half(&p));
        let mut d = vec![0i128; p.len() - 1];
        for j in 1..p.len() {
            d[j - 1] = p[j] * j as i128;
        }
        let mut next = vec![0i128; d.len() + 2];
        for (j, c) in d.iter().enumerate() {
            next[j + 1] += c;
            next[j + 2] -= c;
        }
        p = next;
    }
    out
}

/// tanh satisfies t' = 1 - t^2; the constant term of the recurring
/// polynomial is the exact derivative at 0.
fn tanh_taylor() -> Vec<f64> {
    let mut q: Vec<i128> = vec![0, 1];
    let mut out = Vec::with_capacity(MAX_TAYLOR_ORDER + 1);
    for _ in 0..=MAX_TAYLOR_ORDER {
        out.push(q[0] as f64);
        let mut d = vec![0i128; q.len() - 1];
        for j in 1..q.len() {
            d[j - 1] = q[j] * j as i128;
        }
        let mut next = vec![0i128; d.len() + 2];
        for (j, c) in d.iter().enumerate() {
            next[j] += c;
            next[j + 2] -= c;
        }
        q = next;
    }
    out
}

/// softplus_beta(x) = ln(1 + e^(beta x)) / beta has derivative
/// sigmoid(beta x), so order n >= 1 equals beta^(n-1) * sigmoid^(n-1)(0).
fn softplus_taylor(beta: f64) -> Vec<f64> {
    let sig = sigmoid_taylor();
    let mut out = Vec::with_capacity(MAX_TAYLOR_ORDER + 1);
    out.push(std::f64::consts::LN_2 / beta);
    for n in 1..=MAX_TAYLOR_ORDER {
        out.push(beta.powi(n as i32 - 1) * sig[n - 1]);
    }
    out
}

/// swish(x) = x * sigmoid(x); by the product rule the order-n derivative at
/// zero is n * sigmoid^(n-1)(0).
fn swish_taylor() -> Vec<f64> {
    let sig = sigmoid_taylor();
    let mut out = Vec::with_capacity(MAX_TAYLOR_ORDER + 1);
    out.push(0.0);
    for n in 1..=MAX_TAYLOR_ORDER {
        out.push(n as f64 * sig[n - 1]);
    }
    out
}

/// -sin^2(x - c) = -1/2 + cos(2x - 2c)/2, so the order-n derivative at zero
/// is 2^(n-1) * cos(n pi/2 - 2c), which cycles through +-cos(2c), +-sin(2c).
fn negsin2_taylor(c: f64) -> Vec<f64> {
    let cos2c = (2.0 * c).cos();
    let sin2c = (2.0 * c).sin();
    let mut out = Vec::with_capacity(MAX_TAYLOR_ORDER + 1);
    out.push(-c.sin().powi(2));
    for n in 1..=MAX_TAYLOR_ORDER {
        let phase = match n % 4 {
            0 => cos2c,
            1 => sin2c,
            2 => -cos2c,
            _ => -sin2c,
        };
        out.push(2f64.powi(n as i32 - 1) * phase);
    }
    out
}
