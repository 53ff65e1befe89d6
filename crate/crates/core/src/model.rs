//! Binary logistic regression over sparse feature vectors.
//!
//! The training objective is the mean negative log-likelihood plus an L2
//! penalty on the weights (the bias is not penalized):
//!
//! ```text
//! f(w, b) = (1/n) Σ [softplus(zᵢ) − yᵢ zᵢ] + (λ/2)‖w‖²,   zᵢ = b + w·xᵢ
//! ```
//!
//! Both solvers are full-batch and use backtracking (Armijo) line search, so
//! the loss never increases from one epoch to the next.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::SparseVector;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains only {} examples", if *.0 { "positive" } else { "negative" })]
    SingleClass(bool),
    #[error("feature index {index} out of range for model dimension {dimension}")]
    DimensionMismatch { index: usize, dimension: usize },
    #[error("model parameters must be finite")]
    NonFinite,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearModel {
    pub fn zeros(dimension: usize) -> Self {
        Self {
            weights: vec![0.0; dimension],
            bias: 0.0,
        }
    }

    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self, ModelError> {
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(Self { weights, bias })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// `bias + Σ wᵢ·vᵢ`, accumulated in ascending feature order.
    pub fn margin(&self, v: &SparseVector) -> Result<f64, ModelError> {
        let mut z = self.bias;
        for (i, x) in v.iter() {
            let w = self.weights.get(i).ok_or(ModelError::DimensionMismatch {
                index: i,
                dimension: self.weights.len(),
            })?;
            z += w * x;
        }
        Ok(z)
    }

    /// Probability that `v` is positive.
    pub fn score(&self, v: &SparseVector) -> Result<f64, ModelError> {
        self.margin(v).map(sigmoid)
    }

    fn to_params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn from_params(mut params: Vec<f64>) -> Self {
        let bias = params.pop().expect("params include the bias");
        Self {
            weights: params,
            bias,
        }
    }
}

pub fn score(model: &LinearModel, v: &SparseVector) -> Result<f64, ModelError> {
    model.score(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Limited-memory BFGS.
    Lbfgs,
    /// Steepest descent.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_penalty: f64,
    pub max_epochs: usize,
    /// Stop once an epoch lowers the loss by less than this fraction.
    pub tolerance: f64,
    /// Stop once the gradient norm falls to this value.
    pub gradient_tolerance: f64,
    pub solver: Solver,
    /// Curvature pairs kept by L-BFGS.
    pub memory: usize,
    /// Start each round from the previous round's model.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_penalty: 1e-4,
            max_epochs: 200,
            tolerance: 1e-6,
            gradient_tolerance: 1e-6,
            solver: Solver::Lbfgs,
            memory: 10,
            warm_start: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad("l2_penalty must be a nonnegative finite number");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self.tolerance.is_nan()
            || self.tolerance < 0.0
            || self.gradient_tolerance.is_nan()
            || self.gradient_tolerance < 0.0
        {
            return bad("tolerances must be nonnegative");
        }
        if self.solver == Solver::Lbfgs && self.memory == 0 {
            return bad("L-BFGS memory must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    /// Loss before the first epoch followed by the loss after each epoch.
    pub loss_history: Vec<f64>,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Regularized logistic loss over a fixed training set.
///
/// Parameters are laid out as `[w₀, …, w_{d−1}, b]`.
pub struct Objective<'a> {
    features: &'a [&'a SparseVector],
    labels: &'a [bool],
    dimension: usize,
    l2_penalty: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        features: &'a [&'a SparseVector],
        labels: &'a [bool],
        dimension: usize,
        l2_penalty: f64,
    ) -> Result<Self, ModelError> {
        assert_eq!(features.len(), labels.len());
        if features.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        for v in features {
            if let Some(&index) = v.indices().last() {
                if index >= dimension {
                    return Err(ModelError::DimensionMismatch { index, dimension });
                }
            }
        }
        Ok(Self {
            features,
            labels,
            dimension,
            l2_penalty,
        })
    }

    pub fn num_params(&self) -> usize {
        self.dimension + 1
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(self.dimension);
        let mut loss = 0.0;
        for (v, &y) in self.features.iter().zip(self.labels) {
            let z = b[0] + v.iter().map(|(i, x)| w[i] * x).sum::<f64>();
            loss += softplus(z) - if y { z } else { 0.0 };
        }
        loss / self.features.len() as f64 + 0.5 * self.l2_penalty * dot(w, w)
    }

    /// Returns the loss and writes its gradient into `grad`.
    pub fn value_and_gradient(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = params.split_at(self.dimension);
        grad.fill(0.0);
        let (gw, gb) = grad.split_at_mut(self.dimension);
        let mut loss = 0.0;
        for (v, &y) in self.features.iter().zip(self.labels) {
            let z = b[0] + v.iter().map(|(i, x)| w[i] * x).sum::<f64>();
            let target = if y { 1.0 } else { 0.0 };
            loss += softplus(z) - target * z;
            let residual = sigmoid(z) - target;
            gb[0] += residual;
            for (i, x) in v.iter() {
                gw[i] += residual * x;
            }
        }
        let inv_n = 1.0 / self.features.len() as f64;
        for (g, wi) in gw.iter_mut().zip(w) {
            *g = *g * inv_n + self.l2_penalty * wi;
        }
        gb[0] *= inv_n;
        loss * inv_n + 0.5 * self.l2_penalty * dot(w, w)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Fits a model to `(features, labels)`.
///
/// `init` seeds the parameters (warm start); its dimension must match.
pub fn train(
    features: &[&SparseVector],
    labels: &[bool],
    dimension: usize,
    config: &TrainConfig,
    init: Option<&LinearModel>,
) -> Result<(LinearModel, TrainReport), ModelError> {
    config.validate()?;
    let positives = labels.iter().filter(|&&l| l).count();
    if !labels.is_empty() && (positives == 0 || positives == labels.len()) {
        return Err(ModelError::SingleClass(positives > 0));
    }
    let objective = Objective::new(features, labels, dimension, config.l2_penalty)?;
    let mut x = match init {
        Some(m) if m.dimension() == dimension => m.to_params(),
        Some(m) => {
            return Err(ModelError::DimensionMismatch {
                index: m.dimension(),
                dimension,
            })
        }
        None => vec![0.0; dimension + 1],
    };
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut loss = objective.value_and_gradient(&x, &mut grad);
    let mut history = vec![loss];
    let mut history_s: Vec<Vec<f64>> = Vec::new();
    let mut history_y: Vec<Vec<f64>> = Vec::new();
    let mut gd_step = 1.0;
    let mut converged = false;
    let mut epochs = 0;

    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];

    while epochs < config.max_epochs {
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm <= config.gradient_tolerance {
            converged = true;
            break;
        }
        let (mut direction, mut step) = match config.solver {
            Solver::GradientDescent => (grad.iter().map(|g| -g).collect::<Vec<_>>(), gd_step),
            Solver::Lbfgs => {
                let d = lbfgs_direction(&grad, &history_s, &history_y);
                let step = if history_s.is_empty() {
                    (1.0 / gnorm).min(1.0)
                } else {
                    1.0
                };
                (d, step)
            }
        };
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            // Not a descent direction: drop curvature memory and fall back.
            history_s.clear();
            history_y.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            step = (1.0 / gnorm).min(1.0);
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            trial.copy_from_slice(&x);
            axpy(step, &direction, &mut trial);
            let trial_loss = objective.value_and_gradient(&trial, &mut trial_grad);
            if trial_loss.is_finite() && trial_loss <= loss + ARMIJO * step * slope {
                accepted = Some(trial_loss);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else {
            // No decrease representable at this precision.
            converged = gnorm <= config.gradient_tolerance;
            break;
        };
        epochs += 1;

        if config.solver == Solver::Lbfgs {
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            if dot(&s, &y) > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
                if history_s.len() == config.memory {
                    history_s.remove(0);
                    history_y.remove(0);
                }
                history_s.push(s);
                history_y.push(y);
            }
        } else {
            gd_step = step * 2.0;
        }

        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        let decrease = loss - new_loss;
        loss = new_loss;
        history.push(loss);
        if decrease <= config.tolerance * loss.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let gradient_norm = dot(&grad, &grad).sqrt();
    if gradient_norm <= config.gradient_tolerance {
        converged = true;
    }
    let model = LinearModel::from_params(x);
    if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok((
        model,
        TrainReport {
            epochs,
            loss_history: history,
            gradient_norm,
            converged,
        },
    ))
}

/// Two-loop recursion: returns `−H·grad` for the implicit inverse Hessian.
fn lbfgs_direction(grad: &[f64], s: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let k = s.len();
    let mut alpha = vec![0.0; k];
    let rho: Vec<f64> = (0..k).map(|i| 1.0 / dot(&y[i], &s[i])).collect();
    for i in (0..k).rev() {
        alpha[i] = rho[i] * dot(&s[i], &q);
        axpy(-alpha[i], &y[i], &mut q);
    }
    if k > 0 {
        let gamma = dot(&s[k - 1], &y[k - 1]) / dot(&y[k - 1], &y[k - 1]);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..k {
        let beta = rho[i] * dot(&y[i], &q);
        axpy(alpha[i] - beta, &s[i], &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
