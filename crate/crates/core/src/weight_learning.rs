//! Learnable weight vectors: range restrictions and the Dirichlet sparsity
//! penalty.
//!
//! The score always consumes `restrict(raw)`. The Dirichlet penalty is
//! applied to that restricted vector, i.e. to the weights that actually
//! enter the score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest magnitude allowed inside the Dirichlet log term.
pub const DIRICHLET_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestrictionKind {
    #[default]
    None,
    Tanh,
    Sigmoid,
    Softmax,
}

impl FromStr for RestrictionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "tanh" => Ok(Self::Tanh),
            "sigmoid" => Ok(Self::Sigmoid),
            "softmax" => Ok(Self::Softmax),
            _ => Err(Error::UnknownName {
                what: "restriction",
                name: s.to_string(),
                valid: "none, tanh, sigmoid, softmax",
            }),
        }
    }
}

impl fmt::Display for RestrictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Tanh => "tanh",
            Self::Sigmoid => "sigmoid",
            Self::Softmax => "softmax",
        })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps raw parameters to weights.
pub fn restrict(raw: &[f64], kind: RestrictionKind) -> Vec<f64> {
    match kind {
        RestrictionKind::None => raw.to_vec(),
        RestrictionKind::Tanh => raw.iter().map(|x| x.tanh()).collect(),
        RestrictionKind::Sigmoid => raw.iter().map(|&x| sigmoid(x)).collect(),
        RestrictionKind::Softmax => {
            let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = raw.iter().map(|x| (x - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / sum).collect()
        }
    }
}

/// Pulls a gradient with respect to the restricted weights back to the raw
/// parameters. `omega` must equal `restrict(raw, kind)`.
pub fn restrict_backward(omega: &[f64], grad_omega: &[f64], kind: RestrictionKind) -> Vec<f64> {
    debug_assert_eq!(omega.len(), grad_omega.len());
    match kind {
        RestrictionKind::None => grad_omega.to_vec(),
        RestrictionKind::Tanh => omega
            .iter()
            .zip(grad_omega)
            .map(|(w, g)| g * (1.0 - w * w))
            .collect(),
        RestrictionKind::Sigmoid => omega
            .iter()
            .zip(grad_omega)
            .map(|(w, g)| g * w * (1.0 - w))
            .collect(),
        RestrictionKind::Softmax => {
            // J = diag(w) - w wᵀ
            let dot: f64 = omega.iter().zip(grad_omega).map(|(w, g)| w * g).sum();
            omega
                .iter()
                .zip(grad_omega)
                .map(|(w, g)| w * (g - dot))
                .collect()
        }
    }
}

/// Strength and shape of the Dirichlet sparsity penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletRegConfig {
    pub alpha: f64,
    pub lambda_dir: f64,
    pub enabled: bool,
}

impl Default for DirichletRegConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0 / 16.0,
            lambda_dir: 1e-2,
            enabled: false,
        }
    }
}

impl DirichletRegConfig {
    pub fn new(alpha: f64, lambda_dir: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::Config(format!("dirichlet alpha must be > 0, got {alpha}")));
        }
        if lambda_dir.is_nan() || lambda_dir < 0.0 {
            return Err(Error::Config(format!(
                "dirichlet lambda must be >= 0, got {lambda_dir}"
            )));
        }
        Ok(Self {
            alpha,
            lambda_dir,
            enabled: true,
        })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `−λ_dir Σ (α−1) log(|ω_m| / ‖ω‖₁)` and its gradient with respect to ω.
///
/// Magnitudes below [`DIRICHLET_CLAMP`] are clamped inside the log, and the
/// gradient uses the clamped value. The subgradient of `|ω|` at 0 is 0.
pub fn dirichlet_reg(omega: &[f64], cfg: &DirichletRegConfig) -> Result<(f64, Vec<f64>)> {
    let l1: f64 = omega.iter().map(|w| w.abs()).sum();
    if l1 == 0.0 {
        return Err(Error::ZeroWeights);
    }
    if !cfg.enabled || cfg.lambda_dir == 0.0 || cfg.alpha == 1.0 {
        return Ok((0.0, vec![0.0; omega.len()]));
    }
    let coef = -cfg.lambda_dir * (cfg.alpha - 1.0);
    let m = omega.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(omega.len());
    for &w in omega {
        let mag = w.abs().max(DIRICHLET_CLAMP);
        loss += (mag / l1).ln();
        grad.push(coef * sign(w) * (1.0 / mag - m / l1));
    }
    Ok((coef * loss, grad))
}

/// `λ Σ |ω_m|` and its subgradient. Optional alternative to the Dirichlet
/// penalty.
pub fn l1_reg(omega: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let loss = lambda * omega.iter().map(|w| w.abs()).sum::<f64>();
    (loss, omega.iter().map(|&w| lambda * sign(w)).collect())
}
