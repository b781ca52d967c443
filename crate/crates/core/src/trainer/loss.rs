//! Logistic losses over a signed label.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weight_learning::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    /// `−log σ(S)` for positives, `−log(1 − σ(S))` for negatives.
    CrossEntropy,
    /// `log(1 + exp(−Y·S))`.
    #[default]
    Softplus,
}

impl FromStr for LossForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cross_entropy" | "ce" => Ok(Self::CrossEntropy),
            "softplus" => Ok(Self::Softplus),
            _ => Err(Error::UnknownName {
                what: "loss form",
                name: s.to_string(),
                valid: "cross_entropy, softplus",
            }),
        }
    }
}

impl fmt::Display for LossForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CrossEntropy => "cross_entropy",
            Self::Softplus => "softplus",
        })
    }
}

/// Class of a training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` or `−1`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

/// `log(1 + eˣ)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log σ(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn loss_triple(score: f64, label: Label, form: LossForm) -> f64 {
    match form {
        LossForm::Softplus => softplus(-label.sign() * score),
        LossForm::CrossEntropy => match label {
            Label::Positive => -log_sigmoid(score),
            // 1 − σ(s) = σ(−s)
            Label::Negative => -log_sigmoid(-score),
        },
    }
}

/// `∂ loss / ∂ score`.
pub fn loss_derivative(score: f64, label: Label, form: LossForm) -> f64 {
    match form {
        LossForm::Softplus => {
            let y = label.sign();
            -y * sigmoid(-y * score)
        }
        LossForm::CrossEntropy => match label {
            Label::Positive => sigmoid(score) - 1.0,
            Label::Negative => sigmoid(score),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_score_costs_log_two() {
        for form in [LossForm::Softplus, LossForm::CrossEntropy] {
            for label in [Label::Positive, Label::Negative] {
                assert!((loss_triple(0.0, label, form) - std::f64::consts::LN_2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn no_overflow_at_extremes() {
        for form in [LossForm::Softplus, LossForm::CrossEntropy] {
            for s in [-700.0, -40.0, 40.0, 700.0] {
                for label in [Label::Positive, Label::Negative] {
                    let l = loss_triple(s, label, form);
                    assert!(l.is_finite() && l >= 0.0, "{form} {s} {l}");
                    assert!(loss_derivative(s, label, form).is_finite());
                }
            }
            assert!((loss_triple(-700.0, Label::Positive, form) - 700.0).abs() < 1e-9);
            assert!(loss_triple(700.0, Label::Positive, form) < 1e-300);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for form in [LossForm::Softplus, LossForm::CrossEntropy] {
            for label in [Label::Positive, Label::Negative] {
                for s in [-3.0, -0.2, 0.0, 0.7, 5.0] {
                    let h = 1e-6;
                    let fd = (loss_triple(s + h, label, form) - loss_triple(s - h, label, form)) / (2.0 * h);
                    let an = loss_derivative(s, label, form);
                    assert!((fd - an).abs() < 1e-8, "{form} {label:?} {s}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn forms_agree(s in -30.0..30.0f64, pos in any::<bool>()) {
            let label = if pos { Label::Positive } else { Label::Negative };
            let a = loss_triple(s, label, LossForm::Softplus);
            let b = loss_triple(s, label, LossForm::CrossEntropy);
            prop_assert!((a - b).abs() <= 1e-12);
            let da = loss_derivative(s, label, LossForm::Softplus);
            let db = loss_derivative(s, label, LossForm::CrossEntropy);
            prop_assert!((da - db).abs() <= 1e-12);
        }
    }
}
