//! Convergence verdicts shared by the shell-quadrature estimators.
//!
//! Both the weighted tail norms (one variable) and the monomial norms (two
//! variables) integrate over geometric shells and classify the resulting
//! mass sequence, so they report through one type.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConvergenceStatus {
    /// The integral converges; `value` includes a tail extrapolation and
    /// `error` bounds the neglected remainder plus quadrature slack.
    Finite { value: f64, error: f64 },
    /// The integral diverges; `exponent` is the (estimated or exact) power
    /// of the radial integrand driving the divergence.
    Divergent { exponent: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    #[serde(flatten)]
    pub status: ConvergenceStatus,
    /// Shell masses, innermost first, as actually summed (diagnostic).
    pub detail: Vec<f64>,
    /// True when the fitted decay exponent fell in the ambiguous band around
    /// the convergence boundary and budget escalation did not resolve it.
    #[serde(default, skip_serializing_if = "is_false")]
    pub near_critical: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ConvergenceVerdict {
    pub fn finite(value: f64, error: f64, detail: Vec<f64>) -> Self {
        ConvergenceVerdict {
            status: ConvergenceStatus::Finite { value, error },
            detail,
            near_critical: false,
        }
    }

    pub fn divergent(exponent: f64, detail: Vec<f64>) -> Self {
        ConvergenceVerdict {
            status: ConvergenceStatus::Divergent { exponent },
            detail,
            near_critical: false,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.status, ConvergenceStatus::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self.status {
            ConvergenceStatus::Finite { value, .. } => Some(value),
            ConvergenceStatus::Divergent { .. } => None,
        }
    }
}
