//! Single-point DPO loss and its gradient with respect to the policy
//! log-probabilities.

use serde::{Deserialize, Serialize};

use super::AlignError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoPoint {
    pub policy_best: f64,
    pub policy_worst: f64,
    pub ref_best: f64,
    pub ref_worst: f64,
    pub beta: f64,
}

impl DpoPoint {
    fn validate(&self) -> Result<(), AlignError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(AlignError::InvalidBeta(self.beta));
        }
        if ![self.policy_best, self.policy_worst, self.ref_best, self.ref_worst]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(AlignError::NonFinite);
        }
        Ok(())
    }

    /// `beta * ((pb - rb) - (pw - rw))`
    pub fn margin(&self) -> f64 {
        self.beta * ((self.policy_best - self.ref_best) - (self.policy_worst - self.ref_worst))
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
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

/// `-ln sigmoid(z)` with `z` the scaled margin.
pub fn dpo_loss(point: &DpoPoint) -> Result<f64, AlignError> {
    point.validate()?;
    Ok(softplus(-point.margin()))
}

/// `(dL/d policy_best, dL/d policy_worst)`.
pub fn dpo_grad(point: &DpoPoint) -> Result<(f64, f64), AlignError> {
    point.validate()?;
    let g = point.beta * sigmoid(-point.margin());
    Ok((-g, g))
}

/// Mean per-point loss.
pub fn dpo_dataset_loss(points: &[DpoPoint]) -> Result<f64, AlignError> {
    if points.is_empty() {
        return Err(AlignError::Empty);
    }
    let mut sum = 0.0;
    for p in points {
        sum += dpo_loss(p)?;
    }
    Ok(sum / points.len() as f64)
}
