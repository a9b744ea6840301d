//! Fit-quality and structure metrics: R², NED, auto-recovery.

use serde::{Deserialize, Serialize};

use crate::benchmarks::{sample, SamplingSpec};
use crate::data::mse;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::ops::EvalPolicy;
use crate::ted::tree_edit_distance;

/// Coefficient of determination, or a marker when the target is constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RSquared {
    Value(f64),
    Degenerate,
}

impl RSquared {
    pub fn value(self) -> Option<f64> {
        match self {
            RSquared::Value(v) => Some(v),
            RSquared::Degenerate => None,
        }
    }

    /// Numeric score for ranking fits. A constant target scores 1 when matched
    /// exactly and 0 otherwise.
    pub fn score_or(self, exact: bool) -> f64 {
        match self {
            RSquared::Value(v) => v,
            RSquared::Degenerate if exact => 1.0,
            RSquared::Degenerate => 0.0,
        }
    }
}

/// `1 - SS_res / SS_tot`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<RSquared> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::Config("r_squared needs at least two samples".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Ok(RSquared::Degenerate);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Ok(RSquared::Value(if r2.is_nan() {
        f64::NEG_INFINITY
    } else {
        r2
    }))
}

/// `min(1, ED(pred, truth) / |truth|)` over constant-masked trees.
pub fn ned(pred: &Expression, truth: &Expression) -> f64 {
    let ed = tree_edit_distance(pred, truth) as f64;
    (ed / truth.node_count() as f64).min(1.0)
}

/// Dense-sample R² above this counts as numerically exact.
pub const RECOVERY_R2: f64 = 1.0 - 1e-10;

/// Extra nodes a numerically exact fit may carry over the target.
pub const RECOVERY_SIZE_SLACK: usize = 2;

/// Automated stand-in for a manual exact-form comparison: structural match
/// after masking constants, or a numerically exact fit on a dense fresh sample
/// (ten times the benchmark's count) that is no more than two nodes larger.
pub fn is_recovered(
    pred: &Expression,
    truth: &Expression,
    domain: &SamplingSpec,
    policy: &EvalPolicy,
) -> bool {
    if pred.num_vars() != truth.num_vars() {
        return false;
    }
    if ned(pred, truth) == 0.0 {
        return true;
    }
    if pred.node_count() > truth.node_count() + RECOVERY_SIZE_SLACK {
        return false;
    }
    let dense = SamplingSpec {
        count: domain.count.saturating_mul(10).min(100_000),
        seed: derive_seed(domain.seed, 0x5eed_0f_de45e),
        ..*domain
    };
    let x = sample(&dense, truth.num_vars());
    let (Ok(y), Ok(yhat)) = (truth.eval_batch(&x, policy), pred.eval_batch(&x, policy)) else {
        return false;
    };
    match r_squared(&y, &yhat) {
        Ok(RSquared::Value(r2)) => r2 > RECOVERY_R2,
        Ok(RSquared::Degenerate) => mse(&y, &yhat) == 0.0,
        Err(_) => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub r2: f64,
    pub mse: f64,
    pub ned: f64,
    pub node_count: usize,
    pub evaluation_count: usize,
    pub recovered: bool,
}
