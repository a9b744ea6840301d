//! Loss, alternating optimization, and constant refinement.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchmarks::Dataset;
use crate::data::{mse, Matrix};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evolution::{extract_expression, rebuild_network, ExtractionTrace};
use crate::expr::{Expression, FlatExpr};
use crate::metrics::r_squared;
use crate::network::{softmax, InitSpec, MetaNetwork, NetNode, ParamGroup};
use crate::ops::EvalPolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Entropy coefficient.
    pub lambda: f64,
    /// Steps on `(W, B)` per round.
    pub n_wb: usize,
    /// Steps on `(Z, D)` per round.
    pub n_dz: usize,
    /// Stop once training R² exceeds this.
    pub r2_threshold: f64,
    pub alpha: f64,
    pub max_outer_iters: usize,
    pub time_budget_s: f64,
    /// Softmax temperature.
    pub c: f64,
    /// Depth of the initial full binary network.
    pub init_depth: usize,
    /// Alternation rounds between consecutive extractions.
    pub rounds_per_extraction: usize,
    pub refine_iters: usize,
    /// Extractions without progress (see [`MIN_PROGRESS`]) before the network
    /// is re-initialized; 0 disables.
    pub restart_patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 0.2,
            n_wb: 10,
            n_dz: 10,
            r2_threshold: 0.9999,
            alpha: 0.01,
            max_outer_iters: 200,
            time_budget_s: 60.0,
            c: 1.0,
            init_depth: 2,
            rounds_per_extraction: 1,
            refine_iters: 500,
            restart_patience: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid hyperparameter: {what}")));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if self.n_wb < 1 || self.n_dz < 1 || self.rounds_per_extraction < 1 {
            return bad("step counts must be >= 1");
        }
        if !(self.r2_threshold > 0.0 && self.r2_threshold <= 1.0) {
            return bad("r2_threshold must lie in (0, 1]");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be > 0");
        }
        if self.max_outer_iters < 1 {
            return bad("max_outer_iters must be >= 1");
        }
        if !(self.time_budget_s > 0.0) {
            return bad("time_budget_s must be > 0");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be > 0");
        }
        if self.init_depth < 1 {
            return bad("init_depth must be >= 1");
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
        }
        match key.trim() {
            "lambda" => self.lambda = num(key, value)?,
            "n_wb" => self.n_wb = num(key, value)?,
            "n_dz" => self.n_dz = num(key, value)?,
            "r2_threshold" => self.r2_threshold = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "max_outer_iters" => self.max_outer_iters = num(key, value)?,
            "time_budget_s" => self.time_budget_s = num(key, value)?,
            "c" => self.c = num(key, value)?,
            "init_depth" => self.init_depth = num(key, value)?,
            "rounds_per_extraction" => self.rounds_per_extraction = num(key, value)?,
            "refine_iters" => self.refine_iters = num(key, value)?,
            "restart_patience" => self.restart_patience = num(key, value)?,
            other => return Err(Error::Config(format!("unknown hyperparameter `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub mse: f64,
    pub entropy: f64,
}

/// Mean over internal nodes of `max(E)`. A network without internal nodes is
/// trivially decided and reports 1.
pub fn mean_max_selection(net: &MetaNetwork, c: f64) -> f64 {
    let maxima: Vec<f64> = net
        .nodes()
        .iter()
        .filter(|n| n.is_pangu())
        .map(|n| softmax(n.logits(), c).into_iter().fold(0.0, f64::max))
        .collect();
    if maxima.is_empty() {
        1.0
    } else {
        maxima.iter().sum::<f64>() / maxima.len() as f64
    }
}

fn entropy_term(net: &MetaNetwork, lambda: f64, c: f64) -> f64 {
    let logs: Vec<f64> = net
        .nodes()
        .iter()
        .filter_map(|n| match n {
            NetNode::Pangu(p) => Some(softmax(&p.z, c).into_iter().fold(0.0, f64::max).ln()),
            NetNode::Variable(_) => None,
        })
        .collect();
    if logs.is_empty() || lambda == 0.0 {
        return 0.0;
    }
    // max(E) <= 1, so every log is <= 0 and the term is >= 0
    (-lambda * logs.iter().sum::<f64>() / logs.len() as f64).max(0.0)
}

/// `MSE + entropy`, where entropy is `-lambda * mean(log max E)` over internal nodes.
pub fn loss(
    net: &MetaNetwork,
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    c: f64,
    policy: &EvalPolicy,
) -> Result<LossTerms> {
    if x.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let (yhat, _) = net.forward(x, policy, c)?;
    let l_mse = mse(y, &yhat);
    let l_entr = entropy_term(net, lambda, c);
    Ok(LossTerms {
        total: l_mse + l_entr,
        mse: l_mse,
        entropy: l_entr,
    })
}

/// Parameter groups trained together in one phase of the alternation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    WB,
    ZD,
}

impl Phase {
    pub fn groups(self) -> &'static [ParamGroup] {
        match self {
            Phase::WB => &[ParamGroup::W, ParamGroup::B],
            Phase::ZD => &[ParamGroup::Z, ParamGroup::D],
        }
    }
}

/// Largest gradient norm applied in one training step; longer gradients are rescaled.
pub const GRAD_CLIP: f64 = 10.0;

/// Largest L2 move of the constants in one refinement step.
pub const REFINE_MAX_MOVE: f64 = 1.0;

/// Fraction of the unexplained variance `1 - R²` an extraction must remove
/// to count as progress for `restart_patience`.
pub const MIN_PROGRESS: f64 = 1e-6;

/// Runs `steps` full-batch gradient steps on one phase's parameters. A step
/// whose gradient is not finite is skipped; others are clipped to [`GRAD_CLIP`].
#[allow(clippy::too_many_arguments)]
pub fn optimize_group(
    net: &mut MetaNetwork,
    phase: Phase,
    steps: usize,
    alpha: f64,
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    c: f64,
    policy: &EvalPolicy,
) -> Result<()> {
    let groups = phase.groups();
    for _ in 0..steps {
        let (_, tape) = net.forward(x, policy, c)?;
        let mut grads = net.backward(&tape, y, lambda)?;
        let sq: f64 = grads
            .nodes
            .iter()
            .map(|g| match phase {
                Phase::WB => g.w * g.w + g.b * g.b,
                Phase::ZD => g.logits.iter().map(|v| v * v).sum(),
            })
            .sum();
        if !sq.is_finite() {
            continue;
        }
        let norm = sq.sqrt();
        if norm > GRAD_CLIP {
            let s = GRAD_CLIP / norm;
            for g in &mut grads.nodes {
                g.w *= s;
                g.b *= s;
                g.logits.iter_mut().for_each(|v| *v *= s);
            }
        }
        net.apply_gradients(&grads, groups, alpha);
    }
    Ok(())
}

/// Gradient descent on the expression's constants with its structure frozen.
/// Returns the lowest-MSE parameters visited, so the result is never worse
/// than the input. The step starts at `alpha`, grows by 20% after every
/// accepted update and halves after every rejected one; no update moves the
/// constants further than [`REFINE_MAX_MOVE`].
pub fn refine_constants(
    expr: &Expression,
    x: &Matrix,
    y: &[f64],
    iters: usize,
    alpha: f64,
    policy: &EvalPolicy,
) -> Expression {
    if x.rows() == 0 || y.len() != x.rows() || x.cols() != expr.num_vars() {
        return expr.clone();
    }
    let flat = FlatExpr::new(expr);
    let mut params = expr.params();
    let mut grad = vec![0.0; params.len()];
    let mut best_loss = flat.mse_grad(&params, x, y, policy, &mut grad);
    if !best_loss.is_finite() {
        return expr.clone();
    }
    let mut best = params.clone();
    let mut step = alpha;
    let mut trial = params.clone();
    for _ in 0..iters {
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if step * norm > REFINE_MAX_MOVE {
            step = REFINE_MAX_MOVE / norm;
        }
        for ((t, p), g) in trial.iter_mut().zip(&params).zip(&grad) {
            *t = p - step * g;
        }
        let mut trial_grad = vec![0.0; params.len()];
        let l = flat.mse_grad(&trial, x, y, policy, &mut trial_grad);
        if l.is_finite() && l < best_loss {
            best_loss = l;
            best.copy_from_slice(&trial);
            params.copy_from_slice(&trial);
            grad = trial_grad;
            step *= 1.2;
        } else {
            step *= 0.5;
            if step < alpha * 1e-12 {
                break;
            }
        }
    }
    expr.with_params(&best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub outer_iter: usize,
    pub loss: f64,
    pub mse: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub expression: Expression,
    pub r2: f64,
    pub mse: f64,
    pub node_count: usize,
    pub evaluation_count: usize,
    pub loss_trace: Vec<LossRecord>,
    pub wall_time_s: f64,
    pub seed: u64,
    pub converged: bool,
    /// Mean `max(E)` over internal nodes just before the last extraction.
    pub final_max_selection: f64,
    /// Extraction decisions behind the returned expression.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction_trace: Option<ExtractionTrace>,
}

impl FitReport {
    pub const CSV_HEADER: &'static str =
        "seed,converged,r2,mse,node_count,evaluation_count,final_max_selection,expression";

    /// One CSV row matching [`FitReport::CSV_HEADER`]. Wall time is left out so
    /// rows are reproducible.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{},{},{:?},\"{}\"",
            self.seed,
            self.converged,
            self.r2,
            self.mse,
            self.node_count,
            self.evaluation_count,
            self.final_max_selection,
            self.expression.to_prefix()
        )
    }
}

fn training_r2(y: &[f64], yhat: &[f64]) -> f64 {
    if y.len() < 2 {
        return if mse(y, yhat) == 0.0 { 1.0 } else { 0.0 };
    }
    match r_squared(y, yhat) {
        Ok(r) => r.score_or(mse(y, yhat) == 0.0),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// The full alternating schedule: train, extract, refine, score, rebuild.
pub fn alternating_fit(data: &Dataset, hyper: &Hyperparams, seed: u64) -> Result<FitReport> {
    alternating_fit_with(data, hyper, seed, &EvalPolicy::default())
}

pub fn alternating_fit_with(
    data: &Dataset,
    hyper: &Hyperparams,
    seed: u64,
    policy: &EvalPolicy,
) -> Result<FitReport> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let (x, y) = (&data.x, &data.y[..]);
    let k = data.num_vars();
    let c = hyper.c;
    let mut net = MetaNetwork::init(
        k,
        InitSpec {
            depth: hyper.init_depth,
        },
        derive_seed(seed, 0),
    )?;

    let mut best: Option<(f64, f64, Expression, ExtractionTrace)> = None;
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut converged = false;
    let mut stale = 0;
    let mut final_max_selection = mean_max_selection(&net, c);

    for outer in 0..hyper.max_outer_iters {
        for _ in 0..hyper.rounds_per_extraction {
            optimize_group(
                &mut net,
                Phase::WB,
                hyper.n_wb,
                hyper.alpha,
                x,
                y,
                hyper.lambda,
                c,
                policy,
            )?;
            optimize_group(
                &mut net,
                Phase::ZD,
                hyper.n_dz,
                hyper.alpha,
                x,
                y,
                hyper.lambda,
                c,
                policy,
            )?;
        }
        let terms = loss(&net, x, y, hyper.lambda, c, policy)?;
        trace.push(LossRecord {
            outer_iter: outer,
            loss: terms.total,
            mse: terms.mse,
            entropy: terms.entropy,
        });
        final_max_selection = mean_max_selection(&net, c);

        let (extracted, extraction) = extract_expression(&net, x, policy, c)?;
        evaluations += 1;
        let refined = refine_constants(&extracted, x, y, hyper.refine_iters, hyper.alpha, policy);
        let yhat = refined.eval_batch(x, policy)?;
        let r2 = training_r2(y, &yhat);
        let fit_mse = mse(y, &yhat);
        let (better, progress) = match &best {
            None => (true, true),
            Some((br2, _, be, _)) => (
                r2 > *br2 || (r2 == *br2 && refined.node_count() < be.node_count()),
                1.0 - r2 < (1.0 - br2) * (1.0 - MIN_PROGRESS),
            ),
        };
        if better {
            best = Some((r2, fit_mse, refined.clone(), extraction));
        }
        if progress {
            stale = 0;
        } else {
            stale += 1;
        }
        if r2 > hyper.r2_threshold {
            converged = true;
            break;
        }
        if start.elapsed().as_secs_f64() > hyper.time_budget_s {
            break;
        }
        let next_seed = derive_seed(seed, outer as u64 + 1);
        net = if hyper.restart_patience > 0 && stale >= hyper.restart_patience {
            stale = 0;
            MetaNetwork::init(
                k,
                InitSpec {
                    depth: hyper.init_depth,
                },
                next_seed,
            )?
        } else {
            rebuild_network(&refined, k, next_seed)?
        };
    }

    let (r2, fit_mse, expression, extraction) = best.expect("at least one extraction");
    Ok(FitReport {
        node_count: expression.node_count(),
        expression,
        r2,
        mse: fit_mse,
        evaluation_count: evaluations,
        loss_trace: trace,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
        converged,
        final_max_selection,
        extraction_trace: Some(extraction),
    })
}
