//! Turning a trained network into an expression, and an expression back into
//! a network (the completion structure).
//!
//! Internal nodes collapse to the library symbol at `argmax(z)`. Leaves pick
//! their two most probable variables and become whichever candidate, passed
//! through the leaf's own affine, has the batch mean closest to the leaf's
//! batch-mean output, so a leaf may grow into an operator. Rebuilding gives
//! every internal operator exactly two children again.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{mean, Matrix};
use crate::error::{Error, Result};
use crate::expr::{Expression, Node};
use crate::network::{
    argmax, random_logits, softmax, MetaNetwork, NetNode, PanguNode, VariableNode,
};
use crate::ops::{self as pops, EvalPolicy};
use crate::symbol::{Symbol, SymbolLibrary};

/// Logit lead given to the current symbol when a network is rebuilt.
pub const WARM_START_MARGIN: f64 = 3.0;

/// Logit lead used when forcing one-hot selections. Large enough that the
/// losing softmax weights underflow to exactly zero, so no clamped `exp`
/// candidate (up to `e^50`) can leak into the forward pass.
pub const SATURATION_MARGIN: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionKind {
    PanguArgmax,
    LeafTop2Closest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeDecision {
    pub node_id: usize,
    pub kind: DecisionKind,
    pub symbol: String,
    /// Selected variable pair `(i_l, i_r)`, 0-based; leaves only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    /// `|w * mean(candidate) + b - v|` per library slot; leaves only.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub distances: Vec<f64>,
    /// Set when an ancestor's choice cut this node out of the expression.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub pruned: bool,
}

/// Per-node record of extraction decisions, in network node order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExtractionTrace {
    pub decisions: Vec<NodeDecision>,
}

/// Indices of the two largest entries (largest first, lowest index on ties).
/// With a single entry both indices are 0.
pub fn argmax2(d: &[f64]) -> Result<(usize, usize)> {
    if d.is_empty() {
        return Err(Error::Config("argmax2 of an empty vector".into()));
    }
    if d.len() == 1 {
        return Ok((0, 0));
    }
    let first = argmax(d);
    let mut second = if first == 0 { 1 } else { 0 };
    for (i, &v) in d.iter().enumerate() {
        if i != first && v > d[second] {
            second = i;
        }
    }
    Ok((first, second))
}

/// Extracts a plain expression from the network using `probe` as the batch
/// over which leaf outputs and candidate values are averaged.
pub fn extract_expression(
    net: &MetaNetwork,
    probe: &Matrix,
    policy: &EvalPolicy,
    c: f64,
) -> Result<(Expression, ExtractionTrace)> {
    let k = net.num_vars();
    if probe.cols() != k {
        return Err(Error::Dimension {
            expected: k,
            actual: probe.cols(),
        });
    }
    let lib = net.library();
    let columns: Vec<Vec<f64>> = (0..k).map(|j| probe.column(j)).collect();
    let var_means: Vec<f64> = columns.iter().map(|col| mean(col)).collect();
    let mut decisions = vec![None; net.len()];
    let root = extract_node(
        net,
        0,
        &lib,
        &columns,
        &var_means,
        policy,
        c,
        &mut decisions,
    );
    let decisions = decisions
        .into_iter()
        .enumerate()
        .map(|(id, d)| {
            d.unwrap_or_else(|| {
                let mut d = match &net.nodes()[id] {
                    NetNode::Pangu(p) => pangu_decision(id, p, &lib),
                    NetNode::Variable(v) => {
                        extract_leaf(id, v, &lib, &columns, &var_means, policy, c).1
                    }
                };
                d.pruned = true;
                d
            })
        })
        .collect();
    let trace = ExtractionTrace { decisions };
    Ok((Expression::new(root, k)?, trace))
}

#[allow(clippy::too_many_arguments)]
fn extract_node(
    net: &MetaNetwork,
    id: usize,
    lib: &SymbolLibrary,
    columns: &[Vec<f64>],
    var_means: &[f64],
    policy: &EvalPolicy,
    c: f64,
    decisions: &mut [Option<NodeDecision>],
) -> Node {
    match &net.nodes()[id] {
        NetNode::Pangu(p) => {
            let symbol = lib
                .symbol(argmax(&p.z))
                .expect("logit length matches library");
            decisions[id] = Some(pangu_decision(id, p, lib));
            let mut recurse =
                |child| extract_node(net, child, lib, columns, var_means, policy, c, decisions);
            let node = match symbol.arity() {
                0 => Node::var(match symbol {
                    Symbol::Var(i) => i,
                    _ => unreachable!(),
                }),
                1 => Node::unary(symbol, recurse(p.left)),
                _ => {
                    let l = recurse(p.left);
                    let r = recurse(p.right);
                    Node::binary(symbol, l, r)
                }
            };
            node.with_affine(p.w, p.b)
        }
        NetNode::Variable(v) => {
            let (node, decision) = extract_leaf(id, v, lib, columns, var_means, policy, c);
            decisions[id] = Some(decision);
            node
        }
    }
}

fn pangu_decision(id: usize, p: &PanguNode, lib: &SymbolLibrary) -> NodeDecision {
    let symbol = lib
        .symbol(argmax(&p.z))
        .expect("logit length matches library");
    NodeDecision {
        node_id: id,
        kind: DecisionKind::PanguArgmax,
        symbol: symbol.token(),
        pair: None,
        distances: Vec::new(),
        pruned: false,
    }
}

fn extract_leaf(
    id: usize,
    v: &VariableNode,
    lib: &SymbolLibrary,
    columns: &[Vec<f64>],
    var_means: &[f64],
    policy: &EvalPolicy,
    c: f64,
) -> (Node, NodeDecision) {
    let probs = softmax(&v.d, c);
    let m = columns[0].len();
    let target = mean(
        &(0..m)
            .map(|s| {
                let mix: f64 = probs.iter().zip(columns).map(|(p, col)| p * col[s]).sum();
                pops::affine(v.w, mix, v.b)
            })
            .collect::<Vec<_>>(),
    );
    let (il, ir) = argmax2(&probs).expect("k >= 1");
    let (xl, xr) = (&columns[il], &columns[ir]);
    let distances: Vec<f64> = lib
        .iter()
        .map(|sym| {
            let cand_mean = match sym {
                Symbol::Var(j) => var_means[j],
                s if s.is_binary() => mean(
                    &(0..m)
                        .map(|i| pops::binary(s, xl[i], xr[i], policy))
                        .collect::<Vec<_>>(),
                ),
                s => mean(
                    &xl.iter()
                        .map(|&a| pops::unary(s, a, policy))
                        .collect::<Vec<_>>(),
                ),
            };
            // scored as the node would output it once (w, b) is attached
            let d = (pops::affine(v.w, cand_mean, v.b) - target).abs();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        })
        .collect();
    let mut best = 0;
    for (i, &d) in distances.iter().enumerate() {
        if d < distances[best] {
            best = i;
        }
    }
    let symbol = lib.symbol(best).expect("index in library");
    let node = match symbol.arity() {
        0 => Node::var(match symbol {
            Symbol::Var(j) => j,
            _ => unreachable!(),
        }),
        1 => Node::unary(symbol, Node::var(il)),
        _ => Node::binary(symbol, Node::var(il), Node::var(ir)),
    }
    .with_affine(v.w, v.b);
    let decision = NodeDecision {
        node_id: id,
        kind: DecisionKind::LeafTop2Closest,
        symbol: symbol.token(),
        pair: Some((il, ir)),
        distances,
        pruned: false,
    };
    (node, decision)
}

/// Logits drawn near zero with `slot` lifted `WARM_START_MARGIN` above the rest.
fn biased_logits(len: usize, slot: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut z = random_logits(len, rng);
    let others = z
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != slot)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    z[slot] = if others.is_finite() { others } else { 0.0 } + WARM_START_MARGIN;
    z
}

fn fresh_leaf(k: usize, rng: &mut ChaCha8Rng) -> NetNode {
    NetNode::Variable(VariableNode {
        w: 1.0,
        b: 0.0,
        d: random_logits(k, rng),
    })
}

/// Builds the completion structure for `expr`: operators become internal nodes
/// biased toward their symbol, variables become leaves biased toward their
/// index, and unary operators receive a fresh second leaf.
pub fn rebuild_network(expr: &Expression, k: usize, seed: u64) -> Result<MetaNetwork> {
    if expr.num_vars() != k {
        return Err(Error::Dimension {
            expected: k,
            actual: expr.num_vars(),
        });
    }
    let lib = SymbolLibrary::new(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(expr.node_count() * 2);

    fn build(
        n: &Node,
        lib: &SymbolLibrary,
        nodes: &mut Vec<NetNode>,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = nodes.len();
        let k = lib.num_vars();
        match n.symbol() {
            Symbol::Var(i) => {
                nodes.push(NetNode::Variable(VariableNode {
                    w: n.w(),
                    b: n.b(),
                    d: biased_logits(k, i, rng),
                }));
            }
            sym => {
                let slot = lib.index_of(sym).expect("operator in library");
                nodes.push(NetNode::Pangu(PanguNode {
                    w: n.w(),
                    b: n.b(),
                    z: biased_logits(lib.len(), slot, rng),
                    left: 0,
                    right: 0,
                }));
                let left = build(&n.children()[0], lib, nodes, rng);
                let right = if sym.is_binary() {
                    build(&n.children()[1], lib, nodes, rng)
                } else {
                    nodes.push(fresh_leaf(k, rng));
                    nodes.len() - 1
                };
                if let NetNode::Pangu(p) = &mut nodes[id] {
                    p.left = left;
                    p.right = right;
                }
            }
        }
        id
    }

    build(expr.root(), &lib, &mut nodes, &mut rng);
    MetaNetwork::from_nodes(nodes, k, seed)
}

/// Saturates every selection, extracts, and returns the largest absolute
/// disagreement between network and expression over the batch.
pub fn saturate_and_check(
    net: &MetaNetwork,
    x: &Matrix,
    policy: &EvalPolicy,
    c: f64,
) -> Result<f64> {
    let mut sat = net.snapshot();
    sat.saturate(SATURATION_MARGIN);
    let (yn, _) = sat.forward(x, policy, c)?;
    let (expr, _) = extract_expression(&sat, x, policy, c)?;
    let ye = expr.eval_batch(x, policy)?;
    Ok(yn
        .iter()
        .zip(&ye)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
