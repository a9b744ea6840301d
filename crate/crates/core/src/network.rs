//! The differentiable tree network.
//!
//! Internal nodes mix every library candidate of their two children's
//! outputs through a softmax over selection logits `z`; leaves mix the raw
//! input variables through a softmax over `d`. Every node then applies its own
//! affine pair `w * s + b`. Nodes live in a prefix-ordered arena, so children
//! always have larger indices than their parent and the root is node 0.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::ops::{self as pops, EvalPolicy, VALUE_BOUND};
use crate::symbol::{SymbolLibrary, OPERATOR_COUNT};

/// Standard deviation of freshly drawn selection logits.
pub const LOGIT_INIT_STD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitSpec {
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanguNode {
    pub w: f64,
    pub b: f64,
    pub z: Vec<f64>,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableNode {
    pub w: f64,
    pub b: f64,
    pub d: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NetNode {
    Pangu(PanguNode),
    Variable(VariableNode),
}

impl NetNode {
    pub fn w(&self) -> f64 {
        match self {
            NetNode::Pangu(p) => p.w,
            NetNode::Variable(v) => v.w,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            NetNode::Pangu(p) => p.b,
            NetNode::Variable(v) => v.b,
        }
    }

    pub fn logits(&self) -> &[f64] {
        match self {
            NetNode::Pangu(p) => &p.z,
            NetNode::Variable(v) => &v.d,
        }
    }

    pub fn logits_mut(&mut self) -> &mut Vec<f64> {
        match self {
            NetNode::Pangu(p) => &mut p.z,
            NetNode::Variable(v) => &mut v.d,
        }
    }

    fn affine_mut(&mut self) -> (&mut f64, &mut f64) {
        match self {
            NetNode::Pangu(p) => (&mut p.w, &mut p.b),
            NetNode::Variable(v) => (&mut v.w, &mut v.b),
        }
    }

    pub fn is_pangu(&self) -> bool {
        matches!(self, NetNode::Pangu(_))
    }
}

/// One of the four parameter groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamGroup {
    W,
    B,
    Z,
    D,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 4] = [ParamGroup::W, ParamGroup::B, ParamGroup::Z, ParamGroup::D];
}

/// `softmax(c * (v - max v))`.
pub fn softmax(logits: &[f64], c: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = logits.iter().map(|&v| (c * (v - max)).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= sum);
    e
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaNetwork {
    nodes: Vec<NetNode>,
    k: usize,
    seed: u64,
}

impl MetaNetwork {
    /// Full binary tree of the given depth with random near-uniform logits.
    pub fn init(k: usize, init: InitSpec, seed: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if init.depth < 1 {
            return Err(Error::Config("initial depth must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = SymbolLibrary::new(k).len();
        let mut nodes = Vec::new();
        fn grow(
            nodes: &mut Vec<NetNode>,
            depth: usize,
            n: usize,
            k: usize,
            rng: &mut ChaCha8Rng,
        ) -> usize {
            let id = nodes.len();
            if depth == 0 {
                nodes.push(NetNode::Variable(VariableNode {
                    w: 1.0,
                    b: 0.0,
                    d: random_logits(k, rng),
                }));
                return id;
            }
            nodes.push(NetNode::Pangu(PanguNode {
                w: 1.0,
                b: 0.0,
                z: random_logits(n, rng),
                left: 0,
                right: 0,
            }));
            let left = grow(nodes, depth - 1, n, k, rng);
            let right = grow(nodes, depth - 1, n, k, rng);
            if let NetNode::Pangu(p) = &mut nodes[id] {
                p.left = left;
                p.right = right;
            }
            id
        }
        grow(&mut nodes, init.depth, n, k, &mut rng);
        Ok(MetaNetwork { nodes, k, seed })
    }

    /// Assembles a network from a prefix-ordered arena, validating topology.
    pub fn from_nodes(nodes: Vec<NetNode>, k: usize, seed: u64) -> Result<Self> {
        let n = SymbolLibrary::new(k).len();
        if nodes.is_empty() || k < 1 {
            return Err(Error::Config(
                "network needs at least one node and k >= 1".into(),
            ));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match node {
                NetNode::Pangu(p) => {
                    if p.z.len() != n {
                        return Err(Error::Dimension {
                            expected: n,
                            actual: p.z.len(),
                        });
                    }
                    for c in [p.left, p.right] {
                        if c <= i || c >= nodes.len() {
                            return Err(Error::Config(format!("bad child index {c} at node {i}")));
                        }
                        parents[c] += 1;
                    }
                }
                NetNode::Variable(v) => {
                    if v.d.len() != k {
                        return Err(Error::Dimension {
                            expected: k,
                            actual: v.d.len(),
                        });
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&c| c != 1) {
            return Err(Error::Config("arena is not a tree rooted at node 0".into()));
        }
        Ok(MetaNetwork { nodes, k, seed })
    }

    pub fn num_vars(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn library(&self) -> SymbolLibrary {
        SymbolLibrary::new(self.k)
    }

    pub fn nodes(&self) -> &[NetNode] {
        &self.nodes
    }

    pub fn node_mut(&mut self, id: usize) -> &mut NetNode {
        &mut self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn pangu_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_pangu()).count()
    }

    pub fn leaf_count(&self) -> usize {
        self.len() - self.pangu_count()
    }

    /// Deep copy.
    pub fn snapshot(&self) -> MetaNetwork {
        self.clone()
    }

    /// Number of scalar parameters in a group.
    pub fn group_len(&self, group: ParamGroup) -> usize {
        match group {
            ParamGroup::W | ParamGroup::B => self.len(),
            ParamGroup::Z => self
                .nodes
                .iter()
                .filter(|n| n.is_pangu())
                .map(|n| n.logits().len())
                .sum(),
            ParamGroup::D => self
                .nodes
                .iter()
                .filter(|n| !n.is_pangu())
                .map(|n| n.logits().len())
                .sum(),
        }
    }

    /// Flattened view of one parameter group, in node order.
    pub fn params(&self, group: ParamGroup) -> Vec<f64> {
        match group {
            ParamGroup::W => self.nodes.iter().map(NetNode::w).collect(),
            ParamGroup::B => self.nodes.iter().map(NetNode::b).collect(),
            ParamGroup::Z | ParamGroup::D => {
                let want_pangu = group == ParamGroup::Z;
                self.nodes
                    .iter()
                    .filter(|n| n.is_pangu() == want_pangu)
                    .flat_map(|n| n.logits().iter().copied())
                    .collect()
            }
        }
    }

    /// Overwrites one parameter group from a flattened view.
    pub fn set_params(&mut self, group: ParamGroup, values: &[f64]) -> Result<()> {
        let expected = self.group_len(group);
        if values.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: values.len(),
            });
        }
        let mut it = values.iter().copied();
        for node in &mut self.nodes {
            match group {
                ParamGroup::W => *node.affine_mut().0 = it.next().unwrap(),
                ParamGroup::B => *node.affine_mut().1 = it.next().unwrap(),
                ParamGroup::Z | ParamGroup::D => {
                    if node.is_pangu() == (group == ParamGroup::Z) {
                        for v in node.logits_mut().iter_mut() {
                            *v = it.next().unwrap();
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Softmax weights of every node (E for internal nodes, leaf variable weights otherwise).
    pub fn selection_weights(&self, c: f64) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| softmax(n.logits(), c)).collect()
    }

    /// Sets every logit vector to `margin` at its argmax and zero elsewhere.
    pub fn saturate(&mut self, margin: f64) {
        for node in &mut self.nodes {
            let z = node.logits_mut();
            let a = argmax(z);
            z.iter_mut()
                .enumerate()
                .for_each(|(i, v)| *v = if i == a { margin } else { 0.0 });
        }
    }

    pub fn forward(
        &self,
        x: &Matrix,
        policy: &EvalPolicy,
        c: f64,
    ) -> Result<(Vec<f64>, ForwardTape)> {
        if x.cols() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                actual: x.cols(),
            });
        }
        let m = x.rows();
        let n = self.library().len();
        let mut tape = ForwardTape {
            m,
            c,
            policy: *policy,
            x: x.clone(),
            nodes: vec![NodeTape::default(); self.len()],
        };
        for id in (0..self.len()).rev() {
            let node_tape = match &self.nodes[id] {
                NetNode::Variable(v) => {
                    let p = softmax(&v.d, c);
                    let pre: Vec<f64> = x
                        .iter_rows()
                        .map(|r| r.iter().zip(&p).map(|(a, b)| a * b).sum())
                        .collect();
                    let out = pre.iter().map(|&s| pops::affine(v.w, s, v.b)).collect();
                    NodeTape {
                        weights: p,
                        pre,
                        out,
                        candidates: Vec::new(),
                    }
                }
                NetNode::Pangu(pg) => {
                    let e = softmax(&pg.z, c);
                    let xl = &tape.nodes[pg.left].out;
                    let xr = &tape.nodes[pg.right].out;
                    let mut cand = vec![0.0; n * m];
                    for s in 0..m {
                        let (a, b) = (xl[s], xr[s]);
                        for (slot, sym) in crate::symbol::Symbol::OPERATORS.iter().enumerate() {
                            cand[slot * m + s] = if sym.is_binary() {
                                pops::binary(*sym, a, b, policy)
                            } else {
                                pops::unary(*sym, a, policy)
                            };
                        }
                        for j in 0..self.k {
                            cand[(OPERATOR_COUNT + j) * m + s] = x.get(s, j);
                        }
                    }
                    let pre: Vec<f64> = (0..m)
                        .map(|s| (0..n).map(|i| e[i] * cand[i * m + s]).sum())
                        .collect();
                    let out = pre.iter().map(|&v| pops::affine(pg.w, v, pg.b)).collect();
                    NodeTape {
                        weights: e,
                        pre,
                        out,
                        candidates: cand,
                    }
                }
            };
            tape.nodes[id] = node_tape;
        }
        Ok((tape.nodes[0].out.clone(), tape))
    }

    /// Reverse-mode gradients of `MSE + entropy` over all four parameter groups.
    pub fn backward(&self, tape: &ForwardTape, y: &[f64], lambda: f64) -> Result<Gradients> {
        if tape.nodes.len() != self.len() {
            return Err(Error::TapeMismatch);
        }
        if y.len() != tape.m {
            return Err(Error::Dimension {
                expected: tape.m,
                actual: y.len(),
            });
        }
        let m = tape.m;
        let c = tape.c;
        let p = &tape.policy;
        let pangu_count = self.pangu_count();
        let mut grads = Gradients {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeGrad {
                    w: 0.0,
                    b: 0.0,
                    logits: vec![0.0; n.logits().len()],
                })
                .collect(),
        };
        let mut upstream: Vec<Vec<f64>> = vec![Vec::new(); self.len()];
        upstream[0] = tape.nodes[0]
            .out
            .iter()
            .zip(y)
            .map(|(yh, t)| 2.0 * (yh - t) / m as f64)
            .collect();

        for id in 0..self.len() {
            let node = &self.nodes[id];
            let nt = &tape.nodes[id];
            if nt.weights.len() != node.logits().len() || nt.out.len() != m {
                return Err(Error::TapeMismatch);
            }
            let mut g = std::mem::take(&mut upstream[id]);
            let (w, b) = (node.w(), node.b());
            for (s, gs) in g.iter_mut().enumerate() {
                if (w * nt.pre[s] + b).abs() > VALUE_BOUND {
                    *gs = 0.0;
                }
            }
            let grad = &mut grads.nodes[id];
            grad.w = g.iter().zip(&nt.pre).map(|(a, b)| a * b).sum();
            grad.b = g.iter().sum();
            let weights = &nt.weights;
            match node {
                NetNode::Variable(_) => {
                    for (j, dj) in grad.logits.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for s in 0..m {
                            acc += g[s] * (tape.x.get(s, j) - nt.pre[s]);
                        }
                        *dj = w * c * weights[j] * acc;
                    }
                }
                NetNode::Pangu(pg) => {
                    let n = weights.len();
                    for (i, di) in grad.logits.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for s in 0..m {
                            acc += g[s] * (nt.candidates[i * m + s] - nt.pre[s]);
                        }
                        *di = w * c * weights[i] * acc;
                    }
                    if pangu_count > 0 && lambda != 0.0 {
                        // d/dz of -lambda/M * log(max E)
                        let a = argmax(weights);
                        let scale = -lambda / pangu_count as f64 * c;
                        for (i, di) in grad.logits.iter_mut().enumerate() {
                            let delta = if i == a { 1.0 } else { 0.0 };
                            *di += scale * (delta - weights[i]);
                        }
                    }
                    let xl = &tape.nodes[pg.left].out;
                    let xr = &tape.nodes[pg.right].out;
                    let mut gl = vec![0.0; m];
                    let mut gr = vec![0.0; m];
                    for s in 0..m {
                        if g[s] == 0.0 {
                            continue;
                        }
                        let (a, bb) = (xl[s], xr[s]);
                        let mut dl = 0.0;
                        let mut dr = 0.0;
                        for (slot, sym) in crate::symbol::Symbol::OPERATORS.iter().enumerate() {
                            if sym.is_binary() {
                                let (_, da, db) = pops::binary_grad(*sym, a, bb, p);
                                dl += weights[slot] * da;
                                dr += weights[slot] * db;
                            } else {
                                let (_, da) = pops::unary_grad(*sym, a, p);
                                dl += weights[slot] * da;
                            }
                        }
                        debug_assert!(n >= OPERATOR_COUNT);
                        gl[s] = g[s] * w * dl;
                        gr[s] = g[s] * w * dr;
                    }
                    upstream[pg.left] = gl;
                    upstream[pg.right] = gr;
                }
            }
        }
        Ok(grads)
    }

    /// Applies `theta -= alpha * grad` to the listed groups only.
    pub fn apply_gradients(&mut self, grads: &Gradients, groups: &[ParamGroup], alpha: f64) {
        for (node, g) in self.nodes.iter_mut().zip(&grads.nodes) {
            let is_pangu = node.is_pangu();
            for group in groups {
                match group {
                    ParamGroup::W => *node.affine_mut().0 -= alpha * g.w,
                    ParamGroup::B => *node.affine_mut().1 -= alpha * g.b,
                    ParamGroup::Z | ParamGroup::D => {
                        if is_pangu == (*group == ParamGroup::Z) {
                            for (v, d) in node.logits_mut().iter_mut().zip(&g.logits) {
                                *v -= alpha * d;
                            }
                        }
                    }
                }
            }
        }
    }

    /// One line per node, prefix order, with raw logits. Debugging aid only.
    pub fn dump(&self) -> String {
        let lib = self.library();
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let top = lib
                .symbol(match node {
                    NetNode::Pangu(p) => argmax(&p.z),
                    NetNode::Variable(v) => OPERATOR_COUNT + argmax(&v.d),
                })
                .expect("argmax within library");
            let kind = if node.is_pangu() { "pangu" } else { "var" };
            let logits: Vec<String> = node.logits().iter().map(|v| format!("{v:.6}")).collect();
            let _ = write!(
                out,
                "{id} {kind} top={top} affine {:?} {:?} [{}]",
                node.w(),
                node.b(),
                logits.join(" ")
            );
            if let NetNode::Pangu(p) = node {
                let _ = write!(out, " children {} {}", p.left, p.right);
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn random_logits(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, LOGIT_INIT_STD).expect("valid normal");
    (0..len).map(|_| normal.sample(rng)).collect()
}

#[derive(Clone, Debug, Default)]
struct NodeTape {
    weights: Vec<f64>,
    pre: Vec<f64>,
    out: Vec<f64>,
    candidates: Vec<f64>,
}

/// Cached activations of one forward pass, consumed by `backward`.
#[derive(Clone, Debug)]
pub struct ForwardTape {
    m: usize,
    c: f64,
    policy: EvalPolicy,
    x: Matrix,
    nodes: Vec<NodeTape>,
}

impl ForwardTape {
    pub fn batch_size(&self) -> usize {
        self.m
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Output of node `id` for every sample.
    pub fn output(&self, id: usize) -> &[f64] {
        &self.nodes[id].out
    }

    /// Softmax weights used by node `id`.
    pub fn weights(&self, id: usize) -> &[f64] {
        &self.nodes[id].weights
    }

    /// Candidate outputs of internal node `id`, laid out candidate-major.
    pub fn candidates(&self, id: usize) -> &[f64] {
        &self.nodes[id].candidates
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeGrad {
    pub w: f64,
    pub b: f64,
    pub logits: Vec<f64>,
}

/// Gradients laid out exactly like the network's nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub nodes: Vec<NodeGrad>,
}

impl Gradients {
    /// Flattened gradient of one group, in the same order as `MetaNetwork::params`.
    pub fn flatten(&self, net: &MetaNetwork, group: ParamGroup) -> Vec<f64> {
        match group {
            ParamGroup::W => self.nodes.iter().map(|g| g.w).collect(),
            ParamGroup::B => self.nodes.iter().map(|g| g.b).collect(),
            ParamGroup::Z | ParamGroup::D => {
                let want_pangu = group == ParamGroup::Z;
                net.nodes
                    .iter()
                    .zip(&self.nodes)
                    .filter(|(n, _)| n.is_pangu() == want_pangu)
                    .flat_map(|(_, g)| g.logits.iter().copied())
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn policy() -> EvalPolicy {
        EvalPolicy::default()
    }

    #[test]
    fn init_shapes() {
        let net = MetaNetwork::init(1, InitSpec { depth: 1 }, 7).unwrap();
        assert_eq!(net.pangu_count(), 1);
        assert_eq!(net.leaf_count(), 2);

        let net = MetaNetwork::init(3, InitSpec { depth: 2 }, 7).unwrap();
        assert_eq!(net.pangu_count(), 3);
        assert_eq!(net.leaf_count(), 4);
        for node in net.nodes() {
            match node {
                NetNode::Pangu(p) => assert_eq!(p.z.len(), 12),
                NetNode::Variable(v) => assert_eq!(v.d.len(), 3),
            }
            assert_eq!((node.w(), node.b()), (1.0, 0.0));
        }
        assert!(MetaNetwork::init(0, InitSpec { depth: 1 }, 1).is_err());
        assert!(MetaNetwork::init(1, InitSpec { depth: 0 }, 1).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let a = MetaNetwork::init(2, InitSpec { depth: 3 }, 42).unwrap();
        let b = MetaNetwork::init(2, InitSpec { depth: 3 }, 42).unwrap();
        assert_eq!(a, b);
        let c = MetaNetwork::init(2, InitSpec { depth: 3 }, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_leaf_forward() {
        let net = MetaNetwork::from_nodes(
            vec![NetNode::Variable(VariableNode {
                w: 2.0,
                b: 1.0,
                d: vec![0.3],
            })],
            1,
            0,
        )
        .unwrap();
        let x = Matrix::from_rows(&[[3.0]]).unwrap();
        let (y, _) = net.forward(&x, &policy(), 1.0).unwrap();
        assert_eq!(y, vec![7.0]);
    }

    #[test]
    fn saturated_sin_node() {
        // two leaves over k = 1 both output x; sin slot dominates by 40
        let leaf = || {
            NetNode::Variable(VariableNode {
                w: 1.0,
                b: 0.0,
                d: vec![0.0],
            })
        };
        let mut z = vec![0.0; 10];
        z[4] = 40.0;
        let net = MetaNetwork::from_nodes(
            vec![
                NetNode::Pangu(PanguNode {
                    w: 1.0,
                    b: 0.0,
                    z,
                    left: 1,
                    right: 2,
                }),
                leaf(),
                leaf(),
            ],
            1,
            0,
        )
        .unwrap();
        let x = Matrix::from_rows(&[[FRAC_PI_2]]).unwrap();
        let (y, _) = net.forward(&x, &policy(), 1.0).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-6, "{}", y[0]);
    }

    #[test]
    fn batch_shapes() {
        let net = MetaNetwork::init(2, InitSpec { depth: 2 }, 3).unwrap();
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.6], [0.7, 0.8], [0.9, 1.0]])
            .unwrap();
        let (y, tape) = net.forward(&x, &policy(), 1.0).unwrap();
        assert_eq!(y.len(), 5);
        assert_eq!(tape.batch_size(), 5);
        for id in 0..net.len() {
            assert_eq!(tape.output(id).len(), 5);
        }
        assert!(net.forward(&Matrix::zeros(5, 3), &policy(), 1.0).is_err());
    }

    #[test]
    fn shift_invariance_of_logits() {
        let net = MetaNetwork::init(2, InitSpec { depth: 3 }, 11).unwrap();
        let x = Matrix::from_rows(&[[0.4, -0.2], [1.3, 0.7], [-0.8, 0.1]]).unwrap();
        let (y0, _) = net.forward(&x, &policy(), 1.0).unwrap();
        let mut shifted = net.snapshot();
        for g in [ParamGroup::Z, ParamGroup::D] {
            let v: Vec<f64> = shifted.params(g).iter().map(|v| v + 5.0).collect();
            shifted.set_params(g, &v).unwrap();
        }
        let (y1, _) = shifted.forward(&x, &policy(), 1.0).unwrap();
        for (a, b) in y0.iter().zip(&y1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_fit_has_zero_affine_gradients() {
        let net = MetaNetwork::init(1, InitSpec { depth: 2 }, 5).unwrap();
        let x = Matrix::from_rows(&[[0.5], [0.9], [-0.3]]).unwrap();
        let (y, tape) = net.forward(&x, &policy(), 1.0).unwrap();
        let g = net.backward(&tape, &y, 0.0).unwrap();
        for n in &g.nodes {
            assert_eq!((n.w, n.b), (0.0, 0.0));
        }
    }

    #[test]
    fn entropy_term_vanishes_with_zero_lambda() {
        let mut net = MetaNetwork::init(1, InitSpec { depth: 1 }, 5).unwrap();
        let uniform = vec![0.0; net.group_len(ParamGroup::Z)];
        net.set_params(ParamGroup::Z, &uniform).unwrap();
        let x = Matrix::from_rows(&[[0.5], [0.9]]).unwrap();
        let (y, tape) = net.forward(&x, &policy(), 1.0).unwrap();
        let g0 = net.backward(&tape, &y, 0.0).unwrap();
        assert!(g0.flatten(&net, ParamGroup::Z).iter().all(|&v| v == 0.0));
        let g1 = net.backward(&tape, &y, 0.2).unwrap();
        assert!(g1.flatten(&net, ParamGroup::Z).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn snapshot_is_independent() {
        let mut net = MetaNetwork::init(2, InitSpec { depth: 2 }, 9).unwrap();
        let copy = net.snapshot();
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.3, -0.4]]).unwrap();
        assert_eq!(
            net.forward(&x, &policy(), 1.0).unwrap().0,
            copy.forward(&x, &policy(), 1.0).unwrap().0
        );
        net.set_params(ParamGroup::W, &vec![3.0; net.len()])
            .unwrap();
        assert!(copy.params(ParamGroup::W).iter().all(|&w| w == 1.0));
    }

    #[test]
    fn tape_mismatch_detected() {
        let a = MetaNetwork::init(1, InitSpec { depth: 1 }, 1).unwrap();
        let b = MetaNetwork::init(1, InitSpec { depth: 2 }, 1).unwrap();
        let x = Matrix::from_rows(&[[0.5]]).unwrap();
        let (y, tape) = a.forward(&x, &policy(), 1.0).unwrap();
        assert!(matches!(
            b.backward(&tape, &y, 0.0),
            Err(Error::TapeMismatch)
        ));
    }

    #[test]
    fn from_nodes_rejects_bad_arenas() {
        let leaf = NetNode::Variable(VariableNode {
            w: 1.0,
            b: 0.0,
            d: vec![0.0],
        });
        let shared = NetNode::Pangu(PanguNode {
            w: 1.0,
            b: 0.0,
            z: vec![0.0; 10],
            left: 1,
            right: 1,
        });
        assert!(MetaNetwork::from_nodes(vec![shared, leaf.clone()], 1, 0).is_err());
        assert!(MetaNetwork::from_nodes(vec![leaf.clone(), leaf], 1, 0).is_err());
    }
}
