//! Test-only helpers shared by the core integration tests and the CLI
//! acceptance suite: an exhaustive edit-distance oracle, tree enumeration,
//! random networks, and a finite-difference gradient checker.
#![allow(dead_code)]

use std::collections::HashMap;

use metasymnet::network::{NetNode, PanguNode, VariableNode};
use metasymnet::training::loss;
use metasymnet::{EvalPolicy, Matrix, MetaNetwork, Node, ParamGroup, Symbol, SymbolLibrary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain labelled tree for the oracle; labels are masked tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn from_node(n: &Node) -> Tree {
        let label = if n.is_constant() {
            "CONST".to_string()
        } else {
            n.symbol().token()
        };
        Tree {
            label,
            children: n.children().iter().map(Tree::from_node).collect(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

fn forest_size(f: &[Tree]) -> usize {
    f.iter().map(Tree::size).sum()
}

/// Ordered forest edit distance by the textbook recursion on rightmost roots,
/// memoized on the forest pair. Exponential-ish; meant for tiny trees only.
pub fn oracle_forest(
    f: &[Tree],
    g: &[Tree],
    memo: &mut HashMap<(Vec<Tree>, Vec<Tree>), usize>,
) -> usize {
    if f.is_empty() {
        return forest_size(g);
    }
    if g.is_empty() {
        return forest_size(f);
    }
    let key = (f.to_vec(), g.to_vec());
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let v = f.last().unwrap();
    let w = g.last().unwrap();
    // delete v: its children take its place
    let mut f_del: Vec<Tree> = f[..f.len() - 1].to_vec();
    f_del.extend(v.children.iter().cloned());
    let mut g_del: Vec<Tree> = g[..g.len() - 1].to_vec();
    g_del.extend(w.children.iter().cloned());
    let a = oracle_forest(&f_del, g, memo) + 1;
    let b = oracle_forest(f, &g_del, memo) + 1;
    let relabel = usize::from(v.label != w.label);
    let c = oracle_forest(&v.children, &w.children, memo)
        + oracle_forest(&f[..f.len() - 1], &g[..g.len() - 1], memo)
        + relabel;
    let d = a.min(b).min(c);
    memo.insert(key, d);
    d
}

pub fn oracle_ted(a: &Node, b: &Node) -> usize {
    let mut memo = HashMap::new();
    oracle_forest(&[Tree::from_node(a)], &[Tree::from_node(b)], &mut memo)
}

/// Every tree with `1..=max_nodes` nodes over `{+, sin, x1}`.
pub fn enumerate_trees(max_nodes: usize) -> Vec<Node> {
    let mut by_size: Vec<Vec<Node>> = vec![Vec::new(); max_nodes + 1];
    for n in 1..=max_nodes {
        let mut out = Vec::new();
        if n == 1 {
            out.push(Node::var(0));
        } else {
            for c in &by_size[n - 1] {
                out.push(Node::unary(Symbol::Sin, c.clone()));
            }
            for left in 1..n - 1 {
                let right = n - 1 - left;
                for l in &by_size[left] {
                    for r in &by_size[right] {
                        out.push(Node::binary(Symbol::Add, l.clone(), r.clone()));
                    }
                }
            }
        }
        by_size[n] = out;
    }
    by_size.into_iter().flatten().collect()
}

/// Random network of depth at most `max_depth` whose internal nodes always
/// have two children. Affine parameters and logits are drawn broadly so every
/// code path is exercised.
pub fn random_network(k: usize, max_depth: usize, seed: u64) -> MetaNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = SymbolLibrary::new(k).len();
    let mut nodes = Vec::new();
    fn grow(
        nodes: &mut Vec<NetNode>,
        depth: usize,
        top: bool,
        n: usize,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let id = nodes.len();
        let w = rng.random_range(0.5..1.5) * if rng.random_bool(0.2) { -1.0 } else { 1.0 };
        let b = rng.random_range(-0.5..0.5);
        let internal = depth > 0 && (top || rng.random_bool(0.7));
        if !internal {
            let d = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            nodes.push(NetNode::Variable(VariableNode { w, b, d }));
            return id;
        }
        let z = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        nodes.push(NetNode::Pangu(PanguNode {
            w,
            b,
            z,
            left: 0,
            right: 0,
        }));
        let left = grow(nodes, depth - 1, false, n, k, rng);
        let right = grow(nodes, depth - 1, false, n, k, rng);
        if let NetNode::Pangu(p) = &mut nodes[id] {
            p.left = left;
            p.right = right;
        }
        id
    }
    grow(&mut nodes, max_depth, max_depth > 0, n, k, &mut rng);
    MetaNetwork::from_nodes(nodes, k, seed).expect("well-formed random network")
}

pub fn random_batch(k: usize, m: usize, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    (Matrix::new(m, k, data).unwrap(), y)
}

#[derive(Clone, Debug)]
pub struct FdMismatch {
    pub group: ParamGroup,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares every analytic gradient entry against central differences of the
/// total loss. An entry passes when the relative error is below `rel_tol` or
/// the absolute error is below `abs_tol`.
pub fn finite_difference_mismatches(
    net: &MetaNetwork,
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Vec<FdMismatch> {
    let policy = EvalPolicy::default();
    let c = 1.0;
    let (_, tape) = net.forward(x, &policy, c).unwrap();
    let grads = net.backward(&tape, y, lambda).unwrap();
    let mut bad = Vec::new();
    for group in ParamGroup::ALL {
        let analytic = grads.flatten(net, group);
        let base = net.params(group);
        for i in 0..base.len() {
            let eval = |delta: f64| {
                let mut probe = net.clone();
                let mut p = base.clone();
                p[i] += delta;
                probe.set_params(group, &p).unwrap();
                loss(&probe, x, y, lambda, c, &policy).unwrap().total
            };
            // five-point central stencil; truncation error O(h^4)
            let numeric =
                (8.0 * (eval(h) - eval(-h)) - (eval(2.0 * h) - eval(-2.0 * h))) / (12.0 * h);
            let a = analytic[i];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
            if !(rel < rel_tol || abs < abs_tol) {
                bad.push(FdMismatch {
                    group,
                    index: i,
                    analytic: a,
                    numeric,
                });
            }
        }
    }
    bad
}
