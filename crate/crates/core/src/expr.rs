//! Expression trees over the symbol library.
//!
//! Each node computes `w * op(children) + b`. Constants never appear as
//! standalone leaves; a pure constant `c` is a variable leaf with `w = 0`,
//! `b = c`.

use std::fmt;
use std::ops;

use serde::{Serialize, Serializer};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::ops::{self as pops, EvalPolicy};
use crate::symbol::Symbol;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    symbol: Symbol,
    w: f64,
    b: f64,
    children: Vec<Node>,
}

impl Node {
    /// Builds a node, checking child arity.
    pub fn new(symbol: Symbol, children: Vec<Node>) -> Result<Node> {
        if children.len() != symbol.arity() {
            return Err(Error::Arity {
                symbol: symbol.token(),
                expected: symbol.arity(),
                actual: children.len(),
            });
        }
        Ok(Node {
            symbol,
            w: 1.0,
            b: 0.0,
            children,
        })
    }

    pub fn var(index: usize) -> Node {
        Node {
            symbol: Symbol::Var(index),
            w: 1.0,
            b: 0.0,
            children: Vec::new(),
        }
    }

    /// A constant, encoded as `0 * x1 + value`.
    pub fn constant(value: f64) -> Node {
        Node::var(0).with_affine(0.0, value)
    }

    pub fn unary(symbol: Symbol, child: Node) -> Node {
        assert!(symbol.is_unary(), "`{symbol}` is not unary");
        Node {
            symbol,
            w: 1.0,
            b: 0.0,
            children: vec![child],
        }
    }

    pub fn binary(symbol: Symbol, left: Node, right: Node) -> Node {
        assert!(symbol.is_binary(), "`{symbol}` is not binary");
        Node {
            symbol,
            w: 1.0,
            b: 0.0,
            children: vec![left, right],
        }
    }

    pub fn symbol(&self) -> Symbol {
        self.symbol
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    pub fn with_affine(mut self, w: f64, b: f64) -> Node {
        self.w = w;
        self.b = b;
        self
    }

    /// True for a leaf whose amplitude is zero, i.e. a pure constant.
    pub fn is_constant(&self) -> bool {
        self.symbol.is_variable() && self.w == 0.0
    }

    pub fn has_default_affine(&self) -> bool {
        self.w == 1.0 && self.b == 0.0
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Node::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    fn max_var(&self) -> Option<usize> {
        let own = match self.symbol {
            Symbol::Var(i) => Some(i),
            _ => None,
        };
        self.children
            .iter()
            .filter_map(Node::max_var)
            .chain(own)
            .max()
    }

    fn all_finite(&self) -> bool {
        self.w.is_finite() && self.b.is_finite() && self.children.iter().all(Node::all_finite)
    }

    /// Visits nodes in prefix order.
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    fn eval(&self, x: &[f64], p: &EvalPolicy) -> f64 {
        let inner = match self.symbol {
            Symbol::Var(i) => x[i],
            s if s.is_unary() => pops::unary(s, self.children[0].eval(x, p), p),
            s => pops::binary(
                s,
                self.children[0].eval(x, p),
                self.children[1].eval(x, p),
                p,
            ),
        };
        pops::affine(self.w, inner, self.b)
    }

    fn write_prefix(&self, out: &mut Vec<String>) {
        if !self.has_default_affine() {
            out.push("affine".into());
            out.push(format_literal(self.w));
            out.push(format_literal(self.b));
        }
        out.push(self.symbol.token());
        for c in &self.children {
            c.write_prefix(out);
        }
    }

    fn scale(mut self, a: f64) -> Node {
        self.w *= a;
        self.b *= a;
        self
    }

    fn shift(mut self, c: f64) -> Node {
        self.b += c;
        self
    }

    /// `self` raised to a positive integer power via repeated products.
    pub fn powi(self, n: u32) -> Node {
        assert!(n >= 1);
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc * self.clone();
        }
        acc
    }

    /// `self ^ exponent` as `exp(exponent * log(self))`.
    pub fn pow(self, exponent: Node) -> Node {
        exp(exponent * log(self))
    }

    /// `self ^ e` for a real constant exponent, as `exp(e * log(self))`.
    pub fn powf(self, e: f64) -> Node {
        exp(log(self) * e)
    }
}

fn format_literal(v: f64) -> String {
    // Debug output is the shortest representation that parses back exactly.
    format!("{v:?}")
}

pub fn sin(n: Node) -> Node {
    Node::unary(Symbol::Sin, n)
}

pub fn cos(n: Node) -> Node {
    Node::unary(Symbol::Cos, n)
}

pub fn exp(n: Node) -> Node {
    Node::unary(Symbol::Exp, n)
}

pub fn log(n: Node) -> Node {
    Node::unary(Symbol::Log, n)
}

pub fn sqrt(n: Node) -> Node {
    Node::unary(Symbol::Sqrt, n)
}

impl ops::Add for Node {
    type Output = Node;
    fn add(self, rhs: Node) -> Node {
        Node::binary(Symbol::Add, self, rhs)
    }
}

impl ops::Sub for Node {
    type Output = Node;
    fn sub(self, rhs: Node) -> Node {
        Node::binary(Symbol::Sub, self, rhs)
    }
}

impl ops::Mul for Node {
    type Output = Node;
    fn mul(self, rhs: Node) -> Node {
        Node::binary(Symbol::Mul, self, rhs)
    }
}

impl ops::Div for Node {
    type Output = Node;
    fn div(self, rhs: Node) -> Node {
        Node::binary(Symbol::Div, self, rhs)
    }
}

// Scalar arithmetic folds into the root's affine pair.
impl ops::Mul<f64> for Node {
    type Output = Node;
    fn mul(self, a: f64) -> Node {
        self.scale(a)
    }
}

impl ops::Mul<Node> for f64 {
    type Output = Node;
    fn mul(self, n: Node) -> Node {
        n.scale(self)
    }
}

impl ops::Add<f64> for Node {
    type Output = Node;
    fn add(self, c: f64) -> Node {
        self.shift(c)
    }
}

impl ops::Add<Node> for f64 {
    type Output = Node;
    fn add(self, n: Node) -> Node {
        n.shift(self)
    }
}

impl ops::Sub<f64> for Node {
    type Output = Node;
    fn sub(self, c: f64) -> Node {
        self.shift(-c)
    }
}

impl ops::Sub<Node> for f64 {
    type Output = Node;
    fn sub(self, n: Node) -> Node {
        n.scale(-1.0).shift(self)
    }
}

impl ops::Neg for Node {
    type Output = Node;
    fn neg(self) -> Node {
        self.scale(-1.0)
    }
}

/// A validated expression over `k` input variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    k: usize,
}

impl Expression {
    pub fn new(root: Node, k: usize) -> Result<Self> {
        if let Some(i) = root.max_var() {
            if i >= k {
                return Err(Error::VariableOutOfRange { index: i + 1, k });
            }
        }
        if !root.all_finite() {
            return Err(Error::Config("non-finite constant in expression".into()));
        }
        Ok(Expression { root, k })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn num_vars(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn eval(&self, x: &[f64], policy: &EvalPolicy) -> Result<f64> {
        if x.len() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                actual: x.len(),
            });
        }
        Ok(self.root.eval(x, policy))
    }

    /// Evaluates every row of `x`.
    pub fn eval_batch(&self, x: &Matrix, policy: &EvalPolicy) -> Result<Vec<f64>> {
        if x.cols() != self.k {
            return Err(Error::Dimension {
                expected: self.k,
                actual: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.root.eval(r, policy)).collect())
    }

    pub fn to_prefix(&self) -> String {
        let mut toks = Vec::new();
        self.root.write_prefix(&mut toks);
        toks.join(" ")
    }

    pub fn parse_prefix(text: &str, k: usize) -> Result<Self> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let mut pos = 0;
        let root = parse_node(&toks, &mut pos, k)?;
        if pos != toks.len() {
            return Err(Error::TrailingTokens(toks[pos..].join(" ")));
        }
        Expression::new(root, k)
    }

    /// Same structure with every constant replaced by the refined values in `params`
    /// (flattened `(w, b)` pairs in prefix order).
    pub(crate) fn with_params(&self, params: &[f64]) -> Expression {
        fn rebuild(n: &Node, params: &[f64], pos: &mut usize) -> Node {
            let (w, b) = (params[*pos], params[*pos + 1]);
            *pos += 2;
            let children = n.children.iter().map(|c| rebuild(c, params, pos)).collect();
            Node {
                symbol: n.symbol,
                w,
                b,
                children,
            }
        }
        let mut pos = 0;
        Expression {
            root: rebuild(&self.root, params, &mut pos),
            k: self.k,
        }
    }

    pub(crate) fn params(&self) -> Vec<f64> {
        self.root
            .preorder()
            .into_iter()
            .flat_map(|n| [n.w, n.b])
            .collect()
    }
}

fn parse_node(toks: &[&str], pos: &mut usize, k: usize) -> Result<Node> {
    let Some(&tok) = toks.get(*pos) else {
        let prev = if *pos == 0 { "" } else { toks[*pos - 1] };
        return Err(Error::ArityUnderflow(prev.to_string()));
    };
    *pos += 1;
    if tok == "affine" {
        let w = parse_literal(toks, pos)?;
        let b = parse_literal(toks, pos)?;
        let inner = parse_node(toks, pos, k)?;
        let (w0, b0) = (inner.w, inner.b);
        return Ok(inner.with_affine(w * w0, w * b0 + b));
    }
    let symbol = Symbol::from_token(tok, k)?;
    let mut children = Vec::with_capacity(symbol.arity());
    for _ in 0..symbol.arity() {
        if *pos >= toks.len() {
            return Err(Error::ArityUnderflow(tok.to_string()));
        }
        children.push(parse_node(toks, pos, k)?);
    }
    Node::new(symbol, children)
}

fn parse_literal(toks: &[&str], pos: &mut usize) -> Result<f64> {
    let tok = toks
        .get(*pos)
        .ok_or_else(|| Error::ArityUnderflow("affine".into()))?;
    *pos += 1;
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::BadLiteral(tok.to_string())),
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_prefix())
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_prefix())
    }
}

/// Flattened expression used for batched evaluation and constant gradients.
pub(crate) struct FlatExpr {
    symbols: Vec<Symbol>,
    children: Vec<[usize; 2]>,
}

impl FlatExpr {
    pub(crate) fn new(expr: &Expression) -> Self {
        let n = expr.node_count();
        let mut symbols = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        fn walk(n: &Node, symbols: &mut Vec<Symbol>, children: &mut Vec<[usize; 2]>) -> usize {
            let id = symbols.len();
            symbols.push(n.symbol);
            children.push([usize::MAX; 2]);
            let mut ch = [usize::MAX; 2];
            for (slot, c) in n.children.iter().enumerate() {
                ch[slot] = walk(c, symbols, children);
            }
            children[id] = ch;
            id
        }
        walk(&expr.root, &mut symbols, &mut children);
        FlatExpr { symbols, children }
    }

    pub(crate) fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Per-node inner values (before affine) and outputs for one sample.
    fn forward_sample(
        &self,
        params: &[f64],
        x: &[f64],
        p: &EvalPolicy,
        inner: &mut [f64],
        out: &mut [f64],
    ) {
        for id in (0..self.len()).rev() {
            let v = match self.symbols[id] {
                Symbol::Var(i) => x[i],
                s if s.is_unary() => pops::unary(s, out[self.children[id][0]], p),
                s => pops::binary(s, out[self.children[id][0]], out[self.children[id][1]], p),
            };
            inner[id] = v;
            out[id] = pops::affine(params[2 * id], v, params[2 * id + 1]);
        }
    }

    #[cfg(test)]
    pub(crate) fn predict(&self, params: &[f64], x: &Matrix, p: &EvalPolicy) -> Vec<f64> {
        let n = self.len();
        let mut inner = vec![0.0; n];
        let mut out = vec![0.0; n];
        x.iter_rows()
            .map(|r| {
                self.forward_sample(params, r, p, &mut inner, &mut out);
                out[0]
            })
            .collect()
    }

    /// MSE and its gradient with respect to every `(w, b)` pair.
    pub(crate) fn mse_grad(
        &self,
        params: &[f64],
        x: &Matrix,
        y: &[f64],
        p: &EvalPolicy,
        grad: &mut [f64],
    ) -> f64 {
        let n = self.len();
        let m = x.rows() as f64;
        let mut inner = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut g = vec![0.0; n];
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut loss = 0.0;
        for (r, &target) in x.iter_rows().zip(y) {
            self.forward_sample(params, r, p, &mut inner, &mut out);
            let resid = out[0] - target;
            loss += resid * resid;
            g.iter_mut().for_each(|v| *v = 0.0);
            g[0] = 2.0 * resid / m;
            for id in 0..n {
                let (w, b) = (params[2 * id], params[2 * id + 1]);
                if (w * inner[id] + b).abs() > pops::VALUE_BOUND {
                    continue;
                }
                let up = g[id];
                grad[2 * id] += up * inner[id];
                grad[2 * id + 1] += up;
                let gi = up * w;
                let [l, rr] = self.children[id];
                match self.symbols[id] {
                    Symbol::Var(_) => {}
                    s if s.is_unary() => {
                        let (_, d) = pops::unary_grad(s, out[l], p);
                        g[l] += gi * d;
                    }
                    s => {
                        let (_, da, db) = pops::binary_grad(s, out[l], out[rr], p);
                        g[l] += gi * da;
                        g[rr] += gi * db;
                    }
                }
            }
        }
        loss / m
    }
}
