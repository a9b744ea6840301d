//! Unit-cost ordered tree edit distance (Zhang–Shasha) over constant-masked labels.

use crate::expr::{Expression, Node};
use crate::symbol::Symbol;

/// Node label after masking: constant leaves collapse to a single token,
/// operators and variables keep their identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskedLabel {
    Const,
    Sym(Symbol),
}

pub fn masked_label(n: &Node) -> MaskedLabel {
    if n.is_constant() {
        MaskedLabel::Const
    } else {
        MaskedLabel::Sym(n.symbol())
    }
}

/// Postorder view: labels plus leftmost-leaf indices, both 1-based.
struct Postorder {
    labels: Vec<MaskedLabel>,
    leftmost: Vec<usize>,
}

impl Postorder {
    fn new(root: &Node) -> Self {
        let mut p = Postorder {
            labels: vec![MaskedLabel::Const],
            leftmost: vec![0],
        };
        p.visit(root);
        p
    }

    fn visit(&mut self, n: &Node) -> usize {
        let mut first_leaf = None;
        for c in n.children() {
            let lm = self.visit(c);
            first_leaf.get_or_insert(lm);
        }
        self.labels.push(masked_label(n));
        let id = self.labels.len() - 1;
        self.leftmost
            .push(first_leaf.map_or(id, |c| self.leftmost[c]));
        id
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }

    fn keyroots(&self) -> Vec<usize> {
        // highest node for each distinct leftmost leaf
        let n = self.len();
        let mut seen = vec![false; n + 1];
        let mut roots = Vec::new();
        for i in (1..=n).rev() {
            let l = self.leftmost[i];
            if !seen[l] {
                seen[l] = true;
                roots.push(i);
            }
        }
        roots.sort_unstable();
        roots
    }
}

pub fn node_edit_distance(a: &Node, b: &Node) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let (na, nb) = (pa.len(), pb.len());
    let mut td = vec![vec![0usize; nb + 1]; na + 1];
    let mut fd = vec![vec![0usize; nb + 1]; na + 1];

    for &i in &pa.keyroots() {
        for &j in &pb.keyroots() {
            let (li, lj) = (pa.leftmost[i], pb.leftmost[j]);
            // fd is indexed with an offset so that row li-1 / col lj-1 is the empty forest
            fd[li - 1][lj - 1] = 0;
            for di in li..=i {
                fd[di][lj - 1] = fd[di - 1][lj - 1] + 1;
            }
            for dj in lj..=j {
                fd[li - 1][dj] = fd[li - 1][dj - 1] + 1;
            }
            for di in li..=i {
                for dj in lj..=j {
                    let del = fd[di - 1][dj] + 1;
                    let ins = fd[di][dj - 1] + 1;
                    if pa.leftmost[di] == li && pb.leftmost[dj] == lj {
                        let relabel = usize::from(pa.labels[di] != pb.labels[dj]);
                        let v = del.min(ins).min(fd[di - 1][dj - 1] + relabel);
                        fd[di][dj] = v;
                        td[di][dj] = v;
                    } else {
                        let sub = fd[pa.leftmost[di] - 1][pb.leftmost[dj] - 1] + td[di][dj];
                        fd[di][dj] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    td[na][nb]
}

/// Minimum number of node relabel/insert/delete operations turning `a` into `b`,
/// with constant values masked.
pub fn tree_edit_distance(a: &Expression, b: &Expression) -> usize {
    node_edit_distance(a.root(), b.root())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{cos, sin, Node};

    fn e(n: Node, k: usize) -> Expression {
        Expression::new(n, k).unwrap()
    }

    #[test]
    fn identical_trees_are_zero() {
        let a = e(sin(Node::var(0)) + Node::var(1) * Node::var(0), 2);
        assert_eq!(tree_edit_distance(&a, &a.clone()), 0);
    }

    #[test]
    fn variable_relabel_costs_one() {
        assert_eq!(
            tree_edit_distance(&e(Node::var(0), 2), &e(Node::var(1), 2)),
            1
        );
    }

    #[test]
    fn constants_are_masked() {
        let a = e(2.0 * Node::var(0) + Node::constant(3.0), 1);
        let b = e(Node::var(0) + Node::constant(-7.5), 1);
        assert_eq!(tree_edit_distance(&a, &b), 0);
        let c = e(Node::var(0) + Node::var(0), 1);
        assert_eq!(tree_edit_distance(&a, &c), 1);
    }

    #[test]
    fn sum_versus_sine() {
        // value frozen from the brute-force forest recursion in tests/ted_oracle.rs
        let a = e(Node::var(0) + Node::var(1), 2);
        let b = e(sin(Node::var(0)), 2);
        assert_eq!(tree_edit_distance(&a, &b), 2);
        assert_eq!(tree_edit_distance(&b, &a), 2);
    }

    #[test]
    fn insertion_chain() {
        let a = e(Node::var(0), 1);
        let b = e(sin(cos(Node::var(0))), 1);
        assert_eq!(tree_edit_distance(&a, &b), 2);
    }
}
