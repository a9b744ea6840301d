//! Built-in ground-truth registry.
//!
//! Powers are spelled as repeated products, `a ^ b` as `exp(b * log(a))`,
//! `tan` as `sin / cos` and `tanh(u)` as `(exp(2u) - 1) / (exp(2u) + 1)`.
//! Fractional powers therefore act on `|x|` outside the positive domain.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::expr::{cos, exp, log, sin, sqrt, Expression, Node};

use super::SamplingSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkEntry {
    pub name: &'static str,
    pub group: &'static str,
    pub k: usize,
    pub expression: Expression,
    pub spec: SamplingSpec,
}

fn x(i: usize) -> Node {
    Node::var(i - 1)
}

fn c(v: f64) -> Node {
    Node::constant(v)
}

fn tan(u: Node) -> Node {
    sin(u.clone()) / cos(u)
}

fn tanh(u: Node) -> Node {
    let e2 = exp(2.0 * u);
    (e2.clone() - 1.0) / (e2 + 1.0)
}

/// `x^n + x^(n-1) + ... + x`.
fn poly_sum(n: u32) -> Node {
    let mut acc = x(1).powi(n);
    for p in (1..n).rev() {
        acc = acc + x(1).powi(p);
    }
    acc
}

fn sin_sq_cos(shift: f64) -> Node {
    sin(x(1) * x(1)) * cos(x(1)) - shift
}

fn keijzer4_core() -> Node {
    // x^3 e^-x cos x sin x (sin^2 x cos x - 1)
    let s = || sin(x(1));
    let co = || cos(x(1));
    x(1).powi(3) * exp(-x(1)) * co() * s() * (s() * s() * co() - 1.0)
}

fn gaussian_ratio() -> Node {
    exp(-((x(1) - 1.0) * (x(1) - 1.0))) / ((x(2) - 2.5) * (x(2) - 2.5) + 1.2)
}

/// `1 / (1 + v^-4)`.
fn pagie_term(v: Node) -> Node {
    c(1.0) / (c(1.0) / v.powi(4) + 1.0)
}

/// Harmonic number via its asymptotic expansion
/// `ln x + gamma + 1/(2x) - 1/(12x^2) + 1/(120x^4)`.
fn harmonic() -> Node {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    log(x(1)) + EULER_GAMMA + 0.5 * (c(1.0) / x(1)) - (1.0 / 12.0) * (c(1.0) / (x(1) * x(1)))
        + (1.0 / 120.0) * (c(1.0) / x(1).powi(4))
}

type Row = (&'static str, &'static str, usize, Node, SamplingSpec);

fn rows() -> Vec<Row> {
    let u = SamplingSpec::uniform;
    let e = SamplingSpec::even;
    vec![
        // Nguyen
        ("Nguyen-1", "Nguyen", 1, poly_sum(3), u(-1.0, 1.0, 20)),
        ("Nguyen-2", "Nguyen", 1, poly_sum(4), u(-1.0, 1.0, 20)),
        ("Nguyen-3", "Nguyen", 1, poly_sum(5), u(-1.0, 1.0, 20)),
        ("Nguyen-4", "Nguyen", 1, poly_sum(6), u(-1.0, 1.0, 20)),
        ("Nguyen-5", "Nguyen", 1, sin_sq_cos(1.0), u(-1.0, 1.0, 20)),
        (
            "Nguyen-6",
            "Nguyen",
            1,
            sin(x(1)) + sin(x(1) + x(1) * x(1)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Nguyen-7",
            "Nguyen",
            1,
            log(x(1) + 1.0) + log(x(1) * x(1) + 1.0),
            u(0.0, 2.0, 20),
        ),
        ("Nguyen-8", "Nguyen", 1, sqrt(x(1)), u(0.0, 4.0, 20)),
        (
            "Nguyen-9",
            "Nguyen",
            2,
            sin(x(1)) + sin(x(2) * x(2)),
            u(0.0, 1.0, 20),
        ),
        (
            "Nguyen-10",
            "Nguyen",
            2,
            2.0 * (sin(x(1)) * cos(x(2))),
            u(0.0, 1.0, 20),
        ),
        ("Nguyen-11", "Nguyen", 2, x(1).pow(x(2)), u(0.0, 1.0, 20)),
        (
            "Nguyen-12",
            "Nguyen",
            2,
            x(1).powi(4) - x(1).powi(3) + 0.5 * (x(2) * x(2)) - x(2),
            u(0.0, 1.0, 20),
        ),
        // Nguyen primed and constant variants
        (
            "NguyenPrime-2",
            "NguyenVariants",
            1,
            4.0 * x(1).powi(4) + 3.0 * x(1).powi(3) + 2.0 * x(1).powi(2) + x(1),
            u(-1.0, 1.0, 20),
        ),
        (
            "NguyenPrime-5",
            "NguyenVariants",
            1,
            sin_sq_cos(2.0),
            u(-1.0, 1.0, 20),
        ),
        (
            "NguyenPrime-8",
            "NguyenVariants",
            1,
            x(1).powf(1.0 / 3.0),
            u(0.0, 4.0, 20),
        ),
        (
            "NguyenDoublePrime-8",
            "NguyenVariants",
            1,
            (x(1) * x(1)).powf(1.0 / 3.0),
            u(0.0, 4.0, 20),
        ),
        (
            "NguyenC-1",
            "NguyenVariants",
            1,
            3.39 * x(1).powi(3) + 2.12 * x(1).powi(2) + 1.78 * x(1),
            u(-1.0, 1.0, 20),
        ),
        (
            "NguyenC-5",
            "NguyenVariants",
            1,
            sin_sq_cos(0.75),
            u(-1.0, 1.0, 20),
        ),
        (
            "NguyenC-7",
            "NguyenVariants",
            1,
            log(x(1) + 1.4) + log(x(1) * x(1) + 1.3),
            u(0.0, 2.0, 20),
        ),
        (
            "NguyenC-8",
            "NguyenVariants",
            1,
            sqrt(1.23 * x(1)),
            u(0.0, 4.0, 20),
        ),
        (
            "NguyenC-10",
            "NguyenVariants",
            2,
            sin(1.5 * x(1)) * cos(0.5 * x(2)),
            u(0.0, 1.0, 20),
        ),
        // Korns
        (
            "Korns-1",
            "Korns",
            1,
            1.57 + 24.3 * x(1).powi(4),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-2",
            "Korns",
            4,
            0.23 + 14.2 * ((x(4) + x(1)) / (3.0 * x(2))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-3",
            "Korns",
            3,
            4.9 * ((x(2) - x(1) + x(1) / x(3)) / (3.0 * x(3))) - 5.41,
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-4",
            "Korns",
            1,
            0.13 * sin(x(1)) - 2.3,
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-5",
            "Korns",
            5,
            3.0 + 2.13 * log(x(5)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-6",
            "Korns",
            1,
            1.3 + 0.13 * sqrt(x(1)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-7",
            "Korns",
            1,
            2.1 - 2.1 * exp(-0.55 * x(1)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-8",
            "Korns",
            5,
            6.87 + 11.0 * sqrt(7.23 * (x(1) * x(4) * x(5))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-9",
            "Korns",
            2,
            12.0 * sqrt(4.2 * (x(1) * x(2) * x(2))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-10",
            "Korns",
            4,
            0.81 + 24.3
                * ((2.0 * x(1) + 3.0 * (x(2) * x(2))) / (4.0 * x(3).powi(3) + 5.0 * x(4).powi(4))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-11",
            "Korns",
            1,
            6.87 + 11.0 * cos(7.23 * x(1).powi(3)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-12",
            "Korns",
            5,
            2.0 - 2.1 * (cos(9.8 * x(1).powi(3)) * sin(1.3 * x(5))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-13",
            "Korns",
            4,
            32.0 - 3.0 * ((tan(x(1)) / tan(x(2))) * (tan(x(3)) / tan(x(4)))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-14",
            "Korns",
            4,
            22.0 - (4.2 * cos(x(1)) - tan(x(2))) * (tanh(x(3)) / sin(x(4))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Korns-15",
            "Korns",
            4,
            12.0 - (6.0 * tan(x(1)) / exp(x(2))) * (log(x(3)) - tan(x(4))),
            u(-1.0, 1.0, 20),
        ),
        // Jin
        (
            "Jin-1",
            "Jin",
            2,
            2.5 * x(1).powi(4) - 1.3 * x(1).powi(3) + 0.5 * x(2).powi(2) - 1.7 * x(2),
            u(-3.0, 3.0, 100),
        ),
        (
            "Jin-2",
            "Jin",
            2,
            8.0 * x(1).powi(2) + 8.0 * x(2).powi(3) - 15.0,
            u(-3.0, 3.0, 100),
        ),
        (
            "Jin-3",
            "Jin",
            2,
            0.2 * x(1).powi(3) + 0.5 * x(2).powi(3) - 1.2 * x(2) - 0.5 * x(1),
            u(-3.0, 3.0, 100),
        ),
        (
            "Jin-4",
            "Jin",
            2,
            1.5 * exp(x(1)) + 5.0 * cos(x(2)),
            u(-3.0, 3.0, 100),
        ),
        (
            "Jin-5",
            "Jin",
            2,
            6.0 * (sin(x(1)) * cos(x(2))),
            u(-3.0, 3.0, 100),
        ),
        (
            "Jin-6",
            "Jin",
            2,
            1.35 * (x(1) * x(2)) + 5.5 * sin((x(1) - 1.0) * (x(2) - 1.0)),
            u(-3.0, 3.0, 100),
        ),
        // Neat
        ("Neat-1", "Neat", 1, poly_sum(4), u(-1.0, 1.0, 20)),
        ("Neat-2", "Neat", 1, poly_sum(5), u(-1.0, 1.0, 20)),
        ("Neat-3", "Neat", 1, sin_sq_cos(1.0), u(-1.0, 1.0, 20)),
        (
            "Neat-4",
            "Neat",
            1,
            log(x(1) + 1.0) + log(x(1) * x(1) + 1.0),
            u(0.0, 2.0, 20),
        ),
        (
            "Neat-5",
            "Neat",
            2,
            2.0 * (sin(x(1)) * cos(x(2))),
            u(-1.0, 1.0, 100),
        ),
        ("Neat-6", "Neat", 1, harmonic(), e(1.0, 50.0, 50)),
        (
            "Neat-7",
            "Neat",
            2,
            2.0 - 2.1 * (cos(9.8 * x(1)) * sin(1.3 * x(2))),
            e(-50.0, 50.0, 100_000),
        ),
        (
            "Neat-8",
            "Neat",
            2,
            exp(-(x(1) * x(1))) / ((x(2) - 2.5) * (x(2) - 2.5) + 1.2),
            u(0.3, 4.0, 100),
        ),
        (
            "Neat-9",
            "Neat",
            2,
            pagie_term(x(1)) + pagie_term(x(2)),
            e(-5.0, 5.0, 21),
        ),
        // Keijzer
        (
            "Keijzer-1",
            "Keijzer",
            1,
            0.3 * (x(1) * sin(2.0 * PI * x(1))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-2",
            "Keijzer",
            1,
            2.0 * (x(1) * sin(0.5 * PI * x(1))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-3",
            "Keijzer",
            1,
            0.92 * (x(1) * sin(2.41 * PI * x(1))),
            u(-1.0, 1.0, 20),
        ),
        ("Keijzer-4", "Keijzer", 1, keijzer4_core(), u(-1.0, 1.0, 20)),
        (
            "Keijzer-5",
            "Keijzer",
            5,
            3.0 + 2.13 * log(x(5)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-6",
            "Keijzer",
            1,
            0.5 * (x(1) * (x(1) + 1.0)),
            u(-1.0, 1.0, 20),
        ),
        ("Keijzer-7", "Keijzer", 1, log(x(1)), u(0.0, 1.0, 20)),
        ("Keijzer-8", "Keijzer", 1, sqrt(x(1)), u(0.0, 1.0, 20)),
        (
            "Keijzer-9",
            "Keijzer",
            1,
            log(x(1) + sqrt(x(1) * x(1) + 1.0)),
            u(-1.0, 1.0, 20),
        ),
        ("Keijzer-10", "Keijzer", 2, x(1).pow(x(2)), u(-1.0, 1.0, 20)),
        (
            "Keijzer-11",
            "Keijzer",
            2,
            x(1) * x(2) + sin((x(1) - 1.0) * (x(2) - 1.0)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-12",
            "Keijzer",
            2,
            x(1).powi(4) - x(1).powi(3) + 0.5 * (x(2) * x(2)) - x(2),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-13",
            "Keijzer",
            2,
            6.0 * (sin(x(1)) * cos(x(2))),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-14",
            "Keijzer",
            2,
            c(8.0) / (x(1) * x(1) + x(2) * x(2) + 2.0),
            u(-1.0, 1.0, 20),
        ),
        (
            "Keijzer-15",
            "Keijzer",
            2,
            0.2 * x(1).powi(3) + 0.5 * x(2).powi(3) - x(2) - x(1),
            u(-1.0, 1.0, 20),
        ),
        // Livermore
        (
            "Livermore-1",
            "Livermore",
            1,
            x(1) + sin(x(1) * x(1)) + 1.0 / 3.0,
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-2",
            "Livermore",
            1,
            sin_sq_cos(2.0),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-3",
            "Livermore",
            1,
            sin(x(1).powi(3)) * cos(x(1) * x(1)) - 1.0,
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-4",
            "Livermore",
            1,
            log(x(1) + 1.0) + log(x(1) * x(1) + 1.0) + log(x(1)),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-5",
            "Livermore",
            2,
            x(1).powi(4) - x(1).powi(3) + x(2) * x(2) - x(2),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-6",
            "Livermore",
            1,
            4.0 * x(1).powi(4) + 3.0 * x(1).powi(3) + 2.0 * x(1).powi(2) + x(1),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-7",
            "Livermore",
            1,
            0.5 * (exp(x(1)) - exp(-x(1))),
            u(-1.0, 1.0, 100),
        ),
        (
            "Livermore-8",
            "Livermore",
            1,
            (1.0 / 3.0) * (exp(x(1)) + exp(-x(1))),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-9",
            "Livermore",
            1,
            poly_sum(9),
            u(-1.0, 1.0, 100),
        ),
        (
            "Livermore-10",
            "Livermore",
            2,
            6.0 * (sin(x(1)) * cos(x(2))),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-11",
            "Livermore",
            2,
            (x(1) * x(1) * x(2) * x(2)) / (x(1) + x(2)),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-12",
            "Livermore",
            2,
            x(1).powi(5) / x(2).powi(3),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-13",
            "Livermore",
            1,
            x(1).powf(1.0 / 3.0),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-14",
            "Livermore",
            2,
            poly_sum(3) + sin(x(1)) + sin(x(2) * x(2)),
            u(-1.0, 1.0, 100),
        ),
        (
            "Livermore-15",
            "Livermore",
            1,
            x(1).powf(1.0 / 5.0),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-16",
            "Livermore",
            1,
            x(1).powf(2.0 / 3.0),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-17",
            "Livermore",
            2,
            4.0 * (sin(x(1)) * cos(x(2))),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-18",
            "Livermore",
            1,
            sin_sq_cos(5.0),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-19",
            "Livermore",
            1,
            x(1).powi(5) + x(1).powi(4) + x(1).powi(2) + x(1),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-20",
            "Livermore",
            1,
            exp(-(x(1) * x(1))),
            u(-3.0, 3.0, 100),
        ),
        (
            "Livermore-21",
            "Livermore",
            1,
            poly_sum(8),
            u(-1.0, 1.0, 20),
        ),
        (
            "Livermore-22",
            "Livermore",
            1,
            exp(-0.5 * (x(1) * x(1))),
            u(-3.0, 3.0, 100),
        ),
        // Vladislavleva
        (
            "Vladislavleva-1",
            "Vladislavleva",
            2,
            gaussian_ratio(),
            u(-1.0, 1.0, 20),
        ),
        (
            "Vladislavleva-2",
            "Vladislavleva",
            1,
            keijzer4_core(),
            u(-1.0, 1.0, 20),
        ),
        (
            "Vladislavleva-3",
            "Vladislavleva",
            2,
            keijzer4_core() * (x(2) - 5.0),
            u(-1.0, 1.0, 20),
        ),
        (
            "Vladislavleva-4",
            "Vladislavleva",
            5,
            c(10.0)
                / ((x(1) - 3.0) * (x(1) - 3.0)
                    + (x(2) - 3.0) * (x(2) - 3.0)
                    + (x(3) - 3.0) * (x(3) - 3.0)
                    + (x(4) - 3.0) * (x(4) - 3.0)
                    + (x(5) - 3.0) * (x(5) - 3.0)
                    + 5.0),
            u(0.0, 2.0, 20),
        ),
        (
            "Vladislavleva-5",
            "Vladislavleva",
            3,
            30.0 * (((x(1) - 1.0) * (x(3) - 1.0)) / ((x(1) - 10.0) * (x(2) * x(2)))),
            u(-1.0, 1.0, 100),
        ),
        (
            "Vladislavleva-6",
            "Vladislavleva",
            2,
            6.0 * (sin(x(1)) * cos(x(2))),
            e(1.0, 50.0, 50),
        ),
        (
            "Vladislavleva-7",
            "Vladislavleva",
            2,
            2.0 - 2.1 * (cos(9.8 * x(1)) * sin(1.3 * x(2))),
            e(-50.0, 50.0, 100_000),
        ),
        (
            "Vladislavleva-8",
            "Vladislavleva",
            2,
            gaussian_ratio(),
            u(0.3, 4.0, 100),
        ),
        // Others
        (
            "Test-2",
            "Others",
            1,
            3.14 * (x(1) * x(1)),
            u(-1.0, 1.0, 20),
        ),
        (
            "Const-Test-1",
            "Others",
            1,
            5.0 * (x(1) * x(1)),
            u(-1.0, 1.0, 20),
        ),
        (
            "GrammarVAE-1",
            "Others",
            1,
            x(1) + sin(x(1) * x(1)) + 1.0 / 3.0,
            u(-1.0, 1.0, 20),
        ),
        (
            "Sine",
            "Others",
            1,
            sin(x(1)) + sin(x(1) + x(1) * x(1)),
            u(-1.0, 1.0, 20),
        ),
        ("Nonic", "Others", 1, poly_sum(9), u(-1.0, 1.0, 100)),
        (
            "Pagie-1",
            "Others",
            2,
            pagie_term(x(1)) + pagie_term(x(2)),
            e(1.0, 50.0, 50),
        ),
        (
            "Meier-3",
            "Others",
            2,
            (x(1) * x(1) * x(2) * x(2)) / (x(1) + x(2)),
            e(-50.0, 50.0, 100_000),
        ),
        (
            "Meier-4",
            "Others",
            2,
            x(1).powi(5) / x(2).powi(3),
            u(0.3, 4.0, 100),
        ),
        (
            "Poly-10",
            "Others",
            10,
            x(1) * x(2) + x(3) * x(4) + x(5) * x(6) + x(1) * x(7) * x(9) + x(3) * x(6) * x(10),
            e(-1.0, 1.0, 100),
        ),
        // Constant
        (
            "Constant-1",
            "Constant",
            1,
            3.39 * x(1).powi(3) + 2.12 * x(1).powi(2) + 1.78 * x(1),
            u(-4.0, 4.0, 100),
        ),
        (
            "Constant-2",
            "Constant",
            1,
            sin_sq_cos(0.75),
            u(-4.0, 4.0, 100),
        ),
        (
            "Constant-3",
            "Constant",
            2,
            sin(1.5 * x(1)) * cos(0.5 * x(2)),
            u(0.1, 4.0, 100),
        ),
        (
            "Constant-4",
            "Constant",
            2,
            2.7 * x(1).pow(x(2)),
            u(0.3, 4.0, 100),
        ),
        (
            "Constant-5",
            "Constant",
            1,
            sqrt(1.23 * x(1)),
            u(0.1, 4.0, 100),
        ),
        (
            "Constant-6",
            "Constant",
            1,
            x(1).powf(0.426),
            u(0.0, 4.0, 100),
        ),
        (
            "Constant-7",
            "Constant",
            2,
            2.0 * (sin(1.3 * x(1)) * cos(x(2))),
            u(-4.0, 4.0, 100),
        ),
        (
            "Constant-8",
            "Constant",
            1,
            log(x(1) + 1.4) + log(x(1) * x(1) + 1.3),
            u(-4.0, 4.0, 100),
        ),
        // R rationals
        (
            "R1",
            "R",
            1,
            (x(1) + 1.0).powi(3) / (x(1) * x(1) - x(1) + 1.0),
            u(-5.0, 5.0, 100),
        ),
        (
            "R2",
            "R",
            1,
            (x(1).powi(5) - 3.0 * x(1).powi(3) + 1.0) / (x(1) * x(1) + 1.0),
            u(-4.0, 4.0, 100),
        ),
        (
            "R3",
            "R",
            1,
            (x(1).powi(6) + x(1).powi(5))
                / (x(1).powi(4) + x(1).powi(3) + x(1).powi(2) + x(1) + 1.0),
            u(-4.0, 4.0, 100),
        ),
        // AI Feynman subset
        (
            "Feynman-I.6.20a",
            "Feynman",
            1,
            (1.0 / (2.0 * PI).sqrt()) * exp(-0.5 * (x(1) * x(1))),
            u(1.0, 3.0, 100),
        ),
        (
            "Feynman-I.12.1",
            "Feynman",
            2,
            x(1) * x(2),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-I.12.5",
            "Feynman",
            2,
            x(1) * x(2),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-I.25.13",
            "Feynman",
            2,
            x(1) / x(2),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-I.29.4",
            "Feynman",
            2,
            x(1) / x(2),
            u(1.0, 10.0, 100),
        ),
        (
            "Feynman-I.34.27",
            "Feynman",
            2,
            x(1) * x(2),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-II.8.31",
            "Feynman",
            2,
            0.5 * (x(1) * x(2) * x(2)),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-II.27.18",
            "Feynman",
            2,
            x(1) * x(2) * x(2),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-II.38.3",
            "Feynman",
            4,
            (x(1) * x(2) * x(3)) / x(4),
            u(1.0, 5.0, 100),
        ),
        (
            "Feynman-III.12.43",
            "Feynman",
            2,
            x(1) * x(2),
            u(1.0, 5.0, 100),
        ),
    ]
}

/// All registry entries, sorted by name.
pub fn registry() -> &'static [BenchmarkEntry] {
    static REGISTRY: OnceLock<Vec<BenchmarkEntry>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut entries: Vec<BenchmarkEntry> = rows()
            .into_iter()
            .map(|(name, group, k, node, spec)| BenchmarkEntry {
                name,
                group,
                k,
                expression: Expression::new(node, k).unwrap_or_else(|e| panic!("{name}: {e}")),
                spec,
            })
            .collect();
        entries.sort_by(|a, b| a.name.cmp(b.name));
        entries
    })
}

pub fn registry_names() -> Vec<&'static str> {
    registry().iter().map(|e| e.name).collect()
}

pub fn get_benchmark(name: &str) -> Result<&'static BenchmarkEntry> {
    registry()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownBenchmark(name.to_string()))
}

/// Shell-style match supporting `*` and `?`.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    let (mut pi, mut ni) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == n[ni]) {
            pi += 1;
            ni += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ni));
            pi += 1;
        } else if let Some((sp, sn)) = star {
            pi = sp + 1;
            ni = sn + 1;
            star = Some((sp, sn + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&ch| ch == '*')
}

/// Resolves comma-separated names or globs, preserving first-seen order and
/// natural ordering within each glob. A pattern matching nothing is an error.
pub fn select(patterns: &str) -> Result<Vec<&'static BenchmarkEntry>> {
    let mut out: Vec<&'static BenchmarkEntry> = Vec::new();
    for pat in patterns.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let mut hits: Vec<&'static BenchmarkEntry> = registry()
            .iter()
            .filter(|e| glob_match(pat, e.name))
            .collect();
        if hits.is_empty() {
            return Err(Error::UnknownBenchmark(pat.to_string()));
        }
        hits.sort_by(|a, b| natural_key(a.name).cmp(&natural_key(b.name)));
        for h in hits {
            if !out.iter().any(|o| o.name == h.name) {
                out.push(h);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::UnknownBenchmark(patterns.to_string()));
    }
    Ok(out)
}

/// Splits a trailing number off so `Nguyen-10` sorts after `Nguyen-9`.
fn natural_key(name: &str) -> (String, u64, String) {
    let idx = name.rfind('-').map_or(0, |i| i + 1);
    let (head, tail) = name.split_at(idx);
    let digits: String = tail.chars().take_while(char::is_ascii_digit).collect();
    let num = digits.parse().unwrap_or(u64::MAX);
    (head.to_string(), num, tail[digits.len()..].to_string())
}
