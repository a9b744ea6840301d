//! Protected operator semantics and their derivatives.
//!
//! Every operator result is finite for finite inputs: division clamps the
//! denominator away from zero, `log` and `sqrt` act on `|u|`, `exp` clamps its
//! argument, and all results are clipped to `±VALUE_BOUND`. Derivatives are
//! those of the protected forms, and zero wherever a clamp is active.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// Magnitude cap applied to every operator and node output.
pub const VALUE_BOUND: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    pub epsilon: f64,
    pub clamp_exp: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy {
            epsilon: 1e-6,
            clamp_exp: 50.0,
        }
    }
}

impl EvalPolicy {
    pub fn new(epsilon: f64, clamp_exp: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(clamp_exp > 0.0 && clamp_exp.is_finite()) {
            return Err(Error::Config(format!(
                "clamp_exp must be > 0, got {clamp_exp}"
            )));
        }
        Ok(EvalPolicy { epsilon, clamp_exp })
    }
}

/// Clips to `±VALUE_BOUND`; NaN maps to zero.
#[inline]
pub fn bounded(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-VALUE_BOUND, VALUE_BOUND)
    }
}

#[inline]
fn in_bound(v: f64) -> bool {
    v.abs() <= VALUE_BOUND
}

#[inline]
fn protected_denominator(d: f64, eps: f64) -> f64 {
    if d >= 0.0 {
        d.max(eps)
    } else {
        d.min(-eps)
    }
}

#[inline]
fn sign0(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Value of a unary operator.
#[inline]
pub fn unary(sym: Symbol, u: f64, p: &EvalPolicy) -> f64 {
    let raw = match sym {
        Symbol::Sin => u.sin(),
        Symbol::Cos => u.cos(),
        Symbol::Exp => u.min(p.clamp_exp).exp(),
        Symbol::Log => u.abs().max(p.epsilon).ln(),
        Symbol::Sqrt => u.abs().sqrt(),
        other => panic!("`{other}` is not unary"),
    };
    bounded(raw)
}

/// Value and derivative of a unary operator.
#[inline]
pub fn unary_grad(sym: Symbol, u: f64, p: &EvalPolicy) -> (f64, f64) {
    let (raw, d) = match sym {
        Symbol::Sin => (u.sin(), u.cos()),
        Symbol::Cos => (u.cos(), -u.sin()),
        Symbol::Exp => {
            if u < p.clamp_exp {
                let e = u.exp();
                (e, e)
            } else {
                (p.clamp_exp.exp(), 0.0)
            }
        }
        Symbol::Log => {
            let a = u.abs();
            if a > p.epsilon {
                (a.ln(), sign0(u) / a)
            } else {
                (p.epsilon.ln(), 0.0)
            }
        }
        Symbol::Sqrt => {
            let a = u.abs();
            (a.sqrt(), sign0(u) / (2.0 * a.max(p.epsilon).sqrt()))
        }
        other => panic!("`{other}` is not unary"),
    };
    if in_bound(raw) {
        (raw, d)
    } else {
        (bounded(raw), 0.0)
    }
}

/// Value of a binary operator.
#[inline]
pub fn binary(sym: Symbol, a: f64, b: f64, p: &EvalPolicy) -> f64 {
    let raw = match sym {
        Symbol::Add => a + b,
        Symbol::Sub => a - b,
        Symbol::Mul => a * b,
        Symbol::Div => a / protected_denominator(b, p.epsilon),
        other => panic!("`{other}` is not binary"),
    };
    bounded(raw)
}

/// Value and partial derivatives `(value, d/da, d/db)` of a binary operator.
#[inline]
pub fn binary_grad(sym: Symbol, a: f64, b: f64, p: &EvalPolicy) -> (f64, f64, f64) {
    let (raw, da, db) = match sym {
        Symbol::Add => (a + b, 1.0, 1.0),
        Symbol::Sub => (a - b, 1.0, -1.0),
        Symbol::Mul => (a * b, b, a),
        Symbol::Div => {
            let den = protected_denominator(b, p.epsilon);
            let db = if b.abs() > p.epsilon {
                -a / (den * den)
            } else {
                0.0
            };
            (a / den, 1.0 / den, db)
        }
        other => panic!("`{other}` is not binary"),
    };
    if in_bound(raw) {
        (raw, da, db)
    } else {
        (bounded(raw), 0.0, 0.0)
    }
}

/// Applies a node's affine `w * v + b`, bounded.
#[inline]
pub fn affine(w: f64, v: f64, b: f64) -> f64 {
    bounded(w * v + b)
}
