//! The fixed candidate library shared by expressions and the meta network.
//!
//! Library order is `[+, -, *, /, sin, cos, exp, log, sqrt, x1, .., xk]`; every
//! selection-logit vector in the crate is indexed by this order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of operator slots preceding the variables.
pub const OPERATOR_COUNT: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Var(usize),
}

impl Symbol {
    pub const OPERATORS: [Symbol; OPERATOR_COUNT] = [
        Symbol::Add,
        Symbol::Sub,
        Symbol::Mul,
        Symbol::Div,
        Symbol::Sin,
        Symbol::Cos,
        Symbol::Exp,
        Symbol::Log,
        Symbol::Sqrt,
    ];

    pub fn arity(self) -> usize {
        match self {
            Symbol::Add | Symbol::Sub | Symbol::Mul | Symbol::Div => 2,
            Symbol::Sin | Symbol::Cos | Symbol::Exp | Symbol::Log | Symbol::Sqrt => 1,
            Symbol::Var(_) => 0,
        }
    }

    pub fn is_binary(self) -> bool {
        self.arity() == 2
    }

    pub fn is_unary(self) -> bool {
        self.arity() == 1
    }

    pub fn is_variable(self) -> bool {
        matches!(self, Symbol::Var(_))
    }

    /// Position in the library ordering.
    pub fn library_index(self) -> usize {
        match self {
            Symbol::Add => 0,
            Symbol::Sub => 1,
            Symbol::Mul => 2,
            Symbol::Div => 3,
            Symbol::Sin => 4,
            Symbol::Cos => 5,
            Symbol::Exp => 6,
            Symbol::Log => 7,
            Symbol::Sqrt => 8,
            Symbol::Var(i) => OPERATOR_COUNT + i,
        }
    }

    /// Token used by the prefix text format.
    pub fn token(self) -> String {
        match self {
            Symbol::Add => "+".into(),
            Symbol::Sub => "-".into(),
            Symbol::Mul => "*".into(),
            Symbol::Div => "/".into(),
            Symbol::Sin => "sin".into(),
            Symbol::Cos => "cos".into(),
            Symbol::Exp => "exp".into(),
            Symbol::Log => "log".into(),
            Symbol::Sqrt => "sqrt".into(),
            Symbol::Var(i) => format!("x{}", i + 1),
        }
    }

    /// Parses an operator or `x<i>` token (1-based variable numbering).
    pub fn from_token(tok: &str, k: usize) -> Result<Symbol> {
        let sym = match tok {
            "+" => Symbol::Add,
            "-" => Symbol::Sub,
            "*" | "×" => Symbol::Mul,
            "/" | "÷" => Symbol::Div,
            "sin" => Symbol::Sin,
            "cos" => Symbol::Cos,
            "exp" => Symbol::Exp,
            "log" => Symbol::Log,
            "sqrt" => Symbol::Sqrt,
            _ => {
                let idx = tok
                    .strip_prefix('x')
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::UnknownToken(tok.to_string()))?;
                if idx > k {
                    return Err(Error::VariableOutOfRange { index: idx, k });
                }
                Symbol::Var(idx - 1)
            }
        };
        Ok(sym)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Ordered candidate list for a task with `k` input variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolLibrary {
    k: usize,
}

impl SymbolLibrary {
    pub fn new(k: usize) -> Self {
        SymbolLibrary { k }
    }

    pub fn num_vars(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        OPERATOR_COUNT + self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbol(&self, index: usize) -> Option<Symbol> {
        if index < OPERATOR_COUNT {
            Some(Symbol::OPERATORS[index])
        } else if index < self.len() {
            Some(Symbol::Var(index - OPERATOR_COUNT))
        } else {
            None
        }
    }

    pub fn index_of(&self, sym: Symbol) -> Option<usize> {
        match sym {
            Symbol::Var(i) if i >= self.k => None,
            s => Some(s.library_index()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.len()).map(move |i| self.symbol(i).expect("index in range"))
    }
}
