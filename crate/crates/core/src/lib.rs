//! Symbolic regression with a tree of softmax-gated operator nodes.
//!
//! A [`MetaNetwork`] mixes every library operator at each internal node and
//! every input variable at each leaf. Training alternates gradient steps on
//! the affine constants and on the selection logits, periodically collapses
//! the network into an [`Expression`], refines that expression's constants,
//! and rebuilds a network biased toward it.
//!
//! ```
//! use metasymnet::{alternating_fit, benchmarks, Hyperparams};
//!
//! let entry = benchmarks::get_benchmark("Nguyen-8").unwrap();
//! let data = benchmarks::realize(entry, 1);
//! let report = alternating_fit(&data, &Hyperparams::default(), 1).unwrap();
//! assert!(report.evaluation_count >= 1);
//! ```

pub mod benchmarks;
pub mod data;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod metrics;
pub mod network;
pub mod ops;
pub mod runner;
pub mod symbol;
pub mod ted;
pub mod training;

pub use data::Matrix;
pub use error::{Error, Result};
pub use evolution::{extract_expression, rebuild_network, saturate_and_check};
pub use expr::{Expression, Node};
pub use metrics::{is_recovered, ned, r_squared, MetricReport, RSquared};
pub use network::{InitSpec, MetaNetwork, ParamGroup};
pub use ops::EvalPolicy;
pub use symbol::{Symbol, SymbolLibrary};
pub use ted::tree_edit_distance;
pub use training::{
    alternating_fit, loss, refine_constants, FitReport, Hyperparams, LossTerms, Phase,
};

/// Derives an independent seed for task `index` under `master` (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
