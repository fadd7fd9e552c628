//! Node embedding methods and an evaluation harness for node classification.
//!
//! The crate covers the full pipeline: graph loading, four embedding
//! methods (random-walk skip-gram, edge-sampling proximity, powered
//! transition factorization, and a denoising-autoencoder variant),
//! two downstream classifiers, stratified evaluation with micro/macro F1,
//! and randomized hyperparameter search.

pub mod classify;
pub mod dngr;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod grarep;
pub mod line;
pub mod node2vec;
pub mod numerics;
pub mod search;
pub mod seeds;
mod sgns;
#[cfg(test)]
pub(crate) mod testutil;

pub use embedding::EmbeddingMatrix;
pub use error::{Error, ErrorKind, Result};
pub use sgns::TrainMode;

/// Finite-difference verification hooks. Unit tests and the acceptance
/// suite call the same functions so the checks cannot drift apart.
#[doc(hidden)]
pub mod checks {
    pub use crate::classify::logreg::logreg_gradient_check;
    pub use crate::dngr::autoencoder_gradient_check;
    pub use crate::line::{line_first_order_gradient_check, line_second_order_gradient_check};
    pub use crate::sgns::sgns_pair_gradient_check;
}
