//! Random Gaussian embeddings of Euclidean space into finite-dimensional
//! Lorentz sequence spaces: norms, analytic bounds, embedding-dimension
//! formulas, and reproducible Monte Carlo verification.

pub mod analytic;
pub mod embedding;
pub mod error;
pub mod ledger;
pub mod montecarlo;
pub mod norms;
pub mod regime;
pub mod sharp;
pub mod stream;

pub use error::{Error, Result};
pub use ledger::ConstantLedger;
pub use norms::{LorentzParams, PowerWeights, WeightSequence};
pub use stream::RandomStream;
