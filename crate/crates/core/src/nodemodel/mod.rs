//! Node-level conjugate computations: prior transitions, factor designs,
//! closed-form marginal likelihoods and conditional NIG posteriors.

mod design;
mod hyper;
mod linalg;
mod marginal;
mod state;
mod transition;

pub use design::{Factor, FactorDesign};
pub use hyper::HyperParams;
pub use linalg::Cholesky;
pub use marginal::{marginal_mg, marginal_mt, nig_conditional, NigConditional, NodeModel, StateFit};
pub use state::StateSpace;
pub use transition::{transition_matrix, TransitionMatrix};
