//! Cyclic, fine-tuned, possibly-quantum causal models: observed and
//! post-intervention distributions, higher-order affects relations, causal
//! loop detection, and compatibility of affects relations with embeddings
//! into partially ordered space-times.

pub mod affects;
pub mod cli;
pub mod corpus;
pub mod graph;
pub mod loops;
pub mod model;
pub mod prob;
pub mod spacetime;
