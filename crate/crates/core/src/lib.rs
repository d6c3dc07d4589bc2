//! Bayesian joint selection of pathways and genes.
//!
//! Pathways enter a linear (or accelerated-failure-time) regression through
//! the first PLS component of their selected genes. Pathway indicators carry
//! independent Bernoulli priors, gene indicators a Markov random field prior
//! over a gene network, and the MRF interaction parameter is updated with an
//! auxiliary-variable Metropolis–Hastings step driven by perfect simulation.

pub mod error;
pub mod inference;
pub mod graph_data;
pub mod latent_scores;
pub mod likelihood;
pub mod mrf_sim;
pub mod priors;
pub mod sampler;
pub mod simgen;

pub use error::{Error, Result};
