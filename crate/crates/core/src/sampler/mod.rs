//! The MCMC engine.

pub mod aft;
pub mod chain;
pub mod eta;
pub mod moves;

pub use aft::{augment_aft, sample_truncated_t};
pub use chain::{
    mh_step_theta_gamma, run_chain, Chain, ChainStats, ChainTrace, Checkpoint, Model, RunSettings, TraceRecord,
};
pub use eta::{moller_log_ratio, update_eta, EtaOutcome, EtaSettings, MollerTerms};
pub use moves::{propose_move, Direction, Move, MoveKind, MoveProposal, SelectionIndex};
