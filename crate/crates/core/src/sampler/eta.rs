//! Auxiliary-variable update of the MRF parameter η.
//!
//! The auxiliary variable w lives on the gene space with density
//! f(w | η, γ) = q_η̃(w)/Z_η̃ at a fixed reference η̃. Each update first
//! refreshes w exactly from f, then proposes η^p by a reflected Gaussian
//! random walk on [0, η_PT] together with w^p drawn exactly from
//! q_{η^p}/Z_{η^p}, and accepts with the Møller ratio, in which every
//! normalizing constant cancels.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::graph_data::GeneNetwork;
use crate::likelihood::Hyperparameters;
use crate::mrf_sim::cftp_perfect_sample;
use crate::priors::eta_log_prior;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSettings {
    /// Standard deviation of the random-walk proposal.
    pub step: f64,
    /// Reference η̃ of the auxiliary density.
    pub reference: f64,
    pub cftp_max_sweeps: usize,
}

impl EtaSettings {
    /// Step 0.1·η_PT and reference η_PT/2.
    pub fn for_hyperparameters(hp: &Hyperparameters) -> Self {
        Self {
            step: 0.1 * hp.eta_pt,
            reference: 0.5 * hp.eta_pt,
            cftp_max_sweeps: crate::mrf_sim::DEFAULT_CFTP_MAX_SWEEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaOutcome {
    pub eta: f64,
    pub proposed: f64,
    pub accepted: bool,
    /// Perfect simulation did not coalesce; the proposal was rejected.
    pub cftp_failed: bool,
    pub log_ratio: f64,
}

/// Folds `x` into `[0, upper]` by reflection at both ends.
pub fn reflect(x: f64, upper: f64) -> f64 {
    let period = 2.0 * upper;
    let y = x.rem_euclid(period);
    if y > upper {
        period - y
    } else {
        y
    }
}

/// The sufficient statistics entering the Møller ratio. Each `s_*` is the
/// quadratic form xᵀR_θx of the respective configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollerTerms {
    pub eta_old: f64,
    pub eta_new: f64,
    pub reference: f64,
    pub s_gamma: f64,
    pub s_w_old: f64,
    pub s_w_new: f64,
}

/// log H for a symmetric η proposal. The μ·Σ terms of the unnormalized MRF
/// densities cancel between numerator and denominator, leaving
/// (η^p−η^o)·S(γ) + (η̃−η^p)·S(w^p) − (η̃−η^o)·S(w^o) plus the prior ratio.
pub fn moller_log_ratio(t: &MollerTerms, hp: &Hyperparameters) -> f64 {
    let prior = eta_log_prior(t.eta_new, hp) - eta_log_prior(t.eta_old, hp);
    prior + (t.eta_new - t.eta_old) * t.s_gamma + (t.reference - t.eta_new) * t.s_w_new
        - (t.reference - t.eta_old) * t.s_w_old
}

/// The subgraph on genes with at least one neighbor. Isolated genes of the
/// auxiliary variable do not enter the ratio, so w is only simulated here.
pub(crate) fn connected_part(network: &GeneNetwork) -> GeneNetwork {
    let p = network.n_genes();
    let mut map = vec![usize::MAX; p];
    let mut next = 0;
    for j in 0..p {
        if network.degree(j) > 0 {
            map[j] = next;
            next += 1;
        }
    }
    GeneNetwork::from_edges(next, network.edges().map(|(a, b)| (map[a], map[b])))
}

/// One auxiliary-variable Metropolis–Hastings update of η given γ and the
/// active adjacency R_θ.
pub fn update_eta<R: Rng + ?Sized>(
    eta: f64,
    gamma: &[bool],
    network_theta: &GeneNetwork,
    hp: &Hyperparameters,
    settings: &EtaSettings,
    rng: &mut R,
) -> EtaOutcome {
    debug_assert!((0.0..=hp.eta_pt).contains(&eta));
    let walk = Normal::new(0.0, settings.step).expect("positive step");
    let proposed = reflect(eta + walk.sample(rng), hp.eta_pt);
    let s_gamma = network_theta.quadratic_form(gamma);
    let compact = connected_part(network_theta);
    let reject = |cftp_failed| EtaOutcome {
        eta,
        proposed,
        accepted: false,
        cftp_failed,
        log_ratio: f64::NEG_INFINITY,
    };
    let w_old = match cftp_perfect_sample(&compact, hp.mu_mrf, settings.reference, rng, settings.cftp_max_sweeps) {
        Ok(w) => w,
        Err(_) => return reject(true),
    };
    let w_new = match cftp_perfect_sample(&compact, hp.mu_mrf, proposed, rng, settings.cftp_max_sweeps) {
        Ok(w) => w,
        Err(_) => return reject(true),
    };
    let terms = MollerTerms {
        eta_old: eta,
        eta_new: proposed,
        reference: settings.reference,
        s_gamma,
        s_w_old: compact.quadratic_form(&w_old),
        s_w_new: compact.quadratic_form(&w_new),
    };
    let log_ratio = moller_log_ratio(&terms, hp);
    let accepted = rng.random::<f64>().ln() < log_ratio;
    EtaOutcome {
        eta: if accepted { proposed } else { eta },
        proposed,
        accepted,
        cftp_failed: false,
        log_ratio,
    }
}
