//! Prior terms for θ, γ and η, and the joint validity constraints.
//!
//! The MRF prior on γ is exp(μ·Σγ + η·γᵀRγ) with symmetric R, so every edge
//! between two selected genes contributes 2η. The matching full conditional
//! has F = μ + 2η·(selected neighbors).

use std::collections::HashMap;

use statrs::function::beta::ln_beta;

use crate::graph_data::{active_adjacency, EdgeRule, GeneNetwork, ModelState, PathwayMembership};
use crate::latent_scores::selected_genes;
use crate::likelihood::Hyperparameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// A selected pathway with no selected member gene.
    EmptyPathway,
    /// A selected gene none of whose pathways is selected.
    OrphanGene,
    /// Two selected pathways with the same selected-gene set.
    DuplicateSubset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Pathway indices (empty pathway, duplicate pair) or the gene index.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Checks (θ, γ) against the three constraints from scratch.
pub fn check_validity(membership: &PathwayMembership, theta: &[bool], gamma: &[bool]) -> ValidityReport {
    let mut violations = Vec::new();
    let mut subsets: HashMap<Vec<usize>, usize> = HashMap::new();
    for k in (0..theta.len()).filter(|&k| theta[k]) {
        let genes = selected_genes(membership, k, gamma);
        if genes.is_empty() {
            violations.push(Violation {
                kind: ViolationKind::EmptyPathway,
                indices: vec![k],
            });
            continue;
        }
        if let Some(&other) = subsets.get(&genes) {
            violations.push(Violation {
                kind: ViolationKind::DuplicateSubset,
                indices: vec![other, k],
            });
        } else {
            subsets.insert(genes, k);
        }
    }
    for (j, _) in gamma.iter().enumerate().filter(|(_, &g)| g) {
        if !membership.pathways_of(j).iter().any(|&k| theta[k]) {
            violations.push(Violation {
                kind: ViolationKind::OrphanGene,
                indices: vec![j],
            });
        }
    }
    ValidityReport { violations }
}

pub fn check_state_validity(membership: &PathwayMembership, state: &ModelState) -> ValidityReport {
    check_validity(membership, &state.theta, &state.gamma)
}

/// Σ_k [θ_k log φ* + (1−θ_k) log(1−φ*)]
pub fn theta_log_prior(theta: &[bool], phi_star: f64) -> f64 {
    let on = theta.iter().filter(|&&t| t).count() as f64;
    let off = theta.len() as f64 - on;
    on * phi_star.ln() + off * (-phi_star).ln_1p()
}

/// μ·Σγ + η·γᵀRγ
pub fn mrf_log_unnormalized(gamma: &[bool], adjacency: &GeneNetwork, mu: f64, eta: f64) -> f64 {
    let count = gamma.iter().filter(|&&g| g).count() as f64;
    let quad = if eta == 0.0 { 0.0 } else { adjacency.quadratic_form(gamma) };
    mu * count + eta * quad
}

/// F = μ + 2η·Σ_{i∈N_j} γ_i
pub fn mrf_field(gamma: &[bool], j: usize, adjacency: &GeneNetwork, mu: f64, eta: f64) -> f64 {
    let on = adjacency.neighbors(j).iter().filter(|&&i| gamma[i]).count() as f64;
    mu + 2.0 * eta * on
}

/// P(γ_j = 1 | rest) under the MRF.
pub fn mrf_conditional(gamma: &[bool], j: usize, adjacency: &GeneNetwork, mu: f64, eta: f64) -> f64 {
    logistic(mrf_field(gamma, j, adjacency, mu, eta))
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log φ-prior of θ plus the unnormalized MRF term of γ on R_θ, or −∞ for
/// invalid configurations.
pub fn joint_log_prior(
    state: &ModelState,
    membership: &PathwayMembership,
    network: &GeneNetwork,
    hp: &Hyperparameters,
    rule: EdgeRule,
) -> f64 {
    if !check_state_validity(membership, state).valid() {
        return f64::NEG_INFINITY;
    }
    let active = active_adjacency(network, membership, &state.theta, rule);
    theta_log_prior(&state.theta, hp.phi_star) + mrf_log_unnormalized(&state.gamma, &active, hp.mu_mrf, state.eta)
}

/// Log density of η when η/η_PT ~ Beta(c0, d0).
pub fn eta_log_prior(eta: f64, hp: &Hyperparameters) -> f64 {
    if !(0.0..=hp.eta_pt).contains(&eta) {
        return f64::NEG_INFINITY;
    }
    let u = eta / hp.eta_pt;
    let term = |shape: f64, v: f64| if shape == 1.0 { 0.0 } else { (shape - 1.0) * v.ln() };
    term(hp.c0, u) + term(hp.d0, 1.0 - u) - ln_beta(hp.c0, hp.d0) - hp.eta_pt.ln()
}
