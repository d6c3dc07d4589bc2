//! The MCMC chain: (θ, γ) Metropolis–Hastings, η updates and AFT
//! augmentation, with trace recording and checkpointing.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fixedbitset::FixedBitSet;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::aft::augment_aft;
use super::eta::{update_eta, EtaSettings};
use super::moves::{apply_to_state, draw_move, Move, MoveCounts, MoveKind, SelectionIndex};
use crate::error::{Error, Result};
use crate::graph_data::{active_adjacency, Dataset, EdgeRule, GeneNetwork, ModelState, OutcomeKind, PathwayMembership};
use crate::latent_scores::{build_scores_for, ScoreMatrix};
use crate::likelihood::{marginal_log_likelihood, Hyperparameters};
use crate::mrf_sim::DEFAULT_CFTP_MAX_SWEEPS;
use crate::priors::{eta_log_prior, theta_log_prior};

/// Run settings for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Update η every this many iterations; 0 keeps η fixed.
    pub eta_every: usize,
    /// Random-walk step as a fraction of η_PT.
    pub eta_step_fraction: f64,
    /// Reference η̃ of the auxiliary density; η_PT/2 when unset.
    pub eta_reference: Option<f64>,
    /// Starting η; η̃ when unset.
    pub initial_eta: Option<f64>,
    /// Pathways (each with one gene) in the random starting state.
    pub initial_pathways: usize,
    pub edge_rule: EdgeRule,
    pub cftp_max_sweeps: usize,
}

impl Default for RunSettings {
    /// 300,000 iterations with 50,000 burn-in.
    fn default() -> Self {
        Self {
            iterations: 300_000,
            burn_in: 50_000,
            thin: 1,
            eta_every: 1,
            eta_step_fraction: 0.1,
            eta_reference: None,
            initial_eta: None,
            initial_pathways: 2,
            edge_rule: EdgeRule::Union,
            cftp_max_sweeps: DEFAULT_CFTP_MAX_SWEEPS,
        }
    }
}

impl RunSettings {
    pub fn validate(&self, hp: &Hyperparameters) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(Error::InvalidConfig(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if !(self.eta_step_fraction > 0.0) {
            return Err(Error::InvalidConfig("eta step must be positive".into()));
        }
        for (name, v) in [("eta reference", self.eta_reference), ("initial eta", self.initial_eta)] {
            if let Some(v) = v {
                if !(0.0..=hp.eta_pt).contains(&v) {
                    return Err(Error::InvalidConfig(format!("{name} {v} outside [0, eta_pt]")));
                }
            }
        }
        Ok(())
    }

    pub fn eta_settings(&self, hp: &Hyperparameters) -> EtaSettings {
        EtaSettings {
            step: self.eta_step_fraction * hp.eta_pt,
            reference: self.eta_reference.unwrap_or(0.5 * hp.eta_pt),
            cftp_max_sweeps: self.cftp_max_sweeps,
        }
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    pub theta: FixedBitSet,
    pub gamma: FixedBitSet,
    pub eta: f64,
    pub log_posterior: f64,
    pub k_theta: usize,
    pub n_selected_genes: usize,
}

/// Recorded iterations of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub records: Vec<TraceRecord>,
    /// Iterations at or below this number are burn-in.
    pub burn_in: usize,
    pub seed: u64,
}

impl ChainTrace {
    pub fn post_burn_in(&self) -> &[TraceRecord] {
        let start = self.records.partition_point(|r| r.iteration <= self.burn_in);
        &self.records[start..]
    }
}

/// Acceptance bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChainStats {
    pub moves_proposed: u64,
    pub moves_accepted: u64,
    pub eta_proposed: u64,
    pub eta_accepted: u64,
    pub cftp_failures: u64,
}

impl ChainStats {
    pub fn eta_acceptance(&self) -> f64 {
        self.eta_accepted as f64 / self.eta_proposed.max(1) as f64
    }

    pub fn move_acceptance(&self) -> f64 {
        self.moves_accepted as f64 / self.moves_proposed.max(1) as f64
    }
}

/// Hex encoding of an indicator vector: digit `i` holds indices 4i..4i+3,
/// lowest index in the least significant bit.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let mut s = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let v = chunk
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
        write!(s, "{v:x}").expect("write to string");
    }
    s
}

pub fn hex_to_bits(hex: &str, len: usize) -> Result<Vec<bool>> {
    if hex.len() != len.div_ceil(4) {
        return Err(Error::InvalidState(format!("hex string `{hex}` does not encode {len} indicators")));
    }
    let mut out = Vec::with_capacity(len);
    for c in hex.chars() {
        let v = c
            .to_digit(16)
            .ok_or_else(|| Error::InvalidState(format!("bad hex digit `{c}`")))?;
        for i in 0..4 {
            if out.len() < len {
                out.push(v >> i & 1 == 1);
            } else if v >> i & 1 == 1 {
                return Err(Error::InvalidState(format!("hex string `{hex}` sets bits past {len}")));
            }
        }
    }
    Ok(out)
}

pub fn bitset_from(bits: &[bool]) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(bits.len());
    for (i, &b) in bits.iter().enumerate() {
        set.set(i, b);
    }
    set
}

pub fn bools_from(set: &FixedBitSet) -> Vec<bool> {
    (0..set.len()).map(|i| set.contains(i)).collect()
}

/// γᵀR_θγ without materializing R_θ.
pub fn active_quadratic_form(
    network: &GeneNetwork,
    membership: &PathwayMembership,
    theta: &[bool],
    gamma: &[bool],
    rule: EdgeRule,
) -> f64 {
    let covered = |j: usize| membership.pathways_of(j).iter().any(|&k| theta[k]);
    let mut twice = 0usize;
    for j in (0..gamma.len()).filter(|&j| gamma[j]) {
        for &i in network.neighbors(j) {
            if !gamma[i] {
                continue;
            }
            let keep = match rule {
                EdgeRule::Union => covered(j) && covered(i),
                EdgeRule::SharedPathway => membership
                    .pathways_of(j)
                    .iter()
                    .any(|&k| theta[k] && membership.is_member(k, i)),
            };
            twice += keep as usize;
        }
    }
    twice as f64
}

/// Unnormalized log target of (θ, γ) at fixed η, split into its parts.
#[derive(Debug, Clone)]
struct Evaluation {
    scores: ScoreMatrix,
    log_lik: f64,
    log_prior: f64,
}

/// Immutable inputs shared by every step of a chain.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub data: &'a Dataset,
    pub membership: &'a PathwayMembership,
    pub network: &'a GeneNetwork,
    pub hp: &'a Hyperparameters,
    pub edge_rule: EdgeRule,
}

impl Model<'_> {
    fn evaluate(&self, theta: &[bool], gamma: &[bool], eta: f64, response: &DVector<f64>) -> Result<Evaluation> {
        let scores = build_scores_for(&self.data.expression, response, self.membership, theta, gamma)?;
        let log_lik = marginal_log_likelihood(response, &scores.scores, self.hp)?;
        let n_genes = gamma.iter().filter(|&&g| g).count() as f64;
        let quad = if eta == 0.0 {
            0.0
        } else {
            active_quadratic_form(self.network, self.membership, theta, gamma, self.edge_rule)
        };
        let log_prior = theta_log_prior(theta, self.hp.phi_star) + self.hp.mu_mrf * n_genes + eta * quad;
        Ok(Evaluation {
            scores,
            log_lik,
            log_prior,
        })
    }

    /// log f(Y | T) + log p(θ, γ | η) up to a constant, −∞ when invalid.
    pub fn log_target(&self, state: &ModelState) -> Result<f64> {
        if !crate::priors::check_state_validity(self.membership, state).valid() {
            return Ok(f64::NEG_INFINITY);
        }
        let e = self.evaluate(&state.theta, &state.gamma, state.eta, &state.response(self.data))?;
        Ok(e.log_lik + e.log_prior)
    }
}

/// One Metropolis–Hastings update of (θ, γ) at fixed η from a valid state.
/// Returns the new state and whether the move was accepted.
pub fn mh_step_theta_gamma<R: Rng + ?Sized>(
    state: &ModelState,
    model: &Model<'_>,
    rng: &mut R,
) -> Result<(ModelState, bool)> {
    let index = SelectionIndex::from_state(model.membership, state);
    let counts = index.move_counts(model.membership);
    let response = state.response(model.data).into_owned();
    let current = model.evaluate(&state.theta, &state.gamma, state.eta, &response)?;
    let (proposal, _, _) = draw_move(&index, &counts, model.membership, rng);
    let mut next = state.clone();
    apply_to_state(&mut next, &proposal.as_move());
    let cand = model.evaluate(&next.theta, &next.gamma, next.eta, &response)?;
    let log_alpha = cand.log_lik + cand.log_prior - current.log_lik - current.log_prior + proposal.log_proposal_ratio;
    if rng.random::<f64>().ln() < log_alpha {
        Ok((next, true))
    } else {
        Ok((state.clone(), false))
    }
}

/// A running chain.
pub struct Chain<'a> {
    model: Model<'a>,
    settings: RunSettings,
    eta_settings: EtaSettings,
    seed: u64,
    rng: ChaCha8Rng,
    iteration: usize,
    state: ModelState,
    index: SelectionIndex,
    counts: MoveCounts,
    current: Evaluation,
    stats: ChainStats,
}

impl<'a> Chain<'a> {
    /// Starts a chain from a random valid state built from
    /// `settings.initial_pathways` pathway-and-gene additions.
    pub fn new(model: Model<'a>, settings: RunSettings, seed: u64) -> Result<Self> {
        model.hp.validate()?;
        settings.validate(model.hp)?;
        check_inputs(&model)?;
        let eta_settings = settings.eta_settings(model.hp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = model.membership.n_pathways();
        let p = model.membership.n_genes();
        let mut index = SelectionIndex::new(model.membership, &vec![false; k], &vec![false; p]);
        for _ in 0..settings.initial_pathways.min(k) {
            let cands = index.candidates(model.membership, MoveKind::Both, super::moves::Direction::Add);
            if cands.is_empty() {
                break;
            }
            let mv: Move = cands[rng.random_range(0..cands.len())];
            index.apply(model.membership, &mv);
        }
        let eta = settings.initial_eta.unwrap_or(eta_settings.reference);
        let z_latent = (model.data.outcome == OutcomeKind::Survival).then(|| model.data.response.as_slice().to_vec());
        let state = ModelState {
            theta: index.theta().to_vec(),
            gamma: index.gamma().to_vec(),
            eta,
            z_latent,
        };
        Self::assemble(model, settings, seed, rng, 0, state, ChainStats::default())
    }

    fn assemble(
        model: Model<'a>,
        settings: RunSettings,
        seed: u64,
        rng: ChaCha8Rng,
        iteration: usize,
        state: ModelState,
        stats: ChainStats,
    ) -> Result<Self> {
        let report = crate::priors::check_state_validity(model.membership, &state);
        if !report.valid() {
            return Err(Error::InvalidState(format!("{:?}", report.violations)));
        }
        let index = SelectionIndex::from_state(model.membership, &state);
        let counts = index.move_counts(model.membership);
        let current = model.evaluate(&state.theta, &state.gamma, state.eta, &state.response(model.data))?;
        let eta_settings = settings.eta_settings(model.hp);
        Ok(Self {
            model,
            settings,
            eta_settings,
            seed,
            rng,
            iteration,
            state,
            index,
            counts,
            current,
            stats,
        })
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn settings(&self) -> &RunSettings {
        &self.settings
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// log f(Y|T) + log p(θ,γ|η) + log p(η), without normalizing constants.
    pub fn log_posterior(&self) -> f64 {
        self.current.log_lik + self.current.log_prior + eta_log_prior(self.state.eta, self.model.hp)
    }

    fn response(&self) -> DVector<f64> {
        self.state.response(self.model.data).into_owned()
    }

    fn step_theta_gamma(&mut self) -> Result<()> {
        let membership = self.model.membership;
        let (proposal, next_index, next_counts) = draw_move(&self.index, &self.counts, membership, &mut self.rng);
        let cand = self
            .model
            .evaluate(next_index.theta(), next_index.gamma(), self.state.eta, &self.response())?;
        let log_alpha = cand.log_lik + cand.log_prior - self.current.log_lik - self.current.log_prior
            + proposal.log_proposal_ratio;
        self.stats.moves_proposed += 1;
        if self.rng.random::<f64>().ln() < log_alpha {
            apply_to_state(&mut self.state, &proposal.as_move());
            self.index = next_index;
            self.counts = next_counts;
            self.current = cand;
            self.stats.moves_accepted += 1;
        }
        Ok(())
    }

    fn step_eta(&mut self) {
        let active = active_adjacency(self.model.network, self.model.membership, &self.state.theta, self.settings.edge_rule);
        let outcome = update_eta(
            self.state.eta,
            &self.state.gamma,
            &active,
            self.model.hp,
            &self.eta_settings,
            &mut self.rng,
        );
        self.stats.eta_proposed += 1;
        if outcome.cftp_failed {
            self.stats.cftp_failures += 1;
            log::warn!("perfect simulation failed at eta = {}; proposal rejected", outcome.proposed);
        }
        if outcome.accepted {
            self.stats.eta_accepted += 1;
            let quad = active.quadratic_form(&self.state.gamma);
            self.current.log_prior += (outcome.eta - self.state.eta) * quad;
            self.state.eta = outcome.eta;
        }
    }

    fn step_latent(&mut self) -> Result<()> {
        let Some(z) = &self.state.z_latent else {
            return Ok(());
        };
        let z = augment_aft(z, self.model.data, &self.current.scores.scores, self.model.hp, &mut self.rng)?;
        self.state.z_latent = Some(z);
        self.current = self
            .model
            .evaluate(&self.state.theta, &self.state.gamma, self.state.eta, &self.response())?;
        Ok(())
    }

    /// One full iteration.
    pub fn step(&mut self) -> Result<()> {
        self.step_theta_gamma()?;
        self.iteration += 1;
        if self.settings.eta_every > 0 && self.iteration % self.settings.eta_every == 0 {
            self.step_eta();
        }
        self.step_latent()
    }

    pub fn record(&self) -> TraceRecord {
        TraceRecord {
            iteration: self.iteration,
            theta: bitset_from(&self.state.theta),
            gamma: bitset_from(&self.state.gamma),
            eta: self.state.eta,
            log_posterior: self.log_posterior(),
            k_theta: self.state.n_pathways_selected(),
            n_selected_genes: self.state.n_genes_selected(),
        }
    }

    /// Runs until `settings.iterations`, passing every kept record to `sink`.
    pub fn run_with<F: FnMut(&TraceRecord) -> Result<()>>(&mut self, mut sink: F) -> Result<()> {
        while self.iteration < self.settings.iterations {
            self.step()?;
            if self.iteration % self.settings.thin == 0 {
                sink(&self.record())?;
            }
        }
        Ok(())
    }

    /// Runs to completion and collects the trace.
    pub fn run(&mut self) -> Result<ChainTrace> {
        let mut records = Vec::with_capacity((self.settings.iterations - self.iteration) / self.settings.thin);
        self.run_with(|r| {
            records.push(r.clone());
            Ok(())
        })?;
        Ok(ChainTrace {
            records,
            burn_in: self.settings.burn_in,
            seed: self.seed,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            seed: self.seed,
            word_pos: self.rng.get_word_pos(),
            theta: self.state.theta.clone(),
            gamma: self.state.gamma.clone(),
            eta: self.state.eta,
            z_latent: self.state.z_latent.clone(),
            stats: self.stats,
        }
    }

    /// Resumes a chain exactly where `checkpoint` was taken.
    pub fn resume(model: Model<'a>, settings: RunSettings, checkpoint: &Checkpoint) -> Result<Self> {
        model.hp.validate()?;
        settings.validate(model.hp)?;
        check_inputs(&model)?;
        if checkpoint.theta.len() != model.membership.n_pathways() || checkpoint.gamma.len() != model.membership.n_genes() {
            return Err(Error::Checkpoint("checkpoint does not match the membership dimensions".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(checkpoint.seed);
        rng.set_word_pos(checkpoint.word_pos);
        let state = ModelState {
            theta: checkpoint.theta.clone(),
            gamma: checkpoint.gamma.clone(),
            eta: checkpoint.eta,
            z_latent: checkpoint.z_latent.clone(),
        };
        Self::assemble(model, settings, checkpoint.seed, rng, checkpoint.iteration, state, checkpoint.stats)
    }
}

fn check_inputs(model: &Model<'_>) -> Result<()> {
    let p = model.membership.n_genes();
    if model.data.n_genes() != p || model.network.n_genes() != p {
        return Err(Error::DimensionMismatch(format!(
            "membership has {p} genes, expression {}, network {}",
            model.data.n_genes(),
            model.network.n_genes()
        )));
    }
    Ok(())
}

/// Runs one chain from a random valid start.
pub fn run_chain(model: Model<'_>, settings: RunSettings, seed: u64) -> Result<ChainTrace> {
    Chain::new(model, settings, seed)?.run()
}

const CHECKPOINT_MAGIC: &str = "pathsel-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a chain bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub seed: u64,
    /// Position of the ChaCha8 stream seeded with `seed`.
    pub word_pos: u128,
    pub theta: Vec<bool>,
    pub gamma: Vec<bool>,
    pub eta: f64,
    pub z_latent: Option<Vec<f64>>,
    pub stats: ChainStats,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}");
        let _ = writeln!(s, "iteration {}", self.iteration);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "word_pos {}", self.word_pos);
        let _ = writeln!(s, "n_pathways {}", self.theta.len());
        let _ = writeln!(s, "n_genes {}", self.gamma.len());
        let _ = writeln!(s, "theta {}", bits_to_hex(&self.theta));
        let _ = writeln!(s, "gamma {}", bits_to_hex(&self.gamma));
        let _ = writeln!(s, "eta {}", self.eta);
        match &self.z_latent {
            Some(z) => {
                let joined: Vec<String> = z.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "z {}", joined.join(" "));
            }
            None => {
                let _ = writeln!(s, "z -");
            }
        }
        let st = &self.stats;
        let _ = writeln!(
            s,
            "stats {} {} {} {} {}",
            st.moves_proposed, st.moves_accepted, st.eta_proposed, st.eta_accepted, st.cftp_failures
        );
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
        let expected = format!("{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}");
        if header.trim() != expected {
            return Err(bad(&format!("unsupported checkpoint header `{header}`")));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            if let Some((key, value)) = line.split_once(' ') {
                fields.insert(key.to_string(), value.trim().to_string());
            }
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| bad(&format!("missing field `{k}`")));
        fn parse<T: std::str::FromStr>(v: &str, k: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Checkpoint(format!("bad value for `{k}`")))
        }
        let n_pathways: usize = parse(get("n_pathways")?, "n_pathways")?;
        let n_genes: usize = parse(get("n_genes")?, "n_genes")?;
        let z = get("z")?;
        let z_latent = if z == "-" {
            None
        } else {
            Some(
                z.split_whitespace()
                    .map(|v| parse::<f64>(v, "z"))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        let stats: Vec<u64> = get("stats")?
            .split_whitespace()
            .map(|v| parse(v, "stats"))
            .collect::<Result<_>>()?;
        if stats.len() != 5 {
            return Err(bad("stats needs five counters"));
        }
        Ok(Self {
            iteration: parse(get("iteration")?, "iteration")?,
            seed: parse(get("seed")?, "seed")?,
            word_pos: parse(get("word_pos")?, "word_pos")?,
            theta: hex_to_bits(get("theta")?, n_pathways)?,
            gamma: hex_to_bits(get("gamma")?, n_genes)?,
            eta: parse(get("eta")?, "eta")?,
            z_latent,
            stats: ChainStats {
                moves_proposed: stats[0],
                moves_accepted: stats[1],
                eta_proposed: stats[2],
                eta_accepted: stats[3],
                cftp_failures: stats[4],
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Header of the streamed trace file.
pub const TRACE_HEADER: &str = "iteration,k_theta,n_genes,eta,log_posterior,theta_hex,gamma_hex";

pub fn write_trace_record<W: std::io::Write>(out: &mut W, r: &TraceRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        r.iteration,
        r.k_theta,
        r.n_selected_genes,
        r.eta,
        r.log_posterior,
        bits_to_hex(&bools_from(&r.theta)),
        bits_to_hex(&bools_from(&r.gamma))
    )
}

/// Reads a trace written with [`TRACE_HEADER`] columns.
pub fn read_trace(path: impl AsRef<Path>, n_pathways: usize, n_genes: usize, burn_in: usize, seed: u64) -> Result<ChainTrace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != TRACE_HEADER {
                return Err(Error::malformed(path, 1, "unexpected trace header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::malformed(path, lineno + 1, "expected 7 fields"));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| Error::malformed(path, lineno + 1, format!("bad number `{}`", f[i])))
        };
        let theta = hex_to_bits(f[5], n_pathways)?;
        let gamma = hex_to_bits(f[6], n_genes)?;
        records.push(TraceRecord {
            iteration: num(0)? as usize,
            k_theta: num(1)? as usize,
            n_selected_genes: num(2)? as usize,
            eta: num(3)?,
            log_posterior: num(4)?,
            theta: bitset_from(&theta),
            gamma: bitset_from(&gamma),
        });
    }
    Ok(ChainTrace { records, burn_in, seed })
}

/// Writes a whole trace.
pub fn write_trace(path: impl AsRef<Path>, trace: &ChainTrace) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{TRACE_HEADER}").map_err(io)?;
    for r in &trace.records {
        write_trace_record(&mut out, r).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let bits = vec![true, false, true, true, false, false, false, true, true];
        let hex = bits_to_hex(&bits);
        assert_eq!(hex, "d81");
        assert_eq!(hex_to_bits(&hex, bits.len()).unwrap(), bits);
        assert!(hex_to_bits("d83", 9).is_err());
        assert!(hex_to_bits("d8", 9).is_err());
    }

    #[test]
    fn checkpoint_text_round_trip() {
        let c = Checkpoint {
            iteration: 17,
            seed: 99,
            word_pos: 123_456_789_012_345,
            theta: vec![true, false, true],
            gamma: vec![false, true, true, false, true],
            eta: 0.0412345678901234,
            z_latent: Some(vec![0.1, -2.5e-7, 3.0]),
            stats: ChainStats {
                moves_proposed: 17,
                moves_accepted: 5,
                eta_proposed: 17,
                eta_accepted: 9,
                cftp_failures: 0,
            },
        };
        assert_eq!(Checkpoint::from_text(&c.to_text()).unwrap(), c);
        let bumped = c.to_text().replace("v1", "v9");
        assert!(Checkpoint::from_text(&bumped).is_err());
    }

    #[test]
    fn settings_validation() {
        let hp = Hyperparameters::default();
        let s = RunSettings {
            iterations: 10,
            burn_in: 10,
            ..RunSettings::default()
        };
        assert!(s.validate(&hp).is_err());
        assert!(RunSettings::default().validate(&hp).is_ok());
    }
}
