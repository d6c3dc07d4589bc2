//! Proposal moves over (θ, γ).
//!
//! A move kind is drawn uniformly among the kinds that have at least one
//! feasible move, a direction uniformly among that kind's feasible
//! directions, and the pathway/gene uniformly among the candidates whose
//! result is a valid configuration. Every candidate's reverse move is a
//! candidate of the same kind in the resulting state, so the proposal ratio
//! only needs the candidate-set sizes on both sides.

use rand::Rng;

use crate::graph_data::{ModelState, PathwayMembership};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    /// Add a pathway together with one of its genes, or remove both.
    Both,
    GeneOnly,
    PathwayOnly,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Both, MoveKind::GeneOnly, MoveKind::PathwayOnly];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Add,
    Remove,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::Add => Direction::Remove,
            Direction::Remove => Direction::Add,
        }
    }
}

/// A concrete change to (θ, γ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub direction: Direction,
    pub pathway: Option<usize>,
    pub gene: Option<usize>,
}

impl Move {
    pub fn reverse(self) -> Self {
        Self {
            direction: self.direction.reverse(),
            ..self
        }
    }
}

/// A drawn move with log q(old|new) − log q(new|old).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveProposal {
    pub kind: MoveKind,
    pub direction: Direction,
    pub pathway_index: Option<usize>,
    pub gene_index: Option<usize>,
    pub log_proposal_ratio: f64,
}

impl MoveProposal {
    pub fn as_move(&self) -> Move {
        Move {
            kind: self.kind,
            direction: self.direction,
            pathway: self.pathway_index,
            gene: self.gene_index,
        }
    }
}

fn gene_key(j: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = (j as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// (θ, γ) with per-pathway selected-gene counts and subset hashes and
/// per-gene pathway coverage, kept in step so that the validity of a
/// candidate move can be decided from the affected entries only.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionIndex {
    theta: Vec<bool>,
    gamma: Vec<bool>,
    /// p_kγ for every pathway.
    count: Vec<u32>,
    /// Sum of gene keys over each pathway's selected genes.
    hash: Vec<u64>,
    /// Number of selected pathways containing each gene.
    cover: Vec<u32>,
    selected: Vec<usize>,
}

/// Number of candidates per (kind, direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoveCounts([usize; 6]);

fn slot(kind: MoveKind, dir: Direction) -> usize {
    let k = match kind {
        MoveKind::Both => 0,
        MoveKind::GeneOnly => 1,
        MoveKind::PathwayOnly => 2,
    };
    2 * k + matches!(dir, Direction::Remove) as usize
}

impl MoveCounts {
    pub fn get(&self, kind: MoveKind, dir: Direction) -> usize {
        self.0[slot(kind, dir)]
    }

    fn kind_feasible(&self, kind: MoveKind) -> bool {
        self.get(kind, Direction::Add) + self.get(kind, Direction::Remove) > 0
    }

    pub fn feasible_kinds(&self) -> Vec<MoveKind> {
        MoveKind::ALL.into_iter().filter(|&k| self.kind_feasible(k)).collect()
    }

    pub fn feasible_directions(&self, kind: MoveKind) -> Vec<Direction> {
        [Direction::Add, Direction::Remove]
            .into_iter()
            .filter(|&d| self.get(kind, d) > 0)
            .collect()
    }

    /// log q of drawing one particular (kind, direction) candidate.
    pub fn log_q(&self, kind: MoveKind, dir: Direction) -> f64 {
        let nk = self.feasible_kinds().len() as f64;
        let nd = self.feasible_directions(kind).len() as f64;
        let nc = self.get(kind, dir) as f64;
        -(nk.ln() + nd.ln() + nc.ln())
    }
}

impl SelectionIndex {
    pub fn new(membership: &PathwayMembership, theta: &[bool], gamma: &[bool]) -> Self {
        let k_total = membership.n_pathways();
        let p = membership.n_genes();
        assert_eq!(theta.len(), k_total);
        assert_eq!(gamma.len(), p);
        let mut count = vec![0u32; k_total];
        let mut hash = vec![0u64; k_total];
        for k in 0..k_total {
            for &j in membership.genes_of(k) {
                if gamma[j] {
                    count[k] += 1;
                    hash[k] = hash[k].wrapping_add(gene_key(j));
                }
            }
        }
        let cover = (0..p)
            .map(|j| membership.pathways_of(j).iter().filter(|&&k| theta[k]).count() as u32)
            .collect();
        Self {
            theta: theta.to_vec(),
            gamma: gamma.to_vec(),
            count,
            hash,
            cover,
            selected: (0..k_total).filter(|&k| theta[k]).collect(),
        }
    }

    pub fn from_state(membership: &PathwayMembership, state: &ModelState) -> Self {
        Self::new(membership, &state.theta, &state.gamma)
    }

    pub fn theta(&self) -> &[bool] {
        &self.theta
    }

    pub fn gamma(&self) -> &[bool] {
        &self.gamma
    }

    fn toggles(mv: &Move) -> (Option<(usize, bool)>, Option<(usize, bool)>) {
        let on = mv.direction == Direction::Add;
        let pw = match mv.kind {
            MoveKind::Both | MoveKind::PathwayOnly => Some((mv.pathway.expect("pathway index"), on)),
            MoveKind::GeneOnly => None,
        };
        let gene = match mv.kind {
            MoveKind::Both | MoveKind::GeneOnly => Some((mv.gene.expect("gene index"), on)),
            MoveKind::PathwayOnly => None,
        };
        (pw, gene)
    }

    /// Whether `mv` applies to the current state (the toggled indicators
    /// are in the opposite state, a pathway-and-gene move names a member
    /// gene) and leads to a valid configuration.
    pub fn is_feasible(&self, membership: &PathwayMembership, mv: &Move) -> bool {
        let (pw, gene) = Self::toggles(mv);
        if let Some((k, on)) = pw {
            if self.theta[k] == on {
                return false;
            }
        }
        if let Some((j, on)) = gene {
            if self.gamma[j] == on {
                return false;
            }
        }
        if let (Some((k, _)), Some((j, _))) = (pw, gene) {
            if !membership.is_member(k, j) {
                return false;
            }
        }

        let theta_after = |k: usize| match pw {
            Some((kk, on)) if kk == k => on,
            _ => self.theta[k],
        };
        let gamma_after = |j: usize| match gene {
            Some((jj, on)) if jj == j => on,
            _ => self.gamma[j],
        };
        let count_after = |k: usize| -> u32 {
            match gene {
                Some((j, on)) if membership.is_member(k, j) => {
                    if on {
                        self.count[k] + 1
                    } else {
                        self.count[k] - 1
                    }
                }
                _ => self.count[k],
            }
        };
        let hash_after = |k: usize| -> u64 {
            match gene {
                Some((j, on)) if membership.is_member(k, j) => {
                    if on {
                        self.hash[k].wrapping_add(gene_key(j))
                    } else {
                        self.hash[k].wrapping_sub(gene_key(j))
                    }
                }
                _ => self.hash[k],
            }
        };
        let cover_after = |i: usize| -> u32 {
            match pw {
                Some((k, on)) if membership.is_member(k, i) => {
                    if on {
                        self.cover[i] + 1
                    } else {
                        self.cover[i] - 1
                    }
                }
                _ => self.cover[i],
            }
        };

        // Pathways whose selected-gene subset changes while selected, or
        // that become selected.
        let mut changed: Vec<usize> = Vec::new();
        if let Some((k, true)) = pw {
            changed.push(k);
        }
        if let Some((j, _)) = gene {
            for &k in membership.pathways_of(j) {
                if theta_after(k) && !changed.contains(&k) {
                    changed.push(k);
                }
            }
        }

        // Empty pathways.
        if changed.iter().any(|&k| count_after(k) == 0) {
            return false;
        }
        // Orphan genes.
        if let Some((j, true)) = gene {
            if cover_after(j) == 0 {
                return false;
            }
        }
        if let Some((k, false)) = pw {
            for &i in membership.genes_of(k) {
                if gamma_after(i) && cover_after(i) == 0 {
                    return false;
                }
            }
        }
        // Duplicate subsets.
        if changed.is_empty() {
            return true;
        }
        let mut after: Vec<usize> = self
            .selected
            .iter()
            .copied()
            .filter(|&k| theta_after(k))
            .collect();
        if let Some((k, true)) = pw {
            after.push(k);
        }
        let subset_after = |k: usize| -> Vec<usize> {
            membership
                .genes_of(k)
                .iter()
                .copied()
                .filter(|&i| gamma_after(i))
                .collect()
        };
        for &a in &changed {
            let (ca, ha) = (count_after(a), hash_after(a));
            for &b in &after {
                if b == a || count_after(b) != ca || hash_after(b) != ha {
                    continue;
                }
                if subset_after(a) == subset_after(b) {
                    return false;
                }
            }
        }
        true
    }

    /// Applies a feasible move.
    pub fn apply(&mut self, membership: &PathwayMembership, mv: &Move) {
        debug_assert!(self.is_feasible(membership, mv), "applying infeasible move {mv:?}");
        let (pw, gene) = Self::toggles(mv);
        if let Some((j, on)) = gene {
            self.gamma[j] = on;
            for &k in membership.pathways_of(j) {
                if on {
                    self.count[k] += 1;
                    self.hash[k] = self.hash[k].wrapping_add(gene_key(j));
                } else {
                    self.count[k] -= 1;
                    self.hash[k] = self.hash[k].wrapping_sub(gene_key(j));
                }
            }
        }
        if let Some((k, on)) = pw {
            self.theta[k] = on;
            for &i in membership.genes_of(k) {
                if on {
                    self.cover[i] += 1;
                } else {
                    self.cover[i] -= 1;
                }
            }
            if on {
                let pos = self.selected.binary_search(&k).unwrap_err();
                self.selected.insert(pos, k);
            } else {
                let pos = self.selected.binary_search(&k).expect("selected pathway");
                self.selected.remove(pos);
            }
        }
    }

    fn for_each_structural<F: FnMut(Move)>(&self, membership: &PathwayMembership, kind: MoveKind, dir: Direction, mut f: F) {
        let mk = |pathway, gene| Move {
            kind,
            direction: dir,
            pathway,
            gene,
        };
        match (kind, dir) {
            (MoveKind::Both, Direction::Add) => {
                for k in (0..self.theta.len()).filter(|&k| !self.theta[k]) {
                    for &j in membership.genes_of(k) {
                        if !self.gamma[j] {
                            f(mk(Some(k), Some(j)));
                        }
                    }
                }
            }
            (MoveKind::Both, Direction::Remove) => {
                for &k in &self.selected {
                    for &j in membership.genes_of(k) {
                        if self.gamma[j] {
                            f(mk(Some(k), Some(j)));
                        }
                    }
                }
            }
            (MoveKind::GeneOnly, Direction::Add) => {
                for j in 0..self.gamma.len() {
                    if !self.gamma[j] && self.cover[j] > 0 {
                        f(mk(None, Some(j)));
                    }
                }
            }
            (MoveKind::GeneOnly, Direction::Remove) => {
                for j in 0..self.gamma.len() {
                    if self.gamma[j] {
                        f(mk(None, Some(j)));
                    }
                }
            }
            (MoveKind::PathwayOnly, Direction::Add) => {
                for k in 0..self.theta.len() {
                    if !self.theta[k] && self.count[k] > 0 {
                        f(mk(Some(k), None));
                    }
                }
            }
            (MoveKind::PathwayOnly, Direction::Remove) => {
                for &k in &self.selected {
                    f(mk(Some(k), None));
                }
            }
        }
    }

    /// All feasible moves of one kind and direction, in a fixed order.
    pub fn candidates(&self, membership: &PathwayMembership, kind: MoveKind, dir: Direction) -> Vec<Move> {
        let mut out = Vec::new();
        self.for_each_structural(membership, kind, dir, |mv| {
            if self.is_feasible(membership, &mv) {
                out.push(mv);
            }
        });
        out
    }

    pub fn move_counts(&self, membership: &PathwayMembership) -> MoveCounts {
        let mut counts = MoveCounts::default();
        for kind in MoveKind::ALL {
            for dir in [Direction::Add, Direction::Remove] {
                let mut n = 0;
                self.for_each_structural(membership, kind, dir, |mv| {
                    if self.is_feasible(membership, &mv) {
                        n += 1;
                    }
                });
                counts.0[slot(kind, dir)] = n;
            }
        }
        counts
    }
}

/// Draws a move from `index` (whose candidate counts are `counts`), returning
/// the proposal, the resulting index and the resulting counts.
pub fn draw_move<R: Rng + ?Sized>(
    index: &SelectionIndex,
    counts: &MoveCounts,
    membership: &PathwayMembership,
    rng: &mut R,
) -> (MoveProposal, SelectionIndex, MoveCounts) {
    let kinds = counts.feasible_kinds();
    assert!(!kinds.is_empty(), "no feasible move from this state");
    let kind = kinds[rng.random_range(0..kinds.len())];
    let dirs = counts.feasible_directions(kind);
    let dir = dirs[rng.random_range(0..dirs.len())];
    let cands = index.candidates(membership, kind, dir);
    debug_assert_eq!(cands.len(), counts.get(kind, dir));
    let mv = cands[rng.random_range(0..cands.len())];

    let mut next = index.clone();
    next.apply(membership, &mv);
    let next_counts = next.move_counts(membership);
    let log_ratio = next_counts.log_q(kind, dir.reverse()) - counts.log_q(kind, dir);
    let proposal = MoveProposal {
        kind,
        direction: dir,
        pathway_index: mv.pathway,
        gene_index: mv.gene,
        log_proposal_ratio: log_ratio,
    };
    (proposal, next, next_counts)
}

/// Draws a move from a valid state.
pub fn propose_move<R: Rng + ?Sized>(state: &ModelState, membership: &PathwayMembership, rng: &mut R) -> MoveProposal {
    let index = SelectionIndex::from_state(membership, state);
    let counts = index.move_counts(membership);
    draw_move(&index, &counts, membership, rng).0
}

/// Applies a move to a model state's indicators.
pub fn apply_to_state(state: &mut ModelState, mv: &Move) {
    let on = mv.direction == Direction::Add;
    if let Some(k) = mv.pathway {
        state.theta[k] = on;
    }
    if let Some(j) = mv.gene {
        state.gamma[j] = on;
    }
}
