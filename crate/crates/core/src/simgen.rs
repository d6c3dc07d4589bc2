//! Synthetic data: a true set of pathways and genes, expression generated
//! along the network among true genes, and a linear response.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal, Zipf};

use crate::error::{Error, Result};
use crate::graph_data::{Dataset, GeneNetwork, PathwayMembership};

/// Generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub true_pathways: Vec<usize>,
    pub true_genes: Vec<usize>,
    /// |β| for every true gene.
    pub beta_magnitude: f64,
    /// Weight of the parents in a child's mean.
    pub rho_sim: f64,
    pub noise_sd: f64,
    /// Use ρ·mean(parents) instead of ρ·Σ parents.
    pub average_parents: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(true_pathways: Vec<usize>, true_genes: Vec<usize>, n_samples: usize, beta_magnitude: f64, seed: u64) -> Self {
        Self {
            n_samples,
            true_pathways,
            true_genes,
            beta_magnitude,
            rho_sim: 0.7,
            noise_sd: 1.0,
            average_parents: false,
            seed,
        }
    }

    pub fn validate(&self, membership: &PathwayMembership) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::InvalidConfig("at least two samples are needed".into()));
        }
        if !(self.rho_sim > -1.0 && self.rho_sim < 1.0) {
            return Err(Error::InvalidConfig(format!("rho {} outside (-1, 1)", self.rho_sim)));
        }
        if !(self.noise_sd >= 0.0) || !self.beta_magnitude.is_finite() {
            return Err(Error::InvalidConfig("noise sd and beta must be finite, noise sd non-negative".into()));
        }
        let (k, p) = (membership.n_pathways(), membership.n_genes());
        if self.true_pathways.iter().any(|&t| t >= k) || self.true_genes.iter().any(|&j| j >= p) {
            return Err(Error::InvalidConfig("true index out of range".into()));
        }
        for &j in &self.true_genes {
            if !self.true_pathways.iter().any(|&t| membership.is_member(t, j)) {
                return Err(Error::InvalidConfig(format!(
                    "true gene `{}` lies in no true pathway",
                    membership.gene_ids()[j]
                )));
            }
        }
        for &t in &self.true_pathways {
            if !self.true_genes.iter().any(|&j| membership.is_member(t, j)) {
                return Err(Error::InvalidConfig(format!(
                    "true pathway `{}` has no true gene",
                    membership.pathway_ids()[t]
                )));
            }
        }
        Ok(())
    }
}

/// The truth of one simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub pathways: Vec<usize>,
    /// True genes in generation order, the first of each component its root.
    pub genes: Vec<usize>,
    /// β_j for every gene, zero outside the truth.
    pub beta: Vec<f64>,
    /// Parents of each true gene under the breadth-first orientation.
    pub parents: Vec<Vec<usize>>,
    pub rho_sim: f64,
    pub seed: u64,
}

/// A simulated data set with its raw (uncentered) expression.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub dataset: Dataset,
    pub raw_expression: DMatrix<f64>,
    pub truth: Truth,
}

/// Picks `n_pathways` pathways at random and, in each, a random seed gene
/// and its direct neighbors that lie in one of the picked pathways.
/// Returns (pathways, genes), genes grouped per pathway with the seed first.
pub fn select_truth<R: Rng + ?Sized>(
    membership: &PathwayMembership,
    network: &GeneNetwork,
    n_pathways: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_pathways == 0 || n_pathways > membership.n_pathways() {
        return Err(Error::InvalidConfig(format!(
            "cannot pick {n_pathways} of {} pathways",
            membership.n_pathways()
        )));
    }
    let mut all: Vec<usize> = (0..membership.n_pathways()).collect();
    all.shuffle(rng);
    let mut pathways = all[..n_pathways].to_vec();
    pathways.sort_unstable();
    let in_picked = |j: usize| pathways.iter().any(|&k| membership.is_member(k, j));
    let mut genes = Vec::new();
    let mut taken = vec![false; membership.n_genes()];
    for &k in &pathways {
        let free: Vec<usize> = membership.genes_of(k).iter().copied().filter(|&j| !taken[j]).collect();
        let pool = if free.is_empty() { membership.genes_of(k) } else { &free };
        let seed = *pool.choose(rng).expect("pathways are non-empty");
        for j in std::iter::once(seed).chain(network.neighbors(seed).iter().copied().filter(|&j| in_picked(j))) {
            if !taken[j] {
                taken[j] = true;
                genes.push(j);
            }
        }
    }
    Ok((pathways, genes))
}

/// Breadth-first orientation of the network among `genes`: returns the
/// generation order and the parents (earlier-visited neighbors) of each.
fn orient(network: &GeneNetwork, genes: &[usize]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let p = network.n_genes();
    let mut is_true = vec![false; p];
    for &j in genes {
        is_true[j] = true;
    }
    let mut visited = vec![false; p];
    let mut order = Vec::with_capacity(genes.len());
    for &root in genes {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in network.neighbors(u) {
                if is_true[v] && !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut position = vec![usize::MAX; p];
    for (i, &j) in order.iter().enumerate() {
        position[j] = i;
    }
    let parents = order
        .iter()
        .map(|&v| {
            network
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| is_true[u] && position[u] < position[v])
                .collect()
        })
        .collect();
    (order, parents)
}

/// Generates expression and a continuous response.
pub fn generate(
    membership: &PathwayMembership,
    network: &GeneNetwork,
    config: &SimConfig,
) -> Result<Simulated> {
    config.validate(membership)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (n, p) = (config.n_samples, membership.n_genes());

    let mut beta = vec![0.0; p];
    let mut assigned = vec![false; p];
    for &k in &config.true_pathways {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for &j in &config.true_genes {
            if !assigned[j] && membership.is_member(k, j) {
                beta[j] = sign * config.beta_magnitude;
                assigned[j] = true;
            }
        }
    }

    let (order, parents) = orient(network, &config.true_genes);
    let mut x = DMatrix::zeros(n, p);
    for (v, pa) in order.iter().zip(&parents) {
        for i in 0..n {
            let sum: f64 = pa.iter().map(|&u| x[(i, u)]).sum();
            let mean = if config.average_parents && !pa.is_empty() {
                config.rho_sim * sum / pa.len() as f64
            } else {
                config.rho_sim * sum
            };
            x[(i, *v)] = mean + rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut is_true = vec![false; p];
    for &j in &order {
        is_true[j] = true;
    }
    for j in (0..p).filter(|&j| !is_true[j]) {
        for i in 0..n {
            x[(i, j)] = rng.sample(StandardNormal);
        }
    }

    let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let beta_v = DVector::from_column_slice(&beta);
    let mut y = &x * &beta_v;
    for v in y.iter_mut() {
        *v += noise.sample(&mut rng);
    }
    let ids = (1..=n).map(|i| format!("s{i:04}")).collect();
    let dataset = Dataset::new(ids, x.clone(), y, None)?;
    Ok(Simulated {
        dataset,
        raw_expression: x,
        truth: Truth {
            pathways: config.true_pathways.clone(),
            genes: order,
            beta,
            parents,
            rho_sim: config.rho_sim,
            seed: config.seed,
        },
    })
}

/// Turns a continuous simulation into survival data: times exp(Y) with
/// independent exponential censoring times of the given rate. Not part of
/// the reference simulation protocol.
pub fn censor_survival<R: Rng + ?Sized>(sim: &Simulated, censoring_rate: f64, rng: &mut R) -> Result<(Dataset, Vec<f64>)> {
    let exp = Exp::new(censoring_rate).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let n = sim.dataset.n_samples();
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let t = sim.dataset.response[i].exp();
        let c: f64 = exp.sample(rng);
        events.push(t <= c);
        times.push(t.min(c).max(f64::MIN_POSITIVE));
    }
    let log_t = DVector::from_iterator(n, times.iter().map(|t| t.ln()));
    let d = Dataset::new(sim.dataset.sample_ids.clone(), sim.raw_expression.clone(), log_t, Some(events))?;
    Ok((d, times))
}

/// Shape of a random pathway structure.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConfig {
    pub n_pathways: usize,
    pub n_genes: usize,
    /// Smallest number of own genes dealt to a pathway.
    pub min_pathway_size: usize,
    /// Each pathway additionally borrows this fraction of its size from
    /// other pathways' genes.
    pub overlap: f64,
    /// Genes of a pathway come in families of 1..=max_family members, with
    /// Zipf-distributed sizes.
    pub max_family: usize,
    pub family_exponent: f64,
    /// Extra family links per family on top of a random tree.
    pub extra_links: f64,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            n_pathways: 20,
            n_genes: 300,
            min_pathway_size: 10,
            overlap: 0.1,
            max_family: 20,
            family_exponent: 2.0,
            extra_links: 0.2,
        }
    }
}

/// Random membership and network in the style of curated signalling
/// pathways. Genes are dealt to pathways in random order, pathways borrow
/// some genes from each other, and each pathway's genes are grouped into
/// families that are linked by a random tree plus a few extra links; every
/// member of a family is connected to every member of a linked family.
pub fn random_structure<R: Rng + ?Sized>(config: &StructureConfig, rng: &mut R) -> Result<(PathwayMembership, GeneNetwork)> {
    let (k, p) = (config.n_pathways, config.n_genes);
    let min_size = config.min_pathway_size.max(1);
    if k == 0 || p < k * min_size || config.max_family == 0 {
        return Err(Error::InvalidConfig(format!(
            "{p} genes cannot fill {k} pathways of at least {min_size} genes, or the family size is zero"
        )));
    }
    let mut genes: Vec<usize> = (0..p).collect();
    genes.shuffle(rng);
    // Uneven sizes: the genes beyond the minimum are split at random cut points.
    let spare = p - k * min_size;
    let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(0..=spare)).collect();
    cuts.sort_unstable();
    let bounds: Vec<usize> = std::iter::once(0)
        .chain(cuts.iter().enumerate().map(|(i, c)| c + (i + 1) * min_size))
        .chain(std::iter::once(p))
        .collect();
    let sizes = Zipf::new(config.max_family as f64, config.family_exponent)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut edges = Vec::new();
    for t in 0..k {
        let own = &genes[bounds[t]..bounds[t + 1]];
        let mut families: Vec<Vec<usize>> = Vec::new();
        let mut rest = own;
        while !rest.is_empty() {
            let size = (sizes.sample(rng) as usize).min(rest.len());
            families.push(rest[..size].to_vec());
            rest = &rest[size..];
        }
        let mut m = own.to_vec();
        let borrow = (config.overlap * own.len() as f64).round() as usize;
        for _ in 0..borrow {
            let j = rng.random_range(0..p);
            if !m.contains(&j) {
                m.push(j);
                families.push(vec![j]);
            }
        }
        families.shuffle(rng);
        let f = families.len();
        let mut links: Vec<(usize, usize)> = (1..f).map(|i| (rng.random_range(0..i), i)).collect();
        if f >= 2 {
            let extra = (config.extra_links * f as f64).round() as usize;
            for _ in 0..extra {
                let a = rng.random_range(0..f);
                let b = rng.random_range(0..f);
                if a != b {
                    links.push((a, b));
                }
            }
        }
        for (a, b) in links {
            for &u in &families[a] {
                for &v in &families[b] {
                    edges.push((u, v));
                }
            }
        }
        members.push(m);
    }
    let width = (k.max(2) - 1).ilog10() as usize + 1;
    let gwidth = (p.max(2) - 1).ilog10() as usize + 1;
    let pathway_ids: Vec<String> = (0..k).map(|t| format!("P{t:0width$}")).collect();
    let gene_ids: Vec<String> = (0..p).map(|j| format!("G{j:0gwidth$}")).collect();
    let member_ids = members
        .iter()
        .map(|m| m.iter().map(|&j| gene_ids[j].clone()).collect())
        .collect();
    let membership = PathwayMembership::from_lists(pathway_ids, gene_ids, member_ids)?;
    // Identifiers are zero-padded, so sorting keeps the indices.
    let network = GeneNetwork::from_edges(p, edges);
    Ok((membership, network))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `membership.tsv` and `network.tsv`.
pub fn write_structure(dir: impl AsRef<Path>, membership: &PathwayMembership, network: &GeneNetwork) -> Result<()> {
    let dir = dir.as_ref();
    let mut s = String::new();
    for k in 0..membership.n_pathways() {
        for &j in membership.genes_of(k) {
            let _ = writeln!(s, "{}\t{}", membership.pathway_ids()[k], membership.gene_ids()[j]);
        }
    }
    write_text(&dir.join("membership.tsv"), &s)?;
    let mut s = String::new();
    for (a, b) in network.edges() {
        let _ = writeln!(s, "{}\t{}", membership.gene_ids()[a], membership.gene_ids()[b]);
    }
    write_text(&dir.join("network.tsv"), &s)
}

/// Writes `expression.tsv` and `response.tsv`; with `survival` the response
/// file carries times and event flags.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    membership: &PathwayMembership,
    sample_ids: &[String],
    raw_expression: &DMatrix<f64>,
    response: &[f64],
    events: Option<&[bool]>,
) -> Result<()> {
    let dir = dir.as_ref();
    let mut s = String::from("sample");
    for g in membership.gene_ids() {
        s.push('\t');
        s.push_str(g);
    }
    s.push('\n');
    for (i, id) in sample_ids.iter().enumerate() {
        s.push_str(id);
        for v in raw_expression.row(i).iter() {
            let _ = write!(s, "\t{v}");
        }
        s.push('\n');
    }
    write_text(&dir.join("expression.tsv"), &s)?;
    let mut s = String::new();
    match events {
        Some(ev) => {
            s.push_str("sample\ttime\tevent\n");
            for (i, id) in sample_ids.iter().enumerate() {
                let _ = writeln!(s, "{id}\t{}\t{}", response[i], ev[i] as u8);
            }
        }
        None => {
            s.push_str("sample\ty\n");
            for (i, id) in sample_ids.iter().enumerate() {
                let _ = writeln!(s, "{id}\t{}", response[i]);
            }
        }
    }
    write_text(&dir.join("response.tsv"), &s)
}

/// Writes `truth.csv`: one row per true gene plus one per true pathway,
/// with ρ and the seed repeated on each row.
pub fn write_truth(path: impl AsRef<Path>, membership: &PathwayMembership, truth: &Truth) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["kind", "id", "beta", "rho_sim", "seed"])?;
    for &k in &truth.pathways {
        w.write_record(["pathway", &membership.pathway_ids()[k], "", &truth.rho_sim.to_string(), &truth.seed.to_string()])?;
    }
    for &j in &truth.genes {
        w.write_record([
            "gene",
            &membership.gene_ids()[j],
            &truth.beta[j].to_string(),
            &truth.rho_sim.to_string(),
            &truth.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_structure() -> (PathwayMembership, GeneNetwork) {
        let m = PathwayMembership::from_pairs(
            [("A", "g0"), ("A", "g1"), ("A", "g2"), ("B", "g3"), ("B", "g4")],
            Vec::new(),
        )
        .unwrap();
        (m, GeneNetwork::from_edges(5, [(0, 1), (1, 2), (3, 4)]))
    }

    #[test]
    fn isolated_seed_stands_alone() {
        let m = PathwayMembership::from_pairs([("A", "g0"), ("A", "g1")], Vec::new()).unwrap();
        let net = GeneNetwork::empty(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pw, genes) = select_truth(&m, &net, 1, &mut rng).unwrap();
        assert_eq!(pw, vec![0]);
        assert_eq!(genes.len(), 1);
    }

    #[test]
    fn truth_is_deterministic_and_consistent() {
        let (m, net) = chain_structure();
        let a = select_truth(&m, &net, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = select_truth(&m, &net, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let cfg = SimConfig::new(a.0, a.1, 10, 1.0, 1);
        cfg.validate(&m).unwrap();
    }

    #[test]
    fn orientation_follows_breadth_first_order() {
        let (_, net) = chain_structure();
        let (order, parents) = orient(&net, &[1, 0, 2]);
        assert_eq!(order, vec![1, 0, 2]);
        assert!(parents[0].is_empty());
        assert_eq!(parents[1], vec![1]);
        assert_eq!(parents[2], vec![1]);
    }

    #[test]
    fn same_sign_within_pathway() {
        let (m, net) = chain_structure();
        let cfg = SimConfig::new(vec![0, 1], vec![0, 1, 2, 3], 20, 1.5, 11);
        let sim = generate(&m, &net, &cfg).unwrap();
        let b = &sim.truth.beta;
        assert!(b[0] == b[1] && b[1] == b[2] && b[0].abs() == 1.5);
        assert_eq!(b[4], 0.0);
    }

    #[test]
    fn random_structure_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (m, net) = random_structure(&StructureConfig::default(), &mut rng).unwrap();
        assert_eq!(m.n_pathways(), 20);
        assert_eq!(m.n_genes(), 300);
        assert!(net.edge_count() >= 280);
        assert_eq!(m.gene_ids()[7], "G007");
    }
}
