//! Pathway membership, gene network and expression data.
//!
//! Genes and pathways are indexed in lexicographic order of their
//! identifiers, so matrix layouts do not depend on input row order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// The K×p binary membership matrix S, stored as sorted index lists in both
/// directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwayMembership {
    pathway_ids: Vec<String>,
    gene_ids: Vec<String>,
    pathway_genes: Vec<Vec<usize>>,
    gene_pathways: Vec<Vec<usize>>,
    gene_index: HashMap<String, usize>,
}

impl PathwayMembership {
    /// Builds the membership from `(pathway_id, gene_id)` pairs. Pathways
    /// listed in `declared_pathways` but never paired with a gene are
    /// rejected as empty.
    pub fn from_pairs<P, G>(
        pairs: impl IntoIterator<Item = (P, G)>,
        declared_pathways: impl IntoIterator<Item = String>,
    ) -> Result<Self>
    where
        P: Into<String>,
        G: Into<String>,
    {
        let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for pw in declared_pathways {
            map.entry(pw).or_default();
        }
        for (pw, gene) in pairs {
            map.entry(pw.into()).or_default().insert(gene.into());
        }
        if let Some((pw, _)) = map.iter().find(|(_, genes)| genes.is_empty()) {
            return Err(Error::EmptyPathway(pw.clone()));
        }
        let gene_ids: Vec<String> = map
            .values()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pathway_ids: Vec<String> = map.keys().cloned().collect();
        let lists = map
            .values()
            .map(|genes| genes.iter().cloned().collect())
            .collect::<Vec<Vec<String>>>();
        Self::from_lists(pathway_ids, gene_ids, lists)
    }

    /// Builds the membership from explicit identifier lists and, per pathway,
    /// the identifiers of its member genes. Identifiers are re-sorted into
    /// canonical order.
    pub fn from_lists(
        pathway_ids: Vec<String>,
        gene_ids: Vec<String>,
        members: Vec<Vec<String>>,
    ) -> Result<Self> {
        if pathway_ids.len() != members.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pathway ids but {} member lists",
                pathway_ids.len(),
                members.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in pathway_ids.iter().chain(gene_ids.iter()) {
            if id.is_empty() {
                return Err(Error::InvalidConfig("empty identifier".into()));
            }
        }
        for id in &pathway_ids {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        seen.clear();
        for id in &gene_ids {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }

        let mut order: Vec<usize> = (0..pathway_ids.len()).collect();
        order.sort_by(|&a, &b| pathway_ids[a].cmp(&pathway_ids[b]));
        let mut sorted_genes = gene_ids;
        sorted_genes.sort();
        let gene_index: HashMap<String, usize> = sorted_genes
            .iter()
            .enumerate()
            .map(|(j, g)| (g.clone(), j))
            .collect();

        let p = sorted_genes.len();
        let mut sorted_pathways = Vec::with_capacity(order.len());
        let mut pathway_genes = Vec::with_capacity(order.len());
        let mut gene_pathways = vec![Vec::new(); p];
        for (k, &orig) in order.iter().enumerate() {
            let mut genes = Vec::with_capacity(members[orig].len());
            for g in &members[orig] {
                let j = *gene_index
                    .get(g)
                    .ok_or_else(|| Error::UnknownGene(g.clone()))?;
                genes.push(j);
            }
            genes.sort_unstable();
            genes.dedup();
            if genes.is_empty() {
                return Err(Error::EmptyPathway(pathway_ids[orig].clone()));
            }
            for &j in &genes {
                gene_pathways[j].push(k);
            }
            sorted_pathways.push(pathway_ids[orig].clone());
            pathway_genes.push(genes);
        }
        if let Some(j) = gene_pathways.iter().position(Vec::is_empty) {
            return Err(Error::OrphanGene(sorted_genes[j].clone()));
        }
        Ok(Self {
            pathway_ids: sorted_pathways,
            gene_ids: sorted_genes,
            pathway_genes,
            gene_pathways,
            gene_index,
        })
    }

    pub fn n_pathways(&self) -> usize {
        self.pathway_ids.len()
    }

    pub fn n_genes(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn pathway_ids(&self) -> &[String] {
        &self.pathway_ids
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    /// Sorted member genes of pathway `k`.
    pub fn genes_of(&self, k: usize) -> &[usize] {
        &self.pathway_genes[k]
    }

    /// Sorted pathways containing gene `j`.
    pub fn pathways_of(&self, j: usize) -> &[usize] {
        &self.gene_pathways[j]
    }

    /// p_k, the number of member genes of pathway `k`.
    pub fn pathway_size(&self, k: usize) -> usize {
        self.pathway_genes[k].len()
    }

    pub fn is_member(&self, k: usize, j: usize) -> bool {
        self.pathway_genes[k].binary_search(&j).is_ok()
    }

    pub fn gene_index(&self, id: &str) -> Option<usize> {
        self.gene_index.get(id).copied()
    }

    pub fn pathway_index(&self, id: &str) -> Option<usize> {
        self.pathway_ids.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    /// Dense K×p 0/1 matrix.
    pub fn to_dense(&self) -> DMatrix<u8> {
        let mut s = DMatrix::zeros(self.n_pathways(), self.n_genes());
        for (k, genes) in self.pathway_genes.iter().enumerate() {
            for &j in genes {
                s[(k, j)] = 1;
            }
        }
        s
    }
}

/// Reads a membership file: one `pathway_id<TAB>gene_id` record per line.
/// A line carrying only a pathway identifier declares that pathway (and is
/// rejected at validation if it never receives a gene). Blank lines and lines
/// starting with `#` are skipped.
pub fn load_membership(path: impl AsRef<Path>) -> Result<PathwayMembership> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    let mut declared = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        match fields.as_slice() {
            [pw] | [pw, ""] if !pw.is_empty() => declared.push(pw.to_string()),
            [pw, gene] if !pw.is_empty() && !gene.is_empty() => {
                pairs.push((pw.to_string(), gene.to_string()))
            }
            _ => {
                return Err(Error::malformed(
                    path,
                    lineno + 1,
                    "expected `pathway_id<TAB>gene_id`",
                ))
            }
        }
    }
    PathwayMembership::from_pairs(pairs, declared)
}

/// Symmetric binary adjacency R over genes, stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneNetwork {
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl GeneNetwork {
    pub fn empty(n_genes: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n_genes],
            edge_count: 0,
        }
    }

    /// Builds a network from undirected index pairs. Self-loops are dropped
    /// and repeated edges collapse to one.
    pub fn from_edges(n_genes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n_genes];
        let mut self_loops = 0usize;
        for (a, b) in edges {
            assert!(a < n_genes && b < n_genes, "edge endpoint out of range");
            if a == b {
                self_loops += 1;
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        if self_loops > 0 {
            log::warn!("dropped {self_loops} self-loop(s) from gene network");
        }
        let mut twice = 0;
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Self {
            neighbors,
            edge_count: twice / 2,
        }
    }

    pub fn n_genes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.neighbors[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.neighbors[j].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// γᵀRγ for the symmetric adjacency, which counts every edge between two
    /// selected genes twice.
    pub fn quadratic_form(&self, gamma: &[bool]) -> f64 {
        let mut twice = 0usize;
        for (j, &on) in gamma.iter().enumerate() {
            if on {
                twice += self.neighbors[j].iter().filter(|&&i| gamma[i]).count();
            }
        }
        twice as f64
    }

    pub fn to_dense(&self) -> DMatrix<u8> {
        let p = self.n_genes();
        let mut r = DMatrix::zeros(p, p);
        for (a, b) in self.edges() {
            r[(a, b)] = 1;
            r[(b, a)] = 1;
        }
        r
    }
}

/// Reads a network file: one `gene_id<TAB>gene_id` record per line.
pub fn load_network(path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<GeneNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [a, b] = fields.as_slice() else {
            return Err(Error::malformed(path, lineno + 1, "expected `gene_id<TAB>gene_id`"));
        };
        let ia = membership
            .gene_index(a)
            .ok_or_else(|| Error::UnknownGene(a.to_string()))?;
        let ib = membership
            .gene_index(b)
            .ok_or_else(|| Error::UnknownGene(b.to_string()))?;
        edges.push((ia, ib));
    }
    Ok(GeneNetwork::from_edges(membership.n_genes(), edges))
}

/// How the network is restricted to the pathways currently in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRule {
    /// Keep an edge when each endpoint belongs to some selected pathway.
    #[default]
    Union,
    /// Keep an edge only when both endpoints share a selected pathway.
    SharedPathway,
}

impl std::str::FromStr for EdgeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(EdgeRule::Union),
            "shared" | "shared-pathway" => Ok(EdgeRule::SharedPathway),
            other => Err(Error::InvalidConfig(format!("unknown edge rule `{other}`"))),
        }
    }
}

/// R_θ: the network restricted to the pathways selected in `theta`.
pub fn active_adjacency(
    network: &GeneNetwork,
    membership: &PathwayMembership,
    theta: &[bool],
    rule: EdgeRule,
) -> GeneNetwork {
    assert_eq!(theta.len(), membership.n_pathways(), "theta length must be K");
    let covered = |j: usize| membership.pathways_of(j).iter().any(|&k| theta[k]);
    let keep: Box<dyn Fn(usize, usize) -> bool> = match rule {
        EdgeRule::Union => Box::new(|a, b| covered(a) && covered(b)),
        EdgeRule::SharedPathway => Box::new(|a, b| {
            membership
                .pathways_of(a)
                .iter()
                .any(|&k| theta[k] && membership.is_member(k, b))
        }),
    };
    let p = network.n_genes();
    let mut neighbors = vec![Vec::new(); p];
    let mut twice = 0;
    for (a, list) in network.neighbors.iter().enumerate() {
        for &b in list {
            if keep(a, b) {
                neighbors[a].push(b);
                twice += 1;
            }
        }
    }
    GeneNetwork {
        neighbors,
        edge_count: twice / 2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Continuous,
    Survival,
}

impl std::str::FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(OutcomeKind::Continuous),
            "survival" => Ok(OutcomeKind::Survival),
            other => Err(Error::InvalidConfig(format!("unknown outcome kind `{other}`"))),
        }
    }
}

/// Expression matrix and response. Expression columns are centered; the
/// removed means are kept so that held-out data can be centered with them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sample_ids: Vec<String>,
    /// n×p, columns in membership gene order.
    pub expression: DMatrix<f64>,
    pub column_means: DVector<f64>,
    /// The response, or log survival times.
    pub response: DVector<f64>,
    /// Event indicators (`true` = event observed), survival outcomes only.
    pub censoring: Option<Vec<bool>>,
    pub outcome: OutcomeKind,
}

impl Dataset {
    /// Assembles a dataset from raw (uncentered) expression. `response` holds
    /// log-times for survival outcomes.
    pub fn new(
        sample_ids: Vec<String>,
        raw_expression: DMatrix<f64>,
        response: DVector<f64>,
        censoring: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = raw_expression.nrows();
        if sample_ids.len() != n || response.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} samples in expression, {} ids, {} responses",
                n,
                sample_ids.len(),
                response.len()
            )));
        }
        if let Some(c) = &censoring {
            if c.len() != n {
                return Err(Error::DimensionMismatch("censoring length".into()));
            }
        }
        let outcome = if censoring.is_some() {
            OutcomeKind::Survival
        } else {
            OutcomeKind::Continuous
        };
        let (expression, column_means) = center_columns(raw_expression);
        Ok(Self {
            sample_ids,
            expression,
            column_means,
            response,
            censoring,
            outcome,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.expression.nrows()
    }

    pub fn n_genes(&self) -> usize {
        self.expression.ncols()
    }

    /// Re-centers the expression with another dataset's column means
    /// (typically the training set's).
    pub fn recentered(&self, means: &DVector<f64>) -> Self {
        let mut out = self.clone();
        for (c, mut col) in out.expression.column_iter_mut().enumerate() {
            let shift = self.column_means[c] - means[c];
            col.add_scalar_mut(shift);
        }
        out.column_means = means.clone();
        out
    }

    /// Rows `rows` of this dataset, re-centered on their own means.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut raw = self.expression.select_rows(rows);
        for (c, mut col) in raw.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.column_means[c]);
        }
        let (expression, column_means) = center_columns(raw);
        Self {
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            expression,
            column_means,
            response: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.response[i])),
            censoring: self
                .censoring
                .as_ref()
                .map(|c| rows.iter().map(|&i| c[i]).collect()),
            outcome: self.outcome,
        }
    }

    /// Random train/test partition with `n_train` training samples. For
    /// survival data the split is stratified on the event indicator. The test
    /// set is centered with the training means.
    pub fn split_train_test<R: Rng + ?Sized>(&self, n_train: usize, rng: &mut R) -> Result<(Self, Self)> {
        let n = self.n_samples();
        if n_train == 0 || n_train >= n {
            return Err(Error::InvalidConfig(format!(
                "training size {n_train} must lie in 1..{n}"
            )));
        }
        let mut train = Vec::with_capacity(n_train);
        match &self.censoring {
            Some(events) => {
                let mut strata: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
                for i in 0..n {
                    strata[events[i] as usize].push(i);
                }
                let mut remaining = n_train;
                for (s, stratum) in strata.iter_mut().enumerate() {
                    stratum.shuffle(rng);
                    let take = if s == 1 {
                        remaining
                    } else {
                        ((stratum.len() * n_train) as f64 / n as f64).round() as usize
                    };
                    let take = take.min(stratum.len()).min(remaining);
                    train.extend_from_slice(&stratum[..take]);
                    remaining -= take;
                }
                if remaining > 0 {
                    let rest: Vec<usize> = (0..n).filter(|i| !train.contains(i)).collect();
                    train.extend_from_slice(&rest[..remaining]);
                }
            }
            None => {
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(rng);
                train.extend_from_slice(&all[..n_train]);
            }
        }
        train.sort_unstable();
        let test: Vec<usize> = (0..n).filter(|i| train.binary_search(i).is_err()).collect();
        let train_set = self.subset(&train);
        let test_set = self.subset(&test).recentered(&train_set.column_means);
        Ok((train_set, test_set))
    }
}

/// Subtracts column means, returning the centered matrix and the means.
pub fn center_columns(mut x: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows().max(1) as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    for (c, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[c]);
    }
    (x, means)
}

fn detect_delimiter(path: &Path, first_line: &str) -> u8 {
    let tsv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("tab"))
        .unwrap_or(false);
    if tsv || first_line.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn read_table(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delim = detect_delimiter(path, text.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    Ok(rows)
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "."
    )
}

/// Loads an expression file (samples in rows, a header of gene identifiers)
/// with columns reordered to the membership gene order. Returns the sample
/// identifiers and the raw matrix.
pub fn load_expression(x_path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<(Vec<String>, DMatrix<f64>)> {
    let x_path = x_path.as_ref();
    let rows = read_table(x_path)?;
    let Some((header, body)) = rows.split_first() else {
        return Err(Error::malformed(x_path, 1, "empty expression file"));
    };
    let p = membership.n_genes();
    if header.len() != p + 1 {
        return Err(Error::DimensionMismatch(format!(
            "expression header has {} gene columns, membership has {} genes",
            header.len().saturating_sub(1),
            p
        )));
    }
    let mut column_to_gene = Vec::with_capacity(p);
    let mut seen = BTreeSet::new();
    for id in header.iter().skip(1) {
        let j = membership
            .gene_index(id)
            .ok_or_else(|| Error::UnknownGene(id.to_string()))?;
        if !seen.insert(j) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        column_to_gene.push(j);
    }

    let n = body.len();
    let mut raw = DMatrix::zeros(n, p);
    let mut sample_ids = Vec::with_capacity(n);
    let mut seen_samples = BTreeSet::new();
    for (i, rec) in body.iter().enumerate() {
        if rec.len() != p + 1 {
            return Err(Error::malformed(
                x_path,
                i + 2,
                format!("expected {} fields, found {}", p + 1, rec.len()),
            ));
        }
        let sid = rec[0].to_string();
        if !seen_samples.insert(sid.clone()) {
            return Err(Error::DuplicateId(sid));
        }
        for (c, field) in rec.iter().skip(1).enumerate() {
            if is_missing(field) {
                return Err(Error::MissingValue {
                    sample: sid.clone(),
                    column: header[c + 1].to_string(),
                });
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::malformed(x_path, i + 2, format!("not a number: `{field}`")))?;
            if !v.is_finite() {
                return Err(Error::MissingValue {
                    sample: sid.clone(),
                    column: header[c + 1].to_string(),
                });
            }
            raw[(i, column_to_gene[c])] = v;
        }
        sample_ids.push(sid);
    }
    Ok((sample_ids, raw))
}

/// Loads expression and response files, aligning expression columns to the
/// membership gene order and response rows to expression sample order.
pub fn load_dataset(
    x_path: impl AsRef<Path>,
    y_path: impl AsRef<Path>,
    membership: &PathwayMembership,
    outcome: OutcomeKind,
) -> Result<Dataset> {
    let y_path = y_path.as_ref();
    let (sample_ids, raw) = load_expression(x_path, membership)?;
    let n = sample_ids.len();
    let sample_index: HashMap<&str, usize> = sample_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

    let yrows = read_table(y_path)?;
    let skip_header = yrows
        .first()
        .map(|r| r.get(1).map(|f| f.parse::<f64>().is_err()).unwrap_or(false))
        .unwrap_or(false);
    let survival = outcome == OutcomeKind::Survival;
    let mut y = vec![f64::NAN; n];
    let mut delta = vec![true; n];
    let mut filled = vec![false; n];
    for (lineno, rec) in yrows.iter().enumerate().skip(skip_header as usize) {
        let line = lineno + 1;
        let expected = if survival { 3 } else { 2 };
        if rec.len() < expected {
            return Err(Error::malformed(
                y_path,
                line,
                format!("expected at least {expected} fields"),
            ));
        }
        let sid = &rec[0];
        let i = *sample_index
            .get(&sid[..])
            .ok_or_else(|| Error::DimensionMismatch(format!("response sample `{sid}` not in expression file")))?;
        if filled[i] {
            return Err(Error::DuplicateId(sid.to_string()));
        }
        if is_missing(&rec[1]) {
            return Err(Error::MissingValue {
                sample: sid.to_string(),
                column: "y".into(),
            });
        }
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| Error::malformed(y_path, line, format!("not a number: `{}`", &rec[1])))?;
        if survival {
            if !(v > 0.0) {
                return Err(Error::NonPositiveSurvivalTime {
                    sample: sid.to_string(),
                    value: v,
                });
            }
            y[i] = v.ln();
            delta[i] = match &rec[2] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::malformed(
                        y_path,
                        line,
                        format!("censoring flag must be 0 or 1, found `{other}`"),
                    ))
                }
            };
        } else {
            y[i] = v;
        }
        filled[i] = true;
    }
    if let Some(i) = filled.iter().position(|f| !f) {
        return Err(Error::DimensionMismatch(format!(
            "sample `{}` has no response",
            sample_ids[i]
        )));
    }
    Dataset::new(
        sample_ids,
        raw,
        DVector::from_vec(y),
        survival.then_some(delta),
    )
}

/// (θ, γ) together with the MRF parameter η and, for survival outcomes, the
/// augmented log-times Z.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub theta: Vec<bool>,
    pub gamma: Vec<bool>,
    pub eta: f64,
    pub z_latent: Option<Vec<f64>>,
}

impl ModelState {
    pub fn empty(n_pathways: usize, n_genes: usize, eta: f64) -> Self {
        Self {
            theta: vec![false; n_pathways],
            gamma: vec![false; n_genes],
            eta,
            z_latent: None,
        }
    }

    /// K_θ
    pub fn n_pathways_selected(&self) -> usize {
        self.theta.iter().filter(|&&t| t).count()
    }

    pub fn n_genes_selected(&self) -> usize {
        self.gamma.iter().filter(|&&g| g).count()
    }

    pub fn selected_pathways(&self) -> impl Iterator<Item = usize> + '_ {
        self.theta.iter().enumerate().filter(|(_, &t)| t).map(|(k, _)| k)
    }

    /// p_kγ, the number of selected genes in pathway `k`.
    pub fn selected_in_pathway(&self, membership: &PathwayMembership, k: usize) -> usize {
        membership.genes_of(k).iter().filter(|&&j| self.gamma[j]).count()
    }

    /// The response the likelihood sees: Z for survival outcomes, Y otherwise.
    pub fn response<'a>(&'a self, data: &'a Dataset) -> std::borrow::Cow<'a, DVector<f64>> {
        match &self.z_latent {
            Some(z) => std::borrow::Cow::Owned(DVector::from_column_slice(z)),
            None => std::borrow::Cow::Borrowed(&data.response),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn abc() -> PathwayMembership {
        PathwayMembership::from_pairs(
            [("A", "g1"), ("A", "g2"), ("B", "g2"), ("B", "g3")],
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn membership_counts() {
        let m = abc();
        assert_eq!(m.n_pathways(), 2);
        assert_eq!(m.n_genes(), 3);
        assert_eq!(m.pathway_size(0), 2);
        assert_eq!(m.pathway_size(1), 2);
        assert_eq!(m.pathways_of(1), &[0, 1]);
    }

    #[test]
    fn empty_pathway_rejected() {
        let err = PathwayMembership::from_pairs([("A", "g1")], vec!["C".to_string()]).unwrap_err();
        assert!(err.to_string().contains("empty pathway"), "{err}");
    }

    #[test]
    fn orphan_and_duplicates_rejected() {
        let err = PathwayMembership::from_lists(
            vec!["A".into()],
            vec!["g1".into(), "g2".into()],
            vec![vec!["g1".into()]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::OrphanGene(g) if g == "g2"));
        let err = PathwayMembership::from_lists(
            vec!["A".into(), "A".into()],
            vec!["g1".into()],
            vec![vec!["g1".into()], vec!["g1".into()]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn membership_file_parsing() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "B\tg3\nA\tg1\n# comment\n\nA\tg2\nB\tg2").unwrap();
        let m = load_membership(f.path()).unwrap();
        assert_eq!(m, abc());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "A\tg1\nC").unwrap();
        assert!(matches!(load_membership(f.path()), Err(Error::EmptyPathway(p)) if p == "C"));

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "A\tg1\tg2").unwrap();
        assert!(matches!(load_membership(f.path()), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn network_edges() {
        let m = abc();
        let net = GeneNetwork::from_edges(3, [(0, 1)]);
        let r = net.to_dense();
        assert_eq!(r[(0, 1)], 1);
        assert_eq!(r[(1, 0)], 1);
        assert_eq!(r.iter().map(|&v| v as usize).sum::<usize>(), 2);

        let looped = GeneNetwork::from_edges(3, [(0, 0)]);
        assert_eq!(looped.edge_count(), 0);
        let twice = GeneNetwork::from_edges(3, [(0, 1), (1, 0), (0, 1)]);
        assert_eq!(twice.edge_count(), 1);

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "g1\tg2\ng2\tg1\ng3\tg3").unwrap();
        let net = load_network(f.path(), &m).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert!(net.has_edge(0, 1));

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "g1\tg9").unwrap();
        assert!(matches!(load_network(f.path(), &m), Err(Error::UnknownGene(g)) if g == "g9"));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "g1 g2").unwrap();
        assert!(matches!(load_network(f.path(), &m), Err(Error::Malformed { .. })));
    }

    #[test]
    fn active_adjacency_cases() {
        let m = abc();
        let net = GeneNetwork::from_edges(3, [(0, 1), (0, 2), (1, 2)]);
        assert_eq!(active_adjacency(&net, &m, &[true, true], EdgeRule::Union), net);
        assert_eq!(active_adjacency(&net, &m, &[false, false], EdgeRule::Union).edge_count(), 0);
        // g1 only in A, g3 only in B.
        let only_a = active_adjacency(&net, &m, &[true, false], EdgeRule::Union);
        assert!(!only_a.has_edge(0, 2));
        assert!(only_a.has_edge(0, 1));
        assert_eq!(only_a.edge_count(), 1);

        // With both pathways selected the edge g1-g3 crosses pathways: kept
        // under the union rule, dropped under the shared-pathway rule.
        let shared = active_adjacency(&net, &m, &[true, true], EdgeRule::SharedPathway);
        assert!(!shared.has_edge(0, 2));
        assert!(shared.has_edge(0, 1) && shared.has_edge(1, 2));
    }

    #[test]
    fn dataset_centering_and_errors() {
        let m = abc();
        let dir = tempfile::tempdir().unwrap();
        let x = dir.path().join("x.csv");
        let y = dir.path().join("y.csv");
        fs::write(&x, "sample,g3,g1,g2\ns1,0,1,5\ns2,0,2,5\ns3,3,3,5\n").unwrap();
        fs::write(&y, "sample_id,y\ns3,1.0\ns1,2.0\ns2,3.0\n").unwrap();
        let d = load_dataset(&x, &y, &m, OutcomeKind::Continuous).unwrap();
        assert_eq!(d.expression.column(0).as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(d.expression.column(1).as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(d.response.as_slice(), &[2.0, 3.0, 1.0]);
        assert!(d.censoring.is_none());

        fs::write(&y, "s1,2.0,1\ns2,0,0\ns3,1.0,1\n").unwrap();
        let err = load_dataset(&x, &y, &m, OutcomeKind::Survival).unwrap_err();
        assert!(err.to_string().contains("non-positive survival time"), "{err}");

        fs::write(&y, "s1,2.0,1\ns2,1.0,0\ns3,1.0,1\n").unwrap();
        let d = load_dataset(&x, &y, &m, OutcomeKind::Survival).unwrap();
        assert_eq!(d.censoring, Some(vec![true, false, true]));
        assert!((d.response[0] - 2f64.ln()).abs() < 1e-15);

        fs::write(&x, "sample,g3,g1,g2\ns1,0,NA,5\ns2,0,2,5\ns3,3,3,5\n").unwrap();
        assert!(matches!(
            load_dataset(&x, &y, &m, OutcomeKind::Survival),
            Err(Error::MissingValue { .. })
        ));
        fs::write(&x, "sample,g3,g1\ns1,0,1\n").unwrap();
        assert!(matches!(
            load_dataset(&x, &y, &m, OutcomeKind::Survival),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn centering_is_idempotent() {
        let x = DMatrix::from_fn(7, 4, |i, j| ((i * 31 + j * 17) % 11) as f64 * 0.37 - 1.3);
        let (once, _) = center_columns(x);
        let (twice, means) = center_columns(once.clone());
        assert!((once - twice).amax() < 1e-12);
        assert!(means.amax() < 1e-12);
    }

    #[test]
    fn split_is_balanced_and_train_centered() {
        use rand::SeedableRng;
        let n = 76;
        let x = DMatrix::from_fn(n, 3, |i, j| (i * (j + 1)) as f64);
        let y = DVector::from_fn(n, |i, _| i as f64 * 0.1);
        let events: Vec<bool> = (0..n).map(|i| i < 33).collect();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        let d = Dataset::new(ids, x, y, Some(events)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (train, test) = d.split_train_test(38, &mut rng).unwrap();
        assert_eq!(train.n_samples(), 38);
        assert_eq!(test.n_samples(), 38);
        let ev = train.censoring.as_ref().unwrap().iter().filter(|&&e| e).count();
        assert!((16..=17).contains(&ev), "{ev}");
        for c in 0..3 {
            assert!(train.expression.column(c).sum().abs() < 1e-9);
        }
        assert_eq!(test.column_means, train.column_means);
    }
}
