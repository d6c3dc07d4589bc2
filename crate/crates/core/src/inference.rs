//! Posterior summaries from chain traces, and least-squares prediction.

use std::collections::HashMap;
use std::path::Path;

use fixedbitset::FixedBitSet;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph_data::{Dataset, PathwayMembership};
use crate::latent_scores::{build_scores_for, pca_first_component};
use crate::likelihood::Hyperparameters;
use crate::sampler::chain::{bits_to_hex, bitset_from, bools_from, hex_to_bits, TraceRecord};

/// Relative frequency of θ_k = 1 over `records`.
pub fn pathway_marginals(records: &[TraceRecord], n_pathways: usize) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut counts = vec![0usize; n_pathways];
    for r in records {
        for k in r.theta.ones() {
            counts[k] += 1;
        }
    }
    let n = records.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Selection frequency of one gene among the records in which one of its
/// pathways from the conditioning set was selected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneConditional {
    pub probability: f64,
    /// Records meeting the condition. Zero means the probability is a
    /// placeholder 0.
    pub qualifying: usize,
}

impl GeneConditional {
    pub fn qualified(&self) -> bool {
        self.qualifying > 0
    }
}

/// p̂(γ_j = 1 | some pathway of `pathway_set` containing j is selected).
pub fn gene_conditionals(
    records: &[TraceRecord],
    membership: &PathwayMembership,
    pathway_set: &[usize],
) -> Result<Vec<GeneConditional>> {
    if pathway_set.is_empty() {
        return Err(Error::InvalidConfig("conditioning pathway set is empty".into()));
    }
    let p = membership.n_genes();
    let mut in_set = vec![false; membership.n_pathways()];
    for &k in pathway_set {
        in_set[k] = true;
    }
    let candidates: Vec<usize> = (0..p)
        .filter(|&j| membership.pathways_of(j).iter().any(|&k| in_set[k]))
        .collect();
    let mut qualifying = vec![0usize; p];
    let mut selected = vec![0usize; p];
    for r in records {
        for &j in &candidates {
            if membership.pathways_of(j).iter().any(|&k| in_set[k] && r.theta.contains(k)) {
                qualifying[j] += 1;
                selected[j] += r.gamma.contains(j) as usize;
            }
        }
    }
    Ok((0..p)
        .map(|j| GeneConditional {
            probability: if qualifying[j] == 0 {
                0.0
            } else {
                selected[j] as f64 / qualifying[j] as f64
            },
            qualifying: qualifying[j],
        })
        .collect())
}

/// A distinct visited (θ, γ) and its relative frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitedModel {
    pub theta: FixedBitSet,
    pub gamma: FixedBitSet,
    pub frequency: f64,
}

/// Distinct models by decreasing frequency; ties are ordered by the hex
/// encodings so the ranking is deterministic.
pub fn visited_models(records: &[TraceRecord]) -> Result<Vec<VisitedModel>> {
    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut counts: HashMap<(&FixedBitSet, &FixedBitSet), usize> = HashMap::new();
    for r in records {
        *counts.entry((&r.theta, &r.gamma)).or_default() += 1;
    }
    let mut ranked: Vec<_> = counts
        .into_iter()
        .map(|((t, g), c)| (c, bits_to_hex(&bools_from(t)), bits_to_hex(&bools_from(g)), t, g))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)));
    let n = records.len() as f64;
    Ok(ranked
        .into_iter()
        .map(|(c, _, _, t, g)| VisitedModel {
            theta: t.clone(),
            gamma: g.clone(),
            frequency: c as f64 / n,
        })
        .collect())
}

/// Everything reported for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub pathway_marginals: Vec<f64>,
    pub gene_conditionals: Vec<GeneConditional>,
    /// Pathways the gene probabilities condition on.
    pub conditioning_set: Vec<usize>,
    pub visited_models: Vec<VisitedModel>,
}

impl PosteriorSummary {
    /// Summarizes `records`. Gene probabilities condition on the pathways
    /// whose marginal reaches `pathway_threshold`, or on every pathway if
    /// none does.
    pub fn from_records(records: &[TraceRecord], membership: &PathwayMembership, pathway_threshold: f64) -> Result<Self> {
        let marginals = pathway_marginals(records, membership.n_pathways())?;
        let mut set: Vec<usize> = (0..marginals.len()).filter(|&k| marginals[k] >= pathway_threshold).collect();
        if set.is_empty() {
            set = (0..marginals.len()).collect();
        }
        Ok(Self {
            gene_conditionals: gene_conditionals(records, membership, &set)?,
            conditioning_set: set,
            visited_models: visited_models(records)?,
            pathway_marginals: marginals,
        })
    }

    pub fn selected_pathways(&self, threshold: f64) -> Vec<usize> {
        (0..self.pathway_marginals.len())
            .filter(|&k| self.pathway_marginals[k] >= threshold)
            .collect()
    }

    pub fn selected_genes(&self, threshold: f64) -> Vec<usize> {
        (0..self.gene_conditionals.len())
            .filter(|&j| self.gene_conditionals[j].qualified() && self.gene_conditionals[j].probability >= threshold)
            .collect()
    }

    pub fn write_pathway_marginals(&self, path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<()> {
        let mut w = csv_writer(path.as_ref())?;
        w.write_record(["pathway_id", "probability"])?;
        for (id, p) in membership.pathway_ids().iter().zip(&self.pathway_marginals) {
            w.write_record([id.as_str(), &p.to_string()])?;
        }
        flush(w, path.as_ref())
    }

    pub fn write_gene_conditionals(&self, path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<()> {
        let mut w = csv_writer(path.as_ref())?;
        w.write_record(["gene_id", "probability", "flag"])?;
        for (id, g) in membership.gene_ids().iter().zip(&self.gene_conditionals) {
            let flag = if g.qualified() { "" } else { "unconditioned" };
            w.write_record([id.as_str(), &g.probability.to_string(), flag])?;
        }
        flush(w, path.as_ref())
    }

    /// Writes at most `limit` top models.
    pub fn write_models(&self, path: impl AsRef<Path>, limit: usize) -> Result<()> {
        let mut w = csv_writer(path.as_ref())?;
        w.write_record(["rank", "frequency", "theta_hex", "gamma_hex"])?;
        for (i, m) in self.visited_models.iter().take(limit).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                m.frequency.to_string(),
                bits_to_hex(&bools_from(&m.theta)),
                bits_to_hex(&bools_from(&m.gamma)),
            ])?;
        }
        flush(w, path.as_ref())
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn flush(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// A fitted least-squares predictor for one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub alpha: f64,
    pub beta: DVector<f64>,
    /// PCA loadings from the training data, one per selected pathway.
    pub loadings: Vec<DVector<f64>>,
    pub gene_index_lists: Vec<Vec<usize>>,
    pub pathways: Vec<usize>,
}

/// β̃ = (TᵀT + h⁻¹I)⁻¹TᵀY.
pub fn ridge_coefficients(t: &DMatrix<f64>, y: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let k = t.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let a = t.tr_mul(t) + DMatrix::identity(k, k) / h;
    let rhs = t.tr_mul(y);
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&rhs))
}

impl Predictor {
    /// Fits on `train`: ridge coefficients on the training PLS scores, PCA
    /// loadings computed on the training expression and sign-aligned to the
    /// PLS scores.
    pub fn fit(
        train: &Dataset,
        membership: &PathwayMembership,
        theta: &[bool],
        gamma: &[bool],
        hp: &Hyperparameters,
    ) -> Result<Self> {
        let report = crate::priors::check_validity(membership, theta, gamma);
        if !report.valid() {
            return Err(Error::InvalidState(format!("{:?}", report.violations)));
        }
        let y = &train.response;
        let pls = build_scores_for(&train.expression, y, membership, theta, gamma)?;
        let beta = ridge_coefficients(&pls.scores, y, hp.h)?;
        let mut loadings = Vec::with_capacity(pls.n_columns());
        for (c, genes) in pls.gene_index_lists.iter().enumerate() {
            let block = train.expression.select_columns(genes);
            let comp = pca_first_component(&block, Some(&pls.scores.column(c).clone_owned()))?;
            loadings.push(comp.loading);
        }
        Ok(Self {
            alpha: y.mean(),
            beta,
            loadings,
            gene_index_lists: pls.gene_index_lists,
            pathways: pls.pathways,
        })
    }

    /// Test-set principal component scores.
    pub fn test_scores(&self, test: &Dataset) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(test.n_samples(), self.loadings.len());
        for (c, (w, genes)) in self.loadings.iter().zip(&self.gene_index_lists).enumerate() {
            let mut col = t.column_mut(c);
            for (wj, &j) in w.iter().zip(genes) {
                col.axpy(*wj, &test.expression.column(j), 1.0);
            }
        }
        t
    }

    /// Ŷ = α̃·1 + T_f β̃. `test` must be centered with the training means.
    pub fn predict(&self, test: &Dataset) -> DVector<f64> {
        let mut y = self.test_scores(test) * &self.beta;
        y.add_scalar_mut(self.alpha);
        y
    }
}

/// Fits on `train` and predicts `test`.
pub fn predict(
    train: &Dataset,
    test: &Dataset,
    membership: &PathwayMembership,
    theta: &[bool],
    gamma: &[bool],
    hp: &Hyperparameters,
) -> Result<DVector<f64>> {
    if test.column_means != train.column_means {
        return Err(Error::InvalidConfig("test expression is not centered with the training means".into()));
    }
    Ok(Predictor::fit(train, membership, theta, gamma, hp)?.predict(test))
}

/// Mean squared error. With `events`, only entries with an observed event
/// enter.
pub fn prediction_mse(predicted: &DVector<f64>, observed: &DVector<f64>, events: Option<&[bool]>) -> Result<f64> {
    if predicted.len() != observed.len() || events.is_some_and(|e| e.len() != observed.len()) {
        return Err(Error::DimensionMismatch("prediction and observation lengths differ".into()));
    }
    let keep = |i: usize| events.is_none_or(|e| e[i]);
    let (sum, count) = (0..predicted.len())
        .filter(|&i| keep(i))
        .fold((0.0, 0usize), |(s, c), i| (s + (predicted[i] - observed[i]).powi(2), c + 1));
    if count == 0 {
        return Err(Error::InvalidConfig("no uncensored test cases".into()));
    }
    Ok(sum / count as f64)
}

/// Pearson correlation of two marginal vectors; `None` if either is constant.
pub fn chain_concordance(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch("marginal vectors differ in length".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some(sab / (saa * sbb).sqrt()))
}

fn csv_rows(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    reader.records().map(|r| r.map_err(Error::from)).collect()
}

fn parse_prob(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|p| (0.0..=1.0).contains(p))
        .ok_or_else(|| Error::malformed(path, line, format!("bad probability `{field}`")))
}

/// Reads `pathway_marginals.csv` back into membership order.
pub fn load_pathway_marginals(path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut out = vec![f64::NAN; membership.n_pathways()];
    for (i, rec) in csv_rows(path)?.iter().enumerate() {
        let k = membership
            .pathway_index(&rec[0])
            .ok_or_else(|| Error::malformed(path, i + 2, format!("unknown pathway `{}`", &rec[0])))?;
        out[k] = parse_prob(path, i + 2, &rec[1])?;
    }
    if let Some(k) = out.iter().position(|v| v.is_nan()) {
        return Err(Error::DimensionMismatch(format!(
            "no marginal for pathway `{}`",
            membership.pathway_ids()[k]
        )));
    }
    Ok(out)
}

/// Reads `gene_conditionals.csv` back into membership order. The qualifying
/// count is not stored, so qualified genes report a count of 1.
pub fn load_gene_conditionals(path: impl AsRef<Path>, membership: &PathwayMembership) -> Result<Vec<GeneConditional>> {
    let path = path.as_ref();
    let mut out = vec![None; membership.n_genes()];
    for (i, rec) in csv_rows(path)?.iter().enumerate() {
        let j = membership
            .gene_index(&rec[0])
            .ok_or_else(|| Error::UnknownGene(rec[0].to_string()))?;
        out[j] = Some(GeneConditional {
            probability: parse_prob(path, i + 2, &rec[1])?,
            qualifying: rec.get(2).is_none_or(str::is_empty) as usize,
        });
    }
    out.into_iter()
        .enumerate()
        .map(|(j, g)| {
            g.ok_or_else(|| Error::DimensionMismatch(format!("no probability for gene `{}`", membership.gene_ids()[j])))
        })
        .collect()
}

/// Reads `models.csv`.
pub fn load_models(path: impl AsRef<Path>, n_pathways: usize, n_genes: usize) -> Result<Vec<VisitedModel>> {
    let path = path.as_ref();
    csv_rows(path)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            Ok(VisitedModel {
                frequency: parse_prob(path, i + 2, &rec[1])?,
                theta: bitset_from(&hex_to_bits(&rec[2], n_pathways)?),
                gamma: bitset_from(&hex_to_bits(&rec[3], n_genes)?),
            })
        })
        .collect()
}

/// A valid (θ, γ) from thresholded marginals. Genes outside the selected
/// pathways are dropped, then pathways left without genes, then pathways
/// whose selected genes duplicate those of an earlier pathway.
pub fn selection_from_marginals(
    membership: &PathwayMembership,
    pathway_probs: &[f64],
    gene_probs: &[GeneConditional],
    pathway_threshold: f64,
    gene_threshold: f64,
) -> (Vec<bool>, Vec<bool>) {
    let mut theta: Vec<bool> = pathway_probs.iter().map(|&p| p >= pathway_threshold).collect();
    let covered = |theta: &[bool], j: usize| membership.pathways_of(j).iter().any(|&k| theta[k]);
    let mut gamma: Vec<bool> = (0..gene_probs.len())
        .map(|j| gene_probs[j].qualified() && gene_probs[j].probability >= gene_threshold && covered(&theta, j))
        .collect();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    for k in 0..theta.len() {
        if !theta[k] {
            continue;
        }
        let genes = crate::latent_scores::selected_genes(membership, k, &gamma);
        if genes.is_empty() || seen.contains(&genes) {
            theta[k] = false;
        } else {
            seen.push(genes);
        }
    }
    for j in 0..gamma.len() {
        gamma[j] = gamma[j] && covered(&theta, j);
    }
    // Dropping genes cannot empty a kept pathway: its genes are covered by it.
    (theta, gamma)
}

/// Writes `sample_id,y_hat`.
pub fn write_predictions(path: impl AsRef<Path>, ids: &[String], y_hat: &DVector<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["sample_id", "y_hat"])?;
    for (id, y) in ids.iter().zip(y_hat.iter()) {
        w.write_record([id.as_str(), &y.to_string()])?;
    }
    flush(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(theta: &[bool], gamma: &[bool]) -> TraceRecord {
        TraceRecord {
            iteration: 0,
            theta: bitset_from(theta),
            gamma: bitset_from(gamma),
            eta: 0.0,
            log_posterior: 0.0,
            k_theta: theta.iter().filter(|&&b| b).count(),
            n_selected_genes: gamma.iter().filter(|&&b| b).count(),
        }
    }

    #[test]
    fn marginal_counts() {
        let records: Vec<_> = (0..10).map(|i| rec(&[i < 4, true], &[true, true])).collect();
        assert_eq!(pathway_marginals(&records, 2).unwrap(), vec![0.4, 1.0]);
        assert!(matches!(pathway_marginals(&[], 2), Err(Error::EmptyTrace)));
    }

    #[test]
    fn conditionals_count_only_qualifying_records() {
        let m = PathwayMembership::from_pairs([("A", "g1"), ("A", "g2"), ("B", "g3")], Vec::new()).unwrap();
        let mut records = Vec::new();
        for i in 0..6 {
            records.push(rec(&[true, false], &[true, i < 3, false]));
        }
        for _ in 0..4 {
            records.push(rec(&[false, true], &[false, true, true]));
        }
        let g = gene_conditionals(&records, &m, &[0]).unwrap();
        assert_eq!(g[1].probability, 0.5);
        assert_eq!(g[1].qualifying, 6);
        assert!(!g[2].qualified());
        assert_eq!(g[2].probability, 0.0);
    }

    #[test]
    fn models_are_ranked() {
        let a = rec(&[true, false], &[true, false]);
        let b = rec(&[false, true], &[false, true]);
        let records = vec![a.clone(), b.clone(), b.clone()];
        let v = visited_models(&records).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].theta, b.theta);
        assert!((v.iter().map(|m| m.frequency).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mse_and_concordance() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(prediction_mse(&y, &y, None).unwrap(), 0.0);
        let shifted = y.add_scalar(0.5);
        assert!((prediction_mse(&shifted, &y, None).unwrap() - 0.25).abs() < 1e-15);
        let only_first = prediction_mse(&shifted.add_scalar(0.0), &y, Some(&[true, false, false])).unwrap();
        assert!((only_first - 0.25).abs() < 1e-15);
        let a = [0.1, 0.5, 0.9];
        assert!((chain_concordance(&a, &a).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(chain_concordance(&a, &[0.3; 3]).unwrap(), None);
    }

    #[test]
    fn empty_selection_predicts_the_mean() {
        let m = PathwayMembership::from_pairs([("A", "g1"), ("A", "g2")], Vec::new()).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0, 1.0, 1.0]);
        let ids: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
        let d = Dataset::new(ids, x, DVector::from_vec(vec![1.0, 2.0, 3.0, 6.0]), None).unwrap();
        let test = d.recentered(&d.column_means);
        let y = predict(&d, &test, &m, &[false], &[false, false], &Hyperparameters::default()).unwrap();
        assert!(y.iter().all(|&v| v == 3.0));
    }
}
