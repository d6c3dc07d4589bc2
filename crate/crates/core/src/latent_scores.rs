//! Per-pathway latent summaries: the first PLS component for fitting and the
//! first principal component for prediction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph_data::{Dataset, ModelState, PathwayMembership};

/// A single latent component of a gene block.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub scores: DVector<f64>,
    /// Unit-norm weight vector over the block's columns.
    pub loading: DVector<f64>,
}

/// Relative size below which the covariance vector counts as zero.
const ZERO_COVARIANCE: f64 = 1e-13;

/// First PLS component of `x_sub` against `y`.
///
/// C_xy C_xyᵀ has rank one, so its dominant unit eigenvector is C_xy/‖C_xy‖,
/// and that choice already has cov(scores, y) = ‖C_xy‖ ≥ 0.
pub fn pls_first_component(x_sub: &DMatrix<f64>, y: &DVector<f64>) -> Component {
    let m = x_sub.ncols();
    assert!(m >= 1, "PLS needs at least one column");
    assert_eq!(x_sub.nrows(), y.len(), "row count mismatch");
    let loading = pls_loading(x_sub.column_iter().map(|c| c.clone_owned()), y, m);
    let scores = x_sub * &loading;
    Component { scores, loading }
}

fn pls_loading<I>(columns: I, y: &DVector<f64>, m: usize) -> DVector<f64>
where
    I: Iterator<Item = DVector<f64>>,
{
    let n = y.len();
    let ybar = y.mean();
    let yc = y.add_scalar(-ybar);
    let denom = (n.max(2) - 1) as f64;
    let mut cov = DVector::zeros(m);
    let mut scale = 0.0f64;
    for (c, col) in columns.enumerate() {
        cov[c] = col.dot(&yc) / denom;
        scale = scale.max(col.norm());
    }
    let norm = cov.norm();
    if norm <= ZERO_COVARIANCE * scale.max(1.0) * yc.norm().max(1.0) {
        log::warn!("PLS covariance vector vanishes; using the first basis vector");
        let mut e = DVector::zeros(m);
        e[0] = 1.0;
        return e;
    }
    cov / norm
}

/// First PLS component computed directly from the selected columns of the
/// full expression matrix.
pub fn pls_for_genes(x: &DMatrix<f64>, genes: &[usize], y: &DVector<f64>) -> Component {
    let loading = pls_loading(genes.iter().map(|&j| x.column(j).clone_owned()), y, genes.len());
    let mut scores = DVector::zeros(x.nrows());
    for (w, &j) in loading.iter().zip(genes) {
        scores.axpy(*w, &x.column(j), 1.0);
    }
    Component { scores, loading }
}

/// Dominant unit eigenvector of the sample covariance of `x_sub`.
///
/// When `alignment` is given, the sign is chosen so that the scores correlate
/// non-negatively with it; otherwise the largest-magnitude loading entry is
/// made positive.
pub fn pca_first_component(x_sub: &DMatrix<f64>, alignment: Option<&DVector<f64>>) -> Result<Component> {
    let (n, m) = x_sub.shape();
    if m == 0 {
        return Err(Error::RankZero("no columns".into()));
    }
    let denom = (n.max(2) - 1) as f64;
    let cov = x_sub.tr_mul(x_sub) / denom;
    let eig = SymmetricEigen::new(cov);
    let (top, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("m >= 1");
    if !(lambda > 0.0) || lambda <= f64::EPSILON * eig.eigenvalues.amax() * m as f64 {
        return Err(Error::RankZero("covariance of the gene block is zero".into()));
    }
    let mut loading = eig.eigenvectors.column(top).clone_owned();
    loading.normalize_mut();
    let mut scores = x_sub * &loading;
    let flip = match alignment {
        Some(a) => scores.dot(a) < 0.0,
        None => {
            let imax = loading.iamax();
            loading[imax] < 0.0
        }
    };
    if flip {
        loading.neg_mut();
        scores.neg_mut();
    }
    Ok(Component { scores, loading })
}

/// T_(θ,γ): one PLS score column per selected pathway, in pathway index
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub scores: DMatrix<f64>,
    pub loadings: Vec<DVector<f64>>,
    pub gene_index_lists: Vec<Vec<usize>>,
    pub pathways: Vec<usize>,
}

impl ScoreMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            scores: DMatrix::zeros(n, 0),
            loadings: Vec::new(),
            gene_index_lists: Vec::new(),
            pathways: Vec::new(),
        }
    }

    pub fn n_columns(&self) -> usize {
        self.scores.ncols()
    }
}

/// Selected genes of pathway `k` under `gamma`.
pub fn selected_genes(membership: &PathwayMembership, k: usize, gamma: &[bool]) -> Vec<usize> {
    membership
        .genes_of(k)
        .iter()
        .copied()
        .filter(|&j| gamma[j])
        .collect()
}

/// Scores for `state` against an explicit response vector.
pub fn build_scores_for(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    membership: &PathwayMembership,
    theta: &[bool],
    gamma: &[bool],
) -> Result<ScoreMatrix> {
    let n = x.nrows();
    let selected: Vec<usize> = (0..theta.len()).filter(|&k| theta[k]).collect();
    let mut scores = DMatrix::zeros(n, selected.len());
    let mut loadings = Vec::with_capacity(selected.len());
    let mut lists = Vec::with_capacity(selected.len());
    for (c, &k) in selected.iter().enumerate() {
        let genes = selected_genes(membership, k, gamma);
        if genes.is_empty() {
            return Err(Error::InvalidState(format!(
                "selected pathway `{}` has no selected genes",
                membership.pathway_ids()[k]
            )));
        }
        let comp = pls_for_genes(x, &genes, y);
        scores.set_column(c, &comp.scores);
        loadings.push(comp.loading);
        lists.push(genes);
    }
    Ok(ScoreMatrix {
        scores,
        loadings,
        gene_index_lists: lists,
        pathways: selected,
    })
}

/// T_(θ,γ) for the current state. Survival outcomes use the augmented Z.
pub fn build_score_matrix(data: &Dataset, membership: &PathwayMembership, state: &ModelState) -> Result<ScoreMatrix> {
    let y = state.response(data);
    build_scores_for(&data.expression, &y, membership, &state.theta, &state.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_centered(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let x = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        crate::graph_data::center_columns(x).0
    }

    #[test]
    fn single_gene_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_centered(12, 1, &mut rng);
        let y = DVector::from_fn(12, |i, _| -x[(i, 0)] + 0.1 * i as f64);
        let c = pls_first_component(&x, &y);
        assert!((c.loading[0].abs() - 1.0).abs() < 1e-15);
        assert!(c.scores.dot(&y.add_scalar(-y.mean())) >= 0.0);
        assert!((c.scores.abs() - x.column(0).abs()).amax() < 1e-15);
    }

    #[test]
    fn identical_columns_split_weight_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let col = random_centered(15, 1, &mut rng);
        let x = DMatrix::from_fn(15, 2, |i, _| col[(i, 0)]);
        let y = DVector::from_fn(15, |i, _| 2.0 * col[(i, 0)] + 0.01 * (i % 3) as f64);
        let c = pls_first_component(&x, &y);
        let h = 1.0 / 2f64.sqrt();
        assert!((c.loading[0] - h).abs() < 1e-12 && (c.loading[1] - h).abs() < 1e-12);
    }

    #[test]
    fn zero_covariance_falls_back_to_basis_vector() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, -2.0, 1.0, 2.0, -1.0, -2.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]);
        let c = pls_first_component(&x, &y);
        assert_eq!(c.loading.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn pls_for_genes_matches_block_call() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_centered(20, 6, &mut rng);
        let y = DVector::from_fn(20, |_, _| rng.sample::<f64, _>(StandardNormal));
        let genes = [1, 3, 4];
        let block = x.select_columns(&genes);
        let a = pls_first_component(&block, &y);
        let b = pls_for_genes(&x, &genes, &y);
        assert!((a.loading - b.loading).amax() < 1e-14);
        assert!((a.scores - b.scores).amax() < 1e-12);
    }

    #[test]
    fn pca_single_column_and_rank_zero() {
        let x = DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 1.0]);
        let c = pca_first_component(&x, None).unwrap();
        assert!((c.scores.abs() - x.column(0).abs()).amax() < 1e-15);
        let zero = DMatrix::zeros(5, 2);
        assert!(matches!(pca_first_component(&zero, None), Err(Error::RankZero(_))));
    }

    #[test]
    fn pca_alignment_negates_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_centered(30, 3, &mut rng);
        let free = pca_first_component(&x, None).unwrap();
        let against = -free.scores.clone();
        let aligned = pca_first_component(&x, Some(&against)).unwrap();
        assert!((&aligned.scores + &free.scores).amax() < 1e-12);
        assert!(aligned.scores.dot(&against) >= 0.0);
    }

    #[test]
    fn score_matrix_requires_selected_genes() {
        let m = PathwayMembership::from_pairs([("A", "g1"), ("B", "g2")], Vec::new()).unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[-1.0, 1.0, 0.0, 0.0, 1.0, -1.0]);
        let y = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let err = build_scores_for(&x, &y, &m, &[true, true], &[true, false]).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
        let t = build_scores_for(&x, &y, &m, &[true, false], &[true, false]).unwrap();
        assert_eq!(t.n_columns(), 1);
        assert_eq!(t.scores.column(0).as_slice(), &[1.0, 0.0, -1.0]);
    }
}
