mod common;

use nalgebra::{DMatrix, DVector};
use pathsel::latent_scores::{pca_first_component, pls_first_component, pls_for_genes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn centered(mut x: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in x.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    x
}

#[test]
fn pls_loading_matches_eigenvector_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let n = rng.random_range(5..40);
        let m = rng.random_range(1..8);
        let x = centered(common::random_matrix(n, m, &mut rng));
        let y = DVector::from_fn(n, |i, _| x[(i, 0)] + common::randn(&mut rng));
        let c = pls_first_component(&x, &y);
        let w = common::pls_loading(&x, &y);
        assert!((&c.loading - &w).amax() < 1e-10);
        assert!((c.loading.norm() - 1.0).abs() < 1e-12);
        assert!((&c.scores - &x * &w).amax() < 1e-10);
    }
}

#[test]
fn gene_subset_equals_block_extraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x = centered(common::random_matrix(20, 9, &mut rng));
    let y = DVector::from_fn(20, |_, _| common::randn(&mut rng));
    let genes = [1, 4, 7];
    let direct = pls_for_genes(&x, &genes, &y);
    let block = pls_first_component(&x.select_columns(&genes), &y);
    assert!((&direct.scores - &block.scores).amax() < 1e-14);
}

#[test]
fn single_gene_block_is_the_gene_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = centered(common::random_matrix(15, 1, &mut rng));
    let y = DVector::from_fn(15, |i, _| -2.0 * x[(i, 0)] + 0.1 * common::randn(&mut rng));
    let c = pls_first_component(&x, &y);
    // The sign follows y, so the negatively related gene is flipped.
    assert!((c.loading[0] + 1.0).abs() < 1e-12);
}

#[test]
fn pca_matches_principal_axis_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.random_range(6..30);
        let m = rng.random_range(1..6);
        let x = centered(common::random_matrix(n, m, &mut rng));
        let align = DVector::from_fn(n, |_, _| common::randn(&mut rng));
        let c = pca_first_component(&x, Some(&align)).unwrap();
        let w = common::principal_axis(&x, &align);
        assert!((&c.loading - &w).amax() < 1e-8);
    }
}
