//! Brute-force reference implementations used by the integration and
//! acceptance tests. Each avoids the code path it checks: eigendecompositions
//! instead of Cholesky or low-rank updates, full
//! enumeration instead of sampling, and numerical quadrature instead of
//! closed forms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use pathsel::graph_data::{GeneNetwork, PathwayMembership};
use pathsel::likelihood::Hyperparameters;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

pub fn randn<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| randn(rng))
}

/// Multivariate t log density from a symmetric eigendecomposition of the
/// scale.
pub fn t_log_density(y: &DVector<f64>, loc: &DVector<f64>, scale: &DMatrix<f64>, df: f64) -> f64 {
    let n = y.len() as f64;
    let eig = SymmetricEigen::new(scale.clone());
    assert!(eig.eigenvalues.min() > 0.0, "scale must be positive definite");
    let r = y - loc;
    let proj = eig.eigenvectors.transpose() * &r;
    let q: f64 = proj.iter().zip(eig.eigenvalues.iter()).map(|(p, l)| p * p / l).sum();
    let log_det: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    ln_gamma((df + n) / 2.0) - ln_gamma(df / 2.0) - 0.5 * n * (df * std::f64::consts::PI).ln() - 0.5 * log_det
        - 0.5 * (df + n) * (1.0 + q / df).ln()
}

/// Marginal likelihood of Y ~ t_ν0(α0·1 + T·β0·1, σ0²(A + h0·11ᵀ)) with
/// A = I + h·TTᵀ. A is eigendecomposed and the intercept term is handled by
/// the rank-one determinant and inverse identities, so the h0 direction never
/// enters a factorization.
pub fn marginal_log_likelihood(y: &DVector<f64>, t: &DMatrix<f64>, hp: &Hyperparameters) -> f64 {
    let n = y.len();
    let ones = DVector::from_element(n, 1.0);
    let mut loc = &ones * hp.alpha0;
    for c in 0..t.ncols() {
        loc += t.column(c) * hp.beta0;
    }
    let a = DMatrix::identity(n, n) + t * t.transpose() * hp.h;
    let eig = SymmetricEigen::new(a);
    let solve = |v: &DVector<f64>| {
        let proj = eig.eigenvectors.transpose() * v;
        let scaled = DVector::from_fn(n, |i, _| proj[i] / eig.eigenvalues[i]);
        &eig.eigenvectors * scaled
    };
    let r = y - loc;
    let a_inv_r = solve(&r);
    let a_inv_1 = solve(&ones);
    let s11 = ones.dot(&a_inv_1);
    let s1r = ones.dot(&a_inv_r);
    let denom = 1.0 + hp.h0 * s11;
    let quad = (r.dot(&a_inv_r) - hp.h0 * s1r * s1r / denom) / hp.sigma0_sq;
    let log_det = n as f64 * hp.sigma0_sq.ln() + eig.eigenvalues.iter().map(|l| l.ln()).sum::<f64>() + denom.ln();
    let df = hp.nu0;
    let nf = n as f64;
    ln_gamma((df + nf) / 2.0) - ln_gamma(df / 2.0) - 0.5 * nf * (df * std::f64::consts::PI).ln() - 0.5 * log_det
        - 0.5 * (df + nf) * (1.0 + quad / df).ln()
}

/// Dominant unit eigenvector of C_xy C_xyᵀ by a general symmetric eigen
/// decomposition, signed so that the scores covary non-negatively with y.
pub fn pls_loading(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = x.nrows();
    let yc = y.add_scalar(-y.mean());
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let cxy = xc.transpose() * &yc / (n as f64 - 1.0);
    let m = &cxy * cxy.transpose();
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.imax();
    let mut w = eig.eigenvectors.column(top).clone_owned();
    if (x * &w).dot(&yc) < 0.0 {
        w.neg_mut();
    }
    w
}

/// All 2^p binary vectors, index bit j giving γ_j.
pub fn all_configurations(p: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..(1 << p)).map(move |b| (0..p).map(|j| b >> j & 1 == 1).collect())
}

pub fn config_index(gamma: &[bool]) -> usize {
    gamma.iter().enumerate().map(|(j, &g)| (g as usize) << j).sum()
}

/// γᵀRγ from a dense adjacency.
pub fn dense_quadratic_form(r: &DMatrix<u8>, gamma: &[bool]) -> f64 {
    let mut s = 0.0;
    for i in 0..gamma.len() {
        for j in 0..gamma.len() {
            if gamma[i] && gamma[j] {
                s += r[(i, j)] as f64;
            }
        }
    }
    s
}

/// Exact MRF probabilities over all 2^p configurations.
pub fn mrf_distribution(r: &DMatrix<u8>, mu: f64, eta: f64) -> Vec<f64> {
    let p = r.nrows();
    let logs: Vec<f64> = all_configurations(p)
        .map(|g| mu * g.iter().filter(|&&b| b).count() as f64 + eta * dense_quadratic_form(r, &g))
        .collect();
    normalize_logs(&logs)
}

/// log Z_η by enumeration.
pub fn mrf_log_normalizer(r: &DMatrix<u8>, mu: f64, eta: f64) -> f64 {
    let logs: Vec<f64> = all_configurations(r.nrows())
        .map(|g| mu * g.iter().filter(|&&b| b).count() as f64 + eta * dense_quadratic_form(r, &g))
        .collect();
    log_sum_exp(&logs)
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn normalize_logs(v: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(v);
    v.iter().map(|x| (x - z).exp()).collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Dense R_θ under the union rule: edges whose endpoints both lie in some
/// selected pathway.
pub fn dense_active_union(network: &GeneNetwork, membership: &PathwayMembership, theta: &[bool]) -> DMatrix<u8> {
    let p = network.n_genes();
    let covered: Vec<bool> = (0..p)
        .map(|j| (0..theta.len()).any(|k| theta[k] && membership.is_member(k, j)))
        .collect();
    DMatrix::from_fn(p, p, |i, j| (network.has_edge(i, j) && covered[i] && covered[j]) as u8)
}

/// Validity by definition: every selected pathway has a selected gene,
/// every selected gene lies in a selected pathway, and no two selected
/// pathways share the same selected-gene set.
pub fn is_valid(membership: &PathwayMembership, theta: &[bool], gamma: &[bool]) -> bool {
    let k = theta.len();
    let sets: Vec<Vec<usize>> = (0..k)
        .filter(|&t| theta[t])
        .map(|t| (0..gamma.len()).filter(|&j| gamma[j] && membership.is_member(t, j)).collect())
        .collect();
    if sets.iter().any(|s| s.is_empty()) {
        return false;
    }
    for j in 0..gamma.len() {
        if gamma[j] && !(0..k).any(|t| theta[t] && membership.is_member(t, j)) {
            return false;
        }
    }
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            if sets[a] == sets[b] {
                return false;
            }
        }
    }
    true
}

/// Composite Simpson weights on an even number of intervals.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    assert!(f.len() % 2 == 1 && f.len() >= 3);
    let n = f.len() - 1;
    let mut s = f[0] + f[n];
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f[i];
    }
    s * h / 3.0
}

/// Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Ridge coefficients from the normal equations via an explicit inverse.
pub fn ridge(t: &DMatrix<f64>, y: &DVector<f64>, h: f64) -> DVector<f64> {
    let k = t.ncols();
    let a = t.transpose() * t + DMatrix::identity(k, k) / h;
    a.try_inverse().expect("ridge system invertible") * t.transpose() * y
}

/// First principal axis of the columns of `x` (already centered), signed to
/// correlate non-negatively with `align`.
pub fn principal_axis(x: &DMatrix<f64>, align: &DVector<f64>) -> DVector<f64> {
    let cov = x.transpose() * x;
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.imax();
    let mut w = eig.eigenvectors.column(top).clone_owned();
    if (x * &w).dot(align) < 0.0 {
        w.neg_mut();
    }
    w
}
