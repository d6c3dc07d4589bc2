//! Marginal likelihood of the response with α, β and σ² integrated out: a
//! multivariate t with ν0 degrees of freedom, location α0·1 + T·β0·1 and scale
//! σ0²(I + h0·11ᵀ + h·TTᵀ).

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Fixed prior constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    /// Prior intercept mean α0.
    pub alpha0: f64,
    /// Prior coefficient mean β0.
    pub beta0: f64,
    /// Intercept prior variance scale h0.
    pub h0: f64,
    /// Coefficient prior variance scale h (Σ0 = h·I).
    pub h: f64,
    /// Degrees of freedom ν0 of the inverse-gamma prior on σ².
    pub nu0: f64,
    /// σ0², so that the inverse-gamma scale is ν0σ0²/2.
    pub sigma0_sq: f64,
    /// Prior inclusion probability φ* of each pathway.
    pub phi_star: f64,
    /// MRF sparsity parameter μ.
    pub mu_mrf: f64,
    /// Beta shapes of the prior on η/η_PT.
    pub c0: f64,
    pub d0: f64,
    /// Upper bound of η, below the phase transition.
    pub eta_pt: f64,
}

impl Default for Hyperparameters {
    /// The simulation-study settings: h0 = 1e6, α0 = β0 = 0, ν0/2 = 3,
    /// ν0σ0²/2 = 0.5, h = 0.02, φ* = 0.01, μ = −3.5, η_PT = 0.092, c0 = 5,
    /// d0 = 2.
    fn default() -> Self {
        Self {
            alpha0: 0.0,
            beta0: 0.0,
            h0: 1e6,
            h: 0.02,
            nu0: 6.0,
            sigma0_sq: 1.0 / 6.0,
            phi_star: 0.01,
            mu_mrf: -3.5,
            c0: 5.0,
            d0: 2.0,
            eta_pt: 0.092,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h0", self.h0),
            ("h", self.h),
            ("nu0", self.nu0),
            ("sigma0_sq", self.sigma0_sq),
            ("c0", self.c0),
            ("d0", self.d0),
            ("eta_pt", self.eta_pt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidHyperparameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.phi_star > 0.0 && self.phi_star < 1.0) {
            return Err(Error::InvalidHyperparameter(format!(
                "phi_star must lie in (0, 1), got {}",
                self.phi_star
            )));
        }
        for (name, v) in [("alpha0", self.alpha0), ("beta0", self.beta0), ("mu", self.mu_mrf)] {
            if !v.is_finite() {
                return Err(Error::InvalidHyperparameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

fn t_log_normalizer(n: usize, df: f64) -> f64 {
    let nf = n as f64;
    ln_gamma((df + nf) / 2.0) - ln_gamma(df / 2.0) - nf / 2.0 * (df * std::f64::consts::PI).ln()
}

fn t_log_density_from_parts(n: usize, df: f64, log_det: f64, quad: f64) -> f64 {
    t_log_normalizer(n, df) - 0.5 * log_det - (df + n as f64) / 2.0 * (quad / df).ln_1p()
}

/// Log density of the multivariate t with `df` degrees of freedom at `y`,
/// evaluated through a Cholesky factor of `scale`.
pub fn mvt_log_density(y: &DVector<f64>, location: &DVector<f64>, scale: &DMatrix<f64>, df: f64) -> Result<f64> {
    let n = y.len();
    if location.len() != n || scale.shape() != (n, n) {
        return Err(Error::DimensionMismatch("mvt arguments".into()));
    }
    let chol = Cholesky::new(scale.clone()).ok_or(Error::NotPositiveDefinite)?;
    let r = y - location;
    let half = chol.l().solve_lower_triangular(&r).ok_or(Error::NotPositiveDefinite)?;
    let quad = half.norm_squared();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(t_log_density_from_parts(n, df, log_det, quad))
}

fn location(n: usize, scores: &DMatrix<f64>, hp: &Hyperparameters) -> DVector<f64> {
    let mut loc = DVector::from_element(n, hp.alpha0);
    if hp.beta0 != 0.0 {
        for col in scores.column_iter() {
            loc.axpy(hp.beta0, &col, 1.0);
        }
    }
    loc
}

/// σ0²(I + h0·11ᵀ + h·TTᵀ)
pub fn marginal_scale(scores: &DMatrix<f64>, hp: &Hyperparameters) -> DMatrix<f64> {
    let n = scores.nrows();
    let mut s = DMatrix::from_element(n, n, hp.h0);
    if scores.ncols() > 0 {
        s.gemm(hp.h, scores, &scores.transpose(), 1.0);
    }
    for i in 0..n {
        s[(i, i)] += 1.0;
    }
    s * hp.sigma0_sq
}

/// Dense evaluation: builds the n×n scale and factors it.
pub fn marginal_log_likelihood_dense(y: &DVector<f64>, scores: &DMatrix<f64>, hp: &Hyperparameters) -> Result<f64> {
    let n = y.len();
    if scores.nrows() != n {
        return Err(Error::DimensionMismatch("score rows vs response length".into()));
    }
    mvt_log_density(y, &location(n, scores, hp), &marginal_scale(scores, hp), hp.nu0)
}

/// Low-rank factors of the marginal scale. With W = [1, T] and
/// D = diag(h0, h, …, h), the core is G = I + D^½WᵀWD^½, so that
/// |I + WDWᵀ| = |G| and (I + WDWᵀ)⁻¹ = I − WD^½G⁻¹D^½Wᵀ.
struct LowRank {
    /// W·D^½, n×m
    wd: DMatrix<f64>,
    core: Cholesky<f64, nalgebra::Dyn>,
}

impl LowRank {
    fn new(scores: &DMatrix<f64>, hp: &Hyperparameters) -> Result<Self> {
        let n = scores.nrows();
        let m = scores.ncols() + 1;
        let mut wd = DMatrix::zeros(n, m);
        wd.column_mut(0).fill(hp.h0.sqrt());
        if m > 1 {
            wd.columns_mut(1, m - 1).copy_from(&(scores * hp.h.sqrt()));
        }
        let mut g = wd.tr_mul(&wd);
        for i in 0..m {
            g[(i, i)] += 1.0;
        }
        let core = Cholesky::new(g).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { wd, core })
    }

    fn log_det_core(&self) -> f64 {
        2.0 * self.core.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// rᵀ(I + WDWᵀ)⁻¹r
    fn quad(&self, r: &DVector<f64>) -> f64 {
        let b = self.wd.tr_mul(r);
        let half = self
            .core
            .l()
            .solve_lower_triangular(&b)
            .expect("Cholesky factor is nonsingular");
        r.norm_squared() - half.norm_squared()
    }

    /// (I + WDWᵀ)⁻¹ as a dense matrix.
    fn inverse(&self) -> DMatrix<f64> {
        let n = self.wd.nrows();
        let solved = self.core.solve(&self.wd.transpose());
        let mut inv = -(&self.wd * solved);
        for i in 0..n {
            inv[(i, i)] += 1.0;
        }
        inv
    }
}

/// Low-rank evaluation through the (K_θ+1)-dimensional core.
pub fn marginal_log_likelihood_low_rank(y: &DVector<f64>, scores: &DMatrix<f64>, hp: &Hyperparameters) -> Result<f64> {
    let n = y.len();
    if scores.nrows() != n {
        return Err(Error::DimensionMismatch("score rows vs response length".into()));
    }
    let lr = LowRank::new(scores, hp)?;
    let r = y - location(n, scores, hp);
    let quad = lr.quad(&r) / hp.sigma0_sq;
    let log_det = n as f64 * hp.sigma0_sq.ln() + lr.log_det_core();
    Ok(t_log_density_from_parts(n, hp.nu0, log_det, quad))
}

/// Marginal log-likelihood of `y` given the score matrix. Uses the low-rank
/// core unless it would be larger than n. The core keeps the h0 direction out
/// of the n×n factorization, which loses digits when h0 is large.
pub fn marginal_log_likelihood(y: &DVector<f64>, scores: &DMatrix<f64>, hp: &Hyperparameters) -> Result<f64> {
    if scores.ncols() + 1 > y.len() {
        marginal_log_likelihood_dense(y, scores, hp)
    } else {
        marginal_log_likelihood_low_rank(y, scores, hp)
    }
}

/// Location, precision matrix and degrees of freedom of the marginal t; the
/// ingredients of the univariate conditionals used for AFT augmentation.
#[derive(Debug, Clone)]
pub struct MarginalT {
    pub location: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub df: f64,
}

pub fn marginal_t(scores: &DMatrix<f64>, hp: &Hyperparameters) -> Result<MarginalT> {
    let n = scores.nrows();
    let precision = LowRank::new(scores, hp)?.inverse() / hp.sigma0_sq;
    Ok(MarginalT {
        location: location(n, scores, hp),
        precision,
        df: hp.nu0,
    })
}
