//! Latent log-time augmentation for censored survival outcomes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::graph_data::Dataset;
use crate::likelihood::{marginal_t, Hyperparameters};

/// Draws from a Student t with `df` degrees of freedom, location `loc` and
/// scale `scale`, truncated to `(lower, ∞)`, by inversion.
pub fn sample_truncated_t<R: Rng + ?Sized>(loc: f64, scale: f64, df: f64, lower: f64, rng: &mut R) -> f64 {
    let t = StudentsT::new(0.0, 1.0, df).expect("valid t parameters");
    let b = (lower - loc) / scale;
    let u: f64 = rng.random();
    let x = if b < 0.0 {
        let fb = t.cdf(b);
        t.inverse_cdf(fb + u * (1.0 - fb))
    } else {
        // Work in the upper tail through symmetry: P(X > b) = F(−b).
        let tail = t.cdf(-b);
        -t.inverse_cdf(tail * (1.0 - u))
    };
    // Guard the boundary against rounding in the inversion.
    let z = loc + scale * x;
    if z > lower {
        z
    } else {
        lower + f64::EPSILON * lower.abs().max(1.0)
    }
}

/// One Gibbs sweep over the censored entries of `z`.
///
/// Under the marginal multivariate t with location m, precision P and ν
/// degrees of freedom, Z_i given the other entries is t with ν+n−1 degrees
/// of freedom, location m_i − (P(z−m))_i/P_ii + (z_i − m_i), and squared
/// scale (ν + q₋ᵢ)/((ν+n−1)·P_ii), where q₋ᵢ = rᵀPr − (Pr)_i²/P_ii. Censored
/// entries are drawn from that conditional truncated to (log Y_i, ∞);
/// observed entries stay at log Y_i.
pub fn augment_aft<R: Rng + ?Sized>(
    z: &[f64],
    data: &Dataset,
    scores: &DMatrix<f64>,
    hp: &Hyperparameters,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let events = data
        .censoring
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("AFT augmentation needs a survival outcome".into()))?;
    let n = data.n_samples();
    if z.len() != n {
        return Err(Error::DimensionMismatch("latent vector length".into()));
    }
    let mut out = z.to_vec();
    for i in 0..n {
        if events[i] {
            out[i] = data.response[i];
        }
    }
    if events.iter().all(|&e| e) {
        return Ok(out);
    }
    let mt = marginal_t(scores, hp)?;
    let p = &mt.precision;
    let df_cond = mt.df + (n - 1) as f64;
    let mut r = DVector::from_column_slice(&out) - &mt.location;
    let mut pr = p * &r;
    for i in 0..n {
        if events[i] {
            continue;
        }
        let pii = p[(i, i)];
        let q = r.dot(&pr);
        let q_rest = (q - pr[i] * pr[i] / pii).max(0.0);
        let cond_loc = mt.location[i] + r[i] - pr[i] / pii;
        let cond_scale = ((mt.df + q_rest) / (df_cond * pii)).sqrt();
        let lower = data.response[i];
        let draw = sample_truncated_t(cond_loc, cond_scale, df_cond, lower, rng);
        let delta = draw - out[i];
        out[i] = draw;
        r[i] += delta;
        pr.axpy(delta, &p.column(i), 1.0);
    }
    Ok(out)
}
