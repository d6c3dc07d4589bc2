//! Simulation from the MRF prior at fixed η: systematic-scan Gibbs sweeps,
//! monotone coupling-from-the-past, and the grid scan used to locate η_PT.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph_data::GeneNetwork;
use crate::priors::{logistic, mrf_field};

/// Default cap on the number of sweeps CFTP may go back in time.
pub const DEFAULT_CFTP_MAX_SWEEPS: usize = 1 << 20;

/// One systematic-scan Gibbs sweep over all genes in index order.
pub fn gibbs_sweep<R: Rng + ?Sized>(gamma: &mut [bool], adjacency: &GeneNetwork, mu: f64, eta: f64, rng: &mut R) {
    for j in 0..gamma.len() {
        let p = logistic(mrf_field(gamma, j, adjacency, mu, eta));
        gamma[j] = rng.random::<f64>() < p;
    }
}

/// Heat-bath sweep driven by a fixed stream of uniforms; the deterministic
/// update map shared by both CFTP chains.
fn coupled_sweep(upper: &mut [bool], lower: &mut [bool], adjacency: &GeneNetwork, mu: f64, eta: f64, stream: &mut ChaCha8Rng) {
    for j in 0..upper.len() {
        let u: f64 = stream.random();
        upper[j] = u < logistic(mrf_field(upper, j, adjacency, mu, eta));
        lower[j] = u < logistic(mrf_field(lower, j, adjacency, mu, eta));
        debug_assert!(!lower[j] || upper[j], "monotone coupling violated");
    }
}

/// Exact draw from the MRF by monotone coupling from the past.
///
/// Chains started from all-ones and all-zeros at time −T share one uniform
/// stream per sweep; each sweep's stream is fixed by a seed drawn once, so
/// restarts from −2T reuse the randomness of the later sweeps. Requires
/// η ≥ 0 so the update map is monotone.
pub fn cftp_perfect_sample<R: Rng + ?Sized>(
    adjacency: &GeneNetwork,
    mu: f64,
    eta: f64,
    rng: &mut R,
    max_sweeps: usize,
) -> Result<Vec<bool>> {
    assert!(eta >= 0.0, "CFTP needs an attractive field (eta >= 0)");
    let p = adjacency.n_genes();
    // seeds[t] drives the sweep that ends at time −t.
    let mut seeds: Vec<u64> = Vec::new();
    let mut horizon = 1usize;
    let mut upper = vec![true; p];
    let mut lower = vec![false; p];
    loop {
        while seeds.len() < horizon {
            seeds.push(rng.random());
        }
        upper.fill(true);
        lower.fill(false);
        for t in (0..horizon).rev() {
            let mut stream = ChaCha8Rng::seed_from_u64(seeds[t]);
            coupled_sweep(&mut upper, &mut lower, adjacency, mu, eta, &mut stream);
        }
        if upper == lower {
            return Ok(upper);
        }
        if horizon >= max_sweeps {
            return Err(Error::CftpNoCoalescence(max_sweeps));
        }
        horizon = (horizon * 2).min(max_sweeps);
    }
}

/// Monte-Carlo estimates of E[Σγ] over a grid of η values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScanResult {
    pub grid: Vec<f64>,
    pub mean_selected: Vec<f64>,
    /// Batch-means standard error of each estimate.
    pub std_error: Vec<f64>,
    pub eta_pt_estimate: Option<f64>,
}

impl GridScanResult {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        writeln!(out, "eta,mean_selected,std_error").expect("in-memory write");
        for i in 0..self.grid.len() {
            writeln!(out, "{},{},{}", self.grid[i], self.mean_selected[i], self.std_error[i]).expect("in-memory write");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Fewest sweeps accepted by [`phase_transition_scan`].
pub const MIN_SCAN_SWEEPS: usize = 100;
const SCAN_BATCHES: usize = 20;

/// Evenly spaced grid `lo, …, hi` with `points` entries.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && hi > lo);
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Estimates E[Σγ] at every grid η by Gibbs sampling from all-zeros, with
/// the first fifth of the sweeps discarded. All grid points share one random
/// stream (common random numbers), so differences between neighboring points
/// reflect η rather than sampling noise.
///
/// The η_PT estimate is the grid point where the forward difference of the
/// mean is largest; none is reported when that jump is below twice the
/// largest standard error on the grid.
pub fn phase_transition_scan<R: Rng + ?Sized>(
    adjacency: &GeneNetwork,
    mu: f64,
    grid: &[f64],
    sweeps: usize,
    rng: &mut R,
) -> Result<GridScanResult> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("eta grid must be strictly increasing with at least two points".into()));
    }
    if grid[0] < 0.0 {
        return Err(Error::InvalidConfig("eta grid must be non-negative".into()));
    }
    if sweeps < MIN_SCAN_SWEEPS {
        return Err(Error::InvalidConfig(format!("scan needs at least {MIN_SCAN_SWEEPS} sweeps")));
    }
    let burn_in = sweeps / 5;
    let kept = sweeps - burn_in;
    let batch = kept / SCAN_BATCHES;
    let seed: u64 = rng.random();
    let p = adjacency.n_genes();

    let mut means = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    for &eta in grid {
        let mut stream = ChaCha8Rng::seed_from_u64(seed);
        let mut gamma = vec![false; p];
        for _ in 0..burn_in {
            gibbs_sweep(&mut gamma, adjacency, mu, eta, &mut stream);
        }
        let mut batch_means = vec![0.0; SCAN_BATCHES];
        let mut total = 0.0;
        for s in 0..kept {
            gibbs_sweep(&mut gamma, adjacency, mu, eta, &mut stream);
            let count = gamma.iter().filter(|&&g| g).count() as f64;
            total += count;
            let b = s / batch;
            if b < SCAN_BATCHES {
                batch_means[b] += count / batch as f64;
            }
        }
        let mean = total / kept as f64;
        let bm = batch_means.iter().sum::<f64>() / SCAN_BATCHES as f64;
        let var = batch_means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (SCAN_BATCHES - 1) as f64;
        means.push(mean);
        errors.push((var / SCAN_BATCHES as f64).sqrt());
    }

    let (jump_at, jump) = means
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid has two points");
    let noise = errors.iter().cloned().fold(0.0, f64::max);
    let eta_pt_estimate = (jump > 0.0 && jump >= 2.0 * noise).then_some(grid[jump_at]);
    Ok(GridScanResult {
        grid: grid.to_vec(),
        mean_selected: means,
        std_error: errors,
        eta_pt_estimate,
    })
}
