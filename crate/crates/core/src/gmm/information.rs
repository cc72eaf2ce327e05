use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use super::GmmConfig;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct InformationReport {
    /// Monte-Carlo diagonal of the observed-data Fisher information at the truth.
    pub i_diag_estimate: Vec<f64>,
    /// Diagonal of the mean-field information, exactly `1/K`.
    pub i_vb_diag: Vec<f64>,
    /// `i_vb_diag[k] / i_diag_estimate[k]`: the predicted inflation of the
    /// true posterior variance over the variational variance.
    pub theoretical_ratio: Vec<f64>,
}

/// Estimates `E[s(X) s(X)^T]` at `mu_true`, where `s` is the score of the
/// marginal mixture log-density, `s_k(x) = r_k(x) (x - mu_k)` with `r_k` the
/// posterior responsibility of component `k`.
pub fn gmm_information(config: &GmmConfig, n_mc: usize, seed: u64) -> Result<InformationReport> {
    config.validate()?;
    if n_mc < 10_000 {
        return Err(Error::invalid("n_mc must be at least 10^4"));
    }
    let k = config.k;
    let mu = &config.mu_true;
    let mut rng = rng::seeded(seed);
    let mut diag = vec![0.0; k];
    let mut resp = vec![0.0; k];
    for _ in 0..n_mc {
        let c = rng.random_range(0..k);
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = mu[c] + z;
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            let d = x - mu[j];
            resp[j] = -0.5 * d * d;
            max = max.max(resp[j]);
        }
        let mut total = 0.0;
        for r in resp.iter_mut() {
            *r = (*r - max).exp();
            total += *r;
        }
        for j in 0..k {
            let score = resp[j] / total * (x - mu[j]);
            diag[j] += score * score;
        }
    }
    let i_diag_estimate: Vec<f64> = diag.iter().map(|d| d / n_mc as f64).collect();
    let i_vb_diag = vec![1.0 / k as f64; k];
    let theoretical_ratio = i_vb_diag.iter().zip(&i_diag_estimate).map(|(v, i)| v / i).collect();
    Ok(InformationReport { i_diag_estimate, i_vb_diag, theoretical_ratio })
}
