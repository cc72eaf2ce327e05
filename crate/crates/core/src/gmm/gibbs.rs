use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use super::GmmConfig;
use crate::draws::{DrawMeta, DrawSource, GibbsSettings, PosteriorDraws};
use crate::error::{Error, Result};
use crate::rng;

/// Full conditional of one assignment: `P(c = k) ∝ exp{x mu_k - mu_k^2 / 2}`.
pub fn assignment_probabilities(x: f64, mu: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mu.len());
    fill_assignment(x, mu, &mut out);
    out
}

fn fill_assignment(x: f64, mu: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let mut max = f64::NEG_INFINITY;
    for &m in mu {
        let l = x * m - 0.5 * m * m;
        out.push(l);
        max = max.max(l);
    }
    let mut total = 0.0;
    for l in out.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    for p in out.iter_mut() {
        *p /= total;
    }
}

/// Full conditional of one centre given the assignments: `N(sum / prec, 1 / prec)`
/// with `prec = 1/sigma0^2 + count`. Returns `(mean, variance)`.
pub fn centre_conditional(sum: f64, count: f64, config: &GmmConfig) -> (f64, f64) {
    let prec = config.prior_precision() + count;
    (sum / prec, 1.0 / prec)
}

fn initial_centres(x: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (0..k)
        .map(|j| {
            let pos = ((j as f64 + 0.5) / k as f64 * n as f64) as usize;
            sorted[pos.min(n - 1)]
        })
        .collect()
}

/// Two-block Gibbs sampler for the centres: assignments given centres, then
/// each centre from its conjugate normal given the assignments. Starts from
/// evenly spaced sample quantiles.
pub fn gmm_gibbs(x: &[f64], config: &GmmConfig, settings: GibbsSettings, seed: u64) -> Result<PosteriorDraws> {
    config.validate()?;
    settings.validate()?;
    if x.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    let k = config.k;
    let mut rng = rng::seeded(seed);
    let mut mu = initial_centres(x, k);
    let mut probs = Vec::with_capacity(k);
    let mut count = vec![0.0; k];
    let mut sum = vec![0.0; k];
    let mut rows = Vec::with_capacity(settings.n_samples);
    let mut meta = Vec::with_capacity(settings.n_samples);

    for t in 0..settings.total_iterations() {
        count.iter_mut().for_each(|c| *c = 0.0);
        sum.iter_mut().for_each(|s| *s = 0.0);
        for &xi in x {
            fill_assignment(xi, &mu, &mut probs);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut c = k - 1;
            for (j, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    c = j;
                    break;
                }
            }
            count[c] += 1.0;
            sum[c] += xi;
        }
        // An empty cluster has count 0 and draws from the prior N(0, sigma0^2).
        for j in 0..k {
            let (mean, var) = centre_conditional(sum[j], count[j], config);
            let z: f64 = StandardNormal.sample(&mut rng);
            mu[j] = mean + z * var.sqrt();
        }
        if settings.keeps(t) {
            let row = rows.len();
            rows.push((row, mu.clone()));
            meta.push(DrawMeta { converged: true, elbo: f64::NAN, iterations: t + 1, failed: false });
        }
    }
    PosteriorDraws::new(k, DrawSource::Gibbs, seed, rows, meta)
}
