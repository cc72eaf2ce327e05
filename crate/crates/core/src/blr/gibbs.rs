use rand::RngExt;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use super::{BlrData, BlrHyper, WeightedGram};
use crate::draws::{DrawMeta, DrawSource, GibbsSettings, PosteriorDraws};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlrGibbsOptions {
    /// Hold the inclusion rate fixed instead of sampling it.
    pub fixed_xi: Option<f64>,
}

/// Log odds of `gamma_j = 1` with `beta_j` integrated out:
/// `logit(xi) - ln(1 + v1 ||X_j||^2) / 2 + <R_j, X_j>^2 / (2 sigma2 (1/v1 + ||X_j||^2))`.
pub fn inclusion_log_odds(partial_residual: f64, col_norm_sq: f64, sigma2: f64, xi: f64, v1: f64) -> f64 {
    let prec = 1.0 / v1 + col_norm_sq;
    xi.ln() - (1.0 - xi).ln() - 0.5 * (1.0 + v1 * col_norm_sq).ln()
        + partial_residual * partial_residual / (2.0 * sigma2 * prec)
}

/// `beta_j | gamma_j = 1, rest ~ N(r / prec, sigma2 / prec)`, `prec = 1/v1 + ||X_j||^2`.
/// Returns `(mean, variance)`.
pub fn slab_conditional(partial_residual: f64, col_norm_sq: f64, sigma2: f64, v1: f64) -> (f64, f64) {
    let prec = 1.0 / v1 + col_norm_sq;
    (partial_residual / prec, sigma2 / prec)
}

/// `sigma2 | rest ~ IG(shape, rate)` given the residual sum of squares, the
/// number of included coefficients and their sum of squares.
pub fn noise_conditional(rss: f64, n: usize, included: f64, beta_sq: f64, hyper: &BlrHyper) -> (f64, f64) {
    let shape = 0.5 * (hyper.nu + n as f64 + included);
    let rate = 0.5 * (hyper.nu * hyper.lambda + rss + beta_sq / hyper.v1);
    (shape, rate)
}

/// `xi | gamma ~ Beta(a0 + sum gamma, b0 + p - sum gamma)`.
pub fn inclusion_rate_conditional(included: f64, p: usize, hyper: &BlrHyper) -> (f64, f64) {
    (hyper.a0 + included, hyper.b0 + p as f64 - included)
}

pub fn blr_gibbs(data: &BlrData, hyper: &BlrHyper, settings: GibbsSettings, seed: u64) -> Result<PosteriorDraws> {
    blr_gibbs_with(data, hyper, settings, seed, BlrGibbsOptions::default())
}

/// Single-site Gibbs sampler: for each `j`, `gamma_j` from its collapsed
/// conditional then `beta_j | gamma_j`; then `sigma2` from its inverse-gamma
/// conditional and `xi` from its beta conditional. Returns `beta` draws.
pub fn blr_gibbs_with(
    data: &BlrData,
    hyper: &BlrHyper,
    settings: GibbsSettings,
    seed: u64,
    options: BlrGibbsOptions,
) -> Result<PosteriorDraws> {
    hyper.validate()?;
    settings.validate()?;
    if let Some(xi) = options.fixed_xi {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::invalid("fixed xi must lie in (0, 1]"));
        }
    }
    let p = data.p;
    let gram = WeightedGram::new(data, None);
    let mut rng = rng::seeded(seed);
    let (_, var_y) = crate::stats::mean_var(&data.y);
    let mut sigma2 = if var_y > 0.0 { var_y } else { 1.0 };
    let mut xi = options.fixed_xi.unwrap_or(0.5);
    let mut beta = vec![0.0; p];
    let mut gamma = vec![true; p];
    let mut rows = Vec::with_capacity(settings.n_samples);
    let mut meta = Vec::with_capacity(settings.n_samples);

    for t in 0..settings.total_iterations() {
        for j in 0..p {
            let d = gram.g(j, j);
            let r = gram.partial_residual(j, &beta);
            let odds = inclusion_log_odds(r, d, sigma2, xi, hyper.v1);
            let u: f64 = rng.random();
            gamma[j] = u < sigmoid(odds);
            beta[j] = if gamma[j] {
                let (mean, var) = slab_conditional(r, d, sigma2, hyper.v1);
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + z * var.sqrt()
            } else {
                0.0
            };
        }
        let included = gamma.iter().filter(|g| **g).count() as f64;
        let rss = gram.residual_ss(&beta).max(0.0);
        let beta_sq: f64 = beta.iter().map(|b| b * b).sum();
        let (shape, rate) = noise_conditional(rss, data.n, included, beta_sq, hyper);
        let g: f64 =
            Gamma::new(shape, 1.0 / rate).map_err(|_| Error::numerical("blr gibbs sigma2", t))?.sample(&mut rng);
        sigma2 = 1.0 / g;
        if options.fixed_xi.is_none() {
            let (a, b) = inclusion_rate_conditional(included, p, hyper);
            xi = Beta::new(a, b).map_err(|_| Error::numerical("blr gibbs xi", t))?.sample(&mut rng);
        }
        if !sigma2.is_finite() {
            return Err(Error::numerical("blr gibbs sigma2", t));
        }
        if settings.keeps(t) {
            let row = rows.len();
            rows.push((row, beta.clone()));
            meta.push(DrawMeta { converged: true, elbo: f64::NAN, iterations: t + 1, failed: false });
        }
    }
    PosteriorDraws::new(p, DrawSource::Gibbs, seed, rows, meta)
}
