use rand_distr::{Distribution, StandardNormal};

use super::{GmmConfig, GmmState};
use crate::engine::{FitOptions, TiltedObjective};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::stats;
use crate::weights::RandomWeights;

fn weight_at(w: Option<&[f64]>, i: usize) -> f64 {
    w.map_or(1.0, |w| w[i])
}

/// Assignment update: `phi_ik ∝ exp{x_i m_k - (s2_k + m_k^2) / 2}`.
///
/// Weights do not enter because each row is maximised separately.
pub fn update_assignments(state: &mut GmmState, x: &[f64]) -> Result<()> {
    let k = state.k();
    let half: Vec<f64> = (0..k).map(|j| 0.5 * (state.s2[j] + state.m[j] * state.m[j])).collect();
    let mut logits = vec![0.0; k];
    for (i, (&xi, row)) in x.iter().zip(state.phi.chunks_exact_mut(k)).enumerate() {
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            logits[j] = xi * state.m[j] - half[j];
            max = max.max(logits[j]);
        }
        let mut total = 0.0;
        for j in 0..k {
            row[j] = (logits[j] - max).exp();
            total += row[j];
        }
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::numerical("gmm assignment update", i));
        }
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    Ok(())
}

/// Centre update given the current assignments:
/// `s2_k = 1 / (1/sigma0^2 + sum_i w_i phi_ik)`, `m_k = s2_k * sum_i w_i x_i phi_ik`.
pub fn update_components(state: &mut GmmState, x: &[f64], weights: &RandomWeights, config: &GmmConfig) -> Result<()> {
    let k = state.k();
    let w = weights.as_tilt();
    let prior_prec = config.prior_precision();
    for j in 0..k {
        let mut mass = 0.0;
        let mut sum = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let wp = weight_at(w, i) * state.phi[i * k + j];
            mass += wp;
            sum += xi * wp;
        }
        let prec = prior_prec + mass;
        state.s2[j] = 1.0 / prec;
        state.m[j] = sum / prec;
        if !(state.m[j].is_finite() && state.s2[j].is_finite()) {
            return Err(Error::numerical("gmm component update", j));
        }
    }
    Ok(())
}

/// One full weighted CAVI sweep: assignments from the incoming centres, then
/// centres from the new assignments.
pub fn gmm_cavi_step(state: &GmmState, x: &[f64], weights: &RandomWeights, config: &GmmConfig) -> Result<GmmState> {
    let objective = GmmTilted::new(x, weights, config)?;
    objective.check_state(state)?;
    let mut next = state.clone();
    objective.sweep(&mut next)?;
    Ok(next)
}

/// Weighted ELBO with additive constants dropped. Per-observation terms
/// (expected log-likelihood and assignment entropy) carry the weight; the
/// prior and the entropy of the centre factors do not.
pub fn gmm_elbo(state: &GmmState, x: &[f64], weights: &RandomWeights, config: &GmmConfig) -> f64 {
    let k = state.k();
    let w = weights.as_tilt();
    let prior_prec = config.prior_precision();
    let prior: f64 = (0..k).map(|j| state.s2[j] + state.m[j] * state.m[j]).sum::<f64>();
    let entropy_mu: f64 = state.s2.iter().map(|s| s.ln()).sum::<f64>();
    let mut per_obs = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let row = state.phi_row(i);
        let mut term = 0.0;
        for j in 0..k {
            let d = xi - state.m[j];
            term -= 0.5 * row[j] * (d * d + state.s2[j]);
            term -= stats::xlogx(row[j]);
        }
        per_obs += weight_at(w, i) * term;
    }
    -0.5 * prior_prec * prior + per_obs + 0.5 * entropy_mu
}

/// The mixture objective with a weight vector fixed.
#[derive(Debug, Clone)]
pub struct GmmTilted<'a> {
    x: &'a [f64],
    weights: &'a RandomWeights,
    config: &'a GmmConfig,
    data_mean: f64,
    data_sd: f64,
}

impl<'a> GmmTilted<'a> {
    pub fn new(x: &'a [f64], weights: &'a RandomWeights, config: &'a GmmConfig) -> Result<Self> {
        config.validate()?;
        if weights.len() != x.len() {
            return Err(Error::invalid(format!(
                "weight vector has length {} but the dataset has {} observations",
                weights.len(),
                x.len()
            )));
        }
        let (data_mean, var) = stats::mean_var(x);
        let data_sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        Ok(GmmTilted { x, weights, config, data_mean, data_sd })
    }
}

impl TiltedObjective for GmmTilted<'_> {
    type State = GmmState;

    /// Centres from `N(mean(x), (init_spread * sd(x))^2)`, unit variances
    /// (capped at the prior variance) and uniform assignments.
    fn init_state(&self, _restart: usize, options: &FitOptions, rng: &mut StreamRng) -> GmmState {
        let k = self.config.k;
        let scale = options.init_spread * self.data_sd;
        let m = (0..k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.data_mean + scale * z
            })
            .collect();
        let s2 = vec![1.0f64.min(self.config.prior_sd * self.config.prior_sd); k];
        let phi = vec![1.0 / k as f64; k * self.x.len()];
        GmmState { m, s2, phi }
    }

    fn check_state(&self, state: &GmmState) -> Result<()> {
        state.check(self.x.len(), self.config)
    }

    fn sweep(&self, state: &mut GmmState) -> Result<f64> {
        let k = state.k();
        let x = self.x;
        let w = self.weights.as_tilt();
        let prior_prec = self.config.prior_precision();

        let half: Vec<f64> = (0..k).map(|j| 0.5 * (state.s2[j] + state.m[j] * state.m[j])).collect();
        let mut mass = vec![0.0; k];
        let mut first = vec![0.0; k];
        let mut second = vec![0.0; k];
        // sum_i w_i sum_k phi_ik log phi_ik
        let mut neg_entropy = 0.0;
        let mut logits = vec![0.0; k];

        for (i, (&xi, row)) in x.iter().zip(state.phi.chunks_exact_mut(k)).enumerate() {
            let mut max = f64::NEG_INFINITY;
            for j in 0..k {
                logits[j] = xi * state.m[j] - half[j];
                max = max.max(logits[j]);
            }
            let mut total = 0.0;
            for j in 0..k {
                row[j] = (logits[j] - max).exp();
                total += row[j];
            }
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::numerical("gmm assignment update", i));
            }
            let mut plogp = 0.0;
            for j in 0..k {
                row[j] /= total;
                plogp += row[j] * (logits[j] - max);
            }
            plogp -= total.ln();
            let x2 = xi * xi;
            match w {
                None => {
                    for j in 0..k {
                        let p = row[j];
                        mass[j] += p;
                        first[j] += xi * p;
                        second[j] += x2 * p;
                    }
                    neg_entropy += plogp;
                }
                Some(w) => {
                    let wi = w[i];
                    for j in 0..k {
                        let wp = wi * row[j];
                        mass[j] += wp;
                        first[j] += xi * wp;
                        second[j] += x2 * wp;
                    }
                    neg_entropy += wi * plogp;
                }
            }
        }

        let mut prior = 0.0;
        let mut fit = 0.0;
        let mut entropy_mu = 0.0;
        for j in 0..k {
            let prec = prior_prec + mass[j];
            let s2 = 1.0 / prec;
            let m = first[j] / prec;
            if !(m.is_finite() && s2.is_finite()) {
                return Err(Error::numerical("gmm component update", j));
            }
            state.s2[j] = s2;
            state.m[j] = m;
            prior += s2 + m * m;
            fit += second[j] - 2.0 * m * first[j] + (m * m + s2) * mass[j];
            entropy_mu += s2.ln();
        }
        Ok(-0.5 * prior_prec * prior - 0.5 * fit - neg_entropy + 0.5 * entropy_mu)
    }

    fn elbo(&self, state: &GmmState) -> f64 {
        gmm_elbo(state, self.x, self.weights, self.config)
    }

    fn theta_mean(&self, state: &GmmState) -> Vec<f64> {
        state.m.clone()
    }

    fn theta_var(&self, state: &GmmState) -> Vec<f64> {
        state.s2.clone()
    }
}
