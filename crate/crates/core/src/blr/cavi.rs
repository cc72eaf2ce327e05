use rand_distr::{Distribution, StandardNormal};

use super::{BlrData, BlrHyper, BlrState, WeightedGram};
use crate::engine::{FitOptions, TiltedObjective};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::stats::{logit, sigmoid, xlogx, xlogy};
use crate::weights::RandomWeights;

/// Keeps the MAP inclusion rate strictly inside (0, 1).
const XI_EPS: f64 = 1e-12;

/// Weighted expected residual sum of squares under the factorised state.
fn expected_ss(gram: &WeightedGram, state: &BlrState) -> f64 {
    let b = state.beta_mean();
    let var = state.beta_var();
    let spread: f64 = (0..gram.p).map(|j| gram.g(j, j) * var[j]).sum();
    gram.residual_ss(&b) + spread
}

fn elbo_from_ss(ess: f64, gram: &WeightedGram, state: &BlrState, hyper: &BlrHyper) -> f64 {
    let (sigma2, xi) = (state.sigma2, state.xi);
    let ln_s2 = sigma2.ln();
    let mut total = -(0.5 * gram.weight_sum + 0.5 * hyper.nu + 1.0) * ln_s2
        - (ess + hyper.nu * hyper.lambda) / (2.0 * sigma2)
        + xlogy(hyper.a0 - 1.0, xi)
        + xlogy(hyper.b0 - 1.0, 1.0 - xi);
    let slab_scale = hyper.v1 * sigma2;
    for j in 0..state.phi.len() {
        let (f, m, s) = (state.phi[j], state.mu[j], state.s2[j]);
        total += xlogy(f, xi) + xlogy(1.0 - f, 1.0 - xi) - xlogx(f) - xlogx(1.0 - f);
        if f > 0.0 {
            total += f * (0.5 * (s / slab_scale).ln() + 0.5 - (m * m + s) / (2.0 * slab_scale));
        }
    }
    total
}

/// Weighted ELBO with `sigma2` and `xi` treated as points; constants that do
/// not depend on the state are dropped.
pub fn blr_elbo(state: &BlrState, data: &BlrData, weights: &RandomWeights, hyper: &BlrHyper) -> f64 {
    let gram = WeightedGram::new(data, weights.as_tilt());
    elbo_from_ss(expected_ss(&gram, state), &gram, state, hyper)
}

pub fn blr_cavi_step(state: &BlrState, data: &BlrData, weights: &RandomWeights, hyper: &BlrHyper) -> Result<BlrState> {
    let objective = BlrTilted::new(data, weights, hyper)?;
    objective.check_state(state)?;
    let mut next = state.clone();
    objective.sweep(&mut next)?;
    Ok(next)
}

/// Maximiser of `A ln xi + B ln(1 - xi)` on `[XI_EPS, 1 - XI_EPS]`.
fn map_inclusion_rate(a: f64, b: f64) -> f64 {
    let lo = XI_EPS;
    let hi = 1.0 - XI_EPS;
    if a >= 0.0 && b >= 0.0 && a + b > 0.0 {
        return (a / (a + b)).clamp(lo, hi);
    }
    // Non-concave corner cases (a0 or b0 below one): compare the candidates.
    let f = |t: f64| a * t.ln() + b * (1.0 - t).ln();
    let interior = if a + b != 0.0 { (a / (a + b)).clamp(lo, hi) } else { 0.5 };
    [lo, hi, interior].into_iter().fold(lo, |best, t| if f(t) > f(best) { t } else { best })
}

/// Regression objective with a weight vector fixed; holds the weighted Gram
/// matrix so each sweep costs `O(p^2)`.
#[derive(Debug, Clone)]
pub struct BlrTilted<'a> {
    data: &'a BlrData,
    hyper: &'a BlrHyper,
    gram: WeightedGram,
}

impl<'a> BlrTilted<'a> {
    pub fn new(data: &'a BlrData, weights: &'a RandomWeights, hyper: &'a BlrHyper) -> Result<Self> {
        hyper.validate()?;
        if weights.len() != data.n {
            return Err(Error::invalid(format!(
                "weight vector has length {} but the dataset has {} observations",
                weights.len(),
                data.n
            )));
        }
        Ok(BlrTilted { data, hyper, gram: WeightedGram::new(data, weights.as_tilt()) })
    }

    pub fn gram(&self) -> &WeightedGram {
        &self.gram
    }
}

impl TiltedObjective for BlrTilted<'_> {
    type State = BlrState;

    /// Restart 0 is the deterministic default start; later restarts draw the
    /// slab means from `N(0, init_spread^2)`.
    fn init_state(&self, restart: usize, options: &FitOptions, rng: &mut StreamRng) -> BlrState {
        let mut state = BlrState::initial(self.data, self.hyper);
        if restart > 0 {
            for m in state.mu.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *m = options.init_spread * z;
            }
        }
        state
    }

    fn check_state(&self, state: &BlrState) -> Result<()> {
        state.check(self.data.p)
    }

    fn sweep(&self, state: &mut BlrState) -> Result<f64> {
        let p = self.data.p;
        let hyper = self.hyper;
        let gram = &self.gram;
        let inv_v1 = 1.0 / hyper.v1;
        let prior_logit = logit(state.xi);
        let slab_scale = hyper.v1 * state.sigma2;
        let mut b = state.beta_mean();

        for j in 0..p {
            let prec = inv_v1 + gram.g(j, j);
            let r = gram.partial_residual(j, &b);
            let s2 = state.sigma2 / prec;
            let mu = r / prec;
            let log_odds = prior_logit + 0.5 * (s2 / slab_scale).ln() + mu * mu / (2.0 * s2);
            let phi = sigmoid(log_odds);
            if !(s2.is_finite() && mu.is_finite() && phi.is_finite()) {
                return Err(Error::numerical("blr coordinate update", j));
            }
            state.s2[j] = s2;
            state.mu[j] = mu;
            state.phi[j] = phi;
            b[j] = phi * mu;
        }

        let ess = expected_ss(gram, state);
        let included: f64 = state.phi.iter().sum();
        let slab_ss: f64 =
            (0..p).map(|j| state.phi[j] * (state.mu[j] * state.mu[j] + state.s2[j])).sum::<f64>() * inv_v1;
        let sigma2 = (ess + hyper.nu * hyper.lambda + slab_ss) / (gram.weight_sum + hyper.nu + 2.0 + included);
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::numerical("blr noise variance update", p));
        }
        state.sigma2 = sigma2;
        state.xi = map_inclusion_rate(hyper.a0 - 1.0 + included, hyper.b0 - 1.0 + p as f64 - included);

        Ok(elbo_from_ss(ess, gram, state, hyper))
    }

    fn elbo(&self, state: &BlrState) -> f64 {
        elbo_from_ss(expected_ss(&self.gram, state), &self.gram, state, self.hyper)
    }

    fn theta_mean(&self, state: &BlrState) -> Vec<f64> {
        state.beta_mean()
    }

    fn theta_var(&self, state: &BlrState) -> Vec<f64> {
        state.beta_var()
    }
}
