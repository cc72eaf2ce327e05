//! One-dimensional Gaussian mixture with known unit component variances and
//! equal mixing weights; the parameter of interest is the vector of centres.

mod cavi;
mod gibbs;
mod information;

pub use cavi::{gmm_cavi_step, gmm_elbo, update_assignments, update_components, GmmTilted};
pub use gibbs::{assignment_probabilities, centre_conditional, gmm_gibbs};
pub use information::{gmm_information, InformationReport};

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::VariationalModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::weights::RandomWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmConfig {
    pub k: usize,
    /// Prior standard deviation of each centre.
    pub prior_sd: f64,
    pub mu_true: Vec<f64>,
}

impl GmmConfig {
    /// Centres evenly spaced `delta` apart and symmetric about zero; for
    /// `k = 3` this is `(-delta, 0, delta)`.
    pub fn with_separation(k: usize, delta: f64) -> Self {
        let mid = (k as f64 - 1.0) / 2.0;
        let mu_true = (0..k).map(|j| delta * (j as f64 - mid)).collect();
        GmmConfig { k, prior_sd: 5.0, mu_true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if !(self.prior_sd > 0.0) {
            return Err(Error::invalid("prior_sd must be positive"));
        }
        if self.mu_true.len() != self.k {
            return Err(Error::invalid("mu_true must have K entries"));
        }
        Ok(())
    }

    pub(crate) fn prior_precision(&self) -> f64 {
        1.0 / (self.prior_sd * self.prior_sd)
    }
}

/// Mean-field state: `N(m_k, s2_k)` for each centre and a categorical row
/// `phi[i*K..(i+1)*K]` for each assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmState {
    pub m: Vec<f64>,
    pub s2: Vec<f64>,
    pub phi: Vec<f64>,
}

impl GmmState {
    pub fn k(&self) -> usize {
        self.m.len()
    }

    pub fn phi_row(&self, i: usize) -> &[f64] {
        let k = self.k();
        &self.phi[i * k..(i + 1) * k]
    }

    pub fn check(&self, n: usize, config: &GmmConfig) -> Result<()> {
        let k = config.k;
        if self.m.len() != k || self.s2.len() != k || self.phi.len() != n * k {
            return Err(Error::invalid("GMM state dimensions do not match data and K"));
        }
        let cap = config.prior_sd * config.prior_sd;
        if self.m.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("GMM state has non-finite means"));
        }
        if self.s2.iter().any(|&s| !(s > 0.0 && s <= cap)) {
            return Err(Error::invalid("GMM variances must lie in (0, prior_sd^2]"));
        }
        for (i, row) in self.phi.chunks_exact(k).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("assignment row {i} is not a distribution")));
            }
        }
        Ok(())
    }

    /// Applies a label permutation: slot `k` of the result is slot `perm[k]`
    /// of `self`.
    pub fn permuted(&self, perm: &[usize]) -> GmmState {
        let k = self.k();
        let m = perm.iter().map(|&p| self.m[p]).collect();
        let s2 = perm.iter().map(|&p| self.s2[p]).collect();
        let phi = self.phi.chunks_exact(k).flat_map(|row| perm.iter().map(move |&p| row[p])).collect();
        GmmState { m, s2, phi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmSample {
    pub x: Vec<f64>,
    pub assignments: Vec<usize>,
}

pub fn simulate_gmm(n: usize, config: &GmmConfig, seed: u64) -> Result<GmmSample> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    config.validate()?;
    let mut rng = rng::seeded(seed);
    let mut x = Vec::with_capacity(n);
    let mut assignments = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..config.k);
        let z: f64 = StandardNormal.sample(&mut rng);
        assignments.push(c);
        x.push(config.mu_true[c] + z);
    }
    Ok(GmmSample { x, assignments })
}

/// The mixture model bound to an observed sample.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub x: Vec<f64>,
    pub config: GmmConfig,
}

impl GmmModel {
    pub fn new(x: Vec<f64>, config: GmmConfig) -> Result<Self> {
        config.validate()?;
        if x.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(GmmModel { x, config })
    }
}

impl VariationalModel for GmmModel {
    type State = GmmState;
    type Tilted<'a> = GmmTilted<'a>;

    fn n_obs(&self) -> usize {
        self.x.len()
    }

    fn dim(&self) -> usize {
        self.config.k
    }

    fn bind<'a>(&'a self, weights: &'a RandomWeights) -> Result<GmmTilted<'a>> {
        GmmTilted::new(&self.x, weights, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draws::GibbsSettings;
    use crate::engine::{run_weighted_cavi, FitOptions, TiltedObjective};
    use crate::stats::mean_var;
    use proptest::prelude::*;

    fn toy_state(m: Vec<f64>, s2: Vec<f64>, phi: Vec<f64>) -> GmmState {
        GmmState { m, s2, phi }
    }

    #[test]
    fn simulation_moments() {
        let zero = simulate_gmm(10_000, &GmmConfig::with_separation(3, 0.0), 3).unwrap();
        assert!(mean_var(&zero.x).0.abs() < 0.1);
        let wide = simulate_gmm(10_000, &GmmConfig::with_separation(3, 5.0), 4).unwrap();
        let v = mean_var(&wide.x).1;
        assert!((v / 17.667 - 1.0).abs() < 0.05, "{v}");
        let again = simulate_gmm(10_000, &GmmConfig::with_separation(3, 5.0), 4).unwrap();
        assert_eq!(wide, again);
        assert!(simulate_gmm(0, &GmmConfig::with_separation(3, 5.0), 4).is_err());
    }

    #[test]
    fn forced_assignment_gives_conjugate_update() {
        let x = [0.3, -1.2, 2.5, 0.7];
        let config = GmmConfig::with_separation(2, 1.0);
        let mut state = toy_state(vec![0.0, 0.0], vec![1.0, 1.0], [1.0, 0.0].repeat(4));
        update_components(&mut state, &x, &RandomWeights::unit(4), &config).unwrap();
        let prec = 1.0 / 25.0 + 4.0;
        let sum: f64 = x.iter().sum();
        assert!((state.m[0] - sum / prec).abs() < 1e-14);
        assert!((state.s2[0] - 1.0 / prec).abs() < 1e-14);
        assert!((state.s2[1] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_data_keeps_means_antisymmetric() {
        let x = [-1.0, 0.0, 1.0];
        let config = GmmConfig::with_separation(2, 1.0);
        let mut state = toy_state(vec![-0.7, 0.7], vec![1.0, 1.0], vec![0.5; 6]);
        for _ in 0..5 {
            state = gmm_cavi_step(&state, &x, &RandomWeights::unit(3), &config).unwrap();
            assert!((state.m[0] + state.m[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn doubled_weights_match_duplicated_data() {
        let x = [-2.1, 0.4, 3.3, 1.0, -0.2];
        let config = GmmConfig::with_separation(3, 2.0);
        let init = toy_state(vec![-1.0, 0.2, 2.0], vec![1.0; 3], vec![1.0 / 3.0; 15]);
        let doubled = gmm_cavi_step(&init, &x, &RandomWeights::from_values(vec![2.0; 5]).unwrap(), &config).unwrap();
        let xx: Vec<f64> = x.iter().chain(&x).copied().collect();
        let mut init2 = init.clone();
        init2.phi = init.phi.repeat(2);
        let dup = gmm_cavi_step(&init2, &xx, &RandomWeights::unit(10), &config).unwrap();
        for j in 0..3 {
            assert!((doubled.m[j] - dup.m[j]).abs() < 1e-12);
            assert!((doubled.s2[j] - dup.s2[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn elbo_matches_direct_formula() {
        let x = [-1.3, 0.2, 0.9, 2.4, -0.5];
        let config = GmmConfig::with_separation(2, 1.0);
        let phi = vec![0.9, 0.1, 0.6, 0.4, 0.25, 0.75, 0.0, 1.0, 0.7, 0.3];
        let state = toy_state(vec![-0.8, 1.6], vec![0.3, 0.45], phi.clone());
        let got = gmm_elbo(&state, &x, &RandomWeights::unit(5), &config);

        let (m, s2) = ([-0.8, 1.6], [0.3, 0.45]);
        let mut want = 0.0;
        for k in 0..2 {
            want += -(s2[k] + m[k] * m[k]) / 50.0 + 0.5 * f64::ln(s2[k]);
        }
        for i in 0..5 {
            for k in 0..2 {
                let p: f64 = phi[2 * i + k];
                let ent = if p > 0.0 { p * p.ln() } else { 0.0 };
                want += p * (x[i] * m[k] - 0.5 * (m[k] * m[k] + s2[k]) - 0.5 * x[i] * x[i]) - ent;
            }
        }
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn fused_sweep_elbo_matches_direct_evaluation() {
        let sample = simulate_gmm(200, &GmmConfig::with_separation(3, 3.0), 8).unwrap();
        let config = GmmConfig::with_separation(3, 3.0);
        let w = crate::weights::draw_weights(200, crate::weights::WeightScheme::Exp1, 2).unwrap();
        let t = GmmTilted::new(&sample.x, &w, &config).unwrap();
        let mut state = t.init_state(0, &FitOptions::default(), &mut crate::rng::seeded(1));
        for _ in 0..4 {
            let reported = t.sweep(&mut state).unwrap();
            let direct = gmm_elbo(&state, &sample.x, &w, &config);
            assert!((reported - direct).abs() < 1e-9 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn per_observation_terms_are_linear_in_weights() {
        let sample = simulate_gmm(30, &GmmConfig::with_separation(3, 2.0), 5).unwrap();
        let config = GmmConfig::with_separation(3, 2.0);
        let w = crate::weights::draw_weights(30, crate::weights::WeightScheme::Exp1, 6).unwrap();
        let w2 = RandomWeights::from_values(w.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        let zero = RandomWeights::from_values(vec![0.0; 30]).unwrap();
        let state = toy_state(vec![-1.5, 0.1, 2.2], vec![0.2, 0.3, 0.4], vec![1.0 / 3.0; 90]);
        let base = gmm_elbo(&state, &sample.x, &zero, &config);
        let one = gmm_elbo(&state, &sample.x, &w, &config) - base;
        let two = gmm_elbo(&state, &sample.x, &w2, &config) - base;
        assert!((two - 2.0 * one).abs() < 1e-10 * one.abs().max(1.0));
    }

    #[test]
    fn rows_stay_normalised_with_extreme_separation() {
        let x = [-40.0, 0.0, 40.0];
        let config = GmmConfig::with_separation(3, 40.0);
        let state = toy_state(vec![-30.0, 0.0, 30.0], vec![1.0; 3], vec![1.0 / 3.0; 9]);
        let next = gmm_cavi_step(&state, &x, &RandomWeights::unit(3), &config).unwrap();
        next.check(3, &config).unwrap();
    }

    #[test]
    fn gibbs_conjugate_single_observation() {
        let config = GmmConfig { k: 1, prior_sd: 5.0, mu_true: vec![0.0] };
        let settings = GibbsSettings { n_samples: 10_000, burnin: 10, thin: 1 };
        let draws = gmm_gibbs(&[0.0], &config, settings, 17).unwrap();
        let (mean, var) = mean_var(&draws.column(0));
        let post_var: f64 = 1.0 / (1.0 / 25.0 + 1.0);
        assert!(mean.abs() < 3.0 * (post_var / 10_000.0).sqrt(), "{mean}");
        assert!((var / post_var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn gibbs_is_deterministic_and_thinned() {
        let sample = simulate_gmm(100, &GmmConfig::with_separation(3, 4.0), 1).unwrap();
        let config = GmmConfig::with_separation(3, 4.0);
        let settings = GibbsSettings { n_samples: 20, burnin: 30, thin: 3 };
        let a = gmm_gibbs(&sample.x, &config, settings, 9).unwrap();
        let b = gmm_gibbs(&sample.x, &config, settings, 9).unwrap();
        assert_eq!(a.rows().collect::<Vec<_>>(), b.rows().collect::<Vec<_>>());
        assert_eq!(a.n_draws(), 20);
    }

    #[test]
    fn information_limits() {
        let far = gmm_information(&GmmConfig::with_separation(3, 20.0), 400_000, 1).unwrap();
        for (d, r) in far.i_diag_estimate.iter().zip(&far.theoretical_ratio) {
            assert!((d * 3.0 - 1.0).abs() < 0.02, "{d}");
            assert!((r - 1.0).abs() < 0.02, "{r}");
        }
        let zero = gmm_information(&GmmConfig::with_separation(3, 0.0), 100_000, 2).unwrap();
        for d in &zero.i_diag_estimate {
            assert!((d * 9.0 - 1.0).abs() < 0.03, "{d}");
        }
        let mid = gmm_information(&GmmConfig::with_separation(3, 5.0), 100_000, 3).unwrap();
        assert_eq!(mid.i_vb_diag, vec![1.0 / 3.0; 3]);
        assert!(mid.theoretical_ratio.iter().all(|r| *r > 1.0));
        assert!(gmm_information(&GmmConfig::with_separation(3, 5.0), 9_999, 3).is_err());
    }

    #[test]
    fn variational_variance_near_k_over_n() {
        let config = GmmConfig::with_separation(3, 3.0);
        let sample = simulate_gmm(500, &config, 21).unwrap();
        let model = GmmModel::new(sample.x, config.clone()).unwrap();
        let opts = FitOptions { n_restarts: 3, ..FitOptions::default() };
        let fit = crate::engine::multi_restart_fit(&model, &RandomWeights::unit(500), &opts).unwrap();
        for s in &fit.theta_var {
            assert!((500.0 * s / 3.0 - 1.0).abs() < 0.1, "{s}");
        }
    }

    #[test]
    fn fit_from_fixed_init_matches_straight_line_iteration() {
        let x = [-1.7, -0.9, 1.1, 2.0];
        let config = GmmConfig::with_separation(2, 2.0);
        let init = toy_state(vec![-0.5, 0.5], vec![1.0, 1.0], vec![0.5; 8]);
        let model = GmmModel::new(x.to_vec(), config.clone()).unwrap();
        let opts = FitOptions { max_iters: 3000, elbo_rel_tol: f64::MIN_POSITIVE, ..FitOptions::default() };
        let fit = run_weighted_cavi(&model, &RandomWeights::unit(4), init, &opts).unwrap();

        let (mut m, mut s2) = ([-0.5f64, 0.5f64], [1.0f64, 1.0f64]);
        for _ in 0..fit.iterations {
            let mut mass = [0.0; 2];
            let mut first = [0.0; 2];
            for &xi in &x {
                let a = (xi * m[0] - 0.5 * (s2[0] + m[0] * m[0])).exp();
                let b = (xi * m[1] - 0.5 * (s2[1] + m[1] * m[1])).exp();
                let p = [a / (a + b), b / (a + b)];
                for k in 0..2 {
                    mass[k] += p[k];
                    first[k] += p[k] * xi;
                }
            }
            for k in 0..2 {
                s2[k] = 1.0 / (0.04 + mass[k]);
                m[k] = first[k] * s2[k];
            }
        }
        for k in 0..2 {
            assert!((fit.final_state.m[k] - m[k]).abs() < 1e-10);
            assert!((fit.final_state.s2[k] - s2[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn restarts_recover_separated_centres() {
        let config = GmmConfig::with_separation(3, 5.0);
        let sample = simulate_gmm(500, &config, 5).unwrap();
        let model = GmmModel::new(sample.x, config).unwrap();
        let opts = FitOptions { n_restarts: 5, seed: 3, ..FitOptions::default() };
        let fit = crate::engine::multi_restart_fit(&model, &RandomWeights::unit(500), &opts).unwrap();
        let mut m = fit.theta_mean.clone();
        m.sort_by(f64::total_cmp);
        for (a, b) in m.iter().zip([-5.0, 0.0, 5.0]) {
            assert!((a - b).abs() < 0.2, "{m:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn sweeps_never_decrease_elbo(seed in any::<u64>(), delta in 0.0f64..6.0, n in 5usize..60) {
            let config = GmmConfig::with_separation(3, delta);
            let sample = simulate_gmm(n, &config, seed).unwrap();
            let w = crate::weights::draw_weights(n, crate::weights::WeightScheme::Exp1, seed ^ 1).unwrap();
            let t = GmmTilted::new(&sample.x, &w, &config).unwrap();
            let mut state = t.init_state(0, &FitOptions::default(), &mut crate::rng::seeded(seed));
            let mut prev = gmm_elbo(&state, &sample.x, &w, &config);
            for _ in 0..20 {
                let next = t.sweep(&mut state).unwrap();
                prop_assert!(next >= prev - 1e-8 * (1.0 + prev.abs()));
                prev = next;
            }
        }

        #[test]
        fn gibbs_conditional_matches_joint_ratio(
            x in -10.0f64..10.0,
            mu in proptest::collection::vec(-8.0f64..8.0, 2..6),
        ) {
            let p = assignment_probabilities(x, &mu);
            let log_joint = |m: f64| -0.5 * (x - m) * (x - m);
            for a in 0..mu.len() {
                for b in 0..mu.len() {
                    let want = (log_joint(mu[a]) - log_joint(mu[b])).exp();
                    let got = p[a] / p[b];
                    prop_assert!((got - want).abs() <= 1e-10 * want.max(1.0));
                }
            }
        }
    }
}
