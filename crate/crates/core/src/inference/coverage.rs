//! Repeated-sampling coverage of the four interval constructions.

use rayon::prelude::*;

use super::align::{align_labels, apply_permutation};
use super::interval::{quantile_interval, vb_marginal_interval, CredibleInterval, IntervalMethod, VbMarginal};
use crate::blr::{blr_gibbs, simulate_blr, BlrHyper, BlrModel};
use crate::draws::{GibbsSettings, PosteriorDraws};
use crate::engine::{multi_restart_fit, FitOptions};
use crate::error::{Error, Result};
use crate::gmm::{gmm_gibbs, simulate_gmm, GmmConfig, GmmModel};
use crate::rng;
use crate::vwlb::{reverted_draws, run_vwlb, VwlbOptions};
use crate::weights::{RandomWeights, WeightScheme};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Gmm(GmmConfig),
    Blr { beta_true: Vec<f64>, rho: f64, noise_sd: f64, hyper: BlrHyper },
}

impl ModelSpec {
    pub fn truth(&self) -> &[f64] {
        match self {
            ModelSpec::Gmm(c) => &c.mu_true,
            ModelSpec::Blr { beta_true, .. } => beta_true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub model: ModelSpec,
    pub n: usize,
    /// Number of simulated datasets `R`.
    pub replicates: usize,
    /// Bootstrap draws `B` per dataset.
    pub bootstrap: usize,
    pub level: f64,
    pub scheme: WeightScheme,
    /// Options for both the unweighted fit and every bootstrap fit.
    pub fit: FitOptions,
    pub gibbs: GibbsSettings,
    pub master_seed: u64,
    /// Worker threads across datasets.
    pub parallelism: usize,
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.replicates == 0 || self.bootstrap == 0 || self.parallelism == 0 {
            return Err(Error::invalid("n, R, B and parallelism must all be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("interval level must lie in (0, 1)"));
        }
        self.fit.validate()?;
        self.gibbs.validate()?;
        if let ModelSpec::Gmm(c) = &self.model {
            c.validate()?;
        }
        Ok(())
    }

    /// Short stable fingerprint of every setting.
    pub fn digest(&self) -> String {
        let text = format!("{self:?}");
        let h =
            text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3));
        format!("{h:016x}")
    }

    pub fn dataset_seed(&self, r: usize) -> u64 {
        rng::derive_seed(self.master_seed, "dataset", r as u64)
    }

    pub fn gibbs_seed(&self, r: usize) -> u64 {
        rng::derive_seed(self.master_seed, "gibbs", r as u64)
    }

    pub fn vb_seed(&self, r: usize) -> u64 {
        rng::derive_seed(self.master_seed, "vb", r as u64)
    }

    pub fn vwlb_seed(&self, r: usize) -> u64 {
        rng::derive_seed(self.master_seed, "vwlb", r as u64)
    }
}

/// Everything computed for one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub index: usize,
    pub vb_mean: Vec<f64>,
    pub vb_var: Vec<f64>,
    /// One interval per coordinate for each method, in `IntervalMethod::ALL` order.
    pub intervals: Vec<Vec<CredibleInterval>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateSummary {
    pub coverage: f64,
    pub mean_length: f64,
    pub sd_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub method: IntervalMethod,
    pub per_coordinate: Vec<CoordinateSummary>,
    pub n_replicates: usize,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageOutcome {
    /// In `IntervalMethod::ALL` order.
    pub reports: Vec<CoverageReport>,
    pub replicates: Vec<ReplicateRecord>,
}

impl CoverageOutcome {
    pub fn report(&self, method: IntervalMethod) -> &CoverageReport {
        self.reports.iter().find(|r| r.method == method).expect("all methods are reported")
    }
}

fn align_rows(draws: &mut PosteriorDraws, truth: &[f64]) -> Result<()> {
    for i in 0..draws.n_draws() {
        let perm = align_labels(draws.row(i), truth)?;
        let aligned = apply_permutation(draws.row(i), &perm);
        draws.row_mut(i).copy_from_slice(&aligned);
    }
    Ok(())
}

struct Fitted {
    vb_mean: Vec<f64>,
    vb_var: Vec<f64>,
    marginals: Vec<VbMarginal>,
    gibbs: PosteriorDraws,
    vwlb: PosteriorDraws,
}

fn fit_gmm(config: &CoverageConfig, gmm: &GmmConfig, r: usize) -> Result<Fitted> {
    let sample = simulate_gmm(config.n, gmm, config.dataset_seed(r))?;
    let model = GmmModel::new(sample.x, gmm.clone())?;
    let fit_options = FitOptions { seed: config.vb_seed(r), ..config.fit.clone() };
    let vb = multi_restart_fit(&model, &RandomWeights::unit(config.n), &fit_options)?;
    let perm = align_labels(&vb.theta_mean, &gmm.mu_true)?;
    let vb_mean = apply_permutation(&vb.theta_mean, &perm);
    let vb_var = apply_permutation(&vb.theta_var, &perm);
    let marginals = vb_mean.iter().zip(&vb_var).map(|(&mean, &var)| VbMarginal::Normal { mean, var }).collect();

    let mut gibbs = gmm_gibbs(&model.x, gmm, config.gibbs, config.gibbs_seed(r))?;
    align_rows(&mut gibbs, &gmm.mu_true)?;
    let options = VwlbOptions::new(config.bootstrap, config.scheme, config.fit.clone(), config.vwlb_seed(r));
    let mut vwlb = run_vwlb(&model, &options)?;
    align_rows(&mut vwlb, &gmm.mu_true)?;
    Ok(Fitted { vb_mean, vb_var, marginals, gibbs, vwlb })
}

fn fit_blr(
    config: &CoverageConfig,
    beta_true: &[f64],
    rho: f64,
    noise_sd: f64,
    hyper: &BlrHyper,
    r: usize,
) -> Result<Fitted> {
    let data = simulate_blr(config.n, beta_true, rho, noise_sd, config.dataset_seed(r))?;
    let model = BlrModel::new(data, *hyper)?;
    let fit_options = FitOptions { seed: config.vb_seed(r), ..config.fit.clone() };
    let vb = multi_restart_fit(&model, &RandomWeights::unit(config.n), &fit_options)?;
    let state = &vb.final_state;
    let marginals = (0..beta_true.len())
        .map(|j| VbMarginal::SpikeSlab { phi: state.phi[j], mu: state.mu[j], s2: state.s2[j] })
        .collect();
    let gibbs = blr_gibbs(&model.data, hyper, config.gibbs, config.gibbs_seed(r))?;
    let options = VwlbOptions::new(config.bootstrap, config.scheme, config.fit.clone(), config.vwlb_seed(r));
    let vwlb = run_vwlb(&model, &options)?;
    Ok(Fitted { vb_mean: vb.theta_mean, vb_var: vb.theta_var, marginals, gibbs, vwlb })
}

fn run_replicate(config: &CoverageConfig, r: usize) -> Result<ReplicateRecord> {
    let fitted = match &config.model {
        ModelSpec::Gmm(gmm) => fit_gmm(config, gmm, r)?,
        ModelSpec::Blr { beta_true, rho, noise_sd, hyper } => fit_blr(config, beta_true, *rho, *noise_sd, hyper, r)?,
    };
    let reverted = reverted_draws(&fitted.vwlb, &fitted.vb_mean)?;
    let d = fitted.vb_mean.len();
    let level = config.level;
    let mut intervals = Vec::with_capacity(4);
    for method in IntervalMethod::ALL {
        let per_coord = (0..d)
            .map(|k| match method {
                IntervalMethod::GibbsQuantile => quantile_interval(&fitted.gibbs.column(k), level, method),
                IntervalMethod::VbQuantile => vb_marginal_interval(&fitted.marginals[k], level),
                IntervalMethod::VwlbQuantile => quantile_interval(&fitted.vwlb.column(k), level, method),
                IntervalMethod::VwlbReverted => quantile_interval(&reverted.column(k), level, method),
            })
            .collect::<Result<Vec<_>>>()?;
        intervals.push(per_coord);
    }
    Ok(ReplicateRecord { index: r, vb_mean: fitted.vb_mean, vb_var: fitted.vb_var, intervals })
}

fn summarise(config: &CoverageConfig, records: &[ReplicateRecord]) -> Vec<CoverageReport> {
    let truth = config.model.truth();
    let digest = config.digest();
    let r = records.len() as f64;
    IntervalMethod::ALL
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let per_coordinate = truth
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let covered = records.iter().filter(|rec| rec.intervals[m][k].covers(t)).count();
                    let lengths: Vec<f64> = records.iter().map(|rec| rec.intervals[m][k].length()).collect();
                    let (mean_length, var) = crate::stats::mean_var(&lengths);
                    CoordinateSummary { coverage: covered as f64 / r, mean_length, sd_length: var.sqrt() }
                })
                .collect();
            CoverageReport { method, per_coordinate, n_replicates: records.len(), config_digest: digest.clone() }
        })
        .collect()
}

/// Simulates `R` datasets and, for each, builds all four interval types per
/// coordinate. Mixture fits and draws are label-aligned to the truth.
pub fn coverage_experiment(config: &CoverageConfig) -> Result<CoverageOutcome> {
    config.validate()?;
    let records: Vec<ReplicateRecord> = if config.parallelism == 1 {
        (0..config.replicates).map(|r| run_replicate(config, r)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        pool.install(|| {
            (0..config.replicates).into_par_iter().map(|r| run_replicate(config, r)).collect::<Result<_>>()
        })?
    };
    let reports = summarise(config, &records);
    Ok(CoverageOutcome { reports, replicates: records })
}
