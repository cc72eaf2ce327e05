//! The variational weighted likelihood bootstrap: `B` independent weighted
//! fits, each contributing its variational mean as one approximate posterior
//! draw.

use rayon::prelude::*;

use crate::draws::{DrawMeta, DrawSource, PosteriorDraws};
use crate::engine::{multi_restart_fit, FitOptions, VariationalModel};
use crate::error::{Error, Result};
use crate::rng;
use crate::weights::{draw_weights, WeightScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct VwlbOptions {
    pub replicates: usize,
    pub scheme: WeightScheme,
    pub fit: FitOptions,
    pub parallelism: usize,
    pub master_seed: u64,
    /// Permit `WeightScheme::Unit`, which makes every replicate identical.
    pub allow_unit: bool,
}

impl VwlbOptions {
    pub fn new(replicates: usize, scheme: WeightScheme, fit: FitOptions, master_seed: u64) -> Self {
        VwlbOptions { replicates, scheme, fit, parallelism: 1, master_seed, allow_unit: false }
    }
}

/// Fit options used inside replicate `b`: the restart stream is re-derived so
/// that replicates never share initialisations.
pub fn replicate_fit_options(options: &VwlbOptions, b: usize) -> FitOptions {
    FitOptions { seed: rng::derive_seed(options.master_seed, "init", b as u64), ..options.fit.clone() }
}

pub fn replicate_weight_seed(master_seed: u64, b: usize) -> u64 {
    rng::derive_seed(master_seed, "weights", b as u64)
}

type Replicate = std::result::Result<(Vec<f64>, DrawMeta), Error>;

fn run_replicate<M: VariationalModel>(model: &M, options: &VwlbOptions, b: usize) -> Replicate {
    let weights = draw_weights(model.n_obs(), options.scheme, replicate_weight_seed(options.master_seed, b))?;
    let report = multi_restart_fit(model, &weights, &replicate_fit_options(options, b))?;
    let meta = DrawMeta {
        converged: report.converged,
        elbo: report.final_elbo(),
        iterations: report.iterations,
        failed: false,
    };
    Ok((report.theta_mean, meta))
}

/// Runs all replicates. Output rows are keyed by replicate index, so the
/// result does not depend on `parallelism`.
pub fn run_vwlb<M: VariationalModel>(model: &M, options: &VwlbOptions) -> Result<PosteriorDraws> {
    if options.replicates == 0 {
        return Err(Error::invalid("B must be at least 1"));
    }
    if options.parallelism == 0 {
        return Err(Error::invalid("parallelism must be at least 1"));
    }
    if options.scheme == WeightScheme::Unit && !options.allow_unit {
        return Err(Error::invalid("unit weights are reserved for reduction tests"));
    }
    options.fit.validate()?;

    let results: Vec<Replicate> = if options.parallelism == 1 {
        (0..options.replicates).map(|b| run_replicate(model, options, b)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.parallelism)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..options.replicates).into_par_iter().map(|b| run_replicate(model, options, b)).collect())
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut meta = Vec::with_capacity(results.len());
    let mut failed = 0usize;
    for (b, result) in results.into_iter().enumerate() {
        match result {
            Ok((theta, m)) => {
                rows.push((b, theta));
                meta.push(m);
            }
            Err(Error::NumericalFailure { .. }) => {
                failed += 1;
                meta.push(DrawMeta { converged: false, elbo: f64::NAN, iterations: 0, failed: true });
            }
            Err(other) => return Err(other),
        }
    }
    if failed * 20 > options.replicates {
        return Err(Error::TooManyFailures { failed, total: options.replicates });
    }
    PosteriorDraws::new(model.dim(), DrawSource::Vwlb, options.master_seed, rows, meta)
}

/// Reflects every draw through the point estimate: `2 * vb_mean - draw`.
/// Applied to reverted draws it reflects back and restores the `Vwlb` label.
pub fn reverted_draws(draws: &PosteriorDraws, vb_mean: &[f64]) -> Result<PosteriorDraws> {
    let source = match draws.source {
        DrawSource::Vwlb => DrawSource::VwlbReverted,
        DrawSource::VwlbReverted => DrawSource::Vwlb,
        DrawSource::Gibbs => {
            return Err(Error::invalid("reverted draws are built from VWLB output"));
        }
    };
    if vb_mean.len() != draws.dim() {
        return Err(Error::invalid(format!(
            "point estimate has dimension {} but draws have {}",
            vb_mean.len(),
            draws.dim()
        )));
    }
    let mut out = draws.clone();
    out.source = source;
    for i in 0..out.n_draws() {
        for (v, c) in out.row_mut(i).iter_mut().zip(vb_mean) {
            *v = 2.0 * c - *v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{TiltedObjective, VariationalModel};
    use crate::gmm::{simulate_gmm, GmmConfig, GmmModel};
    use crate::rng::StreamRng;
    use crate::weights::RandomWeights;

    /// Weighted mean of the data; fails whenever the first weight exceeds `cut`.
    struct Brittle {
        x: Vec<f64>,
        cut: f64,
    }

    struct BrittleTilted<'a>(&'a Brittle, &'a RandomWeights);

    impl TiltedObjective for BrittleTilted<'_> {
        type State = f64;
        fn init_state(&self, _: usize, _: &FitOptions, _: &mut StreamRng) -> f64 {
            0.0
        }
        fn check_state(&self, _: &f64) -> Result<()> {
            Ok(())
        }
        fn sweep(&self, s: &mut f64) -> Result<f64> {
            let w = self.1.values();
            if w[0] > self.0.cut {
                return Err(Error::numerical("brittle", 0));
            }
            let total: f64 = w.iter().sum();
            *s = w.iter().zip(&self.0.x).map(|(a, b)| a * b).sum::<f64>() / total;
            Ok(self.elbo(s))
        }
        fn elbo(&self, s: &f64) -> f64 {
            -self.1.values().iter().zip(&self.0.x).map(|(w, x)| w * (x - s) * (x - s)).sum::<f64>()
        }
        fn theta_mean(&self, s: &f64) -> Vec<f64> {
            vec![*s]
        }
        fn theta_var(&self, _: &f64) -> Vec<f64> {
            vec![1.0]
        }
    }

    impl VariationalModel for Brittle {
        type State = f64;
        type Tilted<'a> = BrittleTilted<'a>;
        fn n_obs(&self) -> usize {
            self.x.len()
        }
        fn dim(&self) -> usize {
            1
        }
        fn bind<'a>(&'a self, w: &'a RandomWeights) -> Result<BrittleTilted<'a>> {
            Ok(BrittleTilted(self, w))
        }
    }

    fn gmm(n: usize, seed: u64) -> GmmModel {
        let config = GmmConfig::with_separation(3, 4.0);
        GmmModel::new(simulate_gmm(n, &config, seed).unwrap().x, config).unwrap()
    }

    fn fit3() -> FitOptions {
        FitOptions { n_restarts: 3, ..FitOptions::default() }
    }

    fn draws_of(d: &PosteriorDraws, b: usize, dim: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(dim);
        v.extend_from_slice(d.row(b));
        v
    }

    #[test]
    fn single_replicate_is_one_weighted_fit() {
        let model = gmm(150, 1);
        let opts = VwlbOptions::new(1, WeightScheme::Exp1, fit3(), 42);
        let draws = run_vwlb(&model, &opts).unwrap();
        let w = draw_weights(150, WeightScheme::Exp1, replicate_weight_seed(42, 0)).unwrap();
        let fit = multi_restart_fit(&model, &w, &replicate_fit_options(&opts, 0)).unwrap();
        assert_eq!(draws.row(0), &fit.theta_mean[..]);
        assert_eq!(draws.per_draw_meta[0].elbo, fit.final_elbo());
    }

    #[test]
    fn parallelism_does_not_change_draws() {
        let model = gmm(150, 2);
        let mut opts = VwlbOptions::new(24, WeightScheme::Exp1, fit3(), 7);
        let serial = run_vwlb(&model, &opts).unwrap();
        opts.parallelism = 8;
        let parallel = run_vwlb(&model, &opts).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn replicates_are_independent_of_b() {
        let model = gmm(100, 3);
        let short = run_vwlb(&model, &VwlbOptions::new(5, WeightScheme::DirichletN, fit3(), 8)).unwrap();
        let long = run_vwlb(&model, &VwlbOptions::new(12, WeightScheme::DirichletN, fit3(), 8)).unwrap();
        for b in 0..5 {
            assert_eq!(draws_of(&short, b, 3), draws_of(&long, b, 3));
        }
    }

    #[test]
    fn unit_scheme_needs_opt_in() {
        let model = gmm(50, 4);
        let mut opts = VwlbOptions::new(3, WeightScheme::Unit, fit3(), 1);
        assert!(run_vwlb(&model, &opts).is_err());
        opts.allow_unit = true;
        let d = run_vwlb(&model, &opts).unwrap();
        let sorted = |r: &[f64]| {
            let mut v = r.to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        for (a, b) in sorted(d.row(0)).iter().zip(sorted(d.row(2))) {
            assert!((a - b).abs() < 1e-3);
        }
        assert!(run_vwlb(&model, &VwlbOptions::new(0, WeightScheme::Exp1, fit3(), 1)).is_err());
    }

    #[test]
    fn failed_replicates_are_dropped_until_the_limit() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let opts = VwlbOptions::new(200, WeightScheme::Exp1, FitOptions::default(), 3);
        let cut = 4.0;
        let expected: Vec<bool> = (0..200)
            .map(|b| draw_weights(20, WeightScheme::Exp1, replicate_weight_seed(3, b)).unwrap().values()[0] > cut)
            .collect();
        let n_fail = expected.iter().filter(|f| **f).count();
        assert!(n_fail > 0 && n_fail <= 10, "{n_fail}");
        let draws = run_vwlb(&Brittle { x: x.clone(), cut }, &opts).unwrap();
        assert_eq!(draws.n_draws(), 200 - n_fail);
        for (b, f) in expected.iter().enumerate() {
            assert_eq!(draws.per_draw_meta[b].failed, *f);
        }
        assert!((0..draws.n_draws()).all(|i| !expected[draws.replicate_index(i)]));

        let err = run_vwlb(&Brittle { x, cut: 0.5 }, &opts).unwrap_err();
        assert!(matches!(err, Error::TooManyFailures { total: 200, .. }));
    }

    #[test]
    fn reflection_examples() {
        let meta = vec![DrawMeta { converged: true, elbo: 0.0, iterations: 1, failed: false }; 2];
        let d = PosteriorDraws::new(1, DrawSource::Vwlb, 0, vec![(0, vec![0.0]), (1, vec![2.0])], meta).unwrap();
        let r = reverted_draws(&d, &[1.0]).unwrap();
        assert_eq!(r.source, DrawSource::VwlbReverted);
        assert_eq!((r.row(0), r.row(1)), (&[2.0][..], &[0.0][..]));
        assert_eq!(reverted_draws(&r, &[1.0]).unwrap(), d);
        assert!(reverted_draws(&d, &[1.0, 2.0]).is_err());

        let same =
            PosteriorDraws::new(2, DrawSource::Vwlb, 0, vec![(0, vec![0.3, -1.7]), (1, vec![0.3, -1.7])], Vec::new())
                .unwrap();
        let fixed = reverted_draws(&same, &[0.3, -1.7]).unwrap();
        assert!(fixed.rows().all(|r| r == [0.3, -1.7]));
    }

    #[test]
    fn reverting_twice_restores_the_draws() {
        let model = gmm(120, 5);
        let draws = run_vwlb(&model, &VwlbOptions::new(10, WeightScheme::Exp1, fit3(), 2)).unwrap();
        let centre = draws.column_means();
        let back = reverted_draws(&reverted_draws(&draws, &centre).unwrap(), &centre).unwrap();
        assert_eq!(back.source, DrawSource::Vwlb);
        for (a, b) in draws.rows().zip(back.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
