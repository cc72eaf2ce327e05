//! Generic weighted coordinate-ascent driver.
//!
//! A model exposes its weighted objective through [`VariationalModel::bind`],
//! which fixes the weight vector and precomputes whatever weighted sufficient
//! statistics the model needs. The engine then repeats full sweeps, records
//! one ELBO value per sweep and stops on relative ELBO change.

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::weights::RandomWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop once `|L_t - L_{t-1}| < elbo_rel_tol * |L_{t-1}|`.
    pub elbo_rel_tol: f64,
    pub n_restarts: usize,
    /// Multiplier on the model's natural initialisation scale.
    pub init_spread: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iters: 1000, elbo_rel_tol: 1e-8, n_restarts: 1, init_spread: 1.0, seed: 0 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.elbo_rel_tol > 0.0) {
            return Err(Error::invalid("elbo_rel_tol must be positive"));
        }
        if self.n_restarts == 0 {
            return Err(Error::invalid("n_restarts must be at least 1"));
        }
        if !(self.init_spread > 0.0) {
            return Err(Error::invalid("init_spread must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<S> {
    pub final_state: S,
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restart_index: usize,
    pub theta_mean: Vec<f64>,
    pub theta_var: Vec<f64>,
}

impl<S> FitReport<S> {
    pub fn final_elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// A model's weighted objective with the weights fixed.
pub trait TiltedObjective {
    type State: Clone;

    /// Initial state for restart `restart`, drawing randomness from `rng`.
    fn init_state(&self, restart: usize, options: &FitOptions, rng: &mut StreamRng) -> Self::State;

    fn check_state(&self, state: &Self::State) -> Result<()>;

    /// One full sweep in place. Returns the weighted ELBO of the updated state,
    /// which must agree with [`TiltedObjective::elbo`].
    fn sweep(&self, state: &mut Self::State) -> Result<f64>;

    fn elbo(&self, state: &Self::State) -> f64;

    fn theta_mean(&self, state: &Self::State) -> Vec<f64>;

    fn theta_var(&self, state: &Self::State) -> Vec<f64>;
}

/// A model bound to a dataset. Shared read-only across bootstrap workers.
pub trait VariationalModel: Sync {
    type State: Clone + Send;
    type Tilted<'a>: TiltedObjective<State = Self::State>
    where
        Self: 'a;

    fn n_obs(&self) -> usize;

    /// Dimension of the parameter of interest.
    fn dim(&self) -> usize;

    fn bind<'a>(&'a self, weights: &'a RandomWeights) -> Result<Self::Tilted<'a>>;
}

fn check_weights<M: VariationalModel>(model: &M, weights: &RandomWeights) -> Result<()> {
    if weights.len() != model.n_obs() {
        return Err(Error::invalid(format!(
            "weight vector has length {} but the dataset has {} observations",
            weights.len(),
            model.n_obs()
        )));
    }
    Ok(())
}

fn run_bound<T: TiltedObjective>(
    objective: &T,
    init: T::State,
    options: &FitOptions,
    restart_index: usize,
) -> Result<FitReport<T::State>> {
    objective.check_state(&init)?;
    let mut state = init;
    let mut trace: Vec<f64> = Vec::with_capacity(options.max_iters.min(4096));
    let mut converged = false;
    for t in 0..options.max_iters {
        let elbo = objective.sweep(&mut state).map_err(|e| match e {
            Error::NumericalFailure { context, .. } => Error::numerical(context, t),
            other => other,
        })?;
        if !elbo.is_finite() {
            return Err(Error::numerical("elbo", t));
        }
        if let Some(&prev) = trace.last() {
            let change = (elbo - prev).abs();
            if change < options.elbo_rel_tol * prev.abs() {
                converged = true;
            }
        }
        trace.push(elbo);
        if converged {
            break;
        }
    }
    Ok(FitReport {
        theta_mean: objective.theta_mean(&state),
        theta_var: objective.theta_var(&state),
        iterations: trace.len(),
        elbo_trace: trace,
        converged,
        restart_index,
        final_state: state,
    })
}

/// Weighted CAVI from a caller-supplied initial state.
pub fn run_weighted_cavi<M: VariationalModel>(
    model: &M,
    weights: &RandomWeights,
    init: M::State,
    options: &FitOptions,
) -> Result<FitReport<M::State>> {
    options.validate()?;
    check_weights(model, weights)?;
    let objective = model.bind(weights)?;
    run_bound(&objective, init, options, 0)
}

/// Runs `options.n_restarts` fits from random starts and keeps the one with the
/// highest final ELBO (lowest restart index on ties).
pub fn multi_restart_fit<M: VariationalModel>(
    model: &M,
    weights: &RandomWeights,
    options: &FitOptions,
) -> Result<FitReport<M::State>> {
    options.validate()?;
    check_weights(model, weights)?;
    let objective = model.bind(weights)?;
    let mut best: Option<FitReport<M::State>> = None;
    let mut last_err = None;
    for r in 0..options.n_restarts {
        let mut rng = rng::stream(options.seed, "init/restart", r as u64);
        let init = objective.init_state(r, options, &mut rng);
        match run_bound(&objective, init, options, r) {
            Ok(report) => {
                let better = best.as_ref().is_none_or(|b| report.final_elbo() > b.final_elbo());
                if better {
                    best = Some(report);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::numerical("multi_restart_fit", 0)))
}
