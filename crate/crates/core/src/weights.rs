//! Random observation weights for the weighted likelihood bootstrap.
//!
//! Admissible weight laws are nonnegative with mean 1, variance 1 and
//! sub-exponential tails. `Exp1` satisfies this exactly; `DirichletN` (a flat
//! Dirichlet scaled by `n`) does so asymptotically; `Unit` reproduces the
//! unweighted problem and exists for reduction tests.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WeightScheme {
    Unit,
    #[default]
    Exp1,
    DirichletN,
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::Unit => "unit",
            WeightScheme::Exp1 => "exp1",
            WeightScheme::DirichletN => "dirichlet",
        })
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unit" => Ok(WeightScheme::Unit),
            "exp1" => Ok(WeightScheme::Exp1),
            "dirichlet" | "dirichlet_n" => Ok(WeightScheme::DirichletN),
            other => Err(Error::Parse(format!("unknown weight scheme `{other}` (expected unit|exp1|dirichlet)"))),
        }
    }
}

/// One bootstrap replicate's per-observation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWeights {
    values: Vec<f64>,
    /// `None` for caller-supplied values.
    scheme: Option<WeightScheme>,
    seed: u64,
}

impl RandomWeights {
    /// All-ones weights; equivalent to `draw_weights(n, Unit, seed)`.
    pub fn unit(n: usize) -> Self {
        RandomWeights { values: vec![1.0; n], scheme: Some(WeightScheme::Unit), seed: 0 }
    }

    /// Wraps caller-supplied weights, e.g. integer multiplicities. These always
    /// take the weighted arithmetic path, even when every entry is one.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weight vector length must be at least 1"));
        }
        if let Some(i) = values.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(format!("weight {i} is negative or non-finite")));
        }
        Ok(RandomWeights { values, scheme: None, seed: 0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scheme(&self) -> Option<WeightScheme> {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `None` when every weight is exactly one, so model kernels can take the
    /// unweighted code path.
    pub fn as_tilt(&self) -> Option<&[f64]> {
        match self.scheme {
            Some(WeightScheme::Unit) => None,
            _ => Some(&self.values),
        }
    }
}

pub fn draw_weights(n: usize, scheme: WeightScheme, seed: u64) -> Result<RandomWeights> {
    if n == 0 {
        return Err(Error::invalid("weight vector length must be at least 1"));
    }
    let values = match scheme {
        WeightScheme::Unit => vec![1.0; n],
        WeightScheme::Exp1 => {
            let mut rng = rng::seeded(seed);
            (0..n).map(|_| Exp1.sample(&mut rng)).collect()
        }
        WeightScheme::DirichletN => {
            // Normalised i.i.d. Gamma(1, 1) variates are flat-Dirichlet.
            let mut rng = rng::seeded(seed);
            let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            let scale = n as f64 / total;
            raw.into_iter().map(|g| g * scale).collect()
        }
    };
    Ok(RandomWeights { values, scheme: Some(scheme), seed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mean_error: f64,
    pub variance_error: f64,
    pub pass: bool,
}

/// Block length used when pooling draws in [`validate_scheme`]; for
/// `DirichletN` it is also the Dirichlet dimension.
pub const VALIDATION_BLOCK: usize = 10_000;

/// Compares the pooled first two moments of `n_draws` weights with (1, 1).
pub fn validate_scheme(scheme: WeightScheme, n_draws: usize, tolerance: f64, seed: u64) -> Result<MomentReport> {
    if n_draws < VALIDATION_BLOCK {
        return Err(Error::invalid(format!("n_draws must be at least {VALIDATION_BLOCK}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut drawn = 0usize;
    let mut block = 0u64;
    while drawn < n_draws {
        let len = VALIDATION_BLOCK.min(n_draws - drawn);
        let w = draw_weights(len, scheme, rng::derive_seed(seed, "validate", block))?;
        for &v in w.values() {
            sum += v;
            sum_sq += v * v;
        }
        drawn += len;
        block += 1;
    }
    let n = n_draws as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    let mean_error = (mean - 1.0).abs();
    let variance_error = (var.max(0.0) - 1.0).abs();
    Ok(MomentReport { mean_error, variance_error, pass: mean_error < tolerance && variance_error < tolerance })
}
