//! Spike-and-slab linear regression with a block mean-field approximation on
//! each `(gamma_j, beta_j)` pair and point (MAP) estimates of the noise
//! variance and the inclusion rate.

mod cavi;
mod gibbs;

pub use cavi::{blr_cavi_step, blr_elbo, BlrTilted};
pub use gibbs::{
    blr_gibbs, blr_gibbs_with, inclusion_log_odds, inclusion_rate_conditional, noise_conditional, slab_conditional,
    BlrGibbsOptions,
};

use rand_distr::{Distribution, StandardNormal};

use crate::engine::VariationalModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::weights::RandomWeights;

/// Prior hyperparameters: slab `N(0, v1 sigma^2)`, inclusion rate
/// `Beta(a0, b0)`, noise variance `IG(nu/2, nu*lambda/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlrHyper {
    pub v1: f64,
    pub a0: f64,
    pub b0: f64,
    pub nu: f64,
    pub lambda: f64,
}

impl Default for BlrHyper {
    fn default() -> Self {
        BlrHyper { v1: 2.0, a0: 1.0, b0: 1.0, nu: 0.002, lambda: 1.0 }
    }
}

impl BlrHyper {
    pub fn validate(&self) -> Result<()> {
        let all = [self.v1, self.a0, self.b0, self.nu, self.lambda];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("BLR hyperparameters must be positive and finite"))
        }
    }
}

/// Design matrix (row-major `n x p`) and response.
#[derive(Debug, Clone, PartialEq)]
pub struct BlrData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl BlrData {
    pub fn new(x: Vec<f64>, y: Vec<f64>, p: usize) -> Result<Self> {
        let n = y.len();
        if n == 0 || p == 0 {
            return Err(Error::invalid("regression data needs n >= 1 and p >= 1"));
        }
        if x.len() != n * p {
            return Err(Error::invalid(format!("design has {} entries, expected {n} x {p}", x.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("regression data contains non-finite values"));
        }
        Ok(BlrData { x, y, n, p })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Copy with columns reordered: column `j` of the result is column
    /// `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> BlrData {
        let x = (0..self.n).flat_map(|i| perm.iter().map(move |&j| self.x[i * self.p + j])).collect();
        BlrData { x, y: self.y.clone(), n: self.n, p: self.p }
    }
}

/// Rows follow a stationary AR(1) across columns with unit innovation
/// variance; `y = X beta + noise_sd * N(0, 1)`.
pub fn simulate_blr(n: usize, beta_true: &[f64], rho: f64, noise_sd: f64, seed: u64) -> Result<BlrData> {
    let p = beta_true.len();
    if n == 0 || p == 0 {
        return Err(Error::invalid("need n >= 1 and at least one coefficient"));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("AR(1) coefficient must satisfy |rho| < 1"));
    }
    if !(noise_sd > 0.0) {
        return Err(Error::invalid("noise_sd must be positive"));
    }
    let mut rng = rng::seeded(seed);
    let sd1 = (1.0 - rho * rho).powf(-0.5);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut prev = 0.0;
        let mut mean = 0.0;
        for (j, b) in beta_true.iter().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            let v = if j == 0 { sd1 * e } else { rho * prev + e };
            x.push(v);
            mean += v * b;
            prev = v;
        }
        let e: f64 = StandardNormal.sample(&mut rng);
        y.push(mean + noise_sd * e);
    }
    BlrData::new(x, y, p)
}

/// Weighted sufficient statistics `X'WX`, `X'Wy`, `y'Wy` and `sum w`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGram {
    pub p: usize,
    pub gram: Vec<f64>,
    pub xty: Vec<f64>,
    pub yty: f64,
    pub weight_sum: f64,
}

impl WeightedGram {
    pub fn new(data: &BlrData, weights: Option<&[f64]>) -> Self {
        let p = data.p;
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        let mut yty = 0.0;
        let mut weight_sum = 0.0;
        let mut wx = vec![0.0; p];
        for i in 0..data.n {
            let row = data.row(i);
            let yi = data.y[i];
            match weights {
                None => {
                    wx.copy_from_slice(row);
                    yty += yi * yi;
                    weight_sum += 1.0;
                }
                Some(w) => {
                    let wi = w[i];
                    for (a, &b) in wx.iter_mut().zip(row) {
                        *a = wi * b;
                    }
                    yty += (wi * yi) * yi;
                    weight_sum += wi;
                }
            }
            for j in 0..p {
                xty[j] += wx[j] * yi;
                for k in j..p {
                    gram[j * p + k] += wx[j] * row[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                gram[j * p + k] = gram[k * p + j];
            }
        }
        WeightedGram { p, gram, xty, yty, weight_sum }
    }

    pub fn g(&self, j: usize, k: usize) -> f64 {
        self.gram[j * self.p + k]
    }

    /// `sum_i w_i (y_i - x_i' b)^2` for a fixed coefficient vector.
    pub fn residual_ss(&self, b: &[f64]) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        let mut lin = 0.0;
        for j in 0..p {
            lin += self.xty[j] * b[j];
            let mut row = 0.0;
            for k in 0..p {
                row += self.gram[j * p + k] * b[k];
            }
            quad += b[j] * row;
        }
        self.yty - 2.0 * lin + quad
    }

    /// `<R_j, X_j>_W` where `R_j` is the residual with coordinate `j` removed.
    pub fn partial_residual(&self, j: usize, b: &[f64]) -> f64 {
        let row = &self.gram[j * self.p..(j + 1) * self.p];
        let mut r = self.xty[j];
        for (k, (&g, &bk)) in row.iter().zip(b).enumerate() {
            if k != j {
                r -= g * bk;
            }
        }
        r
    }
}

/// Variational state: `q(gamma_j, beta_j) = (1 - phi_j) delta_0 + phi_j N(mu_j, s2_j)`
/// plus point estimates of `sigma2` and `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlrState {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub s2: Vec<f64>,
    pub sigma2: f64,
    pub xi: f64,
}

impl BlrState {
    /// `phi = 0.5`, `mu = 0`, `s2 = v1`, `sigma2 = var(y)`, `xi = 0.5`.
    pub fn initial(data: &BlrData, hyper: &BlrHyper) -> BlrState {
        let (_, var_y) = crate::stats::mean_var(&data.y);
        let sigma2 = if var_y > 0.0 { var_y } else { 1.0 };
        BlrState { phi: vec![0.5; data.p], mu: vec![0.0; data.p], s2: vec![hyper.v1; data.p], sigma2, xi: 0.5 }
    }

    pub fn check(&self, p: usize) -> Result<()> {
        if self.phi.len() != p || self.mu.len() != p || self.s2.len() != p {
            return Err(Error::invalid("BLR state dimensions do not match the design"));
        }
        if self.phi.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid("inclusion probabilities must lie in [0, 1]"));
        }
        if self.mu.iter().any(|m| !m.is_finite()) || self.s2.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("slab means must be finite and variances positive"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) || !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::invalid("need sigma2 > 0 and xi in (0, 1)"));
        }
        Ok(())
    }

    /// `E[beta_j] = phi_j mu_j`.
    pub fn beta_mean(&self) -> Vec<f64> {
        self.phi.iter().zip(&self.mu).map(|(f, m)| f * m).collect()
    }

    /// `Var[beta_j] = phi_j (mu_j^2 + s2_j) - (phi_j mu_j)^2`.
    pub fn beta_var(&self) -> Vec<f64> {
        (0..self.phi.len())
            .map(|j| {
                let (f, m, s) = (self.phi[j], self.mu[j], self.s2[j]);
                f * (m * m + s) - (f * m) * (f * m)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BlrModel {
    pub data: BlrData,
    pub hyper: BlrHyper,
}

impl BlrModel {
    pub fn new(data: BlrData, hyper: BlrHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(BlrModel { data, hyper })
    }
}

impl VariationalModel for BlrModel {
    type State = BlrState;
    type Tilted<'a> = BlrTilted<'a>;

    fn n_obs(&self) -> usize {
        self.data.n
    }

    fn dim(&self) -> usize {
        self.data.p
    }

    fn bind<'a>(&'a self, weights: &'a RandomWeights) -> Result<BlrTilted<'a>> {
        BlrTilted::new(&self.data, weights, &self.hyper)
    }
}
