//! Fixed workloads shared by the benchmarks.

use vwlb_core::blr::{simulate_blr, BlrHyper, BlrModel};
use vwlb_core::gmm::{simulate_gmm, GmmConfig, GmmModel};

pub const BETA: [f64; 10] = [2.0, 3.0, 2.0, 4.0, 1.0, 2.0, 1.0, 0.0, 0.0, 2.0];

pub fn gmm_model(n: usize, delta: f64, seed: u64) -> GmmModel {
    let config = GmmConfig::with_separation(3, delta);
    let x = simulate_gmm(n, &config, seed).expect("valid settings").x;
    GmmModel::new(x, config).expect("finite data")
}

pub fn blr_model(n: usize, rho: f64, seed: u64) -> BlrModel {
    let data = simulate_blr(n, &BETA, rho, 1.0, seed).expect("valid settings");
    BlrModel::new(data, BlrHyper::default()).expect("default hyperparameters")
}
