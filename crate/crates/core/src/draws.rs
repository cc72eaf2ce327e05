use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DrawSource {
    Gibbs,
    Vwlb,
    VwlbReverted,
}

impl fmt::Display for DrawSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrawSource::Gibbs => "gibbs",
            DrawSource::Vwlb => "vwlb",
            DrawSource::VwlbReverted => "vwlb_reverted",
        })
    }
}

/// Per-replicate bookkeeping. For Gibbs output `elbo` is NaN and `iterations`
/// is the sampler iteration the draw was taken at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawMeta {
    pub converged: bool,
    pub elbo: f64,
    pub iterations: usize,
    pub failed: bool,
}

/// A `B x d` matrix of parameter draws.
///
/// `per_draw_meta` has one entry per attempted replicate, including failed
/// ones; `replicate[row]` maps each stored row back to its replicate index.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    dim: usize,
    values: Vec<f64>,
    replicate: Vec<usize>,
    pub source: DrawSource,
    pub master_seed: u64,
    pub per_draw_meta: Vec<DrawMeta>,
}

impl PosteriorDraws {
    pub fn new(
        dim: usize,
        source: DrawSource,
        master_seed: u64,
        rows: Vec<(usize, Vec<f64>)>,
        per_draw_meta: Vec<DrawMeta>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("posterior draws need at least one row"));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        let mut replicate = Vec::with_capacity(rows.len());
        for (b, row) in rows {
            if row.len() != dim {
                return Err(Error::invalid(format!("draw {b} has length {} not {dim}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("draw {b} is not finite")));
            }
            values.extend_from_slice(&row);
            replicate.push(b);
        }
        Ok(PosteriorDraws { dim, values, replicate, source, master_seed, per_draw_meta })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_draws(&self) -> usize {
        self.replicate.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn replicate_index(&self, i: usize) -> usize {
        self.replicate[i]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n_draws() as f64;
        (0..self.dim).map(|k| self.rows().map(|r| r[k]).sum::<f64>() / n).collect()
    }

    /// Meta entry for stored row `i`, if replicate metadata was recorded.
    pub fn meta_for_row(&self, i: usize) -> Option<&DrawMeta> {
        self.per_draw_meta.get(self.replicate[i])
    }
}

/// Burn-in and thinning schedule for a Gibbs run: `burnin` discarded
/// iterations, then one stored draw every `thin` iterations until
/// `n_samples` are collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsSettings {
    pub n_samples: usize,
    pub burnin: usize,
    pub thin: usize,
}

impl GibbsSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.burnin + self.n_samples * self.thin
    }

    /// Whether the state after iteration `t` (0-based) is stored.
    pub fn keeps(&self, t: usize) -> bool {
        t >= self.burnin && (t + 1 - self.burnin).is_multiple_of(self.thin)
    }
}
