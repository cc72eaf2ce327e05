use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::{std_normal_cdf, std_normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntervalMethod {
    GibbsQuantile,
    VbQuantile,
    VwlbQuantile,
    VwlbReverted,
}

impl IntervalMethod {
    pub const ALL: [IntervalMethod; 4] = [
        IntervalMethod::GibbsQuantile,
        IntervalMethod::VbQuantile,
        IntervalMethod::VwlbQuantile,
        IntervalMethod::VwlbReverted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntervalMethod::GibbsQuantile => "gibbs_quantile",
            IntervalMethod::VbQuantile => "vb_quantile",
            IntervalMethod::VwlbQuantile => "vwlb_quantile",
            IntervalMethod::VwlbReverted => "vwlb_reverted",
        }
    }
}

impl fmt::Display for IntervalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntervalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntervalMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown interval method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
}

impl CredibleInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("interval level must lie in (0, 1)"))
    }
}

/// Linear interpolation between order statistics at 1-based position
/// `(N - 1) q + 1`.
fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed interval from the empirical `(1 - level)/2` and
/// `(1 + level)/2` quantiles.
pub fn quantile_interval(samples: &[f64], level: f64, method: IntervalMethod) -> Result<CredibleInterval> {
    check_level(level)?;
    if samples.len() < 2 {
        return Err(Error::invalid("need at least two samples for a quantile interval"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(CredibleInterval {
        lower: sorted_quantile(&sorted, 0.5 * (1.0 - level)),
        upper: sorted_quantile(&sorted, 0.5 * (1.0 + level)),
        level,
        method,
    })
}

/// One coordinate's variational marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VbMarginal {
    Normal {
        mean: f64,
        var: f64,
    },
    /// `(1 - phi) delta_0 + phi N(mu, s2)`.
    SpikeSlab {
        phi: f64,
        mu: f64,
        s2: f64,
    },
}

const BISECTION_TOL: f64 = 1e-10;

fn spike_slab_quantile(phi: f64, mu: f64, sd: f64, q: f64) -> f64 {
    let cdf = |t: f64| phi * std_normal_cdf((t - mu) / sd) + if t >= 0.0 { 1.0 - phi } else { 0.0 };
    let below_zero = phi * std_normal_cdf(-mu / sd);
    if below_zero < q && q <= below_zero + (1.0 - phi) {
        return 0.0;
    }
    let mut lo = mu.min(0.0) - 40.0 * sd - 1.0;
    let mut hi = mu.max(0.0) + 40.0 * sd + 1.0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact equal-tailed interval of a variational marginal; the spike-and-slab
/// quantiles are found by bisection on the mixture CDF.
pub fn vb_marginal_interval(marginal: &VbMarginal, level: f64) -> Result<CredibleInterval> {
    check_level(level)?;
    let (lq, uq) = (0.5 * (1.0 - level), 0.5 * (1.0 + level));
    let (lower, upper) = match *marginal {
        VbMarginal::Normal { mean, var } => {
            if !(var > 0.0) {
                return Err(Error::invalid("variational variance must be positive"));
            }
            let sd = var.sqrt();
            (mean + sd * std_normal_quantile(lq), mean + sd * std_normal_quantile(uq))
        }
        VbMarginal::SpikeSlab { phi, mu, s2 } => {
            if !(s2 > 0.0) {
                return Err(Error::invalid("slab variance must be positive"));
            }
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::invalid("inclusion probability must lie in [0, 1]"));
            }
            let sd = s2.sqrt();
            if phi == 1.0 {
                (mu + sd * std_normal_quantile(lq), mu + sd * std_normal_quantile(uq))
            } else if phi == 0.0 {
                (0.0, 0.0)
            } else {
                (spike_slab_quantile(phi, mu, sd, lq), spike_slab_quantile(phi, mu, sd, uq))
            }
        }
    };
    Ok(CredibleInterval { lower, upper, level, method: IntervalMethod::VbQuantile })
}
