//! Credible intervals, mixture label alignment, coverage experiments and
//! posterior-variance diagnostics.

mod align;
mod coverage;
mod interval;
mod variance;

pub use align::{align_labels, apply_permutation};
pub use coverage::{
    coverage_experiment, CoordinateSummary, CoverageConfig, CoverageOutcome, CoverageReport, ModelSpec, ReplicateRecord,
};
pub use interval::{quantile_interval, vb_marginal_interval, CredibleInterval, IntervalMethod, VbMarginal};
pub use variance::variance_ratio;
