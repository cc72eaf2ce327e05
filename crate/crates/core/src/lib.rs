//! Mean-field variational Bayes with weighted coordinate ascent, and the
//! variational weighted likelihood bootstrap (VWLB) built on it.
//!
//! The crate provides
//! * [`weights`]: bootstrap weight laws,
//! * [`engine`]: the model-agnostic weighted CAVI driver with restarts,
//! * [`gmm`] and [`blr`]: a Gaussian mixture and a spike-and-slab regression,
//!   each with a CAVI sweep, an ELBO and a Gibbs sampler,
//! * [`vwlb`]: the bootstrap sampler,
//! * [`inference`]: credible intervals, label alignment and coverage studies.

pub mod blr;
pub mod draws;
pub mod engine;
pub mod error;
pub mod gmm;
pub mod inference;
pub mod io;
pub mod rng;
pub mod stats;
pub mod vwlb;
pub mod weights;

pub use draws::{DrawMeta, DrawSource, GibbsSettings, PosteriorDraws};
pub use engine::{multi_restart_fit, run_weighted_cavi, FitOptions, FitReport, TiltedObjective, VariationalModel};
pub use error::{Error, Result};
pub use vwlb::{reverted_draws, run_vwlb, VwlbOptions};
pub use weights::{draw_weights, validate_scheme, RandomWeights, WeightScheme};
