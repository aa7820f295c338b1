//! Fisher information metric (FIM) estimation from parameterized samples.
//!
//! The estimator turns an unlabeled dataset of `(lambda, x)` rows into a
//! binary-classification task over pairs of parameter points, trains a
//! classifier whose log odds are `dlambda . l(lambda0, x)`, and reads the
//! FIM off as the mean outer product of `l` at every grid point.
//!
//! Alongside the estimator the crate ships exact oracles on small
//! statistical manifolds, the distance-based evaluation metrics, peak
//! extraction for phase-boundary comparisons and the baseline methods.

pub mod baselines;
pub mod bits;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod manifold;
pub mod metrics;
pub mod peaks;
pub mod rng;

pub use classifier::{BcModel, LogOddsModel, TrainConfig};
pub use dataset::{Dataset, PairedDataset};
pub use error::{Error, Result};
pub use manifold::{FimField, GridSpec, ManifoldKind, StatisticalManifold};
pub use metrics::{MetricReport, PairBudget, PairDistances};
pub use peaks::{PeakBudget, Slice};


