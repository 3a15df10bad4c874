//! Fuzzy-logic classification of mass spectra.
//!
//! The pipeline runs in four stages:
//!
//! - [`spectrum`]: peak lists are parsed, rescaled to relative abundance and
//!   probed for the most abundant peak near each target ion;
//! - [`fuzzy`] and [`rulebase`]: per-ion abundances pass through
//!   piecewise-linear membership functions and are combined by each class
//!   expression (product AND, probabilistic-sum OR);
//! - [`classify`]: the class memberships are hardened into a label, or
//!   `UNK` when no class is convincing;
//! - [`spatial`]: on a sample grid, unknown spots are reassigned from
//!   their neighbors.
//!
//! [`stats`] accumulates per-m/z ensemble statistics used to discover key
//! ions when writing or refining a rule base.

pub mod classify;
pub mod fmt;
pub mod fuzzy;
pub mod pixmap;
pub mod rulebase;
pub mod spatial;
pub mod spectrum;
pub mod stats;

pub use classify::{
    classify_batch, harden, harden_with, memberships, BatchRecord, Classification, Classifier,
    ClassifyError, HardenOptions, Label, MembershipVector, SpectrumSource,
};
pub use fuzzy::{eval_expr, f_and, f_not, f_or, mu_high, mu_low, FuzzyExpr, MembershipFn, Polarity};
pub use rulebase::{builtin_basalt, parse_rulebase, validate, RuleBase};
pub use spatial::{ClassificationMap, SampleGrid, Topology};
pub use spectrum::{normalize, parse_spectrum, peak_abundance, IonTarget, Peak, Spectrum, SpectrumFormat};
pub use stats::{build_statdb, class_vs_ensemble_report, full_presence_bins, peak_list, MeanMode, StatDB};
