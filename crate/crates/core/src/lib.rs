//! Group counterfactual explanations for binary classifiers.
//!
//! Given the set of instances a classifier labels as attrition, this crate
//! searches for one shared intervention `delta` that, added to every
//! instance, flips as many predictions as possible to retention at minimal
//! (weighted) L1 cost. Linear classifiers are handled exactly with a linear
//! program ([`lp`]); any other scorer goes through the penalized
//! model-agnostic path ([`general`]). [`diversity`] iterates either solver
//! while black-listing features already used, which yields a list of
//! feature-disjoint alternatives.
//!
//! Label convention throughout: attrition is `-1`, retention is `+1`, and the
//! counterfactual target is retention.

pub mod dataset;
pub mod diversity;
mod error;
pub mod general;
pub mod lp;
pub mod models;
pub mod report;

pub use error::{Error, Result};

pub use dataset::{FeatureSchema, Label, PreparedDataset, RawDataset, Scaler};
pub use diversity::{diverse_explanations, Blacklist, ExplanationSet, Termination};
pub use general::{penalized_objective, solve_penalized, GroupDelta, LossKind, PenalizedConfig};
pub use lp::{solve_group_lp, GroupLpProblem, GroupLpSolution};
pub use models::{InstanceSet, LinearScorer, ForestScorer, Scorer};
pub use report::{coverage, render_report, ExplanationReport};

/// Numerical tolerance used to decide whether a coordinate of `delta` is in use.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Default strict-flip margin, in standardized units.
pub const DEFAULT_MARGIN: f64 = 1e-4;
