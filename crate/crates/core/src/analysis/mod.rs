//! Statistical layer: readability, OLS with fixed effects and marginal
//! effects, the research-question regressions and descriptive figures.

pub mod descriptive;
pub mod ols;
pub mod readability;
pub mod rq;
pub mod svg;

pub use descriptive::{aspect_sentence_association, hedge_certainty_curve};
pub use ols::{marginal_effects, ols_fit, Column, Frame, Margin, RegressionResult, RegressionSpec, SeKind, VarKind};
pub use readability::flesch_reading_ease;
pub use rq::{render_outputs, run_rq, RqInputs, RqReport, RQ_NAMES};
