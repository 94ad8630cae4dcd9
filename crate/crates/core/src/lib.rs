//! Distribution-free false-discovery-rate control for learning-to-rank outputs.
//!
//! A pairwise preference model is turned into per-item scores, thresholded
//! into nested recommendation sets, and the threshold is calibrated with
//! fixed-sequence Learn-then-Test so that the returned sets satisfy
//! `P(FDR > alpha) < delta`. An optional diversity stage prunes each set to
//! at most `M` items while keeping the guarantee, since calibration runs on
//! the pruned family itself.

pub mod calibration;
pub mod data;
pub mod diversity;
mod error;
pub mod eval;
pub mod ranking;
pub mod risk;

pub use calibration::{
    calibrate, calibrate_refs, lambda_grid, predict, predict_query, CalibrationConfig,
    CalibrationResult, SetFamily, StopReason, TraceEntry,
};
pub use diversity::{diversity, exhaustive_prune, greedy_prune, EmbeddingSet, PruneRule};
pub use error::{Error, Result};
pub use eval::{run_trials, sweep, EvalReport, SweepParam, TrialProtocol};
pub use ranking::{
    item_scores, threshold_set, LabeledQuery, PairwiseScores, PredictionSet, Ranking,
};
pub use risk::{derive_m, empirical_fdr, fdp, hoeffding_ucb, top_m_items, BoundKind, MRule};
