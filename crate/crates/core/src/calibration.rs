//! Fixed-sequence Learn-then-Test calibration of the score threshold.
//!
//! Thresholds are tested from `1 - dλ` downward. Each null hypothesis
//! `FDR(λ) > α` is rejected when the upper confidence bound on the mean
//! calibration FDP falls below `α`. The walk stops at the first threshold it
//! cannot reject and returns the one before it, so `λ̂` is the smallest
//! threshold in an unbroken run of rejections starting at the top of the grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::formats::csv_error;
use crate::diversity::{greedy_prune_with, prune_indices, EmbeddingSet, PruneRule};
use crate::error::{Error, Result};
use crate::ranking::{item_scores, threshold_set, LabeledQuery, PairwiseScores, PredictionSet};
use crate::risk::{derive_m, fdp_unchecked, mean, BoundKind, MRule, UpperConfidenceBound};

/// Threshold returned when even the first grid point cannot be rejected.
pub const FALLBACK_LAMBDA: f64 = 1.0;

/// Which sets a threshold produces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SetFamily {
    /// All items scoring at least `λ`.
    #[default]
    Plain,
    /// The plain set greedily pruned to at most `max_items` items.
    Diverse {
        max_items: usize,
        #[serde(default)]
        rule: PruneRule,
    },
}

impl SetFamily {
    pub fn diverse(max_items: usize) -> Self {
        SetFamily::Diverse {
            max_items,
            rule: PruneRule::default(),
        }
    }

    pub fn max_items(&self) -> Option<usize> {
        match *self {
            SetFamily::Plain => None,
            SetFamily::Diverse { max_items, .. } => Some(max_items),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub delta: f64,
    pub d_lambda: f64,
    pub m_rule: MRule,
    pub bound: BoundKind,
    pub family: SetFamily,
}

impl CalibrationConfig {
    /// Plain family, `dλ = 0.01`, top 20% of items counted as good.
    pub fn new(alpha: f64, delta: f64) -> Self {
        Self {
            alpha,
            delta,
            d_lambda: 0.01,
            m_rule: MRule::default(),
            bound: BoundKind::default(),
            family: SetFamily::Plain,
        }
    }

    pub fn with_family(mut self, family: SetFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_m_rule(mut self, rule: MRule) -> Self {
        self.m_rule = rule;
        self
    }

    pub fn with_d_lambda(mut self, d_lambda: f64) -> Self {
        self.d_lambda = d_lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        open_unit("alpha", self.alpha)?;
        open_unit("delta", self.delta)?;
        open_unit("d_lambda", self.d_lambda)?;
        self.m_rule.validate()?;
        if self.family.max_items() == Some(0) {
            return Err(Error::invalid("max_items must be at least 1"));
        }
        lambda_grid(self.d_lambda).map(drop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FailedToReject,
    ExhaustedGrid,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::FailedToReject => "failed_to_reject",
            StopReason::ExhaustedGrid => "exhausted_grid",
        })
    }
}

/// One tested threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub lambda: f64,
    pub mean_fdp: f64,
    pub ucb: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub lambda_hat: f64,
    pub trace: Vec<TraceEntry>,
    pub stopped_reason: StopReason,
}

impl CalibrationResult {
    /// True when no threshold was rejected and the fallback was returned.
    pub fn is_fallback(&self) -> bool {
        self.trace.first().is_some_and(|e| !e.rejected)
    }
}

/// `lambda,mean_fdp,ucb,rejected`, one row per tested threshold.
pub fn write_trace_csv<W: std::io::Write>(out: W, result: &CalibrationResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda", "mean_fdp", "ucb", "rejected"])
        .map_err(csv_error)?;
    for e in &result.trace {
        w.write_record([
            e.lambda.to_string(),
            e.mean_fdp.to_string(),
            e.ucb.to_string(),
            e.rejected.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Thresholds `1 - dλ, 1 - 2dλ, …` down to the last one not below `dλ`.
///
/// Values are rounded to 12 decimals so that, for example, the 40th point of
/// a 0.01 grid is exactly `0.6`.
pub fn lambda_grid(d_lambda: f64) -> Result<Vec<f64>> {
    if !(d_lambda > 0.0 && d_lambda < 1.0) {
        return Err(Error::invalid(format!(
            "d_lambda = {d_lambda} must lie in (0, 1)"
        )));
    }
    let steps = (1.0 / d_lambda - 1.0 + 1e-9).floor() as usize;
    if steps == 0 {
        return Err(Error::invalid(format!(
            "d_lambda = {d_lambda} leaves no threshold in [d_lambda, 1 - d_lambda]"
        )));
    }
    Ok((1..=steps)
        .map(|k| ((1.0 - k as f64 * d_lambda) * 1e12).round() / 1e12)
        .collect())
}

/// Runs the fixed-sequence walk over `grid` with caller-supplied losses.
///
/// `losses_at(index, lambda)` returns the per-sample losses at a grid point.
/// The walk is strictly sequential.
pub fn fixed_sequence_walk<B, F>(
    grid: &[f64],
    alpha: f64,
    delta: f64,
    bound: &B,
    mut losses_at: F,
) -> Result<CalibrationResult>
where
    B: UpperConfidenceBound + ?Sized,
    F: FnMut(usize, f64) -> Result<Vec<f64>>,
{
    if grid.is_empty() {
        return Err(Error::invalid("threshold grid is empty"));
    }
    let mut trace = Vec::new();
    for (idx, &lambda) in grid.iter().enumerate() {
        let losses = losses_at(idx, lambda)?;
        let ucb = bound.upper_bound(&losses, delta)?;
        let rejected = ucb < alpha;
        trace.push(TraceEntry {
            lambda,
            mean_fdp: mean(&losses),
            ucb,
            rejected,
        });
        if !rejected {
            // back off to the last rejected threshold
            let lambda_hat = if idx == 0 {
                FALLBACK_LAMBDA
            } else {
                grid[idx - 1]
            };
            return Ok(CalibrationResult {
                lambda_hat,
                trace,
                stopped_reason: StopReason::FailedToReject,
            });
        }
    }
    Ok(CalibrationResult {
        lambda_hat: *grid.last().expect("grid is nonempty"),
        trace,
        stopped_reason: StopReason::ExhaustedGrid,
    })
}

/// Per-query state reused across grid points.
///
/// Every threshold set is a prefix of the items sorted by descending score,
/// so a set is identified by its size. Plain-family FDPs come from prefix
/// counts; diverse-family FDPs are pruned the first time a size is seen.
struct QueryProfile<'a> {
    query: &'a LabeledQuery,
    order: Vec<usize>,
    sorted_scores: Vec<f64>,
    m: usize,
    false_prefix: Vec<usize>,
    pruned: Option<PrunedCache>,
}

struct PrunedCache {
    dist: Vec<f64>,
    max_items: usize,
    rule: PruneRule,
    fdp_by_size: Vec<Option<f64>>,
}

impl<'a> QueryProfile<'a> {
    fn new(query: &'a LabeledQuery, config: &CalibrationConfig) -> Self {
        let scores = item_scores(&query.scores);
        let k = scores.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let sorted_scores = order.iter().map(|&i| scores[i]).collect();
        let m = derive_m(k, config.m_rule);
        let mut false_prefix = Vec::with_capacity(k + 1);
        false_prefix.push(0);
        for &i in &order {
            let last = *false_prefix.last().unwrap();
            false_prefix.push(last + usize::from(query.ranking.rank(i) > m));
        }
        let pruned = match (config.family, &query.embeddings) {
            (SetFamily::Diverse { max_items, rule }, Some(e)) => Some(PrunedCache {
                dist: e.distance_matrix(),
                max_items,
                rule,
                fdp_by_size: vec![None; k + 1],
            }),
            _ => None,
        };
        Self {
            query,
            order,
            sorted_scores,
            m,
            false_prefix,
            pruned,
        }
    }

    fn fdp_at(&mut self, lambda: f64) -> f64 {
        let size = self.sorted_scores.partition_point(|&s| s >= lambda);
        match &mut self.pruned {
            None => self.false_prefix[size] as f64 / size.max(1) as f64,
            Some(cache) => {
                if let Some(v) = cache.fdp_by_size[size] {
                    return v;
                }
                let v = if size <= cache.max_items {
                    self.false_prefix[size] as f64 / size.max(1) as f64
                } else {
                    let mut items = self.order[..size].to_vec();
                    items.sort_unstable();
                    let k = self.query.k();
                    let mut local = vec![0.0; size * size];
                    for (a, &i) in items.iter().enumerate() {
                        for (b, &j) in items.iter().enumerate() {
                            local[a * size + b] = cache.dist[i * k + j];
                        }
                    }
                    let kept: Vec<usize> = prune_indices(size, &local, cache.max_items, cache.rule)
                        .into_iter()
                        .map(|a| items[a])
                        .collect();
                    fdp_unchecked(&kept, &self.query.ranking, self.m)
                };
                cache.fdp_by_size[size] = Some(v);
                v
            }
        }
    }
}

fn check_data(data: &[&LabeledQuery], config: &CalibrationConfig) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invalid("calibration needs at least one query"));
    }
    if let SetFamily::Diverse { .. } = config.family {
        if let Some(q) = data.iter().find(|q| q.embeddings.is_none()) {
            return Err(Error::schema(
                &q.query_id,
                "diverse family requires embeddings for every query",
            ));
        }
    }
    Ok(())
}

/// Selects `λ̂` on calibration data so that `P(FDR(λ̂) > α) < δ`.
pub fn calibrate(data: &[LabeledQuery], config: &CalibrationConfig) -> Result<CalibrationResult> {
    let refs: Vec<&LabeledQuery> = data.iter().collect();
    calibrate_refs(&refs, config)
}

/// [`calibrate`] over borrowed queries, e.g. one side of a random split.
pub fn calibrate_refs(
    data: &[&LabeledQuery],
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    config.validate()?;
    check_data(data, config)?;
    let grid = lambda_grid(config.d_lambda)?;
    let mut profiles: Vec<QueryProfile> = data
        .par_iter()
        .map(|q| QueryProfile::new(q, config))
        .collect();
    fixed_sequence_walk(
        &grid,
        config.alpha,
        config.delta,
        &config.bound,
        |_, lambda| Ok(profiles.par_iter_mut().map(|p| p.fdp_at(lambda)).collect()),
    )
}

/// The set a calibrated threshold produces for one query.
///
/// `λ̂ = 1` is the no-certification fallback and always yields the empty
/// set, even for items whose score saturates at exactly 1.
pub fn predict(
    scores: &PairwiseScores,
    embeddings: Option<&EmbeddingSet>,
    lambda_hat: f64,
    config: &CalibrationConfig,
) -> Result<PredictionSet> {
    if !(0.0..=1.0).contains(&lambda_hat) {
        return Err(Error::invalid(format!(
            "lambda {lambda_hat} outside [0, 1]"
        )));
    }
    if lambda_hat >= FALLBACK_LAMBDA {
        return Ok(PredictionSet::empty());
    }
    let plain = threshold_set(&item_scores(scores), lambda_hat);
    match config.family {
        SetFamily::Plain => Ok(plain),
        SetFamily::Diverse { max_items, rule } => {
            let e =
                embeddings.ok_or_else(|| Error::invalid("diverse family requires embeddings"))?;
            if e.len() != scores.k() {
                return Err(Error::invalid(format!(
                    "{} embeddings for {} items",
                    e.len(),
                    scores.k()
                )));
            }
            greedy_prune_with(&plain, e, max_items, rule)
        }
    }
}

/// [`predict`] applied to a labeled query.
pub fn predict_query(
    query: &LabeledQuery,
    lambda_hat: f64,
    config: &CalibrationConfig,
) -> Result<PredictionSet> {
    predict(&query.scores, query.embeddings.as_ref(), lambda_hat, config)
}
