//! Repeated calibration/test splits and the summaries built from them.
//!
//! Every trial shuffles the dataset with its own ChaCha stream of the
//! protocol seed, calibrates on the first `n` queries and evaluates on the
//! rest. Trials run in parallel and are aggregated in trial order, so reports
//! do not depend on the number of workers.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_refs, predict_query, CalibrationConfig, SetFamily, StopReason};
use crate::data::formats::csv_error;
use crate::diversity::{diversity, greedy_prune_with, PruneRule};
use crate::error::{Error, Result};
use crate::ranking::{item_scores, threshold_set, LabeledQuery, PredictionSet};
use crate::risk::{derive_m, fdp, MRule};

/// Marker written to reports where a statistic has no defined value.
pub const UNDEFINED: &str = "undefined";

pub const STRATUM_LABELS: [&str; 4] = ["Short", "Short-Medium", "Medium-Long", "Long"];

/// How set sizes are recorded per trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeSampling {
    /// Every test query's set size.
    #[default]
    AllQueries,
    /// One uniformly drawn test query per trial.
    SingleUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialProtocol {
    pub trials: usize,
    pub n_calibration: usize,
    pub seed: u64,
    pub config: CalibrationConfig,
    #[serde(default)]
    pub size_sampling: SizeSampling,
    /// Equal-width bins of the per-trial test FDR histogram over `[0, 1]`.
    pub risk_bins: usize,
}

impl TrialProtocol {
    pub fn new(trials: usize, n_calibration: usize, seed: u64, config: CalibrationConfig) -> Self {
        Self {
            trials,
            n_calibration,
            seed,
            config,
            size_sampling: SizeSampling::AllQueries,
            risk_bins: 20,
        }
    }

    pub fn validate(&self, dataset_size: usize) -> Result<()> {
        self.config.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("need at least one trial"));
        }
        if self.n_calibration == 0 || self.n_calibration >= dataset_size {
            return Err(Error::invalid(format!(
                "calibration size {} must be in 1..{dataset_size}",
                self.n_calibration
            )));
        }
        if self.risk_bins == 0 {
            return Err(Error::invalid("risk histogram needs at least one bin"));
        }
        Ok(())
    }
}

/// Diversity gained by pruning, over the sets the pruning changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityImprovement {
    /// Mean of `Diversity(pruned) / Diversity(unpruned)`; `None` when no
    /// modified set had a nonzero denominator.
    pub mean_ratio: Option<f64>,
    pub fraction_modified: f64,
    pub evaluated: usize,
    pub modified: usize,
    /// Modified sets left out of the mean because their unpruned diversity was 0.
    pub zero_diversity: usize,
    #[serde(skip)]
    ratio_sum: f64,
}

impl DiversityImprovement {
    fn record(&mut self, before: Option<f64>, after: f64) {
        self.evaluated += 1;
        let Some(before) = before else {
            return;
        };
        self.modified += 1;
        if before > 0.0 {
            self.ratio_sum += after / before;
        } else {
            self.zero_diversity += 1;
        }
    }

    fn merge(&mut self, other: &DiversityImprovement) {
        self.evaluated += other.evaluated;
        self.modified += other.modified;
        self.zero_diversity += other.zero_diversity;
        self.ratio_sum += other.ratio_sum;
    }

    fn finish(mut self) -> Self {
        let counted = self.modified - self.zero_diversity;
        self.mean_ratio = (counted > 0).then(|| self.ratio_sum / counted as f64);
        self.fraction_modified = if self.evaluated > 0 {
            self.modified as f64 / self.evaluated as f64
        } else {
            0.0
        };
        self
    }
}

/// Relative diversity improvement of pruning at `lambda_hat` with cap `m_cap`.
pub fn relative_diversity_improvement(
    queries: &[LabeledQuery],
    lambda_hat: f64,
    m_cap: usize,
    rule: PruneRule,
) -> Result<DiversityImprovement> {
    let mut acc = DiversityImprovement::default();
    for q in queries {
        let (before, after) = diversity_pair(q, lambda_hat, m_cap, rule)?;
        acc.record(before, after);
    }
    Ok(acc.finish())
}

/// `(Diversity(T) if T was pruned, Diversity(D))` for one query.
fn diversity_pair(
    q: &LabeledQuery,
    lambda_hat: f64,
    m_cap: usize,
    rule: PruneRule,
) -> Result<(Option<f64>, f64)> {
    let emb = q
        .embeddings
        .as_ref()
        .ok_or_else(|| Error::schema(&q.query_id, "diversity statistics need embeddings"))?;
    let plain = threshold_set(&item_scores(&q.scores), lambda_hat);
    if plain.len() <= m_cap {
        return Ok((None, diversity(&plain, emb, m_cap)?));
    }
    let pruned = greedy_prune_with(&plain, emb, m_cap, rule)?;
    Ok((
        Some(diversity(&plain, emb, m_cap)?),
        diversity(&pruned, emb, m_cap)?,
    ))
}

/// FDR within one set-size quartile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    /// Inclusive only for the first stratum; the others are `(lower, upper]`.
    pub lower: usize,
    pub upper: usize,
    pub count: usize,
    /// `None` for an empty stratum.
    pub fdr: Option<f64>,
}

/// Splits `(set size, FDP)` pairs at the nearest-rank quartiles of the sizes.
///
/// Bin 1 is `[q0, q1]`, bin `j > 1` is `(q_{j-1}, q_j]`; each query goes to
/// the lowest bin containing its size.
pub fn stratify(entries: &[(usize, f64)]) -> Result<Vec<Stratum>> {
    let n = entries.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "stratified FDR needs at least 4 queries, got {n}"
        )));
    }
    let mut sizes: Vec<usize> = entries.iter().map(|e| e.0).collect();
    sizes.sort_unstable();
    let quantile = |j: usize| sizes[(j * n).div_ceil(4) - 1];
    let edges: Vec<usize> = std::iter::once(sizes[0])
        .chain((1..=4).map(quantile))
        .collect();
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for &(size, loss) in entries {
        let bin = (0..4)
            .find(|&j| {
                let above_lower = if j == 0 {
                    size >= edges[0]
                } else {
                    size > edges[j]
                };
                above_lower && size <= edges[j + 1]
            })
            .expect("quartile bins cover the observed range");
        sums[bin] += loss;
        counts[bin] += 1;
    }
    Ok((0..4)
        .map(|j| Stratum {
            label: STRATUM_LABELS[j].to_string(),
            lower: edges[j],
            upper: edges[j + 1],
            count: counts[j],
            fdr: (counts[j] > 0).then(|| sums[j] / counts[j] as f64),
        })
        .collect())
}

/// Stratified FDR of precomputed sets on labeled queries.
pub fn stratified_fdr(
    queries: &[LabeledQuery],
    sets: &[PredictionSet],
    rule: MRule,
) -> Result<Vec<Stratum>> {
    if queries.len() != sets.len() {
        return Err(Error::invalid("one prediction set per query is required"));
    }
    let entries = queries
        .iter()
        .zip(sets)
        .map(|(q, s)| Ok((s.len(), fdp(s, &q.ranking, derive_m(q.k(), rule))?)))
        .collect::<Result<Vec<_>>>()?;
    stratify(&entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub lambda_hat: f64,
    pub stopped_reason: StopReason,
    pub test_fdr: f64,
    pub mean_set_size: f64,
    pub n_test: usize,
    pub set_sizes: Vec<usize>,
    pub diversity: Option<DiversityImprovement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskHistogram {
    /// `bins + 1` edges over `[0, 1]`; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RiskHistogram {
    fn build(values: impl Iterator<Item = f64>, bins: usize) -> Self {
        let mut counts = vec![0; bins];
        for v in values {
            let b = ((v * bins as f64).floor() as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: TrialProtocol,
    pub records: Vec<TrialRecord>,
    pub risk_histogram: RiskHistogram,
    /// `(set size, count)` over all recorded sizes, ascending by size.
    pub size_histogram: Vec<(usize, usize)>,
    /// Mean of the per-trial test FDRs.
    pub mean_test_fdr: f64,
    /// Fraction of trials whose test FDR exceeded `alpha`.
    pub violation_fraction: f64,
    /// Mean FDP over every evaluated (trial, test query) pair.
    pub pooled_fdr: f64,
    pub strata: Vec<Stratum>,
    pub diversity: Option<DiversityImprovement>,
}

struct TrialOutcome {
    record: TrialRecord,
    entries: Vec<(usize, f64)>,
}

fn run_trial(
    data: &[LabeledQuery],
    protocol: &TrialProtocol,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    rng.set_stream(trial as u64);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let (cal_idx, test_idx) = order.split_at(protocol.n_calibration);
    let cal: Vec<&LabeledQuery> = cal_idx.iter().map(|&i| &data[i]).collect();
    let config = &protocol.config;
    let result = calibrate_refs(&cal, config)?;
    let lambda_hat = result.lambda_hat;

    let mut entries = Vec::with_capacity(test_idx.len());
    let mut improvement = DiversityImprovement::default();
    for &i in test_idx {
        let q = &data[i];
        let set = predict_query(q, lambda_hat, config)?;
        let loss = fdp(&set, &q.ranking, derive_m(q.k(), config.m_rule))?;
        entries.push((set.len(), loss));
        if let SetFamily::Diverse { max_items, rule } = config.family {
            let (before, after) = diversity_pair(q, lambda_hat, max_items, rule)?;
            improvement.record(before, after);
        }
    }
    let test_fdr = entries.iter().map(|e| e.1).sum::<f64>() / entries.len() as f64;
    let mean_set_size = entries.iter().map(|e| e.0 as f64).sum::<f64>() / entries.len() as f64;
    let set_sizes = match protocol.size_sampling {
        SizeSampling::AllQueries => entries.iter().map(|e| e.0).collect(),
        SizeSampling::SingleUniform => vec![entries[rng.random_range(0..entries.len())].0],
    };
    let diversity = matches!(config.family, SetFamily::Diverse { .. }).then_some(improvement);
    Ok(TrialOutcome {
        record: TrialRecord {
            trial,
            lambda_hat,
            stopped_reason: result.stopped_reason,
            test_fdr,
            mean_set_size,
            n_test: entries.len(),
            set_sizes,
            diversity,
        },
        entries,
    })
}

/// Runs the repeated split protocol.
pub fn run_trials(data: &[LabeledQuery], protocol: &TrialProtocol) -> Result<EvalReport> {
    protocol.validate(data.len())?;
    let outcomes = (0..protocol.trials)
        .into_par_iter()
        .map(|t| run_trial(data, protocol, t))
        .collect::<Result<Vec<_>>>()?;

    let trials = outcomes.len() as f64;
    let mean_test_fdr = outcomes.iter().map(|o| o.record.test_fdr).sum::<f64>() / trials;
    let violations = outcomes
        .iter()
        .filter(|o| o.record.test_fdr > protocol.config.alpha)
        .count();
    let risk_histogram = RiskHistogram::build(
        outcomes.iter().map(|o| o.record.test_fdr),
        protocol.risk_bins,
    );

    let mut size_counts = std::collections::BTreeMap::new();
    for size in outcomes.iter().flat_map(|o| &o.record.set_sizes) {
        *size_counts.entry(*size).or_insert(0) += 1;
    }

    let pooled: Vec<(usize, f64)> = outcomes
        .iter()
        .flat_map(|o| o.entries.iter().copied())
        .collect();
    let pooled_fdr = pooled.iter().map(|e| e.1).sum::<f64>() / pooled.len() as f64;
    let strata = if pooled.len() >= 4 {
        stratify(&pooled)?
    } else {
        Vec::new()
    };

    let diversity = outcomes
        .iter()
        .map(|o| o.record.diversity)
        .collect::<Option<Vec<_>>>()
        .map(|per_trial| {
            let mut acc = DiversityImprovement::default();
            for d in &per_trial {
                acc.merge(d);
            }
            acc.finish()
        });

    let records = outcomes
        .into_iter()
        .map(|mut o| {
            o.record.diversity = o.record.diversity.map(DiversityImprovement::finish);
            o.record
        })
        .collect();

    Ok(EvalReport {
        protocol: protocol.clone(),
        records,
        risk_histogram,
        size_histogram: size_counts.into_iter().collect(),
        mean_test_fdr,
        violation_fraction: violations as f64 / trials,
        pooled_fdr,
        strata,
        diversity,
    })
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha(Vec<f64>),
    /// Forces the diverse family with each cap in turn.
    MaxItems(Vec<usize>),
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Alpha(_) => "alpha",
            SweepParam::MaxItems(_) => "max_items",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_ratio: Option<f64>,
    pub fraction_modified: Option<f64>,
    pub mean_test_fdr: f64,
    pub mean_lambda_hat: f64,
}

impl SweepRow {
    fn from_report(value: f64, report: &EvalReport) -> Self {
        let n = report.records.len() as f64;
        Self {
            value,
            mean_ratio: report.diversity.and_then(|d| d.mean_ratio),
            fraction_modified: report.diversity.map(|d| d.fraction_modified),
            mean_test_fdr: report.mean_test_fdr,
            mean_lambda_hat: report.records.iter().map(|r| r.lambda_hat).sum::<f64>() / n,
        }
    }
}

/// Runs [`run_trials`] once per parameter value with the protocol's seed.
pub fn sweep(
    data: &[LabeledQuery],
    param: &SweepParam,
    base: &TrialProtocol,
) -> Result<Vec<SweepRow>> {
    let configs: Vec<(f64, CalibrationConfig)> = match param {
        SweepParam::Alpha(values) => values
            .iter()
            .map(|&a| {
                (
                    a,
                    CalibrationConfig {
                        alpha: a,
                        ..base.config
                    },
                )
            })
            .collect(),
        SweepParam::MaxItems(values) => {
            let rule = match base.config.family {
                SetFamily::Diverse { rule, .. } => rule,
                SetFamily::Plain => PruneRule::default(),
            };
            values
                .iter()
                .map(|&m| {
                    let family = SetFamily::Diverse { max_items: m, rule };
                    (m as f64, base.config.with_family(family))
                })
                .collect()
        }
    };
    if configs.is_empty() {
        return Err(Error::invalid("sweep needs at least one parameter value"));
    }
    configs
        .into_iter()
        .map(|(value, config)| {
            let protocol = TrialProtocol {
                config,
                ..base.clone()
            };
            Ok(SweepRow::from_report(value, &run_trials(data, &protocol)?))
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

/// `trial,lambda_hat,test_fdr,mean_set_size,stopped_reason,n_test,mean_diversity_ratio,fraction_modified`
pub fn write_trials_csv<W: Write>(out: W, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "trial",
        "lambda_hat",
        "test_fdr",
        "mean_set_size",
        "stopped_reason",
        "n_test",
        "mean_diversity_ratio",
        "fraction_modified",
    ])
    .map_err(csv_error)?;
    for r in &report.records {
        w.write_record([
            r.trial.to_string(),
            r.lambda_hat.to_string(),
            r.test_fdr.to_string(),
            r.mean_set_size.to_string(),
            r.stopped_reason.to_string(),
            r.n_test.to_string(),
            opt(r.diversity.and_then(|d| d.mean_ratio)),
            opt(r.diversity.map(|d| d.fraction_modified)),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `stratum,label,lower,upper,count,fdr`
pub fn write_strata_csv<W: Write>(out: W, strata: &[Stratum]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["stratum", "label", "lower", "upper", "count", "fdr"])
        .map_err(csv_error)?;
    for (j, s) in strata.iter().enumerate() {
        w.write_record([
            (j + 1).to_string(),
            s.label.clone(),
            s.lower.to_string(),
            s.upper.to_string(),
            s.count.to_string(),
            opt(s.fdr),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `bin_lower,bin_upper,count`
pub fn write_risk_histogram_csv<W: Write>(out: W, hist: &RiskHistogram) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lower", "bin_upper", "count"])
        .map_err(csv_error)?;
    for (i, c) in hist.counts.iter().enumerate() {
        w.write_record([
            hist.edges[i].to_string(),
            hist.edges[i + 1].to_string(),
            c.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `set_size,count`
pub fn write_size_histogram_csv<W: Write>(out: W, hist: &[(usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["set_size", "count"]).map_err(csv_error)?;
    for (size, count) in hist {
        w.write_record([size.to_string(), count.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `<param>,mean_ratio,fraction_modified,mean_test_fdr,mean_lambda_hat`
pub fn write_sweep_csv<W: Write>(out: W, param: &SweepParam, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        param.name(),
        "mean_ratio",
        "fraction_modified",
        "mean_test_fdr",
        "mean_lambda_hat",
    ])
    .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.value.to_string(),
            opt(r.mean_ratio),
            opt(r.fraction_modified),
            r.mean_test_fdr.to_string(),
            r.mean_lambda_hat.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
