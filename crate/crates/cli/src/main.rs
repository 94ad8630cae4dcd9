//! `rankset` command-line tool.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 invalid arguments,
//! 3 unreadable or malformed input, 4 outputs written but the configuration
//! cannot certify any threshold (the calibrated threshold is the fallback).

mod input;
mod manifest;

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankset::calibration::write_trace_csv;
use rankset::data::{
    generate_synthetic, write_dataset, write_predictions, PredictionRow, SyntheticSpec,
};
use rankset::eval::{
    write_risk_histogram_csv, write_size_histogram_csv, write_strata_csv, write_sweep_csv,
    write_trials_csv, SizeSampling,
};
use rankset::risk::UpperConfidenceBound;
use rankset::{
    calibrate, derive_m, fdp, predict, run_trials, sweep, BoundKind, CalibrationConfig,
    LabeledQuery, MRule, PruneRule, SetFamily, SweepParam, TrialProtocol,
};

use input::{LabelArgs, ScoreArgs};
use manifest::{write_json, InputDigest, Referenced, RunManifest, MANIFEST_FILE};

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn input_io(path: &Path, e: io::Error) -> Self {
        Self::input(format!("cannot read {}: {e}", path.display()))
    }

    pub fn output_io(path: &Path, e: impl fmt::Display) -> Self {
        Self::other(format!("cannot write {}: {e}", path.display()))
    }

    /// Library error raised while interpreting input data.
    pub fn input_error(e: rankset::Error) -> Self {
        match e {
            rankset::Error::InvalidArgument(_) => Self::usage(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }

    pub fn input_lib(path: &Path, e: rankset::Error) -> Self {
        let mut f = Self::input_error(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }

    /// Library error raised after the inputs were accepted.
    fn lib(e: rankset::Error) -> Self {
        match e {
            rankset::Error::InvalidArgument(_) => Self::usage(e.to_string()),
            rankset::Error::Io(_) => Self::other(e.to_string()),
            _ => Self::input(e.to_string()),
        }
    }
}

/// Whether a run could certify a threshold at all.
enum Status {
    Ok,
    Uncertifiable,
}

#[derive(Debug, Parser)]
#[command(
    name = "rankset",
    version,
    about = "FDR-controlled recommendation sets for ranking models"
)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate the score threshold on labeled queries.
    Calibrate(CalibrateArgs),
    /// Produce prediction sets for a calibrated threshold.
    Predict(PredictArgs),
    /// Run repeated calibration/test splits and write evaluation reports.
    Evaluate(EvaluateArgs),
    /// Repeat the evaluation over a list of alpha or max-items values.
    Sweep(SweepArgs),
    /// Write a synthetic dataset with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    MostDiverseRemainder,
    LeastDiverseRemainder,
}

impl From<RuleArg> for PruneRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::MostDiverseRemainder => PruneRule::MostDiverseRemainder,
            RuleArg::LeastDiverseRemainder => PruneRule::LeastDiverseRemainder,
        }
    }
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Good items are the top ceil(f K) of each query (at least one).
    #[arg(long, value_name = "F", conflicts_with = "m_abs")]
    m_frac: Option<f64>,
    /// Good items are the top m of each query (capped at K).
    #[arg(long, value_name = "M")]
    m_abs: Option<usize>,
    /// Prune each threshold set for embedding diversity.
    #[arg(long)]
    diverse: bool,
    /// Size cap M of diverse sets.
    #[arg(long, value_name = "M")]
    max_items: Option<usize>,
    /// Greedy removal rule of the diverse family.
    #[arg(long, value_enum, default_value = "most-diverse-remainder")]
    prune_rule: RuleArg,
}

impl FamilyArgs {
    fn given(&self) -> bool {
        self.m_frac.is_some() || self.m_abs.is_some() || self.diverse || self.max_items.is_some()
    }

    fn m_rule(&self) -> MRule {
        match (self.m_frac, self.m_abs) {
            (Some(f), _) => MRule::Fraction(f),
            (None, Some(m)) => MRule::Absolute(m),
            (None, None) => MRule::default(),
        }
    }

    fn family(&self, embeddings: bool) -> Result<SetFamily, Failure> {
        if !self.diverse {
            if self.max_items.is_some() {
                return Err(Failure::usage("--max-items requires --diverse"));
            }
            return Ok(SetFamily::Plain);
        }
        if !embeddings {
            return Err(Failure::usage("--diverse requires --embeddings"));
        }
        let max_items = self
            .max_items
            .ok_or_else(|| Failure::usage("--diverse requires --max-items"))?;
        Ok(SetFamily::Diverse {
            max_items,
            rule: self.prune_rule.into(),
        })
    }
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Target FDR level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Allowed probability of exceeding alpha.
    #[arg(long)]
    delta: f64,
    /// Spacing of the threshold grid.
    #[arg(long, default_value_t = 0.01)]
    dlambda: f64,
    /// Concentration bound.
    #[arg(long, default_value = "hoeffding")]
    bound: String,
    #[command(flatten)]
    family: FamilyArgs,
}

impl ConfigArgs {
    fn build(&self, alpha: f64, embeddings: bool) -> Result<CalibrationConfig, Failure> {
        let bound: BoundKind = self.bound.parse().map_err(Failure::lib)?;
        let config = CalibrationConfig {
            bound,
            ..CalibrationConfig::new(alpha, self.delta)
                .with_d_lambda(self.dlambda)
                .with_m_rule(self.family.m_rule())
                .with_family(self.family.family(embeddings)?)
        };
        config.validate().map_err(Failure::lib)?;
        Ok(config)
    }

    fn alpha(&self) -> Result<f64, Failure> {
        self.alpha
            .ok_or_else(|| Failure::usage("--alpha is required"))
    }
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    scores: ScoreArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, env = "RANKSET_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Calibrated threshold.
    #[arg(
        long,
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    lambda: Option<f64>,
    /// Manifest written by `calibrate`; supplies the threshold and configuration.
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    scores: ScoreArgs,
    /// Optional labels; adds the FDP of every set.
    #[command(flatten)]
    labels: LabelArgs,
    #[command(flatten)]
    family: FamilyArgs,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Number of queries.
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 5)]
    k_min: usize,
    #[arg(long, default_value_t = 15)]
    k_max: usize,
    /// Standard deviation of the latent utilities.
    #[arg(long, default_value_t = 1.0)]
    utility_scale: f64,
    /// Standard deviation of the model's noise on the utilities.
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Embedding dimension; 0 writes no embeddings.
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Temperature of the logistic pairwise link.
    #[arg(long, default_value_t = 1.0)]
    link_temperature: f64,
    /// Index of the first generated query.
    #[arg(long, default_value_t = 0)]
    first_query: u64,
}

impl SpecArgs {
    fn spec(&self, seed: u64) -> Result<SyntheticSpec, Failure> {
        let spec = SyntheticSpec {
            seed,
            queries: self.queries,
            k_min: self.k_min,
            k_max: self.k_max,
            utility_scale: self.utility_scale,
            noise: self.noise,
            embedding_dim: self.dim,
            temperature: self.link_temperature,
            first_query: self.first_query,
        };
        spec.validate().map_err(Failure::lib)?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    #[command(flatten)]
    scores: ScoreArgs,
    #[command(flatten)]
    labels: LabelArgs,
    /// Generate the data in memory from this seed instead of reading files.
    #[arg(long)]
    synth_seed: Option<u64>,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SamplingArg {
    AllQueries,
    SingleUniform,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    /// Number of random calibration/test splits.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Calibration queries per split.
    #[arg(long)]
    ncal: usize,
    /// Seed of the split generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which set sizes enter the size histogram.
    #[arg(long, value_enum, default_value = "all-queries")]
    size_sampling: SamplingArg,
    /// Bins of the per-trial FDR histogram.
    #[arg(long, default_value_t = 20)]
    risk_bins: usize,
}

impl ProtocolArgs {
    fn protocol(&self, config: CalibrationConfig) -> TrialProtocol {
        TrialProtocol {
            size_sampling: match self.size_sampling {
                SamplingArg::AllQueries => SizeSampling::AllQueries,
                SamplingArg::SingleUniform => SizeSampling::SingleUniform,
            },
            risk_bins: self.risk_bins,
            ..TrialProtocol::new(self.trials, self.ncal, self.seed, config)
        }
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Output directory.
    #[arg(long, env = "RANKSET_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParamArg {
    Alpha,
    MaxItems,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Parameter to vary.
    #[arg(long, value_enum)]
    param: ParamArg,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Output directory.
    #[arg(long, env = "RANKSET_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator seed.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    spec: SpecArgs,
    /// Output directory.
    #[arg(long, env = "RANKSET_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::output_io(dir, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(BufWriter<File>) -> rankset::Result<()>,
{
    let file = File::create(path).map_err(|e| Failure::output_io(path, e))?;
    f(BufWriter::new(file)).map_err(|e| Failure::output_io(path, e))
}

/// Warning text when even an all-correct calibration set cannot reject the
/// first hypothesis at this sample size.
fn uncertifiable(config: &CalibrationConfig, n: usize) -> Result<Option<String>, Failure> {
    let best = config
        .bound
        .upper_bound(&vec![0.0; n], config.delta)
        .map_err(Failure::lib)?;
    Ok((best >= config.alpha).then(|| {
        format!(
            "with n = {n} calibration queries the bound is at least {best:.4} >= alpha = {}; \
             no threshold can be certified and the fallback (empty sets) is returned",
            config.alpha
        )
    }))
}

fn warn(manifest: &mut RunManifest, message: String) {
    eprintln!("warning: {message}");
    manifest.warnings.push(message);
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<Status, Failure> {
    let alpha = args.config.alpha()?;
    let config = args.config.build(alpha, args.scores.embeddings.is_some())?;
    if !args.labels.given() {
        return Err(Failure::usage("one of --rankings or --letor is required"));
    }
    let (data, digests) = input::labeled(input::load(&args.scores, &args.labels)?)?;

    let mut manifest = RunManifest::new("calibrate");
    let mut status = Status::Ok;
    if let Some(w) = uncertifiable(&config, data.len())? {
        warn(&mut manifest, w);
        status = Status::Uncertifiable;
    }
    let result = calibrate(&data, &config).map_err(Failure::lib)?;

    create_dir(&args.out)?;
    write_json(
        &args.out.join("calibration.json"),
        &Referenced {
            manifest: MANIFEST_FILE,
            body: &result,
        },
    )?;
    write_with(&args.out.join("trace.csv"), |w| write_trace_csv(w, &result))?;

    manifest.config = Some(config);
    manifest.inputs = digests;
    manifest.queries = data.len();
    manifest.lambda_hat = Some(result.lambda_hat);
    manifest.stopped_reason = Some(result.stopped_reason);
    manifest.outputs = vec!["calibration.json".into(), "trace.csv".into()];
    manifest.write(&args.out.join(MANIFEST_FILE))?;

    println!("{}", result.lambda_hat);
    Ok(status)
}

fn cmd_predict(args: &PredictArgs) -> Result<Status, Failure> {
    let (lambda, config, source) = match (&args.manifest, args.lambda) {
        (Some(path), _) => {
            if args.family.given() {
                return Err(Failure::usage(
                    "--manifest supplies the configuration; drop --m-frac, --m-abs, --diverse and --max-items",
                ));
            }
            let m = RunManifest::read(path)?;
            match (m.lambda_hat, m.config) {
                (Some(l), Some(c)) => (l, c, Some(InputDigest::of("manifest", path)?)),
                _ => {
                    return Err(Failure::input(format!(
                        "{}: manifest has no calibrated threshold",
                        path.display()
                    )))
                }
            }
        }
        (None, Some(l)) => {
            let mut c = CalibrationConfig::new(0.5, 0.5);
            c.m_rule = args.family.m_rule();
            c.family = args.family.family(args.scores.embeddings.is_some())?;
            c.validate().map_err(Failure::lib)?;
            (l, c, None)
        }
        (None, None) => return Err(Failure::usage("one of --lambda or --manifest is required")),
    };
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Failure::usage(format!(
            "--lambda {lambda} is outside [0, 1]"
        )));
    }
    if matches!(config.family, SetFamily::Diverse { .. }) && args.scores.embeddings.is_none() {
        return Err(Failure::usage("the diverse family requires --embeddings"));
    }

    let loaded = input::load(&args.scores, &args.labels)?;
    let labels = loaded.labels;
    let rows = loaded
        .queries
        .iter()
        .map(|(id, p, e)| {
            let set = predict(p, e.as_ref(), lambda, &config).map_err(Failure::lib)?;
            let fdp = match &labels {
                Some(map) => {
                    let ranking = map.get(id).ok_or_else(|| {
                        Failure::input(format!("query {id}: no ranking for this query"))
                    })?;
                    if ranking.len() != p.k() {
                        return Err(Failure::input(format!(
                            "query {id}: ranking has {} items but the scores have {}",
                            ranking.len(),
                            p.k()
                        )));
                    }
                    Some(fdp(&set, ranking, derive_m(p.k(), config.m_rule)).map_err(Failure::lib)?)
                }
                None => None,
            };
            Ok(PredictionRow {
                query_id: id.clone(),
                size: set.len(),
                items: set.into(),
                fdp,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    match &args.output {
        Some(path) => {
            write_with(path, |w| write_predictions(w, &rows))?;
            let mut manifest = RunManifest::new("predict");
            manifest.config = Some(config);
            manifest.inputs = loaded.digests;
            manifest.inputs.extend(source);
            manifest.queries = rows.len();
            manifest.lambda_hat = Some(lambda);
            manifest.outputs = vec![path.display().to_string()];
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            manifest.write(Path::new(&name))?;
        }
        None => {
            let stdout = io::stdout().lock();
            match write_predictions(stdout, &rows) {
                Err(rankset::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => {}
                r => r.map_err(|e| Failure::other(e.to_string()))?,
            }
        }
    }
    Ok(Status::Ok)
}

/// Labeled data for evaluate and sweep, from files or generated in memory.
fn eval_data(
    args: &DataArgs,
    manifest: &mut RunManifest,
) -> Result<(Vec<LabeledQuery>, bool), Failure> {
    match args.synth_seed {
        Some(seed) => {
            if args.scores.given() || args.labels.given() || args.scores.embeddings.is_some() {
                return Err(Failure::usage(
                    "--synth-seed cannot be combined with input files",
                ));
            }
            let spec = args.spec.spec(seed)?;
            let data = generate_synthetic(&spec).map_err(Failure::lib)?;
            manifest.seed = Some(seed);
            manifest.synthetic = Some(spec.clone());
            Ok((data, spec.embedding_dim > 0))
        }
        None => {
            if !args.labels.given() {
                return Err(Failure::usage(
                    "one of --rankings or --letor is required (or --synth-seed)",
                ));
            }
            let (data, digests) = input::labeled(input::load(&args.scores, &args.labels)?)?;
            manifest.inputs = digests;
            Ok((data, args.scores.embeddings.is_some()))
        }
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<Status, Failure> {
    let alpha = args.config.alpha()?;
    let mut manifest = RunManifest::new("evaluate");
    let (data, has_embeddings) = eval_data(&args.data, &mut manifest)?;
    let config = args.config.build(alpha, has_embeddings)?;
    let protocol = args.protocol.protocol(config);
    protocol.validate(data.len()).map_err(Failure::lib)?;

    let mut status = Status::Ok;
    if let Some(w) = uncertifiable(&config, protocol.n_calibration)? {
        warn(&mut manifest, w);
        status = Status::Uncertifiable;
    }
    let report = run_trials(&data, &protocol).map_err(Failure::lib)?;

    let out = &args.out;
    create_dir(out)?;
    write_with(&out.join("trials.csv"), |w| write_trials_csv(w, &report))?;
    write_with(&out.join("strata.csv"), |w| {
        write_strata_csv(w, &report.strata)
    })?;
    write_with(&out.join("risk_histogram.csv"), |w| {
        write_risk_histogram_csv(w, &report.risk_histogram)
    })?;
    write_with(&out.join("size_histogram.csv"), |w| {
        write_size_histogram_csv(w, &report.size_histogram)
    })?;
    write_json(
        &out.join("report.json"),
        &Referenced {
            manifest: MANIFEST_FILE,
            body: &report,
        },
    )?;

    manifest.config = Some(config);
    manifest.protocol = Some(protocol.clone());
    manifest.seed.get_or_insert(protocol.seed);
    manifest.queries = data.len();
    manifest.outputs = [
        "trials.csv",
        "strata.csv",
        "risk_histogram.csv",
        "size_histogram.csv",
        "report.json",
    ]
    .map(String::from)
    .to_vec();
    manifest.write(&out.join(MANIFEST_FILE))?;

    println!("mean_test_fdr={}", report.mean_test_fdr);
    println!("violation_fraction={}", report.violation_fraction);
    println!("pooled_fdr={}", report.pooled_fdr);
    Ok(status)
}

fn parse_values<T: std::str::FromStr>(values: &[String], flag: &str) -> Result<Vec<T>, Failure> {
    values
        .iter()
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("{flag}: cannot parse '{v}'")))
        })
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<Status, Failure> {
    let mut manifest = RunManifest::new("sweep");
    let (data, has_embeddings) = eval_data(&args.data, &mut manifest)?;
    let (param, base_alpha) = match args.param {
        ParamArg::Alpha => {
            let values: Vec<f64> = parse_values(&args.values, "--values")?;
            let first = values[0];
            (
                SweepParam::Alpha(values),
                args.config.alpha.unwrap_or(first),
            )
        }
        ParamArg::MaxItems => {
            if !has_embeddings {
                return Err(Failure::usage("sweeping max-items requires --embeddings"));
            }
            (
                SweepParam::MaxItems(parse_values(&args.values, "--values")?),
                args.config.alpha()?,
            )
        }
    };
    let config = args.config.build(base_alpha, has_embeddings)?;
    let protocol = args.protocol.protocol(config);
    protocol.validate(data.len()).map_err(Failure::lib)?;

    let alphas = match &param {
        SweepParam::Alpha(values) => values.clone(),
        SweepParam::MaxItems(_) => vec![base_alpha],
    };
    let mut status = Status::Ok;
    for alpha in alphas {
        let c = CalibrationConfig { alpha, ..config };
        c.validate().map_err(Failure::lib)?;
        if let Some(w) = uncertifiable(&c, protocol.n_calibration)? {
            warn(&mut manifest, w);
            status = Status::Uncertifiable;
        }
    }
    let rows = sweep(&data, &param, &protocol).map_err(Failure::lib)?;

    create_dir(&args.out)?;
    write_with(&args.out.join("sweep.csv"), |w| {
        write_sweep_csv(w, &param, &rows)
    })?;
    manifest.config = Some(config);
    manifest.protocol = Some(protocol.clone());
    manifest.sweep = Some(param);
    manifest.seed.get_or_insert(protocol.seed);
    manifest.queries = data.len();
    manifest.outputs = vec!["sweep.csv".into()];
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    Ok(status)
}

fn cmd_synth(args: &SynthArgs) -> Result<Status, Failure> {
    let spec = args.spec.spec(args.seed)?;
    let data = generate_synthetic(&spec).map_err(Failure::lib)?;
    let paths = write_dataset(&args.out, &data).map_err(|e| Failure::output_io(&args.out, e))?;
    let mut manifest = RunManifest::new("synth");
    manifest.seed = Some(args.seed);
    manifest.synthetic = Some(spec);
    manifest.queries = data.len();
    manifest.outputs = [
        Some(&paths.scores),
        Some(&paths.rankings),
        paths.embeddings.as_ref(),
    ]
    .into_iter()
    .flatten()
    .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
    .collect();
    manifest.write(&args.out.join(MANIFEST_FILE))?;
    Ok(Status::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Uncertifiable) => ExitCode::from(4),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
