use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use rankset::data::{
    pairwise_from_utilities, parse_letor, read_embeddings, read_pairwise, read_rankings,
    read_utilities,
};
use rankset::{EmbeddingSet, LabeledQuery, PairwiseScores, Ranking};

use crate::manifest::InputDigest;
use crate::Failure;

/// Model outputs for a set of queries.
#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Pairwise preference matrices, one block per query.
    #[arg(long, value_name = "FILE", conflicts_with = "utilities")]
    pub scores: Option<PathBuf>,
    /// Per-item model utilities, turned into pairwise scores by a logistic link.
    #[arg(long, value_name = "FILE")]
    pub utilities: Option<PathBuf>,
    /// Temperature of the logistic link used with --utilities.
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Replace each pair (p_ij, p_ji) by its normalized version summing to 1.
    #[arg(long)]
    pub symmetrize: bool,
    /// Item embeddings, required by the diverse family.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
}

/// Ground-truth labels.
#[derive(Debug, Args)]
pub struct LabelArgs {
    /// True rankings (rank 1 = best), one block per query.
    #[arg(long, value_name = "FILE", conflicts_with = "letor")]
    pub rankings: Option<PathBuf>,
    /// LETOR/SVMLight file whose relevance labels define the true rankings.
    #[arg(long, value_name = "FILE")]
    pub letor: Option<PathBuf>,
}

impl ScoreArgs {
    pub fn given(&self) -> bool {
        self.scores.is_some() || self.utilities.is_some()
    }
}

impl LabelArgs {
    pub fn given(&self) -> bool {
        self.rankings.is_some() || self.letor.is_some()
    }
}

/// Queries as read from disk, with labels when they were supplied.
pub struct Loaded {
    pub queries: Vec<(String, PairwiseScores, Option<EmbeddingSet>)>,
    pub labels: Option<HashMap<String, Ranking>>,
    pub digests: Vec<InputDigest>,
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::input_io(path, e))
}

fn in_file<T>(path: &Path, r: rankset::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::input_lib(path, e))
}

fn unique<T>(path: &Path, rows: Vec<(String, T)>) -> Result<HashMap<String, T>, Failure> {
    let mut map = HashMap::with_capacity(rows.len());
    for (id, value) in rows {
        if map.insert(id.clone(), value).is_some() {
            return Err(Failure::input(format!(
                "{}: query {id} appears more than once",
                path.display()
            )));
        }
    }
    Ok(map)
}

pub fn load(scores: &ScoreArgs, labels: &LabelArgs) -> Result<Loaded, Failure> {
    let mut digests = Vec::new();
    let raw = match (&scores.scores, &scores.utilities) {
        (Some(path), _) => {
            digests.push(InputDigest::of("scores", path)?);
            in_file(path, read_pairwise(open(path)?))?
        }
        (None, Some(path)) => {
            digests.push(InputDigest::of("utilities", path)?);
            let rows = in_file(path, read_utilities(open(path)?))?;
            rows.into_iter()
                .map(|(id, u)| {
                    let p = pairwise_from_utilities(&u, scores.temperature)
                        .map_err(|e| Failure::input_lib(path, e))?;
                    Ok((id, p))
                })
                .collect::<Result<Vec<_>, Failure>>()?
        }
        (None, None) => return Err(Failure::usage("one of --scores or --utilities is required")),
    };

    if raw.is_empty() {
        let path = scores
            .scores
            .as_ref()
            .or(scores.utilities.as_ref())
            .expect("checked above");
        return Err(Failure::input(format!(
            "{}: no queries found",
            path.display()
        )));
    }

    let mut embeddings = match &scores.embeddings {
        Some(path) => {
            digests.push(InputDigest::of("embeddings", path)?);
            Some(unique(path, in_file(path, read_embeddings(open(path)?))?)?)
        }
        None => None,
    };

    let labels = match (&labels.rankings, &labels.letor) {
        (Some(path), _) => {
            digests.push(InputDigest::of("rankings", path)?);
            Some(unique(path, in_file(path, read_rankings(open(path)?))?)?)
        }
        (None, Some(path)) => {
            digests.push(InputDigest::of("letor", path)?);
            let bytes = fs::read(path).map_err(|e| Failure::input_io(path, e))?;
            let parsed = in_file(path, parse_letor(&bytes))?;
            let rows = parsed
                .iter()
                .map(|q| Ok((q.query_id.clone(), in_file(path, q.ranking())?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            Some(unique(path, rows)?)
        }
        (None, None) => None,
    };

    let queries = raw
        .into_iter()
        .map(|(id, p)| {
            let p = if scores.symmetrize {
                p.symmetrized()
            } else {
                p
            };
            let e = match embeddings.as_mut() {
                Some(map) => Some(map.remove(&id).ok_or_else(|| {
                    Failure::input(format!("query {id}: no embeddings for this query"))
                })?),
                None => None,
            };
            Ok((id, p, e))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(Loaded {
        queries,
        labels,
        digests,
    })
}

/// Joins scores with labels; every query needs a ranking of matching length.
pub fn labeled(loaded: Loaded) -> Result<(Vec<LabeledQuery>, Vec<InputDigest>), Failure> {
    let Some(mut labels) = loaded.labels else {
        return Err(Failure::usage("one of --rankings or --letor is required"));
    };
    let queries = loaded
        .queries
        .into_iter()
        .map(|(id, p, e)| {
            let ranking = labels
                .remove(&id)
                .ok_or_else(|| Failure::input(format!("query {id}: no ranking for this query")))?;
            LabeledQuery::new(id, p, ranking, e, None).map_err(Failure::input_error)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok((queries, loaded.digests))
}
