//! Line-oriented text formats for engine inputs and prediction reports.
//!
//! Every block starts with a header naming the query and its shape:
//!
//! ```text
//! query <id> k <K>            pairwise scores: K rows of K values, diagonal written as 0
//! query <id> k <K>            rankings: one row of K ranks (1 = best)
//! query <id> k <K>            utilities: one row of K values
//! query <id> k <K> d <d>      embeddings: K rows of d values
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written
//! in shortest round-trip form, so reading back what was written is exact.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diversity::EmbeddingSet;
use crate::error::{Error, Result};
use crate::ranking::{LabeledQuery, PairwiseScores, Ranking};

struct Block<'a> {
    id: String,
    k: usize,
    d: Option<usize>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn is_header(line: &str) -> bool {
    line.split_whitespace().next() == Some("query")
}

fn parse_num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("{what} '{tok}' is not a valid number")))
}

fn parse_header(
    line: &str,
    line_no: usize,
    with_dim: bool,
) -> Result<(String, usize, Option<usize>)> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let expected = if with_dim { 6 } else { 4 };
    let shape_ok = toks.len() == expected
        && toks[0] == "query"
        && toks[2] == "k"
        && (!with_dim || toks[4] == "d");
    if !shape_ok {
        let want = if with_dim {
            "query <id> k <K> d <d>"
        } else {
            "query <id> k <K>"
        };
        return Err(Error::parse(line_no, format!("expected header '{want}'")));
    }
    let k: usize = parse_num(toks[3], line_no, "item count")?;
    if k == 0 {
        return Err(Error::schema(toks[1], "header declares k = 0"));
    }
    let d = if with_dim {
        let d: usize = parse_num(toks[5], line_no, "dimension")?;
        if d == 0 {
            return Err(Error::schema(toks[1], "header declares d = 0"));
        }
        Some(d)
    } else {
        None
    };
    Ok((toks[1].to_string(), k, d))
}

/// Splits `text` into headered blocks with `rows_for(k)` data rows each.
fn read_blocks(text: &str, with_dim: bool, rows_for: fn(usize) -> usize) -> Result<Vec<Block<'_>>> {
    let mut blocks: Vec<Block> = Vec::new();
    let lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    for (line_no, line) in lines {
        if is_header(line) {
            if let Some(b) = blocks.last() {
                check_complete(b, rows_for)?;
            }
            let (id, k, d) = parse_header(line, line_no, with_dim)?;
            blocks.push(Block {
                id,
                k,
                d,
                rows: Vec::new(),
            });
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            return Err(Error::parse(line_no, "data row before any 'query' header"));
        };
        if block.rows.len() == rows_for(block.k) {
            return Err(Error::schema(
                &block.id,
                format!(
                    "header declares {} rows but line {line_no} is an extra row",
                    rows_for(block.k)
                ),
            ));
        }
        block
            .rows
            .push((line_no, line.split_whitespace().collect()));
    }
    if let Some(b) = blocks.last() {
        check_complete(b, rows_for)?;
    }
    let mut seen = HashMap::new();
    for b in &blocks {
        if seen.insert(b.id.as_str(), ()).is_some() {
            return Err(Error::schema(&b.id, "query id appears twice"));
        }
    }
    Ok(blocks)
}

fn check_complete(block: &Block, rows_for: fn(usize) -> usize) -> Result<()> {
    let want = rows_for(block.k);
    if block.rows.len() != want {
        return Err(Error::schema(
            &block.id,
            format!("header declares {want} rows, found {}", block.rows.len()),
        ));
    }
    Ok(())
}

fn parse_row<T: FromStr>(block: &Block, row: usize, width: usize, what: &str) -> Result<Vec<T>> {
    let (line_no, toks) = &block.rows[row];
    if toks.len() != width {
        return Err(Error::schema(
            &block.id,
            format!(
                "row {row} (line {line_no}) has {} values, expected {width}",
                toks.len()
            ),
        ));
    }
    toks.iter().map(|t| parse_num(t, *line_no, what)).collect()
}

fn read_text<R: Read>(mut input: R) -> Result<String> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| {
        if e.kind() == io::ErrorKind::InvalidData {
            Error::parse(0, "input is not valid UTF-8")
        } else {
            Error::Io(e)
        }
    })?;
    Ok(text)
}

pub fn read_pairwise<R: Read>(input: R) -> Result<Vec<(String, PairwiseScores)>> {
    let text = read_text(input)?;
    read_blocks(&text, false, |k| k)?
        .iter()
        .map(|b| {
            let mut probs = Vec::with_capacity(b.k * b.k);
            for r in 0..b.k {
                let row: Vec<f64> = parse_row(b, r, b.k, "probability")?;
                for (c, &p) in row.iter().enumerate() {
                    if r != c && !(0.0..=1.0).contains(&p) {
                        return Err(Error::schema(
                            &b.id,
                            format!("score {p} at row {r}, column {c} is outside [0, 1]"),
                        ));
                    }
                }
                probs.extend(row);
            }
            Ok((b.id.clone(), PairwiseScores::new(b.k, probs)?))
        })
        .collect()
}

pub fn read_rankings<R: Read>(input: R) -> Result<Vec<(String, Ranking)>> {
    let text = read_text(input)?;
    read_blocks(&text, false, |_| 1)?
        .iter()
        .map(|b| {
            let ranks: Vec<usize> = parse_row(b, 0, b.k, "rank")?;
            let ranking = Ranking::new(ranks).map_err(|e| Error::schema(&b.id, e.to_string()))?;
            Ok((b.id.clone(), ranking))
        })
        .collect()
}

pub fn read_utilities<R: Read>(input: R) -> Result<Vec<(String, Vec<f64>)>> {
    let text = read_text(input)?;
    read_blocks(&text, false, |_| 1)?
        .iter()
        .map(|b| Ok((b.id.clone(), parse_row(b, 0, b.k, "utility")?)))
        .collect()
}

pub fn read_embeddings<R: Read>(input: R) -> Result<Vec<(String, EmbeddingSet)>> {
    let text = read_text(input)?;
    read_blocks(&text, true, |k| k)?
        .iter()
        .map(|b| {
            let d = b.d.expect("embedding headers carry d");
            let rows = (0..b.k)
                .map(|r| parse_row(b, r, d, "embedding value"))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            let set = EmbeddingSet::new(&rows).map_err(|e| Error::schema(&b.id, e.to_string()))?;
            Ok((b.id.clone(), set))
        })
        .collect()
}

fn write_row<W: Write, T: Display>(
    out: &mut W,
    row: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            out.write_all(b" ")?;
        }
        write!(out, "{v}")?;
        first = false;
    }
    writeln!(out)
}

pub fn write_pairwise<'a, W: Write>(
    mut out: W,
    queries: impl IntoIterator<Item = (&'a str, &'a PairwiseScores)>,
) -> io::Result<()> {
    for (id, p) in queries {
        writeln!(out, "query {id} k {}", p.k())?;
        for i in 0..p.k() {
            write_row(
                &mut out,
                (0..p.k()).map(|j| if i == j { 0.0 } else { p.get(i, j) }),
            )?;
        }
    }
    Ok(())
}

pub fn write_rankings<'a, W: Write>(
    mut out: W,
    queries: impl IntoIterator<Item = (&'a str, &'a Ranking)>,
) -> io::Result<()> {
    for (id, r) in queries {
        writeln!(out, "query {id} k {}", r.len())?;
        write_row(&mut out, r.ranks())?;
    }
    Ok(())
}

pub fn write_utilities<'a, W: Write>(
    mut out: W,
    queries: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> io::Result<()> {
    for (id, u) in queries {
        writeln!(out, "query {id} k {}", u.len())?;
        write_row(&mut out, u)?;
    }
    Ok(())
}

pub fn write_embeddings<'a, W: Write>(
    mut out: W,
    queries: impl IntoIterator<Item = (&'a str, &'a EmbeddingSet)>,
) -> io::Result<()> {
    for (id, e) in queries {
        writeln!(out, "query {id} k {} d {}", e.len(), e.dim())?;
        for j in 0..e.len() {
            write_row(&mut out, e.vector(j))?;
        }
    }
    Ok(())
}

/// File locations of a dataset written by [`write_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub scores: PathBuf,
    pub rankings: PathBuf,
    pub embeddings: Option<PathBuf>,
}

impl DatasetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            scores: dir.join("scores.txt"),
            rankings: dir.join("rankings.txt"),
            embeddings: Some(dir.join("embeddings.txt")),
        }
    }
}

/// Writes scores, rankings and (when every query has them) embeddings.
pub fn write_dataset(dir: &Path, queries: &[LabeledQuery]) -> Result<DatasetPaths> {
    std::fs::create_dir_all(dir)?;
    let mut paths = DatasetPaths::in_dir(dir);
    write_pairwise(
        BufWriter::new(File::create(&paths.scores)?),
        queries.iter().map(|q| (q.query_id.as_str(), &q.scores)),
    )?;
    write_rankings(
        BufWriter::new(File::create(&paths.rankings)?),
        queries.iter().map(|q| (q.query_id.as_str(), &q.ranking)),
    )?;
    let embeddings: Option<Vec<_>> = queries
        .iter()
        .map(|q| q.embeddings.as_ref().map(|e| (q.query_id.as_str(), e)))
        .collect();
    match embeddings {
        Some(e) if !queries.is_empty() => {
            let path = paths.embeddings.as_ref().expect("set by in_dir");
            write_embeddings(BufWriter::new(File::create(path)?), e)?;
        }
        _ => paths.embeddings = None,
    }
    Ok(paths)
}

/// Joins per-query inputs by query id, in the order of `scores`.
pub fn join_queries(
    scores: Vec<(String, PairwiseScores)>,
    rankings: Vec<(String, Ranking)>,
    embeddings: Option<Vec<(String, EmbeddingSet)>>,
) -> Result<Vec<LabeledQuery>> {
    let mut rankings: HashMap<String, Ranking> = rankings.into_iter().collect();
    let mut embeddings: Option<HashMap<String, EmbeddingSet>> =
        embeddings.map(|e| e.into_iter().collect());
    scores
        .into_iter()
        .map(|(id, s)| {
            let ranking = rankings
                .remove(&id)
                .ok_or_else(|| Error::schema(&id, "no ranking for this query"))?;
            let emb = match embeddings.as_mut() {
                Some(map) => Some(
                    map.remove(&id)
                        .ok_or_else(|| Error::schema(&id, "no embeddings for this query"))?,
                ),
                None => None,
            };
            LabeledQuery::new(id, s, ranking, emb, None)
        })
        .collect()
}

/// Reads and joins a dataset from disk.
pub fn read_dataset(paths: &DatasetPaths) -> Result<Vec<LabeledQuery>> {
    let scores = read_pairwise(File::open(&paths.scores)?)?;
    let rankings = read_rankings(File::open(&paths.rankings)?)?;
    let embeddings = match &paths.embeddings {
        Some(p) => Some(read_embeddings(File::open(p)?)?),
        None => None,
    };
    join_queries(scores, rankings, embeddings)
}

/// One line of a prediction report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub query_id: String,
    /// Zero-based item indices, space separated on disk.
    pub items: Vec<usize>,
    pub size: usize,
    pub fdp: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct PredictionRecord {
    query_id: String,
    items: String,
    size: usize,
    fdp: Option<f64>,
}

/// CSV with columns `query_id,items,size,fdp`; `fdp` is empty for unlabeled queries.
pub fn write_predictions<W: Write>(out: W, rows: &[PredictionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let items: Vec<String> = row.items.iter().map(usize::to_string).collect();
        w.serialize(PredictionRecord {
            query_id: row.query_id.clone(),
            items: items.join(" "),
            size: row.size,
            fdp: row.fdp,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<R: Read>(input: R) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .enumerate()
        .map(|(i, rec)| {
            let rec: PredictionRecord = rec.map_err(csv_error)?;
            let items = rec
                .items
                .split_whitespace()
                .map(|t| parse_num(t, i + 2, "item index"))
                .collect::<Result<Vec<usize>>>()?;
            Ok(PredictionRow {
                query_id: rec.query_id,
                items,
                size: rec.size,
                fdp: rec.fdp,
            })
        })
        .collect()
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(line, format!("{other:?}")),
    }
}
