//! Domain types for one ranking query and the score-threshold set family.
//!
//! Item indices are zero-based throughout the crate. Ranks are one-based:
//! rank 1 is the most relevant item.

use serde::{Deserialize, Serialize};

use crate::diversity::EmbeddingSet;
use crate::error::{Error, Result};

/// Model preference probabilities for one query.
///
/// `get(i, j)` estimates the probability that item `i` is preferred to item
/// `j`. Diagonal entries are carried but never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseScores {
    k: usize,
    probs: Vec<f64>,
}

impl PairwiseScores {
    /// Builds from a row-major `k * k` buffer.
    pub fn new(k: usize, probs: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Structural("pairwise matrix needs k >= 1".into()));
        }
        if probs.len() != k * k {
            return Err(Error::Structural(format!(
                "pairwise matrix has {} entries, expected {k}x{k}",
                probs.len()
            )));
        }
        for i in 0..k {
            for j in 0..k {
                let p = probs[i * k + j];
                if i != j && !(0.0..=1.0).contains(&p) {
                    return Err(Error::Structural(format!(
                        "probability at ({i}, {j}) is {p}, outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { k, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
            return Err(Error::Structural(format!(
                "row {i} has {} columns, expected {k}",
                row.len()
            )));
        }
        Self::new(k, rows.concat())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    /// Rescales each pair so that `p(i, j) + p(j, i) = 1`.
    ///
    /// Pairs where both directions are zero become 0.5.
    pub fn symmetrized(&self) -> Self {
        let k = self.k;
        let mut probs = self.probs.clone();
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let (a, b) = (self.get(i, j), self.get(j, i));
                let total = a + b;
                probs[i * k + j] = if total > 0.0 { a / total } else { 0.5 };
            }
        }
        Self { k, probs }
    }

    /// True when every off-diagonal pair sums to one within `tol`.
    pub fn is_skew_consistent(&self, tol: f64) -> bool {
        (0..self.k)
            .all(|i| (i + 1..self.k).all(|j| (self.get(i, j) + self.get(j, i) - 1.0).abs() <= tol))
    }
}

/// True ranks of the items of one query; `rank(j)` is 1 for the best item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    ranks: Vec<usize>,
}

impl Ranking {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let k = ranks.len();
        if k == 0 {
            return Err(Error::Structural(
                "ranking must cover at least one item".into(),
            ));
        }
        let mut seen = vec![false; k];
        for (j, &r) in ranks.iter().enumerate() {
            if r == 0 || r > k || std::mem::replace(&mut seen[r - 1], true) {
                return Err(Error::Structural(format!(
                    "ranks are not a permutation of 1..={k} (item {j} has rank {r})"
                )));
            }
        }
        Ok(Self { ranks })
    }

    /// Ranks items by descending key; equal keys keep their input order.
    pub fn from_descending_keys<T: PartialOrd>(keys: &[T]) -> Result<Self> {
        let mut order: Vec<usize> = (0..keys.len()).collect();
        // stable sort keeps equal keys in index order
        order.sort_by(|&a, &b| {
            keys[b]
                .partial_cmp(&keys[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut ranks = vec![0; keys.len()];
        for (pos, &item) in order.iter().enumerate() {
            ranks[item] = pos + 1;
        }
        Self::new(ranks)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    #[inline]
    pub fn rank(&self, item: usize) -> usize {
        self.ranks[item]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// A recommendation set: strictly increasing item indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredictionSet {
    items: Vec<usize>,
}

impl PredictionSet {
    pub fn new(items: Vec<usize>) -> Result<Self> {
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "prediction set items must be strictly increasing",
            ));
        }
        Ok(Self { items })
    }

    /// Sorts and deduplicates arbitrary input.
    pub fn from_unsorted(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self { items }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    pub fn is_subset_of(&self, other: &PredictionSet) -> bool {
        self.items.iter().all(|&i| other.contains(i))
    }

    /// Errors if any index is not below `k`.
    pub fn check_bounds(&self, k: usize) -> Result<()> {
        match self.items.last() {
            Some(&last) if last >= k => Err(Error::invalid(format!(
                "item index {last} out of range for {k} items"
            ))),
            _ => Ok(()),
        }
    }
}

impl From<PredictionSet> for Vec<usize> {
    fn from(set: PredictionSet) -> Self {
        set.items
    }
}

/// One calibration or test query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub query_id: String,
    pub scores: PairwiseScores,
    pub ranking: Ranking,
    pub embeddings: Option<EmbeddingSet>,
    pub relevance: Option<Vec<u32>>,
}

impl LabeledQuery {
    pub fn new(
        query_id: impl Into<String>,
        scores: PairwiseScores,
        ranking: Ranking,
        embeddings: Option<EmbeddingSet>,
        relevance: Option<Vec<u32>>,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let k = scores.k();
        if ranking.len() != k {
            return Err(Error::schema(
                &query_id,
                format!("ranking has {} items, scores have {k}", ranking.len()),
            ));
        }
        if let Some(e) = &embeddings {
            if e.len() != k {
                return Err(Error::schema(
                    &query_id,
                    format!("{} embeddings for {k} items", e.len()),
                ));
            }
        }
        if let Some(r) = &relevance {
            if r.len() != k {
                return Err(Error::schema(
                    &query_id,
                    format!("{} relevance labels for {k} items", r.len()),
                ));
            }
        }
        Ok(Self {
            query_id,
            scores,
            ranking,
            embeddings,
            relevance,
        })
    }

    pub fn k(&self) -> usize {
        self.scores.k()
    }
}

/// Mean preference probability of each item over all others.
///
/// A single-item query scores 1.0 so its only item is always eligible.
pub fn item_scores(scores: &PairwiseScores) -> Vec<f64> {
    let k = scores.k();
    if k == 1 {
        return vec![1.0];
    }
    let denom = (k - 1) as f64;
    (0..k)
        .map(|i| {
            let row = scores.row(i);
            let total: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p)
                .sum();
            total / denom
        })
        .collect()
}

/// Items whose score reaches `lambda`.
pub fn threshold_set(scores: &[f64], lambda: f64) -> PredictionSet {
    PredictionSet {
        items: scores
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s >= lambda)
            .map(|(i, _)| i)
            .collect(),
    }
}
