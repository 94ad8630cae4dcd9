//! Embedding diversity of a recommendation set and size-capped pruning.
//!
//! Diversity is the sum of Euclidean distances over unordered pairs of set
//! members divided by `max(M, |S|)`. Below the cap it grows with every added
//! item; above it only the average distance matters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::PredictionSet;

/// Largest input accepted by [`exhaustive_prune`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// One embedding vector per item, all of the same dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Structural(
                "embeddings need at least one item of dimension >= 1".into(),
            ));
        }
        let mut data = Vec::with_capacity(vectors.len() * dim);
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Structural(format!(
                    "embedding {j} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::Structural(format!(
                    "embedding {j} has non-finite entry {x}"
                )));
            }
            data.extend_from_slice(v);
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.vector(a)
            .iter()
            .zip(self.vector(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Full pairwise distance matrix, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let d = self.distance(a, b);
                out[a * n + b] = d;
                out[b * n + a] = d;
            }
        }
        out
    }

    pub fn to_vectors(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }
}

/// Which element the greedy loop drops at each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneRule {
    /// Drop the element whose removal leaves the most diverse remainder;
    /// ties remove the largest index, keeping the lexicographically smallest survivors.
    #[default]
    MostDiverseRemainder,
    /// Drop the element whose removal leaves the least diverse remainder;
    /// ties go to the last candidate scanned. Kept for comparison runs.
    LeastDiverseRemainder,
}

fn check_inputs(set: &PredictionSet, embeddings: &EmbeddingSet, m_cap: usize) -> Result<()> {
    if m_cap == 0 {
        return Err(Error::invalid("diversity cap M must be at least 1"));
    }
    set.check_bounds(embeddings.len())
}

pub fn diversity(set: &PredictionSet, embeddings: &EmbeddingSet, m_cap: usize) -> Result<f64> {
    check_inputs(set, embeddings, m_cap)?;
    let items = set.items();
    let mut total = 0.0;
    for (a, &i) in items.iter().enumerate() {
        for &j in &items[a + 1..] {
            total += embeddings.distance(i, j);
        }
    }
    Ok(total / m_cap.max(items.len()) as f64)
}

/// Greedily shrinks `set` to at most `m_cap` items.
pub fn greedy_prune(
    set: &PredictionSet,
    embeddings: &EmbeddingSet,
    m_cap: usize,
) -> Result<PredictionSet> {
    greedy_prune_with(set, embeddings, m_cap, PruneRule::default())
}

pub fn greedy_prune_with(
    set: &PredictionSet,
    embeddings: &EmbeddingSet,
    m_cap: usize,
    rule: PruneRule,
) -> Result<PredictionSet> {
    check_inputs(set, embeddings, m_cap)?;
    if set.len() <= m_cap {
        return Ok(set.clone());
    }
    let items = set.items();
    // distances among set members only
    let mut local = vec![0.0; items.len() * items.len()];
    for (a, &i) in items.iter().enumerate() {
        for (b, &j) in items.iter().enumerate().skip(a + 1) {
            let d = embeddings.distance(i, j);
            local[a * items.len() + b] = d;
            local[b * items.len() + a] = d;
        }
    }
    let kept = prune_indices(items.len(), &local, m_cap, rule);
    Ok(PredictionSet::from_unsorted(
        kept.into_iter().map(|a| items[a]).collect(),
    ))
}

/// Greedy loop over positions `0..len` with a cached row-major distance
/// matrix. Returns the surviving positions in ascending order.
///
/// `Diversity(S \ t)` is `(pairs(S) - sum_u d(t, u)) / max(M, |S| - 1)`, and
/// only the middle term depends on `t`, so the most diverse remainder comes
/// from the candidate with the smallest distance sum to the other members.
/// Sums are recomputed from the matrix every step (O(len) per candidate) so
/// that exact ties stay exact. Among (near-)tied candidates the largest
/// position is removed, which leaves the lexicographically smallest remainder
/// and so agrees with [`exhaustive_prune`] on single removals.
pub(crate) fn prune_indices(len: usize, dist: &[f64], m_cap: usize, rule: PruneRule) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..len).collect();
    let mut spread = Vec::with_capacity(len);
    while alive.len() > m_cap {
        spread.clear();
        spread.extend(
            alive
                .iter()
                .map(|&t| alive.iter().map(|&u| dist[t * len + u]).sum::<f64>()),
        );
        let chosen = match rule {
            PruneRule::MostDiverseRemainder => {
                let low = spread.iter().copied().fold(f64::INFINITY, f64::min);
                let tol = tie_tolerance(spread.iter().copied().fold(0.0, f64::max));
                spread.iter().rposition(|&c| c - low <= tol)
            }
            PruneRule::LeastDiverseRemainder => {
                let high = spread.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                spread.iter().rposition(|&c| c == high)
            }
        };
        alive.remove(chosen.expect("at least one candidate"));
    }
    alive
}

/// Values this close are treated as tied, so that the same mathematical tie
/// reached through different summation orders resolves the same way.
fn tie_tolerance(scale: f64) -> f64 {
    1e-12 * scale.abs()
}

/// Exact most-diverse subset of size `min(|set|, M)`; a test oracle.
///
/// Diversity never decreases as items are added up to the cap, so searching
/// subsets of exactly that size finds the maximum over all subsets of size
/// at most `M`. Ties, up to a relative `1e-12`, resolve to the
/// lexicographically smallest index list.
pub fn exhaustive_prune(
    set: &PredictionSet,
    embeddings: &EmbeddingSet,
    m_cap: usize,
) -> Result<PredictionSet> {
    check_inputs(set, embeddings, m_cap)?;
    if set.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::invalid(format!(
            "exhaustive search limited to {EXHAUSTIVE_LIMIT} items, got {}",
            set.len()
        )));
    }
    let items = set.items();
    let size = items.len().min(m_cap);
    let mut scored: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut combo: Vec<usize> = (0..size).collect();
    loop {
        let candidate = PredictionSet::from_unsorted(combo.iter().map(|&a| items[a]).collect());
        scored.push((diversity(&candidate, embeddings, m_cap)?, candidate.into()));
        if !next_combination(&mut combo, items.len()) {
            break;
        }
    }
    let high = scored.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tolerance(high);
    let best = scored
        .into_iter()
        .find(|(v, _)| high - v <= tol)
        .map(|(_, s)| s)
        .unwrap_or_default();
    Ok(PredictionSet::from_unsorted(best))
}

/// Advances to the next lexicographic `combo.len()`-subset of `0..n`.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let r = combo.len();
    let Some(i) = (0..r).rev().find(|&i| combo[i] < n - r + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..r {
        combo[j] = combo[j - 1] + 1;
    }
    true
}
