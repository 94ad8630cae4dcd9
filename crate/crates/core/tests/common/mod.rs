//! Brute-force reference implementations shared by the integration tests.
//!
//! These deliberately avoid the library's fast paths: no prefix counts, no
//! cached distance sums, nothing but the defining formulas.

#![allow(dead_code)]

use rand::Rng;
use rankset::{LabeledQuery, PairwiseScores, Ranking};

/// Mean off-diagonal preference per row, by explicit double loop.
#[allow(clippy::needless_range_loop)]
pub fn oracle_item_scores(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows.len();
    if k == 1 {
        return vec![1.0];
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut total = 0.0;
        for j in 0..k {
            if j != i {
                total += rows[i][j];
            }
        }
        out.push(total / (k as f64 - 1.0));
    }
    out
}

/// FDP by materializing the list of items ranked outside the top `m`.
pub fn oracle_fdp(items: &[usize], ranks: &[usize], m: usize) -> f64 {
    let outside: Vec<usize> = (0..ranks.len()).filter(|&j| ranks[j] > m).collect();
    let hits = items.iter().filter(|i| outside.contains(i)).count();
    hits as f64 / std::cmp::max(items.len(), 1) as f64
}

/// `max(1, ceil(f k))` computed with exact integer arithmetic on percentages.
pub fn oracle_m_fraction(k: usize, percent: usize) -> usize {
    std::cmp::max(1, (percent * k).div_ceil(100)).min(k)
}

pub fn random_rows<R: Rng>(rng: &mut R, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        rng.random::<f64>() * 5.0
                    } else {
                        rng.random()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn random_ranks<R: Rng>(rng: &mut R, k: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut r: Vec<usize> = (1..=k).collect();
    r.shuffle(rng);
    r
}

pub fn random_query<R: Rng>(rng: &mut R, k: usize, id: usize) -> LabeledQuery {
    let rows = random_rows(rng, k);
    LabeledQuery::new(
        format!("r{id}"),
        PairwiseScores::from_rows(&rows).unwrap(),
        Ranking::new(random_ranks(rng, k)).unwrap(),
        None,
        None,
    )
    .unwrap()
}

/// Sum of pairwise Euclidean distances over `max(m, |set|)`, from raw vectors.
pub fn oracle_diversity(set: &[usize], vectors: &[Vec<f64>], m: usize) -> f64 {
    let mut total = 0.0;
    for a in 0..set.len() {
        for b in a + 1..set.len() {
            let d: f64 = vectors[set[a]]
                .iter()
                .zip(&vectors[set[b]])
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            total += d.sqrt();
        }
    }
    total / std::cmp::max(m, set.len()) as f64
}

/// Hoeffding bound written out independently of the library.
pub fn oracle_ucb(losses: &[f64], delta: f64) -> f64 {
    let n = losses.len() as f64;
    losses.iter().sum::<f64>() / n + ((1.0 / delta).ln() / (2.0 * n)).sqrt()
}

/// Fixed-sequence selection from UCBs evaluated at every grid point.
///
/// Returns `(lambda_hat, index of the first non-rejection)`.
pub fn oracle_select(grid: &[f64], ucbs: &[f64], alpha: f64) -> (f64, Option<usize>) {
    match ucbs.iter().position(|&u| u >= alpha) {
        Some(0) => (1.0, Some(0)),
        Some(i) => (grid[i - 1], Some(i)),
        None => (*grid.last().unwrap(), None),
    }
}
