//! Synthetic ranking data with a known ground truth.
//!
//! Each query draws latent utilities, derives the true ranking from them,
//! and hands the model a noisy copy through the logistic pairwise link.
//! Query `i` uses its own ChaCha stream of the spec seed, so any subset of
//! queries can be regenerated independently and in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity::EmbeddingSet;
use crate::error::{Error, Result};
use crate::ranking::LabeledQuery;

use super::labels::{pairwise_from_utilities, ranking_from_utilities};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub queries: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Standard deviation of the latent utilities.
    pub utility_scale: f64,
    /// Standard deviation of the Gaussian noise added to the model's copy.
    pub noise: f64,
    /// Embedding dimension; 0 generates no embeddings.
    pub embedding_dim: usize,
    pub temperature: f64,
    /// Offset added to query indices, so disjoint id ranges of one seed can
    /// serve as independent samples.
    #[serde(default)]
    pub first_query: u64,
}

impl SyntheticSpec {
    pub fn new(seed: u64, queries: usize) -> Self {
        Self {
            seed,
            queries,
            k_min: 5,
            k_max: 15,
            utility_scale: 1.0,
            noise: 0.5,
            embedding_dim: 8,
            temperature: 1.0,
            first_query: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_min == 0 || self.k_max < self.k_min {
            return Err(Error::invalid(format!(
                "need 1 <= k_min <= k_max, got {}..={}",
                self.k_min, self.k_max
            )));
        }
        if !(self.utility_scale > 0.0 && self.utility_scale.is_finite()) {
            return Err(Error::invalid("utility scale must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise must be nonnegative"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("temperature must be positive"));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<LabeledQuery>> {
    spec.validate()?;
    (0..spec.queries as u64)
        .into_par_iter()
        .map(|i| generate_query(spec, spec.first_query + i))
        .collect()
}

/// Generates query number `index` of the stream defined by `spec.seed`.
pub fn generate_query(spec: &SyntheticSpec, index: u64) -> Result<LabeledQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let k = rng.random_range(spec.k_min..=spec.k_max);
    let utility =
        Normal::new(0.0, spec.utility_scale).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::invalid(e.to_string()))?;
    let latent: Vec<f64> = (0..k).map(|_| utility.sample(&mut rng)).collect();
    let observed: Vec<f64> = latent.iter().map(|u| u + noise.sample(&mut rng)).collect();
    let embeddings = if spec.embedding_dim > 0 {
        let vectors: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..spec.embedding_dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect()
            })
            .collect();
        Some(EmbeddingSet::new(&vectors)?)
    } else {
        None
    };
    LabeledQuery::new(
        format!("q{index}"),
        pairwise_from_utilities(&observed, spec.temperature)?,
        ranking_from_utilities(&latent)?,
        embeddings,
        None,
    )
}
