use crate::error::{Error, Result};
use crate::ranking::{PairwiseScores, Ranking};

/// Ranks items by descending relevance; equal labels keep index order.
pub fn ranking_from_relevance(labels: &[u32]) -> Result<Ranking> {
    Ranking::from_descending_keys(labels)
}

/// Same ordering rule for continuous labels such as latent utilities.
pub fn ranking_from_utilities(utilities: &[f64]) -> Result<Ranking> {
    if let Some(u) = utilities.iter().find(|u| !u.is_finite()) {
        return Err(Error::invalid(format!("utility {u} is not finite")));
    }
    Ranking::from_descending_keys(utilities)
}

/// Logistic preference link: `p(i, j) = 1 / (1 + exp(-(a_i - a_j) / T))`.
pub fn pairwise_from_utilities(utilities: &[f64], temperature: f64) -> Result<PairwiseScores> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if let Some(u) = utilities.iter().find(|u| !u.is_finite()) {
        return Err(Error::invalid(format!("utility {u} is not finite")));
    }
    let k = utilities.len();
    let mut probs = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let p = logistic((utilities[i] - utilities[j]) / temperature);
            probs[i * k + j] = p;
            // complement keeps each pair summing to one exactly where representable
            probs[j * k + i] = logistic((utilities[j] - utilities[i]) / temperature);
        }
    }
    PairwiseScores::new(k, probs)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
