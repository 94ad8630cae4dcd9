//! False discovery proportion, its empirical mean, and upper confidence bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{LabeledQuery, PredictionSet, Ranking};

/// How many top-ranked items count as good for a query with `k` items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// `max(1, ceil(f * k))`, with `f` in `(0, 1]`.
    Fraction(f64),
    /// `min(m, k)`, with `m >= 1`.
    Absolute(usize),
}

impl MRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MRule::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::invalid(format!("m fraction {f} outside (0, 1]")))
            }
            MRule::Absolute(0) => Err(Error::invalid("absolute m must be at least 1")),
            _ => Ok(()),
        }
    }
}

impl Default for MRule {
    fn default() -> Self {
        MRule::Fraction(0.2)
    }
}

pub fn derive_m(k: usize, rule: MRule) -> usize {
    match rule {
        MRule::Fraction(f) => {
            // guard against 0.2 * 10 landing a hair above 2
            let raw = f * k as f64;
            let m = (raw - 1e-9 * raw.max(1.0)).ceil() as usize;
            m.clamp(1, k.max(1))
        }
        MRule::Absolute(m) => m.min(k),
    }
}

/// Items ranked within the top `m`.
pub fn top_m_items(ranking: &Ranking, m: usize) -> Result<PredictionSet> {
    check_m(ranking, m)?;
    Ok(PredictionSet::from_unsorted(
        (0..ranking.len())
            .filter(|&j| ranking.rank(j) <= m)
            .collect(),
    ))
}

/// Fraction of `set` ranked below the top `m`; zero for the empty set.
pub fn fdp(set: &PredictionSet, ranking: &Ranking, m: usize) -> Result<f64> {
    check_m(ranking, m)?;
    set.check_bounds(ranking.len())?;
    Ok(fdp_unchecked(set.items(), ranking, m))
}

#[inline]
pub(crate) fn fdp_unchecked(items: &[usize], ranking: &Ranking, m: usize) -> f64 {
    let false_hits = items.iter().filter(|&&j| ranking.rank(j) > m).count();
    false_hits as f64 / items.len().max(1) as f64
}

fn check_m(ranking: &Ranking, m: usize) -> Result<()> {
    if m == 0 || m > ranking.len() {
        return Err(Error::invalid(format!(
            "m = {m} outside 1..={}",
            ranking.len()
        )));
    }
    Ok(())
}

/// Mean FDP of `family(query, lambda)` over `data`.
///
/// Per-query losses are evaluated in parallel and summed left to right, so
/// the result does not depend on the worker count.
pub fn empirical_fdr<F>(lambda: f64, data: &[LabeledQuery], rule: MRule, family: F) -> Result<f64>
where
    F: Fn(&LabeledQuery, f64) -> Result<PredictionSet> + Sync,
{
    if data.is_empty() {
        return Err(Error::invalid("empirical FDR needs at least one query"));
    }
    rule.validate()?;
    let losses = data
        .par_iter()
        .map(|q| {
            let set = family(q, lambda)?;
            fdp(&set, &q.ranking, derive_m(q.k(), rule))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&losses))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Hoeffding upper confidence bound for the mean of `n` losses in `[0, 1]`.
///
/// Not clamped to 1.
pub fn hoeffding_ucb(mean: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Hoeffding bound needs n >= 1"));
    }
    check_delta(delta)?;
    Ok(mean + ((1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} outside (0, 1)")));
    }
    Ok(())
}

/// A valid `(1 - delta)` upper confidence bound on the mean of i.i.d. losses
/// bounded in `[0, 1]`.
pub trait UpperConfidenceBound {
    fn upper_bound(&self, losses: &[f64], delta: f64) -> Result<f64>;
}

/// Registered bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    #[default]
    Hoeffding,
}

impl UpperConfidenceBound for BoundKind {
    fn upper_bound(&self, losses: &[f64], delta: f64) -> Result<f64> {
        match self {
            BoundKind::Hoeffding => {
                if losses.is_empty() {
                    return Err(Error::invalid("bound needs at least one loss"));
                }
                hoeffding_ucb(mean(losses), losses.len(), delta)
            }
        }
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hoeffding" => Ok(BoundKind::Hoeffding),
            other => Err(Error::invalid(format!("unknown bound '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::PairwiseScores;

    fn ranking(r: &[usize]) -> Ranking {
        Ranking::new(r.to_vec()).unwrap()
    }

    fn set(items: &[usize]) -> PredictionSet {
        PredictionSet::new(items.to_vec()).unwrap()
    }

    #[test]
    fn m_rules() {
        assert_eq!(derive_m(10, MRule::Fraction(0.2)), 2);
        assert_eq!(derive_m(7, MRule::Fraction(0.2)), 2);
        assert_eq!(derive_m(3, MRule::Absolute(5)), 3);
        assert_eq!(derive_m(1, MRule::Fraction(0.01)), 1);
        assert_eq!(derive_m(5, MRule::Fraction(1.0)), 5);
        assert_eq!(derive_m(15, MRule::Fraction(0.2)), 3);
        assert!(MRule::Fraction(0.0).validate().is_err());
        assert!(MRule::Fraction(1.5).validate().is_err());
        assert!(MRule::Absolute(0).validate().is_err());
    }

    #[test]
    fn top_m() {
        assert_eq!(
            top_m_items(&ranking(&[2, 1, 3, 4]), 2).unwrap().items(),
            &[0, 1]
        );
        assert_eq!(
            top_m_items(&ranking(&[1, 2, 3]), 3).unwrap().items(),
            &[0, 1, 2]
        );
        assert_eq!(top_m_items(&ranking(&[3, 1, 2]), 1).unwrap().items(), &[1]);
        assert!(top_m_items(&ranking(&[1, 2]), 0).is_err());
        assert!(top_m_items(&ranking(&[1, 2]), 3).is_err());
    }

    #[test]
    fn fdp_examples() {
        let y = ranking(&[2, 1, 3, 4]);
        assert_eq!(fdp(&set(&[0, 2]), &y, 2).unwrap(), 0.5);
        assert_eq!(fdp(&PredictionSet::empty(), &y, 1).unwrap(), 0.0);
        assert_eq!(fdp(&set(&[0, 1]), &ranking(&[1, 2, 3]), 2).unwrap(), 0.0);
        assert!(fdp(&set(&[4]), &y, 2).is_err());
    }

    fn query(ranks: &[usize]) -> LabeledQuery {
        let k = ranks.len();
        LabeledQuery::new(
            "q",
            PairwiseScores::new(k, vec![0.5; k * k]).unwrap(),
            ranking(ranks),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn empirical_mean_of_fdps() {
        // query 1: {0, 2} against ranks (2,1,3,4) with m = 2 -> 0.5; query 2: {0} -> 0
        let data = vec![query(&[2, 1, 3, 4]), query(&[1, 2, 3, 4])];
        let fam = |q: &LabeledQuery, _lambda: f64| -> Result<PredictionSet> {
            Ok(if q.ranking.rank(0) == 2 {
                set(&[0, 2])
            } else {
                set(&[0])
            })
        };
        let v = empirical_fdr(0.5, &data, MRule::Absolute(2), fam).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(empirical_fdr(0.5, &[], MRule::Absolute(2), fam).is_err());
    }

    #[test]
    fn empirical_three_queries() {
        // FDPs 1/3, 1/2 and 0 with m = 2
        let data = vec![query(&[1, 2, 3]), query(&[1, 4, 2, 3]), query(&[1, 2])];
        let fam = |q: &LabeledQuery, _: f64| -> Result<PredictionSet> {
            Ok(match q.k() {
                3 => set(&[0, 1, 2]),
                4 => set(&[0, 1]),
                _ => set(&[0, 1]),
            })
        };
        let v = empirical_fdr(0.3, &data, MRule::Absolute(2), fam).unwrap();
        assert!((v - 0.277_777_777_777_777_8).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_examples() {
        let v = hoeffding_ucb(0.25, 2000, 0.1).unwrap();
        // 0.25 + sqrt(ln 10 / 4000), evaluated at 30 digits
        assert!((v - 0.273_992_629_560_940_4).abs() < 1e-12, "{v}");
        let v = hoeffding_ucb(0.3, 1, (-2.0f64).exp()).unwrap();
        assert!((v - 1.3).abs() < 1e-12);
        let slacks: Vec<f64> = [100, 10_000, 1_000_000]
            .iter()
            .map(|&n| hoeffding_ucb(0.0, n, 0.1).unwrap())
            .collect();
        assert!(slacks[0] > slacks[1] && slacks[1] > slacks[2] && slacks[2] > 0.0);
        assert!(slacks[2] < 0.002);
    }

    #[test]
    fn hoeffding_errors() {
        assert!(hoeffding_ucb(0.1, 0, 0.1).is_err());
        assert!(hoeffding_ucb(0.1, 10, 0.0).is_err());
        assert!(hoeffding_ucb(0.1, 10, 1.0).is_err());
        assert!(BoundKind::Hoeffding.upper_bound(&[], 0.1).is_err());
    }

    #[test]
    fn bound_kind_matches_formula() {
        let losses = [0.0, 0.5, 1.0, 0.25];
        let got = BoundKind::Hoeffding.upper_bound(&losses, 0.05).unwrap();
        let want = hoeffding_ucb(0.4375, 4, 0.05).unwrap();
        assert_eq!(got, want);
    }
}
