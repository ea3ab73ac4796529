//! Top-N quality metrics: confusion counts, F1, DCG and NDCG.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RELEVANCE_THRESHOLD: f64 = 3.0;

/// `rating >= threshold`.
pub fn relevance(rating: f64, threshold: f64) -> bool {
    rating >= threshold
}

/// True overall ratings for one user's candidate universe. Items in the
/// universe without a rating are never relevant and carry zero gain.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    threshold: f64,
    ratings: HashMap<String, Option<f64>>,
}

impl GroundTruth {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            ratings: HashMap::new(),
        }
    }

    pub fn from_ratings<S: Into<String>>(
        threshold: f64,
        ratings: impl IntoIterator<Item = (S, f64)>,
    ) -> Self {
        let mut t = Self::new(threshold);
        for (item, r) in ratings {
            t.insert_rated(item, r);
        }
        t
    }

    pub fn insert_rated(&mut self, item: impl Into<String>, rating: f64) {
        self.ratings.insert(item.into(), Some(rating));
    }

    pub fn insert_unrated(&mut self, item: impl Into<String>) {
        self.ratings.entry(item.into()).or_insert(None);
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn rating(&self, item: &str) -> Result<Option<f64>> {
        self.ratings
            .get(item)
            .copied()
            .ok_or_else(|| Error::Evaluation(format!("item {item} has no ground truth")))
    }

    pub fn is_relevant(&self, item: &str) -> Result<bool> {
        Ok(self
            .rating(item)?
            .is_some_and(|r| relevance(r, self.threshold)))
    }

    pub fn relevant_count(&self) -> usize {
        self.ratings
            .values()
            .filter(|r| r.is_some_and(|r| relevance(r, self.threshold)))
            .count()
    }

    fn items(&self) -> impl Iterator<Item = &str> + '_ {
        self.ratings.keys().map(String::as_str)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub r#fn: usize,
}

impl ConfusionCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.r#fn)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion<S: AsRef<str>>(recommended: &[S], truth: &GroundTruth) -> Result<ConfusionCounts> {
    let mut tp = 0;
    for item in recommended {
        if truth.is_relevant(item.as_ref())? {
            tp += 1;
        }
    }
    Ok(ConfusionCounts {
        tp,
        fp: recommended.len() - tp,
        r#fn: truth.relevant_count() - tp,
    })
}

/// Harmonic mean of precision and recall; 0 when either is undefined or both are 0.
pub fn f1(counts: &ConfusionCounts) -> f64 {
    let p = counts.precision();
    let r = counts.recall();
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discount {
    /// `max(1, log2 j)` for 1-based position `j`; positions 1 and 2 are undiscounted.
    #[default]
    MaxOneLog2,
    /// The common `log2(j + 1)`.
    Log2PlusOne,
}

impl Discount {
    fn at(self, position: usize) -> f64 {
        let j = position as f64;
        match self {
            Discount::MaxOneLog2 => j.log2().max(1.0),
            Discount::Log2PlusOne => (j + 1.0).log2(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Relevance is the true rating: gain `2^rating - 1`.
    #[default]
    Rating,
    /// Relevance is the binary judgment: gain 1 for relevant items.
    Binary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdealScope {
    /// Ideal DCG reorders the evaluated list's own items.
    #[default]
    ListItems,
    /// Ideal DCG takes the best items of the whole truth universe, cut to the list length.
    AllCandidates,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub discount: Discount,
    pub gain: GainMode,
    pub ideal: IdealScope,
}

fn gain_of(truth: &GroundTruth, item: &str, mode: GainMode) -> Result<f64> {
    let rel = match mode {
        GainMode::Rating => truth.rating(item)?.unwrap_or(0.0),
        GainMode::Binary => f64::from(u8::from(truth.is_relevant(item)?)),
    };
    Ok(rel.exp2() - 1.0)
}

fn discounted(gains: &[f64], discount: Discount) -> f64 {
    gains
        .iter()
        .enumerate()
        .map(|(i, g)| g / discount.at(i + 1))
        .sum()
}

fn gains<S: AsRef<str>>(ranked: &[S], truth: &GroundTruth, mode: GainMode) -> Result<Vec<f64>> {
    if ranked.is_empty() {
        return Err(Error::Evaluation("cannot score an empty list".into()));
    }
    ranked
        .iter()
        .map(|i| gain_of(truth, i.as_ref(), mode))
        .collect()
}

pub fn dcg<S: AsRef<str>>(ranked: &[S], truth: &GroundTruth) -> Result<f64> {
    dcg_with(ranked, truth, &MetricsConfig::default())
}

/// Per-user DCG of `ranked` in list order.
pub fn dcg_with<S: AsRef<str>>(
    ranked: &[S],
    truth: &GroundTruth,
    cfg: &MetricsConfig,
) -> Result<f64> {
    Ok(discounted(&gains(ranked, truth, cfg.gain)?, cfg.discount))
}

pub fn ndcg<S: AsRef<str>>(ranked: &[S], truth: &GroundTruth) -> Result<f64> {
    ndcg_with(ranked, truth, &MetricsConfig::default())
}

/// DCG over ideal DCG; 1 when the ideal DCG is 0.
pub fn ndcg_with<S: AsRef<str>>(
    ranked: &[S],
    truth: &GroundTruth,
    cfg: &MetricsConfig,
) -> Result<f64> {
    let actual = gains(ranked, truth, cfg.gain)?;
    let mut ideal = match cfg.ideal {
        IdealScope::ListItems => actual.clone(),
        IdealScope::AllCandidates => truth
            .items()
            .map(|i| gain_of(truth, i, cfg.gain))
            .collect::<Result<Vec<_>>>()?,
    };
    ideal.sort_by(|a, b| b.total_cmp(a));
    ideal.truncate(actual.len());
    let ideal_dcg = discounted(&ideal, cfg.discount);
    if ideal_dcg == 0.0 {
        return Ok(1.0);
    }
    Ok(discounted(&actual, cfg.discount) / ideal_dcg)
}
