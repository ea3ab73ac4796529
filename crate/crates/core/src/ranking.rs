//! Scoring a candidate set: dominance counts (PR, KD), preference orderings
//! (AR, MR, GD, PG), subsort normalization and hybrid composition.

use crate::dominance::{counts_unchecked, Relaxation};
use crate::error::{Error, Result};
use crate::types::{CandidateSet, MajorMethod, MethodSpec, ScoredList, SubMethod};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Raw per-candidate scores, aligned with the candidate order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub orientation: Orientation,
}

impl ScoreVector {
    fn higher(scores: Vec<f64>) -> Self {
        Self {
            scores,
            orientation: Orientation::HigherBetter,
        }
    }

    fn lower(scores: Vec<f64>) -> Self {
        Self {
            scores,
            orientation: Orientation::LowerBetter,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// 1-based positions, one per candidate; tied values share the average of the
/// positions they span.
#[derive(Clone, Debug, PartialEq)]
pub struct RankVector(pub Vec<f64>);

/// Knobs that alter method semantics. The defaults are the exact definitions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RankingOptions {
    /// Criteria closer than this count as equal in dominance checks.
    pub equality_tolerance: f64,
}

/// Average (fractional) positions, best first under `orientation`.
pub fn fractional_positions(values: &[f64], orientation: Orientation) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    match orientation {
        Orientation::HigherBetter => order.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
        Orientation::LowerBetter => order.sort_by(|&a, &b| values[a].total_cmp(&values[b])),
    }
    let mut positions = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < n && values[order[end]] == v {
            end += 1;
        }
        // 1-based positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            positions[i] = avg;
        }
        start = end;
    }
    positions
}

fn dominated_counts(
    c: &CandidateSet,
    tolerance: f64,
    dominates: impl Fn(&crate::dominance::DominanceCounts) -> bool,
) -> Vec<f64> {
    let n = c.len();
    let mut scores = vec![0u32; n];
    for i in 0..n {
        let a = c.vector(i);
        for j in i + 1..n {
            let ab = counts_unchecked(a, c.vector(j), tolerance);
            if dominates(&ab) {
                scores[i] += 1;
            }
            if dominates(&ab.reversed()) {
                scores[j] += 1;
            }
        }
    }
    scores.into_iter().map(f64::from).collect()
}

/// Number of other candidates each candidate Pareto-dominates.
pub fn pr_scores(c: &CandidateSet) -> ScoreVector {
    pr_scores_with(c, &RankingOptions::default())
}

pub fn pr_scores_with(c: &CandidateSet, opts: &RankingOptions) -> ScoreVector {
    ScoreVector::higher(dominated_counts(c, opts.equality_tolerance, |d| {
        d.is_pareto()
    }))
}

/// Number of other candidates each candidate k-dominates. Mutual k-dominance
/// counts for both items.
pub fn kd_scores(c: &CandidateSet, k: f64) -> Result<ScoreVector> {
    Ok(kd_scores_with(
        c,
        Relaxation::new(k)?,
        &RankingOptions::default(),
    ))
}

pub fn kd_scores_with(
    c: &CandidateSet,
    relaxation: Relaxation,
    opts: &RankingOptions,
) -> ScoreVector {
    ScoreVector::higher(dominated_counts(c, opts.equality_tolerance, |d| {
        d.is_k_dominant(relaxation)
    }))
}

/// Positions on criterion `m`, higher rating first.
pub fn per_criterion_ranks(c: &CandidateSet, m: usize) -> Result<RankVector> {
    if m >= c.criteria_count() {
        return Err(Error::CriterionIndex {
            index: m,
            criteria: c.criteria_count(),
        });
    }
    let column: Vec<f64> = c.column(m).collect();
    Ok(RankVector(fractional_positions(
        &column,
        Orientation::HigherBetter,
    )))
}

fn all_criterion_ranks(c: &CandidateSet) -> Vec<RankVector> {
    (0..c.criteria_count())
        .map(|m| per_criterion_ranks(c, m).expect("index in range"))
        .collect()
}

/// Sum of per-criterion positions. Lower is better.
pub fn ar_scores(c: &CandidateSet) -> ScoreVector {
    let mut scores = vec![0.0; c.len()];
    for ranks in all_criterion_ranks(c) {
        for (s, r) in scores.iter_mut().zip(ranks.0) {
            *s += r;
        }
    }
    ScoreVector::lower(scores)
}

/// Best (smallest) per-criterion position. Lower is better.
pub fn mr_scores(c: &CandidateSet) -> ScoreVector {
    let mut scores = vec![f64::INFINITY; c.len()];
    for ranks in all_criterion_ranks(c) {
        for (s, r) in scores.iter_mut().zip(ranks.0) {
            *s = s.min(r);
        }
    }
    ScoreVector::lower(scores)
}

#[inline]
fn gain_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).max(0.0)).sum()
}

/// Sum of the positive per-criterion margins of `a` over `b`.
pub fn gain(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(gain_unchecked(a, b))
}

/// Accumulated gain of each candidate over every other one. Higher is better.
pub fn gd_scores(c: &CandidateSet) -> ScoreVector {
    let n = c.len();
    let scores = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .fold(0.0, |acc, j| acc + gain_unchecked(c.vector(i), c.vector(j)))
        })
        .collect();
    ScoreVector::higher(scores)
}

/// Best gain over any other candidate minus the best gain any other candidate
/// has over it. Higher is better; a lone candidate scores 0.
pub fn pg_scores(c: &CandidateSet) -> ScoreVector {
    let n = c.len();
    if n < 2 {
        return ScoreVector::higher(vec![0.0; n]);
    }
    let mut best_out = vec![f64::NEG_INFINITY; n];
    let mut best_in = vec![f64::NEG_INFINITY; n];
    for i in 0..n {
        for j in i + 1..n {
            let ij = gain_unchecked(c.vector(i), c.vector(j));
            let ji = gain_unchecked(c.vector(j), c.vector(i));
            best_out[i] = best_out[i].max(ij);
            best_in[j] = best_in[j].max(ij);
            best_out[j] = best_out[j].max(ji);
            best_in[i] = best_in[i].max(ji);
        }
    }
    ScoreVector::higher(best_out.iter().zip(&best_in).map(|(o, i)| o - i).collect())
}

/// Maps scores to `(n - position) / n`, which lies in `[0, 1)` and is higher
/// for better candidates whatever the input orientation.
pub fn normalize_sub(s: &ScoreVector) -> Vec<f64> {
    let n = s.len() as f64;
    fractional_positions(&s.scores, s.orientation)
        .into_iter()
        .map(|rho| (n - rho) / n)
        .collect()
}

pub fn sub_scores(c: &CandidateSet, sub: SubMethod) -> ScoreVector {
    match sub {
        SubMethod::Ar => ar_scores(c),
        SubMethod::Mr => mr_scores(c),
        SubMethod::Gd => gd_scores(c),
        SubMethod::Pg => pg_scores(c),
    }
}

pub fn major_scores(c: &CandidateSet, major: MajorMethod, opts: &RankingOptions) -> ScoreVector {
    match major {
        MajorMethod::Pr => pr_scores_with(c, opts),
        MajorMethod::Kd(r) => kd_scores_with(c, r, opts),
    }
}

/// Major integer score plus the normalized subsort score.
pub fn hybrid_scores(c: &CandidateSet, major: MethodSpec, sub: MethodSpec) -> Result<ScoreVector> {
    match MethodSpec::hybrid(major, sub)? {
        MethodSpec::Hybrid { major, sub } => Ok(hybrid_scores_with(
            c,
            major,
            sub,
            &RankingOptions::default(),
        )),
        _ => unreachable!("hybrid constructor returns a hybrid"),
    }
}

pub fn hybrid_scores_with(
    c: &CandidateSet,
    major: MajorMethod,
    sub: SubMethod,
    opts: &RankingOptions,
) -> ScoreVector {
    let mut scores = major_scores(c, major, opts).scores;
    for (s, x) in scores.iter_mut().zip(normalize_sub(&sub_scores(c, sub))) {
        *s += x;
    }
    ScoreVector::higher(scores)
}

pub fn method_scores(c: &CandidateSet, spec: MethodSpec, opts: &RankingOptions) -> ScoreVector {
    match spec {
        MethodSpec::Pr => pr_scores_with(c, opts),
        MethodSpec::Kd(r) => kd_scores_with(c, r, opts),
        MethodSpec::Ar => ar_scores(c),
        MethodSpec::Mr => mr_scores(c),
        MethodSpec::Gd => gd_scores(c),
        MethodSpec::Pg => pg_scores(c),
        MethodSpec::Hybrid { major, sub } => hybrid_scores_with(c, major, sub, opts),
    }
}

/// Scores the candidates and sorts them best first. Lower-is-better scores are
/// negated so the list always descends.
pub fn rank_candidates(c: &CandidateSet, spec: MethodSpec) -> ScoredList {
    rank_candidates_with(c, spec, &RankingOptions::default())
}

pub fn rank_candidates_with(
    c: &CandidateSet,
    spec: MethodSpec,
    opts: &RankingOptions,
) -> ScoredList {
    let sv = method_scores(c, spec, opts);
    let sign = match sv.orientation {
        Orientation::HigherBetter => 1.0,
        Orientation::LowerBetter => -1.0,
    };
    ScoredList::new(
        c.item_ids()
            .iter()
            .zip(sv.scores)
            .map(|(id, s)| (id.as_str(), sign * s)),
    )
}

/// The first `min(n, len)` entries.
pub fn top_n(list: &ScoredList, n: usize) -> ScoredList {
    list.truncated(n)
}
