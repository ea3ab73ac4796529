//! Experiment orchestration: k-fold splits, per-user candidate sets, method
//! sweeps over top-N lengths, improvement ratios and synthetic data.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{self, GroundTruth, MetricsConfig, DEFAULT_RELEVANCE_THRESHOLD};
use crate::predictor::{self, PredictorModel, TrainConfig};
use crate::ranking::{rank_candidates_with, top_n, RankingOptions};
use crate::types::{CandidateSet, Dataset, MethodSpec, RatingRecord};

pub const DEFAULT_N_VALUES: [usize; 8] = [5, 10, 15, 20, 25, 30, 35, 40];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateProtocol {
    /// Rank the items each user rated in the test fold.
    #[default]
    TestItems,
    /// Rank every known item the user did not rate in training.
    AllUnrated,
}

impl fmt::Display for CandidateProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateProtocol::TestItems => "test_items",
            CandidateProtocol::AllUnrated => "all_unrated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ratings CSV; the CLI's `--input` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub folds: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    pub n_values: Vec<usize>,
    pub threshold: f64,
    pub protocol: CandidateProtocol,
    /// `train.seed` is mixed with `seed` and the fold index for each fold's model.
    pub train: TrainConfig,
    pub metrics: MetricsConfig,
    pub equality_tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            folds: 5,
            seed: 0,
            methods: vec![MethodSpec::Pr],
            n_values: DEFAULT_N_VALUES.to_vec(),
            threshold: DEFAULT_RELEVANCE_THRESHOLD,
            protocol: CandidateProtocol::TestItems,
            train: TrainConfig::default(),
            metrics: MetricsConfig::default(),
            equality_tolerance: 0.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!(
                "fold count {} must be at least 2",
                self.folds
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::Config(
                "N values must be non-empty and positive".into(),
            ));
        }
        if self.n_values.iter().collect::<HashSet<_>>().len() != self.n_values.len() {
            return Err(Error::Config("N values must be distinct".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("relevance threshold must be finite".into()));
        }
        if !(self.equality_tolerance >= 0.0 && self.equality_tolerance.is_finite()) {
            return Err(Error::Config(
                "equality tolerance must be finite and >= 0".into(),
            ));
        }
        self.train.validate()
    }

    /// Hex SHA-256 of the config's JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn ranking_options(&self) -> RankingOptions {
        RankingOptions {
            equality_tolerance: self.equality_tolerance,
        }
    }

    fn fold_train_config(&self, fold: usize) -> TrainConfig {
        let mixed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(fold as u64)
            ^ self.train.seed;
        TrainConfig {
            seed: mixed,
            ..self.train.clone()
        }
    }
}

/// Seeded, balanced random partition of the records into `folds` test sets;
/// each fold's train set is everything else. Records keep their original order.
pub fn kfold_split(d: &Dataset, folds: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    if folds < 2 || d.len() < folds {
        return Err(Error::Split {
            records: d.len(),
            folds,
        });
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; d.len()];
    for (pos, &rec) in order.iter().enumerate() {
        assignment[rec] = pos % folds;
    }
    Ok((0..folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..d.len()).partition(|&i| assignment[i] == f);
            (d.subset(&train), d.subset(&test))
        })
        .collect())
}

/// One user's ranking problem with its ground truth.
#[derive(Clone, Debug)]
pub struct Episode {
    pub candidates: CandidateSet,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug)]
pub struct CandidateBatch {
    /// Sorted by user id.
    pub episodes: Vec<Episode>,
    /// Users seen in training with nothing to evaluate, sorted.
    pub skipped_users: Vec<String>,
}

pub fn build_candidates(
    model: &PredictorModel,
    train: &Dataset,
    test: &Dataset,
    protocol: CandidateProtocol,
    threshold: f64,
) -> Result<CandidateBatch> {
    let mut test_by_user: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in &test.records {
        test_by_user.entry(&r.user_id).or_default().push(r);
    }
    let skipped_users: Vec<String> = train
        .records
        .iter()
        .map(|r| r.user_id.as_str())
        .filter(|u| !test_by_user.contains_key(u))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();

    let universe: BTreeSet<&str> = match protocol {
        CandidateProtocol::TestItems => BTreeSet::new(),
        CandidateProtocol::AllUnrated => train
            .records
            .iter()
            .chain(&test.records)
            .map(|r| r.item_id.as_str())
            .collect(),
    };
    let mut train_rated: HashMap<&str, HashSet<&str>> = HashMap::new();
    if protocol == CandidateProtocol::AllUnrated {
        for r in &train.records {
            train_rated
                .entry(&r.user_id)
                .or_default()
                .insert(&r.item_id);
        }
    }

    let episodes = test_by_user
        .into_par_iter()
        .map(|(user, records)| {
            let mut truth = GroundTruth::new(threshold);
            for r in &records {
                truth.insert_rated(r.item_id.clone(), r.overall);
            }
            let items: Vec<&str> = match protocol {
                CandidateProtocol::TestItems => {
                    let mut items: Vec<&str> = records.iter().map(|r| r.item_id.as_str()).collect();
                    items.sort_unstable();
                    items
                }
                CandidateProtocol::AllUnrated => {
                    let rated = train_rated.get(user);
                    universe
                        .iter()
                        .copied()
                        .filter(|i| !rated.is_some_and(|s| s.contains(i)))
                        .collect()
                }
            };
            for &i in &items {
                truth.insert_unrated(i);
            }
            let candidates =
                CandidateSet::new(user, items.into_iter().map(|i| (i, model.predict(user, i))))?;
            Ok(Episode { candidates, truth })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateBatch {
        episodes,
        skipped_users,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoldId {
    Index(usize),
    Average,
}

impl fmt::Display for FoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldId::Index(i) => write!(f, "{i}"),
            FoldId::Average => f.write_str("avg"),
        }
    }
}

impl Serialize for FoldId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FoldId::Index(i) => s.serialize_u64(*i as u64),
            FoldId::Average => s.serialize_str("avg"),
        }
    }
}

impl<'de> Deserialize<'de> for FoldId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(FoldId::Index(i)),
            Raw::Name(s) if s == "avg" => Ok(FoldId::Average),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("bad fold {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub method: String,
    pub label: String,
    pub k: Option<f64>,
    pub sub: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub fold: FoldId,
    pub f1: f64,
    pub ndcg: f64,
    /// `(value - PR) / PR`; null when the PR value is 0 and this one is not.
    pub improvement_f1: Option<f64>,
    pub improvement_ndcg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
    pub fold_ms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub protocol: CandidateProtocol,
    pub criteria: Vec<String>,
    pub records: usize,
    pub evaluated_users: Vec<usize>,
    pub skipped_users: Vec<usize>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metadata: RunMetadata,
    pub cells: Vec<ReportCell>,
}

impl MetricsReport {
    pub fn cell(&self, label: &str, n: usize, fold: FoldId) -> Option<&ReportCell> {
        self.cells
            .iter()
            .find(|c| c.label == label && c.n == n && c.fold == fold)
    }
}

/// Mean F1 and NDCG over users, indexed `[method][n]`.
type FoldScores = Vec<Vec<(f64, f64)>>;

struct FoldOutcome {
    scores: FoldScores,
    evaluated: usize,
    skipped: usize,
    elapsed_ms: f64,
}

fn evaluate_fold(
    cfg: &ExperimentConfig,
    methods: &[MethodSpec],
    train: &Dataset,
    test: &Dataset,
    fold: usize,
) -> Result<FoldOutcome> {
    let start = Instant::now();
    let model = predictor::fit(train, &cfg.fold_train_config(fold))?;
    let batch = build_candidates(&model, train, test, cfg.protocol, cfg.threshold)?;
    let opts = cfg.ranking_options();
    let per_user: Vec<FoldScores> = batch
        .episodes
        .par_iter()
        .map(|ep| {
            methods
                .iter()
                .map(|&m| {
                    let list = rank_candidates_with(&ep.candidates, m, &opts);
                    cfg.n_values
                        .iter()
                        .map(|&n| {
                            let top = top_n(&list, n);
                            let ids: Vec<&str> = top.item_ids().collect();
                            let f1 = metrics::f1(&metrics::confusion(&ids, &ep.truth)?);
                            let ndcg = metrics::ndcg_with(&ids, &ep.truth, &cfg.metrics)?;
                            Ok((f1, ndcg))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let users = per_user.len().max(1) as f64;
    let mut scores = vec![vec![(0.0, 0.0); cfg.n_values.len()]; methods.len()];
    // fixed user order keeps the sums independent of scheduling
    for user in &per_user {
        for (acc_m, user_m) in scores.iter_mut().zip(user) {
            for (acc, v) in acc_m.iter_mut().zip(user_m) {
                acc.0 += v.0;
                acc.1 += v.1;
            }
        }
    }
    for row in &mut scores {
        for v in row.iter_mut() {
            v.0 /= users;
            v.1 /= users;
        }
    }
    Ok(FoldOutcome {
        scores,
        evaluated: per_user.len(),
        skipped: batch.skipped_users.len(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn improvement(value: f64, baseline: f64) -> Option<f64> {
    if baseline != 0.0 {
        Some((value - baseline) / baseline)
    } else if value == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Runs the full protocol on `data` and reports every configured method.
pub fn run_experiment_on(cfg: &ExperimentConfig, data: &Dataset) -> Result<MetricsReport> {
    run_methods(cfg, data, &cfg.methods)
}

/// Loads the dataset named in the config and runs the protocol on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("config names no dataset".into()))?;
    let data = crate::io::load_dataset(path)?;
    run_experiment_on(cfg, &data)
}

/// One KD(k) row per `k`; ratios are still taken against PR.
pub fn sweep_k(cfg: &ExperimentConfig, data: &Dataset, ks: &[f64]) -> Result<MetricsReport> {
    if ks.is_empty() {
        return Err(Error::Config("no k values to sweep".into()));
    }
    let methods = ks
        .iter()
        .map(|&k| MethodSpec::kd(k))
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = cfg.clone();
    cfg.methods = methods.clone();
    run_methods(&cfg, data, &methods)
}

fn run_methods(
    cfg: &ExperimentConfig,
    data: &Dataset,
    reported: &[MethodSpec],
) -> Result<MetricsReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut methods = reported.to_vec();
    let baseline = match methods.iter().position(|m| *m == MethodSpec::Pr) {
        Some(i) => i,
        None => {
            methods.push(MethodSpec::Pr);
            methods.len() - 1
        }
    };
    let splits = kfold_split(data, cfg.folds, cfg.seed)?;
    let outcomes: Vec<FoldOutcome> = splits
        .par_iter()
        .enumerate()
        .map(|(f, (train, test))| {
            evaluate_fold(cfg, &methods, train, test, f).map_err(|e| e.in_fold(f))
        })
        .collect::<Result<Vec<_>>>()?;

    let folds = outcomes.len();
    let mut cells = Vec::with_capacity(reported.len() * cfg.n_values.len() * (folds + 1));
    for (mi, method) in reported.iter().enumerate() {
        for (ni, &n) in cfg.n_values.iter().enumerate() {
            let make = |fold, (f1, ndcg): (f64, f64), (pr_f1, pr_ndcg): (f64, f64)| ReportCell {
                method: method.base_name().to_owned(),
                label: method.to_string(),
                k: method.k(),
                sub: method.sub().map(|s| s.name().to_owned()),
                n,
                fold,
                f1,
                ndcg,
                improvement_f1: improvement(f1, pr_f1),
                improvement_ndcg: improvement(ndcg, pr_ndcg),
            };
            let mut sum = (0.0, 0.0);
            let mut pr_sum = (0.0, 0.0);
            for (f, o) in outcomes.iter().enumerate() {
                let v = o.scores[mi][ni];
                let pr = o.scores[baseline][ni];
                sum = (sum.0 + v.0, sum.1 + v.1);
                pr_sum = (pr_sum.0 + pr.0, pr_sum.1 + pr.1);
                cells.push(make(FoldId::Index(f), v, pr));
            }
            let k = folds as f64;
            cells.push(make(
                FoldId::Average,
                (sum.0 / k, sum.1 / k),
                (pr_sum.0 / k, pr_sum.1 / k),
            ));
        }
    }

    let timings = Timings {
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        fold_ms: outcomes.iter().map(|o| o.elapsed_ms).collect(),
    };
    Ok(MetricsReport {
        metadata: RunMetadata {
            seed: cfg.seed,
            config_hash: cfg.hash(),
            protocol: cfg.protocol,
            criteria: data.criteria_names.clone(),
            records: data.len(),
            evaluated_users: outcomes.iter().map(|o| o.evaluated).collect(),
            skipped_users: outcomes.iter().map(|o| o.skipped).collect(),
            notes: vec![
                format!("candidate protocol: {}", cfg.protocol),
                "recall denominator: all relevant candidates of the user, not capped at N".into(),
                "evaluated users: every user with at least one test rating".into(),
                "improvement ratio: (method - PR) / PR at the same N".into(),
            ],
            config: cfg.clone(),
            timings: Some(timings),
        },
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    pub users: usize,
    pub items: usize,
    pub criteria: usize,
    pub density: f64,
    pub seed: u64,
}

const SYNTH_LATENT: usize = 3;

/// Seeded synthetic ratings on the 1..5 scale. Latent user and item factors
/// drive a shared affinity; per-criterion user and item offsets make the
/// criteria disagree. Each user-item pair is kept with probability `density`.
pub fn synth_generate(p: &SynthParams) -> Result<Dataset> {
    if p.users == 0 || p.items == 0 || p.criteria == 0 {
        return Err(Error::Config(
            "users, items and criteria must all be positive".into(),
        ));
    }
    if !(p.density > 0.0 && p.density <= 1.0) {
        return Err(Error::Config(format!(
            "density {} must be in (0, 1]",
            p.density
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let draw = |n: usize, scale: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| unit.sample(rng) * scale).collect()
    };
    let user_factors = draw(p.users * SYNTH_LATENT, 1.0, &mut rng);
    let item_factors = draw(p.items * SYNTH_LATENT, 1.0, &mut rng);
    let user_offsets = draw(p.users * p.criteria, 0.5, &mut rng);
    let item_offsets = draw(p.items * p.criteria, 0.6, &mut rng);
    let item_quality = draw(p.items, 0.5, &mut rng);

    let uw = (p.users - 1).to_string().len();
    let iw = (p.items - 1).to_string().len();
    let discretize = |x: f64| x.round().clamp(1.0, 5.0);
    let mut records = Vec::with_capacity((p.density * (p.users * p.items) as f64) as usize + 16);
    for u in 0..p.users {
        for i in 0..p.items {
            if !rng.gen_bool(p.density) {
                continue;
            }
            let pu = &user_factors[u * SYNTH_LATENT..(u + 1) * SYNTH_LATENT];
            let qi = &item_factors[i * SYNTH_LATENT..(i + 1) * SYNTH_LATENT];
            let affinity =
                pu.iter().zip(qi).map(|(a, b)| a * b).sum::<f64>() / (SYNTH_LATENT as f64).sqrt();
            let criteria: Vec<f64> = (0..p.criteria)
                .map(|m| {
                    let noise = unit.sample(&mut rng) * 0.5;
                    discretize(
                        3.2 + 0.8 * affinity
                            + item_quality[i]
                            + user_offsets[u * p.criteria + m]
                            + item_offsets[i * p.criteria + m]
                            + noise,
                    )
                })
                .collect();
            let mean = criteria.iter().sum::<f64>() / p.criteria as f64;
            let overall = discretize(mean + unit.sample(&mut rng) * 0.4);
            records.push(RatingRecord::new(
                format!("u{u:0uw$}"),
                format!("i{i:0iw$}"),
                overall,
                criteria,
            ));
        }
    }
    Ok(Dataset::new(
        (1..=p.criteria).map(|m| format!("c{m}")).collect(),
        records,
    ))
}
