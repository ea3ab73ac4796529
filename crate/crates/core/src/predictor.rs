//! Baseline multi-criteria rating predictor: one biased matrix-factorization
//! model per criterion, trained independently with seeded SGD.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CriteriaVector, Dataset};

const FORMAT_HEADER: &str = "mcrank-predictor";
const FORMAT_VERSION: u32 = 1;
/// Factor init std is this over sqrt(dim), keeping the initial interaction
/// term small regardless of dimension.
const INIT_SCALE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            learning_rate: 0.005,
            regularization: 0.02,
            epochs: 30,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config(format!(
                "regularization {} must be >= 0",
                self.regularization
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epoch count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct CriterionModel {
    global_mean: f64,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorModel {
    dim: usize,
    scale_min: f64,
    scale_max: f64,
    users: Vec<String>,
    items: Vec<String>,
    user_index: HashMap<String, usize>,
    item_index: HashMap<String, usize>,
    criteria: Vec<CriterionModel>,
}

/// Mean squared training error per criterion: before the first epoch, then after each.
pub type LossHistory = Vec<Vec<f64>>;

struct Observation {
    user: usize,
    item: usize,
}

fn intern(index: &mut HashMap<String, usize>, names: &mut Vec<String>, id: &str) -> usize {
    if let Some(&i) = index.get(id) {
        return i;
    }
    index.insert(id.to_owned(), names.len());
    names.push(id.to_owned());
    names.len() - 1
}

fn criterion_seed(seed: u64, criterion: usize) -> u64 {
    seed ^ (criterion as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl CriterionModel {
    #[inline]
    fn score(&self, dim: usize, u: usize, i: usize) -> f64 {
        let p = &self.user_factors[u * dim..(u + 1) * dim];
        let q = &self.item_factors[i * dim..(i + 1) * dim];
        self.global_mean
            + self.user_bias[u]
            + self.item_bias[i]
            + p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>()
    }

    fn mse(&self, dim: usize, obs: &[Observation], targets: &[f64]) -> f64 {
        let total: f64 = obs
            .iter()
            .zip(targets)
            .map(|(o, r)| (r - self.score(dim, o.user, o.item)).powi(2))
            .sum();
        total / obs.len() as f64
    }

    fn train(
        n_users: usize,
        n_items: usize,
        obs: &[Observation],
        targets: &[f64],
        cfg: &TrainConfig,
        seed: u64,
    ) -> (Self, Vec<f64>) {
        let dim = cfg.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_SCALE / (dim as f64).sqrt()).expect("valid std");
        let mut model = CriterionModel {
            global_mean: targets.iter().sum::<f64>() / targets.len() as f64,
            user_bias: vec![0.0; n_users],
            item_bias: vec![0.0; n_items],
            user_factors: (0..n_users * dim)
                .map(|_| normal.sample(&mut rng))
                .collect(),
            item_factors: (0..n_items * dim)
                .map(|_| normal.sample(&mut rng))
                .collect(),
        };
        let (lr, reg) = (cfg.learning_rate, cfg.regularization);
        let mut order: Vec<usize> = (0..obs.len()).collect();
        let mut history = Vec::with_capacity(cfg.epochs + 1);
        history.push(model.mse(dim, obs, targets));
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &k in &order {
                let Observation { user: u, item: i } = obs[k];
                let err = targets[k] - model.score(dim, u, i);
                model.user_bias[u] += lr * (err - reg * model.user_bias[u]);
                model.item_bias[i] += lr * (err - reg * model.item_bias[i]);
                let p = &mut model.user_factors[u * dim..(u + 1) * dim];
                let q = &mut model.item_factors[i * dim..(i + 1) * dim];
                for (pf, qf) in p.iter_mut().zip(q.iter_mut()) {
                    let (pu, qi) = (*pf, *qf);
                    *pf += lr * (err * qi - reg * pu);
                    *qf += lr * (err * pu - reg * qi);
                }
            }
            history.push(model.mse(dim, obs, targets));
        }
        (model, history)
    }

    fn is_finite(&self) -> bool {
        self.global_mean.is_finite()
            && [
                &self.user_bias,
                &self.item_bias,
                &self.user_factors,
                &self.item_factors,
            ]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

pub fn fit(train: &Dataset, cfg: &TrainConfig) -> Result<PredictorModel> {
    fit_with_history(train, cfg).map(|(m, _)| m)
}

/// Trains the per-criterion models. Criteria train concurrently; each one is
/// sequential and seeded, so the result does not depend on thread count.
pub fn fit_with_history(
    train: &Dataset,
    cfg: &TrainConfig,
) -> Result<(PredictorModel, LossHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Training("training dataset is empty".into()));
    }
    let m = train.criteria_count();
    if m == 0 {
        return Err(Error::Training("dataset declares no criteria".into()));
    }
    let mut users = Vec::new();
    let mut items = Vec::new();
    let mut user_index = HashMap::new();
    let mut item_index = HashMap::new();
    let mut obs = Vec::with_capacity(train.len());
    for rec in &train.records {
        if rec.criteria.len() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: rec.criteria.len(),
            });
        }
        obs.push(Observation {
            user: intern(&mut user_index, &mut users, &rec.user_id),
            item: intern(&mut item_index, &mut items, &rec.item_id),
        });
    }
    let (n_users, n_items) = (users.len(), items.len());
    let trained: Vec<(CriterionModel, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|c| {
            let targets: Vec<f64> = train.records.iter().map(|r| r.criteria[c]).collect();
            CriterionModel::train(
                n_users,
                n_items,
                &obs,
                &targets,
                cfg,
                criterion_seed(cfg.seed, c),
            )
        })
        .collect();
    let (criteria, history): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    if let Some(c) = criteria.iter().position(|c| !c.is_finite()) {
        return Err(Error::Training(format!(
            "criterion {c} diverged; lower the learning rate"
        )));
    }
    Ok((
        PredictorModel {
            dim: cfg.dim,
            scale_min: train.scale_min,
            scale_max: train.scale_max,
            users,
            items,
            user_index,
            item_index,
            criteria,
        },
        history,
    ))
}

impl PredictorModel {
    pub fn criteria_count(&self) -> usize {
        self.criteria.len()
    }

    pub fn knows_user(&self, user: &str) -> bool {
        self.user_index.contains_key(user)
    }

    pub fn knows_item(&self, item: &str) -> bool {
        self.item_index.contains_key(item)
    }

    /// Items seen during training, in first-seen order.
    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    /// Predicted criteria ratings, clamped to the training scale. Unknown users
    /// or items fall back to the bias terms that are available.
    pub fn predict(&self, user: &str, item: &str) -> CriteriaVector {
        let u = self.user_index.get(user).copied();
        let i = self.item_index.get(item).copied();
        let values = self
            .criteria
            .iter()
            .map(|c| {
                let raw = match (u, i) {
                    (Some(u), Some(i)) => c.score(self.dim, u, i),
                    (Some(u), None) => c.global_mean + c.user_bias[u],
                    (None, Some(i)) => c.global_mean + c.item_bias[i],
                    (None, None) => c.global_mean,
                };
                raw.clamp(self.scale_min, self.scale_max)
            })
            .collect();
        CriteriaVector::new(values).expect("finite parameters give finite predictions")
    }

    /// Root mean squared error per criterion over `data`.
    pub fn rmse(&self, data: &Dataset) -> Vec<f64> {
        let mut sums = vec![0.0; self.criteria_count()];
        for rec in &data.records {
            let p = self.predict(&rec.user_id, &rec.item_id);
            for (s, (a, b)) in sums.iter_mut().zip(p.as_slice().iter().zip(&rec.criteria)) {
                *s += (a - b).powi(2);
            }
        }
        sums.into_iter()
            .map(|s| (s / data.len().max(1) as f64).sqrt())
            .collect()
    }

    /// Writes the text parameter dump: versioned header, sizes, id tables, then
    /// each criterion's mean, biases and factors.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        for id in self.users.iter().chain(&self.items) {
            if id.contains(['\n', '\r']) {
                return Err(Error::ModelFormat(format!(
                    "id {id:?} contains a line break"
                )));
            }
        }
        writeln!(w, "{FORMAT_HEADER} {FORMAT_VERSION}")?;
        writeln!(w, "criteria {}", self.criteria.len())?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "scale {:e} {:e}", self.scale_min, self.scale_max)?;
        writeln!(w, "users {}", self.users.len())?;
        for u in &self.users {
            writeln!(w, "{u}")?;
        }
        writeln!(w, "items {}", self.items.len())?;
        for i in &self.items {
            writeln!(w, "{i}")?;
        }
        for (k, c) in self.criteria.iter().enumerate() {
            writeln!(w, "criterion {k}")?;
            writeln!(w, "mean {:e}", c.global_mean)?;
            for (name, values) in [
                ("user_bias", &c.user_bias),
                ("item_bias", &c.item_bias),
                ("user_factors", &c.user_factors),
                ("item_factors", &c.item_factors),
            ] {
                let mut line = String::from(name);
                for v in values {
                    write!(line, " {v:e}").expect("write to string");
                }
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::ModelFormat("unexpected end of file".into()))
        };
        let header = next()?;
        if header != format!("{FORMAT_HEADER} {FORMAT_VERSION}") {
            return Err(Error::ModelFormat(format!("unsupported header {header:?}")));
        }
        let n_criteria: usize = parse_keyed(&next()?, "criteria")?;
        let dim: usize = parse_keyed(&next()?, "dim")?;
        let scale = keyed_values(&next()?, "scale")?;
        if scale.len() != 2 {
            return Err(Error::ModelFormat("scale needs two bounds".into()));
        }
        let n_users: usize = parse_keyed(&next()?, "users")?;
        let users = (0..n_users).map(|_| next()).collect::<Result<Vec<_>>>()?;
        let n_items: usize = parse_keyed(&next()?, "items")?;
        let items = (0..n_items).map(|_| next()).collect::<Result<Vec<_>>>()?;
        let mut criteria = Vec::with_capacity(n_criteria);
        for k in 0..n_criteria {
            let idx: usize = parse_keyed(&next()?, "criterion")?;
            if idx != k {
                return Err(Error::ModelFormat(format!(
                    "expected criterion {k}, found {idx}"
                )));
            }
            let mean = keyed_values(&next()?, "mean")?;
            let mut take = |name: &str, len: usize| -> Result<Vec<f64>> {
                let v = keyed_values(&next()?, name)?;
                if v.len() != len {
                    return Err(Error::ModelFormat(format!(
                        "{name}: expected {len} values, got {}",
                        v.len()
                    )));
                }
                Ok(v)
            };
            criteria.push(CriterionModel {
                global_mean: *mean
                    .first()
                    .ok_or_else(|| Error::ModelFormat("missing mean".into()))?,
                user_bias: take("user_bias", n_users)?,
                item_bias: take("item_bias", n_items)?,
                user_factors: take("user_factors", n_users * dim)?,
                item_factors: take("item_factors", n_items * dim)?,
            });
        }
        let index = |names: &[String]| {
            names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect()
        };
        Ok(PredictorModel {
            dim,
            scale_min: scale[0],
            scale_max: scale[1],
            user_index: index(&users),
            item_index: index(&items),
            users,
            items,
            criteria,
        })
    }
}

fn keyed_values(line: &str, key: &str) -> Result<Vec<f64>> {
    let mut parts = line.split(' ');
    if parts.next() != Some(key) {
        return Err(Error::ModelFormat(format!(
            "expected {key:?}, found {line:?}"
        )));
    }
    parts
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::ModelFormat(format!("bad number {p:?} in {key}")))
        })
        .collect()
}

fn parse_keyed(line: &str, key: &str) -> Result<usize> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::ModelFormat(format!("expected `{key} <count>`, found {line:?}")))
}
