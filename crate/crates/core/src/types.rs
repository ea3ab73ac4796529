//! Domain types shared by every stage: rating datasets, criteria vectors,
//! candidate sets, method specifications and scored lists.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dominance::Relaxation;
use crate::error::{Error, Result};

pub const DEFAULT_SCALE_MIN: f64 = 1.0;
pub const DEFAULT_SCALE_MAX: f64 = 5.0;

/// One observed user-item rating: the overall rating plus one rating per criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user_id: String,
    pub item_id: String,
    pub overall: f64,
    pub criteria: Vec<f64>,
}

impl RatingRecord {
    pub fn new(
        user_id: impl Into<String>,
        item_id: impl Into<String>,
        overall: f64,
        criteria: Vec<f64>,
    ) -> Self {
        Self {
            user_id: user_id.into(),
            item_id: item_id.into(),
            overall,
            criteria,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub criteria_names: Vec<String>,
    pub scale_min: f64,
    pub scale_max: f64,
    pub records: Vec<RatingRecord>,
}

impl Dataset {
    /// Builds a dataset on the default 1..5 scale. No validation is done here;
    /// see [`validate_dataset`].
    pub fn new(criteria_names: Vec<String>, records: Vec<RatingRecord>) -> Self {
        Self {
            criteria_names,
            scale_min: DEFAULT_SCALE_MIN,
            scale_max: DEFAULT_SCALE_MAX,
            records,
        }
    }

    pub fn with_scale(mut self, scale_min: f64, scale_max: f64) -> Self {
        self.scale_min = scale_min;
        self.scale_max = scale_max;
        self
    }

    pub fn criteria_count(&self) -> usize {
        self.criteria_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// A dataset with the same schema holding the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            criteria_names: self.criteria_names.clone(),
            scale_min: self.scale_min,
            scale_max: self.scale_max,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Same schema, different records.
    pub fn with_records(&self, records: Vec<RatingRecord>) -> Dataset {
        Dataset {
            criteria_names: self.criteria_names.clone(),
            scale_min: self.scale_min,
            scale_max: self.scale_max,
            records,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    NoCriteria,
    InvalidScale { min: f64, max: f64 },
    CriteriaLength { expected: usize, actual: usize },
    OutOfRange { field: String, value: f64 },
    DuplicatePair { first: usize },
}

/// A single broken invariant. `record` is the 0-based record index, absent for
/// dataset-level problems.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub record: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.record {
            write!(f, "record {r}: ")?;
        }
        match &self.kind {
            ViolationKind::NoCriteria => write!(f, "dataset declares no criteria"),
            ViolationKind::InvalidScale { min, max } => {
                write!(f, "invalid rating scale [{min}, {max}]")
            }
            ViolationKind::CriteriaLength { expected, actual } => {
                write!(
                    f,
                    "criteria length mismatch: expected {expected}, got {actual}"
                )
            }
            ViolationKind::OutOfRange { field, value } => {
                write!(f, "out of range: {field} = {value}")
            }
            ViolationKind::DuplicatePair { first } => {
                write!(f, "duplicate pair (first seen at record {first})")
            }
        }
    }
}

/// Checks every dataset invariant and returns all violations found.
pub fn validate_dataset(d: &Dataset) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let m = d.criteria_count();
    if m == 0 {
        violations.push(Violation {
            record: None,
            kind: ViolationKind::NoCriteria,
        });
    }
    let scale_ok = d.scale_min.is_finite() && d.scale_max.is_finite() && d.scale_min < d.scale_max;
    if !scale_ok {
        violations.push(Violation {
            record: None,
            kind: ViolationKind::InvalidScale {
                min: d.scale_min,
                max: d.scale_max,
            },
        });
    }
    let in_range = |v: f64| v.is_finite() && v >= d.scale_min && v <= d.scale_max;

    let mut seen: HashMap<(&str, &str), usize> = HashMap::with_capacity(d.records.len());
    for (idx, rec) in d.records.iter().enumerate() {
        if rec.criteria.len() != m {
            violations.push(Violation {
                record: Some(idx),
                kind: ViolationKind::CriteriaLength {
                    expected: m,
                    actual: rec.criteria.len(),
                },
            });
        }
        if scale_ok {
            if !in_range(rec.overall) {
                violations.push(Violation {
                    record: Some(idx),
                    kind: ViolationKind::OutOfRange {
                        field: "overall".into(),
                        value: rec.overall,
                    },
                });
            }
            for (c, &v) in rec.criteria.iter().enumerate() {
                if !in_range(v) {
                    let field = d
                        .criteria_names
                        .get(c)
                        .cloned()
                        .unwrap_or_else(|| format!("criterion {}", c + 1));
                    violations.push(Violation {
                        record: Some(idx),
                        kind: ViolationKind::OutOfRange { field, value: v },
                    });
                }
            }
        }
        if let Some(&first) = seen.get(&(rec.user_id.as_str(), rec.item_id.as_str())) {
            violations.push(Violation {
                record: Some(idx),
                kind: ViolationKind::DuplicatePair { first },
            });
        } else {
            seen.insert((rec.user_id.as_str(), rec.item_id.as_str()), idx);
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Real-valued criteria ratings for one item; predicted values may be non-integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaVector(Vec<f64>);

impl CriteriaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain(
                "criteria vector must hold at least one value".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("criteria value {v} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for CriteriaVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<CriteriaVector> for Vec<f64> {
    fn from(v: CriteriaVector) -> Self {
        v.0
    }
}

/// The items one user is about to be recommended from, each with its criteria
/// vector. Vectors are stored row-major in one buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    user_id: String,
    item_ids: Vec<String>,
    criteria: usize,
    values: Vec<f64>,
}

impl CandidateSet {
    pub fn new<I, S>(user_id: impl Into<String>, candidates: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, CriteriaVector)>,
        S: Into<String>,
    {
        let mut item_ids = Vec::new();
        let mut values = Vec::new();
        let mut criteria = None;
        let mut seen = HashSet::new();
        for (id, vector) in candidates {
            let id = id.into();
            let m = *criteria.get_or_insert(vector.len());
            if vector.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    actual: vector.len(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Domain(format!("duplicate candidate item {id}")));
            }
            item_ids.push(id);
            values.extend_from_slice(vector.as_slice());
        }
        let Some(criteria) = criteria else {
            return Err(Error::Domain("candidate set is empty".into()));
        };
        Ok(Self {
            user_id: user_id.into(),
            item_ids,
            criteria,
            values,
        })
    }

    /// Convenience constructor from raw rows.
    pub fn from_rows<S: Into<String>>(
        user_id: impl Into<String>,
        rows: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|(id, v)| CriteriaVector::new(v).map(|cv| (id, cv)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(user_id, rows)
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn criteria_count(&self) -> usize {
        self.criteria
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.values[i * self.criteria..(i + 1) * self.criteria]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.criteria)
    }

    /// Ratings of every candidate on criterion `m`, in candidate order.
    pub fn column(&self, m: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().skip(m).step_by(self.criteria).copied()
    }
}

/// Ranking methods that produce an integer dominated-count score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MajorMethod {
    Pr,
    Kd(Relaxation),
}

/// Preference-ordering methods usable as a subsort.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubMethod {
    Ar,
    Mr,
    Gd,
    Pg,
}

impl SubMethod {
    pub fn name(self) -> &'static str {
        match self {
            SubMethod::Ar => "AR",
            SubMethod::Mr => "MR",
            SubMethod::Gd => "GD",
            SubMethod::Pg => "PG",
        }
    }
}

impl MajorMethod {
    pub fn name(self) -> &'static str {
        match self {
            MajorMethod::Pr => "PR",
            MajorMethod::Kd(_) => "KD",
        }
    }
}

/// Which ranking method to apply to a candidate set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MethodSpec {
    Pr,
    Kd(Relaxation),
    Ar,
    Mr,
    Gd,
    Pg,
    Hybrid { major: MajorMethod, sub: SubMethod },
}

impl MethodSpec {
    pub fn kd(k: f64) -> Result<Self> {
        Ok(MethodSpec::Kd(Relaxation::new(k)?))
    }

    /// Combines a major (PR or KD) method with a subsort (AR, MR, GD or PG).
    pub fn hybrid(major: MethodSpec, sub: MethodSpec) -> Result<Self> {
        let major = match major {
            MethodSpec::Pr => MajorMethod::Pr,
            MethodSpec::Kd(k) => MajorMethod::Kd(k),
            other => {
                return Err(Error::InvalidMethod(format!(
                    "hybrid major must be PR or KD, got {other}"
                )))
            }
        };
        let sub = match sub {
            MethodSpec::Ar => SubMethod::Ar,
            MethodSpec::Mr => SubMethod::Mr,
            MethodSpec::Gd => SubMethod::Gd,
            MethodSpec::Pg => SubMethod::Pg,
            other => {
                return Err(Error::InvalidMethod(format!(
                    "hybrid subsort must be AR, MR, GD or PG, got {other}"
                )))
            }
        };
        Ok(MethodSpec::Hybrid { major, sub })
    }

    /// Base method name: the major method for hybrids.
    pub fn base_name(&self) -> &'static str {
        match self {
            MethodSpec::Pr => "PR",
            MethodSpec::Kd(_) => "KD",
            MethodSpec::Ar => "AR",
            MethodSpec::Mr => "MR",
            MethodSpec::Gd => "GD",
            MethodSpec::Pg => "PG",
            MethodSpec::Hybrid { major, .. } => major.name(),
        }
    }

    pub fn k(&self) -> Option<f64> {
        match self {
            MethodSpec::Kd(r)
            | MethodSpec::Hybrid {
                major: MajorMethod::Kd(r),
                ..
            } => Some(r.k()),
            _ => None,
        }
    }

    pub fn sub(&self) -> Option<SubMethod> {
        match self {
            MethodSpec::Hybrid { sub, .. } => Some(*sub),
            _ => None,
        }
    }
}

impl From<MajorMethod> for MethodSpec {
    fn from(m: MajorMethod) -> Self {
        match m {
            MajorMethod::Pr => MethodSpec::Pr,
            MajorMethod::Kd(k) => MethodSpec::Kd(k),
        }
    }
}

impl From<SubMethod> for MethodSpec {
    fn from(s: SubMethod) -> Self {
        match s {
            SubMethod::Ar => MethodSpec::Ar,
            SubMethod::Mr => MethodSpec::Mr,
            SubMethod::Gd => MethodSpec::Gd,
            SubMethod::Pg => MethodSpec::Pg,
        }
    }
}

impl fmt::Display for MajorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MajorMethod::Pr => f.write_str("PR"),
            MajorMethod::Kd(r) => write!(f, "KD({})", r.k()),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Kd(r) => write!(f, "KD({})", r.k()),
            MethodSpec::Hybrid { major, sub } => write!(f, "{major}+{}", sub.name()),
            other => f.write_str(other.base_name()),
        }
    }
}

/// Accepts `pr`, `kd:0.5`, `KD(0.5)`, `ar`, `mr`, `gd`, `pg` and hybrids joined
/// with `+`, e.g. `kd:0.5+pg`. Case-insensitive.
impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((major, sub)) = s.split_once('+') {
            return MethodSpec::hybrid(major.parse()?, sub.parse()?);
        }
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "pr" => return Ok(MethodSpec::Pr),
            "ar" => return Ok(MethodSpec::Ar),
            "mr" => return Ok(MethodSpec::Mr),
            "gd" => return Ok(MethodSpec::Gd),
            "pg" => return Ok(MethodSpec::Pg),
            _ => {}
        }
        let k_text = lower
            .strip_prefix("kd:")
            .or_else(|| lower.strip_prefix("kd(").and_then(|r| r.strip_suffix(')')));
        match k_text {
            Some(k) => {
                let k: f64 = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidMethod(format!("bad k value in {s:?}")))?;
                MethodSpec::kd(k)
            }
            None => Err(Error::InvalidMethod(format!("unknown method {s:?}"))),
        }
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item_id: String,
    pub score: f64,
}

/// Items sorted by descending score, ties broken by ascending item id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredList(Vec<ScoredItem>);

impl ScoredList {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Self {
        let mut items: Vec<ScoredItem> = entries
            .into_iter()
            .map(|(id, score)| ScoredItem {
                item_id: id.into(),
                score,
            })
            .collect();
        items.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.item_id.cmp(&b.item_id))
        });
        Self(items)
    }

    pub fn entries(&self) -> &[ScoredItem] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(|e| e.item_id.as_str())
    }

    pub(crate) fn truncated(&self, n: usize) -> ScoredList {
        ScoredList(self.0[..n.min(self.0.len())].to_vec())
    }
}
