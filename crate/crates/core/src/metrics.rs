//! Domain types for reranking instances and the instance-wise IR metrics.
//!
//! A reranking instance pairs a relevance-score vector `z` (one score per
//! candidate document) with a binary ground-truth vector `y`. All metrics are
//! computed on the ranking induced by `z`, so they depend only on the order
//! of the scores, never on their scale.
//!
//! Document indices are 0-based throughout; ranks are 1-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relevance scores for the `k` candidate documents of one query.
///
/// Invariants: `k >= 2` and every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidScores(format!(
                "need at least 2 scores, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidScores(format!("non-finite score {v}")));
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

/// Binary relevance flags, at least one of which is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<bool>);

impl LabelVector {
    pub fn new(values: Vec<bool>) -> Result<Self> {
        if !values.iter().any(|&v| v) {
            return Err(Error::NoPositive { id: None });
        }
        Ok(Self(values))
    }

    /// Builds from 0/1 integers; any other value is rejected.
    pub fn from_ints(values: &[i64]) -> Result<Self> {
        let flags = values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidLabels(format!("label {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(flags)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }
}

/// One query: its identifier, scores and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankInstance {
    pub id: String,
    scores: ScoreVector,
    labels: LabelVector,
}

impl RerankInstance {
    pub fn new(id: impl Into<String>, scores: ScoreVector, labels: LabelVector) -> Result<Self> {
        let id = id.into();
        if scores.len() != labels.len() {
            return Err(Error::InvalidLabels(format!(
                "instance {id:?}: {} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        Ok(Self { id, scores, labels })
    }

    /// Convenience constructor from raw vectors.
    pub fn from_parts(id: impl Into<String>, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        let id = id.into();
        let scores = ScoreVector::new(scores)?;
        let labels = LabelVector::new(labels).map_err(|e| match e {
            Error::NoPositive { .. } => Error::NoPositive {
                id: Some(id.clone()),
            },
            other => other,
        })?;
        Self::new(id, scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        self.scores.as_slice()
    }

    pub fn labels(&self) -> &[bool] {
        self.labels.as_slice()
    }

    pub fn k(&self) -> usize {
        self.scores.len()
    }

    pub fn metric(&self, kind: MetricKind) -> Result<f64> {
        metric(kind, self.scores(), self.labels()).map_err(|e| match e {
            Error::NoPositive { .. } => Error::NoPositive {
                id: Some(self.id.clone()),
            },
            other => other,
        })
    }
}

/// A non-empty collection of instances sharing the same `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankDataset {
    instances: Vec<RerankInstance>,
    k: usize,
}

impl RerankDataset {
    pub fn new(instances: Vec<RerankInstance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyDataset)?;
        let k = first.k();
        if let Some(bad) = instances.iter().find(|inst| inst.k() != k) {
            return Err(Error::RaggedK {
                expected: k,
                found: bad.k(),
                id: bad.id.clone(),
            });
        }
        Ok(Self { instances, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[RerankInstance] {
        &self.instances
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RerankInstance> {
        self.instances.iter()
    }

    /// New dataset holding the instances at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let instances = indices.iter().map(|&i| self.instances[i].clone()).collect();
        Self::new(instances)
    }

    /// Per-instance metric values in dataset order.
    pub fn metric_values(&self, kind: MetricKind) -> Result<Vec<f64>> {
        self.instances
            .iter()
            .map(|inst| inst.metric(kind))
            .collect()
    }
}

impl<'a> IntoIterator for &'a RerankDataset {
    type Item = &'a RerankInstance;
    type IntoIter = std::slice::Iter<'a, RerankInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

/// Instance-wise ranking metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Average precision.
    Ap,
    /// Normalized discounted cumulative gain, binary gains.
    Ndcg,
    /// Reciprocal rank of the first relevant document.
    Rr,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Ap, MetricKind::Ndcg, MetricKind::Rr];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Ap => "ap",
            MetricKind::Ndcg => "ndcg",
            MetricKind::Rr => "rr",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ap" | "map" => Ok(MetricKind::Ap),
            "ndcg" | "mndcg" => Ok(MetricKind::Ndcg),
            "rr" | "mrr" => Ok(MetricKind::Rr),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

/// Document indices from most to least relevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Validates that `order` is a permutation of `0..order.len()`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig(format!(
                    "ranking {order:?} is not a permutation"
                )));
            }
        }
        Ok(Self(order))
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }
}

/// Ascending sort of the scores.
pub fn sort_scores(z: &[f64]) -> Vec<f64> {
    let mut s = z.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Ranks documents by non-increasing score; ties keep ascending index order.
pub fn rank_descending(z: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..z.len()).collect();
    // sort_by is stable, so equal scores keep index order
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    Ranking(order)
}

fn check_pair(z: &[f64], y: &[bool]) -> Result<usize> {
    if z.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: y.len(),
        });
    }
    match y.iter().filter(|&&v| v).count() {
        0 => Err(Error::NoPositive { id: None }),
        p => Ok(p),
    }
}

/// Mean of precision@j over the ranks j holding a relevant document.
pub fn average_precision(z: &[f64], y: &[bool]) -> Result<f64> {
    let positives = check_pair(z, y)?;
    let ranking = rank_descending(z);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (j, &doc) in ranking.order().iter().enumerate() {
        if y[doc] {
            hits += 1;
            sum += hits as f64 / (j + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Binary-gain NDCG with a `log2(rank + 1)` discount over the full list.
pub fn ndcg(z: &[f64], y: &[bool]) -> Result<f64> {
    let positives = check_pair(z, y)?;
    let ranking = rank_descending(z);
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranking
        .order()
        .iter()
        .enumerate()
        .filter(|(_, &doc)| y[doc])
        .map(|(j, _)| discount(j + 1))
        .sum();
    let idcg: f64 = (1..=positives).map(discount).sum();
    Ok(dcg / idcg)
}

/// Inverse rank of the first relevant document.
pub fn reciprocal_rank(z: &[f64], y: &[bool]) -> Result<f64> {
    check_pair(z, y)?;
    let ranking = rank_descending(z);
    let first = ranking
        .order()
        .iter()
        .position(|&doc| y[doc])
        .expect("at least one positive");
    Ok(1.0 / (first + 1) as f64)
}

pub fn metric(kind: MetricKind, z: &[f64], y: &[bool]) -> Result<f64> {
    match kind {
        MetricKind::Ap => average_precision(z, y),
        MetricKind::Ndcg => ndcg(z, y),
        MetricKind::Rr => reciprocal_rank(z, y),
    }
}

/// Arithmetic mean of the instance metric (mAP, mNDCG or mRR).
pub fn mean_metric(ds: &RerankDataset, kind: MetricKind) -> Result<f64> {
    let values = ds.metric_values(kind)?;
    Ok(mean(&values))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
