//! Abstention decisions and the performance–abstention evaluation protocol.
//!
//! Instances are sorted by confidence and abstained on from the least
//! confident upward. Each achievable abstention rate `j / n` (for
//! `j = 0..n-1`) yields one curve point whose performance is the mean metric
//! of the instances still predicted. The area under that curve is compared
//! with a random mechanism (flat at the no-abstention mean) and with an
//! oracle that abstains on the truly worst instances first:
//!
//! ```text
//! nAUC = (AUC - AUC_random) / (AUC_oracle - AUC_random)
//! ```

use serde::{Deserialize, Serialize};

use crate::confidence::{score_all, ConfidenceModel};
use crate::error::{Error, Result};
use crate::metrics::{mean, MetricKind, Ranking, RerankDataset};

/// Output of the abstention mechanism for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstentionDecision {
    Predict(Ranking),
    Abstain,
}

/// Predicts iff `confidence > tau`.
pub fn decide(confidence: f64, tau: f64, ranking: Ranking) -> AbstentionDecision {
    if confidence > tau {
        AbstentionDecision::Predict(ranking)
    } else {
        AbstentionDecision::Abstain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub abstention_rate: f64,
    pub performance: f64,
}

/// Points ordered by strictly increasing abstention rate, starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstentionCurve {
    points: Vec<CurvePoint>,
}

impl AbstentionCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints);
        }
        if points[0].abstention_rate != 0.0
            || points
                .windows(2)
                .any(|w| !(w[1].abstention_rate > w[0].abstention_rate))
        {
            return Err(Error::InvalidConfig(
                "curve rates must start at 0 and strictly increase".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds the curve from per-instance confidences and metric values.
///
/// Instances are ordered by ascending confidence (ties keep input order) and
/// point `j` is the mean metric of everything after the first `j`. The point
/// at rate 0 is the plain mean in input order.
pub fn curve_from_values(confidences: &[f64], metrics: &[f64]) -> Result<AbstentionCurve> {
    if confidences.len() != metrics.len() {
        return Err(Error::DimensionMismatch {
            expected: metrics.len(),
            found: confidences.len(),
        });
    }
    let n = metrics.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: n,
        });
    }
    if confidences.iter().any(|c| c.is_nan()) {
        return Err(Error::InvalidConfig("confidence is NaN".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| confidences[a].total_cmp(&confidences[b]));

    let mut suffix = vec![0.0; n];
    let mut acc = 0.0;
    for j in (0..n).rev() {
        acc += metrics[order[j]];
        suffix[j] = acc;
    }
    let points = (0..n)
        .map(|j| CurvePoint {
            abstention_rate: j as f64 / n as f64,
            performance: if j == 0 {
                mean(metrics)
            } else {
                suffix[j] / (n - j) as f64
            },
        })
        .collect();
    AbstentionCurve::new(points)
}

/// Performance–abstention curve of a confidence model on a test set.
pub fn curve(
    test: &RerankDataset,
    model: &ConfidenceModel,
    kind: MetricKind,
) -> Result<AbstentionCurve> {
    let confidences = score_all(model, test)?;
    let metrics = test.metric_values(kind)?;
    curve_from_values(&confidences, &metrics)
}

/// Curve of the label-aware oracle: abstain on the lowest metric first.
pub fn oracle_curve(test: &RerankDataset, kind: MetricKind) -> Result<AbstentionCurve> {
    let metrics = test.metric_values(kind)?;
    curve_from_values(&metrics, &metrics)
}

/// Trapezoidal area under the curve over its own span.
pub fn auc(curve: &AbstentionCurve) -> Result<f64> {
    let p = curve.points();
    if p.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    Ok(p.windows(2)
        .map(|w| {
            0.5 * (w[0].performance + w[1].performance)
                * (w[1].abstention_rate - w[0].abstention_rate)
        })
        .sum())
}

/// Area of the flat random-abstention curve: mean metric times `(n-1)/n`.
pub fn random_auc_from_values(metrics: &[f64]) -> Result<f64> {
    let n = metrics.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: n,
        });
    }
    Ok(mean(metrics) * (n - 1) as f64 / n as f64)
}

pub fn random_auc(test: &RerankDataset, kind: MetricKind) -> Result<f64> {
    random_auc_from_values(&test.metric_values(kind)?)
}

/// Normalizes an AUC between the random baseline (0) and the oracle (1).
pub fn nauc(auc_value: f64, auc_random: f64, auc_oracle: f64) -> Result<f64> {
    let span = auc_oracle - auc_random;
    if !(span.abs() > 1e-12 * auc_oracle.abs().max(1.0)) {
        return Err(Error::DegenerateOracle);
    }
    Ok((auc_value - auc_random) / span)
}

/// Summary of one mechanism evaluated on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub auc_random: f64,
    pub auc_oracle: f64,
    pub nauc: f64,
    pub n_test: usize,
    pub metric: MetricKind,
    pub method: String,
}

/// Full protocol from precomputed confidences and metric values.
pub fn evaluate_values(
    confidences: &[f64],
    metrics: &[f64],
    kind: MetricKind,
    method: &str,
) -> Result<EvalReport> {
    let auc_value = auc(&curve_from_values(confidences, metrics)?)?;
    let auc_oracle = auc(&curve_from_values(metrics, metrics)?)?;
    let auc_random = random_auc_from_values(metrics)?;
    Ok(EvalReport {
        auc: auc_value,
        auc_random,
        auc_oracle,
        nauc: nauc(auc_value, auc_random, auc_oracle)?,
        n_test: metrics.len(),
        metric: kind,
        method: method.to_string(),
    })
}

/// Curve, oracle curve, random baseline and nAUC for a model on a test set.
pub fn evaluate(
    test: &RerankDataset,
    model: &ConfidenceModel,
    kind: MetricKind,
) -> Result<EvalReport> {
    let confidences = score_all(model, test)?;
    let metrics = test.metric_values(kind)?;
    evaluate_values(&confidences, &metrics, kind, model.name())
}
