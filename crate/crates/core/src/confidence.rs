//! Confidence functions over relevance-score vectors.
//!
//! Reference-free functions (`max`, `std`, `gap12`) read the score vector
//! alone. Data-driven functions are fitted on a reference set of
//! `(sorted scores, metric value)` pairs and always consume the ascending
//! sort of the input, which makes every variant invariant to the order in
//! which documents are presented.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::metrics::{sort_scores, MetricKind, RerankDataset};
use crate::optim::{self, LbfgsOptions};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 0.1;
pub const DEFAULT_QUALIFICATION_Q: f64 = 0.25;
pub const DEFAULT_LOGISTIC_LAMBDA: f64 = 0.1;
pub const DEFAULT_COV_EPSILON: f64 = 1e-6;

/// Number of items covered by a fraction `p` of `n`, i.e. `ceil(p * n)`,
/// snapping products that land within round-off of an integer.
pub(crate) fn ceil_count(p: f64, n: usize) -> usize {
    let x = p * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * (1.0 + x.abs()) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Largest score.
pub fn conf_max(z: &[f64]) -> f64 {
    z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Population standard deviation (divides by `k`).
pub fn conf_std(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Gap between the highest and second-highest score. Requires `k >= 2`.
pub fn conf_gap12(z: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in z {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

/// One element of the fitting set: sorted scores and the instance metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePair {
    pub sorted_scores: Vec<f64>,
    pub metric_value: f64,
}

impl ReferencePair {
    pub fn new(sorted_scores: Vec<f64>, metric_value: f64) -> Result<Self> {
        if sorted_scores.is_empty() || sorted_scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScores(
                "reference scores must be non-empty and finite".into(),
            ));
        }
        if sorted_scores.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidScores(
                "reference scores must be sorted ascending".into(),
            ));
        }
        if !metric_value.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "non-finite metric value {metric_value}"
            )));
        }
        Ok(Self {
            sorted_scores,
            metric_value,
        })
    }
}

/// Turns a labeled dataset into fitting pairs, one per instance, in order.
pub fn derive_reference(ds: &RerankDataset, kind: MetricKind) -> Result<Vec<ReferencePair>> {
    ds.iter()
        .map(|inst| {
            Ok(ReferencePair {
                sorted_scores: sort_scores(inst.scores()),
                metric_value: inst.metric(kind)?,
            })
        })
        .collect()
}

fn common_k(pairs: &[ReferencePair]) -> Result<usize> {
    let k = pairs
        .first()
        .map(|p| p.sorted_scores.len())
        .ok_or(Error::TooFewSamples {
            needed: 1,
            found: 0,
        })?;
    if let Some(p) = pairs.iter().find(|p| p.sorted_scores.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.sorted_scores.len(),
        });
    }
    Ok(k)
}

fn check_dim(expected: usize, z: &[f64]) -> Result<()> {
    if z.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: z.len(),
        });
    }
    Ok(())
}

// ─── ridge ──────────────────────────────────────────────────────────────────

/// Linear model on sorted scores fitted by ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRidgeModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub ridge_lambda: f64,
}

impl LinearRidgeModel {
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    /// Prediction for an already sorted vector.
    pub fn predict_sorted(&self, sorted: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(sorted)
                .map(|(b, s)| b * s)
                .sum::<f64>()
    }
}

/// Ridge fit with an unpenalized intercept, solved in closed form on
/// mean-centered features: `beta = (Xc^T Xc + lambda I)^-1 Xc^T yc`.
pub fn fit_linear(pairs: &[ReferencePair], ridge_lambda: f64) -> Result<LinearRidgeModel> {
    if !(ridge_lambda >= 0.0) || !ridge_lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "ridge lambda must be finite and >= 0, got {ridge_lambda}"
        )));
    }
    if pairs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: pairs.len(),
        });
    }
    let k = common_k(pairs)?;
    let n = pairs.len() as f64;

    let mut x_mean = vec![0.0; k];
    let mut y_mean = 0.0;
    for p in pairs {
        x_mean
            .iter_mut()
            .zip(&p.sorted_scores)
            .for_each(|(m, v)| *m += v);
        y_mean += p.metric_value;
    }
    x_mean.iter_mut().for_each(|m| *m /= n);
    y_mean /= n;

    let mut gram = SquareMatrix::zeros(k);
    let mut rhs = vec![0.0; k];
    let mut centered = vec![0.0; k];
    for p in pairs {
        for (c, (v, m)) in centered.iter_mut().zip(p.sorted_scores.iter().zip(&x_mean)) {
            *c = v - m;
        }
        let dy = p.metric_value - y_mean;
        for i in 0..k {
            rhs[i] += centered[i] * dy;
            for j in 0..=i {
                gram[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    gram.add_diagonal(ridge_lambda);

    let chol = Cholesky::new(&gram).ok_or(Error::DegenerateDesign)?;
    let coefficients = chol.solve(&rhs);
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    Ok(LinearRidgeModel {
        intercept,
        coefficients,
        ridge_lambda,
    })
}

/// `beta_0 + sum_j beta_j * s_j(z)` on the ascending sort of `z`.
pub fn conf_linear(model: &LinearRidgeModel, z: &[f64]) -> Result<f64> {
    check_dim(model.k(), z)?;
    Ok(model.predict_sorted(&sort_scores(z)))
}

// ─── instance qualification ─────────────────────────────────────────────────

/// Three-way split of reference instances into bad (-1), average (0) and
/// good (+1) by metric value.
#[derive(Debug, Clone, PartialEq)]
pub struct Qualification {
    pub labels: Vec<i8>,
    pub m_minus: f64,
    pub m_plus: f64,
}

impl Qualification {
    pub fn count(&self, class: i8) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }
}

/// Nearest-rank quantile of an ascending slice: the `ceil(p n)`-th value.
pub(crate) fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = ceil_count(p, sorted.len()).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "qualification threshold must lie in (0, 0.5), got {q}"
        )));
    }
    Ok(())
}

/// Labels `+1` when the metric is strictly above the `(1-q)` nearest-rank
/// quantile, `-1` when strictly below the `q` quantile, `0` otherwise.
pub fn qualify_classes(pairs: &[ReferencePair], q: f64) -> Result<Qualification> {
    check_q(q)?;
    let needed = ceil_count(1.0 / q, 1);
    if pairs.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            found: pairs.len(),
        });
    }
    let mut metrics: Vec<f64> = pairs.iter().map(|p| p.metric_value).collect();
    metrics.sort_by(f64::total_cmp);
    let m_minus = nearest_rank(&metrics, q);
    let m_plus = nearest_rank(&metrics, 1.0 - q);

    let labels: Vec<i8> = pairs
        .iter()
        .map(|p| {
            if p.metric_value > m_plus {
                1
            } else if p.metric_value < m_minus {
                -1
            } else {
                0
            }
        })
        .collect();
    let out = Qualification {
        labels,
        m_minus,
        m_plus,
    };
    for class in [-1, 0, 1] {
        if out.count(class) == 0 {
            return Err(Error::EmptyClass { class });
        }
    }
    Ok(out)
}

// ─── multinomial logistic ───────────────────────────────────────────────────

/// Class order of the logistic weights.
pub const LOGISTIC_CLASSES: [i8; 3] = [-1, 0, 1];

/// Three-class softmax regression on sorted scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic3Model {
    /// One row per class in [`LOGISTIC_CLASSES`] order: `k` weights then a bias.
    pub weights: [Vec<f64>; 3],
    pub qualification_q: f64,
    pub l2_lambda: f64,
    /// False when the optimizer hit its iteration cap before the gradient
    /// tolerance; the model is still usable.
    pub converged: bool,
}

impl Logistic3Model {
    pub fn k(&self) -> usize {
        self.weights[0].len() - 1
    }

    /// Model whose every prediction is the uniform distribution.
    pub fn zeros(k: usize) -> Self {
        Self {
            weights: [vec![0.0; k + 1], vec![0.0; k + 1], vec![0.0; k + 1]],
            qualification_q: DEFAULT_QUALIFICATION_Q,
            l2_lambda: DEFAULT_LOGISTIC_LAMBDA,
            converged: true,
        }
    }

    /// Class probabilities `(pi_-1, pi_0, pi_+1)` for a sorted vector.
    pub fn probabilities_sorted(&self, sorted: &[f64]) -> [f64; 3] {
        let k = self.k();
        let logits = self
            .weights
            .clone()
            .map(|w| w[k] + w[..k].iter().zip(sorted).map(|(a, b)| a * b).sum::<f64>());
        softmax3(logits)
    }

    pub fn probabilities(&self, z: &[f64]) -> Result<[f64; 3]> {
        check_dim(self.k(), z)?;
        Ok(self.probabilities_sorted(&sort_scores(z)))
    }

    /// Fits weights on explicit features and class labels in {-1, 0, +1}.
    ///
    /// Minimizes `mean NLL + (l2_lambda / 2) * ||W||^2` with biases left
    /// unpenalized, starting from all-zero weights.
    pub fn fit_labeled(features: &[Vec<f64>], labels: &[i8], l2_lambda: f64) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                found: labels.len(),
            });
        }
        if !(l2_lambda >= 0.0) || !l2_lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "l2 lambda must be finite and >= 0, got {l2_lambda}"
            )));
        }
        let k = features.first().map(Vec::len).ok_or(Error::TooFewSamples {
            needed: 1,
            found: 0,
        })?;
        if let Some(f) = features.iter().find(|f| f.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: f.len(),
            });
        }
        let targets = labels
            .iter()
            .map(|&c| {
                LOGISTIC_CLASSES
                    .iter()
                    .position(|&x| x == c)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown class label {c}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let width = k + 1;
        let n = features.len() as f64;
        let objective = |w: &[f64], grad: &mut [f64]| {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for (x, &t) in features.iter().zip(&targets) {
                let mut logits = [0.0; 3];
                for (c, logit) in logits.iter_mut().enumerate() {
                    let row = &w[c * width..(c + 1) * width];
                    *logit = row[k] + row[..k].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
                loss += lse - logits[t];
                for (c, logit) in logits.iter().enumerate() {
                    let resid = (logit - lse).exp() - if c == t { 1.0 } else { 0.0 };
                    let row = &mut grad[c * width..(c + 1) * width];
                    row[..k]
                        .iter_mut()
                        .zip(x)
                        .for_each(|(g, xi)| *g += resid * xi);
                    row[k] += resid;
                }
            }
            grad.iter_mut().for_each(|g| *g /= n);
            loss /= n;
            for c in 0..3 {
                for j in 0..k {
                    let idx = c * width + j;
                    loss += 0.5 * l2_lambda * w[idx] * w[idx];
                    grad[idx] += l2_lambda * w[idx];
                }
            }
            loss
        };
        let result = optim::minimize(objective, vec![0.0; 3 * width], LbfgsOptions::default());
        let mut rows = result.x.chunks(width).map(<[f64]>::to_vec);
        let weights = [
            rows.next().expect("three rows"),
            rows.next().expect("three rows"),
            rows.next().expect("three rows"),
        ];
        Ok(Self {
            weights,
            qualification_q: DEFAULT_QUALIFICATION_Q,
            l2_lambda,
            converged: result.converged,
        })
    }
}

fn softmax3(logits: [f64; 3]) -> [f64; 3] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|l| (l - max).exp());
    let sum: f64 = e.iter().sum();
    e.map(|v| v / sum)
}

/// Qualifies the reference set, then fits the softmax model on sorted scores.
pub fn fit_logistic3(pairs: &[ReferencePair], q: f64, l2_lambda: f64) -> Result<Logistic3Model> {
    let qual = qualify_classes(pairs, q)?;
    let features: Vec<Vec<f64>> = pairs.iter().map(|p| p.sorted_scores.clone()).collect();
    let mut model = Logistic3Model::fit_labeled(&features, &qual.labels, l2_lambda)?;
    model.qualification_q = q;
    Ok(model)
}

/// `pi_+1(s(z)) - pi_-1(s(z))`, in `[-1, 1]`.
pub fn conf_logistic(model: &Logistic3Model, z: &[f64]) -> Result<f64> {
    let p = model.probabilities(z)?;
    Ok(p[2] - p[0])
}

// ─── Mahalanobis ────────────────────────────────────────────────────────────

/// Class statistics of the good and bad reference instances.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisModel {
    pub mean_good: Vec<f64>,
    pub mean_bad: Vec<f64>,
    pub invcov_good: SquareMatrix,
    pub invcov_bad: SquareMatrix,
    pub qualification_q: f64,
    pub cov_epsilon: f64,
}

fn class_statistics(
    rows: &[&[f64]],
    cov_epsilon: f64,
    class: i8,
) -> Result<(Vec<f64>, SquareMatrix)> {
    if rows.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: rows.len(),
        });
    }
    let k = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; k];
    for r in rows {
        mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = SquareMatrix::zeros(k);
    for r in rows {
        for i in 0..k {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov.add_diagonal(cov_epsilon);
    let inv = Cholesky::new(&cov)
        .ok_or(Error::SingularCovariance { class })?
        .inverse();
    if !inv.is_finite() {
        return Err(Error::SingularCovariance { class });
    }
    Ok((mean, inv))
}

impl MahalanobisModel {
    pub fn k(&self) -> usize {
        self.mean_good.len()
    }

    /// Estimates both class statistics (1/N covariance plus `eps * I`).
    pub fn from_classes(good: &[&[f64]], bad: &[&[f64]], cov_epsilon: f64) -> Result<Self> {
        if !(cov_epsilon >= 0.0) || !cov_epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "covariance epsilon must be finite and >= 0, got {cov_epsilon}"
            )));
        }
        let (mean_good, invcov_good) = class_statistics(good, cov_epsilon, 1)?;
        let (mean_bad, invcov_bad) = class_statistics(bad, cov_epsilon, -1)?;
        if mean_good.len() != mean_bad.len() {
            return Err(Error::DimensionMismatch {
                expected: mean_good.len(),
                found: mean_bad.len(),
            });
        }
        Ok(Self {
            mean_good,
            mean_bad,
            invcov_good,
            invcov_bad,
            qualification_q: DEFAULT_QUALIFICATION_Q,
            cov_epsilon,
        })
    }

    /// Squared Mahalanobis distances `(to good, to bad)` of a sorted vector.
    pub fn distances_sorted(&self, sorted: &[f64]) -> (f64, f64) {
        let diff =
            |mean: &[f64]| -> Vec<f64> { sorted.iter().zip(mean).map(|(a, b)| a - b).collect() };
        (
            self.invcov_good.quadratic_form(&diff(&self.mean_good)),
            self.invcov_bad.quadratic_form(&diff(&self.mean_bad)),
        )
    }

    pub fn confidence_sorted(&self, sorted: &[f64]) -> f64 {
        let (to_good, to_bad) = self.distances_sorted(sorted);
        to_bad - to_good
    }

    /// Same statistics with the good and bad roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mean_good: self.mean_bad.clone(),
            mean_bad: self.mean_good.clone(),
            invcov_good: self.invcov_bad.clone(),
            invcov_bad: self.invcov_good.clone(),
            ..self.clone()
        }
    }
}

/// Fits class statistics on the qualified good and bad reference instances.
pub fn fit_mahalanobis(
    pairs: &[ReferencePair],
    q: f64,
    cov_epsilon: f64,
) -> Result<MahalanobisModel> {
    let qual = qualify_classes(pairs, q)?;
    let pick = |class: i8| -> Vec<&[f64]> {
        pairs
            .iter()
            .zip(&qual.labels)
            .filter(|(_, &c)| c == class)
            .map(|(p, _)| p.sorted_scores.as_slice())
            .collect()
    };
    let mut model = MahalanobisModel::from_classes(&pick(1), &pick(-1), cov_epsilon)?;
    model.qualification_q = q;
    Ok(model)
}

/// Distance to the bad class minus distance to the good class.
pub fn conf_mahalanobis(model: &MahalanobisModel, z: &[f64]) -> Result<f64> {
    check_dim(model.k(), z)?;
    Ok(model.confidence_sorted(&sort_scores(z)))
}

// ─── tagged union and fitting specs ─────────────────────────────────────────

/// A ready-to-use confidence function.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceModel {
    MaxScore,
    StdDev,
    Gap12,
    LinearRidge(LinearRidgeModel),
    Logistic3(Logistic3Model),
    Mahalanobis(MahalanobisModel),
}

impl ConfidenceModel {
    pub fn name(&self) -> &'static str {
        self.method().name()
    }

    pub fn method(&self) -> Method {
        match self {
            ConfidenceModel::MaxScore => Method::Max,
            ConfidenceModel::StdDev => Method::Std,
            ConfidenceModel::Gap12 => Method::Gap12,
            ConfidenceModel::LinearRidge(m) => Method::Linear {
                ridge_lambda: m.ridge_lambda,
            },
            ConfidenceModel::Logistic3(m) => Method::Logistic {
                q: m.qualification_q,
                l2_lambda: m.l2_lambda,
            },
            ConfidenceModel::Mahalanobis(m) => Method::Mahalanobis {
                q: m.qualification_q,
                cov_epsilon: m.cov_epsilon,
            },
        }
    }

    /// Dimension the model was fitted on; `None` for reference-free variants.
    pub fn k(&self) -> Option<usize> {
        match self {
            ConfidenceModel::MaxScore | ConfidenceModel::StdDev | ConfidenceModel::Gap12 => None,
            ConfidenceModel::LinearRidge(m) => Some(m.k()),
            ConfidenceModel::Logistic3(m) => Some(m.k()),
            ConfidenceModel::Mahalanobis(m) => Some(m.k()),
        }
    }

    pub fn score(&self, z: &[f64]) -> Result<f64> {
        if z.len() < 2 {
            return Err(Error::InvalidScores(format!(
                "need at least 2 scores, got {}",
                z.len()
            )));
        }
        match self {
            ConfidenceModel::MaxScore => Ok(conf_max(z)),
            ConfidenceModel::StdDev => Ok(conf_std(z)),
            ConfidenceModel::Gap12 => Ok(conf_gap12(z)),
            ConfidenceModel::LinearRidge(m) => conf_linear(m, z),
            ConfidenceModel::Logistic3(m) => conf_logistic(m, z),
            ConfidenceModel::Mahalanobis(m) => conf_mahalanobis(m, z),
        }
    }
}

/// Confidence for every instance, in dataset order.
pub fn score_all(model: &ConfidenceModel, ds: &RerankDataset) -> Result<Vec<f64>> {
    if let Some(k) = model.k() {
        check_dim(k, &vec![0.0; ds.k()])?;
    }
    ds.iter().map(|inst| model.score(inst.scores())).collect()
}

/// Which confidence function to build, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Max,
    Std,
    Gap12,
    #[serde(rename = "lin")]
    Linear {
        ridge_lambda: f64,
    },
    #[serde(rename = "log")]
    Logistic {
        q: f64,
        l2_lambda: f64,
    },
    #[serde(rename = "mah")]
    Mahalanobis {
        q: f64,
        cov_epsilon: f64,
    },
}

impl Method {
    pub fn linear() -> Self {
        Method::Linear {
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
        }
    }

    pub fn logistic() -> Self {
        Method::Logistic {
            q: DEFAULT_QUALIFICATION_Q,
            l2_lambda: DEFAULT_LOGISTIC_LAMBDA,
        }
    }

    pub fn mahalanobis() -> Self {
        Method::Mahalanobis {
            q: DEFAULT_QUALIFICATION_Q,
            cov_epsilon: DEFAULT_COV_EPSILON,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Max => "max",
            Method::Std => "std",
            Method::Gap12 => "gap12",
            Method::Linear { .. } => "lin",
            Method::Logistic { .. } => "log",
            Method::Mahalanobis { .. } => "mah",
        }
    }

    pub fn is_data_driven(&self) -> bool {
        matches!(
            self,
            Method::Linear { .. } | Method::Logistic { .. } | Method::Mahalanobis { .. }
        )
    }

    /// Builds the confidence function, fitting on `reference` when needed.
    pub fn fit(&self, reference: &RerankDataset, kind: MetricKind) -> Result<ConfidenceModel> {
        Ok(match *self {
            Method::Max => ConfidenceModel::MaxScore,
            Method::Std => ConfidenceModel::StdDev,
            Method::Gap12 => ConfidenceModel::Gap12,
            Method::Linear { ridge_lambda } => ConfidenceModel::LinearRidge(fit_linear(
                &derive_reference(reference, kind)?,
                ridge_lambda,
            )?),
            Method::Logistic { q, l2_lambda } => ConfidenceModel::Logistic3(fit_logistic3(
                &derive_reference(reference, kind)?,
                q,
                l2_lambda,
            )?),
            Method::Mahalanobis { q, cov_epsilon } => ConfidenceModel::Mahalanobis(
                fit_mahalanobis(&derive_reference(reference, kind)?, q, cov_epsilon)?,
            ),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Parses a method name with default hyperparameters.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Method::Max),
            "std" => Ok(Method::Std),
            "gap12" => Ok(Method::Gap12),
            "lin" => Ok(Method::linear()),
            "log" => Ok(Method::logistic()),
            "mah" => Ok(Method::mahalanobis()),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}
