//! Threshold calibration on a reference set and the studies built on it:
//! calibration error, domain transfer, reference-size sweep, qualification
//! sweep and Pearson correlation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::{ceil_count, score_all, ConfidenceModel, Method};
use crate::dataio::{split_indices, subsample_indices};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::metrics::{mean, MetricKind, RerankDataset};

/// What the threshold should achieve on the reference set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum CalibrationTarget {
    Rate { alpha: f64 },
    Performance { p: f64, metric: MetricKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Predict iff confidence > tau; `-inf` disables abstention.
    #[serde(with = "signed_inf")]
    pub tau: f64,
    pub expected_rate: f64,
    /// Mean metric of the predicted reference instances, when known and
    /// non-empty.
    pub expected_performance: Option<f64>,
}

/// JSON has no infinities; `-inf` thresholds are written as `null`.
mod signed_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Fraction of confidences at or below `tau`.
pub fn abstention_rate(confidences: &[f64], tau: f64) -> f64 {
    confidences.iter().filter(|&&c| !(c > tau)).count() as f64 / confidences.len() as f64
}

/// Mean metric over instances with confidence above `tau`; `None` if none.
pub fn performance_above(confidences: &[f64], metrics: &[f64], tau: f64) -> Option<f64> {
    let kept: Vec<f64> = confidences
        .iter()
        .zip(metrics)
        .filter(|(c, _)| **c > tau)
        .map(|(_, m)| *m)
        .collect();
    (!kept.is_empty()).then(|| mean(&kept))
}

/// `tau` is the `ceil(alpha * N)`-th smallest reference confidence, so the
/// achieved reference rate is the smallest achievable rate `>= alpha`.
pub fn threshold_for_rate(
    ref_confidences: &[f64],
    alpha: f64,
    ref_metrics: Option<&[f64]>,
) -> Result<CalibrationResult> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if ref_confidences.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(m) = ref_metrics {
        if m.len() != ref_confidences.len() {
            return Err(Error::DimensionMismatch {
                expected: ref_confidences.len(),
                found: m.len(),
            });
        }
    }
    let mut sorted = ref_confidences.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ceil_count(alpha, sorted.len());
    let tau = if rank == 0 {
        f64::NEG_INFINITY
    } else {
        sorted[rank - 1]
    };
    Ok(CalibrationResult {
        tau,
        expected_rate: abstention_rate(ref_confidences, tau),
        expected_performance: ref_metrics.and_then(|m| performance_above(ref_confidences, m, tau)),
    })
}

/// Lowest-abstention threshold whose reference performance reaches
/// `target_p`, searched over every achievable rate `j / n`, `j < n`.
pub fn threshold_for_performance_values(
    ref_confidences: &[f64],
    ref_metrics: &[f64],
    target_p: f64,
) -> Result<CalibrationResult> {
    if ref_confidences.len() != ref_metrics.len() {
        return Err(Error::DimensionMismatch {
            expected: ref_metrics.len(),
            found: ref_confidences.len(),
        });
    }
    if !target_p.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "target performance {target_p} is not finite"
        )));
    }
    let n = ref_confidences.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ref_confidences[a].total_cmp(&ref_confidences[b]));

    // candidate thresholds: -inf, then each distinct sorted confidence
    let mut candidates = vec![f64::NEG_INFINITY];
    for &i in &order[..n - 1] {
        let c = ref_confidences[i];
        if candidates.last() != Some(&c) {
            candidates.push(c);
        }
    }
    for tau in candidates {
        if let Some(p) = performance_above(ref_confidences, ref_metrics, tau) {
            if p >= target_p {
                return Ok(CalibrationResult {
                    tau,
                    expected_rate: abstention_rate(ref_confidences, tau),
                    expected_performance: Some(p),
                });
            }
        }
    }
    Err(Error::Unreachable { target: target_p })
}

pub fn threshold_for_performance(
    reference: &RerankDataset,
    model: &ConfidenceModel,
    kind: MetricKind,
    target_p: f64,
) -> Result<CalibrationResult> {
    let conf = score_all(model, reference)?;
    let metrics = reference.metric_values(kind)?;
    threshold_for_performance_values(&conf, &metrics, target_p)
}

/// Calibrates on the reference confidences and measures the test outcome.
pub fn calibrate(
    ref_conf: &[f64],
    ref_metrics: &[f64],
    target: CalibrationTarget,
) -> Result<CalibrationResult> {
    match target {
        CalibrationTarget::Rate { alpha } => threshold_for_rate(ref_conf, alpha, Some(ref_metrics)),
        CalibrationTarget::Performance { p, .. } => {
            threshold_for_performance_values(ref_conf, ref_metrics, p)
        }
    }
}

/// Target-vs-achieved errors for one calibration target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeReport {
    pub target: CalibrationTarget,
    /// Mean |achieved test rate - target rate|. For performance targets the
    /// target rate is the rate the reference set needed.
    pub mae_rate: f64,
    /// Mean |achieved test performance - reference performance at tau|, over
    /// seeds whose test prediction set is non-empty.
    pub mae_performance: Option<f64>,
    pub seeds: usize,
    pub performance_seeds: usize,
}

/// Absolute deviations of one reference/test pair, per target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOutcome {
    pub rate_error: f64,
    pub performance_error: Option<f64>,
}

/// Fits on `reference`, calibrates each target and measures it on `test`.
pub fn calibration_outcomes(
    reference: &RerankDataset,
    test: &RerankDataset,
    method: &Method,
    kind: MetricKind,
    targets: &[CalibrationTarget],
) -> Result<Vec<CalibrationOutcome>> {
    let model = method.fit(reference, kind)?;
    let ref_conf = score_all(&model, reference)?;
    let ref_metrics = reference.metric_values(kind)?;
    let test_conf = score_all(&model, test)?;
    let test_metrics = test.metric_values(kind)?;
    targets
        .iter()
        .map(|&target| {
            let cal = calibrate(&ref_conf, &ref_metrics, target)?;
            let target_rate = match target {
                CalibrationTarget::Rate { alpha } => alpha,
                CalibrationTarget::Performance { .. } => cal.expected_rate,
            };
            let target_perf = match target {
                CalibrationTarget::Rate { .. } => cal.expected_performance,
                CalibrationTarget::Performance { p, .. } => Some(p),
            };
            let achieved_perf = performance_above(&test_conf, &test_metrics, cal.tau);
            Ok(CalibrationOutcome {
                rate_error: (abstention_rate(&test_conf, cal.tau) - target_rate).abs(),
                performance_error: target_perf.zip(achieved_perf).map(|(t, a)| (a - t).abs()),
            })
        })
        .collect()
}

fn aggregate(
    targets: &[CalibrationTarget],
    per_seed: &[Vec<CalibrationOutcome>],
) -> Vec<MaeReport> {
    targets
        .iter()
        .enumerate()
        .map(|(t, &target)| {
            let rates: Vec<f64> = per_seed.iter().map(|o| o[t].rate_error).collect();
            let perfs: Vec<f64> = per_seed
                .iter()
                .filter_map(|o| o[t].performance_error)
                .collect();
            MaeReport {
                target,
                mae_rate: mean(&rates),
                mae_performance: (!perfs.is_empty()).then(|| mean(&perfs)),
                seeds: per_seed.len(),
                performance_seeds: perfs.len(),
            }
        })
        .collect()
}

/// Repeats split / fit / calibrate / measure for `seeds` seeds starting at
/// `base_seed` and averages absolute errors. Seeds run in parallel; the
/// reduction is ordered by seed.
pub fn calibration_mae(
    ds: &RerankDataset,
    method: &Method,
    kind: MetricKind,
    targets: &[CalibrationTarget],
    seeds: usize,
    base_seed: u64,
    split_ratio: f64,
) -> Result<Vec<MaeReport>> {
    if seeds == 0 {
        return Err(Error::InvalidConfig("seeds must be at least 1".into()));
    }
    let per_seed = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = base_seed.wrapping_add(s);
            let (r, t) = split_indices(ds.len(), split_ratio, seed)?;
            calibration_outcomes(&ds.subset(&r)?, &ds.subset(&t)?, method, kind, targets)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(targets, &per_seed))
}

/// Calibration errors when the test set is the reference set itself.
pub fn calibration_mae_in_sample(
    ds: &RerankDataset,
    method: &Method,
    kind: MetricKind,
    targets: &[CalibrationTarget],
) -> Result<Vec<MaeReport>> {
    let outcomes = calibration_outcomes(ds, ds, method, kind, targets)?;
    Ok(aggregate(targets, &[outcomes]))
}

/// Fit on one dataset, evaluate on another.
pub fn domain_transfer(
    reference: &RerankDataset,
    test: &RerankDataset,
    method: &Method,
    kind: MetricKind,
) -> Result<EvalReport> {
    if reference.k() != test.k() {
        return Err(Error::DimensionMismatch {
            expected: reference.k(),
            found: test.k(),
        });
    }
    evaluate(test, &method.fit(reference, kind)?, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefsizeRow {
    pub size: usize,
    pub method_nauc: f64,
    pub baseline_nauc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefsizeTable {
    pub method: String,
    pub baseline: String,
    pub rows: Vec<RefsizeRow>,
    /// Smallest grid size at which the method's mean nAUC reaches the
    /// baseline's; `None` if it never does on the grid.
    pub break_even: Option<usize>,
}

/// Mean nAUC of `method` and `baseline` when fitted on reference subsamples
/// of each size, averaged over seeds.
#[allow(clippy::too_many_arguments)]
pub fn refsize_sweep(
    ds: &RerankDataset,
    method: &Method,
    baseline: &Method,
    kind: MetricKind,
    sizes: &[usize],
    seeds: usize,
    base_seed: u64,
    split_ratio: f64,
) -> Result<RefsizeTable> {
    if seeds == 0 {
        return Err(Error::InvalidConfig("seeds must be at least 1".into()));
    }
    let per_seed = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let seed = base_seed.wrapping_add(s);
            let (r, t) = split_indices(ds.len(), split_ratio, seed)?;
            let test = ds.subset(&t)?;
            sizes
                .iter()
                .map(|&size| {
                    if size > r.len() {
                        return Err(Error::ReferenceTooSmall {
                            size: r.len(),
                            reason: format!("requested {size} reference instances"),
                        });
                    }
                    let picked: Vec<usize> = subsample_indices(r.len(), size, seed)
                        .into_iter()
                        .map(|i| r[i])
                        .collect();
                    let too_small = |e: Error| match e {
                        Error::TooFewSamples { .. }
                        | Error::EmptyDataset
                        | Error::EmptyClass { .. } => Error::ReferenceTooSmall {
                            size,
                            reason: e.to_string(),
                        },
                        other => other,
                    };
                    let reference = ds.subset(&picked).map_err(too_small)?;
                    let m = method.fit(&reference, kind).map_err(too_small)?;
                    let b = baseline.fit(&reference, kind).map_err(too_small)?;
                    Ok((
                        evaluate(&test, &m, kind)?.nauc,
                        evaluate(&test, &b, kind)?.nauc,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<RefsizeRow> = sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| RefsizeRow {
            size,
            method_nauc: per_seed.iter().map(|r| r[i].0).sum::<f64>() / seeds as f64,
            baseline_nauc: per_seed.iter().map(|r| r[i].1).sum::<f64>() / seeds as f64,
        })
        .collect();
    let break_even = rows
        .iter()
        .filter(|r| r.method_nauc >= r.baseline_nauc)
        .map(|r| r.size)
        .min();
    Ok(RefsizeTable {
        method: method.name().into(),
        baseline: baseline.name().into(),
        rows,
        break_even,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationRow {
    pub q: f64,
    /// `None` when fitting or evaluation failed for any seed.
    pub nauc_log: Option<f64>,
    pub nauc_mah: Option<f64>,
}

/// nAUC of the logistic and Mahalanobis confidences for each qualification
/// threshold, averaged over seeds.
#[allow(clippy::too_many_arguments)]
pub fn qualification_sweep(
    ds: &RerankDataset,
    kind: MetricKind,
    q_values: &[f64],
    seeds: usize,
    base_seed: u64,
    split_ratio: f64,
    l2_lambda: f64,
    cov_epsilon: f64,
) -> Result<Vec<QualificationRow>> {
    if seeds == 0 {
        return Err(Error::InvalidConfig("seeds must be at least 1".into()));
    }
    if let Some(q) = q_values.iter().find(|q| !(**q > 0.0 && **q < 0.5)) {
        return Err(Error::InvalidConfig(format!(
            "qualification threshold must lie in (0, 0.5), got {q}"
        )));
    }
    let splits = (0..seeds as u64)
        .map(|s| {
            let (r, t) = split_indices(ds.len(), split_ratio, base_seed.wrapping_add(s))?;
            Ok((ds.subset(&r)?, ds.subset(&t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let cell = |method: Method| -> Option<f64> {
        let scores: Option<Vec<f64>> = splits
            .par_iter()
            .map(|(r, t)| {
                let m = method.fit(r, kind).ok()?;
                evaluate(t, &m, kind).ok().map(|rep| rep.nauc)
            })
            .collect();
        scores.map(|s| mean(&s))
    };
    Ok(q_values
        .iter()
        .map(|&q| QualificationRow {
            q,
            nauc_log: cell(Method::Logistic { q, l2_lambda }),
            nauc_mah: cell(Method::Mahalanobis { q, cov_epsilon }),
        })
        .collect())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            found: xs.len(),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
