//! Dataset files, preprocessing, splitting, synthetic data and model files.
//!
//! Datasets are JSONL, one instance per line:
//!
//! ```text
//! {"id": "q1", "scores": [0.9, 0.1], "labels": [1, 0]}
//! ```
//!
//! Every stochastic routine draws from ChaCha8 seeded with a `u64`. Per-instance
//! work uses stream `i` of that seed so results do not depend on processing
//! order.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::confidence::{
    ConfidenceModel, LinearRidgeModel, Logistic3Model, MahalanobisModel, LOGISTIC_CLASSES,
};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::metrics::{RerankDataset, RerankInstance};

/// Identifier of the generator behind every seeded operation.
pub const RNG_ALGORITHM: &str = "chacha8";

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Generator for stream `stream` of `seed`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ─── JSONL datasets ─────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    id: String,
    scores: Vec<f64>,
    labels: Vec<u8>,
}

/// An instance as found in a raw corpus: any length, possibly no positives.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    pub id: String,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

fn parse_records<R: BufRead>(reader: R) -> Result<Vec<(usize, InstanceRecord)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.labels.iter().any(|&l| l > 1) {
            return Err(Error::Parse {
                line: i + 1,
                message: "labels must be 0 or 1".into(),
            });
        }
        out.push((i + 1, rec));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(out)
}

/// Parses and validates a JSONL dataset, preserving line order.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<RerankDataset> {
    let instances = parse_records(reader)?
        .into_iter()
        .map(|(line, rec)| {
            let labels = rec.labels.iter().map(|&l| l == 1).collect();
            RerankInstance::from_parts(rec.id, rec.scores, labels).map_err(|e| match e {
                e @ Error::NoPositive { .. } => e,
                other => Error::Parse {
                    line,
                    message: other.to_string(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RerankDataset::new(instances)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<RerankDataset> {
    read_jsonl(BufReader::new(fs::File::open(path)?))
}

/// Parses a raw corpus without the dataset invariants.
pub fn read_raw_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawInstance>> {
    Ok(parse_records(reader)?
        .into_iter()
        .map(|(_, rec)| RawInstance {
            id: rec.id,
            scores: rec.scores,
            labels: rec.labels.iter().map(|&l| l == 1).collect(),
        })
        .collect())
}

pub fn load_raw_jsonl(path: impl AsRef<Path>) -> Result<Vec<RawInstance>> {
    read_raw_jsonl(BufReader::new(fs::File::open(path)?))
}

fn record_line(id: &str, scores: &[f64], labels: &[bool]) -> String {
    let rec = InstanceRecord {
        id: id.to_string(),
        scores: scores.to_vec(),
        labels: labels.iter().map(|&l| u8::from(l)).collect(),
    };
    serde_json::to_string(&rec).expect("records always serialize")
}

pub fn write_jsonl<W: Write>(ds: &RerankDataset, mut w: W) -> Result<()> {
    for inst in ds {
        writeln!(w, "{}", record_line(&inst.id, inst.scores(), inst.labels()))?;
    }
    Ok(())
}

pub fn dataset_to_jsonl(ds: &RerankDataset) -> String {
    let mut buf = Vec::new();
    write_jsonl(ds, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

pub fn raw_to_jsonl(raws: &[RawInstance]) -> String {
    raws.iter()
        .map(|r| record_line(&r.id, &r.scores, &r.labels) + "\n")
        .collect()
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn save_jsonl(ds: &RerankDataset, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, dataset_to_jsonl(ds).as_bytes())
}

// ─── preprocessing ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub target_k: usize,
    pub max_positives: usize,
    pub rng_seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_k: 10,
            max_positives: 5,
            rng_seed: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_k < 2 {
            return Err(Error::InvalidConfig("target_k must be at least 2".into()));
        }
        if self.max_positives < 1 || self.max_positives > self.target_k {
            return Err(Error::InvalidConfig(format!(
                "max_positives must lie in [1, {}], got {}",
                self.target_k, self.max_positives
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub instances: Vec<RerankInstance>,
    pub discards: Vec<Discard>,
}

impl Preprocessed {
    pub fn into_dataset(self) -> Result<RerankDataset> {
        RerankDataset::new(self.instances)
    }
}

fn preprocess_one(
    raw: &RawInstance,
    cfg: &PreprocessConfig,
    stream: u64,
) -> std::result::Result<RerankInstance, String> {
    if raw.scores.len() != raw.labels.len() {
        return Err(format!(
            "{} scores but {} labels",
            raw.scores.len(),
            raw.labels.len()
        ));
    }
    if raw.scores.iter().any(|v| !v.is_finite()) {
        return Err("non-finite score".into());
    }
    if raw.scores.len() < cfg.target_k {
        return Err(format!(
            "fewer than {} documents ({})",
            cfg.target_k,
            raw.scores.len()
        ));
    }
    let positives: Vec<usize> = (0..raw.labels.len()).filter(|&i| raw.labels[i]).collect();
    let negatives: Vec<usize> = (0..raw.labels.len()).filter(|&i| !raw.labels[i]).collect();
    if positives.is_empty() {
        return Err("no positive documents".into());
    }
    let n_pos = positives.len().min(cfg.max_positives);
    let n_neg = cfg.target_k - n_pos;
    if negatives.len() < n_neg {
        return Err(format!(
            "insufficient negatives (need {n_neg}, have {})",
            negatives.len()
        ));
    }

    let mut rng = seeded_rng(cfg.rng_seed, stream);
    let mut chosen: Vec<usize> = index::sample(&mut rng, positives.len(), n_pos)
        .into_iter()
        .map(|i| positives[i])
        .chain(
            index::sample(&mut rng, negatives.len(), n_neg)
                .into_iter()
                .map(|i| negatives[i]),
        )
        .collect();
    chosen.shuffle(&mut rng);

    let scores = chosen.iter().map(|&i| raw.scores[i]).collect();
    let labels = chosen.iter().map(|&i| raw.labels[i]).collect();
    RerankInstance::from_parts(raw.id.clone(), scores, labels).map_err(|e| e.to_string())
}

/// Samples up to `max_positives` positives per raw instance and fills to
/// `target_k` with negatives. Instances that cannot be completed are listed
/// in the discard report, never dropped silently.
pub fn preprocess_raw(raws: &[RawInstance], cfg: &PreprocessConfig) -> Result<Preprocessed> {
    cfg.validate()?;
    let mut instances = Vec::new();
    let mut discards = Vec::new();
    for (i, raw) in raws.iter().enumerate() {
        match preprocess_one(raw, cfg, i as u64) {
            Ok(inst) => instances.push(inst),
            Err(reason) => discards.push(Discard {
                id: raw.id.clone(),
                reason,
            }),
        }
    }
    Ok(Preprocessed {
        instances,
        discards,
    })
}

// ─── splitting ──────────────────────────────────────────────────────────────

/// Random partition of `0..n` into `(reference, test)` index lists, each
/// sorted ascending. The reference side gets `round(ratio * n)` indices.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let n_ref = (ratio * n as f64).round() as usize;
    if n_ref == 0 || n_ref >= n {
        return Err(Error::TooSmallToSplit { n, ratio });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seeded_rng(seed, 0));
    let mut reference = perm[..n_ref].to_vec();
    let mut test = perm[n_ref..].to_vec();
    reference.sort_unstable();
    test.sort_unstable();
    Ok((reference, test))
}

/// Reference/test split; both sides keep the original instance order.
pub fn split_reference_test(
    ds: &RerankDataset,
    ratio: f64,
    seed: u64,
) -> Result<(RerankDataset, RerankDataset)> {
    let (r, t) = split_indices(ds.len(), ratio, seed)?;
    Ok((ds.subset(&r)?, ds.subset(&t)?))
}

/// `size` distinct indices of `0..n`, sorted ascending.
pub fn subsample_indices(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut idx = index::sample(&mut seeded_rng(seed, 1), n, size.min(n)).into_vec();
    idx.sort_unstable();
    idx
}

// ─── synthetic data ─────────────────────────────────────────────────────────

/// Generator settings for synthetic reranking data.
///
/// Each instance draws a difficulty `d ~ U(0, 1)`; positive scores are
/// `N(d * separability, noise_sigma)` and negatives `N(0, noise_sigma)`, so
/// the achievable metric is tied to the shape of the score vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_instances: usize,
    pub k: usize,
    pub separability: f64,
    pub noise_sigma: f64,
    pub positives_range: (usize, usize),
    pub rng_seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.positives_range;
        let problem = if self.n_instances == 0 {
            Some("n_instances must be positive".to_string())
        } else if self.k < 2 {
            Some("k must be at least 2".to_string())
        } else if !(self.separability >= 0.0 && self.separability.is_finite()) {
            Some(format!(
                "separability must be finite and >= 0, got {}",
                self.separability
            ))
        } else if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            Some(format!(
                "noise_sigma must be finite and > 0, got {}",
                self.noise_sigma
            ))
        } else if lo < 1 || lo > hi || hi > self.k - 1 {
            Some(format!(
                "positives_range ({lo}, {hi}) must lie within [1, {}]",
                self.k - 1
            ))
        } else {
            None
        };
        problem.map_or(Ok(()), |p| Err(Error::InvalidConfig(p)))
    }
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<RerankDataset> {
    cfg.validate()?;
    let noise =
        Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let (lo, hi) = cfg.positives_range;
    let instances = (0..cfg.n_instances)
        .map(|i| {
            let mut rng = seeded_rng(cfg.rng_seed, i as u64);
            let n_pos = rng.random_range(lo..=hi);
            let difficulty: f64 = rng.random();
            let shift = difficulty * cfg.separability;
            let mut labels: Vec<bool> = (0..cfg.k).map(|j| j < n_pos).collect();
            labels.shuffle(&mut rng);
            let scores = labels
                .iter()
                .map(|&pos| noise.sample(&mut rng) + if pos { shift } else { 0.0 })
                .collect();
            RerankInstance::from_parts(format!("synth-{i}"), scores, labels)
        })
        .collect::<Result<Vec<_>>>()?;
    RerankDataset::new(instances)
}

// ─── model files ────────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinParams {
    intercept: f64,
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinHyper {
    ridge_lambda: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogParams {
    classes: Vec<i8>,
    weights: Vec<Vec<f64>>,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogHyper {
    q: f64,
    l2_lambda: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MahParams {
    mean_good: Vec<f64>,
    mean_bad: Vec<f64>,
    invcov_good: Vec<Vec<f64>>,
    invcov_bad: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MahHyper {
    q: f64,
    cov_epsilon: f64,
}

/// JSON document for a model:
/// `{"variant", "k", "params", "hyper", "format_version": 1}`.
pub fn model_to_json(model: &ConfidenceModel) -> Value {
    let (params, hyper) = match model {
        ConfidenceModel::MaxScore | ConfidenceModel::StdDev | ConfidenceModel::Gap12 => {
            (json!({}), json!({}))
        }
        ConfidenceModel::LinearRidge(m) => (
            json!(LinParams {
                intercept: m.intercept,
                coefficients: m.coefficients.clone(),
            }),
            json!(LinHyper {
                ridge_lambda: m.ridge_lambda
            }),
        ),
        ConfidenceModel::Logistic3(m) => (
            json!(LogParams {
                classes: LOGISTIC_CLASSES.to_vec(),
                weights: m.weights.to_vec(),
                converged: m.converged,
            }),
            json!(LogHyper {
                q: m.qualification_q,
                l2_lambda: m.l2_lambda
            }),
        ),
        ConfidenceModel::Mahalanobis(m) => (
            json!(MahParams {
                mean_good: m.mean_good.clone(),
                mean_bad: m.mean_bad.clone(),
                invcov_good: m.invcov_good.to_rows(),
                invcov_bad: m.invcov_bad.to_rows(),
            }),
            json!(MahHyper {
                q: m.qualification_q,
                cov_epsilon: m.cov_epsilon
            }),
        ),
    };
    json!({
        "variant": model.name(),
        "k": model.k(),
        "params": params,
        "hyper": hyper,
        "format_version": MODEL_FORMAT_VERSION,
    })
}

fn field<'a>(doc: &'a Value, name: &str) -> Result<&'a Value> {
    doc.get(name)
        .ok_or_else(|| Error::Schema(format!("missing field {name:?}")))
}

fn typed<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Schema(format!("{what}: {e}")))
}

fn schema_check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Schema(msg()))
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn checked_invcov(rows: &[Vec<f64>], k: usize, name: &str) -> Result<SquareMatrix> {
    let m = SquareMatrix::from_rows(rows)
        .filter(|m| m.dim() == k && m.is_finite())
        .ok_or_else(|| Error::Schema(format!("{name} must be a finite {k}x{k} matrix")))?;
    schema_check(m.asymmetry() <= 1e-8, || format!("{name} is not symmetric"))?;
    schema_check(Cholesky::new(&m).is_some(), || {
        format!("{name} is not positive definite")
    })?;
    Ok(m)
}

/// Rebuilds a model from its JSON document, validating every invariant.
pub fn model_from_json(doc: &Value) -> Result<ConfidenceModel> {
    let version = field(doc, "format_version")?
        .as_u64()
        .ok_or_else(|| Error::Schema("format_version must be an integer".into()))?;
    schema_check(version == MODEL_FORMAT_VERSION, || {
        format!("unsupported format_version {version}")
    })?;
    let variant = field(doc, "variant")?
        .as_str()
        .ok_or_else(|| Error::Schema("variant must be a string".into()))?;
    let k: Option<usize> = typed(field(doc, "k")?, "k")?;
    let params = field(doc, "params")?;
    let hyper = field(doc, "hyper")?;
    let need_k =
        || k.ok_or_else(|| Error::Schema(format!("variant {variant:?} needs an integer k")));

    let model = match variant {
        "max" => ConfidenceModel::MaxScore,
        "std" => ConfidenceModel::StdDev,
        "gap12" => ConfidenceModel::Gap12,
        "lin" => {
            let k = need_k()?;
            let p: LinParams = typed(params, "params")?;
            let h: LinHyper = typed(hyper, "hyper")?;
            schema_check(p.coefficients.len() == k, || {
                format!("expected {k} coefficients, found {}", p.coefficients.len())
            })?;
            schema_check(
                p.intercept.is_finite() && all_finite(&p.coefficients),
                || "non-finite coefficient".into(),
            )?;
            ConfidenceModel::LinearRidge(LinearRidgeModel {
                intercept: p.intercept,
                coefficients: p.coefficients,
                ridge_lambda: h.ridge_lambda,
            })
        }
        "log" => {
            let k = need_k()?;
            let p: LogParams = typed(params, "params")?;
            let h: LogHyper = typed(hyper, "hyper")?;
            schema_check(p.classes == LOGISTIC_CLASSES, || {
                format!("classes must be {LOGISTIC_CLASSES:?}")
            })?;
            schema_check(
                p.weights.len() == 3 && p.weights.iter().all(|w| w.len() == k + 1 && all_finite(w)),
                || format!("weights must be 3 finite rows of length {}", k + 1),
            )?;
            let mut rows = p.weights.into_iter();
            let mut next = || rows.next().expect("three rows checked");
            ConfidenceModel::Logistic3(Logistic3Model {
                weights: [next(), next(), next()],
                qualification_q: h.q,
                l2_lambda: h.l2_lambda,
                converged: p.converged,
            })
        }
        "mah" => {
            let k = need_k()?;
            let p: MahParams = typed(params, "params")?;
            let h: MahHyper = typed(hyper, "hyper")?;
            schema_check(
                p.mean_good.len() == k
                    && p.mean_bad.len() == k
                    && all_finite(&p.mean_good)
                    && all_finite(&p.mean_bad),
                || format!("class means must be finite vectors of length {k}"),
            )?;
            ConfidenceModel::Mahalanobis(MahalanobisModel {
                invcov_good: checked_invcov(&p.invcov_good, k, "invcov_good")?,
                invcov_bad: checked_invcov(&p.invcov_bad, k, "invcov_bad")?,
                mean_good: p.mean_good,
                mean_bad: p.mean_bad,
                qualification_q: h.q,
                cov_epsilon: h.cov_epsilon,
            })
        }
        other => return Err(Error::Schema(format!("unknown variant {other:?}"))),
    };
    Ok(model)
}

pub fn model_to_string(model: &ConfidenceModel) -> String {
    serde_json::to_string_pretty(&model_to_json(model)).expect("model json serializes") + "\n"
}

pub fn model_from_str(text: &str) -> Result<ConfidenceModel> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    model_from_json(&doc)
}

pub fn save_model(model: &ConfidenceModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, model_to_string(model).as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ConfidenceModel> {
    model_from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confidence::Method;
    use crate::metrics::MetricKind;

    #[test]
    fn load_single_line() {
        let ds = read_jsonl(r#"{"id":"q1","scores":[0.9,0.1],"labels":[1,0]}"#.as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.instances()[0].id, "q1");
    }

    #[test]
    fn load_errors() {
        let ragged = "{\"id\":\"a\",\"scores\":[0.9,0.1],\"labels\":[1,0]}\n{\"id\":\"b\",\"scores\":[0.9,0.1,0.2],\"labels\":[1,0,0]}\n";
        assert!(matches!(
            read_jsonl(ragged.as_bytes()),
            Err(Error::RaggedK { .. })
        ));

        let nopos = r#"{"id":"z","scores":[0.9,0.1],"labels":[0,0]}"#;
        assert!(
            matches!(read_jsonl(nopos.as_bytes()), Err(Error::NoPositive { id: Some(ref id) }) if id == "z")
        );

        let bad = "{\"id\":\"a\",\"scores\":[0.9,0.1],\"labels\":[1,0]}\n{\"id\":\"b\",\"scores\":[0.9,\n";
        assert!(matches!(
            read_jsonl(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));

        let label2 = r#"{"id":"a","scores":[0.9,0.1],"labels":[2,0]}"#;
        assert!(matches!(
            read_jsonl(label2.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));

        assert!(matches!(
            read_jsonl("\n\n".as_bytes()),
            Err(Error::EmptyFile)
        ));
    }

    fn raw(id: &str, pos: usize, neg: usize) -> RawInstance {
        RawInstance {
            id: id.into(),
            scores: (0..pos + neg).map(|i| i as f64 * 0.1).collect(),
            labels: (0..pos + neg).map(|i| i < pos).collect(),
        }
    }

    #[test]
    fn preprocess_examples() {
        let cfg = PreprocessConfig {
            rng_seed: 3,
            ..PreprocessConfig::default()
        };
        let out =
            preprocess_raw(&[raw("a", 3, 20), raw("b", 6, 10), raw("c", 4, 5)], &cfg).unwrap();
        assert_eq!(out.instances.len(), 2);
        let a = &out.instances[0];
        assert_eq!(a.k(), 10);
        assert_eq!(a.labels().iter().filter(|&&l| l).count(), 3);
        let b = &out.instances[1];
        assert_eq!(b.labels().iter().filter(|&&l| l).count(), 5);
        assert_eq!(out.discards.len(), 1);
        assert_eq!(out.discards[0].id, "c");
        assert!(out.discards[0].reason.contains("fewer than 10"));
    }

    #[test]
    fn preprocess_other_discards() {
        let cfg = PreprocessConfig::default();
        let out = preprocess_raw(&[raw("nopos", 0, 12), raw("fewneg", 9, 2)], &cfg).unwrap();
        assert!(out.instances.is_empty());
        assert!(out.discards[0].reason.contains("no positive"));
        // 5 positives kept, 5 negatives needed, only 2 available
        assert!(out.discards[1].reason.contains("insufficient negatives"));
    }

    #[test]
    fn preprocess_is_seeded() {
        let raws = vec![raw("a", 4, 30), raw("b", 7, 12)];
        let cfg = PreprocessConfig {
            rng_seed: 11,
            ..PreprocessConfig::default()
        };
        let x = preprocess_raw(&raws, &cfg).unwrap().instances;
        let y = preprocess_raw(&raws, &cfg).unwrap().instances;
        assert_eq!(x, y);
        let other = PreprocessConfig {
            rng_seed: 12,
            ..cfg
        };
        assert_ne!(x, preprocess_raw(&raws, &other).unwrap().instances);
        assert!(PreprocessConfig {
            max_positives: 0,
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn split_examples() {
        let (r, t) = split_indices(10, 0.8, 5).unwrap();
        assert_eq!((r.len(), t.len()), (8, 2));
        assert_eq!(split_indices(10, 0.8, 5).unwrap(), (r.clone(), t.clone()));
        let mut all: Vec<usize> = r.into_iter().chain(t).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(matches!(
            split_indices(1, 0.8, 0),
            Err(Error::TooSmallToSplit { .. })
        ));
        assert!(split_indices(10, 1.0, 0).is_err());
    }

    fn synth(seed: u64, separability: f64) -> SynthConfig {
        SynthConfig {
            n_instances: 50,
            k: 10,
            separability,
            noise_sigma: 1.0,
            positives_range: (1, 5),
            rng_seed: seed,
        }
    }

    #[test]
    fn synth_is_deterministic_and_valid() {
        let a = synth_generate(&synth(7, 2.0)).unwrap();
        let b = synth_generate(&synth(7, 2.0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(dataset_to_jsonl(&a), dataset_to_jsonl(&b));
        assert_ne!(a, synth_generate(&synth(8, 2.0)).unwrap());
        for inst in &a {
            let p = inst.labels().iter().filter(|&&l| l).count();
            assert!((1..=5).contains(&p));
        }
    }

    #[test]
    fn synth_rejects_bad_config() {
        let mut c = synth(0, 1.0);
        c.positives_range = (0, 3);
        assert!(synth_generate(&c).is_err());
        c.positives_range = (1, 10);
        assert!(synth_generate(&c).is_err());
        c = synth(0, 1.0);
        c.noise_sigma = 0.0;
        assert!(synth_generate(&c).is_err());
        c = synth(0, -1.0);
        assert!(synth_generate(&c).is_err());
    }

    #[test]
    fn model_round_trip_every_variant() {
        let ds = synth_generate(&SynthConfig {
            n_instances: 200,
            ..synth(3, 1.0)
        })
        .unwrap();
        for name in ["max", "std", "gap12", "lin", "log", "mah"] {
            let model = name
                .parse::<Method>()
                .unwrap()
                .fit(&ds, MetricKind::Ap)
                .unwrap();
            let back = model_from_str(&model_to_string(&model)).unwrap();
            assert_eq!(back, model, "{name}");
        }
    }

    #[test]
    fn model_schema_errors() {
        let unknown = r#"{"variant":"rf","k":10,"params":{},"hyper":{},"format_version":1}"#;
        assert!(matches!(model_from_str(unknown), Err(Error::Schema(_))));
        let missing = r#"{"variant":"lin","k":2,"params":{"intercept":0.0},"hyper":{"ridge_lambda":0.1},"format_version":1}"#;
        assert!(matches!(model_from_str(missing), Err(Error::Schema(_))));
        let nok = r#"{"variant":"lin","params":{},"hyper":{},"format_version":1}"#;
        assert!(matches!(model_from_str(nok), Err(Error::Schema(_))));
        let truncated = r#"{"variant":"lin","k":2,"par"#;
        assert!(matches!(
            model_from_str(truncated),
            Err(Error::Parse { .. })
        ));
        let asym = r#"{"variant":"mah","k":2,"params":{"mean_good":[0,0],"mean_bad":[1,1],"invcov_good":[[1,0.5],[0,1]],"invcov_bad":[[1,0],[0,1]]},"hyper":{"q":0.25,"cov_epsilon":1e-6},"format_version":1}"#;
        assert!(matches!(model_from_str(asym), Err(Error::Schema(_))));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
