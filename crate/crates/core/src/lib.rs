//! Black-box abstention for document reranking.
//!
//! Given only the relevance scores a reranker assigns to its `k` candidate
//! documents, estimate how trustworthy the resulting ranking is and abstain
//! when that confidence is too low. The crate covers:
//!
//! - [`metrics`]: instances, datasets and the AP / NDCG / RR metrics.
//! - [`confidence`]: reference-free and fitted confidence functions.
//! - [`eval`]: performance–abstention curves, oracle and random baselines, nAUC.
//! - [`calibration`]: threshold selection and the calibration, transfer and
//!   reference-size studies.
//! - [`dataio`]: JSONL datasets, preprocessing, splitting, synthetic data and
//!   model files.

// `!(x > y)` is used on purpose so that NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod confidence;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod metrics;
pub mod optim;

pub use confidence::{ConfidenceModel, Method};
pub use error::{Error, Result};
pub use eval::{evaluate, AbstentionCurve, EvalReport};
pub use metrics::{MetricKind, RerankDataset, RerankInstance};
