//! End-to-end image classification with codebookless Gaussian models:
//! dataset ingestion, configuration, training, evaluation, file formats.

pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod pipeline;

pub use config::RunConfig;
pub use dataset::{ingest, split, DatasetManifest, Split};
pub use error::{PipelineError, Result};
pub use formats::TrainedModel;
pub use metrics::EvalReport;
pub use pipeline::{run_eval, run_train};
