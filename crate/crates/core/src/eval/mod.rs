//! Experiment configuration, method pipelines and sum-rate reports.

mod config;
mod method;
mod pipeline;
mod report;

pub use config::{generate_datasets, Datasets, Preset, Stream, SystemConfig};
pub use method::{parse_methods, Method, MethodKind};
pub use pipeline::{run_pipeline, Models, PipelineOutput, PointContext, ScenarioDraws};
pub use report::{
    emit_report, evaluate, load_report_csv, provenance_path, EvalReport, EvaluateOptions, Provenance, ReportRow,
    REPORT_COLUMNS,
};
