use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Stream, SystemConfig};
use super::method::Method;
use super::pipeline::{run_pipeline, Models, PointContext, ScenarioDraws};
use crate::channels::Scenario;
use crate::error::{Error, Result};

/// One CSV row: a method at one (J, SNR) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(rename = "J")]
    pub users: usize,
    pub snr_db: f64,
    pub n_p: usize,
    #[serde(rename = "B")]
    pub bits: u32,
    pub mean_rate_bits: f64,
    pub stderr: f64,
    pub mean_runtime_ms: f64,
    pub scenario_hash: String,
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "method",
    "J",
    "snr_db",
    "n_p",
    "B",
    "mean_rate_bits",
    "stderr",
    "mean_runtime_ms",
    "scenario_hash",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SystemConfig,
    pub config_hash: String,
    pub seed: u64,
    pub evaluation_seed: u64,
    pub model_hashes: BTreeMap<String, String>,
    pub methods: Vec<String>,
    pub tool: String,
    pub version: String,
    pub runtime_recorded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Per-scenario sum-rates behind each row, in scenario order.
    pub samples: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl EvalReport {
    pub fn empty(config: &SystemConfig) -> Self {
        Self {
            rows: Vec::new(),
            samples: Vec::new(),
            provenance: provenance(config, &Models::default(), &[], true),
        }
    }

    /// Index of the row for `(method, J, SNR)`.
    pub fn find(&self, method: &Method, users: usize, snr_db: f64) -> Option<usize> {
        let name = method.to_string();
        self.rows
            .iter()
            .position(|r| r.method == name && r.users == users && r.snr_db == snr_db)
    }

    pub fn row(&self, method: &Method, users: usize, snr_db: f64) -> Option<&ReportRow> {
        self.find(method, users, snr_db).map(|i| &self.rows[i])
    }

    pub fn rates(&self, method: &Method, users: usize, snr_db: f64) -> Option<&[f64]> {
        self.find(method, users, snr_db).map(|i| self.samples[i].as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluateOptions {
    /// Record wall-clock runtime per method. When false the runtime column
    /// is written as 0 so reports are byte-identical across runs.
    pub record_runtime: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self { record_runtime: true }
    }
}

fn provenance(config: &SystemConfig, models: &Models, methods: &[Method], timing: bool) -> Provenance {
    Provenance {
        config: config.clone(),
        config_hash: config.config_hash(),
        seed: config.seed,
        evaluation_seed: config.stream_seed(Stream::Evaluation),
        model_hashes: models.hashes(),
        methods: methods.iter().map(Method::to_string).collect(),
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        runtime_recorded: timing,
    }
}

/// Hash of everything random the methods see at one grid point: true
/// channels and pilot observations.
fn point_hash(scenarios: &[Scenario], draws: &[ScenarioDraws]) -> String {
    let mut h = Sha256::new();
    for (s, d) in scenarios.iter().zip(draws) {
        for u in &s.users {
            for z in u.channel.iter() {
                h.update(z.re.to_le_bytes());
                h.update(z.im.to_le_bytes());
            }
        }
        for y in &d.observations {
            for z in y.iter() {
                h.update(z.re.to_le_bytes());
                h.update(z.im.to_le_bytes());
            }
        }
        h.update(d.stochastic_seed.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean sum-rate of every method at every `(J, SNR)` point of the config.
///
/// Test scenarios must carry at least `max(users)` users; smaller `J` use the
/// first `J` users. All methods at a point see identical channels, pilot
/// noise and stochastic seeds.
pub fn evaluate(
    methods: &[Method],
    testset: &[Scenario],
    models: &Models,
    config: &SystemConfig,
    options: EvaluateOptions,
) -> Result<EvalReport> {
    config.validate()?;
    if testset.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("no methods selected"));
    }
    let available = testset.iter().map(Scenario::user_count).min().unwrap_or(0);
    if config.max_users() > available {
        return Err(Error::invalid(format!(
            "test scenarios have {available} users but J = {} was requested",
            config.max_users()
        )));
    }
    models.check(methods, config.pilots)?;
    let base_seed = config.stream_seed(Stream::Evaluation);
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &users in &config.users {
        let scenarios: Vec<Scenario> = testset.iter().map(|s| s.truncated(users)).collect();
        for &snr_db in &config.snr_db {
            let ctx = PointContext::new(config, models, snr_db)?;
            let draws = scenarios
                .iter()
                .enumerate()
                .map(|(d, s)| ScenarioDraws::new(&ctx, s, d, base_seed))
                .collect::<Result<Vec<_>>>()?;
            let hash = point_hash(&scenarios, &draws);
            for method in methods {
                let results: Vec<(f64, f64)> = scenarios
                    .par_iter()
                    .zip(draws.par_iter())
                    .map(|(s, d)| {
                        let start = Instant::now();
                        let out = run_pipeline(method, s, d, &ctx)?;
                        Ok((out.rate, start.elapsed().as_secs_f64() * 1e3))
                    })
                    .collect::<Result<_>>()?;
                let rates: Vec<f64> = results.iter().map(|r| r.0).collect();
                let (mean, stderr) = mean_and_stderr(&rates);
                let runtime = if options.record_runtime {
                    results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64
                } else {
                    0.0
                };
                info!("{method} J={users} SNR={snr_db} dB: {mean:.4} +- {stderr:.4} bits");
                rows.push(ReportRow {
                    method: method.to_string(),
                    users,
                    snr_db,
                    n_p: config.pilots,
                    bits: config.bits,
                    mean_rate_bits: mean,
                    stderr,
                    mean_runtime_ms: runtime,
                    scenario_hash: hash.clone(),
                });
                samples.push(rates);
            }
        }
    }
    Ok(EvalReport {
        rows,
        samples,
        provenance: provenance(config, models, methods, options.record_runtime),
    })
}

/// Sidecar path of a report CSV.
pub fn provenance_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV and the JSON provenance sidecar beside it.
pub fn emit_report(report: &EvalReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::format(path, e))?;
    w.write_record(REPORT_COLUMNS).map_err(|e| Error::format(path, e))?;
    for row in &report.rows {
        w.serialize(row).map_err(|e| Error::format(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let side = provenance_path(path);
    let json = serde_json::to_string_pretty(&report.provenance).map_err(|e| Error::format(&side, e))?;
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn load_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let headers = r.headers().map_err(|e| Error::format(path, e))?.clone();
    if headers.iter().ne(REPORT_COLUMNS.iter().copied()) {
        return Err(Error::format(path, format!("unexpected columns {headers:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e)))
        .collect()
}
