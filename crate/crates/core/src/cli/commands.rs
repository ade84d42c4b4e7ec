use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;

use super::{Action, Invocation, TrainMode};
use crate::channels::io::{read_channels, read_scenarios, sibling, write_channels, write_scenarios, DatasetSidecar};
use crate::channels::Scenario;
use crate::error::{Error, Result};
use crate::eval::{emit_report, evaluate, generate_datasets, EvaluateOptions, Method, MethodKind, Models, Stream};
use crate::gmm::{fit_em, resume_em, GmmModel, SpectralDictionary};
use crate::gnn::{train, GnnModel, StatisticsSource};
use crate::linalg::{derive_seed, seeded_rng};
use crate::pilots::build_pilot_matrix;

use super::CliConfig;

/// File layout of the working directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub root: PathBuf,
}

/// Artifact layout rooted at `root`.
pub fn artifacts(root: &Path) -> Artifacts {
    Artifacts { root: root.to_path_buf() }
}

impl Artifacts {
    /// Channel set used to fit the mixture (stem; `.json` + `.bin`).
    pub fn gmm_set(&self) -> PathBuf {
        self.root.join("gmm_set")
    }
    pub fn train_set(&self) -> PathBuf {
        self.root.join("train")
    }
    pub fn val_set(&self) -> PathBuf {
        self.root.join("val")
    }
    pub fn test_set(&self) -> PathBuf {
        self.root.join("test")
    }
    pub fn gmm_model(&self) -> PathBuf {
        self.root.join("gmm.json")
    }
    pub fn gmm_log(&self) -> PathBuf {
        self.root.join("gmm_loglik.csv")
    }
    /// Network file for a training mode; observation-feedback networks are
    /// stored per pilot count.
    pub fn gnn_model(&self, mode: TrainMode, pilots: usize) -> PathBuf {
        self.root.join(match mode {
            TrainMode::Genie => "gnn-genie.json".to_string(),
            TrainMode::GmmH => "gnn-gmm-h.json".to_string(),
            TrainMode::GmmY => format!("gnn-gmm-y-np{pilots}.json"),
        })
    }
    pub fn gnn_log(&self, mode: TrainMode, pilots: usize) -> PathBuf {
        self.gnn_model(mode, pilots).with_extension("log.csv")
    }
    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join(format!("report-{name}.csv"))
    }
}

pub fn execute(inv: &Invocation) -> Result<()> {
    let cfg = &inv.config;
    match &inv.action {
        Action::GenData => gen_data(cfg, inv.dry_run),
        Action::FitGmm { resume } => fit_gmm(cfg, *resume, inv.dry_run),
        Action::TrainGnn { mode, smoke } => train_gnn(cfg, *mode, *smoke, inv.dry_run),
        Action::Evaluate { methods, timing } => run_evaluate(cfg, methods, *timing, inv.dry_run),
    }
}

fn check_geometry(cfg: &CliConfig, sidecar: &DatasetSidecar, stem: &Path) -> Result<()> {
    if sidecar.geometry != cfg.system.geometry {
        return Err(Error::format(
            sibling(stem, "json"),
            format!(
                "dataset geometry {} does not match configured {}",
                sidecar.geometry.label(),
                cfg.system.geometry.label()
            ),
        ));
    }
    Ok(())
}

fn load_scenarios(cfg: &CliConfig, stem: &Path) -> Result<Vec<Scenario>> {
    let (sidecar, scenarios) = read_scenarios(stem)?;
    check_geometry(cfg, &sidecar, stem)?;
    Ok(scenarios)
}

fn gen_data(cfg: &CliConfig, dry_run: bool) -> Result<()> {
    let s = &cfg.system;
    let a = artifacts(&cfg.out);
    println!(
        "gen-data: geometry {} (N = {}), M = {} channels, D = {} x J = {} training, {} x J = {} validation, {} x J = {} test, seed {}",
        s.geometry.label(),
        s.geometry.antennas(),
        s.gmm_samples,
        s.train_scenarios,
        s.train_users,
        s.val_scenarios,
        s.train_users,
        s.test_scenarios,
        s.max_users(),
        s.seed
    );
    if dry_run {
        for stem in [a.gmm_set(), a.train_set(), a.val_set(), a.test_set()] {
            println!("would write {}", sibling(&stem, "json").display());
        }
        return Ok(());
    }
    let ds = generate_datasets(s)?;
    let g = &s.geometry;
    write_channels(&a.gmm_set(), g, &ds.gmm, s.stream_seed(Stream::GmmData), ds.scale)?;
    write_scenarios(&a.train_set(), g, &ds.train, s.stream_seed(Stream::TrainData), ds.scale)?;
    write_scenarios(&a.val_set(), g, &ds.val, s.stream_seed(Stream::ValData), ds.scale)?;
    write_scenarios(&a.test_set(), g, &ds.test, s.stream_seed(Stream::TestData), ds.scale)?;
    println!("normalization scale {:.6}; wrote datasets to {}", ds.scale, cfg.out.display());
    Ok(())
}

fn append_log(path: &Path, start: usize, values: &[f64], fresh: bool) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = String::new();
    if fresh {
        text.push_str("iteration,log_likelihood\n");
    }
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v:e}\n", start + i));
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(!fresh)
        .truncate(fresh)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn logged_iterations(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().skip(1).filter(|l| !l.trim().is_empty()).count())
}

fn fit_gmm(cfg: &CliConfig, resume: bool, dry_run: bool) -> Result<()> {
    let a = artifacts(&cfg.out);
    let em = cfg.em_config();
    println!(
        "fit-gmm: K = {} components (B = {}), at most {} iterations, tol {:e}{}",
        em.components,
        cfg.system.bits,
        em.max_iters,
        em.tol,
        if resume { ", resuming" } else { "" }
    );
    if dry_run {
        println!("would read {}", sibling(&a.gmm_set(), "json").display());
        println!("would write {} and {}", a.gmm_model().display(), a.gmm_log().display());
        return Ok(());
    }
    let (sidecar, data) = read_channels(&a.gmm_set())?;
    check_geometry(cfg, &sidecar, &a.gmm_set())?;
    let fit = if resume {
        let model = GmmModel::load(&a.gmm_model())?;
        if model.components() != em.components {
            return Err(Error::invalid(format!(
                "saved model has {} components, configuration asks for {}",
                model.components(),
                em.components
            )));
        }
        resume_em(&data, model, &em)?
    } else {
        let dictionary = SpectralDictionary::new(&cfg.system.geometry)?;
        let mut rng = seeded_rng(cfg.system.stream_seed(Stream::EmInit));
        fit_em(&data, &em, &dictionary, &mut rng)?
    };
    fit.model.save(&a.gmm_model())?;
    if resume && a.gmm_log().exists() {
        // The first entry repeats the last logged value of the loaded model.
        let start = logged_iterations(&a.gmm_log())?;
        append_log(&a.gmm_log(), start, &fit.log_likelihoods[1..], false)?;
    } else {
        append_log(&a.gmm_log(), 0, &fit.log_likelihoods, true)?;
    }
    println!(
        "{} EM iterations, mean log-likelihood {:.6}, converged: {}; model {} (sha256 {})",
        fit.log_likelihoods.len() - 1,
        fit.log_likelihoods.last().copied().unwrap_or(f64::NAN),
        fit.converged,
        a.gmm_model().display(),
        &fit.model.content_hash()[..16]
    );
    Ok(())
}

fn train_gnn(cfg: &CliConfig, mode: TrainMode, smoke: bool, dry_run: bool) -> Result<()> {
    let a = artifacts(&cfg.out);
    let s = &cfg.system;
    let mut tc = cfg.train_config();
    let gc = cfg.gnn_config();
    if smoke {
        tc.epochs = 1;
    }
    let path = a.gnn_model(mode, s.pilots);
    println!(
        "train-gnn: mode {mode:?}, hidden {:?}, {} epochs, batch {}, lr {:e}, SNR [{}, {}] dB{}",
        gc.hidden,
        tc.epochs,
        tc.batch_size,
        tc.learning_rate,
        tc.snr_db[0],
        tc.snr_db[1],
        if smoke { ", smoke run" } else { "" }
    );
    if dry_run {
        println!("would write {} and {}", path.display(), a.gnn_log(mode, s.pilots).display());
        return Ok(());
    }
    let mut train_set = load_scenarios(cfg, &a.train_set())?;
    let mut val_set = load_scenarios(cfg, &a.val_set())?;
    if smoke {
        train_set.truncate(10);
        val_set.truncate(10);
    }
    let gmm = match mode {
        TrainMode::Genie => None,
        _ => Some(GmmModel::load(&a.gmm_model())?),
    };
    let pilots = build_pilot_matrix(&s.geometry, s.pilots, s.power)?;
    let source = match (mode, &gmm) {
        (TrainMode::GmmH, Some(m)) => StatisticsSource::GmmCsi(m),
        (TrainMode::GmmY, Some(m)) => StatisticsSource::GmmObservation {
            model: m,
            pilots: &pilots,
        },
        _ => StatisticsSource::Genie,
    };
    let init = GnnModel::new(&gc, &mut seeded_rng(derive_seed(tc.seed, 0)))?;
    info!("{} parameters", init.parameter_count());
    let (model, log) = train(init, &train_set, &val_set, source, &tc)?;
    model.save(&path)?;
    log.write_csv(&a.gnn_log(mode, s.pilots))?;
    println!(
        "best validation sum-rate {:.4} bits/s/Hz at epoch {} (initial {:.4}); model {} (sha256 {})",
        log.best_val_rate,
        log.best_epoch,
        log.initial_val_rate,
        path.display(),
        &model.content_hash()[..16]
    );
    Ok(())
}

fn load_models(cfg: &CliConfig, methods: &[Method]) -> Result<Models> {
    let a = artifacts(&cfg.out);
    let pilots = cfg.system.pilots;
    let mut models = Models::default();
    let load_gnn = |mode| -> Result<GnnModel> {
        let path = a.gnn_model(mode, pilots);
        if !path.exists() {
            return Err(Error::MissingModel(format!("{} (run train-gnn)", path.display())));
        }
        GnnModel::load(&path)
    };
    for m in methods {
        if m.kind.needs_gmm() && models.gmm.is_none() {
            if !a.gmm_model().exists() {
                return Err(Error::MissingModel(format!("{} (run fit-gmm)", a.gmm_model().display())));
            }
            models.gmm = Some(GmmModel::load(&a.gmm_model())?);
        }
        match m.kind {
            MethodKind::GnnGenie if models.gnn_genie.is_none() => models.gnn_genie = Some(load_gnn(TrainMode::Genie)?),
            MethodKind::GnnGmmH if models.gnn_gmm_h.is_none() => models.gnn_gmm_h = Some(load_gnn(TrainMode::GmmH)?),
            MethodKind::GnnGmmY if !models.gnn_gmm_y.contains_key(&pilots) => {
                models.gnn_gmm_y.insert(pilots, load_gnn(TrainMode::GmmY)?);
            }
            _ => {}
        }
    }
    Ok(models)
}

fn run_evaluate(cfg: &CliConfig, methods: &[Method], timing: bool, dry_run: bool) -> Result<()> {
    let a = artifacts(&cfg.out);
    let s = &cfg.system;
    let name = cfg.preset.map_or("custom", |p| p.name());
    let path = a.report(name);
    let list: Vec<String> = methods.iter().map(Method::to_string).collect();
    println!(
        "evaluate: methods [{}], J {:?}, SNR {:?} dB, n_p = {}, B = {}, {} test scenarios",
        list.join(", "),
        s.users,
        s.snr_db,
        s.pilots,
        s.bits,
        s.test_scenarios
    );
    if dry_run {
        println!(
            "would write {} rows to {}",
            methods.len() * s.users.len() * s.snr_db.len(),
            path.display()
        );
        return Ok(());
    }
    let mut test = load_scenarios(cfg, &a.test_set())?;
    if test.len() < s.test_scenarios {
        return Err(Error::invalid(format!(
            "test set holds {} scenarios, {} requested",
            test.len(),
            s.test_scenarios
        )));
    }
    test.truncate(s.test_scenarios);
    let models = load_models(cfg, methods)?;
    let report = evaluate(
        methods,
        &test,
        &models,
        s,
        EvaluateOptions {
            record_runtime: timing,
        },
    )?;
    emit_report(&report, &path)?;
    for r in &report.rows {
        println!(
            "{:<22} J={:<3} SNR={:>5.1} dB  {:.4} +- {:.4} bits/s/Hz",
            r.method, r.users, r.snr_db, r.mean_rate_bits, r.stderr
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
