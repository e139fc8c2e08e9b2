//! Implementations of the harness commands, independent of argument parsing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use aepinn::diffengine::{check_gradient_fd, Activation};
use aepinn::geometry::Region;
use aepinn::metrics::{
    compute_errors, error_csv, error_table, pointwise_errors, render, ErrorReport, ErrorRow,
};
use aepinn::networks::{Checkpoint, ModelArch};
use aepinn::problems::{builtin, ProblemId, ProblemSpec};
use aepinn::sampling::{seeded_rng, PointCounts, TrainingPoints, SAMPLING_STREAM};
use aepinn::training::{
    check_arch, train_with, LossBreakdown, LossData, LossObjective, TrainConfig,
};
use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, RunFile};
use crate::presets::{self, IaShape, Method, NetShape, Preset};

pub const MANIFEST_FORMAT: &str = "aepinn-run/1";

/// Stream of the seeded generator that draws random gradient-check architectures.
pub const GRADCHECK_STREAM: u64 = 2;

/// Point counts after sampling, as used by the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub interior: Vec<usize>,
    /// Boundary points grouped by the subdomain that owns them.
    pub boundary_by_subdomain: Vec<usize>,
    pub interface: Vec<usize>,
    pub total: usize,
}

impl Splits {
    pub fn of(spec: &ProblemSpec, points: &TrainingPoints) -> Result<Self> {
        let mut boundary_by_subdomain = vec![0; spec.n_subdomains()];
        for x in points.boundary.iter() {
            boundary_by_subdomain[spec.domain.subdomain_by_sign(x)?] += 1;
        }
        Ok(Splits {
            interior: points.interior.iter().map(|s| s.len()).collect(),
            boundary_by_subdomain,
            interface: points.interface.iter().map(|s| s.len()).collect(),
            total: points.total(),
        })
    }
}

/// Test-grid description recorded with every evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub per_axis: usize,
    pub n_test: usize,
    /// Grid points lying on an interface; they are evaluated on the inside subdomain.
    pub on_interface: usize,
}

impl GridInfo {
    pub fn of(spec: &ProblemSpec, per_axis: Option<usize>) -> Result<Self> {
        let pts = spec.grid_points(per_axis);
        let d = spec.dim();
        let mut on_interface = 0;
        for x in pts.chunks_exact(d) {
            if matches!(spec.domain.classify(x)?, Region::Interface(_)) {
                on_interface += 1;
            }
        }
        Ok(GridInfo {
            per_axis: per_axis.unwrap_or(spec.test_grid.per_axis).max(2),
            n_test: pts.len() / d,
            on_interface,
        })
    }
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    pub version: String,
    pub method: Method,
    pub preset: Preset,
    pub config: TrainConfig,
    pub splits: Splits,
    pub grid: Option<GridInfo>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub training_seconds: f64,
    pub final_loss: Option<LossBreakdown>,
    pub errors: Option<ErrorReport>,
    /// Artifact name to path.
    pub outputs: BTreeMap<String, PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: RunManifest =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.format != MANIFEST_FORMAT {
            bail!("unsupported manifest format '{}'", m.format);
        }
        Ok(m)
    }

    /// The resolved configuration that produced this run.
    pub fn resolved(&self) -> Resolved {
        Resolved {
            method: self.method,
            preset: self.preset,
            grid: self.grid.as_ref().map(|g| g.per_axis),
            train: self.config.clone(),
        }
    }

    fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write(&path, &serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Result of a completed training run.
pub struct TrainReport {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub row: ErrorRow,
}

/// Trains `run`, evaluates it on the test grid and writes the manifest,
/// history, checkpoint and error report into `dir`.
pub fn train_run(run: &Resolved, dir: &Path, command: &str) -> Result<TrainReport> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let started = now_unix();
    let cfg = &run.train;
    let mut outputs = BTreeMap::new();
    let outcome = train_with(cfg, |step, params| {
        let path = dir.join(format!("checkpoint_{step}.json"));
        Checkpoint::new(cfg.arch.clone(), cfg.seed, step, params.to_vec())?.save(&path)?;
        outputs.insert(format!("checkpoint_{step}"), path);
        Ok(())
    })
    .with_context(|| format!("training {} on {}", run.method, cfg.problem))?;

    let history = dir.join("history.csv");
    write(&history, &outcome.history.to_csv())?;
    outputs.insert("history".into(), history);

    let ckpt = dir.join("checkpoint.json");
    Checkpoint::new(
        cfg.arch.clone(),
        cfg.seed,
        cfg.iterations,
        outcome.params.clone(),
    )?
    .save(&ckpt)?;
    outputs.insert("checkpoint".into(), ckpt);

    let report = compute_errors(
        outcome.model.as_ref(),
        &outcome.params,
        &outcome.spec,
        run.grid,
    )?;
    let row = ErrorRow {
        method: run.method.name().into(),
        problem: cfg.problem.to_string(),
        kappa: cfg.problem.kappa(),
        report,
        seed: cfg.seed,
        iterations: cfg.iterations,
    };
    let errors = dir.join("errors.csv");
    write(&errors, &error_csv(std::slice::from_ref(&row)))?;
    outputs.insert("errors".into(), errors);

    let mut manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        method: run.method,
        preset: run.preset,
        config: cfg.clone(),
        splits: Splits::of(&outcome.spec, &outcome.points)?,
        grid: Some(GridInfo::of(&outcome.spec, run.grid)?),
        started_unix: started,
        finished_unix: 0.0,
        training_seconds: outcome.history.elapsed_seconds,
        final_loss: Some(outcome.history.final_loss),
        errors: Some(report),
        outputs,
    };
    manifest
        .outputs
        .insert("manifest".into(), dir.join("manifest.json"));
    manifest.finished_unix = now_unix();
    manifest.save(dir)?;
    Ok(TrainReport {
        dir: dir.to_path_buf(),
        manifest,
        row,
    })
}

/// Directory-safe name of a problem id.
pub fn slug(id: ProblemId) -> String {
    id.to_string().replace(":k=", "_k")
}

/// Trains every method on every problem with preset settings plus `overrides`,
/// then writes the combined error CSV and tables into `out`.
pub fn compare(
    ids: &[ProblemId],
    methods: &[Method],
    overrides: &RunFile,
    out: &Path,
) -> Result<Vec<ErrorRow>> {
    if methods.is_empty() || ids.is_empty() {
        bail!("compare needs at least one problem and one method");
    }
    let mut rows = Vec::new();
    for &id in ids {
        for &m in methods {
            let file = RunFile {
                problem: Some(id.to_string()),
                method: Some(m),
                ..overrides.clone()
            };
            let run = file.resolve()?;
            let dir = out.join(slug(id)).join(m.name());
            let rep = train_run(&run, &dir, "compare")?;
            rows.push(rep.row);
        }
    }
    fs::create_dir_all(out)?;
    write(&out.join("errors.csv"), &error_csv(&rows))?;
    let text = format!("{}\n{}", error_table(&rows), improvement_table(&rows));
    write(&out.join("table.txt"), &text)?;
    Ok(rows)
}

/// Per-method relative error and its ratio to the AE model's on the same problem.
pub fn improvement_table(rows: &[ErrorRow]) -> String {
    let mut table = vec![vec![
        "problem".to_string(),
        "method".into(),
        "E_L".into(),
        "E_L / E_L(ae)".into(),
    ]];
    for r in rows {
        let ae = rows
            .iter()
            .find(|o| o.method == "ae" && o.problem == r.problem);
        let ratio = ae
            .map(|a| format!("{:.2e}", r.report.e_l2rel / a.report.e_l2rel))
            .unwrap_or_else(|| "-".into());
        table.push(vec![
            r.problem.clone(),
            r.method.clone(),
            format!("{:.2e}", r.report.e_l2rel),
            ratio,
        ]);
    }
    render(&table)
}

/// Samples the training points of `run` and writes them with a manifest.
pub fn dump_points(run: &Resolved, out: &Path) -> Result<(PathBuf, Splits)> {
    let cfg = &run.train;
    let spec = builtin(cfg.problem)?;
    let started = now_unix();
    let points = TrainingPoints::sample(
        &spec.domain,
        &cfg.counts,
        &mut seeded_rng(cfg.seed, SAMPLING_STREAM),
    )?;
    fs::create_dir_all(out)?;
    let path = out.join("points.csv");
    write(&path, &points.to_csv(&spec.domain))?;
    let splits = Splits::of(&spec, &points)?;
    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        command: "dump-points".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        method: run.method,
        preset: run.preset,
        config: cfg.clone(),
        splits: splits.clone(),
        grid: None,
        started_unix: started,
        finished_unix: now_unix(),
        training_seconds: 0.0,
        final_loss: None,
        errors: None,
        outputs: BTreeMap::from([
            ("points".to_string(), path.clone()),
            ("manifest".to_string(), out.join("manifest.json")),
        ]),
    };
    manifest.save(out)?;
    Ok((path, splits))
}

/// Writes `x[,y[,z]],abs_error` on the test grid for a saved model and
/// returns the path and the largest error.
pub fn error_field(
    checkpoint: &Path,
    id: ProblemId,
    grid: Option<usize>,
    out: &Path,
) -> Result<(PathBuf, f64)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let spec = builtin(id)?;
    check_arch(&ckpt.arch, &spec)?;
    let model = ckpt.arch.build()?;
    let pts = spec.grid_points(grid);
    let (_, errors) = pointwise_errors(model.as_ref(), &ckpt.params, &spec, &pts)?;
    let d = spec.dim();
    let mut csv = ["x", "y", "z"][..d].join(",");
    csv.push_str(",abs_error\n");
    let mut max = 0.0f64;
    for (x, e) in pts.chunks_exact(d).zip(&errors) {
        for v in x {
            let _ = write!(csv, "{v:?},");
        }
        let _ = writeln!(csv, "{:?}", e.abs());
        max = max.max(e.abs());
    }
    fs::create_dir_all(out)?;
    let path = out.join("error_field.csv");
    write(&path, &csv)?;
    Ok((path, max))
}

/// Largest gradient-check step and discrepancy thresholds used by default.
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// A random architecture with at most two hidden layers of at most eight units.
pub fn small_random_arch<R: Rng>(
    spec: &ProblemSpec,
    method: Method,
    rng: &mut R,
) -> Result<ModelArch> {
    const ACTS: [Activation; 4] = [
        Activation::Tanh,
        Activation::Sin,
        Activation::Cos,
        Activation::Sigmoid,
    ];
    let act = |rng: &mut R| *ACTS.choose(rng).expect("non-empty");
    let k = spec.n_subdomains();
    match method.variant() {
        None => {
            let fcn = NetShape::new(rng.gen_range(1..=2), rng.gen_range(2..=8), act(rng));
            let ia: Vec<IaShape> = (0..k)
                .map(|_| IaShape::new(rng.gen_range(2..=8), rng.gen_range(1..=2), act(rng)))
                .collect();
            presets::ae_arch(spec, fcn, &ia)
        }
        Some(v) => {
            let depth = rng.gen_range(1..=2);
            let rows: Vec<NetShape> = (0..k)
                .map(|_| NetShape::new(depth, rng.gen_range(2..=8), act(rng)))
                .collect();
            presets::baseline_arch(spec, v, &rows)
        }
    }
}

/// Outcome of one gradient check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckResult {
    pub problem: ProblemId,
    pub method: Method,
    pub num_params: usize,
    pub discrepancy: f64,
}

/// Checks the loss gradient of a random small model against central differences.
pub fn gradcheck(id: ProblemId, method: Method, seed: u64, step: f64) -> Result<GradcheckResult> {
    let spec = builtin(id)?;
    let mut rng = seeded_rng(seed, GRADCHECK_STREAM);
    let arch = small_random_arch(&spec, method, &mut rng)?;
    let counts = PointCounts {
        interior: vec![4; spec.n_subdomains()],
        boundary: 6,
        interface: 3,
    };
    let cfg = TrainConfig::new(id, arch, counts, 1);
    let points = TrainingPoints::sample(
        &spec.domain,
        &cfg.counts,
        &mut seeded_rng(seed, SAMPLING_STREAM),
    )?;
    let data = LossData::new(&spec, &points)?;
    let model = cfg.arch.build()?;
    let params = cfg.arch.init_params(&mut rng)?;
    let obj = LossObjective {
        model: model.as_ref(),
        data: &data,
        weights: cfg.weights,
    };
    let discrepancy = check_gradient_fd(&obj, &params, step)?;
    Ok(GradcheckResult {
        problem: id,
        method,
        num_params: params.len(),
        discrepancy,
    })
}
