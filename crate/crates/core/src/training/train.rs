use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::loss::{LossBreakdown, LossData, LossWeights};
use crate::diffengine::ParamGradient;
use crate::error::{Error, Result};
use crate::networks::{FieldModel, ModelArch};
use crate::problems::{builtin, ProblemId, ProblemSpec};
use crate::sampling::{seeded_rng, PointCounts, TrainingPoints, INIT_STREAM, SAMPLING_STREAM};

/// Everything a run depends on; a run is a pure function of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub problem: ProblemId,
    pub arch: ModelArch,
    pub counts: PointCounts,
    pub iterations: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub lr: f64,
    /// Loss is recorded before every step whose index is a multiple of this.
    pub record_every: usize,
    /// Checkpoint callback cadence in completed steps.
    pub checkpoint_every: Option<usize>,
}

impl TrainConfig {
    pub const DEFAULT_SEED: u64 = 1234;
    pub const DEFAULT_RECORD_EVERY: usize = 100;

    pub fn new(
        problem: ProblemId,
        arch: ModelArch,
        counts: PointCounts,
        iterations: usize,
    ) -> Self {
        TrainConfig {
            problem,
            arch,
            counts,
            iterations,
            seed: Self::DEFAULT_SEED,
            weights: LossWeights::default(),
            lr: AdamState::DEFAULT_LR,
            record_every: Self::DEFAULT_RECORD_EVERY,
            checkpoint_every: None,
        }
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.record_every == 0 || self.checkpoint_every == Some(0) {
            return Err(Error::Config("cadences must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        self.weights.validate()?;
        self.arch.validate()?;
        if self.counts.interior.len() != spec.n_subdomains() {
            return Err(Error::Mismatch(format!(
                "{} interior counts for {} subdomains",
                self.counts.interior.len(),
                spec.n_subdomains()
            )));
        }
        check_arch(&self.arch, spec)
    }
}

/// Checks that `arch` has one branch per subdomain and the right input size.
pub fn check_arch(arch: &ModelArch, spec: &ProblemSpec) -> Result<()> {
    let (dim, branches) = match arch {
        ModelArch::Ae(a) => (a.continuous.input_dim, Some(a.attention.len())),
        ModelArch::Pinn { net } => (net.input_dim, None),
        ModelArch::Mpinn { nets } => (nets[0].input_dim, Some(nets.len())),
        ModelArch::Ipinn { net, activations } => (net.input_dim, Some(activations.len())),
        ModelArch::Exact { problem } => {
            let id: ProblemId = problem.parse()?;
            if id != spec.id {
                return Err(Error::Mismatch(format!(
                    "exact solution of {id} used for {}",
                    spec.id
                )));
            }
            return Ok(());
        }
    };
    if dim != spec.dim() {
        return Err(Error::Mismatch(format!(
            "{dim}-dimensional model for a {}-dimensional problem",
            spec.dim()
        )));
    }
    if let Some(b) = branches {
        if b != spec.n_subdomains() {
            return Err(Error::Mismatch(format!(
                "{b} model branches for {} subdomains",
                spec.n_subdomains()
            )));
        }
    }
    if let ModelArch::Mpinn { nets } = arch {
        if nets.iter().any(|n| n.input_dim != dim) {
            return Err(Error::Mismatch(
                "sub-networks disagree on input dimension".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Strictly increasing in `iter`.
    pub records: Vec<HistoryRecord>,
    /// Loss at the returned parameters.
    pub final_loss: LossBreakdown,
    /// Wall-clock duration; excluded from the CSV so that it stays reproducible.
    pub elapsed_seconds: f64,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "iter,pde,boundary,jump_value,jump_flux,total";

    /// One row per record, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let l = &r.loss;
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                r.iter, l.pde, l.boundary, l.jump_value, l.jump_flux, l.total
            );
        }
        out
    }
}

pub struct TrainOutcome {
    pub spec: ProblemSpec,
    pub model: Box<dyn FieldModel>,
    pub params: Vec<f64>,
    pub history: TrainHistory,
    pub points: TrainingPoints,
}

/// Problem, sampled points, loss data, model and initial parameters of a run.
pub type Prepared = (
    ProblemSpec,
    TrainingPoints,
    LossData,
    Box<dyn FieldModel>,
    Vec<f64>,
);

/// Samples points, initializes the model and prepares loss data for `cfg`.
pub fn prepare(cfg: &TrainConfig) -> Result<Prepared> {
    let spec = builtin(cfg.problem)?;
    cfg.validate(&spec)?;
    let points = TrainingPoints::sample(
        &spec.domain,
        &cfg.counts,
        &mut seeded_rng(cfg.seed, SAMPLING_STREAM),
    )?;
    let data = LossData::new(&spec, &points)?;
    let model = cfg.arch.build()?;
    let params = cfg
        .arch
        .init_params(&mut seeded_rng(cfg.seed, INIT_STREAM))?;
    Ok((spec, points, data, model, params))
}

pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(cfg, |_, _| Ok(()))
}

/// Full-batch Adam on the total loss. `on_checkpoint(step, params)` runs
/// after every `checkpoint_every` completed steps.
pub fn train_with<F>(cfg: &TrainConfig, mut on_checkpoint: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &[f64]) -> Result<()>,
{
    let (spec, points, data, model, mut params) = prepare(cfg)?;
    let mut adam = AdamState::new(params.len(), cfg.lr);
    let mut history = TrainHistory::default();
    let start = Instant::now();
    let diverged = |iteration: usize, e: Error, params: &[f64]| Error::Diverged {
        iteration,
        source: Box::new(e),
        last_good: params.to_vec(),
    };

    for i in 0..cfg.iterations {
        let (loss, grad) = data
            .evaluate(model.as_ref(), &params, &cfg.weights, true)
            .map_err(|e| diverged(i, e, &params))?;
        if i % cfg.record_every == 0 {
            history.records.push(HistoryRecord { iter: i, loss });
        }
        adam_step(
            &mut params,
            &ParamGradient(grad.unwrap_or_default()),
            &mut adam,
        )?;
        if let Some(every) = cfg.checkpoint_every {
            if (i + 1) % every == 0 {
                on_checkpoint(i + 1, &params)?;
            }
        }
    }
    history.final_loss = data
        .evaluate(model.as_ref(), &params, &cfg.weights, false)
        .map_err(|e| diverged(cfg.iterations, e, &params))?
        .0;
    history.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        spec,
        model,
        params,
        history,
        points,
    })
}
