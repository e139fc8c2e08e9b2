//! Run configuration files: flat TOML with one section per network kind.
//!
//! Every key is optional except `problem`; missing values come from the
//! preset of the chosen problem and method. Unknown keys are rejected.

use std::path::Path;

use aepinn::baselines::Variant;
use aepinn::problems::{builtin, ProblemId};
use aepinn::sampling::PointCounts;
use aepinn::training::{LossWeights, TrainConfig};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::presets::{self, IaShape, Method, NetShape, Preset};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsSection {
    pub interior: Option<Vec<usize>>,
    pub boundary: Option<usize>,
    pub interface: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub tau: Option<f64>,
    pub tau_b: Option<f64>,
    pub tau_gamma1: Option<f64>,
    pub tau_gamma2: Option<f64>,
}

/// Parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub problem: Option<String>,
    pub method: Option<Method>,
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub lr: Option<f64>,
    pub record_every: Option<usize>,
    pub checkpoint_every: Option<usize>,
    /// Test-grid nodes per axis.
    pub grid: Option<usize>,
    pub points: Option<PointsSection>,
    pub weights: Option<WeightsSection>,
    /// Continuous network of the AE model, or the single network of `pinn`.
    pub fcn: Option<NetShape>,
    /// Attention networks of the AE model, one per subdomain.
    pub ia: Option<Vec<IaShape>>,
    /// Per-subdomain networks of `mpinn` and `ipinn`.
    pub net: Option<Vec<NetShape>>,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid configuration file")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Command-line values take precedence over file values.
    pub fn overlay(mut self, cli: &RunFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if cli.$f.is_some() { self.$f = cli.$f.clone(); } )* };
        }
        take!(
            problem,
            method,
            preset,
            seed,
            iterations,
            lr,
            record_every,
            checkpoint_every,
            grid,
            points,
            weights,
            fcn,
            ia,
            net
        );
        self
    }
}

/// A configuration with every preset default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub method: Method,
    pub preset: Preset,
    pub grid: Option<usize>,
    pub train: TrainConfig,
}

pub fn parse_problem(s: Option<&str>) -> Result<ProblemId> {
    let valid = || {
        ProblemId::ALL
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    match s {
        None => bail!(crate::UsageError(format!(
            "missing problem id; valid ids: {}",
            valid()
        ))),
        Some(s) => s.parse().map_err(|_| {
            crate::UsageError(format!("unknown problem '{s}'; valid ids: {}", valid())).into()
        }),
    }
}

impl RunFile {
    pub fn resolve(&self) -> Result<Resolved> {
        let id = parse_problem(self.problem.as_deref())?;
        let method = self.method.unwrap_or(Method::Ae);
        let preset = self.preset.unwrap_or(Preset::Paper);
        let spec = builtin(id)?;
        let table = presets::family_table(id);

        let arch = match method.variant() {
            None => presets::ae_arch(
                &spec,
                self.fcn.unwrap_or(table.fcn),
                self.ia.as_deref().unwrap_or(table.ia),
            )?,
            Some(Variant::Pinn) => {
                presets::baseline_arch(&spec, Variant::Pinn, &[self.fcn.unwrap_or(table.pinn)])?
            }
            Some(v) => presets::baseline_arch(&spec, v, self.net.as_deref().unwrap_or(table.rows))?,
        };
        let base = presets::counts(id);
        let pts = self.points.clone().unwrap_or_default();
        let counts = PointCounts {
            interior: pts.interior.unwrap_or(base.interior),
            boundary: pts.boundary.unwrap_or(base.boundary),
            interface: pts.interface.unwrap_or(base.interface),
        };
        let mut train = TrainConfig::new(
            id,
            arch,
            counts,
            self.iterations.unwrap_or(presets::iterations(id, preset)),
        );
        if let Some(s) = self.seed {
            train.seed = s;
        }
        if let Some(lr) = self.lr {
            train.lr = lr;
        }
        if let Some(r) = self.record_every {
            train.record_every = r;
        }
        train.checkpoint_every = self.checkpoint_every;
        if let Some(w) = &self.weights {
            let d = LossWeights::default();
            train.weights = LossWeights {
                tau: w.tau.unwrap_or(d.tau),
                tau_b: w.tau_b.unwrap_or(d.tau_b),
                tau_gamma1: w.tau_gamma1.unwrap_or(d.tau_gamma1),
                tau_gamma2: w.tau_gamma2.unwrap_or(d.tau_gamma2),
            };
        }
        train.validate(&spec)?;
        if self.grid == Some(0) {
            bail!("grid must have at least one node per axis");
        }
        Ok(Resolved {
            method,
            preset,
            grid: self.grid,
            train,
        })
    }
}
