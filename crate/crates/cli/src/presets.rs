//! Built-in experiment presets: architectures, point counts and budgets per
//! problem and method.

use std::fmt;
use std::str::FromStr;

use aepinn::baselines::{build_baseline, Variant};
use aepinn::diffengine::Activation;
use aepinn::networks::{AeArch, FcnArch, FieldModel, IaArch, ModelArch};
use aepinn::problems::{builtin, ProblemId, ProblemSpec};
use aepinn::sampling::PointCounts;
use aepinn::training::TrainConfig;
use anyhow::{bail, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// Budget scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Published iteration budgets.
    Paper,
    /// Reduced iteration budgets for a single CPU.
    Desk,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        })
    }
}

/// Solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ae,
    Pinn,
    Mpinn,
    Ipinn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ae, Method::Pinn, Method::Mpinn, Method::Ipinn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ae => "ae",
            Method::Pinn => "pinn",
            Method::Mpinn => "mpinn",
            Method::Ipinn => "ipinn",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Ae => None,
            Method::Pinn => Some(Variant::Pinn),
            Method::Mpinn => Some(Variant::Mpinn),
            Method::Ipinn => Some(Variant::Ipinn),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
        {
            Some(m) => Ok(m),
            None => bail!("unknown method '{s}'; valid methods: ae, pinn, mpinn, ipinn"),
        }
    }
}

/// Hidden-layer shape of one fully connected network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub depth: usize,
    pub width: usize,
    pub activation: Activation,
}

impl NetShape {
    pub const fn new(depth: usize, width: usize, activation: Activation) -> Self {
        NetShape {
            depth,
            width,
            activation,
        }
    }

    pub fn fcn(&self, dim: usize) -> FcnArch {
        FcnArch::uniform(dim, self.depth, self.width, self.activation)
    }
}

/// Shape of one interface-attention network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IaShape {
    pub width: usize,
    pub modules: usize,
    pub activation: Activation,
}

impl IaShape {
    pub const fn new(width: usize, modules: usize, activation: Activation) -> Self {
        IaShape {
            width,
            modules,
            activation,
        }
    }
}

/// Network shapes of every method for one problem family.
pub struct FamilyTable {
    pub pinn: NetShape,
    /// One row per subdomain; shared by the multi-network and shared-weight baselines.
    pub rows: &'static [NetShape],
    pub fcn: NetShape,
    pub ia: &'static [IaShape],
}

use Activation::{Cos, Sigmoid, Sin, Tanh};

const EX1: FamilyTable = FamilyTable {
    pinn: NetShape::new(3, 8, Tanh),
    rows: &[NetShape::new(3, 8, Sin), NetShape::new(3, 8, Cos)],
    fcn: NetShape::new(3, 16, Tanh),
    ia: &[IaShape::new(8, 1, Sin), IaShape::new(8, 1, Cos)],
};

const EX2: FamilyTable = FamilyTable {
    pinn: NetShape::new(3, 16, Tanh),
    rows: &[NetShape::new(3, 16, Sin), NetShape::new(3, 16, Tanh)],
    fcn: NetShape::new(3, 16, Tanh),
    ia: &[IaShape::new(16, 2, Cos), IaShape::new(16, 2, Sin)],
};

const EX3: FamilyTable = FamilyTable {
    pinn: NetShape::new(3, 48, Tanh),
    rows: &[NetShape::new(3, 48, Cos), NetShape::new(3, 48, Sin)],
    fcn: NetShape::new(3, 20, Tanh),
    ia: &[IaShape::new(48, 2, Sin), IaShape::new(48, 2, Cos)],
};

const EX4: FamilyTable = FamilyTable {
    pinn: NetShape::new(3, 32, Tanh),
    rows: &[NetShape::new(3, 32, Sin), NetShape::new(3, 32, Cos)],
    fcn: NetShape::new(3, 20, Tanh),
    ia: &[IaShape::new(32, 2, Sin), IaShape::new(32, 2, Cos)],
};

const EX5: FamilyTable = FamilyTable {
    pinn: NetShape::new(3, 32, Tanh),
    rows: &[
        NetShape::new(3, 32, Sigmoid),
        NetShape::new(3, 32, Sin),
        NetShape::new(3, 16, Cos),
        NetShape::new(3, 16, Tanh),
    ],
    fcn: NetShape::new(3, 16, Tanh),
    ia: &[
        IaShape::new(32, 1, Cos),
        IaShape::new(32, 1, Cos),
        IaShape::new(16, 1, Cos),
        IaShape::new(16, 1, Sin),
    ],
};

pub fn family_table(id: ProblemId) -> &'static FamilyTable {
    match id {
        ProblemId::Ex1 => &EX1,
        ProblemId::Ex2 { .. } => &EX2,
        ProblemId::Ex3 => &EX3,
        ProblemId::Ex4 => &EX4,
        ProblemId::Ex5 => &EX5,
    }
}

/// Interior points per subdomain, boundary points, points per interface.
pub fn counts(id: ProblemId) -> PointCounts {
    let (interior, boundary, interface) = match id {
        ProblemId::Ex1 => (vec![50, 50], 2, 1),
        ProblemId::Ex2 { .. } => (vec![200, 300], 400, 120),
        ProblemId::Ex3 => (vec![113, 387], 400, 600),
        ProblemId::Ex4 => (vec![220, 280], 600, 400),
        ProblemId::Ex5 => (vec![100, 100, 100, 700], 600, 400),
    };
    PointCounts {
        interior,
        boundary,
        interface,
    }
}

pub fn iterations(id: ProblemId, preset: Preset) -> usize {
    match (id, preset) {
        (ProblemId::Ex1, _) => 20_000,
        (ProblemId::Ex2 { .. }, Preset::Paper) => 50_000,
        (ProblemId::Ex2 { .. }, Preset::Desk) => 20_000,
        (ProblemId::Ex3 | ProblemId::Ex4, Preset::Paper) => 100_000,
        (ProblemId::Ex3 | ProblemId::Ex4, Preset::Desk) => 30_000,
        (ProblemId::Ex5, Preset::Paper) => 50_000,
        (ProblemId::Ex5, Preset::Desk) => 20_000,
    }
}

/// Assembles an AE architecture: one continuous network plus one attention
/// network per subdomain fed by that subdomain's level set.
pub fn ae_arch(spec: &ProblemSpec, fcn: NetShape, ia: &[IaShape]) -> Result<ModelArch> {
    if ia.len() != spec.n_subdomains() {
        bail!(
            "{} attention networks for {} subdomains",
            ia.len(),
            spec.n_subdomains()
        );
    }
    let d = spec.dim();
    Ok(ModelArch::Ae(AeArch {
        continuous: fcn.fcn(d),
        attention: ia
            .iter()
            .enumerate()
            .map(|(s, a)| IaArch {
                input_dim: d,
                width: a.width,
                modules: a.modules,
                activation: a.activation,
                level_set: spec.transmitter_level_set(s),
            })
            .collect(),
    }))
}

/// Assembles a baseline architecture from per-subdomain rows.
pub fn baseline_arch(spec: &ProblemSpec, variant: Variant, rows: &[NetShape]) -> Result<ModelArch> {
    let d = spec.dim();
    let fcns: Vec<FcnArch> = rows.iter().map(|r| r.fcn(d)).collect();
    Ok(build_baseline(variant, &fcns, spec.n_subdomains())?.arch())
}

pub fn arch(spec: &ProblemSpec, method: Method) -> Result<ModelArch> {
    let t = family_table(spec.id);
    match method.variant() {
        None => ae_arch(spec, t.fcn, t.ia),
        Some(Variant::Pinn) => baseline_arch(spec, Variant::Pinn, &[t.pinn]),
        Some(v) => baseline_arch(spec, v, t.rows),
    }
}

/// The full training configuration of `method` on `id` at `preset` scale.
pub fn config(id: ProblemId, method: Method, preset: Preset) -> Result<TrainConfig> {
    let spec = builtin(id)?;
    Ok(TrainConfig::new(
        id,
        arch(&spec, method)?,
        counts(id),
        iterations(id, preset),
    ))
}
