//! Reference methods trained through the same loss as the composite model:
//! a single network, independent networks per subdomain, and one shared
//! network whose activation changes per subdomain.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::diffengine::{Activation, Dd, Graph, Jet, JetOf, NodeId};
use crate::error::{Error, Result};
use crate::networks::{Batch, Fcn, FcnArch, FieldModel, ModelArch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Pinn,
    Mpinn,
    Ipinn,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Pinn, Variant::Mpinn, Variant::Ipinn];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pinn => "pinn",
            Variant::Mpinn => "mpinn",
            Variant::Ipinn => "ipinn",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pinn" => Ok(Variant::Pinn),
            "mpinn" => Ok(Variant::Mpinn),
            "ipinn" => Ok(Variant::Ipinn),
            other => Err(Error::Parse(format!("unknown baseline `{other}`"))),
        }
    }
}

/// A baseline model laid out in one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Pinn(Fcn),
    /// One network per subdomain, stored consecutively.
    Mpinn(Vec<Fcn>),
    /// A single parameter set; only the hidden activation varies.
    Ipinn {
        net: Fcn,
        activations: Vec<Activation>,
    },
}

/// Builds a baseline from per-subnetwork table rows.
///
/// `pinn` takes the first row. `mpinn` needs one row per subdomain. `ipinn`
/// needs one row per subdomain with a common depth; the shared network takes
/// the widest row and each row contributes its activation.
pub fn build_baseline(
    variant: Variant,
    rows: &[FcnArch],
    n_subdomains: usize,
) -> Result<BaselineModel> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Config("baseline needs at least one network row".into()))?;
    let need_per_subdomain = || {
        if rows.len() != n_subdomains {
            return Err(Error::Config(format!(
                "{variant} needs {n_subdomains} network rows, got {}",
                rows.len()
            )));
        }
        Ok(())
    };
    let arch = match variant {
        Variant::Pinn => ModelArch::Pinn { net: first.clone() },
        Variant::Mpinn => {
            need_per_subdomain()?;
            ModelArch::Mpinn {
                nets: rows.to_vec(),
            }
        }
        Variant::Ipinn => {
            need_per_subdomain()?;
            if rows
                .iter()
                .any(|r| r.hidden.len() != first.hidden.len() || r.input_dim != first.input_dim)
            {
                return Err(Error::Config(
                    "ipinn rows must share depth and input dimension".into(),
                ));
            }
            let hidden = (0..first.hidden.len())
                .map(|l| rows.iter().map(|r| r.hidden[l]).max().unwrap_or(0))
                .collect();
            ModelArch::Ipinn {
                net: FcnArch {
                    input_dim: first.input_dim,
                    hidden,
                    activation: first.activation,
                },
                activations: rows.iter().map(|r| r.activation).collect(),
            }
        }
    };
    BaselineModel::from_arch(&arch)
}

impl BaselineModel {
    pub fn from_arch(arch: &ModelArch) -> Result<Self> {
        arch.validate()?;
        Ok(match arch {
            ModelArch::Pinn { net } => BaselineModel::Pinn(Fcn::new(net.clone(), 0)),
            ModelArch::Mpinn { nets } => {
                let mut off = 0;
                BaselineModel::Mpinn(
                    nets.iter()
                        .map(|a| {
                            let f = Fcn::new(a.clone(), off);
                            off = f.end();
                            f
                        })
                        .collect(),
                )
            }
            ModelArch::Ipinn { net, activations } => BaselineModel::Ipinn {
                net: Fcn::new(net.clone(), 0),
                activations: activations.clone(),
            },
            ModelArch::Ae(_) | ModelArch::Exact { .. } => {
                return Err(Error::Config(format!(
                    "`{}` is not a baseline architecture",
                    arch.method()
                )))
            }
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            BaselineModel::Pinn(_) => Variant::Pinn,
            BaselineModel::Mpinn(_) => Variant::Mpinn,
            BaselineModel::Ipinn { .. } => Variant::Ipinn,
        }
    }

    /// Network and activation serving subdomain `sub`.
    fn branch(&self, sub: usize) -> Result<(&Fcn, Activation)> {
        let out_of_range =
            |n: usize| Error::Config(format!("subdomain {sub} out of range for {n} branches"));
        match self {
            BaselineModel::Pinn(net) => Ok((net, net.arch().activation)),
            BaselineModel::Mpinn(nets) => nets
                .get(sub)
                .map(|n| (n, n.arch().activation))
                .ok_or_else(|| out_of_range(nets.len())),
            BaselineModel::Ipinn { net, activations } => activations
                .get(sub)
                .map(|&a| (net, a))
                .ok_or_else(|| out_of_range(activations.len())),
        }
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        match self {
            BaselineModel::Pinn(net) | BaselineModel::Ipinn { net, .. } => net.init(params, rng),
            BaselineModel::Mpinn(nets) => nets.iter().for_each(|n| n.init(params, rng)),
        }
    }
}

impl FieldModel for BaselineModel {
    fn input_dim(&self) -> usize {
        match self {
            BaselineModel::Pinn(net) | BaselineModel::Ipinn { net, .. } => net.arch().input_dim,
            BaselineModel::Mpinn(nets) => nets[0].arch().input_dim,
        }
    }

    fn num_params(&self) -> usize {
        match self {
            BaselineModel::Pinn(net) | BaselineModel::Ipinn { net, .. } => net.num_params(),
            BaselineModel::Mpinn(nets) => nets.iter().map(Fcn::num_params).sum(),
        }
    }

    fn arch(&self) -> ModelArch {
        match self {
            BaselineModel::Pinn(net) => ModelArch::Pinn {
                net: net.arch().clone(),
            },
            BaselineModel::Mpinn(nets) => ModelArch::Mpinn {
                nets: nets.iter().map(|n| n.arch().clone()).collect(),
            },
            BaselineModel::Ipinn { net, activations } => ModelArch::Ipinn {
                net: net.arch().clone(),
                activations: activations.clone(),
            },
        }
    }

    fn value(&self, params: &[f64], x: &[f64], sub: usize) -> Result<f64> {
        let (net, act) = self.branch(sub)?;
        net.forward_with(params, x, act)
    }

    fn jet(&self, params: &[f64], x: &[f64], sub: usize) -> Result<Jet> {
        let (net, act) = self.branch(sub)?;
        net.forward_with(params, &Jet::seed(x), act)
    }

    fn jet_dd(&self, params: &[f64], x: &[f64], sub: usize) -> Result<JetOf<Dd>> {
        let (net, act) = self.branch(sub)?;
        net.forward_with(params, &JetOf::<Dd>::seed(x), act)
    }

    fn record(&self, g: &mut Graph<'_>, batch: &Batch<'_>, sub: usize) -> NodeId {
        let (net, act) = self.branch(sub).expect("subdomain within model branches");
        net.record(g, batch.x, act)
    }
}
