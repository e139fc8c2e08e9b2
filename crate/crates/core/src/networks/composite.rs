use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Batch, Fcn, FcnArch, FieldModel, IaArch, IaNet, ModelArch};
use crate::diffengine::{Dd, Graph, Jet, JetOf, NodeId};
use crate::error::{Error, Result};

/// Continuous network plus one attention network per subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeArch {
    pub continuous: FcnArch,
    /// Indexed by subdomain.
    pub attention: Vec<IaArch>,
}

impl AeArch {
    pub fn num_params(&self) -> usize {
        self.continuous.num_params() + self.attention.iter().map(IaArch::num_params).sum::<usize>()
    }

    pub fn validate(&self) -> Result<()> {
        self.continuous.validate()?;
        if self.attention.is_empty() {
            return Err(Error::Config(
                "composite model needs at least one attention network".into(),
            ));
        }
        for ia in &self.attention {
            ia.validate()?;
            if ia.input_dim != self.continuous.input_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.continuous.input_dim,
                    got: ia.input_dim,
                });
            }
        }
        Ok(())
    }
}

/// `u = μ(x) + u_IA,i(x)` on subdomain `i`. Parameters: the continuous
/// network first, then the attention networks in subdomain order.
#[derive(Debug, Clone, PartialEq)]
pub struct AePinn {
    arch: AeArch,
    continuous: Fcn,
    attention: Vec<IaNet>,
}

impl AePinn {
    pub fn new(arch: AeArch) -> Result<Self> {
        arch.validate()?;
        let continuous = Fcn::new(arch.continuous.clone(), 0);
        let mut off = continuous.end();
        let attention = arch
            .attention
            .iter()
            .map(|a| {
                let net = IaNet::new(a.clone(), off);
                off = net.end();
                net
            })
            .collect();
        Ok(AePinn {
            arch,
            continuous,
            attention,
        })
    }

    pub fn continuous(&self) -> &Fcn {
        &self.continuous
    }

    pub fn attention(&self) -> &[IaNet] {
        &self.attention
    }

    pub fn num_subdomains(&self) -> usize {
        self.attention.len()
    }

    fn branch(&self, sub: usize) -> Result<&IaNet> {
        self.attention.get(sub).ok_or_else(|| {
            Error::Config(format!(
                "subdomain {sub} out of range for {} attention networks",
                self.attention.len()
            ))
        })
    }

    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        self.continuous.init(params, rng);
        for ia in &self.attention {
            ia.init(params, rng);
        }
    }
}

impl FieldModel for AePinn {
    fn input_dim(&self) -> usize {
        self.arch.continuous.input_dim
    }

    fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    fn arch(&self) -> ModelArch {
        ModelArch::Ae(self.arch.clone())
    }

    fn value(&self, params: &[f64], x: &[f64], sub: usize) -> Result<f64> {
        Ok(self.continuous.forward(params, x)? + self.branch(sub)?.forward(params, x)?)
    }

    fn jet(&self, params: &[f64], x: &[f64], sub: usize) -> Result<Jet> {
        let xs = Jet::seed(x);
        Ok(self.continuous.forward(params, &xs)? + self.branch(sub)?.forward(params, &xs)?)
    }

    fn jet_dd(&self, params: &[f64], x: &[f64], sub: usize) -> Result<JetOf<Dd>> {
        let xs = JetOf::<Dd>::seed(x);
        Ok(self.continuous.forward(params, &xs)? + self.branch(sub)?.forward(params, &xs)?)
    }

    fn record(&self, g: &mut Graph<'_>, batch: &Batch<'_>, sub: usize) -> NodeId {
        let mu = self
            .continuous
            .record(g, batch.x, self.arch.continuous.activation);
        let ia = self.attention[sub].record(g, batch);
        g.add(mu, ia)
    }
}
