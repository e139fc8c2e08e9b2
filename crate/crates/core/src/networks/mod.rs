//! Fully connected networks, interface-attention networks and the composite
//! model, all evaluated against one flat parameter vector.
//!
//! Every forward pass exists twice: generically over [`Real`] for pointwise
//! values or spatial jets, and as a recording on a batched [`Graph`] for
//! training. Both read parameters from the same canonical layout.

mod checkpoint;
mod composite;
mod exact;
mod fcn;
mod ia;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use composite::{AeArch, AePinn};
pub use exact::ExactModel;
pub use fcn::{Fcn, FcnArch};
pub use ia::{IaArch, IaNet, Transmitter};

use crate::baselines::BaselineModel;
use crate::diffengine::{Activation, Dd, Graph, Jet, JetLayout, JetOf, JetOrder, NodeId, Real};
use crate::error::{Error, Result};
use crate::problems::{builtin, ProblemId};

/// `W x + b` with `W` row-major `b.len() x x.len()`.
pub(crate) fn affine<T: Real>(w: &[f64], b: &[f64], x: &[T]) -> Vec<T> {
    let inn = x.len();
    debug_assert_eq!(w.len(), b.len() * inn);
    b.iter()
        .enumerate()
        .map(|(o, &bo)| {
            let row = &w[o * inn..(o + 1) * inn];
            row.iter()
                .zip(x)
                .fold(T::cst(bo), |acc, (&wi, &xi)| acc + xi.scale(wi))
        })
        .collect()
}

/// Fills a weight block uniformly in `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_fill<R: Rng + ?Sized>(
    w: &mut [f64],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in w {
        *v = rng.gen_range(-bound..=bound);
    }
}

/// Points of one batch together with their coordinate node on a graph.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    /// Row-major `n x dim`.
    pub points: &'a [f64],
    pub x: NodeId,
    pub layout: JetLayout,
}

impl<'a> Batch<'a> {
    pub fn new(g: &mut Graph<'_>, points: &'a [f64], layout: JetLayout) -> Self {
        let x = g.input_points(points, layout);
        Batch { points, x, layout }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.layout.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A trainable scalar field with one branch per subdomain. Parameters are
/// passed in, so one model value serves any parameter vector.
pub trait FieldModel: Send + Sync {
    fn input_dim(&self) -> usize;

    fn num_params(&self) -> usize;

    /// Serializable description from which the model can be rebuilt.
    fn arch(&self) -> ModelArch;

    /// Value of the branch serving subdomain `sub` at `x`.
    fn value(&self, params: &[f64], x: &[f64], sub: usize) -> Result<f64>;

    /// Value, gradient and Hessian of the branch serving `sub` at `x`.
    fn jet(&self, params: &[f64], x: &[f64], sub: usize) -> Result<Jet>;

    /// [`FieldModel::jet`] carried out in double-double arithmetic.
    fn jet_dd(&self, params: &[f64], x: &[f64], sub: usize) -> Result<JetOf<Dd>>;

    /// Records the branch serving `sub` on every point of `batch`; the
    /// result is a single-row node.
    fn record(&self, g: &mut Graph<'_>, batch: &Batch<'_>, sub: usize) -> NodeId;
}

/// Values of branch `sub` at many points through the batched graph.
pub fn evaluate_batch(
    model: &dyn FieldModel,
    params: &[f64],
    points: &[f64],
    sub: usize,
) -> Vec<f64> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut g = Graph::new(params);
    let layout = JetLayout::new(model.input_dim(), JetOrder::Value);
    let batch = Batch::new(&mut g, points, layout);
    let out = model.record(&mut g, &batch, sub);
    g.value(out).data.clone()
}

/// Architecture of any supported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ModelArch {
    Ae(AeArch),
    Pinn {
        net: FcnArch,
    },
    Mpinn {
        nets: Vec<FcnArch>,
    },
    Ipinn {
        net: FcnArch,
        activations: Vec<Activation>,
    },
    /// The closed-form solution of a built-in problem; no parameters.
    Exact {
        problem: String,
    },
}

impl ModelArch {
    pub fn method(&self) -> &'static str {
        match self {
            ModelArch::Ae(_) => "ae",
            ModelArch::Pinn { .. } => "pinn",
            ModelArch::Mpinn { .. } => "mpinn",
            ModelArch::Ipinn { .. } => "ipinn",
            ModelArch::Exact { .. } => "exact",
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            ModelArch::Ae(a) => a.num_params(),
            ModelArch::Pinn { net } | ModelArch::Ipinn { net, .. } => net.num_params(),
            ModelArch::Mpinn { nets } => nets.iter().map(FcnArch::num_params).sum(),
            ModelArch::Exact { .. } => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelArch::Ae(a) => a.validate(),
            ModelArch::Pinn { net } => net.validate(),
            ModelArch::Mpinn { nets } => {
                if nets.is_empty() {
                    return Err(Error::Config("mpinn needs at least one network".into()));
                }
                nets.iter().try_for_each(FcnArch::validate)
            }
            ModelArch::Ipinn { net, activations } => {
                if activations.is_empty() {
                    return Err(Error::Config("ipinn needs at least one activation".into()));
                }
                net.validate()
            }
            ModelArch::Exact { problem } => problem.parse::<ProblemId>().map(|_| ()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn FieldModel>> {
        self.validate()?;
        Ok(match self {
            ModelArch::Ae(a) => Box::new(AePinn::new(a.clone())?),
            ModelArch::Exact { problem } => Box::new(ExactModel::new(builtin(problem.parse()?)?)),
            other => Box::new(BaselineModel::from_arch(other)?),
        })
    }

    /// A fresh parameter vector, fully determined by `rng`.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let mut params = vec![0.0; self.num_params()];
        match self {
            ModelArch::Ae(a) => AePinn::new(a.clone())?.init(&mut params, rng),
            ModelArch::Exact { .. } => {}
            other => BaselineModel::from_arch(other)?.init(&mut params, rng),
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_hand_product() {
        let y = affine(&[1.0, 2.0, 3.0, 4.0], &[0.5, -1.0], &[1.0, -1.0]);
        assert_eq!(y, vec![-0.5, -2.0]);
    }
}
