use super::{Batch, FieldModel, ModelArch};
use crate::diffengine::{Dd, Graph, Jet, JetOf, NodeId};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

/// The closed-form solution posing as a parameter-free model; branch `s`
/// is the exact solution of subdomain `s`.
#[derive(Debug, Clone)]
pub struct ExactModel {
    spec: ProblemSpec,
}

impl ExactModel {
    pub fn new(spec: ProblemSpec) -> Self {
        ExactModel { spec }
    }

    fn check(&self, x: &[f64], sub: usize) -> Result<()> {
        if x.len() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: x.len(),
            });
        }
        if sub >= self.spec.n_subdomains() {
            return Err(Error::Config(format!("subdomain {sub} out of range")));
        }
        Ok(())
    }
}

impl FieldModel for ExactModel {
    fn input_dim(&self) -> usize {
        self.spec.dim()
    }

    fn num_params(&self) -> usize {
        0
    }

    fn arch(&self) -> ModelArch {
        ModelArch::Exact {
            problem: self.spec.id.to_string(),
        }
    }

    fn value(&self, _params: &[f64], x: &[f64], sub: usize) -> Result<f64> {
        self.check(x, sub)?;
        Ok(self.spec.exact(sub, x))
    }

    fn jet(&self, _params: &[f64], x: &[f64], sub: usize) -> Result<Jet> {
        self.check(x, sub)?;
        Ok(self.spec.exact_jet(sub, x))
    }

    fn jet_dd(&self, params: &[f64], x: &[f64], sub: usize) -> Result<JetOf<Dd>> {
        Ok(self.jet(params, x, sub)?.lift())
    }

    fn record(&self, g: &mut Graph<'_>, batch: &Batch<'_>, sub: usize) -> NodeId {
        let d = batch.layout.dim;
        let jets: Vec<Jet> = batch
            .points
            .chunks_exact(d)
            .map(|x| self.spec.exact_jet(sub, x))
            .collect();
        g.input_jets(&jets, batch.layout)
    }
}
