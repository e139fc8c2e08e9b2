use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, glorot_fill};
use crate::diffengine::{Activation, Graph, NodeId, Real};
use crate::error::{Error, Result};

/// Layer widths and activation of a fully connected scalar network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnArch {
    pub input_dim: usize,
    /// Hidden widths `m_1..m_N`; empty means a single affine map.
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl FcnArch {
    /// `depth` hidden layers of equal `width`.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, activation: Activation) -> Self {
        FcnArch {
            input_dim,
            hidden: vec![width; depth],
            activation,
        }
    }

    /// `[d, m_1, .., m_N, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }

    pub fn num_params(&self) -> usize {
        self.widths().windows(2).map(|p| p[1] * p[0] + p[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.input_dim) || self.hidden.contains(&0) {
            return Err(Error::Config(format!(
                "invalid network widths {:?}",
                self.widths()
            )));
        }
        Ok(())
    }
}

/// A fully connected network whose parameters start at `offset` of a flat
/// vector, stored layer by layer as `W` (row-major `m_n x m_{n-1}`) then `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fcn {
    arch: FcnArch,
    offset: usize,
}

impl Fcn {
    pub fn new(arch: FcnArch, offset: usize) -> Self {
        Fcn { arch, offset }
    }

    pub fn arch(&self) -> &FcnArch {
        &self.arch
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    /// One past the last parameter index.
    pub fn end(&self) -> usize {
        self.offset + self.num_params()
    }

    pub fn forward<T: Real>(&self, params: &[f64], x: &[T]) -> Result<T> {
        self.forward_with(params, x, self.arch.activation)
    }

    /// Forward pass with the hidden activation overridden.
    pub fn forward_with<T: Real>(&self, params: &[f64], x: &[T], act: Activation) -> Result<T> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        let widths = self.arch.widths();
        let last = widths.len() - 2;
        let mut off = self.offset;
        let mut h = x.to_vec();
        for (n, pair) in widths.windows(2).enumerate() {
            let (inn, out) = (pair[0], pair[1]);
            let w = &params[off..off + out * inn];
            let b = &params[off + out * inn..off + out * inn + out];
            h = affine(w, b, &h);
            if n < last {
                h.iter_mut().for_each(|z| *z = act.apply(*z));
            }
            off += out * inn + out;
        }
        Ok(h[0])
    }

    pub fn record(&self, g: &mut Graph<'_>, x: NodeId, act: Activation) -> NodeId {
        let widths = self.arch.widths();
        let last = widths.len() - 2;
        let mut off = self.offset;
        let mut h = x;
        for (n, pair) in widths.windows(2).enumerate() {
            let (inn, out) = (pair[0], pair[1]);
            h = g.affine(h, out, off, Some(off + out * inn));
            if n < last {
                h = g.activate(h, act);
            }
            off += out * inn + out;
        }
        h
    }

    /// Glorot-uniform weights and zero biases, drawn in parameter order.
    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        let mut off = self.offset;
        for pair in self.arch.widths().windows(2) {
            let (inn, out) = (pair[0], pair[1]);
            glorot_fill(&mut params[off..off + out * inn], inn, out, rng);
            params[off + out * inn..off + out * inn + out].fill(0.0);
            off += out * inn + out;
        }
    }
}
