use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, glorot_fill, Batch};
use crate::diffengine::{Activation, Graph, NodeId, Real};
use crate::error::{Error, Result};
use crate::geometry::LevelSet;

/// Single-layer network mapping a level-set value to a width-`m` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub width: usize,
    pub activation: Activation,
    /// Start of `W^T` (`m x 1`) followed by `b^T` (`m`).
    pub offset: usize,
}

impl Transmitter {
    pub fn num_params(&self) -> usize {
        2 * self.width
    }

    pub fn forward<T: Real>(&self, params: &[f64], phi: T) -> Vec<T> {
        let m = self.width;
        let w = &params[self.offset..self.offset + m];
        let b = &params[self.offset + m..self.offset + 2 * m];
        affine(w, b, &[phi])
            .into_iter()
            .map(|z| self.activation.apply(z))
            .collect()
    }
}

/// Shape of an interface-attention network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaArch {
    pub input_dim: usize,
    pub width: usize,
    pub modules: usize,
    pub activation: Activation,
    /// Level set fed to the transmitter.
    pub level_set: LevelSet,
}

impl IaArch {
    /// Lift, transmitter, `4M` square affine maps and the head.
    pub fn num_params(&self) -> usize {
        let (d, m) = (self.input_dim, self.width);
        m * (d + 1) + 2 * m + 4 * self.modules * m * (m + 1) + (m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.input_dim) || self.width == 0 || self.modules == 0 {
            return Err(Error::Config(format!(
                "invalid attention network: dim {}, width {}, modules {}",
                self.input_dim, self.width, self.modules
            )));
        }
        Ok(())
    }
}

/// Interface-attention network. Parameters are laid out as lift `(W⁰, b⁰)`,
/// transmitter `(W^T, b^T)`, then per module `(W_Q, b_Q, W_K, b_K, W_V, b_V,
/// W, b)`, then head `(W, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IaNet {
    arch: IaArch,
    offset: usize,
}

struct Offsets {
    lift: usize,
    transmitter: usize,
    modules: usize,
    head: usize,
}

impl IaNet {
    pub fn new(arch: IaArch, offset: usize) -> Self {
        IaNet { arch, offset }
    }

    pub fn arch(&self) -> &IaArch {
        &self.arch
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn num_params(&self) -> usize {
        self.arch.num_params()
    }

    pub fn end(&self) -> usize {
        self.offset + self.num_params()
    }

    pub fn transmitter(&self) -> Transmitter {
        Transmitter {
            width: self.arch.width,
            activation: self.arch.activation,
            offset: self.offsets().transmitter,
        }
    }

    fn offsets(&self) -> Offsets {
        let (d, m) = (self.arch.input_dim, self.arch.width);
        let lift = self.offset;
        let transmitter = lift + m * d + m;
        let modules = transmitter + 2 * m;
        let head = modules + self.arch.modules * 4 * m * (m + 1);
        Offsets {
            lift,
            transmitter,
            modules,
            head,
        }
    }

    pub fn forward<T: Real>(&self, params: &[f64], x: &[T]) -> Result<T> {
        let (d, m) = (self.arch.input_dim, self.arch.width);
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let act = self.arch.activation;
        let sigma = |v: Vec<T>| -> Vec<T> { v.into_iter().map(|z| act.apply(z)).collect() };
        let o = self.offsets();
        let t = self
            .transmitter()
            .forward(params, self.arch.level_set.eval(x));

        let mut h = sigma(affine(
            &params[o.lift..o.lift + m * d],
            &params[o.lift + m * d..o.transmitter],
            x,
        ));
        let sq = m * m + m;
        for n in 0..self.arch.modules {
            let base = o.modules + 4 * n * sq;
            let map = |k: usize, v: &[T]| {
                let s = base + k * sq;
                affine(&params[s..s + m * m], &params[s + m * m..s + sq], v)
            };
            let (q, k, v) = (map(0, &h), map(1, &h), map(2, &h));
            let a: Vec<T> = q
                .iter()
                .zip(&k)
                .zip(&v)
                .map(|((&q, &k), &v)| act.apply(q * k) * v)
                .collect();
            let z = sigma(map(3, &a));
            h = z
                .iter()
                .zip(&t)
                .zip(&h)
                .map(|((&z, &t), &h)| (T::cst(1.0) - z) * t + z * h)
                .collect();
        }
        Ok(affine(
            &params[o.head..o.head + m],
            &params[o.head + m..o.head + m + 1],
            &h,
        )[0])
    }

    pub fn record(&self, g: &mut Graph<'_>, batch: &Batch<'_>) -> NodeId {
        let m = self.arch.width;
        let act = self.arch.activation;
        let o = self.offsets();
        let d = batch.layout.dim;

        let phi: Vec<_> = batch
            .points
            .chunks_exact(d)
            .map(|p| self.arch.level_set.jet(p))
            .collect();
        let phi = g.input_jets(&phi, batch.layout);
        let t = g.affine(phi, m, o.transmitter, Some(o.transmitter + m));
        let t = g.activate(t, act);

        let h0 = g.affine(batch.x, m, o.lift, Some(o.lift + m * d));
        let mut h = g.activate(h0, act);
        let sq = m * m + m;
        for n in 0..self.arch.modules {
            let base = o.modules + 4 * n * sq;
            let map = |g: &mut Graph<'_>, k: usize, v: NodeId| {
                let s = base + k * sq;
                g.affine(v, m, s, Some(s + m * m))
            };
            let q = map(g, 0, h);
            let k = map(g, 1, h);
            let v = map(g, 2, h);
            let qk = g.mul(q, k);
            let qk = g.activate(qk, act);
            let a = g.mul(qk, v);
            let z = map(g, 3, a);
            let z = g.activate(z, act);
            let keep = g.one_minus(z);
            let from_t = g.mul(keep, t);
            let from_h = g.mul(z, h);
            h = g.add(from_t, from_h);
        }
        g.affine(h, 1, o.head, Some(o.head + m))
    }

    /// Glorot-uniform weights and zero biases, drawn in parameter order.
    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        let (d, m) = (self.arch.input_dim, self.arch.width);
        let o = self.offsets();
        let mut fill = |start: usize, rows: usize, cols: usize| {
            glorot_fill(&mut params[start..start + rows * cols], cols, rows, rng);
            params[start + rows * cols..start + rows * cols + rows].fill(0.0);
        };
        fill(o.lift, m, d);
        fill(o.transmitter, m, 1);
        for n in 0..4 * self.arch.modules {
            fill(o.modules + n * (m * m + m), m, m);
        }
        fill(o.head, 1, m);
    }
}
