use serde::{Deserialize, Serialize};

use crate::diffengine::{Dd, Graph, JetLayout, JetOrder, NodeId, Objective, ParamGradient, Tensor};
use crate::error::{Error, Result};
use crate::geometry::normal;
use crate::networks::{Batch, FieldModel};
use crate::problems::ProblemSpec;
use crate::sampling::{Tag, TrainingPoints};

/// Weights of the four loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub tau: f64,
    pub tau_b: f64,
    pub tau_gamma1: f64,
    pub tau_gamma2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            tau: 1.0,
            tau_b: 1.0,
            tau_gamma1: 1.0,
            tau_gamma2: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tau, self.tau_b, self.tau_gamma1, self.tau_gamma2];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!(
                "loss weights must be finite and non-negative: {all:?}"
            )));
        }
        Ok(())
    }
}

/// Mean squared residual of each term and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pde: f64,
    pub boundary: f64,
    pub jump_value: f64,
    pub jump_flux: f64,
    pub total: f64,
}

struct InteriorBlock {
    sub: usize,
    points: Vec<f64>,
    alpha: Vec<f64>,
    /// `n x dim`.
    dalpha: Vec<f64>,
    f: Vec<f64>,
    /// Position of each point within the pooled interior term.
    index: Vec<usize>,
}

struct BoundaryBlock {
    sub: usize,
    points: Vec<f64>,
    h: Vec<f64>,
    index: Vec<usize>,
}

struct InterfaceBlock {
    inside: usize,
    outside: usize,
    points: Vec<f64>,
    a_in: Vec<f64>,
    a_out: Vec<f64>,
    /// `n x dim`.
    normals: Vec<f64>,
    beta: Vec<f64>,
    rho: Vec<f64>,
    index: Vec<usize>,
}

/// Collocation points with every data field the residuals need, evaluated
/// once from the problem's closed forms.
pub struct LossData {
    dim: usize,
    interior: Vec<InteriorBlock>,
    boundary: Vec<BoundaryBlock>,
    interface: Vec<InterfaceBlock>,
    n_interior: usize,
    n_boundary: usize,
    n_interface: usize,
}

impl LossData {
    pub fn new(spec: &ProblemSpec, points: &TrainingPoints) -> Result<Self> {
        let d = spec.dim();
        let mut interior = Vec::new();
        let mut n_interior = 0;
        for set in &points.interior {
            let Tag::Interior(sub) = set.tag else {
                return Err(Error::Mismatch(
                    "interior set with a non-interior tag".into(),
                ));
            };
            let mut blk = InteriorBlock {
                sub,
                points: set.points.clone(),
                alpha: Vec::with_capacity(set.len()),
                dalpha: Vec::with_capacity(set.len() * d),
                f: Vec::with_capacity(set.len()),
                index: (n_interior..n_interior + set.len()).collect(),
            };
            for x in set.iter() {
                let a = spec.alpha_jet(sub, x);
                blk.alpha.push(a.v);
                blk.dalpha.extend_from_slice(&a.g[..d]);
                blk.f.push(spec.source_on(sub, x));
            }
            n_interior += set.len();
            interior.push(blk);
        }

        let mut boundary: Vec<BoundaryBlock> = Vec::new();
        for (i, x) in points.boundary.iter().enumerate() {
            let sub = spec.domain.subdomain_by_sign(x)?;
            let h = spec.exact_jet(sub, x).v;
            match boundary.iter_mut().find(|b| b.sub == sub) {
                Some(b) => {
                    b.points.extend_from_slice(x);
                    b.h.push(h);
                    b.index.push(i);
                }
                None => boundary.push(BoundaryBlock {
                    sub,
                    points: x.to_vec(),
                    h: vec![h],
                    index: vec![i],
                }),
            }
        }

        let mut interface = Vec::new();
        let mut n_interface = 0;
        for set in &points.interface {
            let Tag::Interface(k) = set.tag else {
                return Err(Error::Mismatch(
                    "interface set with a non-interface tag".into(),
                ));
            };
            let iface = &spec.domain.interfaces[k];
            let (i, o) = (iface.inside, iface.outside);
            let mut blk = InterfaceBlock {
                inside: i,
                outside: o,
                points: set.points.clone(),
                a_in: Vec::with_capacity(set.len()),
                a_out: Vec::with_capacity(set.len()),
                normals: Vec::with_capacity(set.len() * d),
                beta: Vec::with_capacity(set.len()),
                rho: Vec::with_capacity(set.len()),
                index: (n_interface..n_interface + set.len()).collect(),
            };
            for x in set.iter() {
                spec.domain.require_on_interface(k, x)?;
                let (u1, u2) = (spec.exact_jet(i, x), spec.exact_jet(o, x));
                let (a1, a2) = (spec.alpha_jet(i, x).v, spec.alpha_jet(o, x).v);
                let n = normal(&iface.level_set, x)?;
                let rho = (0..d).map(|j| (a1 * u1.g[j] - a2 * u2.g[j]) * n[j]).sum();
                blk.a_in.push(a1);
                blk.a_out.push(a2);
                blk.normals.extend_from_slice(&n);
                blk.beta.push(u1.v - u2.v);
                blk.rho.push(rho);
            }
            n_interface += set.len();
            interface.push(blk);
        }

        Ok(LossData {
            dim: d,
            interior,
            boundary,
            interface,
            n_interior,
            n_boundary: points.boundary.len(),
            n_interface,
        })
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.n_interior, self.n_boundary, self.n_interface)
    }

    /// Loss terms at `params`, plus the parameter gradient of the total when
    /// `want_grad` is set.
    pub fn evaluate(
        &self,
        model: &dyn FieldModel,
        params: &[f64],
        weights: &LossWeights,
        want_grad: bool,
    ) -> Result<(LossBreakdown, Option<Vec<f64>>)> {
        if model.input_dim() != self.dim {
            return Err(Error::Mismatch(format!(
                "model takes {}-dimensional input, problem is {}-dimensional",
                model.input_dim(),
                self.dim
            )));
        }
        if params.len() != model.num_params() {
            return Err(Error::DimensionMismatch {
                expected: model.num_params(),
                got: params.len(),
            });
        }
        let d = self.dim;
        let mut g = Graph::new(params);

        let lap = JetLayout::new(d, JetOrder::Laplacian);
        let ls = lap.laplacian_slot();
        let mut pde_res = Vec::with_capacity(self.interior.len());
        let mut pde_sum = 0.0;
        for blk in &self.interior {
            let batch = Batch::new(&mut g, &blk.points, lap);
            let out = model.record(&mut g, &batch, blk.sub);
            let y = &g.value(out).data;
            let k = lap.width();
            let mut res = Vec::with_capacity(blk.f.len());
            for p in 0..blk.f.len() {
                let c = &y[p * k..(p + 1) * k];
                let mut s = blk.alpha[p] * c[ls];
                for i in 0..d {
                    s += blk.dalpha[p * d + i] * c[1 + i];
                }
                let r = s - blk.f[p];
                if !r.is_finite() {
                    return Err(non_finite("pde", blk.index[p]));
                }
                pde_sum += r * r;
                res.push(r);
            }
            pde_res.push((out, res));
        }

        let value = JetLayout::new(d, JetOrder::Value);
        let mut bnd_res = Vec::with_capacity(self.boundary.len());
        let mut bnd_sum = 0.0;
        for blk in &self.boundary {
            let batch = Batch::new(&mut g, &blk.points, value);
            let out = model.record(&mut g, &batch, blk.sub);
            let y = &g.value(out).data;
            let mut res = Vec::with_capacity(blk.h.len());
            for (p, &h) in blk.h.iter().enumerate() {
                let r = y[p] - h;
                if !r.is_finite() {
                    return Err(non_finite("boundary", blk.index[p]));
                }
                bnd_sum += r * r;
                res.push(r);
            }
            bnd_res.push((out, res));
        }

        let grad = JetLayout::new(d, JetOrder::Gradient);
        let mut ifc_res = Vec::with_capacity(self.interface.len());
        let (mut jv_sum, mut jf_sum) = (0.0, 0.0);
        for blk in &self.interface {
            let batch = Batch::new(&mut g, &blk.points, grad);
            let out_in = model.record(&mut g, &batch, blk.inside);
            let out_out = model.record(&mut g, &batch, blk.outside);
            let (yi, yo) = (&g.value(out_in).data, &g.value(out_out).data);
            let k = grad.width();
            let mut rv = Vec::with_capacity(blk.beta.len());
            let mut rf = Vec::with_capacity(blk.beta.len());
            for p in 0..blk.beta.len() {
                let (ci, co) = (&yi[p * k..(p + 1) * k], &yo[p * k..(p + 1) * k]);
                let v = ci[0] - co[0] - blk.beta[p];
                let n = &blk.normals[p * d..(p + 1) * d];
                let flux: f64 = (0..d)
                    .map(|j| (blk.a_in[p] * ci[1 + j] - blk.a_out[p] * co[1 + j]) * n[j])
                    .sum();
                let f = flux - blk.rho[p];
                if !v.is_finite() {
                    return Err(non_finite("jump_value", blk.index[p]));
                }
                if !f.is_finite() {
                    return Err(non_finite("jump_flux", blk.index[p]));
                }
                jv_sum += v * v;
                jf_sum += f * f;
                rv.push(v);
                rf.push(f);
            }
            ifc_res.push((out_in, out_out, rv, rf));
        }

        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        let mut lb = LossBreakdown {
            pde: mean(pde_sum, self.n_interior),
            boundary: mean(bnd_sum, self.n_boundary),
            jump_value: mean(jv_sum, self.n_interface),
            jump_flux: mean(jf_sum, self.n_interface),
            total: 0.0,
        };
        lb.total = weights.tau * lb.pde
            + weights.tau_b * lb.boundary
            + weights.tau_gamma1 * lb.jump_value
            + weights.tau_gamma2 * lb.jump_flux;
        if !lb.total.is_finite() {
            return Err(non_finite("total", 0));
        }
        if !want_grad {
            return Ok((lb, None));
        }

        let mut seeds: Vec<(NodeId, Tensor)> = Vec::new();
        let scale = |w: f64, n: usize| if n == 0 { 0.0 } else { 2.0 * w / n as f64 };

        let s_pde = scale(weights.tau, self.n_interior);
        let k = lap.width();
        for (blk, (out, res)) in self.interior.iter().zip(&pde_res) {
            let mut t = Tensor::zeros(1, res.len() * k);
            for (p, r) in res.iter().enumerate() {
                let c = &mut t.data[p * k..(p + 1) * k];
                let s = s_pde * r;
                c[ls] = s * blk.alpha[p];
                for i in 0..d {
                    c[1 + i] = s * blk.dalpha[p * d + i];
                }
            }
            seeds.push((*out, t));
        }

        let s_bnd = scale(weights.tau_b, self.n_boundary);
        for (out, res) in &bnd_res {
            let t = Tensor {
                rows: 1,
                cols: res.len(),
                data: res.iter().map(|r| s_bnd * r).collect(),
            };
            seeds.push((*out, t));
        }

        let s_jv = scale(weights.tau_gamma1, self.n_interface);
        let s_jf = scale(weights.tau_gamma2, self.n_interface);
        let k = grad.width();
        for (blk, (out_in, out_out, rv, rf)) in self.interface.iter().zip(&ifc_res) {
            let mut ti = Tensor::zeros(1, rv.len() * k);
            let mut to = Tensor::zeros(1, rv.len() * k);
            for p in 0..rv.len() {
                let (ci, co) = (
                    &mut ti.data[p * k..(p + 1) * k],
                    &mut to.data[p * k..(p + 1) * k],
                );
                ci[0] = s_jv * rv[p];
                co[0] = -s_jv * rv[p];
                let sf = s_jf * rf[p];
                for j in 0..d {
                    let n = blk.normals[p * d + j];
                    ci[1 + j] = sf * blk.a_in[p] * n;
                    co[1 + j] = -sf * blk.a_out[p] * n;
                }
            }
            seeds.push((*out_in, ti));
            seeds.push((*out_out, to));
        }

        let gradient = g.backward(seeds);
        if let Some(i) = gradient.iter().position(|v| !v.is_finite()) {
            return Err(non_finite("gradient", i));
        }
        Ok((lb, Some(gradient)))
    }

    /// Weighted total loss evaluated pointwise in double-double arithmetic.
    pub fn total_dd(
        &self,
        model: &dyn FieldModel,
        params: &[f64],
        weights: &LossWeights,
    ) -> Result<Dd> {
        if params.len() != model.num_params() {
            return Err(Error::DimensionMismatch {
                expected: model.num_params(),
                got: params.len(),
            });
        }
        let d = self.dim;
        let c = Dd::from_f64;
        let mut pde = Dd::ZERO;
        for blk in &self.interior {
            for (p, x) in blk.points.chunks_exact(d).enumerate() {
                let u = model.jet_dd(params, x, blk.sub)?;
                let mut s = Dd::ZERO;
                for i in 0..d {
                    s = s + c(blk.alpha[p]) * u.hess(i, i) + c(blk.dalpha[p * d + i]) * u.g[i];
                }
                let r = s - c(blk.f[p]);
                pde = pde + r * r;
            }
        }
        let mut bnd = Dd::ZERO;
        for blk in &self.boundary {
            for (p, x) in blk.points.chunks_exact(d).enumerate() {
                let r = model.jet_dd(params, x, blk.sub)?.v - c(blk.h[p]);
                bnd = bnd + r * r;
            }
        }
        let (mut jv, mut jf) = (Dd::ZERO, Dd::ZERO);
        for blk in &self.interface {
            for (p, x) in blk.points.chunks_exact(d).enumerate() {
                let ui = model.jet_dd(params, x, blk.inside)?;
                let uo = model.jet_dd(params, x, blk.outside)?;
                let v = ui.v - uo.v - c(blk.beta[p]);
                let mut flux = Dd::ZERO;
                for j in 0..d {
                    flux = flux
                        + (c(blk.a_in[p]) * ui.g[j] - c(blk.a_out[p]) * uo.g[j])
                            * c(blk.normals[p * d + j]);
                }
                let f = flux - c(blk.rho[p]);
                jv = jv + v * v;
                jf = jf + f * f;
            }
        }
        let mean = |s: Dd, n: usize| if n == 0 { Dd::ZERO } else { s / c(n as f64) };
        let total = c(weights.tau) * mean(pde, self.n_interior)
            + c(weights.tau_b) * mean(bnd, self.n_boundary)
            + c(weights.tau_gamma1) * mean(jv, self.n_interface)
            + c(weights.tau_gamma2) * mean(jf, self.n_interface);
        if !total.is_finite() {
            return Err(non_finite("total", 0));
        }
        Ok(total)
    }
}

fn non_finite(term: &str, index: usize) -> Error {
    Error::NonFinite {
        term: term.to_string(),
        index,
    }
}

/// Loss terms of `model` at `params` on prepared data.
pub fn assemble_loss(
    model: &dyn FieldModel,
    params: &[f64],
    data: &LossData,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    Ok(data.evaluate(model, params, weights, false)?.0)
}

/// The total loss as an [`Objective`] over the model parameters.
pub struct LossObjective<'a> {
    pub model: &'a dyn FieldModel,
    pub data: &'a LossData,
    pub weights: LossWeights,
}

impl Objective for LossObjective<'_> {
    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn value(&self, params: &[f64]) -> Result<f64> {
        Ok(self
            .data
            .evaluate(self.model, params, &self.weights, false)?
            .0
            .total)
    }

    fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, ParamGradient)> {
        let (lb, g) = self
            .data
            .evaluate(self.model, params, &self.weights, true)?;
        Ok((lb.total, ParamGradient(g.unwrap_or_default())))
    }

    fn difference(&self, plus: &[f64], minus: &[f64]) -> Result<f64> {
        let up = self.data.total_dd(self.model, plus, &self.weights)?;
        let down = self.data.total_dd(self.model, minus, &self.weights)?;
        Ok((up - down).to_f64())
    }
}
