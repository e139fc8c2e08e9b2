//! Layer-granular reverse-mode tape whose values are batches of spatial jets.
//!
//! Every node holds a `rows x (points * K)` tensor: one row per feature, and
//! for each point a contiguous block of `K` jet components (value, spatial
//! gradient, packed upper-triangle spatial Hessian). Spatial derivatives are
//! propagated forward through each op; the reverse sweep then differentiates
//! the whole jet computation with respect to the trainable parameters, which
//! live in one flat slice borrowed by the graph.

use super::activation::Activation;
use super::jet::{Jet, HESS_INDEX};
use super::kernels::{dispatch, Out};

/// How many spatial derivatives a batch carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JetOrder {
    Value,
    Gradient,
    /// Gradient plus the Laplacian only.
    Laplacian,
    Hessian,
}

type Slot = &'static [(usize, usize)];

const HESS_1: [Slot; 1] = [&[(0, 0)]];
const HESS_2: [Slot; 3] = [&[(0, 0)], &[(0, 1)], &[(1, 1)]];
const HESS_3: [Slot; 6] = [
    &[(0, 0)],
    &[(0, 1)],
    &[(0, 2)],
    &[(1, 1)],
    &[(1, 2)],
    &[(2, 2)],
];
const LAP_1: [Slot; 1] = [&[(0, 0)]];
const LAP_2: [Slot; 1] = [&[(0, 0), (1, 1)]];
const LAP_3: [Slot; 1] = [&[(0, 0), (1, 1), (2, 2)]];

/// Widest point block (3-D Hessian).
pub const MAX_WIDTH: usize = 10;

/// Component layout of one point's jet block.
///
/// Each second-order slot holds `Σ ∂²/∂x_a∂x_b` over its `(a, b)` pairs, so
/// propagation rules are the same for full Hessians and Laplacians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JetLayout {
    pub dim: usize,
    pub order: JetOrder,
}

impl JetLayout {
    pub fn new(dim: usize, order: JetOrder) -> Self {
        assert!(
            (1..=3).contains(&dim),
            "spatial dimension must be 1, 2 or 3"
        );
        JetLayout { dim, order }
    }

    /// Number of gradient components.
    #[inline]
    pub fn n_grad(&self) -> usize {
        if self.order >= JetOrder::Gradient {
            self.dim
        } else {
            0
        }
    }

    /// Second-order slots, each a list of `(i, j)` pairs with `i <= j`.
    #[inline]
    pub fn second(&self) -> &'static [Slot] {
        match (self.order, self.dim) {
            (JetOrder::Value | JetOrder::Gradient, _) => &[],
            (JetOrder::Laplacian, 1) => &LAP_1,
            (JetOrder::Laplacian, 2) => &LAP_2,
            (JetOrder::Laplacian, _) => &LAP_3,
            (JetOrder::Hessian, 1) => &HESS_1,
            (JetOrder::Hessian, 2) => &HESS_2,
            (JetOrder::Hessian, _) => &HESS_3,
        }
    }

    /// Components per point.
    #[inline]
    pub fn width(&self) -> usize {
        1 + self.n_grad() + self.second().len()
    }

    /// Slot of `∂²/∂x_i∂x_j` within a point block of a Hessian layout.
    pub fn hess_slot(&self, i: usize, j: usize) -> usize {
        assert_eq!(self.order, JetOrder::Hessian, "layout carries no Hessian");
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let t = self
            .second()
            .iter()
            .position(|s| s[0] == (a, b))
            .expect("pair within dimension");
        1 + self.n_grad() + t
    }

    /// Slot of the Laplacian within a point block of a Laplacian layout.
    pub fn laplacian_slot(&self) -> usize {
        assert_eq!(
            self.order,
            JetOrder::Laplacian,
            "layout carries no Laplacian"
        );
        1 + self.dim
    }

    /// Packs a scalar [`Jet`] into this layout.
    pub fn pack(&self, jet: &Jet, out: &mut [f64]) {
        out[0] = jet.v;
        let ng = self.n_grad();
        out[1..1 + ng].copy_from_slice(&jet.g[..ng]);
        for (t, slot) in self.second().iter().enumerate() {
            let mut s = 0.0;
            for &(a, b) in *slot {
                s += jet.h[HESS_INDEX[a][b]];
            }
            out[1 + ng + t] = s;
        }
    }

    /// Unpacks a point block into a scalar [`Jet`]; absent components are
    /// zero and a Laplacian is spread evenly over the Hessian diagonal.
    pub fn unpack(&self, block: &[f64]) -> Jet {
        let mut jet = Jet::constant(block[0]);
        let ng = self.n_grad();
        jet.g[..ng].copy_from_slice(&block[1..1 + ng]);
        for (t, slot) in self.second().iter().enumerate() {
            let share = block[1 + ng + t] / slot.len() as f64;
            for &(a, b) in *slot {
                jet.h[HESS_INDEX[a][b]] = share;
            }
        }
        jet
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// `C = op(A) * op(B) + beta * C` on row-major data.
///
/// # Safety
/// `a`, `b` and `c` must cover `m x k`, `k x n` and `m x n` elements. `c` may
/// be uninitialized when `beta == 0`.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: *mut f64,
) {
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_trans {
        (1, m as isize)
    } else {
        (k as isize, 1)
    };
    let (rsb, csb) = if b_trans {
        (1, k as isize)
    } else {
        (n as isize, 1)
    };
    debug_assert!(a.len() >= m * k && b.len() >= k * n);
    matrixmultiply::dgemm(
        m,
        k,
        n,
        1.0,
        a.as_ptr(),
        rsa,
        csa,
        b.as_ptr(),
        rsb,
        csb,
        beta,
        c,
        n as isize,
        1,
    );
}

/// `C += op(A) * op(B)`.
#[allow(clippy::too_many_arguments)]
fn gemm_acc(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: all operands are initialized and large enough.
    unsafe { gemm_raw(m, k, n, a, a_trans, b, b_trans, 1.0, c.as_mut_ptr()) }
}

/// Fresh `m x n` tensor holding `op(A) * op(B)`.
#[allow(clippy::too_many_arguments)]
fn gemm_new(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
) -> Tensor {
    assert!(a.len() >= m * k && b.len() >= k * n);
    let mut data = Vec::with_capacity(m * n);
    if k == 0 {
        data.resize(m * n, 0.0);
    } else {
        // SAFETY: with beta = 0 the kernel writes every element of C without
        // reading it, so all `m * n` elements are initialized afterwards.
        unsafe {
            gemm_raw(m, k, n, a, a_trans, b, b_trans, 0.0, data.as_mut_ptr());
            data.set_len(m * n);
        }
    }
    Tensor {
        rows: m,
        cols: n,
        data,
    }
}

/// Runs `fill` against an adjoint slot shaped like `like`, allocating it on first use.
fn with_out(slot: &mut Option<Tensor>, like: &Tensor, fill: impl FnOnce(Out<'_>)) {
    match slot {
        Some(t) => fill(Out::Add(&mut t.data, 0)),
        None => {
            let mut data = Vec::with_capacity(like.data.len());
            fill(Out::New(&mut data));
            *slot = Some(Tensor {
                rows: like.rows,
                cols: like.cols,
                data,
            });
        }
    }
}

/// Adds `scale * src` into an adjoint slot, allocating it on first use.
fn accumulate(slot: &mut Option<Tensor>, src: &Tensor, scale: f64) {
    match slot {
        Some(t) => {
            for (v, w) in t.data.iter_mut().zip(&src.data) {
                *v += scale * w;
            }
        }
        None => {
            let mut t = src.clone();
            if scale != 1.0 {
                for v in &mut t.data {
                    *v *= scale;
                }
            }
            *slot = Some(t);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Input,
    Affine {
        x: NodeId,
        w: usize,
        b: Option<usize>,
    },
    Activate {
        x: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    ScaleShift {
        x: NodeId,
        scale: f64,
    },
}

struct Node {
    value: Tensor,
    layout: JetLayout,
    points: usize,
    op: Op,
    needs_grad: bool,
    /// First three activation derivatives per block; filled only for
    /// activations that need gradients.
    derivs: Vec<[f64; 3]>,
}

/// A recorded computation over one batch layout.
pub struct Graph<'p> {
    params: &'p [f64],
    nodes: Vec<Node>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p [f64]) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p [f64] {
        self.params
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn layout(&self, id: NodeId) -> JetLayout {
        self.nodes[id.0].layout
    }

    pub fn points(&self, id: NodeId) -> usize {
        self.nodes[id.0].points
    }

    pub fn rows(&self, id: NodeId) -> usize {
        self.nodes[id.0].value.rows
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(
        &mut self,
        value: Tensor,
        layout: JetLayout,
        points: usize,
        op: Op,
        needs_grad: bool,
    ) -> NodeId {
        self.nodes.push(Node {
            value,
            layout,
            points,
            op,
            needs_grad,
            derivs: Vec::new(),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant node holding raw tensor data.
    pub fn input(&mut self, value: Tensor, layout: JetLayout) -> NodeId {
        let k = layout.width();
        assert_eq!(value.cols % k, 0);
        let points = value.cols / k;
        self.push(value, layout, points, Op::Input, false)
    }

    /// Coordinates of `points` (row-major `n x dim`) seeded as independent variables.
    pub fn input_points(&mut self, points: &[f64], layout: JetLayout) -> NodeId {
        let d = layout.dim;
        assert_eq!(points.len() % d, 0);
        let n = points.len() / d;
        let k = layout.width();
        let mut t = Tensor::zeros(d, n * k);
        for i in 0..d {
            let row = &mut t.data[i * n * k..(i + 1) * n * k];
            for p in 0..n {
                row[p * k] = points[p * d + i];
                if layout.n_grad() > 0 {
                    row[p * k + 1 + i] = 1.0;
                }
            }
        }
        self.input(t, layout)
    }

    /// Single-row constant node from per-point scalar jets.
    pub fn input_jets(&mut self, jets: &[Jet], layout: JetLayout) -> NodeId {
        let k = layout.width();
        let mut t = Tensor::zeros(1, jets.len() * k);
        for (p, j) in jets.iter().enumerate() {
            layout.pack(j, &mut t.data[p * k..(p + 1) * k]);
        }
        self.input(t, layout)
    }

    /// `W x + b` with `W` an `out x rows(x)` row-major block at `params[w..]`
    /// and `b` an `out`-vector at `params[b..]`.
    pub fn affine(&mut self, x: NodeId, out: usize, w: usize, b: Option<usize>) -> NodeId {
        let (layout, points) = (self.layout(x), self.points(x));
        let xin = &self.nodes[x.0].value;
        let (inn, cols) = (xin.rows, xin.cols);
        let mut y = gemm_new(
            out,
            inn,
            cols,
            &self.params[w..w + out * inn],
            false,
            &xin.data,
            false,
        );
        if let Some(b) = b {
            let k = layout.width();
            for o in 0..out {
                let bias = self.params[b + o];
                let row = &mut y.data[o * cols..(o + 1) * cols];
                for p in 0..points {
                    row[p * k] += bias;
                }
            }
        }
        self.push(y, layout, points, Op::Affine { x, w, b }, true)
    }

    pub fn activate(&mut self, x: NodeId, act: Activation) -> NodeId {
        let node = &self.nodes[x.0];
        let layout = node.layout;
        let needs = node.needs_grad;
        let z = &node.value;
        let mut data = Vec::with_capacity(z.data.len());
        let mut derivs = Vec::with_capacity(if needs {
            z.data.len() / layout.width()
        } else {
            0
        });
        dispatch!(
            layout,
            activate(&z.data, act, &mut data, needs.then_some(&mut derivs))
        );
        let y = Tensor {
            rows: z.rows,
            cols: z.cols,
            data,
        };
        let points = node.points;
        let id = self.push(y, layout, points, Op::Activate { x }, needs);
        self.nodes[id.0].derivs = derivs;
        id
    }

    /// Elementwise product of two equally shaped jet tensors.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        assert_eq!(na.layout, nb.layout);
        assert_eq!(
            (na.value.rows, na.value.cols),
            (nb.value.rows, nb.value.cols)
        );
        let layout = na.layout;
        let mut data = Vec::with_capacity(na.value.data.len());
        dispatch!(layout, mul(&na.value.data, &nb.value.data, &mut data));
        let y = Tensor {
            rows: na.value.rows,
            cols: na.value.cols,
            data,
        };
        let needs = na.needs_grad || nb.needs_grad;
        let points = na.points;
        self.push(y, layout, points, Op::Mul { a, b }, needs)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.linear_combination(a, b, 1.0)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.linear_combination(a, b, -1.0)
    }

    /// `scale * x + shift`, the shift applying to values only.
    pub fn scale_shift(&mut self, x: NodeId, scale: f64, shift: f64) -> NodeId {
        let node = &self.nodes[x.0];
        let k = node.layout.width();
        let mut y = node.value.clone();
        for c in y.data.chunks_exact_mut(k) {
            c[0] = scale * c[0] + shift;
            for v in &mut c[1..] {
                *v *= scale;
            }
        }
        let (layout, points, needs) = (node.layout, node.points, node.needs_grad);
        self.push(y, layout, points, Op::ScaleShift { x, scale }, needs)
    }

    /// `1 − x`.
    pub fn one_minus(&mut self, x: NodeId) -> NodeId {
        self.scale_shift(x, -1.0, 1.0)
    }

    fn linear_combination(&mut self, a: NodeId, b: NodeId, sign: f64) -> NodeId {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        assert_eq!(na.layout, nb.layout);
        assert_eq!(
            (na.value.rows, na.value.cols),
            (nb.value.rows, nb.value.cols)
        );
        let pairs = na.value.data.iter().zip(&nb.value.data);
        let data = if sign > 0.0 {
            pairs.map(|(v, w)| v + w).collect()
        } else {
            pairs.map(|(v, w)| v - w).collect()
        };
        let y = Tensor {
            rows: na.value.rows,
            cols: na.value.cols,
            data,
        };
        let op = if sign > 0.0 {
            Op::Add { a, b }
        } else {
            Op::Sub { a, b }
        };
        let (layout, points, needs) = (na.layout, na.points, na.needs_grad || nb.needs_grad);
        self.push(y, layout, points, op, needs)
    }

    /// Reverse sweep. `seeds` are adjoints of selected node values; returns
    /// the accumulated gradient with respect to every parameter.
    pub fn backward(&self, seeds: Vec<(NodeId, Tensor)>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut adj: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        for (id, t) in seeds {
            let node = &self.nodes[id.0];
            assert_eq!((t.rows, t.cols), (node.value.rows, node.value.cols));
            match &mut adj[id.0] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            }
        }

        for idx in (0..self.nodes.len()).rev() {
            let Some(ybar) = adj[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            match node.op {
                Op::Input => {}
                Op::Affine { x, w, b } => {
                    let xn = &self.nodes[x.0];
                    let (out, inn, cols) = (node.value.rows, xn.value.rows, xn.value.cols);
                    gemm_acc(
                        out,
                        cols,
                        inn,
                        &ybar.data,
                        false,
                        &xn.value.data,
                        true,
                        &mut grad[w..w + out * inn],
                    );
                    if let Some(b) = b {
                        let k = node.layout.width();
                        for o in 0..out {
                            let row = ybar.row(o);
                            let mut s = 0.0;
                            for p in 0..node.points {
                                s += row[p * k];
                            }
                            grad[b + o] += s;
                        }
                    }
                    if xn.needs_grad {
                        let wm = &self.params[w..w + out * inn];
                        match &mut adj[x.0] {
                            Some(xbar) => gemm_acc(
                                inn,
                                out,
                                cols,
                                wm,
                                true,
                                &ybar.data,
                                false,
                                &mut xbar.data,
                            ),
                            slot @ None => {
                                *slot = Some(gemm_new(inn, out, cols, wm, true, &ybar.data, false))
                            }
                        }
                    }
                }
                Op::Activate { x } => {
                    let z = &self.nodes[x.0].value;
                    with_out(&mut adj[x.0], z, |out| {
                        dispatch!(
                            node.layout,
                            activate_back(&z.data, &node.derivs, &ybar.data, out)
                        )
                    });
                }
                Op::Mul { a, b } => {
                    if self.nodes[a.0].needs_grad {
                        let other = &self.nodes[b.0].value;
                        with_out(&mut adj[a.0], other, |out| {
                            dispatch!(node.layout, mul_back(&ybar.data, &other.data, out))
                        });
                    }
                    if self.nodes[b.0].needs_grad {
                        let other = &self.nodes[a.0].value;
                        with_out(&mut adj[b.0], other, |out| {
                            dispatch!(node.layout, mul_back(&ybar.data, &other.data, out))
                        });
                    }
                }
                Op::ScaleShift { x, scale } => accumulate(&mut adj[x.0], &ybar, scale),
                Op::Add { a, b } | Op::Sub { a, b } => {
                    let sign = if matches!(node.op, Op::Add { .. }) {
                        1.0
                    } else {
                        -1.0
                    };
                    if self.nodes[a.0].needs_grad {
                        accumulate(&mut adj[a.0], &ybar, 1.0);
                    }
                    if self.nodes[b.0].needs_grad {
                        accumulate(&mut adj[b.0], &ybar, sign);
                    }
                }
            }
        }
        grad
    }

    /// Per-point scalar jets of a single-row node.
    pub fn jets(&self, id: NodeId) -> Vec<Jet> {
        let node = &self.nodes[id.0];
        assert_eq!(node.value.rows, 1, "jets() needs a scalar-valued node");
        let k = node.layout.width();
        node.value
            .data
            .chunks_exact(k)
            .map(|c| node.layout.unpack(c))
            .collect()
    }
}
