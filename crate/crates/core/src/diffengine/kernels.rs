//! Elementwise jet kernels, monomorphized per block layout.
//!
//! A block is `[value, gradient.., second-order slots..]`. Each second-order
//! slot `s` holds `Σ ∂²/∂x_a∂x_b` over its terms `(s, 1 + a, 1 + b)`.

use super::activation::Activation;
use super::tape::MAX_WIDTH;

pub(crate) trait Shape {
    /// Block width.
    const K: usize;
    /// `(slot, i, j)` block offsets: slot `slot` sums products over `(i, j)`.
    const TERMS: &'static [(usize, usize, usize)];
}

macro_rules! shape {
    ($name:ident, $k:expr, [$($t:expr),*]) => {
        pub(crate) struct $name;
        impl Shape for $name {
            const K: usize = $k;
            const TERMS: &'static [(usize, usize, usize)] = &[$($t),*];
        }
    };
}

shape!(V1, 1, []);
shape!(V2, 1, []);
shape!(V3, 1, []);
shape!(G1, 2, []);
shape!(G2, 3, []);
shape!(G3, 4, []);
shape!(L1, 3, [(2, 1, 1)]);
shape!(L2, 4, [(3, 1, 1), (3, 2, 2)]);
shape!(L3, 5, [(4, 1, 1), (4, 2, 2), (4, 3, 3)]);
shape!(H1, 3, [(2, 1, 1)]);
shape!(H2, 6, [(3, 1, 1), (4, 1, 2), (5, 2, 2)]);
shape!(
    H3,
    10,
    [
        (4, 1, 1),
        (5, 1, 2),
        (6, 1, 3),
        (7, 2, 2),
        (8, 2, 3),
        (9, 3, 3)
    ]
);

/// Calls `$f::<Shape>($args)` for the shape matching `$layout`.
macro_rules! dispatch {
    ($layout:expr, $f:ident ( $($arg:expr),* $(,)? )) => {{
        use $crate::diffengine::kernels::*;
        use $crate::diffengine::tape::JetOrder;
        let l: JetLayout = $layout;
        match (l.order, l.dim) {
            (JetOrder::Value, 1) => $f::<V1>($($arg),*),
            (JetOrder::Value, 2) => $f::<V2>($($arg),*),
            (JetOrder::Value, _) => $f::<V3>($($arg),*),
            (JetOrder::Gradient, 1) => $f::<G1>($($arg),*),
            (JetOrder::Gradient, 2) => $f::<G2>($($arg),*),
            (JetOrder::Gradient, _) => $f::<G3>($($arg),*),
            (JetOrder::Laplacian, 1) => $f::<L1>($($arg),*),
            (JetOrder::Laplacian, 2) => $f::<L2>($($arg),*),
            (JetOrder::Laplacian, _) => $f::<L3>($($arg),*),
            (JetOrder::Hessian, 1) => $f::<H1>($($arg),*),
            (JetOrder::Hessian, 2) => $f::<H2>($($arg),*),
            (JetOrder::Hessian, _) => $f::<H3>($($arg),*),
        }
    }};
}
pub(crate) use dispatch;

/// Destination of per-block results: either appended to a fresh buffer or
/// added into an existing one.
pub(crate) enum Out<'a> {
    New(&'a mut Vec<f64>),
    /// Target buffer and the offset of the next block.
    Add(&'a mut [f64], usize),
}

impl Out<'_> {
    #[inline(always)]
    fn put(&mut self, block: &[f64]) {
        match self {
            Out::New(v) => v.extend_from_slice(block),
            Out::Add(buf, at) => {
                for (v, w) in buf[*at..*at + block.len()].iter_mut().zip(block) {
                    *v += w;
                }
                *at += block.len();
            }
        }
    }
}

/// `σ(z)` blockwise; pushes `[σ', σ'', σ''']` per block into `derivs` when given.
pub(crate) fn activate<S: Shape>(
    z: &[f64],
    act: Activation,
    out: &mut Vec<f64>,
    mut derivs: Option<&mut Vec<[f64; 3]>>,
) {
    let mut y = [0.0; MAX_WIDTH];
    for zc in z.chunks_exact(S::K) {
        let [s0, s1, s2, s3] = act.derivatives(zc[0]);
        y[0] = s0;
        for i in 1..S::K {
            y[i] = s1 * zc[i];
        }
        for &(s, a, b) in S::TERMS {
            y[s] += s2 * zc[a] * zc[b];
        }
        out.extend_from_slice(&y[..S::K]);
        if let Some(d) = derivs.as_deref_mut() {
            d.push([s1, s2, s3]);
        }
    }
}

/// Adjoint of [`activate`] with respect to its input.
pub(crate) fn activate_back<S: Shape>(
    z: &[f64],
    derivs: &[[f64; 3]],
    ybar: &[f64],
    mut out: Out<'_>,
) {
    let mut zb = [0.0; MAX_WIDTH];
    for ((zc, yb), &[s1, s2, s3]) in z
        .chunks_exact(S::K)
        .zip(ybar.chunks_exact(S::K))
        .zip(derivs)
    {
        let mut d0 = s1 * yb[0];
        for i in 1..S::K {
            d0 += s2 * yb[i] * zc[i];
            zb[i] = s1 * yb[i];
        }
        for &(s, a, b) in S::TERMS {
            let yt = yb[s];
            d0 += s3 * yt * zc[a] * zc[b];
            zb[a] += s2 * yt * zc[b];
            zb[b] += s2 * yt * zc[a];
        }
        zb[0] = d0;
        out.put(&zb[..S::K]);
    }
}

/// Blockwise product `a * b`.
pub(crate) fn mul<S: Shape>(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    let mut y = [0.0; MAX_WIDTH];
    for (ac, bc) in a.chunks_exact(S::K).zip(b.chunks_exact(S::K)) {
        let (a0, b0) = (ac[0], bc[0]);
        y[0] = a0 * b0;
        for i in 1..S::K {
            y[i] = ac[i] * b0 + a0 * bc[i];
        }
        for &(s, p, q) in S::TERMS {
            y[s] += ac[p] * bc[q] + ac[q] * bc[p];
        }
        out.extend_from_slice(&y[..S::K]);
    }
}

/// Adjoint of `c = a * b` with respect to `a`, given `other = b`.
pub(crate) fn mul_back<S: Shape>(cbar: &[f64], other: &[f64], mut out: Out<'_>) {
    let mut ab = [0.0; MAX_WIDTH];
    for (cb, bc) in cbar.chunks_exact(S::K).zip(other.chunks_exact(S::K)) {
        let b0 = bc[0];
        let mut d0 = cb[0] * b0;
        for i in 1..S::K {
            d0 += cb[i] * bc[i];
            ab[i] = cb[i] * b0;
        }
        for &(s, p, q) in S::TERMS {
            let ct = cb[s];
            ab[p] += ct * bc[q];
            ab[q] += ct * bc[p];
        }
        ab[0] = d0;
        out.put(&ab[..S::K]);
    }
}
