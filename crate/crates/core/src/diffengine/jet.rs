//! Second-order forward-mode jets for scalar fields of up to three variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::Real;
use crate::error::{Error, Result};

/// Largest spatial dimension supported by [`Jet`].
pub const MAX_DIM: usize = 3;

/// Upper-triangle slot of the Hessian entry `(i, j)`.
pub const HESS_INDEX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// `(i, j)` pairs of the packed upper triangle, in slot order.
pub const HESS_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Value, gradient and packed Hessian of a scalar with respect to up to
/// three seeded inputs. Unused dimensions stay identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetOf<S> {
    pub v: S,
    pub g: [S; 3],
    pub h: [S; 6],
}

/// Jet over plain `f64`, the type used everywhere outside precision checks.
pub type Jet = JetOf<f64>;

impl<S: Real> JetOf<S> {
    pub fn constant(v: S) -> Self {
        let z = S::cst(0.0);
        JetOf {
            v,
            g: [z; 3],
            h: [z; 6],
        }
    }

    /// The independent variable `x_axis` evaluated at `v`.
    pub fn variable(v: f64, axis: usize) -> Self {
        let mut j = Self::constant(S::cst(v));
        j.g[axis] = S::cst(1.0);
        j
    }

    /// Seeds `x` as independent variables.
    pub fn seed(x: &[f64]) -> Vec<Self> {
        assert!(x.len() <= MAX_DIM, "jets support at most {MAX_DIM} inputs");
        x.iter()
            .enumerate()
            .map(|(i, &v)| Self::variable(v, i))
            .collect()
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> S {
        self.h[HESS_INDEX[i][j]]
    }

    pub fn is_finite(&self) -> bool {
        let ok = |x: &S| x.value().is_finite();
        ok(&self.v) && self.g.iter().all(ok) && self.h.iter().all(ok)
    }

    /// Applies a univariate function given its value and first two derivatives.
    #[inline]
    pub fn chain(self, f0: S, f1: S, f2: S) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
        }
        for (t, &(a, b)) in HESS_PAIRS.iter().enumerate() {
            out.h[t] = f1 * self.h[t] + f2 * self.g[a] * self.g[b];
        }
        out
    }

    /// Applies a bivariate function `f(x, y)` given its value, gradient and Hessian.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    pub fn chain2(x: Self, y: Self, f0: S, fx: S, fy: S, fxx: S, fxy: S, fyy: S) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..3 {
            out.g[i] = fx * x.g[i] + fy * y.g[i];
        }
        for (t, &(a, b)) in HESS_PAIRS.iter().enumerate() {
            out.h[t] = fx * x.h[t]
                + fy * y.h[t]
                + fxx * x.g[a] * x.g[b]
                + fyy * y.g[a] * y.g[b]
                + fxy * (x.g[a] * y.g[b] + x.g[b] * y.g[a]);
        }
        out
    }

    pub fn recip(self) -> Self {
        let r = S::cst(1.0) / self.v;
        self.chain(r, -r * r, S::cst(2.0) * r * r * r)
    }
}

impl Jet {
    /// Exact widening into another scalar type.
    pub fn lift<S: Real>(&self) -> JetOf<S> {
        JetOf {
            v: S::cst(self.v),
            g: self.g.map(S::cst),
            h: self.h.map(S::cst),
        }
    }

    pub fn to_value_jet(&self, dim: usize) -> ValueJet {
        assert!(dim <= MAX_DIM);
        let mut hess = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = self.hess(i, j);
                hess[i * dim + j] = v;
                hess[j * dim + i] = v;
            }
        }
        ValueJet {
            value: self.v,
            grad: self.g[..dim].to_vec(),
            hess,
        }
    }
}

impl<S: Real> Add for JetOf<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.v = out.v + o.v;
        for i in 0..3 {
            out.g[i] = out.g[i] + o.g[i];
        }
        for t in 0..6 {
            out.h[t] = out.h[t] + o.h[t];
        }
        out
    }
}

impl<S: Real> Sub for JetOf<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut out = self;
        out.v = out.v - o.v;
        for i in 0..3 {
            out.g[i] = out.g[i] - o.g[i];
        }
        for t in 0..6 {
            out.h[t] = out.h[t] - o.h[t];
        }
        out
    }
}

impl<S: Real> Neg for JetOf<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut out = self;
        out.v = -out.v;
        out.g.iter_mut().for_each(|x| *x = -*x);
        out.h.iter_mut().for_each(|x| *x = -*x);
        out
    }
}

impl<S: Real> Mul for JetOf<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        for (t, &(a, b)) in HESS_PAIRS.iter().enumerate() {
            out.h[t] = self.h[t] * o.v + self.g[a] * o.g[b] + self.g[b] * o.g[a] + self.v * o.h[t];
        }
        out
    }
}

impl<S: Real> Div for JetOf<S> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<S: Real> Real for JetOf<S> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(S::cst(v))
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v.value()
    }
    fn sin(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = (self.v.sin(), self.v.cos());
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = S::cst(1.0) / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, S::cst(0.5) / s, S::cst(-0.25) / (s * self.v))
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = S::cst(1.0) - t * t;
        self.chain(t, d, S::cst(-2.0) * t * d)
    }
    fn sigmoid(self) -> Self {
        let one = S::cst(1.0);
        let s = one / (one + (-self.v).exp());
        let d = s * (one - s);
        self.chain(s, d, d * (one - S::cst(2.0) * s))
    }
    fn powi(self, n: i32) -> Self {
        let nf = S::cst(n as f64);
        let zero = S::cst(0.0);
        let f0 = self.v.powi(n);
        let f1 = if n == 0 {
            zero
        } else {
            nf * self.v.powi(n - 1)
        };
        let f2 = if n == 0 || n == 1 {
            zero
        } else {
            nf * S::cst(n as f64 - 1.0) * self.v.powi(n - 2)
        };
        self.chain(f0, f1, f2)
    }
    fn powf(self, p: f64) -> Self {
        let f0 = self.v.powf(p);
        let f1 = S::cst(p) * self.v.powf(p - 1.0);
        let f2 = S::cst(p * (p - 1.0)) * self.v.powf(p - 2.0);
        self.chain(f0, f1, f2)
    }
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let r2 = x.v * x.v + y.v * y.v;
        let r4 = r2 * r2;
        let f0 = y.v.atan2(x.v);
        let fx = -y.v / r2;
        let fy = x.v / r2;
        let fxx = S::cst(2.0) * x.v * y.v / r4;
        let fyy = -fxx;
        let fxy = (y.v * y.v - x.v * x.v) / r4;
        Self::chain2(x, y, f0, fx, fy, fxx, fxy, fyy)
    }
}

/// Value, gradient and full symmetric Hessian of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueJet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `d x d`; mirrored from a single computed triangle.
    pub hess: Vec<f64>,
}

impl ValueJet {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.dim()).map(|i| self.hess_at(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().chain(&self.hess).all(|v| v.is_finite())
    }
}

/// Value, gradient and Hessian of `field` at `x`, exact to rounding.
///
/// Fails with [`Error::Domain`] if any primitive was evaluated outside its
/// domain, which shows up as a non-finite component.
pub fn eval_jet<F>(field: F, x: &[f64]) -> Result<ValueJet>
where
    F: Fn(&[Jet]) -> Jet,
{
    if x.is_empty() || x.len() > MAX_DIM {
        return Err(Error::DimensionMismatch {
            expected: MAX_DIM,
            got: x.len(),
        });
    }
    let seeded = Jet::seed(x);
    let out = field(&seeded);
    if !out.is_finite() {
        return Err(Error::Domain {
            context: format!("{x:?}"),
        });
    }
    Ok(out.to_value_jet(x.len()))
}
