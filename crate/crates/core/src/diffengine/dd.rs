//! Double-double arithmetic: an unevaluated sum `hi + lo` carrying roughly
//! 106 significant bits. Used where `f64` rounding would swamp the quantity
//! being measured, such as finite differences of a loss.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::Real;

/// `hi + lo` with `|lo| <= ulp(hi) / 2` after every operation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};

const FRAC_PI_2: Dd = Dd {
    hi: std::f64::consts::FRAC_PI_2,
    lo: 6.123233995736766e-17,
};

/// Power-of-two halvings applied before the exponential series.
const EXP_HALVINGS: i32 = 10;

/// Series terms below this relative size are dropped.
const SERIES_TOL: f64 = 1e-34;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    /// Nearest `f64`.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        if !hi.is_finite() {
            return Dd { hi, lo: 0.0 };
        }
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    fn mul_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    fn mul_f64(self, c: f64) -> Self {
        let (p, e) = two_prod(self.hi, c);
        Dd::renorm(p, e + self.lo * c)
    }

    /// `exp(r) − 1` for `|r| <= 1` by halving, a Taylor series and doubling.
    fn expm1_small(self) -> Self {
        let r = self.mul_pow2(-EXP_HALVINGS);
        let mut term = r;
        let mut sum = r;
        for n in 2..40 {
            term = term * r / Dd::from_f64(n as f64);
            sum = sum + term;
            if term.hi.abs() <= SERIES_TOL * sum.hi.abs() {
                break;
            }
        }
        for _ in 0..EXP_HALVINGS {
            sum = sum * sum + sum.mul_pow2(1);
        }
        sum
    }

    /// `(sin r, cos r)` for `|r| <= π/4` by Taylor series.
    fn sin_cos_small(self) -> (Dd, Dd) {
        let r2 = self * self;
        let mut term = self;
        let mut sin = self;
        for n in (2..60).step_by(2) {
            term = -(term * r2) / Dd::from_f64((n * (n + 1)) as f64);
            sin = sin + term;
            if term.hi.abs() <= SERIES_TOL {
                break;
            }
        }
        let mut term = Dd::ONE;
        let mut cos = Dd::ONE;
        for n in (1..60).step_by(2) {
            term = -(term * r2) / Dd::from_f64((n * (n + 1)) as f64);
            cos = cos + term;
            if term.hi.abs() <= SERIES_TOL {
                break;
            }
        }
        (sin, cos)
    }

    pub fn sin_cos(self) -> (Dd, Dd) {
        if !self.is_finite() {
            return (Dd::from_f64(f64::NAN), Dd::from_f64(f64::NAN));
        }
        let k = (self.hi / FRAC_PI_2.hi).round();
        let r = self - FRAC_PI_2.mul_f64(k);
        let (s, c) = r.sin_cos_small();
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd::from_f64(v)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        if !q1.is_finite() {
            return Dd::from_f64(q1);
        }
        let r = self - o.mul_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o.mul_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl Real for Dd {
    #[inline]
    fn cst(v: f64) -> Self {
        Dd::from_f64(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.hi
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn exp(self) -> Self {
        if self.hi.is_nan() {
            return self;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        (r.expm1_small() + Dd::ONE).mul_pow2(k as i32)
    }
    fn ln(self) -> Self {
        if self.hi.is_nan() || self.hi <= 0.0 {
            return Dd::from_f64(self.hi.ln());
        }
        if self.hi.is_infinite() {
            return self;
        }
        // One Newton step on exp(y) = x doubles the f64 starting accuracy.
        let y = Dd::from_f64(self.hi.ln());
        y + self * (-y).exp() - Dd::ONE
    }
    fn sqrt(self) -> Self {
        if self.hi.is_nan() || self.hi <= 0.0 || self.hi.is_infinite() {
            return Dd::from_f64(self.hi.sqrt());
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = self - Dd { hi: p, lo: e };
        Dd::from_f64(s) + Dd::from_f64(r.hi / (2.0 * s))
    }
    fn tanh(self) -> Self {
        let a = self.hi.abs();
        if a.is_nan() {
            return self;
        }
        let mag = if a > 40.0 {
            Dd::ONE
        } else {
            let abs = if self.hi < 0.0 { -self } else { self };
            let two = abs.mul_pow2(1);
            let em = if a < 0.5 {
                two.expm1_small()
            } else {
                two.exp() - Dd::ONE
            };
            em / (em + Dd::from_f64(2.0))
        };
        if self.hi < 0.0 {
            -mag
        } else {
            mag
        }
    }
    fn sigmoid(self) -> Self {
        Dd::ONE / (Dd::ONE + (-self).exp())
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            Dd::ONE / acc
        } else {
            acc
        }
    }
    fn powf(self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            return self.powi(p as i32);
        }
        if self.hi == 0.0 {
            return Dd::from_f64(0f64.powf(p));
        }
        (self.ln().mul_f64(p)).exp()
    }
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let z = Dd::from_f64(y.hi.atan2(x.hi));
        if (y.hi == 0.0 && x.hi == 0.0) || !z.is_finite() {
            return z;
        }
        // Newton on y cos z − x sin z = 0.
        let (s, c) = z.sin_cos();
        z + (y * c - x * s) / (x * c + y * s)
    }
}
