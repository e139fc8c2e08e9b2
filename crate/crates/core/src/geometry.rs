//! Level sets, subdomain classification and interface jump operators.
//!
//! Sign convention: `φ < 0` is the inside of an interface (side one, `Ω₁` for
//! two-subdomain problems) and `φ > 0` the outside; normals `∇φ/|∇φ|` point
//! from side one to side two.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diffengine::{Jet, Real, ValueJet};
use crate::error::{Error, Result};

/// Points with `|φ| ≤ INTERFACE_TOL` are classified as lying on the interface.
pub const INTERFACE_TOL: f64 = 1e-12;

/// One lobe term `β cos(η (θ − θ₀))` of a star-shaped curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarTerm {
    pub beta: f64,
    pub eta: f64,
    pub theta: f64,
}

/// Closed-form level-set functions of the built-in interfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSet {
    /// `φ = n·x − c`.
    Plane { normal: Vec<f64>, offset: f64 },
    /// `φ = |x − c|² − r²`.
    Sphere { center: Vec<f64>, radius: f64 },
    /// `φ = Σ aᵢ xᵢ² − c`.
    Ellipsoid { coeffs: Vec<f64>, level: f64 },
    /// `φ = |x| − (r₀ + a sin(k θ))`, `θ = atan2(y, x)`.
    Flower {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `φ = |x| − r₀ (1 + Σ βₖ cos(ηₖ (θ − θₖ)))`, `θ = atan2(y, x)`.
    Star { r0: f64, terms: Vec<StarTerm> },
    /// Product of several level sets; vanishes on each of their zero sets.
    Product { factors: Vec<LevelSet> },
}

impl LevelSet {
    pub fn name(&self) -> &'static str {
        match self {
            LevelSet::Plane { .. } => "plane",
            LevelSet::Sphere { .. } => "sphere",
            LevelSet::Ellipsoid { .. } => "ellipsoid",
            LevelSet::Flower { .. } => "flower",
            LevelSet::Star { .. } => "star",
            LevelSet::Product { .. } => "product",
        }
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            LevelSet::Plane { normal, offset } => {
                let mut acc = T::cst(-offset);
                for (xi, &ni) in x.iter().zip(normal) {
                    acc = acc + xi.scale(ni);
                }
                acc
            }
            LevelSet::Sphere { center, radius } => {
                let mut acc = T::cst(-radius * radius);
                for (&xi, &ci) in x.iter().zip(center) {
                    let d = xi.offset(-ci);
                    acc = acc + d * d;
                }
                acc
            }
            LevelSet::Ellipsoid { coeffs, level } => {
                let mut acc = T::cst(-level);
                for (&xi, &ai) in x.iter().zip(coeffs) {
                    acc = acc + (xi * xi).scale(ai);
                }
                acc
            }
            LevelSet::Flower {
                base,
                amplitude,
                frequency,
            } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let theta = x[1].atan2(x[0]);
                r - theta
                    .scale(*frequency)
                    .sin()
                    .scale(*amplitude)
                    .offset(*base)
            }
            LevelSet::Star { r0, terms } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let theta = x[1].atan2(x[0]);
                let mut radial = T::cst(1.0);
                for t in terms {
                    radial = radial + theta.offset(-t.theta).scale(t.eta).cos().scale(t.beta);
                }
                r - radial.scale(*r0)
            }
            LevelSet::Product { factors } => {
                let mut acc = T::cst(1.0);
                for f in factors {
                    acc = acc * f.eval(x);
                }
                acc
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        self.eval(&Jet::seed(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.jet(x).g[..x.len()].to_vec()
    }

    /// Dimension of the surface parameter space for a `dim`-dimensional domain.
    pub fn parameter_dim(&self, dim: usize) -> Option<usize> {
        match self {
            LevelSet::Plane { .. } if dim == 1 => Some(0),
            LevelSet::Sphere { .. } | LevelSet::Ellipsoid { .. } if dim >= 2 => Some(dim - 1),
            LevelSet::Flower { .. } | LevelSet::Star { .. } if dim == 2 => Some(1),
            _ => None,
        }
    }

    /// Maps `u ∈ [0, 1)^p` onto the zero set. Spheres and ellipsoids are
    /// parametrized uniformly in `cos ψ` so samples do not cluster at poles.
    pub fn surface_point(&self, dim: usize, u: &[f64]) -> Result<Vec<f64>> {
        let missing = || Error::MissingParametrization(self.name().to_string());
        let p = self.parameter_dim(dim).ok_or_else(missing)?;
        if u.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: u.len(),
            });
        }
        let unit = |u: &[f64]| -> Vec<f64> {
            if dim == 2 {
                let t = 2.0 * PI * u[0];
                vec![t.cos(), t.sin()]
            } else {
                let cz = 1.0 - 2.0 * u[0];
                let s = (1.0 - cz * cz).max(0.0).sqrt();
                let t = 2.0 * PI * u[1];
                vec![s * t.cos(), s * t.sin(), cz]
            }
        };
        match self {
            LevelSet::Plane { normal, offset } => Ok(vec![offset / normal[0]]),
            LevelSet::Sphere { center, radius } => Ok(unit(u)
                .iter()
                .zip(center)
                .map(|(e, c)| c + radius * e)
                .collect()),
            LevelSet::Ellipsoid { coeffs, level } => Ok(unit(u)
                .iter()
                .zip(coeffs)
                .map(|(e, a)| e * (level / a).sqrt())
                .collect()),
            LevelSet::Flower {
                base,
                amplitude,
                frequency,
            } => {
                let t = 2.0 * PI * u[0];
                let r = base + amplitude * (frequency * t).sin();
                Ok(vec![r * t.cos(), r * t.sin()])
            }
            LevelSet::Star { r0, terms } => {
                let t = 2.0 * PI * u[0];
                let r = r0
                    * (1.0
                        + terms
                            .iter()
                            .map(|k| k.beta * (k.eta * (t - k.theta)).cos())
                            .sum::<f64>());
                Ok(vec![r * t.cos(), r * t.sin()])
            }
            LevelSet::Product { .. } => Err(missing()),
        }
    }
}

/// Unit normal `∇φ/|∇φ|` at `x`.
pub fn normal(ls: &LevelSet, x: &[f64]) -> Result<Vec<f64>> {
    let g = ls.gradient(x);
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n.is_nan() || n <= 1e-12 {
        return Err(Error::DegenerateGradient { point: x.to_vec() });
    }
    Ok(g.iter().map(|v| v / n).collect())
}

/// An interface together with the subdomains on either side of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub level_set: LevelSet,
    /// Subdomain where `φ < 0`.
    pub inside: usize,
    /// Subdomain where `φ > 0`.
    pub outside: usize,
}

/// One side of an interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// `φ < 0`.
    One,
    /// `φ > 0`.
    Two,
}

impl Interface {
    pub fn subdomain(&self, side: Side) -> usize {
        match side {
            Side::One => self.inside,
            Side::Two => self.outside,
        }
    }
}

/// Result of classifying a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Subdomain(usize),
    Interface(usize),
}

/// Axis-aligned box split into subdomains by non-intersecting closed interfaces.
///
/// A point belongs to the inside of the first interface with `φ < 0`, or to
/// `exterior` if it is outside every interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub interfaces: Vec<Interface>,
    pub exterior: usize,
    pub n_subdomains: usize,
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    fn check_bounds(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfBounds { point: x.to_vec() });
        }
        Ok(())
    }

    /// Classifies `x` by level-set signs with tolerance [`INTERFACE_TOL`].
    pub fn classify(&self, x: &[f64]) -> Result<Region> {
        self.check_bounds(x)?;
        let mut region = Region::Subdomain(self.exterior);
        let mut found = false;
        for (k, iface) in self.interfaces.iter().enumerate() {
            let phi = iface.level_set.value(x);
            if phi.abs() <= INTERFACE_TOL {
                return Ok(Region::Interface(k));
            }
            if phi < 0.0 && !found {
                region = Region::Subdomain(iface.inside);
                found = true;
            }
        }
        Ok(region)
    }

    /// Subdomain by sign alone; points with `φ ≤ 0` count as inside.
    pub fn subdomain_by_sign(&self, x: &[f64]) -> Result<usize> {
        self.check_bounds(x)?;
        for iface in &self.interfaces {
            if iface.level_set.value(x) <= 0.0 {
                return Ok(iface.inside);
            }
        }
        Ok(self.exterior)
    }

    /// Level-set value of interface `k` with an on-interface check.
    pub fn require_on_interface(&self, k: usize, x: &[f64]) -> Result<()> {
        let phi = self.interfaces[k].level_set.value(x);
        if phi.abs() > INTERFACE_TOL {
            return Err(Error::NotOnInterface {
                point: x.to_vec(),
                interface: k,
                phi,
            });
        }
        Ok(())
    }

    /// Whether `x` lies on a face of the bounding box (exact comparison).
    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.contains(x)
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .any(|(v, (a, b))| v == a || v == b)
    }

    /// Checks that sphere interfaces are pairwise disjoint and inside the box.
    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len()
            || self.lower.iter().zip(&self.upper).any(|(a, b)| a >= b)
        {
            return Err(Error::Config("degenerate bounding box".into()));
        }
        let spheres: Vec<(&Vec<f64>, f64)> = self
            .interfaces
            .iter()
            .filter_map(|i| match &i.level_set {
                LevelSet::Sphere { center, radius } => Some((center, *radius)),
                _ => None,
            })
            .collect();
        for (i, (c, r)) in spheres.iter().enumerate() {
            for d in 0..self.dim() {
                if c[d] - r <= self.lower[d] || c[d] + r >= self.upper[d] {
                    return Err(Error::Config(format!("sphere {i} leaves the domain")));
                }
            }
            for (j, (c2, r2)) in spheres.iter().enumerate().skip(i + 1) {
                let dist = c
                    .iter()
                    .zip(c2.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if dist <= r + r2 {
                    return Err(Error::Config(format!("spheres {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }
}

/// `[[f]] = f₁(x) − f₂(x)` at a point of interface `k`.
pub fn jump<F1, F2>(domain: &DomainSpec, k: usize, f1: F1, f2: F2, x: &[f64]) -> Result<f64>
where
    F1: Fn(&[f64]) -> f64,
    F2: Fn(&[f64]) -> f64,
{
    domain.require_on_interface(k, x)?;
    Ok(f1(x) - f2(x))
}

/// `(α₁∇u₁ − α₂∇u₂)·n` from one-sided jets and coefficient values.
pub fn flux_jump(
    domain: &DomainSpec,
    k: usize,
    sides: (&ValueJet, &ValueJet),
    alphas: (f64, f64),
    x: &[f64],
    n: &[f64],
) -> Result<f64> {
    domain.require_on_interface(k, x)?;
    let (u1, u2) = sides;
    Ok(n.iter()
        .enumerate()
        .map(|(i, ni)| (alphas.0 * u1.grad[i] - alphas.1 * u2.grad[i]) * ni)
        .sum())
}
