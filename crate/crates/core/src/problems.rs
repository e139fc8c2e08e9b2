//! The built-in benchmark problems with manufactured data.
//!
//! Every right-hand side is derived from the exact piecewise solution:
//! `f = αΔu + ∇α·∇u` on each subdomain, `β = u₁ − u₂` and
//! `ρ = (α₁∇u₁ − α₂∇u₂)·n` on interfaces, and `h = u` on the box boundary.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffengine::{Jet, Real};
use crate::error::{Error, Result};
use crate::geometry::{normal, DomainSpec, Interface, LevelSet, Region, StarTerm};

/// Identifier of a built-in problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ProblemId {
    /// 1D Poisson equation with a kink at `x = 1/3`.
    Ex1,
    /// 2D flower interface, solution scaled by `10^{±κ}`.
    Ex2 { kappa: i32 },
    /// 2D star interface, piecewise constant coefficient.
    Ex3,
    /// 3D ellipsoid, variable coefficient inside.
    Ex4,
    /// 3D, three spherical bubbles.
    Ex5,
}

impl ProblemId {
    pub const ALL: [ProblemId; 7] = [
        ProblemId::Ex1,
        ProblemId::Ex2 { kappa: 2 },
        ProblemId::Ex2 { kappa: 3 },
        ProblemId::Ex2 { kappa: 4 },
        ProblemId::Ex3,
        ProblemId::Ex4,
        ProblemId::Ex5,
    ];

    pub fn kappa(&self) -> Option<i32> {
        match self {
            ProblemId::Ex2 { kappa } => Some(*kappa),
            _ => None,
        }
    }

    /// Short name without parameters.
    pub fn family(&self) -> &'static str {
        match self {
            ProblemId::Ex1 => "ex1",
            ProblemId::Ex2 { .. } => "ex2",
            ProblemId::Ex3 => "ex3",
            ProblemId::Ex4 => "ex4",
            ProblemId::Ex5 => "ex5",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Ex2 { kappa } => write!(f, "ex2:k={kappa}"),
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let unknown = || Error::UnknownProblem(s.clone());
        match (name, arg) {
            ("ex1", None) => Ok(ProblemId::Ex1),
            ("ex3", None) => Ok(ProblemId::Ex3),
            ("ex4", None) => Ok(ProblemId::Ex4),
            ("ex5", None) => Ok(ProblemId::Ex5),
            ("ex2", None) => Ok(ProblemId::Ex2 { kappa: 2 }),
            ("ex2", Some(arg)) => {
                let k = arg
                    .strip_prefix("k=")
                    .or_else(|| arg.strip_prefix("kappa="))
                    .ok_or_else(unknown)?;
                match k.parse::<i32>() {
                    Ok(kappa @ 2..=4) => Ok(ProblemId::Ex2 { kappa }),
                    _ => Err(unknown()),
                }
            }
            _ => Err(unknown()),
        }
    }
}

impl From<ProblemId> for String {
    fn from(id: ProblemId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for ProblemId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Uniform tensor-product evaluation grid including the box corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub per_axis: usize,
}

/// A fully specified interface problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: ProblemId,
    pub domain: DomainSpec,
    pub test_grid: GridSpec,
}

const EX1_INTERFACE: f64 = 1.0 / 3.0;

fn two_subdomains(lower: Vec<f64>, upper: Vec<f64>, level_set: LevelSet) -> DomainSpec {
    DomainSpec {
        lower,
        upper,
        interfaces: vec![Interface {
            level_set,
            inside: 0,
            outside: 1,
        }],
        exterior: 1,
        n_subdomains: 2,
    }
}

/// Constructs a built-in problem.
pub fn builtin(id: ProblemId) -> Result<ProblemSpec> {
    let (domain, per_axis) = match id {
        ProblemId::Ex1 => (
            two_subdomains(
                vec![0.0],
                vec![1.0],
                LevelSet::Plane {
                    normal: vec![1.0],
                    offset: EX1_INTERFACE,
                },
            ),
            1000,
        ),
        ProblemId::Ex2 { kappa } => {
            if !(2..=4).contains(&kappa) {
                return Err(Error::UnknownProblem(id.to_string()));
            }
            (
                two_subdomains(
                    vec![-1.0, -1.0],
                    vec![1.0, 1.0],
                    LevelSet::Flower {
                        base: 0.4,
                        amplitude: 0.2,
                        frequency: 20.0,
                    },
                ),
                200,
            )
        }
        ProblemId::Ex3 => (
            two_subdomains(
                vec![-1.0, -1.0],
                vec![1.0, 1.0],
                LevelSet::Star {
                    r0: 0.483,
                    terms: vec![
                        StarTerm {
                            beta: 0.3,
                            eta: 3.0,
                            theta: 0.5,
                        },
                        StarTerm {
                            beta: -0.1,
                            eta: 4.0,
                            theta: 1.8,
                        },
                        StarTerm {
                            beta: 0.15,
                            eta: 7.0,
                            theta: 0.0,
                        },
                    ],
                },
            ),
            200,
        ),
        ProblemId::Ex4 => (
            two_subdomains(
                vec![-1.0; 3],
                vec![1.0; 3],
                LevelSet::Ellipsoid {
                    coeffs: vec![2.0, 3.0, 6.0],
                    level: 1.69,
                },
            ),
            50,
        ),
        ProblemId::Ex5 => {
            let bubble = |c: [f64; 3], r: f64, k: usize| Interface {
                level_set: LevelSet::Sphere {
                    center: c.to_vec(),
                    radius: r,
                },
                inside: k,
                outside: 3,
            };
            (
                DomainSpec {
                    lower: vec![-1.0; 3],
                    upper: vec![1.0; 3],
                    interfaces: vec![
                        bubble([0.25, 0.25, 0.0], 0.2, 0),
                        bubble([0.5, -0.25, 0.0], 0.15, 1),
                        bubble([0.0, -0.25, 0.25], 0.1, 2),
                    ],
                    exterior: 3,
                    n_subdomains: 4,
                },
                100,
            )
        }
    };
    domain.validate()?;
    Ok(ProblemSpec {
        id,
        domain,
        test_grid: GridSpec { per_axis },
    })
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn n_subdomains(&self) -> usize {
        self.domain.n_subdomains
    }

    /// Exact solution on subdomain `sub`, extended to the whole box.
    pub fn exact<T: Real>(&self, sub: usize, x: &[T]) -> T {
        match (self.id, sub) {
            (ProblemId::Ex1, 0) => x[0].scale(EX1_INTERFACE - 1.0),
            (ProblemId::Ex1, _) => x[0].offset(-1.0).scale(EX1_INTERFACE),
            (ProblemId::Ex2 { kappa }, 0) => (x[0] * x[1]).exp().scale(10f64.powi(kappa)),
            (ProblemId::Ex2 { kappa }, _) => (x[0].sin() * x[1].sin()).scale(10f64.powi(-kappa)),
            (ProblemId::Ex3, 0) => x[0] * x[0] + x[1] * x[1],
            (ProblemId::Ex3, _) => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                (r2 * r2).scale(0.1) - r2.sqrt().scale(2.0).ln().scale(0.01)
            }
            (ProblemId::Ex4, 0) => x[0].scale(2.0).sin() * x[1].scale(2.0).cos() * x[2].exp(),
            (ProblemId::Ex4, _) => {
                let s = (x[1] - x[0]).scale(1.0 / 3.0);
                let s2 = s * s;
                let poly = s * (s2 * s2).scale(16.0) - (s * s2).scale(20.0) + s.scale(5.0);
                poly * (x[0] + x[1]).offset(3.0).ln() * x[2].cos()
            }
            (ProblemId::Ex5, 0) => (x[0] * x[1] * x[2]).exp(),
            (ProblemId::Ex5, 1) => {
                (x[0] + x[1]).scale(PI).sin().scale(0.1) * (x[0] * x[1] * x[2]).exp()
            }
            (ProblemId::Ex5, 2) => {
                (x[0] * x[0]).scale(4.0) + x[1] * x[1] + (x[2] * x[2]).scale(2.0)
            }
            (ProblemId::Ex5, _) => (x[0] - x[2]).exp() * x[1].scale(0.5 * PI).cos(),
        }
    }

    /// Diffusion coefficient on subdomain `sub`.
    pub fn alpha<T: Real>(&self, sub: usize, x: &[T]) -> T {
        match (self.id, sub) {
            (ProblemId::Ex3, 0) => T::cst(4.0),
            (ProblemId::Ex3, _) => T::cst(10.0),
            (ProblemId::Ex4, 0) => {
                let a = (x[0] + x[1]).scale(2.0 * PI).cos();
                let b = (x[0] - x[1]).scale(2.0 * PI).sin();
                (a * b * x[2].cos()).scale(0.2).offset(1.0).scale(10.0)
            }
            _ => T::cst(1.0),
        }
    }

    pub fn exact_jet(&self, sub: usize, x: &[f64]) -> Jet {
        self.exact(sub, &Jet::seed(x))
    }

    pub fn alpha_jet(&self, sub: usize, x: &[f64]) -> Jet {
        self.alpha(sub, &Jet::seed(x))
    }

    /// `∇·(α_s ∇u_s)` at `x` for subdomain `s`, without classification.
    pub fn source_on(&self, sub: usize, x: &[f64]) -> f64 {
        let u = self.exact_jet(sub, x);
        let a = self.alpha_jet(sub, x);
        let d = self.dim();
        let mut lap = 0.0;
        for i in 0..d {
            lap += u.hess(i, i);
        }
        let mut f = a.v * lap;
        for i in 0..d {
            f += a.g[i] * u.g[i];
        }
        f
    }

    /// Manufactured source term at an interior point.
    pub fn manufactured_f(&self, x: &[f64]) -> Result<f64> {
        match self.domain.classify(x)? {
            Region::Subdomain(s) => Ok(self.source_on(s, x)),
            Region::Interface(k) => Err(Error::OnInterface {
                point: x.to_vec(),
                interface: k,
            }),
        }
    }

    /// Value jump `β` and flux jump `ρ` at a point of interface `k`.
    pub fn interface_data(&self, k: usize, x: &[f64]) -> Result<(f64, f64)> {
        self.domain.require_on_interface(k, x)?;
        let iface = &self.domain.interfaces[k];
        let (i, o) = (iface.inside, iface.outside);
        let (u1, u2) = (self.exact_jet(i, x), self.exact_jet(o, x));
        let (a1, a2) = (self.alpha(i, x), self.alpha(o, x));
        let n = normal(&iface.level_set, x)?;
        let rho = n
            .iter()
            .enumerate()
            .map(|(j, nj)| (a1 * u1.g[j] - a2 * u2.g[j]) * nj)
            .sum();
        Ok((u1.v - u2.v, rho))
    }

    /// Dirichlet data on the box boundary.
    pub fn boundary_data(&self, x: &[f64]) -> Result<f64> {
        if !self.domain.on_boundary(x) {
            return Err(Error::NotOnBoundary { point: x.to_vec() });
        }
        let sub = self.domain.subdomain_by_sign(x)?;
        Ok(self.exact(sub, x))
    }

    /// Piecewise exact solution; interface points take the side-one value.
    pub fn exact_solution(&self, x: &[f64]) -> Result<f64> {
        let sub = self.domain.subdomain_by_sign(x)?;
        Ok(self.exact(sub, x))
    }

    /// Level set fed to the transmitter of subdomain `sub`'s attention network:
    /// the bounding interface for interior subdomains, and the product of all
    /// level sets for the exterior of a multi-interface domain.
    pub fn transmitter_level_set(&self, sub: usize) -> LevelSet {
        let ifaces = &self.domain.interfaces;
        if ifaces.len() == 1 {
            return ifaces[0].level_set.clone();
        }
        match ifaces.iter().find(|i| i.inside == sub) {
            Some(i) => i.level_set.clone(),
            None => LevelSet::Product {
                factors: ifaces.iter().map(|i| i.level_set.clone()).collect(),
            },
        }
    }

    /// Test grid points (row-major `n x dim`), `per_axis` nodes per dimension.
    pub fn grid_points(&self, per_axis: Option<usize>) -> Vec<f64> {
        let n = per_axis.unwrap_or(self.test_grid.per_axis).max(2);
        let d = self.dim();
        let axis = |k: usize| -> Vec<f64> {
            let (a, b) = (self.domain.lower[k], self.domain.upper[k]);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        b
                    } else {
                        a + (b - a) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        };
        let axes: Vec<Vec<f64>> = (0..d).map(axis).collect();
        let total = n.pow(d as u32);
        let mut out = Vec::with_capacity(total * d);
        for idx in 0..total {
            let mut rem = idx;
            let mut coords = vec![0.0; d];
            for k in (0..d).rev() {
                coords[k] = axes[k][rem % n];
                rem /= n;
            }
            out.extend(coords);
        }
        out
    }
}
