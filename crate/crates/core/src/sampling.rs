//! Collocation points: Latin hypercube sampling in boxes, rejection-filtered
//! interior sets, face-proportional boundary sets and parametric interface
//! sets. All randomness flows from a seeded ChaCha8 stream.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Region};

/// Random stream used for collocation points.
pub const SAMPLING_STREAM: u64 = 0;
/// Random stream used for parameter initialization.
pub const INIT_STREAM: u64 = 1;

/// Interior points closer than this to an interface (in `|φ|`) are discarded.
pub const INTERFACE_GAP: f64 = 1e-6;

/// Smallest tolerated acceptance rate of interior rejection sampling.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// The generator type used throughout: ChaCha with 8 rounds.
pub type SeededRng = ChaCha8Rng;

/// A ChaCha8 generator on `stream` of `seed`; identical on every platform.
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Interior(usize),
    Boundary,
    /// Points on interface `k`.
    Interface(usize),
}

impl Tag {
    pub fn name(&self) -> &'static str {
        match self {
            Tag::Interior(_) => "interior",
            Tag::Boundary => "boundary",
            Tag::Interface(_) => "interface",
        }
    }
}

/// Points sharing one tag, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub tag: Tag,
    pub points: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, tag: Tag, points: Vec<f64>) -> Self {
        debug_assert_eq!(points.len() % dim, 0);
        PointSet { dim, tag, points }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

/// Bounds `[lo, hi)` of stratum `k` out of `n` on `[a, b]`.
pub fn stratum(a: f64, b: f64, n: usize, k: usize) -> (f64, f64) {
    let w = (b - a) / n as f64;
    (a + k as f64 * w, a + (k + 1) as f64 * w)
}

/// `n` Latin hypercube points in the box, row-major.
///
/// Along every axis each stratum from [`stratum`] holds exactly one point.
pub fn lhs<R: Rng + ?Sized>(n: usize, lower: &[f64], upper: &[f64], rng: &mut R) -> Vec<f64> {
    let d = lower.len();
    let mut pts = vec![0.0; n * d];
    let mut perm: Vec<usize> = (0..n).collect();
    for axis in 0..d {
        perm.shuffle(rng);
        for (i, &k) in perm.iter().enumerate() {
            let (lo, hi) = stratum(lower[axis], upper[axis], n, k);
            let u: f64 = rng.gen();
            let x = lo + u * (hi - lo);
            pts[i * d + axis] = if x < hi { x } else { lo };
        }
    }
    pts
}

/// One Latin hypercube design drawn while sampling, before any filtering or
/// mapping. Interface designs live in the unit parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsDesign {
    pub tag: Tag,
    pub points: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn lhs_logged<R: Rng + ?Sized>(
    tag: Tag,
    n: usize,
    lower: &[f64],
    upper: &[f64],
    rng: &mut R,
    log: &mut Vec<LhsDesign>,
) -> Vec<f64> {
    let points = lhs(n, lower, upper, rng);
    log.push(LhsDesign {
        tag,
        points: points.clone(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
    });
    points
}

/// Rejection-filters LHS batches over the box until subdomain `s` has
/// `counts[s]` points. Returns one set per subdomain.
pub fn sample_interior<R: Rng + ?Sized>(
    domain: &DomainSpec,
    counts: &[usize],
    rng: &mut R,
) -> Result<Vec<PointSet>> {
    interior_logged(domain, counts, rng, &mut Vec::new())
}

fn interior_logged<R: Rng + ?Sized>(
    domain: &DomainSpec,
    counts: &[usize],
    rng: &mut R,
    log: &mut Vec<LhsDesign>,
) -> Result<Vec<PointSet>> {
    if counts.len() != domain.n_subdomains {
        return Err(Error::DimensionMismatch {
            expected: domain.n_subdomains,
            got: counts.len(),
        });
    }
    let d = domain.dim();
    let mut sets: Vec<Vec<f64>> = counts.iter().map(|&c| Vec::with_capacity(c * d)).collect();
    let mut drawn = vec![0usize; counts.len()];
    let mut accepted = vec![0usize; counts.len()];
    let missing = |sets: &[Vec<f64>]| -> usize {
        counts.iter().zip(sets).map(|(&c, s)| c - s.len() / d).sum()
    };

    while missing(&sets) > 0 {
        let batch = lhs_logged(
            Tag::Interior(usize::MAX),
            missing(&sets).max(64),
            &domain.lower,
            &domain.upper,
            rng,
            log,
        );
        for s in 0..counts.len() {
            if sets[s].len() / d < counts[s] {
                drawn[s] += batch.len() / d;
            }
        }
        for x in batch.chunks_exact(d) {
            if domain
                .interfaces
                .iter()
                .any(|i| i.level_set.value(x).abs() <= INTERFACE_GAP)
            {
                continue;
            }
            if let Region::Subdomain(s) = domain.classify(x)? {
                if sets[s].len() / d < counts[s] {
                    sets[s].extend_from_slice(x);
                    accepted[s] += 1;
                }
            }
        }
        for s in 0..counts.len() {
            let rate = accepted[s] as f64 / drawn[s].max(1) as f64;
            if sets[s].len() / d < counts[s] && drawn[s] >= 10_000 && rate < MIN_ACCEPTANCE {
                return Err(Error::SamplingExhausted { subdomain: s, rate });
            }
        }
    }
    Ok(sets
        .into_iter()
        .enumerate()
        .map(|(s, p)| PointSet::new(d, Tag::Interior(s), p))
        .collect())
}

/// Splits `n` proportionally to `weights` by largest remainder; ties go to
/// the earlier entry.
pub fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// `n` points on the faces of the bounding box, split by face measure, with
/// LHS inside each face. Face order: axis 0 lower, axis 0 upper, axis 1 lower, ...
pub fn sample_boundary<R: Rng + ?Sized>(
    domain: &DomainSpec,
    n: usize,
    rng: &mut R,
) -> Result<PointSet> {
    boundary_logged(domain, n, rng, &mut Vec::new())
}

fn boundary_logged<R: Rng + ?Sized>(
    domain: &DomainSpec,
    n: usize,
    rng: &mut R,
    log: &mut Vec<LhsDesign>,
) -> Result<PointSet> {
    let d = domain.dim();
    let (lower, upper) = (&domain.lower, &domain.upper);
    let mut measures = Vec::with_capacity(2 * d);
    for axis in 0..d {
        let m: f64 = (0..d)
            .filter(|&j| j != axis)
            .map(|j| upper[j] - lower[j])
            .product();
        measures.extend([m, m]);
    }
    let split = apportion(n, &measures);
    let mut pts = Vec::with_capacity(n * d);
    for (face, &nf) in split.iter().enumerate() {
        let (axis, bound) = (
            face / 2,
            if face % 2 == 0 {
                lower[face / 2]
            } else {
                upper[face / 2]
            },
        );
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..d)
            .filter(|&j| j != axis)
            .map(|j| (lower[j], upper[j]))
            .unzip();
        let inner = lhs_logged(Tag::Boundary, nf, &lo, &hi, rng, log);
        for i in 0..nf {
            let mut other = inner[i * (d - 1)..(i + 1) * (d - 1)].iter();
            for j in 0..d {
                pts.push(if j == axis {
                    bound
                } else {
                    *other.next().unwrap_or(&bound)
                });
            }
        }
    }
    Ok(PointSet::new(d, Tag::Boundary, pts))
}

/// `n` points on interface `k`, mapped from an LHS design in parameter space.
pub fn sample_interface<R: Rng + ?Sized>(
    domain: &DomainSpec,
    k: usize,
    n: usize,
    rng: &mut R,
) -> Result<PointSet> {
    interface_logged(domain, k, n, rng, &mut Vec::new())
}

fn interface_logged<R: Rng + ?Sized>(
    domain: &DomainSpec,
    k: usize,
    n: usize,
    rng: &mut R,
    log: &mut Vec<LhsDesign>,
) -> Result<PointSet> {
    let d = domain.dim();
    let iface = domain
        .interfaces
        .get(k)
        .ok_or_else(|| Error::Config(format!("no interface {k}")))?;
    let ls = &iface.level_set;
    let p = ls
        .parameter_dim(d)
        .ok_or_else(|| Error::MissingParametrization(ls.name().to_string()))?;
    let params = lhs_logged(Tag::Interface(k), n, &vec![0.0; p], &vec![1.0; p], rng, log);
    let mut pts = Vec::with_capacity(n * d);
    for i in 0..n {
        pts.extend(ls.surface_point(d, &params[i * p..(i + 1) * p])?);
    }
    Ok(PointSet::new(d, Tag::Interface(k), pts))
}

/// Collocation points of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPoints {
    /// One set per subdomain.
    pub interior: Vec<PointSet>,
    pub boundary: PointSet,
    /// One set per interface.
    pub interface: Vec<PointSet>,
}

/// Requested point counts of one run.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PointCounts {
    /// Interior points per subdomain.
    pub interior: Vec<usize>,
    pub boundary: usize,
    /// Points per interface.
    pub interface: usize,
}

impl TrainingPoints {
    /// Interior, then boundary, then interfaces, all from one stream.
    pub fn sample<R: Rng + ?Sized>(
        domain: &DomainSpec,
        counts: &PointCounts,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Self::sample_with_designs(domain, counts, rng)?.0)
    }

    /// As [`TrainingPoints::sample`], also returning every LHS design in
    /// draw order. Interior designs carry the tag `Interior(usize::MAX)`
    /// since they feed all subdomains.
    pub fn sample_with_designs<R: Rng + ?Sized>(
        domain: &DomainSpec,
        counts: &PointCounts,
        rng: &mut R,
    ) -> Result<(Self, Vec<LhsDesign>)> {
        let mut log = Vec::new();
        let interior = interior_logged(domain, &counts.interior, rng, &mut log)?;
        let boundary = boundary_logged(domain, counts.boundary, rng, &mut log)?;
        let interface = (0..domain.interfaces.len())
            .map(|k| interface_logged(domain, k, counts.interface, rng, &mut log))
            .collect::<Result<_>>()?;
        let points = TrainingPoints {
            interior,
            boundary,
            interface,
        };
        Ok((points, log))
    }

    pub fn sets(&self) -> impl Iterator<Item = &PointSet> {
        self.interior
            .iter()
            .chain(std::iter::once(&self.boundary))
            .chain(&self.interface)
    }

    pub fn total(&self) -> usize {
        self.sets().map(PointSet::len).sum()
    }

    /// CSV rows `x[,y[,z]],tag,subdomain`. Boundary rows carry the subdomain
    /// owning the boundary; interface rows the inside subdomain.
    pub fn to_csv(&self, domain: &DomainSpec) -> String {
        let d = domain.dim();
        let mut out = String::new();
        let axes = ["x", "y", "z"];
        out.push_str(&axes[..d].join(","));
        out.push_str(",tag,subdomain\n");
        for set in self.sets() {
            let sub = match set.tag {
                Tag::Interior(s) => s,
                Tag::Boundary => domain.exterior,
                Tag::Interface(k) => domain.interfaces[k].inside,
            };
            for p in set.iter() {
                for v in p {
                    let _ = write!(out, "{v:?},");
                }
                let _ = writeln!(out, "{},{sub}", set.tag.name());
            }
        }
        out
    }
}
