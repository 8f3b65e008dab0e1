//! Holomorphic self-maps given declaratively.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::hyperbolicity::{EuclideanBallSampler, PointSampler};
use crate::scalar::{lit, tol, Real};

/// Interior samples checked when a map is bound to a domain.
pub const VALIDATION_SAMPLES: usize = 200;

/// Euclidean tolerance for `f(g(z)) = g(f(z))`.
pub const COMMUTE_TOL: f64 = 1e-9;

/// A holomorphic map of `C^d`; the JSON document format.
///
/// ```json
/// {"kind": "DiscMoebius", "a": [-0.5, 0], "theta": 0}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "kind")]
pub enum MapSpec<T: Real> {
    /// `z -> e^{i theta} (z - a) / (1 - conj(a) z)` on the unit disc.
    DiscMoebius {
        a: Complex<T>,
        theta: T,
    },
    /// `z -> e^{i theta} phi_a(z)` with `phi_a` the involution of the unit
    /// ball exchanging `0` and `a`.
    BallAutomorphism {
        a: CVec<T>,
        theta: T,
    },
    Translation {
        v: CVec<T>,
    },
    /// `z -> L z + b`, `L` given by rows.
    AffineContraction {
        l: Vec<CVec<T>>,
        b: CVec<T>,
    },
    /// Block-diagonal product; factor `k` acts on the next `dim(k)` coordinates.
    ProductMap {
        factors: Vec<MapSpec<T>>,
    },
    /// Applies `maps[0]` first.
    Composition {
        maps: Vec<MapSpec<T>>,
    },
}

impl<T: Real> MapSpec<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| KobaError::InvalidInput(format!("map spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn moebius(a: Complex<T>, theta: T) -> Self {
        MapSpec::DiscMoebius { a, theta }
    }

    /// Hyperbolic disc automorphism with axis `(-1, 1)` sending `0` to `t`.
    pub fn axis_translation(t: T) -> Self {
        MapSpec::DiscMoebius {
            a: Complex::new(-t, T::zero()),
            theta: T::zero(),
        }
    }

    pub fn rotation(theta: T) -> Self {
        MapSpec::DiscMoebius {
            a: Complex::new(T::zero(), T::zero()),
            theta,
        }
    }

    pub fn translation(v: CVec<T>) -> Self {
        MapSpec::Translation { v }
    }

    /// Number of complex coordinates the map acts on.
    pub fn dim(&self) -> usize {
        match self {
            MapSpec::DiscMoebius { .. } => 1,
            MapSpec::BallAutomorphism { a, .. } => a.dim(),
            MapSpec::Translation { v } => v.dim(),
            MapSpec::AffineContraction { b, .. } => b.dim(),
            MapSpec::ProductMap { factors } => factors.iter().map(|f| f.dim()).sum(),
            MapSpec::Composition { maps } => maps.first().map_or(0, |m| m.dim()),
        }
    }

    /// Structural checks that do not need a domain.
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(KobaError::InvalidInput(format!("map spec: {m}")));
        match self {
            MapSpec::DiscMoebius { a, theta } => {
                if !(a.norm() < T::one()) || !theta.is_finite() {
                    return bad("DiscMoebius needs |a| < 1 and finite theta");
                }
            }
            MapSpec::BallAutomorphism { a, theta } => {
                if a.dim() == 0 || !(a.norm() < T::one()) || !theta.is_finite() {
                    return bad("BallAutomorphism needs |a| < 1 and finite theta");
                }
            }
            MapSpec::Translation { v } => {
                if v.dim() == 0 || !v.is_finite() {
                    return bad("Translation needs a finite vector");
                }
            }
            MapSpec::AffineContraction { l, b } => {
                let d = b.dim();
                if d == 0 || l.len() != d || l.iter().any(|r| r.dim() != d || !r.is_finite()) {
                    return bad("AffineContraction needs a square matrix matching b");
                }
            }
            MapSpec::ProductMap { factors } => {
                if factors.is_empty() {
                    return bad("ProductMap needs factors");
                }
                for f in factors {
                    f.check()?;
                }
            }
            MapSpec::Composition { maps } => {
                if maps.is_empty() {
                    return bad("Composition needs maps");
                }
                for m in maps {
                    m.check()?;
                    if m.dim() != maps[0].dim() {
                        return bad("Composition dimensions differ");
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates the map; the input must have [`MapSpec::dim`] coordinates.
    pub fn apply(&self, z: &CVec<T>) -> CVec<T> {
        let one = Complex::new(T::one(), T::zero());
        match self {
            MapSpec::DiscMoebius { a, theta } => {
                let w = z[0];
                let rot = Complex::from_polar(T::one(), *theta);
                CVec(vec![rot * (w - a) / (one - a.conj() * w)])
            }
            MapSpec::BallAutomorphism { a, theta } => {
                let aa = a.norm_sqr();
                let za = a.dot(z);
                let rot = Complex::from_polar(T::one(), *theta);
                let den = one - za;
                if aa == T::zero() {
                    return z.cscale(-rot);
                }
                let s = (T::one() - aa).sqrt();
                // phi_a(z) = (a - P z - s (z - P z)) / (1 - <z, a>)
                let p = a.cscale(za / Complex::new(aa, T::zero()));
                let q = z - &p;
                let num = &(a - &p) - &q.scale(s);
                num.cscale(rot / den)
            }
            MapSpec::Translation { v } => z + v,
            MapSpec::AffineContraction { l, b } => CVec(
                l.iter()
                    .zip(b.iter())
                    .map(|(row, bj)| {
                        row.iter()
                            .zip(z.iter())
                            .map(|(r, x)| r * x)
                            .sum::<Complex<T>>()
                            + bj
                    })
                    .collect(),
            ),
            MapSpec::ProductMap { factors } => {
                let mut out = Vec::with_capacity(z.dim());
                let mut at = 0;
                for f in factors {
                    let k = f.dim();
                    let part = CVec(z.0[at..at + k].to_vec());
                    out.extend(f.apply(&part).0);
                    at += k;
                }
                CVec(out)
            }
            MapSpec::Composition { maps } => maps.iter().fold(z.clone(), |w, m| m.apply(&w)),
        }
    }

    /// The inverse map, where it has the same declarative form.
    pub fn inverse(&self) -> Result<Self> {
        match self {
            MapSpec::DiscMoebius { a, theta } => Ok(MapSpec::DiscMoebius {
                a: -a * Complex::from_polar(T::one(), *theta),
                theta: -*theta,
            }),
            MapSpec::BallAutomorphism { a, theta } => {
                let d = a.dim();
                let rot = Complex::from_polar(T::one(), -*theta);
                let undo = MapSpec::AffineContraction {
                    l: (0..d).map(|j| CVec::basis(d, j).cscale(rot)).collect(),
                    b: CVec::zeros(d),
                };
                Ok(MapSpec::Composition {
                    maps: vec![
                        undo,
                        MapSpec::BallAutomorphism {
                            a: a.clone(),
                            theta: T::zero(),
                        },
                    ],
                })
            }
            MapSpec::Translation { v } => Ok(MapSpec::Translation { v: -v }),
            MapSpec::AffineContraction { .. } => Err(KobaError::Unsupported(
                "inverse of an affine contraction".into(),
            )),
            MapSpec::ProductMap { factors } => Ok(MapSpec::ProductMap {
                factors: factors.iter().map(|f| f.inverse()).collect::<Result<_>>()?,
            }),
            MapSpec::Composition { maps } => Ok(MapSpec::Composition {
                maps: maps
                    .iter()
                    .rev()
                    .map(|m| m.inverse())
                    .collect::<Result<_>>()?,
            }),
        }
    }
}

/// A map validated as a self-map of a domain.
#[derive(Clone, Debug)]
pub struct HoloMap<'a, T: Real> {
    domain: &'a ConvexDomain<T>,
    spec: MapSpec<T>,
}

impl<'a, T: Real> HoloMap<'a, T> {
    /// Checks the spec, translation directions, and that seeded interior
    /// samples land inside.
    pub fn new(domain: &'a ConvexDomain<T>, spec: MapSpec<T>, seed: u64) -> Result<Self> {
        spec.check()?;
        if spec.dim() != domain.dim() {
            return Err(KobaError::DimensionMismatch {
                expected: domain.dim(),
                found: spec.dim(),
            });
        }
        if let MapSpec::Translation { v } = &spec {
            if let Some(u) = v.normalized() {
                if domain.recession_slope(&u) > tol::<T>(1e-9) {
                    return Err(KobaError::Precondition(
                        "translation vector is not a direction at infinity".into(),
                    ));
                }
            }
        }
        let map = HoloMap { domain, spec };
        for (k, z) in interior_samples(domain, VALIDATION_SAMPLES, seed)?
            .iter()
            .enumerate()
        {
            if !domain.contains(&map.apply(z))? {
                return Err(KobaError::Precondition(format!(
                    "map sends interior sample {k} outside the domain"
                )));
            }
        }
        Ok(map)
    }

    pub fn domain(&self) -> &'a ConvexDomain<T> {
        self.domain
    }

    pub fn spec(&self) -> &MapSpec<T> {
        &self.spec
    }

    pub fn apply(&self, z: &CVec<T>) -> CVec<T> {
        self.spec.apply(z)
    }

    /// `f^n(z)`.
    pub fn power(&self, z: &CVec<T>, n: usize) -> CVec<T> {
        (0..n).fold(z.clone(), |w, _| self.apply(&w))
    }

    /// Whether `f(g(z)) = g(f(z))` within [`COMMUTE_TOL`] on seeded samples.
    pub fn commutes_with(&self, g: &HoloMap<'_, T>, n: usize, seed: u64) -> Result<bool> {
        let limit = tol::<T>(COMMUTE_TOL);
        Ok(interior_samples(self.domain, n, seed)?
            .iter()
            .all(|z| self.apply(&g.apply(z)).dist(&g.apply(&self.apply(z))) <= limit))
    }
}

/// Seeded interior points: uniform in a Euclidean ball of radius `4 scale`
/// around the witness, intersected with the domain.
pub fn interior_samples<T: Real>(
    domain: &ConvexDomain<T>,
    n: usize,
    seed: u64,
) -> Result<Vec<CVec<T>>> {
    let sampler =
        EuclideanBallSampler::new(domain.witness().clone(), lit::<T>(4.0) * domain.scale());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 10_000 * n.max(1) {
            return Err(KobaError::InvalidInput(
                "could not sample interior points".into(),
            ));
        }
        let z = sampler.draw(&mut rng);
        if domain.contains(&z)? {
            out.push(z);
        }
    }
    Ok(out)
}
