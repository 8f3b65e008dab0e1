//! Counterexamples showing the extension hypotheses cannot be dropped:
//! a sheared product that is not C-proper, the bidisc with a flat
//! boundary, and a Cayley-type map of the Siegel cone onto a bounded
//! domain.

use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::{is_c_proper, recession_directions, ConvexDomain, RecessionConfig};
use crate::dynamics::interior_samples;
use crate::error::{KobaError, Result};
use crate::metric::{
    oracle_for, DistanceOracle, DomainMetric, Finsler, MetricBound, MetricConfig, PathSolver,
};
use crate::scalar::{from_usize, lit, Real};

/// Which gallery entry to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalleryExample {
    /// `D x C` with the shear `(z, w) -> (z, w + g(z))`.
    Shear,
    /// The bidisc and a pair of sequences at bounded distance.
    Bidisc,
    /// The Siegel cone and its Cayley-type image.
    Cayley,
}

impl FromStr for GalleryExample {
    type Err = KobaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shear" => Ok(GalleryExample::Shear),
            "bidisc" => Ok(GalleryExample::Bidisc),
            "cayley" => Ok(GalleryExample::Cayley),
            _ => Err(KobaError::InvalidInput(format!(
                "unknown gallery example {s:?} (expected shear, bidisc or cayley)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryConfig {
    /// Truncation of the lacunary series.
    pub lacunary_terms: usize,
    /// Sample pairs for the isometry check.
    pub isometry_samples: usize,
    /// Complex dimension of the Siegel cone, at least 2.
    pub siegel_dim: usize,
    pub seed: u64,
    pub metric: MetricConfig,
}

impl Default for GalleryConfig {
    fn default() -> Self {
        GalleryConfig {
            lacunary_terms: 64,
            isometry_samples: 100,
            siegel_dim: 2,
            seed: 0,
            metric: MetricConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LacunaryRow<T: Real> {
    /// Radius `1 - 2^-n`.
    pub n: usize,
    pub a: CVec<T>,
    pub b: CVec<T>,
    /// Largest distance of `a`, `b` to the common boundary limit.
    pub to_limit: T,
    pub source_gap: T,
    pub image_gap: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PolydiscRow<T: Real> {
    pub n: usize,
    pub z: CVec<T>,
    pub w: CVec<T>,
    pub distance: MetricBound<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IsometrySample<T: Real> {
    pub x: CVec<T>,
    pub y: CVec<T>,
    pub source: MetricBound<T>,
    pub image: MetricBound<T>,
    pub slack: T,
    pub overlap: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SiegelLimitRow<T: Real> {
    pub n: usize,
    pub z: CVec<T>,
    pub image: CVec<T>,
    pub norm: T,
    pub image_norm: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "example", rename_all = "snake_case")]
pub enum GalleryReport<T: Real> {
    Shear {
        c_proper: bool,
        terms: usize,
        rows: Vec<LacunaryRow<T>>,
        /// Sources merge at a boundary point while images separate.
        witnessed: bool,
    },
    Bidisc {
        rows: Vec<PolydiscRow<T>>,
        /// `sup_n` of the upper distances.
        sup: T,
        limit_z: CVec<T>,
        limit_w: CVec<T>,
        /// Bounded distance between sequences with distinct limits.
        witnessed: bool,
    },
    Cayley {
        forward: CVec<T>,
        samples: Vec<IsometrySample<T>>,
        overlaps: usize,
        /// Largest relative difference of the two upper distances.
        max_relative_gap: T,
        limit_rows: Vec<SiegelLimitRow<T>>,
        /// All samples overlap and the diverging sequence maps to the origin.
        witnessed: bool,
    },
}

impl<T: Real> GalleryReport<T> {
    pub fn witnessed(&self) -> bool {
        match self {
            GalleryReport::Shear { witnessed, .. }
            | GalleryReport::Bidisc { witnessed, .. }
            | GalleryReport::Cayley { witnessed, .. } => *witnessed,
        }
    }
}

/// `sum_{k < terms} z^(2^k)`, by repeated squaring.
pub fn lacunary<T: Real>(z: Complex<T>, terms: usize) -> Complex<T> {
    let mut p = z;
    let mut s = Complex::new(T::zero(), T::zero());
    for _ in 0..terms {
        s += p;
        p = p * p;
    }
    s
}

/// `(z_0, z) -> (1/(z_0 + i), z/(z_0 + i))`.
pub fn cayley<T: Real>(z: &CVec<T>) -> CVec<T> {
    let q = Complex::new(T::one(), T::zero()) / (z[0] + Complex::new(T::zero(), T::one()));
    let mut out = z.cscale(q);
    out[0] = q;
    out
}

/// `(w_0, w) -> (1/w_0 - i, w/w_0)`.
pub fn cayley_inverse<T: Real>(w: &CVec<T>) -> CVec<T> {
    let q = Complex::new(T::one(), T::zero()) / w[0];
    let mut out = w.cscale(q);
    out[0] = q - Complex::new(T::zero(), T::one());
    out
}

/// Derivative of [`cayley_inverse`] at `w` applied to `v`.
fn cayley_inverse_push<T: Real>(w: &CVec<T>, v: &CVec<T>) -> CVec<T> {
    let q = Complex::new(T::one(), T::zero()) / w[0];
    let q2 = q * q;
    let mut out = v.cscale(q);
    for j in 1..w.dim() {
        out[j] -= w[j] * v[0] * q2;
    }
    out[0] = -v[0] * q2;
    out
}

/// The Kobayashi structure of the Cayley image, pulled back through the
/// inverse map. Paths are optimized in image coordinates.
struct CayleyImage<M> {
    inner: M,
}

impl<T: Real, M: Finsler<T>> Finsler<T> for CayleyImage<M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn inside(&self, w: &CVec<T>) -> bool {
        w.is_finite() && w[0].norm_sqr() > T::zero() && self.inner.inside(&cayley_inverse(w))
    }

    fn upper(&self, w: &CVec<T>, v: &CVec<T>) -> T {
        self.inner
            .upper(&cayley_inverse(w), &cayley_inverse_push(w, v))
    }

    fn lower(&self, w: &CVec<T>, v: &CVec<T>) -> T {
        self.inner
            .lower(&cayley_inverse(w), &cayley_inverse_push(w, v))
    }

    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }

    fn scale(&self) -> T {
        T::one()
    }
}

/// Runs one gallery entry.
pub fn example_gallery<T: Real>(
    which: GalleryExample,
    cfg: &GalleryConfig,
) -> Result<GalleryReport<T>> {
    match which {
        GalleryExample::Shear => shear(cfg),
        GalleryExample::Bidisc => bidisc(cfg),
        GalleryExample::Cayley => cayley_example(cfg),
    }
}

fn shear<T: Real>(cfg: &GalleryConfig) -> Result<GalleryReport<T>> {
    if cfg.lacunary_terms == 0 {
        return Err(KobaError::InvalidInput(
            "lacunary_terms must be positive".into(),
        ));
    }
    let domain = ConvexDomain::<T>::product_with_plane(2);
    let report = recession_directions(&domain, domain.witness(), &RecessionConfig::default())?;
    let c_proper = is_c_proper(&domain, &report).c_proper;
    let limit = CVec::from_real(&[T::one(), T::zero(), T::zero(), T::zero()]);
    let shear_map = |z: &CVec<T>| {
        let mut w = z.clone();
        w[1] += lacunary(z[0], cfg.lacunary_terms);
        w
    };
    let two_pi_third = lit::<T>(2.0 * std::f64::consts::PI / 3.0);
    let rows: Vec<LacunaryRow<T>> = (8..=40)
        .step_by(4)
        .map(|n: usize| {
            let r = T::one() - lit::<T>(0.5).powi(n as i32);
            // Phase 2^k theta cycles through the cube roots of unity for
            // k >= n/2, so that half of the series cancels.
            let theta = two_pi_third * lit::<T>(0.5).powi((n / 2) as i32);
            let zero = Complex::new(T::zero(), T::zero());
            let a = CVec::new(vec![Complex::new(r, T::zero()), zero]);
            let b = CVec::new(vec![Complex::from_polar(r, theta), zero]);
            LacunaryRow {
                n,
                to_limit: a.dist(&limit).max(b.dist(&limit)),
                source_gap: a.dist(&b),
                image_gap: shear_map(&a).dist(&shear_map(&b)),
                a,
                b,
            }
        })
        .collect();
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let witnessed = !c_proper
        && last.to_limit < lit(1e-4)
        && last.image_gap > lit::<T>(2.0) * first.image_gap
        && rows
            .windows(2)
            .all(|w| w[1].to_limit < w[0].to_limit && w[1].image_gap > w[0].image_gap);
    Ok(GalleryReport::Shear {
        c_proper,
        terms: cfg.lacunary_terms,
        rows,
        witnessed,
    })
}

fn bidisc<T: Real>(cfg: &GalleryConfig) -> Result<GalleryReport<T>> {
    let domain = ConvexDomain::<T>::polydisc(2);
    let oracle = oracle_for(&domain, &cfg.metric)?;
    let pt = |a: T, b: T| CVec::from_real(&[a, T::zero(), b, T::zero()]);
    let half = lit::<T>(0.5);
    let rows = (1..=12)
        .map(|k| {
            let n = 1usize << k;
            let a = T::one() - T::one() / from_usize::<T>(n);
            let z = pt(a, T::zero());
            let w = pt(a, half);
            let distance = oracle.distance(&z, &w)?;
            Ok(PolydiscRow { n, z, w, distance })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = rows
        .iter()
        .map(|r| r.distance.upper)
        .fold(T::zero(), T::max);
    let limit_z = pt(T::one(), T::zero());
    let limit_w = pt(T::one(), half);
    let witnessed = sup.is_finite() && limit_z.dist(&limit_w) > T::zero();
    Ok(GalleryReport::Bidisc {
        rows,
        sup,
        limit_z,
        limit_w,
        witnessed,
    })
}

fn cayley_example<T: Real>(cfg: &GalleryConfig) -> Result<GalleryReport<T>> {
    if cfg.siegel_dim < 2 {
        return Err(KobaError::InvalidInput(
            "siegel_dim must be at least 2".into(),
        ));
    }
    let d = cfg.siegel_dim;
    let domain = ConvexDomain::<T>::siegel(d);
    let source = PathSolver::for_domain(&domain, &cfg.metric)?;
    let image = PathSolver::new(
        CayleyImage {
            inner: DomainMetric::new(&domain, &cfg.metric)?,
        },
        cfg.metric.clone(),
    );

    let mut e0 = CVec::zeros(d);
    e0[0] = Complex::new(T::zero(), lit(2.0));
    let forward = cayley(&e0);

    let points = interior_samples(&domain, 2 * cfg.isometry_samples, cfg.seed)?;
    let samples = points
        .par_chunks(2)
        .enumerate()
        .map(|(k, p)| {
            let (x, y) = (&p[0], &p[1]);
            let s = source.distance(x, y)?.bound;
            let i = image
                .distance(&cayley(x), &cayley(y))
                .map_err(|e| e.context(format!("image distance {k}")))?
                .bound;
            let slack = DistanceOracle::slack(&source, &s).max(DistanceOracle::slack(&image, &i));
            Ok(IsometrySample {
                x: x.clone(),
                y: y.clone(),
                overlap: s.lower.max(i.lower) <= s.upper.min(i.upper) + slack,
                source: s,
                image: i,
                slack,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overlaps = samples.iter().filter(|s| s.overlap).count();
    let max_relative_gap = samples
        .iter()
        .map(|s| (s.source.upper - s.image.upper).abs() / s.source.upper.max(s.image.upper))
        .fold(T::zero(), T::max);

    let limit_rows: Vec<SiegelLimitRow<T>> = (0..=6)
        .map(|k| {
            let n = 10usize.pow(k);
            let mut z = CVec::zeros(d);
            z[0] = Complex::new(T::zero(), from_usize(n));
            let image = cayley(&z);
            SiegelLimitRow {
                n,
                norm: z.norm(),
                image_norm: image.norm(),
                z,
                image,
            }
        })
        .collect();
    let shrinking = limit_rows
        .windows(2)
        .all(|w| w[1].image_norm < w[0].image_norm);
    let last = &limit_rows[limit_rows.len() - 1];
    let witnessed = overlaps == samples.len()
        && shrinking
        && last.image_norm < lit(1e-5)
        && last.norm > lit(1e5);
    Ok(GalleryReport::Cayley {
        forward,
        samples,
        overlaps,
        max_relative_gap,
        limit_rows,
        witnessed,
    })
}
