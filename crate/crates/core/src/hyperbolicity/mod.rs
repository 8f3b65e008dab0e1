//! Sampled Gromov-hyperbolicity statistics: four-point and thin-triangle
//! constants, visibility and shadowing checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::{is_c_proper, recession_directions, ConvexDomain, DomainKind, RecessionConfig};
use crate::error::{KobaError, Result};
use crate::metric::{DistanceOracle, PolylinePath};
use crate::scalar::{lit, Real};

/// Rejection attempts per interior point before a sampler is declared empty.
const MAX_REJECTIONS: usize = 10_000;

/// Pair order used for the six distances of a quadruple.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// `(x|y)_w` from the three distances `d(x,w)`, `d(y,w)`, `d(x,y)`.
pub fn gromov_product<T: Real>(d_xw: T, d_yw: T, d_xy: T) -> T {
    lit::<T>(0.5) * (d_xw + d_yw - d_xy)
}

/// Source of candidate points; membership is checked by the caller.
pub trait PointSampler<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut ChaCha8Rng) -> CVec<T>;
}

/// Uniform in a Euclidean ball of `C^d = R^{2d}`.
#[derive(Clone, Debug)]
pub struct EuclideanBallSampler<T: Real> {
    pub centre: CVec<T>,
    pub radius: T,
}

impl<T: Real> EuclideanBallSampler<T> {
    pub fn new(centre: CVec<T>, radius: T) -> Self {
        EuclideanBallSampler { centre, radius }
    }
}

impl<T: Real> PointSampler<T> for EuclideanBallSampler<T> {
    fn dim(&self) -> usize {
        self.centre.dim()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> CVec<T> {
        let n = self.centre.real_dim();
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let r = rng.gen::<f64>().powf(1.0 / n as f64);
        let mut z = self.centre.clone();
        for (k, gk) in g.iter().enumerate() {
            *z.real_mut(k) += self.radius * lit::<T>(r * gk / norm);
        }
        z
    }
}

/// Uniform in the product of discs `{|z_j - c_j| <= radius}`.
#[derive(Clone, Debug)]
pub struct ProductDiscSampler<T: Real> {
    pub centre: CVec<T>,
    pub radius: T,
}

impl<T: Real> ProductDiscSampler<T> {
    pub fn new(centre: CVec<T>, radius: T) -> Self {
        ProductDiscSampler { centre, radius }
    }
}

impl<T: Real> PointSampler<T> for ProductDiscSampler<T> {
    fn dim(&self) -> usize {
        self.centre.dim()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> CVec<T> {
        let mut z = self.centre.clone();
        for j in 0..z.dim() {
            let r = rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            *z.real_mut(2 * j) += self.radius * lit::<T>(r * th.cos());
            *z.real_mut(2 * j + 1) += self.radius * lit::<T>(r * th.sin());
        }
        z
    }
}

/// Radii `1 - 10^{-k}` for `k = 1..=n`, approaching the unit sphere.
pub fn radius_schedule(n: usize) -> Vec<f64> {
    (1..=n).map(|k| 1.0 - 10f64.powi(-(k as i32))).collect()
}

/// The sampler for a sweep at `radius` (in domain scales) around the
/// witness: product discs on a polydisc, Euclidean balls elsewhere.
pub fn sampler_for<T: Real>(domain: &ConvexDomain<T>, radius: T) -> Box<dyn PointSampler<T>> {
    let centre = domain.witness().clone();
    let r = radius * domain.scale();
    if domain.kind() == DomainKind::Polydisc {
        Box::new(ProductDiscSampler::new(centre, r))
    } else {
        Box::new(EuclideanBallSampler::new(centre, r))
    }
}

fn draw_inside<T: Real, O, S>(oracle: &O, sampler: &S, rng: &mut ChaCha8Rng) -> Result<CVec<T>>
where
    O: DistanceOracle<T> + ?Sized,
    S: PointSampler<T> + ?Sized,
{
    for _ in 0..MAX_REJECTIONS {
        let z = sampler.draw(rng);
        if oracle.contains(&z) {
            return Ok(z);
        }
    }
    Err(KobaError::InvalidInput(
        "sampler yields no interior points".into(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct QuadrupleSample<T: Real> {
    pub points: Vec<CVec<T>>,
    /// Upper distances in [`PAIRS`] order.
    pub distances: [T; 6],
}

impl<T: Real> QuadrupleSample<T> {
    /// Evaluates the six distances; fails on a degenerate or outside point.
    pub fn evaluate<O: DistanceOracle<T> + ?Sized>(
        oracle: &O,
        points: Vec<CVec<T>>,
    ) -> Result<(Self, T)> {
        if points.len() != 4 {
            return Err(KobaError::InvalidInput(
                "a quadruple has four points".into(),
            ));
        }
        let mut distances = [T::zero(); 6];
        let mut slack = T::zero();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let b = oracle.distance(&points[i], &points[j])?;
            if !b.upper.is_finite() {
                return Err(KobaError::NonConvergence("infinite distance".into()));
            }
            distances[k] = b.upper;
            slack += oracle.slack(&b);
        }
        Ok((QuadrupleSample { points, distances }, slack))
    }

    /// `max` over base points and labelings of
    /// `min((x|z)_w, (z|y)_w) - (x|y)_w`, which is half the gap between the
    /// two largest of the three pair sums.
    pub fn four_point_value(&self) -> T {
        let d = &self.distances;
        let mut s = [d[0] + d[5], d[1] + d[4], d[2] + d[3]];
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        (lit::<T>(0.5) * (s[0] - s[1])).max(T::zero())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TriangleReport<T: Real> {
    pub delta: T,
    pub vertices: Vec<CVec<T>>,
    /// Side (0: x-y, 1: y-z, 2: z-x) and node attaining the max.
    pub side: usize,
    pub node: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DeltaReport<T: Real> {
    pub delta_four_point: T,
    pub delta_thin_triangle: T,
    pub n_samples: usize,
    pub n_triangles: usize,
    pub max_witness: Option<QuadrupleSample<T>>,
    pub triangle_witness: Option<TriangleReport<T>>,
    /// Accumulated interval slack of the witness distances.
    pub error_bar: T,
}

/// Four-point statistic over `n_samples` quadruples drawn from `sampler`.
pub fn four_point_delta<T, O, S>(
    oracle: &O,
    sampler: &S,
    n_samples: usize,
    seed: u64,
) -> Result<DeltaReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
    S: PointSampler<T> + ?Sized,
{
    delta_report(oracle, sampler, n_samples, 0, seed)
}

/// Four-point statistic plus the thin-triangle statistic over the first
/// `n_triangles` sampled triples.
pub fn delta_report<T, O, S>(
    oracle: &O,
    sampler: &S,
    n_samples: usize,
    n_triangles: usize,
    seed: u64,
) -> Result<DeltaReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
    S: PointSampler<T> + ?Sized,
{
    if sampler.dim() != oracle.dim() {
        return Err(KobaError::DimensionMismatch {
            expected: oracle.dim(),
            found: sampler.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quads = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let q: Vec<CVec<T>> = (0..4)
            .map(|_| draw_inside(oracle, sampler, &mut rng))
            .collect::<Result<_>>()?;
        quads.push(q);
    }
    let evaluated: Vec<Result<(QuadrupleSample<T>, T)>> = quads
        .into_par_iter()
        .enumerate()
        .map(|(i, q)| {
            let desc = format!("quadruple {i} {:?}", q);
            QuadrupleSample::evaluate(oracle, q).map_err(|e| e.context(desc))
        })
        .collect();

    let mut report = DeltaReport {
        delta_four_point: T::zero(),
        delta_thin_triangle: T::zero(),
        n_samples,
        n_triangles: 0,
        max_witness: None,
        triangle_witness: None,
        error_bar: T::zero(),
    };
    for r in evaluated {
        let (q, slack) = r?;
        let v = q.four_point_value();
        if report.max_witness.is_none() || v > report.delta_four_point {
            report.delta_four_point = v;
            report.error_bar = slack;
            report.max_witness = Some(q);
        }
    }

    let mut tri_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7431);
    for _ in 0..n_triangles {
        let v: Vec<CVec<T>> = (0..3)
            .map(|_| draw_inside(oracle, sampler, &mut tri_rng))
            .collect::<Result<_>>()?;
        let t = thin_triangle_delta(oracle, &v[0], &v[1], &v[2])?;
        if report.triangle_witness.is_none() || t.delta > report.delta_thin_triangle {
            report.delta_thin_triangle = t.delta;
            report.triangle_witness = Some(t);
        }
        report.n_triangles += 1;
    }
    Ok(report)
}

/// Rejects domains that contain complex lines, where the statistics are
/// meaningless.
pub fn require_c_proper<T: Real>(domain: &ConvexDomain<T>) -> Result<()> {
    let report = recession_directions(domain, domain.witness(), &RecessionConfig::default())?;
    if is_c_proper(domain, &report).c_proper {
        Ok(())
    } else {
        Err(KobaError::Precondition(
            "domain contains a complex line".into(),
        ))
    }
}

/// Max over the nodes of each geodesic side of the upper distance to the
/// nodes of the other two sides.
pub fn thin_triangle_delta<T, O>(
    oracle: &O,
    x: &CVec<T>,
    y: &CVec<T>,
    z: &CVec<T>,
) -> Result<TriangleReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let vertices = [x, y, z];
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if vertices[i] == vertices[j] {
            return Err(KobaError::Precondition(
                "triangle vertices must be distinct".into(),
            ));
        }
    }
    let sides = [
        oracle.geodesic(x, y)?,
        oracle.geodesic(y, z)?,
        oracle.geodesic(z, x)?,
    ];
    let mut best = (T::zero(), 0, 0);
    for s in 0..3 {
        let others: Vec<&CVec<T>> = (0..3)
            .filter(|&o| o != s)
            .flat_map(|o| sides[o].nodes.iter())
            .collect();
        let per_node: Vec<Result<T>> = sides[s]
            .nodes
            .par_iter()
            .map(|p| nearest(oracle, p, &others))
            .collect();
        for (k, d) in per_node.into_iter().enumerate() {
            let d = d?;
            if d > best.0 {
                best = (d, s, k);
            }
        }
    }
    Ok(TriangleReport {
        delta: best.0,
        vertices: vec![x.clone(), y.clone(), z.clone()],
        side: best.1,
        node: best.2,
    })
}

fn nearest<T, O>(oracle: &O, p: &CVec<T>, cloud: &[&CVec<T>]) -> Result<T>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let mut m = T::infinity();
    for q in cloud {
        if *q == p {
            return Ok(T::zero());
        }
        m = m.min(oracle.quick_upper(p, q)?);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct VisibilityReport<T: Real> {
    /// `max d(x,x0) + d(x0,y) - d(x,y)` over all sampled pairs.
    pub a: T,
    /// The same max restricted to the first `k + 1` samples of each cloud.
    pub per_level: Vec<T>,
    pub stabilizes: bool,
}

/// Relative tolerance for the last levels of a visibility profile.
pub const STABILIZE_TOL: f64 = 0.05;

/// Empirical visibility constant for two clouds ordered toward their ideal
/// points.
pub fn visibility_check<T, O>(
    oracle: &O,
    x0: &CVec<T>,
    xs: &[CVec<T>],
    ys: &[CVec<T>],
) -> Result<VisibilityReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if xs.is_empty() || ys.is_empty() {
        return Err(KobaError::InvalidInput("empty sample cloud".into()));
    }
    if !oracle.contains(x0) {
        return Err(KobaError::Precondition(
            "x0 is not inside the domain".into(),
        ));
    }
    let (xl, yl) = (xs.last().unwrap(), ys.last().unwrap());
    let overlap =
        xs.iter().any(|x| ys.contains(x)) || xl.dist(yl) <= lit::<T>(1e-6) * (T::one() + xl.norm());
    if overlap {
        return Err(KobaError::InvalidInput("sample clouds overlap".into()));
    }
    let dist = |a: &CVec<T>, b: &CVec<T>| oracle.distance(a, b).map(|b| b.upper);
    let dx: Vec<T> = xs.iter().map(|x| dist(x, x0)).collect::<Result<_>>()?;
    let dy: Vec<T> = ys.iter().map(|y| dist(x0, y)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..xs.len())
        .flat_map(|i| (0..ys.len()).map(move |j| (i, j)))
        .collect();
    let vals: Vec<Result<T>> = cells
        .par_iter()
        .map(|&(i, j)| Ok(dx[i] + dy[j] - dist(&xs[i], &ys[j])?))
        .collect();
    let n = xs.len().max(ys.len());
    let mut per_level = vec![T::neg_infinity(); n];
    for (&(i, j), v) in cells.iter().zip(vals) {
        let v = v?;
        let level = i.max(j);
        per_level[level] = per_level[level].max(v);
    }
    for k in 1..n {
        per_level[k] = per_level[k].max(per_level[k - 1]);
    }
    let a = per_level[n - 1];
    let stabilizes = n >= 3 && {
        let span = per_level[n - 1] - per_level[n - 3];
        span <= lit::<T>(STABILIZE_TOL) * (T::one() + a.abs())
    };
    Ok(VisibilityReport {
        a,
        per_level,
        stabilizes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShadowReport<T: Real> {
    pub gap: T,
    pub geodesic: PolylinePath<T>,
}

/// Symmetric Hausdorff distance between the node clouds of `quasi` and of
/// the geodesic joining its endpoints.
pub fn shadowing_gap<T, O>(oracle: &O, quasi: &PolylinePath<T>) -> Result<ShadowReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if let Some(k) = quasi.nodes.iter().position(|p| !oracle.contains(p)) {
        return Err(KobaError::Precondition(format!(
            "quasi-geodesic node {k} is outside the domain"
        )));
    }
    let geodesic = oracle.geodesic(quasi.start(), quasi.end())?;
    let gap = hausdorff(oracle, &quasi.nodes, &geodesic.nodes)?;
    Ok(ShadowReport { gap, geodesic })
}

/// Symmetric Hausdorff distance between two node clouds.
pub fn hausdorff<T, O>(oracle: &O, a: &[CVec<T>], b: &[CVec<T>]) -> Result<T>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let one_sided = |from: &[CVec<T>], to: &[CVec<T>]| -> Result<T> {
        let refs: Vec<&CVec<T>> = to.iter().collect();
        let ds: Vec<Result<T>> = from.par_iter().map(|p| nearest(oracle, p, &refs)).collect();
        ds.into_iter()
            .try_fold(T::zero(), |m, d| d.map(|d| m.max(d)))
    };
    Ok(one_sided(a, b)?.max(one_sided(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{disc_distance, oracle_for, MetricConfig};

    fn c(re: f64, im: f64) -> CVec<f64> {
        CVec::scalar(re, im)
    }

    #[test]
    fn gromov_product_identities() {
        let d = ConvexDomain::<f64>::ball(1);
        let (x, w) = (c(0.9, 0.0), c(0.0, 0.0));
        let y = c(-0.9, 0.0);
        let dd = |a: &CVec<f64>, b: &CVec<f64>| disc_distance(a.0[0], b.0[0]);
        assert!(d.contains(&x).unwrap());
        // x = y gives d(x, w).
        assert_eq!(gromov_product(dd(&x, &w), dd(&x, &w), 0.0), dd(&x, &w));
        // w = x gives 0.
        assert!(gromov_product(0.0, dd(&y, &x), dd(&x, &y)).abs() < 1e-12);
        // Opposite points seen from the centre of the geodesic.
        let g = gromov_product(dd(&x, &w), dd(&y, &w), dd(&x, &y));
        assert!(g.abs() < 1e-12, "{g}");
    }

    #[test]
    fn four_point_value_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut distances = [0.0; 6];
            for d in &mut distances {
                *d = rng.gen::<f64>() * 3.0;
            }
            let q = QuadrupleSample {
                points: vec![CVec::<f64>::zeros(1); 4],
                distances,
            };
            let d = |i: usize, j: usize| {
                if i == j {
                    return 0.0;
                }
                let (a, b) = (i.min(j), i.max(j));
                distances[PAIRS.iter().position(|&p| p == (a, b)).unwrap()]
            };
            // Every base w and every labeling of the other three.
            let mut brute = 0.0f64;
            for w in 0..4 {
                let rest: Vec<usize> = (0..4).filter(|&k| k != w).collect();
                for &(x, y, z) in &[
                    (rest[0], rest[1], rest[2]),
                    (rest[0], rest[2], rest[1]),
                    (rest[1], rest[2], rest[0]),
                ] {
                    let gp = |a: usize, b: usize| gromov_product(d(a, w), d(b, w), d(a, b));
                    brute = brute.max(gp(x, z).min(gp(z, y)) - gp(x, y));
                }
            }
            assert!((q.four_point_value() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_quadruple_contributes_nothing() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let pts = vec![c(0.3, 0.1), c(0.3, 0.1), c(-0.5, 0.2), c(0.1, -0.7)];
        let (q, _) = QuadrupleSample::evaluate(o.as_ref(), pts).unwrap();
        assert!(q.four_point_value() <= 1e-12);
    }

    #[test]
    fn disc_delta_is_bounded() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let s = EuclideanBallSampler::new(CVec::zeros(1), 0.95);
        let r = four_point_delta(o.as_ref(), &s, 500, 11).unwrap();
        assert!(r.delta_four_point > 0.0 && r.delta_four_point <= 1.0);
        let w = r.max_witness.unwrap();
        // The witness reproduces the value from fresh distances.
        let (again, _) = QuadrupleSample::evaluate(o.as_ref(), w.points).unwrap();
        assert!((again.four_point_value() - r.delta_four_point).abs() < 1e-9);
        // Same seed, same report.
        let r2 = four_point_delta(o.as_ref(), &s, 500, 11).unwrap();
        assert_eq!(r2.delta_four_point, r.delta_four_point);
    }

    #[test]
    fn delta_is_monotone_in_the_sample_set() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let s = EuclideanBallSampler::new(CVec::zeros(1), 0.9);
        let small = four_point_delta(o.as_ref(), &s, 50, 5).unwrap();
        let large = four_point_delta(o.as_ref(), &s, 200, 5).unwrap();
        assert!(large.delta_four_point >= small.delta_four_point);
    }

    #[test]
    fn polydisc_corner_quadruples_grow() {
        // Corners (+-r, +-r) are pairwise equidistant under the max of the
        // coordinate distances and give 0; the axis points (+-r, 0), (0, +-r)
        // give exactly arctanh r.
        let d = ConvexDomain::<f64>::polydisc(2);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let mut last = 0.0;
        for r in [0.9, 0.99, 0.999] {
            let p = |a: f64, b: f64| CVec::from_real(&[a * r, 0.0, b * r, 0.0]);
            let corners = vec![p(1.0, 1.0), p(-1.0, 1.0), p(-1.0, -1.0), p(1.0, -1.0)];
            let (q, _) = QuadrupleSample::evaluate(o.as_ref(), corners).unwrap();
            assert!(q.four_point_value() < 1e-9);
            let axes = vec![p(1.0, 0.0), p(0.0, 1.0), p(-1.0, 0.0), p(0.0, -1.0)];
            let (q, _) = QuadrupleSample::evaluate(o.as_ref(), axes).unwrap();
            let v = q.four_point_value();
            assert!((v - f64::atanh(r)).abs() < 1e-9, "r={r} v={v}");
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn samplers_stay_in_their_regions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = EuclideanBallSampler::new(CVec::<f64>::zeros(2), 0.5);
        let p = ProductDiscSampler::new(CVec::<f64>::zeros(2), 0.5);
        for _ in 0..500 {
            assert!(b.draw(&mut rng).norm() <= 0.5 + 1e-12);
            assert!(p.draw(&mut rng).max_abs() <= 0.5 + 1e-12);
        }
        assert_eq!(radius_schedule(2), vec![0.9, 0.99]);
    }

    #[test]
    fn disc_triangles() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let t = thin_triangle_delta(o.as_ref(), &c(0.8, 0.0), &c(0.0, 0.8), &c(-0.8, 0.0)).unwrap();
        assert!(t.delta > 0.0 && t.delta <= 1.5, "{}", t.delta);
        // Collinear points: the sides overlap up to node spacing.
        let t = thin_triangle_delta(o.as_ref(), &c(-0.6, 0.0), &c(0.1, 0.0), &c(0.7, 0.0)).unwrap();
        let spacing = disc_distance(
            num_complex::Complex::new(-0.6, 0.0),
            num_complex::Complex::new(0.7, 0.0),
        ) / 32.0;
        assert!(t.delta < spacing, "{} vs {spacing}", t.delta);
        assert!(thin_triangle_delta(o.as_ref(), &c(0.1, 0.0), &c(0.1, 0.0), &c(0.2, 0.0)).is_err());
    }

    #[test]
    fn disc_visibility_is_bounded() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let rs = [0.5, 0.9, 0.99, 0.999, 0.9999];
        let xs: Vec<_> = rs.iter().map(|&r| c(r, 0.0)).collect();
        let ys: Vec<_> = rs.iter().map(|&r| c(-r, 0.0)).collect();
        let v = visibility_check(o.as_ref(), &c(0.0, 0.0), &xs, &ys).unwrap();
        assert!(v.a.abs() < 1e-9 && v.stabilizes);
        // Off-axis base point: still bounded, and x = x0 contributes 0.
        let x0 = c(0.0, 0.5);
        let mut xs2 = vec![x0.clone()];
        xs2.extend(xs.iter().cloned());
        let v = visibility_check(o.as_ref(), &x0, &xs2, &ys).unwrap();
        assert!(v.per_level[0].abs() < 1e-12);
        assert!(v.a < 2.0 && v.stabilizes, "{:?}", v);
        // Clouds converging to the same point.
        let zs: Vec<_> = rs.iter().map(|&r| c(r, 1e-9)).collect();
        assert!(visibility_check(o.as_ref(), &x0, &xs, &zs).is_err());
    }

    #[test]
    fn geodesic_shadows_itself() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let g = o.geodesic(&c(-0.5, 0.1), &c(0.3, 0.6)).unwrap();
        let s = shadowing_gap(o.as_ref(), &g).unwrap();
        assert!(s.gap < 1e-6, "{}", s.gap);
    }

    #[test]
    fn euclidean_chord_stays_near_the_geodesic() {
        let d = ConvexDomain::<f64>::ball(1);
        let o = oracle_for(&d, &MetricConfig::default()).unwrap();
        let (a, b) = (c(-0.9, 0.0), c(0.0, 0.9));
        let chord =
            PolylinePath::new((0..=32).map(|k| a.lerp(&b, k as f64 / 32.0)).collect()).unwrap();
        let s = shadowing_gap(o.as_ref(), &chord).unwrap();
        // Bounded well below the endpoint separation.
        let sep = o.distance(&a, &b).unwrap().upper;
        assert!(s.gap > 0.0 && s.gap < 0.5 * sep, "{} vs {sep}", s.gap);
    }

    #[test]
    fn plane_product_is_rejected() {
        assert!(require_c_proper(&ConvexDomain::<f64>::product_with_plane(2)).is_err());
        assert!(require_c_proper(&ConvexDomain::<f64>::ball(2)).is_ok());
    }
}
