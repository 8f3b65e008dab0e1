use serde::{Deserialize, Serialize};

use crate::boundary::IdealPoint;
use crate::cvec::CVec;
use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

use super::config::MetricConfig;
use super::finsler::{DomainMetric, Finsler, MetricBound};
use super::path::{
    measure, partial_upper, resample_uniform, segment_upper, split_at_length, PolylinePath,
};
use super::quadrature::GaussLegendre;

/// Interval estimate of `K_D(x, y)` with the path realizing the upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DistanceEstimate<T: Real> {
    pub bound: MetricBound<T>,
    /// `None` only for `x = y`.
    pub path: Option<PolylinePath<T>>,
    /// Total optimizer sweeps over all refinement levels.
    pub iterations: usize,
}

/// Smallest probe, relative to local node spacing; below this the parabola
/// fit drowns in rounding.
const PROBE_FLOOR: f64 = 1e-5;
const COARSE_TOL: f64 = 1e-6;

/// Rays are prefixes of geodesics this much longer than the horizon, so
/// the prefix does not bend toward the aiming point.
pub const RAY_OVERSHOOT: f64 = 4.0;

/// Polyline geodesic solver for a Finsler structure.
#[derive(Clone, Debug)]
pub struct PathSolver<T: Real, M: Finsler<T>> {
    metric: M,
    cfg: MetricConfig,
    gl: GaussLegendre<T>,
}

impl<'a, T: Real> PathSolver<T, DomainMetric<'a, T>> {
    pub fn for_domain(domain: &'a ConvexDomain<T>, cfg: &MetricConfig) -> Result<Self> {
        Ok(Self::new(DomainMetric::new(domain, cfg)?, cfg.clone()))
    }

    pub fn domain(&self) -> &'a ConvexDomain<T> {
        self.metric.domain()
    }
}

impl<T: Real, M: Finsler<T>> PathSolver<T, M> {
    pub fn new(metric: M, cfg: MetricConfig) -> Self {
        let gl = GaussLegendre::new(cfg.quad);
        PathSolver { metric, cfg, gl }
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn config(&self) -> &MetricConfig {
        &self.cfg
    }

    fn check(&self, z: &CVec<T>, what: &str) -> Result<()> {
        z.check_dim(self.metric.dim())?;
        if self.metric.inside(z) {
            Ok(())
        } else {
            Err(KobaError::Precondition(format!(
                "{what} is not inside the domain"
            )))
        }
    }

    /// Upper length of the straight segment, integrated adaptively.
    pub fn straight_upper(&self, x: &CVec<T>, y: &CVec<T>) -> Result<T> {
        self.check(x, "x")?;
        self.check(y, "y")?;
        if x == y {
            return Ok(T::zero());
        }
        partial_upper(&self.metric, x, y, T::zero(), T::one(), &self.gl)
            .ok_or(KobaError::PathExitsDomain { segment: 0 })
    }

    pub fn distance(&self, x: &CVec<T>, y: &CVec<T>) -> Result<DistanceEstimate<T>> {
        self.check(x, "x")?;
        self.check(y, "y")?;
        if x == y {
            return Ok(DistanceEstimate {
                bound: MetricBound::zero(),
                path: None,
                iterations: 0,
            });
        }
        // Solve in a canonical orientation so the result is symmetric.
        let flip = lex_less(y, x);
        let (a, b) = if flip { (y, x) } else { (x, y) };
        let (nodes, iterations) = self.solve(a, b)?;
        let mut path = measure(&self.metric, nodes, &self.gl)?;
        let upper = path.length().upper;
        if flip {
            path = path.reversed();
        }
        let mut lower = upper / lit(2.0);
        if let Some(h) = self.metric.distance_lower(x, y) {
            lower = lower.max(h);
        }
        Ok(DistanceEstimate {
            bound: MetricBound::new(lower.min(upper), upper),
            path: Some(path),
            iterations,
        })
    }

    /// The optimized path reparametrized to uniform upper length per segment.
    pub fn geodesic(&self, x: &CVec<T>, y: &CVec<T>) -> Result<PolylinePath<T>> {
        self.check(x, "x")?;
        self.check(y, "y")?;
        if x == y {
            return Err(KobaError::InvalidInput(
                "geodesic endpoints coincide (degenerate path)".into(),
            ));
        }
        let est = self.distance(x, y)?;
        let path = est.path.expect("distinct endpoints yield a path");
        self.uniform(&path.nodes, path.segments())
    }

    fn uniform(&self, nodes: &[CVec<T>], segments: usize) -> Result<PolylinePath<T>> {
        let nodes = resample_uniform(&self.metric, nodes, segments.max(1), &self.gl)
            .ok_or(KobaError::PathExitsDomain { segment: 0 })?;
        measure(&self.metric, nodes, &self.gl)
    }

    /// Geodesic ray of upper length `t_len` from `x0` towards the points
    /// `family(1), family(2), ...`, which must escape every compact set.
    /// Prefix of length `t_len` of the first geodesic from `x0` to a
    /// `family` point whose upper length reaches `reach >= t_len`.
    pub fn ray_through<F: Fn(usize) -> CVec<T>>(
        &self,
        x0: &CVec<T>,
        family: F,
        reach: T,
        t_len: T,
    ) -> Result<PolylinePath<T>> {
        self.check(x0, "x0")?;
        if !(t_len > T::zero()) || !t_len.is_finite() {
            return Err(KobaError::InvalidInput(
                "ray length must be positive (a single-point prefix is not a path)".into(),
            ));
        }
        for k in 1..=60 {
            let y = family(k);
            if !self.metric.inside(&y) {
                break;
            }
            if self.straight_upper(x0, &y)? < reach {
                continue;
            }
            let g = self.geodesic(x0, &y)?;
            if g.length().upper < reach {
                continue;
            }
            return self.prefix(&g, t_len);
        }
        Err(KobaError::NonConvergence(format!(
            "ray could not reach upper length {reach} inside the membership margin"
        )))
    }

    /// Initial piece of `path` of upper length `t_len`, resampled uniformly.
    fn prefix(&self, path: &PolylinePath<T>, t_len: T) -> Result<PolylinePath<T>> {
        let mut nodes = vec![path.nodes[0].clone()];
        let mut acc = T::zero();
        for (w, b) in path.nodes.windows(2).zip(&path.per_segment_bounds) {
            if acc + b.upper < t_len {
                acc += b.upper;
                nodes.push(w[1].clone());
                continue;
            }
            let s = split_at_length(&self.metric, &w[0], &w[1], t_len - acc, &self.gl)
                .ok_or(KobaError::PathExitsDomain { segment: 0 })?;
            let p = w[0].lerp(&w[1], s);
            if nodes.last() != Some(&p) {
                nodes.push(p);
            }
            break;
        }
        if nodes.len() < 2 {
            return Err(KobaError::InvalidInput(
                "ray prefix is a single point".into(),
            ));
        }
        self.uniform(&nodes, self.cfg.n_nodes - 1)
    }

    /// Coarse-to-fine optimization; returns the nodes and the sweep count.
    fn solve(&self, x: &CVec<T>, y: &CVec<T>) -> Result<(Vec<CVec<T>>, usize)> {
        let target = self.cfg.n_nodes - 1;
        let mut nodes = vec![x.clone(), y.clone()];
        let mut segs = 1;
        let mut sweeps = 0;
        while 2 * segs <= target {
            nodes = self.refine(&nodes)?;
            segs *= 2;
            let last = 2 * segs > target && segs == target;
            sweeps += self.optimize(&mut nodes, last)?;
        }
        if segs < target {
            nodes = resample_uniform(&self.metric, &nodes, target, &self.gl)
                .ok_or(KobaError::PathExitsDomain { segment: 0 })?;
            sweeps += self.optimize(&mut nodes, true)?;
        }
        Ok((nodes, sweeps))
    }

    /// Inserts the upper-length midpoint of every segment. The curve is
    /// unchanged, so refinement never lengthens it beyond quadrature error.
    fn refine(&self, nodes: &[CVec<T>]) -> Result<Vec<CVec<T>>> {
        let mut out = Vec::with_capacity(2 * nodes.len());
        let half = lit::<T>(0.5);
        for (i, w) in nodes.windows(2).enumerate() {
            let err = KobaError::PathExitsDomain { segment: i };
            let total = partial_upper(&self.metric, &w[0], &w[1], T::zero(), T::one(), &self.gl)
                .ok_or(err.clone())?;
            let mut s = if total > T::zero() {
                split_at_length(&self.metric, &w[0], &w[1], total * half, &self.gl).ok_or(err)?
            } else {
                half
            };
            let edge = T::epsilon() * lit(64.0);
            s = s.max(edge).min(T::one() - edge);
            out.push(w[0].clone());
            let mid = w[0].lerp(&w[1], s);
            if mid != w[0] && mid != w[1] {
                out.push(mid);
            }
        }
        out.push(nodes.last().expect("non-empty").clone());
        Ok(out)
    }

    /// Gauss–Seidel sweeps over interior nodes. Each node is moved within the
    /// hyperplane normal to its local chord (tangential moves only
    /// reparametrize), one direction at a time, by a safeguarded parabolic
    /// line search.
    fn optimize(&self, nodes: &mut [CVec<T>], last: bool) -> Result<usize> {
        let n = nodes.len();
        if n < 3 {
            return Ok(0);
        }
        let m = &self.metric;
        let gl = &self.gl;
        let mut seg: Vec<T> = nodes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                segment_upper(m, &w[0], &w[1], gl).ok_or(KobaError::PathExitsDomain { segment: i })
            })
            .collect::<Result<_>>()?;
        let spacing = |nodes: &[CVec<T>], i: usize| {
            nodes[i]
                .dist(&nodes[i - 1])
                .min(nodes[i].dist(&nodes[i + 1]))
        };
        let mut probe: Vec<T> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    T::zero()
                } else {
                    lit::<T>(0.1) * spacing(nodes, i)
                }
            })
            .collect();
        // Intermediate levels only seed the next one.
        let tol_rel = if last {
            lit::<T>(self.cfg.tol_rel)
        } else {
            lit::<T>(self.cfg.tol_rel.max(COARSE_TOL))
        };
        let floor = lit::<T>(PROBE_FLOOR);
        let two = lit::<T>(2.0);
        // Optimal SOR factor for a chain of this length.
        let omega = lit::<T>(2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin()));
        let mut total = seg.iter().fold(T::zero(), |a, b| a + *b);
        for sweep in 1..=self.cfg.max_sweeps {
            let before = total;
            for i in 1..n - 1 {
                let sp = spacing(nodes, i);
                let h = probe[i].max(floor * sp).min(sp / two);
                let start = nodes[i].clone();
                let chord = &nodes[i + 1] - &nodes[i - 1];
                let mut cur = seg[i - 1] + seg[i];
                for e in normal_basis(&chord) {
                    let eval = |t: T, nodes: &[CVec<T>]| -> Option<(T, T, CVec<T>)> {
                        let c = nodes[i].add_scaled(t, &e);
                        if !m.inside(&c) {
                            return None;
                        }
                        let l1 = segment_upper(m, &nodes[i - 1], &c, gl)?;
                        let l2 = segment_upper(m, &c, &nodes[i + 1], gl)?;
                        Some((l1, l2, c))
                    };
                    let fp = eval(h, nodes);
                    let fm = eval(-h, nodes);
                    let mut best: Option<(T, T, CVec<T>)> = None;
                    let consider =
                        |cand: Option<(T, T, CVec<T>)>,
                         cur: T,
                         best: &mut Option<(T, T, CVec<T>)>| {
                            if let Some(c) = cand {
                                let v = c.0 + c.1;
                                let incumbent = best.as_ref().map_or(cur, |b| b.0 + b.1);
                                if v < incumbent {
                                    *best = Some(c);
                                }
                            }
                        };
                    if let (Some(p), Some(q)) = (&fp, &fm) {
                        let (f_p, f_m) = (p.0 + p.1, q.0 + q.1);
                        let curv = f_p - two * cur + f_m;
                        if curv > T::zero() {
                            let t = (h * (f_m - f_p) / (two * curv)).max(-two * h).min(two * h);
                            if t.abs() > T::epsilon() * h {
                                // Over-relaxed step first: on a quadratic it
                                // still decreases the length for omega < 2
                                // and damps the slow chain modes.
                                let over = eval(omega * t, nodes);
                                if over.as_ref().is_some_and(|o| o.0 + o.1 < cur) {
                                    best = over;
                                } else {
                                    consider(eval(t, nodes), cur, &mut best);
                                }
                            }
                        }
                    }
                    if best.is_none() {
                        consider(fp, cur, &mut best);
                        consider(fm, cur, &mut best);
                    }
                    if let Some((l1, l2, c)) = best {
                        nodes[i] = c;
                        seg[i - 1] = l1;
                        seg[i] = l2;
                        cur = l1 + l2;
                    }
                }
                let moved = nodes[i].dist(&start);
                probe[i] = (two * moved).max(h / lit(4.0));
            }
            total = seg.iter().fold(T::zero(), |a, b| a + *b);
            let improvement = (before - total) / total.max(T::min_positive_value());
            if improvement <= tol_rel {
                return Ok(sweep);
            }
        }
        Ok(self.cfg.max_sweeps)
    }
}

/// Orthonormal basis of the real orthogonal complement of `chord`.
fn normal_basis<T: Real>(chord: &CVec<T>) -> Vec<CVec<T>> {
    let rd = chord.real_dim();
    let Some(t) = chord.normalized() else {
        return (0..rd).map(|k| unit_real(chord.dim(), k)).collect();
    };
    let mut basis: Vec<CVec<T>> = vec![t];
    for k in 0..rd {
        let mut v = unit_real(chord.dim(), k);
        for b in &basis {
            let c = b.real_dot(&v);
            v = v.add_scaled(-c, b);
        }
        if let Some(u) = v.normalized() {
            if v.norm() > lit(1e-6) {
                basis.push(u);
            }
        }
        if basis.len() == rd {
            break;
        }
    }
    basis.remove(0);
    basis
}

fn unit_real<T: Real>(dim: usize, k: usize) -> CVec<T> {
    let mut v = CVec::zeros(dim);
    *v.real_mut(k) = T::one();
    v
}

/// Lexicographic order on real coordinates.
fn lex_less<T: Real>(a: &CVec<T>, b: &CVec<T>) -> bool {
    for k in 0..a.real_dim() {
        let (x, y) = (a.real(k), b.real(k));
        if x != y {
            return x < y;
        }
    }
    false
}

/// Interval estimate of the Kobayashi distance.
pub fn distance<T: Real>(
    domain: &ConvexDomain<T>,
    x: &CVec<T>,
    y: &CVec<T>,
    cfg: &MetricConfig,
) -> Result<DistanceEstimate<T>> {
    PathSolver::for_domain(domain, cfg)?.distance(x, y)
}

/// Approximate unit-speed geodesic from `x` to `y`.
pub fn geodesic<T: Real>(
    domain: &ConvexDomain<T>,
    x: &CVec<T>,
    y: &CVec<T>,
    cfg: &MetricConfig,
) -> Result<PolylinePath<T>> {
    PathSolver::for_domain(domain, cfg)?.geodesic(x, y)
}

/// Approximate geodesic ray of upper length `t_len` from `x0` to `target`.
pub fn ray<T: Real>(
    domain: &ConvexDomain<T>,
    x0: &CVec<T>,
    target: &IdealPoint<T>,
    t_len: T,
    cfg: &MetricConfig,
) -> Result<PolylinePath<T>> {
    target.validate(domain)?;
    let solver = PathSolver::for_domain(domain, cfg)?;
    solver.check(x0, "x0")?;
    match target {
        IdealPoint::Finite { point } => {
            let dir = point - x0;
            solver.ray_through(
                x0,
                |k| x0.add_scaled(T::one() - lit::<T>(0.5).powi(k as i32), &dir),
                t_len + lit(RAY_OVERSHOOT),
                t_len,
            )
        }
        IdealPoint::End { direction, .. } => {
            let u = direction.normalized().expect("validated");
            let s0 = domain.scale() / lit(4.0);
            solver.ray_through(
                x0,
                |k| x0.add_scaled(s0 * lit::<T>(2.0).powi(k as i32), &u),
                t_len + lit(RAY_OVERSHOOT),
                t_len,
            )
        }
    }
}
