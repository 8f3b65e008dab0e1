//! Orbits, their classification, and Denjoy–Wolff start independence.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{end_for_direction, IdealPoint, EPS_BOUNDARY};
use crate::cvec::CVec;
use crate::error::{KobaError, Result};
use crate::metric::DistanceOracle;
use crate::scalar::{from_usize, lit, Real};

use super::maps::HoloMap;

/// Boundary margin (relative to scale) below which a step distance is not
/// resolvable in working precision.
pub const RESOLVE_MARGIN: f64 = 1e-8;

/// Norm growth factor, over the domain scale, that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Allowed increase of consecutive step distances.
pub const STEP_TOL: f64 = 1e-6;

pub const MIN_TRACE: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrbitTrace<T: Real> {
    /// `f^n(x0)` for `n = 0..=N`.
    pub points: Vec<CVec<T>>,
    /// Upper estimate of `d(f^n x0, f^{n+1} x0)`; `None` once the points are
    /// too close to the boundary to resolve.
    pub step_dist: Vec<Option<T>>,
    pub norms: Vec<T>,
}

impl<T: Real> OrbitTrace<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// First index where a resolved step distance grows by more than
    /// `STEP_TOL` plus `slack`.
    pub fn monotonicity_violation(&self, slack: T) -> Option<usize> {
        let lim = lit::<T>(STEP_TOL) + slack;
        self.step_dist.windows(2).position(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b > a + lim,
            _ => false,
        })
    }
}

/// `N` iterates of `f` from `x0`.
pub fn iterate<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    x0: &CVec<T>,
    n: usize,
) -> Result<OrbitTrace<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let domain = f.domain();
    domain.require_inside(x0, "x0")?;
    if n < 1 {
        return Err(KobaError::InvalidInput("N must be at least 1".into()));
    }
    let scale = domain.scale();
    let absorbed = lit::<T>(EPS_BOUNDARY) * scale;
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0.clone());
    for step in 1..=n {
        let z = f.apply(&points[step - 1]);
        // Numerically on the boundary is absorption, not escape.
        if !z.is_finite() || domain.boundary_value(&z) > absorbed {
            return Err(KobaError::EscapedDomain { step });
        }
        points.push(z);
    }
    let resolve = lit::<T>(RESOLVE_MARGIN) * scale;
    let step_dist = points
        .par_windows(2)
        .map(|w| {
            if domain.margin(&w[0]) < resolve || domain.margin(&w[1]) < resolve {
                Ok(None)
            } else {
                oracle.quick_upper(&w[0], &w[1]).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let norms = points.iter().map(|p| p.norm()).collect();
    Ok(OrbitTrace {
        points,
        step_dist,
        norms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "type", rename_all = "snake_case")]
pub enum Verdict<T: Real> {
    InteriorAttractor { point: CVec<T> },
    BoundaryPoint { point: IdealPoint<T> },
    DivergesToEnd { end: IdealPoint<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OrbitClassification<T: Real> {
    pub verdict: Verdict<T>,
    /// Euclidean diameter of the last quarter of the orbit.
    pub tail_diameter: T,
    /// Least-squares slope of the norms over the last half.
    pub norm_growth: T,
    pub min_tail_margin: T,
}

fn diameter<T: Real>(pts: &[CVec<T>]) -> T {
    let mut d = T::zero();
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            d = d.max(p.dist(q));
        }
    }
    d
}

fn slope<T: Real>(ys: &[T]) -> T {
    let n = from_usize::<T>(ys.len());
    let mx = (n - T::one()) / lit(2.0);
    let my = ys.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, &y) in ys.iter().enumerate() {
        let dx = from_usize::<T>(i) - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Centroid over the window `z_{N-l+1..=N}` whose length `l` minimizes the
/// return distance `|z_N - z_{N-l}|`; for a periodic orbit this is a full
/// period, for a convergent one the last point.
fn recurrence_centroid<T: Real>(tail: &[CVec<T>]) -> CVec<T> {
    let last = tail.len() - 1;
    let mut best = (T::infinity(), 1);
    for l in 1..=tail.len() / 2 {
        let r = tail[last].dist(&tail[last - l]);
        if r < best.0 - lit(1e-12) {
            best = (r, l);
        }
    }
    let window = &tail[tail.len() - best.1..];
    let mut c = CVec::zeros(tail[0].dim());
    for p in window {
        c += p;
    }
    c.scale(T::one() / from_usize(window.len()))
}

/// Denjoy–Wolff trichotomy read off an orbit tail.
pub fn classify_orbit<T: Real>(
    domain: &crate::domain::ConvexDomain<T>,
    trace: &OrbitTrace<T>,
    tol: T,
) -> Result<OrbitClassification<T>> {
    let n = trace.len();
    if n < MIN_TRACE {
        return Err(KobaError::InvalidInput(format!(
            "trace needs at least {MIN_TRACE} points"
        )));
    }
    let scale = domain.scale();
    let half = &trace.points[n / 2..];
    let quarter = &trace.points[3 * n / 4..];
    let tail_diameter = diameter(quarter);
    let norm_growth = slope(&trace.norms[n / 2..]);
    let margins: Vec<T> = half.iter().map(|p| domain.margin(p)).collect();
    let min_tail_margin = margins.iter().copied().fold(T::infinity(), T::min);
    let report = |verdict| OrbitClassification {
        verdict,
        tail_diameter,
        norm_growth,
        min_tail_margin,
    };

    let last = &trace.points[n - 1];
    let threshold = lit::<T>(DIVERGENCE_FACTOR) * scale;
    if trace.norms[n - 1] > threshold && norm_growth > T::zero() {
        let u = last.normalized().expect("nonzero");
        let end = end_for_direction(domain, &u)?;
        return Ok(report(Verdict::DivergesToEnd { end }));
    }

    let on_boundary = domain.boundary_value(last).abs() <= lit::<T>(EPS_BOUNDARY) * scale;
    if tail_diameter < tol * scale && on_boundary {
        return Ok(report(Verdict::BoundaryPoint {
            point: IdealPoint::finite(last.clone()),
        }));
    }

    // Compact: margins bounded away from zero and not trending down.
    let (third, fourth) = margins.split_at(margins.len() / 2);
    let m3 = third.iter().copied().fold(T::infinity(), T::min);
    let m4 = fourth.iter().copied().fold(T::infinity(), T::min);
    let floor = lit::<T>(10.0 * EPS_BOUNDARY) * scale;
    if m4 > floor && m4 >= lit::<T>(0.9) * m3 && norm_growth <= tol * scale {
        return Ok(report(Verdict::InteriorAttractor {
            point: recurrence_centroid(half),
        }));
    }
    Err(KobaError::Undecided("increase N".into()))
}

/// Whether two verdicts name the same attractor, boundary point or end.
pub fn same_verdict<T: Real>(a: &Verdict<T>, b: &Verdict<T>, tol: T) -> bool {
    match (a, b) {
        (Verdict::InteriorAttractor { point: p }, Verdict::InteriorAttractor { point: q }) => {
            p.dist(q) <= tol
        }
        (
            Verdict::BoundaryPoint {
                point: IdealPoint::Finite { point: p },
            },
            Verdict::BoundaryPoint {
                point: IdealPoint::Finite { point: q },
            },
        ) => p.dist(q) <= tol,
        (
            Verdict::DivergesToEnd {
                end: IdealPoint::End { id: i, .. },
            },
            Verdict::DivergesToEnd {
                end: IdealPoint::End { id: j, .. },
            },
        ) => i == j,
        _ => false,
    }
}

/// Classifies the orbits of several starts and requires agreement.
pub fn denjoy_wolff<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    starts: &[CVec<T>],
    n: usize,
    tol: T,
    agree_tol: T,
) -> Result<OrbitClassification<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if starts.len() < 3 {
        return Err(KobaError::InvalidInput("need at least 3 starts".into()));
    }
    for (i, s) in starts.iter().enumerate() {
        if starts[..i].contains(s) {
            return Err(KobaError::InvalidInput("starts must be distinct".into()));
        }
    }
    let verdicts = starts
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            iterate(oracle, f, x0, n)
                .and_then(|t| classify_orbit(f.domain(), &t, tol))
                .map_err(|e| e.context(format!("start {k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = f.domain().scale();
    for (k, v) in verdicts.iter().enumerate().skip(1) {
        if !same_verdict(&verdicts[0].verdict, &v.verdict, agree_tol * scale) {
            return Err(KobaError::StartDependence(format!(
                "start 0 gives {:?}, start {k} gives {:?}",
                verdicts[0].verdict, v.verdict
            )));
        }
    }
    Ok(verdicts.into_iter().next().expect("three starts"))
}
