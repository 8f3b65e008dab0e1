use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

use super::config::{Integrand, MetricConfig};
use super::finsler::{DomainMetric, Finsler, MetricBound};
use super::quadrature::GaussLegendre;

/// A polygonal curve in the domain with per-segment length bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PolylinePath<T: Real> {
    pub nodes: Vec<CVec<T>>,
    pub per_segment_bounds: Vec<MetricBound<T>>,
}

impl<T: Real> PolylinePath<T> {
    /// Validates the node list; segment bounds start empty.
    pub fn new(nodes: Vec<CVec<T>>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(KobaError::InvalidInput(
                "a path needs at least 2 nodes".into(),
            ));
        }
        let d = nodes[0].dim();
        for n in &nodes {
            n.check_dim(d)?;
        }
        if let Some(i) = nodes.windows(2).position(|w| w[0] == w[1]) {
            return Err(KobaError::InvalidInput(format!(
                "consecutive nodes {i} and {} coincide",
                i + 1
            )));
        }
        Ok(PolylinePath {
            nodes,
            per_segment_bounds: Vec::new(),
        })
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn start(&self) -> &CVec<T> {
        &self.nodes[0]
    }

    pub fn end(&self) -> &CVec<T> {
        self.nodes.last().expect("non-empty")
    }

    /// Sum of the segment bounds.
    pub fn length(&self) -> MetricBound<T> {
        self.per_segment_bounds
            .iter()
            .fold(MetricBound::zero(), |acc, b| acc + *b)
    }

    pub fn reversed(&self) -> Self {
        let mut p = self.clone();
        p.nodes.reverse();
        p.per_segment_bounds.reverse();
        p
    }
}

/// Sandwich bounds on the length of `path`, by `quad`-point Gauss–Legendre
/// on every segment.
pub fn path_length<T: Real>(
    domain: &ConvexDomain<T>,
    path: &PolylinePath<T>,
    quad: usize,
) -> Result<MetricBound<T>> {
    if quad < 2 {
        return Err(KobaError::InvalidInput("quad must be at least 2".into()));
    }
    let cfg = MetricConfig {
        quad,
        integrand: Integrand::Sandwich,
        ..MetricConfig::default()
    };
    let metric = DomainMetric::new(domain, &cfg)?;
    for n in &path.nodes {
        n.check_dim(domain.dim())?;
    }
    let gl = GaussLegendre::new(quad);
    let mut total = MetricBound::zero();
    for (i, w) in path.nodes.windows(2).enumerate() {
        total = total
            + segment_bound(&metric, &w[0], &w[1], &gl)
                .ok_or(KobaError::PathExitsDomain { segment: i })?;
    }
    Ok(total)
}

/// Upper length of `[a, b]`; `None` if a quadrature point leaves the domain.
pub(crate) fn segment_upper<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    a: &CVec<T>,
    b: &CVec<T>,
    gl: &GaussLegendre<T>,
) -> Option<T> {
    partial_upper(m, a, b, T::zero(), T::one(), gl)
}

pub(crate) fn segment_bound<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    a: &CVec<T>,
    b: &CVec<T>,
    gl: &GaussLegendre<T>,
) -> Option<MetricBound<T>> {
    let up = segment_upper(m, a, b, gl)?;
    if m.is_exact() {
        return Some(MetricBound::new(up, up));
    }
    let v = b - a;
    let f = |s: T| {
        let z = a.add_scaled(s, &v);
        m.inside(&z).then(|| m.lower(&z, &v))
    };
    let lo = integrate(&f, T::zero(), T::one(), gl)?;
    Some(MetricBound::new(lo.min(up), up))
}

/// Deep enough to resolve an endpoint `2^-60` of a segment from the boundary.
const ADAPT_DEPTH: usize = 60;

/// Largest spread of integrand samples over which the fixed rule is trusted.
/// The integrands are reciprocals of concave boundary distances, so a small
/// spread keeps their poles far from the interval.
const SMOOTH_SPREAD: f64 = 4.0;

/// Adaptive upper length of the sub-segment `a + [s0, s1] (b - a)`.
pub(crate) fn partial_upper<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    a: &CVec<T>,
    b: &CVec<T>,
    s0: T,
    s1: T,
    gl: &GaussLegendre<T>,
) -> Option<T> {
    let v = b - a;
    let f = |s: T| {
        let z = a.add_scaled(s, &v);
        m.inside(&z).then(|| m.upper(&z, &v))
    };
    integrate(&f, s0, s1, gl)
}

/// Fixed rule when the integrand is flat on `[s0, s1]`, adaptive otherwise.
fn integrate<T: Real, F: Fn(T) -> Option<T>>(
    f: &F,
    s0: T,
    s1: T,
    gl: &GaussLegendre<T>,
) -> Option<T> {
    let (mut lo, mut hi) = (f(s0)?, f(s1)?);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let whole = gl.integrate(s0, s1, |s| {
        let y = f(s)?;
        lo = lo.min(y);
        hi = hi.max(y);
        Some(y)
    })?;
    if hi <= lit::<T>(SMOOTH_SPREAD) * lo {
        return Some(whole);
    }
    // Pieces below this share of the total are accepted, so noise in the
    // integrand cannot drive the recursion to full depth everywhere.
    let floor = lit::<T>(1e-13) * whole.abs();
    adapt(f, s0, s1, whole, gl, 0, floor)
}

fn adapt<T: Real, F: Fn(T) -> Option<T>>(
    f: &F,
    a: T,
    b: T,
    whole: T,
    gl: &GaussLegendre<T>,
    depth: usize,
    floor: T,
) -> Option<T> {
    let mid = (a + b) / lit(2.0);
    let l = gl.integrate(a, mid, f)?;
    let r = gl.integrate(mid, b, f)?;
    let both = l + r;
    let tol = (lit::<T>(1e-12).max(T::epsilon() * lit(64.0)) * both.abs())
        .max(floor)
        .max(T::min_positive_value());
    if (both - whole).abs() <= tol || depth >= ADAPT_DEPTH || !(mid > a && mid < b) {
        return Some(both);
    }
    Some(adapt(f, a, mid, l, gl, depth + 1, floor)? + adapt(f, mid, b, r, gl, depth + 1, floor)?)
}

/// Parameter `s` with `partial_upper(0, s) = target`, by Newton's method
/// (the integrand is the derivative) safeguarded with bisection.
pub(crate) fn split_at_length<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    a: &CVec<T>,
    b: &CVec<T>,
    target: T,
    gl: &GaussLegendre<T>,
) -> Option<T> {
    let total = partial_upper(m, a, b, T::zero(), T::one(), gl)?;
    if !(total > T::zero()) {
        return Some(lit(0.5));
    }
    if target >= total {
        return Some(T::one());
    }
    let v = b - a;
    let tol = lit::<T>(1e-12).max(T::epsilon() * lit(16.0)) * total;
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut s = (target / total).max(T::zero()).min(T::one());
    for _ in 0..100 {
        let f = partial_upper(m, a, b, T::zero(), s, gl)? - target;
        if f.abs() <= tol {
            break;
        }
        if f < T::zero() {
            lo = s;
        } else {
            hi = s;
        }
        let z = a.add_scaled(s, &v);
        let slope = if m.inside(&z) {
            m.upper(&z, &v)
        } else {
            T::zero()
        };
        let mut next = if slope > T::zero() { s - f / slope } else { lo };
        if !(next > lo && next < hi) {
            next = (lo + hi) / lit(2.0);
        }
        if hi - lo <= T::epsilon() * lit(4.0) {
            break;
        }
        s = next;
    }
    Some(s)
}

/// Nodes placed along `nodes` at uniform cumulative upper length.
pub(crate) fn resample_uniform<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    nodes: &[CVec<T>],
    segments: usize,
    gl: &GaussLegendre<T>,
) -> Option<Vec<CVec<T>>> {
    let lens: Vec<T> = nodes
        .windows(2)
        .map(|w| partial_upper(m, &w[0], &w[1], T::zero(), T::one(), gl))
        .collect::<Option<_>>()?;
    let total = lens.iter().fold(T::zero(), |a, b| a + *b);
    let mut out = vec![nodes[0].clone()];
    let (mut seg, mut before) = (0usize, T::zero());
    for j in 1..segments {
        let target = total * lit::<T>(j as f64 / segments as f64);
        while seg + 1 < lens.len() && before + lens[seg] < target {
            before += lens[seg];
            seg += 1;
        }
        let s = split_at_length(m, &nodes[seg], &nodes[seg + 1], target - before, gl)?;
        let p = nodes[seg].lerp(&nodes[seg + 1], s.min(T::one()));
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    let last = nodes.last().expect("non-empty").clone();
    if out.last() != Some(&last) {
        out.push(last);
    }
    Some(out)
}

/// Measures every segment with the solver's rule.
pub(crate) fn measure<T: Real, M: Finsler<T> + ?Sized>(
    m: &M,
    nodes: Vec<CVec<T>>,
    gl: &GaussLegendre<T>,
) -> Result<PolylinePath<T>> {
    let mut p = PolylinePath::new(nodes)?;
    p.per_segment_bounds = p
        .nodes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            segment_bound(m, &w[0], &w[1], gl).ok_or(KobaError::PathExitsDomain { segment: i })
        })
        .collect::<Result<_>>()?;
    Ok(p)
}
