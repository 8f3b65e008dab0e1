use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::{ConvexDomain, DomainKind};
use crate::error::{KobaError, Result};
use crate::scalar::{from_usize, lit, Real};

use super::closed_form::{exact_unchecked, AffineEmbedding};
use super::config::{Integrand, MetricConfig};

/// Two-sided bound on a Kobayashi quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MetricBound<T: Real> {
    pub lower: T,
    pub upper: T,
}

impl<T: Real> MetricBound<T> {
    pub fn new(lower: T, upper: T) -> Self {
        MetricBound { lower, upper }
    }

    pub fn zero() -> Self {
        MetricBound::new(T::zero(), T::zero())
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    /// Whether `x` lies in `[lower - slack, upper + slack]`.
    pub fn contains(&self, x: T, slack: T) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }
}

impl<T: Real> std::ops::Add for MetricBound<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        MetricBound::new(self.lower + o.lower, self.upper + o.upper)
    }
}

// Brackets shrink to 2h * 0.618^24 < 1e-6 rad; the exit time is flat to
// second order at its minimum, so the residual error is ~1e-12 relative.
const GOLDEN_ITERS: usize = 24;

/// `delta_D(z; w)` with the default phase grid.
pub fn delta<T: Real>(domain: &ConvexDomain<T>, z: &CVec<T>, w: &CVec<T>) -> Result<T> {
    delta_with(domain, z, w, MetricConfig::default().n_theta)
}

/// Euclidean distance from `z` to the boundary inside the complex line
/// `z + C w`; `+inf` when no probed direction of that line ever exits.
pub fn delta_with<T: Real>(
    domain: &ConvexDomain<T>,
    z: &CVec<T>,
    w: &CVec<T>,
    n_theta: usize,
) -> Result<T> {
    w.check_dim(domain.dim())?;
    let u = w
        .normalized()
        .ok_or_else(|| KobaError::InvalidInput("w must be nonzero".into()))?;
    domain.require_inside(z, "z")?;
    Ok(delta_unit(domain, z, &u, &phase_grid(n_theta)))
}

/// Unit phases `e^{2 pi i k / n}`.
pub(crate) fn phase_grid<T: Real>(n: usize) -> Vec<Complex<T>> {
    let h = T::TAU() / from_usize(n);
    (0..n)
        .map(|k| {
            let (s, c) = (h * from_usize(k)).sin_cos();
            Complex::new(c, s)
        })
        .collect()
}

/// Minimum exit time over phases. Half-spaces and pure norm balls are
/// minimized in closed form; remaining cones get the phase grid followed by
/// golden-section refinement.
pub(crate) fn delta_unit<T: Real>(
    domain: &ConvexDomain<T>,
    z: &CVec<T>,
    u: &CVec<T>,
    grid: &[Complex<T>],
) -> T {
    let slice = domain.line_slice(z, u);
    let closed = slice.closed_min();
    if !slice.needs_search() {
        return closed;
    }
    let exit = |theta: T| {
        let (s, c) = theta.sin_cos();
        slice
            .search_exit(Complex::new(c, s))
            .unwrap_or(T::infinity())
    };
    let h = T::TAU() / from_usize(grid.len());
    let (mut k_best, mut best) = (0usize, T::infinity());
    for (k, e) in grid.iter().enumerate() {
        let t = slice.search_exit(*e).unwrap_or(T::infinity());
        if t < best {
            best = t;
            k_best = k;
        }
    }
    if !best.is_finite() {
        return closed;
    }
    let centre = h * from_usize(k_best);
    let (mut a, mut b) = (centre - h, centre + h);
    let g = lit::<T>(0.5 * (5f64.sqrt() - 1.0));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (exit(c), exit(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = exit(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = exit(d);
        }
    }
    closed.min(best).min(fc).min(fd)
}

/// The sandwich `(||v|| / (2 delta), ||v|| / delta)`.
pub fn infinitesimal_bounds<T: Real>(
    domain: &ConvexDomain<T>,
    z: &CVec<T>,
    v: &CVec<T>,
) -> Result<MetricBound<T>> {
    let d = delta(domain, z, v)?;
    if !d.is_finite() {
        return Err(KobaError::DegenerateMetric);
    }
    let n = v.norm();
    Ok(MetricBound::new(n / (lit::<T>(2.0) * d), n / d))
}

/// A Finsler structure the path solver can minimize against.
pub trait Finsler<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// Strict membership with the solver's margin.
    fn inside(&self, z: &CVec<T>) -> bool;

    /// Integrand the solver minimizes: an upper bound for `k(z; v)`.
    fn upper(&self, z: &CVec<T>, v: &CVec<T>) -> T;

    /// Lower integrand paired with [`Finsler::upper`].
    fn lower(&self, z: &CVec<T>, v: &CVec<T>) -> T;

    /// Whether `upper` is the Kobayashi metric itself.
    fn is_exact(&self) -> bool;

    /// An independent lower bound on the distance, if available.
    fn distance_lower(&self, _x: &CVec<T>, _y: &CVec<T>) -> Option<T> {
        None
    }

    /// Characteristic length of the underlying domain.
    fn scale(&self) -> T;
}

/// The Kobayashi structure of a convex domain, as configured.
#[derive(Clone, Debug)]
pub struct DomainMetric<'a, T: Real> {
    domain: &'a ConvexDomain<T>,
    exact: Option<DomainKind>,
    grid: Vec<Complex<T>>,
    embedding: Option<AffineEmbedding<T>>,
}

impl<'a, T: Real> DomainMetric<'a, T> {
    pub fn new(domain: &'a ConvexDomain<T>, cfg: &MetricConfig) -> Result<Self> {
        cfg.validate()?;
        let closed = domain.kind().has_closed_form();
        let exact = match cfg.integrand {
            Integrand::Auto => closed,
            Integrand::Sandwich => false,
            Integrand::Exact if closed => true,
            Integrand::Exact => {
                return Err(KobaError::Unsupported(format!(
                    "exact integrand for {:?}",
                    domain.kind()
                )))
            }
        };
        Ok(DomainMetric {
            domain,
            exact: exact.then_some(domain.kind()),
            grid: phase_grid(cfg.n_theta),
            embedding: AffineEmbedding::from_choice(domain, &cfg.embedding)?,
        })
    }

    pub fn domain(&self) -> &'a ConvexDomain<T> {
        self.domain
    }

    fn delta(&self, z: &CVec<T>, v: &CVec<T>) -> Option<(T, T)> {
        let n = v.norm();
        if n == T::zero() {
            return None;
        }
        Some((
            n,
            delta_unit(self.domain, z, &v.scale(T::one() / n), &self.grid),
        ))
    }
}

impl<T: Real> Finsler<T> for DomainMetric<'_, T> {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn inside(&self, z: &CVec<T>) -> bool {
        self.domain.contains_unchecked(z)
    }

    // An infinite delta means the line through z lies in the domain, along
    // which k vanishes, so both integrands are zero there.
    fn upper(&self, z: &CVec<T>, v: &CVec<T>) -> T {
        if let Some(kind) = self.exact {
            return exact_unchecked(kind, z, v);
        }
        match self.delta(z, v) {
            Some((n, d)) => n / d,
            None => T::zero(),
        }
    }

    fn lower(&self, z: &CVec<T>, v: &CVec<T>) -> T {
        if let Some(kind) = self.exact {
            return exact_unchecked(kind, z, v);
        }
        match self.delta(z, v) {
            Some((n, d)) => n / (lit::<T>(2.0) * d),
            None => T::zero(),
        }
    }

    fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn distance_lower(&self, x: &CVec<T>, y: &CVec<T>) -> Option<T> {
        self.embedding.as_ref()?.lower_bound(x, y)
    }

    fn scale(&self) -> T {
        self.domain.scale()
    }
}
