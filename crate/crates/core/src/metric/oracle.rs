use crate::cvec::CVec;
use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

use super::closed_form::closed_form_distance;
use super::config::MetricConfig;
use super::finsler::{DomainMetric, Finsler, MetricBound};
use super::path::PolylinePath;
use super::solver::PathSolver;

/// Relative allowance for polyline discretization when the integrand is
/// the exact metric and the interval itself carries no width.
pub const DISCRETIZATION_SLACK: f64 = 1e-3;

/// Anything that answers Kobayashi distance queries on a fixed domain.
pub trait DistanceOracle<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn contains(&self, z: &CVec<T>) -> bool;

    fn distance(&self, x: &CVec<T>, y: &CVec<T>) -> Result<MetricBound<T>>;

    /// Cheaper upper estimate, for dense node clouds.
    fn quick_upper(&self, x: &CVec<T>, y: &CVec<T>) -> Result<T> {
        Ok(self.distance(x, y)?.upper)
    }

    /// Tolerance that audits should grant a bound produced by this oracle.
    fn slack(&self, b: &MetricBound<T>) -> T;

    fn geodesic(&self, x: &CVec<T>, y: &CVec<T>) -> Result<PolylinePath<T>>;
}

impl<T: Real, M: Finsler<T>> DistanceOracle<T> for PathSolver<T, M> {
    fn dim(&self) -> usize {
        self.metric().dim()
    }

    fn contains(&self, z: &CVec<T>) -> bool {
        z.dim() == self.dim() && self.metric().inside(z)
    }

    fn distance(&self, x: &CVec<T>, y: &CVec<T>) -> Result<MetricBound<T>> {
        Ok(PathSolver::distance(self, x, y)?.bound)
    }

    fn quick_upper(&self, x: &CVec<T>, y: &CVec<T>) -> Result<T> {
        self.straight_upper(x, y)
    }

    fn slack(&self, b: &MetricBound<T>) -> T {
        if self.metric().is_exact() {
            lit::<T>(DISCRETIZATION_SLACK) * b.upper + lit(1e-9)
        } else {
            b.width() + lit::<T>(DISCRETIZATION_SLACK) * b.upper + lit(1e-9)
        }
    }

    fn geodesic(&self, x: &CVec<T>, y: &CVec<T>) -> Result<PolylinePath<T>> {
        PathSolver::geodesic(self, x, y)
    }
}

/// The cheapest exact-enough oracle for the domain: closed form where one
/// exists, the polyline solver otherwise.
pub fn oracle_for<'a, T: Real>(
    domain: &'a ConvexDomain<T>,
    cfg: &MetricConfig,
) -> Result<Box<dyn DistanceOracle<T> + 'a>> {
    if domain.kind().has_closed_form() {
        Ok(Box::new(ClosedFormOracle::new(domain, cfg)?))
    } else {
        Ok(Box::new(PathSolver::for_domain(domain, cfg)?))
    }
}

/// Closed-form distances for the ball, polydisc and half-plane products;
/// geodesics still come from the polyline solver.
#[derive(Clone, Debug)]
pub struct ClosedFormOracle<'a, T: Real> {
    domain: &'a ConvexDomain<T>,
    solver: PathSolver<T, DomainMetric<'a, T>>,
}

impl<'a, T: Real> ClosedFormOracle<'a, T> {
    pub fn new(domain: &'a ConvexDomain<T>, cfg: &MetricConfig) -> Result<Self> {
        if !domain.kind().has_closed_form() {
            return Err(KobaError::Unsupported(format!(
                "no closed-form distance for {:?}",
                domain.kind()
            )));
        }
        Ok(ClosedFormOracle {
            domain,
            solver: PathSolver::for_domain(domain, cfg)?,
        })
    }
}

impl<T: Real> DistanceOracle<T> for ClosedFormOracle<'_, T> {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn contains(&self, z: &CVec<T>) -> bool {
        z.dim() == self.dim() && self.domain.contains_unchecked(z)
    }

    fn distance(&self, x: &CVec<T>, y: &CVec<T>) -> Result<MetricBound<T>> {
        let k = closed_form_distance(self.domain, x, y)?;
        Ok(MetricBound::new(k, k))
    }

    fn slack(&self, b: &MetricBound<T>) -> T {
        lit::<T>(1e-10) * (T::one() + b.upper)
    }

    fn geodesic(&self, x: &CVec<T>, y: &CVec<T>) -> Result<PolylinePath<T>> {
        self.solver.geodesic(x, y)
    }
}
