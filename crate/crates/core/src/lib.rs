//! Kobayashi geometry of convex domains in `C^d`: two-sided metric bounds,
//! polyline geodesics, Gromov hyperbolicity estimates, ends of unbounded
//! domains, holomorphic dynamics, and the boundary correspondence.
//!
//! Everything is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod boundary;
pub mod cvec;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod hyperbolicity;
pub mod metric;
pub mod scalar;

pub use error::{KobaError, Result};
pub use scalar::Real;

pub type CVector = cvec::CVec<f64>;
pub type Domain = domain::ConvexDomain<f64>;
pub type DomainSpec = domain::DomainSpec<f64>;
pub type Bound = metric::MetricBound<f64>;
pub type Path = metric::PolylinePath<f64>;
pub type Estimate = metric::DistanceEstimate<f64>;
pub type Ideal = boundary::IdealPoint<f64>;
pub type Map = dynamics::MapSpec<f64>;
