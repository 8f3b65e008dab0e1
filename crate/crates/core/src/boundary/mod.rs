//! Ideal points of the end compactification, Gromov equivalence of rays,
//! and the boundary-extension checks.

mod equivalence;
mod gallery;
mod limit;

pub use equivalence::{
    extension_correspondence_test, gromov_equivalent, point_at_length, CorrespondenceConfig,
    CorrespondenceReport, Equivalence, GromovReport, LimitCheck, PairCheck, ProfileRow, C_GROW,
};
pub use gallery::{
    cayley, cayley_inverse, example_gallery, lacunary, GalleryConfig, GalleryExample,
    GalleryReport, IsometrySample, LacunaryRow, PolydiscRow, SiegelLimitRow,
};
pub use limit::{euclidean_limit, RayLimit, CONVERGED_FRACTION, END_EXTENT};

use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::{
    classify_ends, recession_directions, ConvexDomain, EndClassification, RecessionConfig,
};
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

/// Finite boundary detection tolerance, relative to the domain scale.
pub const EPS_BOUNDARY: f64 = 1e-6;

/// Angle (radians) between a tail direction and a recession direction.
pub const DIRECTION_TOL: f64 = 0.05;

/// A point of the end compactification: a finite boundary point or an end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "type", rename_all = "snake_case")]
pub enum IdealPoint<T: Real> {
    Finite { point: CVec<T> },
    End { id: usize, direction: CVec<T> },
}

impl<T: Real> IdealPoint<T> {
    pub fn finite(point: CVec<T>) -> Self {
        IdealPoint::Finite { point }
    }

    pub fn end(id: usize, direction: CVec<T>) -> Self {
        IdealPoint::End { id, direction }
    }

    /// Checks the point against the domain: finite points must sit on the
    /// boundary, end directions in the recession cone.
    pub fn validate(&self, domain: &ConvexDomain<T>) -> Result<()> {
        match self {
            IdealPoint::Finite { point } => {
                point.check_dim(domain.dim())?;
                let v = domain.boundary_value(point);
                if v.abs() > lit::<T>(EPS_BOUNDARY) * domain.scale() {
                    return Err(KobaError::InvalidInput(format!(
                        "target is not on the boundary (constraint value {v})"
                    )));
                }
                Ok(())
            }
            IdealPoint::End { id, direction } => {
                direction.check_dim(domain.dim())?;
                if *id > 1 {
                    return Err(KobaError::InvalidInput("end id must be 0 or 1".into()));
                }
                let u = direction
                    .normalized()
                    .ok_or_else(|| KobaError::InvalidInput("end direction is zero".into()))?;
                if domain.recession_slope(&u) > lit::<T>(1e-9) {
                    return Err(KobaError::InvalidInput(
                        "end direction is not a direction at infinity".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Whether two ideal points agree: finite points within `tol`, ends by id.
pub fn same_ideal_point<T: Real>(a: &IdealPoint<T>, b: &IdealPoint<T>, tol: T) -> bool {
    match (a, b) {
        (IdealPoint::Finite { point: p }, IdealPoint::Finite { point: q }) => p.dist(q) <= tol,
        (IdealPoint::End { id: i, .. }, IdealPoint::End { id: j, .. }) => i == j,
        _ => false,
    }
}

/// The end that the unit vector `u` points to.
pub fn end_for_direction<T: Real>(domain: &ConvexDomain<T>, u: &CVec<T>) -> Result<IdealPoint<T>> {
    let report = recession_directions(domain, domain.witness(), &RecessionConfig::default())?;
    let cos_tol = lit::<T>(DIRECTION_TOL).cos();
    match classify_ends(domain, &report) {
        EndClassification::TwoEnds(v) => {
            let c = v.real_dot(u);
            if c >= cos_tol {
                Ok(IdealPoint::end(0, v))
            } else if -c >= cos_tol {
                Ok(IdealPoint::end(1, -&v))
            } else {
                Err(KobaError::Undecided(
                    "tail direction is not along the strip, increase N".into(),
                ))
            }
        }
        EndClassification::OneEnd => {
            let close = report.directions.iter().any(|d| d.real_dot(u) >= cos_tol)
                || domain.recession_slope(u) <= T::zero();
            if close {
                Ok(IdealPoint::end(0, u.clone()))
            } else {
                Err(KobaError::Undecided(
                    "tail direction is not a direction at infinity, increase N".into(),
                ))
            }
        }
        EndClassification::Bounded => Err(KobaError::Undecided(
            "norms diverge in a bounded domain".into(),
        )),
    }
}
