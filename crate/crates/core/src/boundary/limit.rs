//! Euclidean limits of rays in the end compactification.

use serde::{Deserialize, Serialize};

use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::metric::PolylinePath;
use crate::scalar::{from_usize, lit, Real};

use super::{end_for_direction, IdealPoint, EPS_BOUNDARY};

/// A converging tail counts as converged once its geometric remainder is
/// below this fraction of the Euclidean extent of the path.
pub const CONVERGED_FRACTION: f64 = 1e-2;

/// A non-decaying tail counts as norm-divergent once the path has travelled
/// this many domain scales.
pub const END_EXTENT: f64 = 5.0;

/// Tail steps must shrink by this factor over the last quarter to count as
/// converging.
const DECAY: f64 = 0.5;

/// A tail step whose cosine with the tail chord is below minus this value
/// reverses the path.
const REVERSAL_COS: f64 = 0.5;

/// Where a path is heading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum RayLimit<T: Real> {
    Ideal(IdealPoint<T>),
    Interior,
}

impl<T: Real> RayLimit<T> {
    pub fn ideal(&self) -> Option<&IdealPoint<T>> {
        match self {
            RayLimit::Ideal(p) => Some(p),
            RayLimit::Interior => None,
        }
    }
}

/// Reads the limit of a ray or geodesic off its node tail.
///
/// Steps shrinking geometrically with a remainder that reaches the boundary
/// give a finite point. Steps that keep their size along a direction at
/// infinity give an end. A tail that reverses direction is undecided.
pub fn euclidean_limit<T: Real>(
    domain: &ConvexDomain<T>,
    path: &PolylinePath<T>,
) -> Result<RayLimit<T>> {
    let nodes = &path.nodes;
    for z in nodes {
        z.check_dim(domain.dim())?;
    }
    let m = nodes.len() - 1;
    if m < 4 {
        return Err(KobaError::InvalidInput(
            "a limit needs at least 5 path nodes".into(),
        ));
    }
    let scale = domain.scale();
    let steps: Vec<T> = nodes.windows(2).map(|w| w[0].dist(&w[1])).collect();
    let last = &nodes[m];
    let extent = last.dist(&nodes[0]);
    let q0 = 3 * m / 4;
    let s_last = steps[m - 1];
    let s_q = steps[q0];

    // Solver noise tilts tiny steps sideways, so steps are judged against
    // the chord of the whole tail.
    let chord = last - &nodes[q0];
    let turns = nodes[q0..].windows(2).any(|w| {
        let step = &w[1] - &w[0];
        step.real_dot(&chord) < -lit::<T>(REVERSAL_COS) * step.norm() * chord.norm()
    });
    if turns || chord.is_zero() {
        return Err(KobaError::Undecided("oscillating tail, extend T".into()));
    }

    if s_last < lit::<T>(DECAY) * s_q {
        let ratio = (s_last / s_q).powf(T::one() / from_usize(m - 1 - q0));
        let remainder = s_last * ratio / (T::one() - ratio);
        if remainder > lit::<T>(CONVERGED_FRACTION) * extent {
            return Ok(RayLimit::Interior);
        }
        let u = chord.normalized().expect("nonzero chord");
        let reach = lit::<T>(4.0) * remainder + lit::<T>(EPS_BOUNDARY) * scale;
        return Ok(match domain.exit_time(last, &u) {
            Some(t) if t <= reach => RayLimit::Ideal(IdealPoint::finite(last.add_scaled(t, &u))),
            _ => RayLimit::Interior,
        });
    }

    if extent >= lit::<T>(END_EXTENT) * scale && last.norm() > nodes[q0].norm() {
        let u = chord.normalized().expect("nonzero chord");
        return end_for_direction(domain, &u).map(RayLimit::Ideal);
    }
    Ok(RayLimit::Interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvec::CVec;
    use crate::metric::{geodesic, ray, MetricConfig};

    fn c1(re: f64, im: f64) -> CVec<f64> {
        CVec::scalar(re, im)
    }

    #[test]
    fn disc_ray_converges_to_its_target() {
        let d = ConvexDomain::<f64>::ball(1);
        let cfg = MetricConfig::default();
        for t in [3.0, 6.0] {
            let p = ray(
                &d,
                &c1(0.0, 0.0),
                &IdealPoint::finite(c1(1.0, 0.0)),
                t,
                &cfg,
            )
            .unwrap();
            let lim = euclidean_limit(&d, &p).unwrap();
            let Some(IdealPoint::Finite { point }) = lim.ideal() else {
                panic!("expected a finite limit, got {lim:?}");
            };
            assert!(point.dist(&c1(1.0, 0.0)) < 1e-6, "{point:?}");
        }
    }

    #[test]
    fn strip_ray_reaches_its_end() {
        let d = ConvexDomain::<f64>::standard_strip(1.0);
        let cfg = MetricConfig::default();
        let v = c1(1.0, 0.0);
        let p = ray(&d, &c1(0.0, 0.2), &IdealPoint::end(0, v.clone()), 8.0, &cfg).unwrap();
        match euclidean_limit(&d, &p).unwrap() {
            RayLimit::Ideal(IdealPoint::End { id, direction }) => {
                assert_eq!(id, 0);
                assert!(direction.dist(&v) < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let p = ray(&d, &c1(0.0, 0.0), &IdealPoint::end(1, -&v), 8.0, &cfg).unwrap();
        let lim = euclidean_limit(&d, &p).unwrap();
        assert!(
            matches!(lim, RayLimit::Ideal(IdealPoint::End { id: 1, .. })),
            "{lim:?}"
        );
    }

    #[test]
    fn short_segment_is_interior() {
        let d = ConvexDomain::<f64>::ball(1);
        let cfg = MetricConfig::default();
        let p = ray(
            &d,
            &c1(0.0, 0.0),
            &IdealPoint::finite(c1(1.0, 0.0)),
            1.0,
            &cfg,
        )
        .unwrap();
        assert_eq!(euclidean_limit(&d, &p).unwrap(), RayLimit::Interior);
        let g = geodesic(&d, &c1(-0.3, 0.0), &c1(0.2, 0.1), &cfg).unwrap();
        assert_eq!(euclidean_limit(&d, &g).unwrap(), RayLimit::Interior);
    }

    #[test]
    fn reversing_tail_is_undecided() {
        let d = ConvexDomain::<f64>::ball(1);
        let mut nodes: Vec<CVec<f64>> = (0..=27).map(|k| c1(0.02 * k as f64, 0.0)).collect();
        for k in 1..=5 {
            nodes.push(c1(0.54 - 0.02 * k as f64, 0.0));
        }
        let p = PolylinePath::new(nodes).unwrap();
        assert!(matches!(
            euclidean_limit(&d, &p),
            Err(KobaError::Undecided(_))
        ));
    }

    #[test]
    fn rejects_short_paths() {
        let d = ConvexDomain::<f64>::ball(1);
        let p = PolylinePath::new(vec![c1(0.0, 0.0), c1(0.1, 0.0)]).unwrap();
        assert!(euclidean_limit(&d, &p).is_err());
    }
}
