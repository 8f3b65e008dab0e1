//! Gromov equivalence of rays and the boundary correspondence check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::domain::ConvexDomain;
use crate::error::{KobaError, Result};
use crate::hyperbolicity::require_c_proper;
use crate::metric::{
    oracle_for, ray, DistanceOracle, MetricConfig, PolylinePath, DISCRETIZATION_SLACK,
};
use crate::scalar::{lit, Real};

use super::limit::{euclidean_limit, RayLimit};
use super::{same_ideal_point, IdealPoint, EPS_BOUNDARY};

/// Growth rate of `s(T)` above which two rays are inequivalent.
pub const C_GROW: f64 = 0.5;

/// Agreement of a ray limit with its target, relative to the domain scale.
const LIMIT_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    Inequivalent,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProfileRow<T: Real> {
    pub horizon: T,
    /// Upper distance between the two rays at arclength `horizon`.
    pub s: T,
    pub slack: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GromovReport<T: Real> {
    pub verdict: Equivalence,
    pub profile: Vec<ProfileRow<T>>,
}

/// The point at upper arclength `t` along `path`, linear inside a segment.
pub fn point_at_length<T: Real>(path: &PolylinePath<T>, t: T) -> Result<CVec<T>> {
    if path.per_segment_bounds.len() != path.segments() {
        return Err(KobaError::InvalidInput(
            "path has no segment lengths".into(),
        ));
    }
    if !(t >= T::zero()) {
        return Err(KobaError::InvalidInput(format!(
            "arclength {t} is negative"
        )));
    }
    let mut acc = T::zero();
    for (w, b) in path.nodes.windows(2).zip(&path.per_segment_bounds) {
        if acc + b.upper >= t {
            let s = if b.upper > T::zero() {
                (t - acc) / b.upper
            } else {
                T::zero()
            };
            return Ok(w[0].lerp(&w[1], s));
        }
        acc += b.upper;
    }
    // A measured ray may fall short of its nominal length by the
    // discretization error.
    if t <= acc * (T::one() + lit(DISCRETIZATION_SLACK)) {
        return Ok(path.end().clone());
    }
    Err(KobaError::InvalidInput(format!(
        "arclength {t} exceeds the path length {acc}"
    )))
}

/// Compares two rays through `s(T) = d(ray1(T), ray2(T))` on the horizons.
///
/// Equivalent when the last three values agree within twice their slack,
/// inequivalent when all three exceed `C_GROW * T`, otherwise undecided.
/// The slack adds the oracle's allowance and the arclength error of both
/// polylines.
pub fn gromov_equivalent<T, O>(
    oracle: &O,
    ray1: &PolylinePath<T>,
    ray2: &PolylinePath<T>,
    horizons: &[T],
) -> Result<GromovReport<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if horizons.len() < 3 {
        return Err(KobaError::InvalidInput("need at least 3 horizons".into()));
    }
    if horizons[0] <= T::zero() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(KobaError::InvalidInput(
            "horizons must be positive and increasing".into(),
        ));
    }
    for (k, r) in [ray1, ray2].into_iter().enumerate() {
        if r.nodes
            .iter()
            .any(|z| z.dim() != oracle.dim() || !oracle.contains(z))
        {
            return Err(KobaError::InvalidInput(format!(
                "ray {} does not lie in this domain",
                k + 1
            )));
        }
    }
    let profile = horizons
        .par_iter()
        .map(|&t| {
            let p = point_at_length(ray1, t)?;
            let q = point_at_length(ray2, t)?;
            let position = lit::<T>(2.0 * DISCRETIZATION_SLACK) * t;
            if p == q {
                return Ok(ProfileRow {
                    horizon: t,
                    s: T::zero(),
                    slack: position,
                });
            }
            let b = oracle.distance(&p, &q)?;
            Ok(ProfileRow {
                horizon: t,
                s: b.upper,
                slack: oracle.slack(&b) + position,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = &profile[profile.len() - 3..];
    let grows = tail.iter().all(|r| r.s > lit::<T>(C_GROW) * r.horizon);
    let lo = tail.iter().map(|r| r.s).fold(T::infinity(), T::min);
    let hi = tail.iter().map(|r| r.s).fold(T::neg_infinity(), T::max);
    let slack = tail.iter().map(|r| r.slack).fold(T::zero(), T::max);
    let verdict = if grows {
        Equivalence::Inequivalent
    } else if hi - lo <= lit::<T>(2.0) * slack {
        Equivalence::Equivalent
    } else {
        Equivalence::Undecided
    };
    Ok(GromovReport { verdict, profile })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CorrespondenceConfig<T: Real> {
    /// Arclengths at which rays are compared; the last is the ray length.
    pub horizons: Vec<T>,
    /// Offset of the second start, as a fraction of the room around `x0`.
    pub perturbation: T,
    pub metric: MetricConfig,
}

impl<T: Real> Default for CorrespondenceConfig<T> {
    fn default() -> Self {
        CorrespondenceConfig {
            horizons: [2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|&h| lit(h)).collect(),
            perturbation: lit(0.25),
            metric: MetricConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PairCheck<T: Real> {
    /// Indices into the ray list.
    pub rays: (usize, usize),
    pub expected: Equivalence,
    pub report: Option<GromovReport<T>>,
    pub ok: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LimitCheck<T: Real> {
    pub target: usize,
    pub limits: Vec<Option<RayLimit<T>>>,
    pub ok: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CorrespondenceReport<T: Real> {
    pub targets: Vec<IdealPoint<T>>,
    pub starts: Vec<CVec<T>>,
    pub horizons: Vec<T>,
    /// Rays `2k` and `2k + 1` aim at target `k` from the two starts.
    pub rays: Vec<PolylinePath<T>>,
    pub within: Vec<PairCheck<T>>,
    pub across: Vec<PairCheck<T>>,
    pub limits: Vec<LimitCheck<T>>,
    pub assertions: usize,
    pub passed_assertions: usize,
    pub passed: bool,
    /// Set when some sub-test could not decide at the largest horizon.
    pub inconclusive: Option<String>,
}

/// Builds two rays per target and checks that same-target rays are
/// equivalent, different-target rays are not, and every ray lands on its
/// target.
pub fn extension_correspondence_test<T: Real>(
    domain: &ConvexDomain<T>,
    targets: &[IdealPoint<T>],
    x0: &CVec<T>,
    cfg: &CorrespondenceConfig<T>,
) -> Result<CorrespondenceReport<T>> {
    domain.require_inside(x0, "x0")?;
    if targets.is_empty() {
        return Err(KobaError::InvalidInput("no targets".into()));
    }
    let scale = domain.scale();
    let tol = lit::<T>(LIMIT_TOL) * scale;
    for (k, t) in targets.iter().enumerate() {
        t.validate(domain)
            .map_err(|e| e.context(format!("target {k}")))?;
        if targets[..k]
            .iter()
            .any(|s| same_ideal_point(s, t, lit::<T>(EPS_BOUNDARY) * scale))
        {
            return Err(KobaError::InvalidInput(format!(
                "target {k} repeats an earlier target"
            )));
        }
    }
    if !(cfg.perturbation > T::zero() && cfg.perturbation < T::one()) {
        return Err(KobaError::InvalidInput(
            "perturbation must lie in (0, 1)".into(),
        ));
    }
    require_c_proper(domain)?;
    let oracle = oracle_for(domain, &cfg.metric)?;
    let horizons = cfg.horizons.clone();
    let length = *horizons
        .last()
        .ok_or_else(|| KobaError::InvalidInput("no horizons".into()))?;

    let starts = vec![x0.clone(), perturbed_start(domain, x0, cfg.perturbation)?];
    let rays = (0..2 * targets.len())
        .into_par_iter()
        .map(|i| {
            ray(domain, &starts[i % 2], &targets[i / 2], length, &cfg.metric)
                .map_err(|e| e.context(format!("ray {i}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut inconclusive: Vec<String> = Vec::new();
    let mut pair = |a: usize, b: usize, expected: Equivalence| -> Result<PairCheck<T>> {
        let report = gromov_equivalent(oracle.as_ref(), &rays[a], &rays[b], &horizons)?;
        let (ok, note) = match report.verdict {
            Equivalence::Undecided => {
                let msg = format!("rays {a} and {b} undecided at horizon {length}");
                inconclusive.push(msg.clone());
                (false, Some(msg))
            }
            v => (v == expected, None),
        };
        Ok(PairCheck {
            rays: (a, b),
            expected,
            report: Some(report),
            ok,
            note,
        })
    };
    let within = (0..targets.len())
        .map(|k| pair(2 * k, 2 * k + 1, Equivalence::Equivalent))
        .collect::<Result<Vec<_>>>()?;
    let mut across = Vec::new();
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            across.push(pair(2 * i, 2 * j, Equivalence::Inequivalent)?);
        }
    }

    let found = rays
        .par_iter()
        .map(|r| euclidean_limit(domain, r))
        .collect::<Vec<_>>();
    let mut limits = Vec::with_capacity(targets.len());
    for (k, target) in targets.iter().enumerate() {
        let mut ok = true;
        let mut note = None;
        let mut got = Vec::new();
        for r in [2 * k, 2 * k + 1] {
            match &found[r] {
                Ok(lim) => {
                    ok &= lim
                        .ideal()
                        .is_some_and(|p| same_ideal_point(p, target, tol));
                    got.push(Some(lim.clone()));
                }
                Err(e) if matches!(e.root(), KobaError::Undecided(_)) => {
                    let msg = format!("ray {r} limit undecided at horizon {length}: {e}");
                    inconclusive.push(msg.clone());
                    note = Some(msg);
                    ok = false;
                    got.push(None);
                }
                Err(e) => return Err(e.clone().context(format!("ray {r} limit"))),
            }
        }
        limits.push(LimitCheck {
            target: k,
            limits: got,
            ok,
            note,
        });
    }

    let checks = within
        .iter()
        .chain(&across)
        .map(|c| c.ok)
        .chain(limits.iter().map(|c| c.ok));
    let (assertions, passed_assertions) =
        checks.fold((0, 0), |(n, p), ok| (n + 1, p + usize::from(ok)));
    Ok(CorrespondenceReport {
        targets: targets.to_vec(),
        starts,
        horizons,
        rays,
        within,
        across,
        limits,
        assertions,
        passed_assertions,
        passed: passed_assertions == assertions,
        inconclusive: (!inconclusive.is_empty()).then(|| inconclusive.join("; ")),
    })
}

/// `x0` moved a fraction of the way to the boundary along a fixed
/// direction mixing the first and last coordinates.
fn perturbed_start<T: Real>(domain: &ConvexDomain<T>, x0: &CVec<T>, frac: T) -> Result<CVec<T>> {
    let d = domain.dim();
    let mut u = CVec::zeros(d);
    u[0].im = T::one();
    u[d - 1].re += T::one();
    let u = u.normalized().expect("nonzero");
    let room = [domain.exit_time(x0, &u), domain.exit_time(x0, &-&u)]
        .into_iter()
        .flatten()
        .fold(domain.scale(), T::min);
    let z = x0.add_scaled(frac * room, &u);
    domain.require_inside(&z, "perturbed start")?;
    Ok(z)
}
