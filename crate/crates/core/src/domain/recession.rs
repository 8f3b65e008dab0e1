//! Directions at infinity, end classification and C-properness.
//!
//! A unit vector `v` is a direction at infinity when `x + t v` stays in the
//! domain for all `t >= 0`. For the constraint families used here the test is
//! exact through the recession slopes (`slope(v) <= 0` for every constraint);
//! the finite horizon is used only to verify reported directions by
//! membership.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConvexDomain, DomainKind};
use crate::cvec::{round_sig, CVec};
use crate::error::{KobaError, Result};
use crate::scalar::{lit, to_f64, tol, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecessionConfig {
    pub n_dirs: usize,
    /// Probe horizon in units of the domain scale.
    pub horizon: f64,
    pub seed: u64,
    /// Angular tolerance (radians) for merging and antipodal clustering.
    pub angular_tol: f64,
}

impl Default for RecessionConfig {
    fn default() -> Self {
        RecessionConfig {
            n_dirs: 64,
            horizon: 1e4,
            seed: 0,
            angular_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecessionReport<T: Real> {
    /// Unit directions found in the recession cone.
    pub directions: Vec<CVec<T>>,
    /// `v` when the directions cluster at `{v, -v}`.
    pub antipodal_pair: Option<CVec<T>>,
    pub is_bounded: bool,
}

impl<T: Real> RecessionReport<T> {
    /// JSON with unit vectors rounded to 12 significant digits.
    pub fn to_json(&self) -> serde_json::Value {
        let enc = |v: &CVec<T>| {
            serde_json::Value::Array(
                v.iter()
                    .map(|c| {
                        serde_json::json!([
                            round_sig(to_f64(c.re), 12),
                            round_sig(to_f64(c.im), 12)
                        ])
                    })
                    .collect(),
            )
        };
        serde_json::json!({
            "directions": self.directions.iter().map(enc).collect::<Vec<_>>(),
            "antipodal_pair": self.antipodal_pair.as_ref().map(enc),
            "is_bounded": self.is_bounded,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum EndClassification<T: Real> {
    Bounded,
    OneEnd,
    TwoEnds(CVec<T>),
}

impl<T: Real> EndClassification<T> {
    pub fn end_count(&self) -> usize {
        match self {
            EndClassification::Bounded => 0,
            EndClassification::OneEnd => 1,
            EndClassification::TwoEnds(_) => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CProperVerdict<T: Real> {
    pub c_proper: bool,
    /// False when the answer comes from the kind itself.
    pub approximate: bool,
    /// A unit `w` with `z + C w` inside the domain, when one was found.
    pub complex_line: Option<CVec<T>>,
}

/// Scrambled Halton points pushed to the unit sphere of `R^{2d}`.
pub(crate) fn direction_seeds<T: Real>(dim: usize, n: usize, seed: u64) -> Vec<CVec<T>> {
    const PRIMES: [u32; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    let rdim = 2 * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..rdim).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(n);
    let mut idx = 1u64;
    while out.len() < n {
        let u: Vec<f64> = (0..rdim)
            .map(|k| {
                let base = PRIMES[k % PRIMES.len()] as u64;
                let r = radical_inverse(idx + (k / PRIMES.len()) as u64 * 7919, base);
                (r + shift[k]).fract()
            })
            .collect();
        idx += 1;
        // Box-Muller on consecutive pairs gives an isotropic direction.
        let mut g = Vec::with_capacity(rdim);
        for pair in u.chunks_exact(2) {
            let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
            let th = 2.0 * std::f64::consts::PI * pair[1];
            g.push(r * th.cos());
            g.push(r * th.sin());
        }
        let v = CVec::<T>::from_real(&g.iter().map(|&x| lit::<T>(x)).collect::<Vec<_>>());
        if let Some(v) = v.normalized() {
            out.push(v);
        }
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    r
}

/// Compass search for `f` on the unit sphere, stopping once `f <= stop`.
pub(crate) fn descend_sphere<T: Real, F: Fn(&CVec<T>) -> T>(
    start: &CVec<T>,
    f: F,
    stop: T,
) -> (CVec<T>, T) {
    let mut u = start.clone();
    let mut fu = f(&u);
    let mut h = lit::<T>(0.5);
    let h_min = tol::<T>(1e-10);
    let two = lit::<T>(2.0);
    let n = u.real_dim();
    let mut polls = 0usize;
    while h > h_min && fu > stop && polls < 20_000 {
        let mut improved = false;
        for k in 0..n {
            for sign in [T::one(), -T::one()] {
                let mut trial = u.clone();
                *trial.real_mut(k) += sign * h;
                let Some(trial) = trial.normalized() else {
                    continue;
                };
                polls += 1;
                let ft = f(&trial);
                if ft < fu {
                    u = trial;
                    fu = ft;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= two;
        }
    }
    (u, fu)
}

/// Angle between the real lines spanned by unit vectors, ignoring sign.
fn axis_angle<T: Real>(a: &CVec<T>, b: &CVec<T>) -> T {
    let c = a.real_dot(b).abs().min(T::one());
    c.acos()
}

fn signed_angle<T: Real>(a: &CVec<T>, b: &CVec<T>) -> T {
    a.real_dot(b).max(-T::one()).min(T::one()).acos()
}

/// Sign convention: first coordinate with a nonzero real entry is positive.
fn canonical_sign<T: Real>(v: &CVec<T>) -> CVec<T> {
    let small = tol::<T>(1e-9);
    for k in 0..v.real_dim() {
        let x = v.real(k);
        if x.abs() > small {
            return if x > T::zero() { v.clone() } else { -v };
        }
    }
    v.clone()
}

pub fn recession_directions<T: Real>(
    domain: &ConvexDomain<T>,
    witness: &CVec<T>,
    cfg: &RecessionConfig,
) -> Result<RecessionReport<T>> {
    domain.require_inside(witness, "witness")?;
    if cfg.n_dirs < 2 {
        return Err(KobaError::InvalidInput("n_dirs must be at least 2".into()));
    }
    if !(cfg.horizon > 0.0) {
        return Err(KobaError::InvalidInput("horizon must be positive".into()));
    }
    let slope_tol = tol::<T>(1e-9);
    let ang_tol = lit::<T>(cfg.angular_tol);
    let horizon = lit::<T>(cfg.horizon) * domain.scale();
    let g = |u: &CVec<T>| domain.recession_slope(u);

    let seeds = direction_seeds::<T>(domain.dim(), cfg.n_dirs, cfg.seed);
    let mut candidates = Vec::new();
    let mut best_seed = (seeds[0].clone(), g(&seeds[0]));
    for s in &seeds {
        let gs = g(s);
        if gs < best_seed.1 {
            best_seed = (s.clone(), gs);
        }
        let (u, gu) = descend_sphere(s, g, T::zero());
        if gu <= slope_tol {
            candidates.push(u);
        }
    }
    // The most interior direction of the cone.
    let (deep, gdeep) = descend_sphere(&best_seed.0, g, T::neg_infinity());
    if gdeep <= slope_tol {
        candidates.insert(0, deep);
    }

    let probes: Vec<T> = (0..8).map(|k| horizon * lit::<T>(10f64.powi(-k))).collect();
    let mut directions: Vec<CVec<T>> = Vec::new();
    for u in candidates {
        let stays = probes
            .iter()
            .all(|&t| domain.contains_unchecked(&witness.add_scaled(t, &u)));
        if !stays {
            continue;
        }
        if directions.iter().all(|d| signed_angle(d, &u) > ang_tol) {
            directions.push(u);
        }
    }

    let antipodal_pair = if directions.len() >= 2 {
        let v0 = &directions[0];
        let clustered = directions.iter().all(|d| axis_angle(v0, d) <= ang_tol);
        let has_pos = directions.iter().any(|d| d.real_dot(v0) > T::zero());
        let has_neg = directions.iter().any(|d| d.real_dot(v0) < T::zero());
        (clustered && has_pos && has_neg).then(|| canonical_sign(v0))
    } else {
        None
    };
    let is_bounded = directions.is_empty() && domain.known_bounded() != Some(false);
    Ok(RecessionReport {
        directions,
        antipodal_pair,
        is_bounded,
    })
}

pub fn classify_ends<T: Real>(
    _domain: &ConvexDomain<T>,
    report: &RecessionReport<T>,
) -> EndClassification<T> {
    if let Some(v) = &report.antipodal_pair {
        EndClassification::TwoEnds(v.clone())
    } else if !report.directions.is_empty() {
        EndClassification::OneEnd
    } else {
        EndClassification::Bounded
    }
}

/// `max` of the recession slopes of `w, -w, i w, -i w`; `<= 0` iff the complex
/// line through any interior point in direction `w` stays inside.
fn complex_line_slope<T: Real>(domain: &ConvexDomain<T>, w: &CVec<T>) -> T {
    let i = Complex::new(T::zero(), T::one());
    let iw = w.cscale(i);
    [w.clone(), -w, iw.clone(), -&iw]
        .iter()
        .map(|u| domain.recession_slope(u))
        .fold(T::neg_infinity(), T::max)
}

pub fn is_c_proper<T: Real>(
    domain: &ConvexDomain<T>,
    report: &RecessionReport<T>,
) -> CProperVerdict<T> {
    let kind = domain.kind();
    if kind.is_catalog() {
        let c_proper = kind != DomainKind::ProductWithPlane;
        return CProperVerdict {
            c_proper,
            approximate: false,
            complex_line: (!c_proper).then(|| CVec::basis(domain.dim(), 1)),
        };
    }
    let slope_tol = tol::<T>(1e-9);
    let mut starts = report.directions.clone();
    starts.extend(direction_seeds::<T>(domain.dim(), 16, 0x5eed));
    for s in &starts {
        let (w, gw) = descend_sphere(s, |u| complex_line_slope(domain, u), T::zero());
        if gw <= slope_tol {
            return CProperVerdict {
                c_proper: false,
                approximate: true,
                complex_line: Some(w),
            };
        }
    }
    CProperVerdict {
        c_proper: true,
        approximate: true,
        complex_line: None,
    }
}

/// True when every direction at infinity is `±v`.
pub(crate) fn lineality_is_line<T: Real>(domain: &ConvexDomain<T>, v: &CVec<T>) -> bool {
    let cfg = RecessionConfig {
        n_dirs: 32,
        ..RecessionConfig::default()
    };
    match recession_directions(domain, domain.witness(), &cfg) {
        Ok(rep) => {
            let ang = lit::<T>(cfg.angular_tol);
            !rep.directions.is_empty() && rep.directions.iter().all(|d| axis_angle(d, v) <= ang)
        }
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Constraint, DomainSpec};

    fn report(d: &ConvexDomain<f64>) -> RecessionReport<f64> {
        recession_directions(d, d.witness(), &RecessionConfig::default()).unwrap()
    }

    #[test]
    fn ball_is_bounded() {
        for dim in 1..=2 {
            let b = ConvexDomain::<f64>::ball(dim);
            let r = report(&b);
            assert!(r.directions.is_empty());
            assert!(r.is_bounded);
            assert_eq!(classify_ends(&b, &r), EndClassification::Bounded);
            assert!(is_c_proper(&b, &r).c_proper);
        }
    }

    #[test]
    fn strip_has_two_ends() {
        for s in [
            ConvexDomain::<f64>::standard_strip(1.0),
            ConvexDomain::strip_times_disc(),
        ] {
            let r = report(&s);
            let v = r.antipodal_pair.clone().expect("antipodal pair");
            let dir = s.strip_direction().unwrap();
            assert!(axis_angle(&v, dir) < 1e-3);
            assert_eq!(classify_ends(&s, &r).end_count(), 2);
        }
    }

    #[test]
    fn siegel_has_one_end() {
        let s = ConvexDomain::<f64>::siegel(2);
        let w = CVec::from_pairs(&[(0.0, 2.0), (0.0, 0.0)]);
        let r = recession_directions(&s, &w, &RecessionConfig::default()).unwrap();
        let ie0 = CVec::from_pairs(&[(0.0, 1.0), (0.0, 0.0)]);
        assert!(r.directions.iter().any(|d| signed_angle(d, &ie0) < 1e-3));
        assert!(r.directions.len() > 2, "a cone of directions");
        assert!(r.antipodal_pair.is_none());
        assert_eq!(classify_ends(&s, &r), EndClassification::OneEnd);
        assert!(is_c_proper(&s, &r).c_proper);
    }

    #[test]
    fn product_with_plane_is_not_c_proper() {
        let p = ConvexDomain::<f64>::product_with_plane(2);
        let r = report(&p);
        assert!(!is_c_proper(&p, &r).c_proper);
    }

    #[test]
    fn numeric_c_properness_finds_complex_line() {
        // {Re z0 < 0} in C^2 contains the complex lines z + C e1.
        let spec = DomainSpec::<f64> {
            dim: 2,
            kind: DomainKind::HalfSpaceIntersection,
            constraints: vec![Constraint::half_space(CVec::basis(2, 0), 0.0)],
            direction: None,
            scale: None,
        };
        let d = ConvexDomain::new(spec).unwrap();
        let r = report(&d);
        let v = is_c_proper(&d, &r);
        assert!(!v.c_proper && v.approximate);
        let w = v.complex_line.unwrap();
        assert!(
            w[0].norm() < 1e-6,
            "line must lie in the z1 direction: {w:?}"
        );
    }

    #[test]
    fn numeric_c_properness_on_siegel_cone() {
        let spec = DomainSpec::<f64> {
            dim: 2,
            kind: DomainKind::NormCone,
            constraints: vec![Constraint::NormCone {
                rows: vec![CVec::basis(2, 1)],
                b: CVec::zeros(1),
                a: CVec::from_pairs(&[(0.0, 1.0), (0.0, 0.0)]),
                c: 0.0,
            }],
            direction: None,
            scale: None,
        };
        let d = ConvexDomain::new(spec).unwrap();
        let r = report(&d);
        let v = is_c_proper(&d, &r);
        assert!(v.c_proper && v.approximate);
    }

    #[test]
    fn reported_directions_work_from_other_points() {
        let s = ConvexDomain::<f64>::siegel(2);
        let r = report(&s);
        let others = [
            CVec::from_pairs(&[(3.0, 0.5), (0.1, -0.2)]),
            CVec::from_pairs(&[(-1.0, 4.0), (2.0, 1.0)]),
        ];
        for z in &others {
            assert!(s.contains(z).unwrap());
            for v in &r.directions {
                for t in [1.0, 10.0, 1e3, 1e5] {
                    assert!(s.contains(&z.add_scaled(t, v)).unwrap());
                }
            }
        }
    }

    #[test]
    fn report_json_rounds() {
        let s = ConvexDomain::<f64>::standard_strip(1.0);
        let j = report(&s).to_json();
        assert!(j["antipodal_pair"].is_array());
        assert_eq!(j["is_bounded"], false);
    }

    #[test]
    fn seeds_are_unit_and_deterministic() {
        let a = direction_seeds::<f64>(2, 10, 3);
        let b = direction_seeds::<f64>(2, 10, 3);
        assert_eq!(a, b);
        for v in &a {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}
