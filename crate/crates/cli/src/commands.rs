//! One function per subcommand. Each returns the report to emit and, when
//! the run finished but a checked property failed, the failure to exit with.

use std::path::Path;

use kobalab_core::boundary::{
    example_gallery, extension_correspondence_test, CorrespondenceConfig, GalleryConfig,
    GalleryExample, GalleryReport,
};
use kobalab_core::domain::{classify_ends, is_c_proper, recession_directions, RecessionConfig};
use kobalab_core::dynamics::{classify_orbit, iterate, selector_bound_audit, HoloMap};
use kobalab_core::hyperbolicity::{delta_report, radius_schedule, sampler_for};
use kobalab_core::metric::{distance, oracle_for, ClosedFormOracle, DistanceOracle};
use kobalab_core::{CVector, Domain, Ideal, Map};
use serde_json::{json, Value};

use crate::config::{parse_point, read_json, Failure, RunConfig};

/// A finished run: the JSON report, its CSV table, and an optional failure.
pub struct Outcome {
    pub json: Value,
    pub table: Table,
    pub failure: Option<Failure>,
}

#[derive(Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Column names `{prefix}{j}_re, {prefix}{j}_im` for a `dim`-vector.
fn coord_names(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim)
        .flat_map(|j| [format!("{prefix}{j}_re"), format!("{prefix}{j}_im")])
        .collect()
}

/// Shortest round-trip form, with an exponent for tiny or huge values.
fn num(x: f64) -> String {
    Value::from(x).to_string()
}

fn coords(v: &CVector) -> Vec<String> {
    v.iter().flat_map(|c| [num(c.re), num(c.im)]).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("reports serialize")
}

fn point_or_witness(domain: &Domain, arg: Option<&str>, what: &str) -> Result<CVector, Failure> {
    match arg {
        Some(s) => parse_point(s, what),
        None => Ok(domain.witness().clone()),
    }
}

fn load_map<'a>(domain: &'a Domain, path: &Path, seed: u64) -> Result<HoloMap<'a, f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read map {}: {e}", path.display())))?;
    let spec = Map::from_json(&text)?;
    Ok(HoloMap::new(domain, spec, seed)?)
}

pub fn distance_cmd(domain: &Domain, x: &str, y: &str, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let x = parse_point(x, "x")?;
    let y = parse_point(y, "y")?;
    let est = distance(domain, &x, &y, &cfg.metric)?;
    let closed = if domain.kind().has_closed_form() {
        Some(ClosedFormOracle::new(domain, &cfg.metric)?.distance(&x, &y)?)
    } else {
        None
    };
    let nodes = est.path.as_ref().map_or(0, |p| p.nodes.len());
    let mut table = Table::new(names(&[
        "lower",
        "upper",
        "closed_lower",
        "closed_upper",
        "nodes",
        "iterations",
    ]));
    table.rows.push(vec![
        num(est.bound.lower),
        num(est.bound.upper),
        opt(closed.as_ref().map(|b| b.lower)),
        opt(closed.as_ref().map(|b| b.upper)),
        nodes.to_string(),
        est.iterations.to_string(),
    ]);
    let json = json!({
        "lower": est.bound.lower,
        "upper": est.bound.upper,
        "closed_form": closed,
        "nodes": nodes,
        "iterations": est.iterations,
        "path": est.path,
    });
    Ok(Outcome {
        json,
        table,
        failure: None,
    })
}

pub struct DeltaArgs {
    pub samples: usize,
    pub radii: Option<Vec<f64>>,
    pub triangles: usize,
}

pub fn delta_cmd(domain: &Domain, args: &DeltaArgs, cfg: &RunConfig) -> Result<Outcome, Failure> {
    if args.samples == 0 {
        return Err(Failure::Input("--samples must be positive".into()));
    }
    let radii = args.radii.clone().unwrap_or_else(|| radius_schedule(2));
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Failure::Input("radii must be positive".into()));
    }
    let oracle = oracle_for(domain, &cfg.metric)?;
    let mut table = Table::new(names(&[
        "sample_radius",
        "delta_four_point",
        "delta_thin_triangle",
        "error_bar",
        "n_samples",
    ]));
    let mut sweeps = Vec::new();
    for &r in &radii {
        let sampler = sampler_for(domain, r);
        let rep = delta_report(
            oracle.as_ref(),
            sampler.as_ref(),
            args.samples,
            args.triangles,
            cfg.seed,
        )?;
        table.rows.push(vec![
            num(r),
            num(rep.delta_four_point),
            num(rep.delta_thin_triangle),
            num(rep.error_bar),
            rep.n_samples.to_string(),
        ]);
        sweeps.push(json!({ "sample_radius": r, "report": rep }));
    }
    let delta = sweeps
        .iter()
        .filter_map(|s| s["report"]["delta_four_point"].as_f64())
        .fold(0.0, f64::max);
    Ok(Outcome {
        json: json!({ "delta_four_point": delta, "sweeps": sweeps }),
        table,
        failure: None,
    })
}

pub fn ends_cmd(domain: &Domain, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let rc = RecessionConfig {
        seed: cfg.seed,
        ..RecessionConfig::default()
    };
    let report = recession_directions(domain, domain.witness(), &rc)?;
    let class = classify_ends(domain, &report);
    let verdict = is_c_proper(domain, &report);
    let mut header = names(&["direction"]);
    header.extend(coord_names("v", domain.dim()));
    let mut table = Table::new(header);
    for (k, v) in report.directions.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(coords(v));
        table.rows.push(row);
    }
    let json = json!({
        "classification": class,
        "end_count": class.end_count(),
        "recession": report.to_json(),
        "c_proper": verdict,
    });
    Ok(Outcome {
        json,
        table,
        failure: None,
    })
}

pub fn iterate_cmd(
    domain: &Domain,
    map: &Path,
    x0: Option<&str>,
    steps: usize,
    tol: f64,
    cfg: &RunConfig,
) -> Result<Outcome, Failure> {
    let f = load_map(domain, map, cfg.seed)?;
    let x0 = point_or_witness(domain, x0, "x0")?;
    let oracle = oracle_for(domain, &cfg.metric)?;
    let trace = iterate(oracle.as_ref(), &f, &x0, steps)?;
    let class = classify_orbit(domain, &trace, tol);
    let mut header = names(&["n"]);
    header.extend(coord_names("z", domain.dim()));
    header.extend(names(&["step_dist", "norm"]));
    let mut table = Table::new(header);
    for (n, z) in trace.points.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(coords(z));
        row.push(opt(trace.step_dist.get(n).copied().flatten()));
        row.push(num(trace.norms[n]));
        table.rows.push(row);
    }
    let (classification, failure) = match class {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(Failure::from(e))),
    };
    Ok(Outcome {
        json: json!({ "classification": classification, "trace": trace }),
        table,
        failure,
    })
}

pub fn commute_cmd(
    domain: &Domain,
    maps: &[std::path::PathBuf],
    x0: Option<&str>,
    big_m: usize,
    cfg: &RunConfig,
) -> Result<Outcome, Failure> {
    let [fp, gp] = maps else {
        return Err(Failure::Input("commute needs exactly two --map files".into()));
    };
    let f = load_map(domain, fp, cfg.seed)?;
    let g = load_map(domain, gp, cfg.seed)?;
    let x0 = point_or_witness(domain, x0, "x0")?;
    let oracle = oracle_for(domain, &cfg.metric)?;
    let audit = selector_bound_audit(oracle.as_ref(), &f, &g, &x0, big_m)?;
    let mut table = Table::new(names(&["m", "n", "dist", "slack"]));
    for row in &audit.table.rows {
        table.rows.push(vec![
            row.m.to_string(),
            row.n.to_string(),
            num(row.dist),
            num(row.slack),
        ]);
    }
    let failure = (!audit.holds).then(|| {
        Failure::Assertion(format!(
            "return distance {} exceeds the bound {}",
            audit.max_dist, audit.bound
        ))
    });
    Ok(Outcome {
        json: to_value(&audit),
        table,
        failure,
    })
}

pub fn verify_extension_cmd(
    domain: &Domain,
    targets: &Path,
    x0: Option<&str>,
    cfg: &RunConfig,
) -> Result<Outcome, Failure> {
    let targets: Vec<Ideal> = read_json(targets, "targets")?;
    let x0 = point_or_witness(domain, x0, "x0")?;
    let mut cc = CorrespondenceConfig::<f64> {
        metric: cfg.metric.clone(),
        ..CorrespondenceConfig::default()
    };
    if let Some(h) = &cfg.horizons {
        cc.horizons = h.clone();
    }
    let report = extension_correspondence_test(domain, &targets, &x0, &cc)?;
    let mut header = names(&["ray", "target", "start", "node"]);
    header.extend(coord_names("z", domain.dim()));
    let mut table = Table::new(header);
    for (r, path) in report.rays.iter().enumerate() {
        for (k, z) in path.nodes.iter().enumerate() {
            let mut row = vec![
                r.to_string(),
                (r / 2).to_string(),
                (r % 2).to_string(),
                k.to_string(),
            ];
            row.extend(coords(z));
            table.rows.push(row);
        }
    }
    let failure = if let Some(why) = &report.inconclusive {
        Some(Failure::NonConvergence(format!("inconclusive: {why}")))
    } else if !report.passed {
        Some(Failure::Assertion(format!(
            "{} of {} correspondence assertions passed",
            report.passed_assertions, report.assertions
        )))
    } else {
        None
    };
    Ok(Outcome {
        json: to_value(&report),
        table,
        failure,
    })
}

pub fn gallery_cmd(which: &str, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let which: GalleryExample = which.parse().map_err(Failure::from)?;
    let mut gc = GalleryConfig {
        seed: cfg.seed,
        metric: cfg.metric.clone(),
        ..GalleryConfig::default()
    };
    if let Some(n) = cfg.isometry_samples {
        gc.isometry_samples = n;
    }
    let report: GalleryReport<f64> = example_gallery(which, &gc)?;
    let table = gallery_table(&report);
    let failure = (!report.witnessed())
        .then(|| Failure::Assertion("the example's behaviour was not witnessed".into()));
    Ok(Outcome {
        json: to_value(&report),
        table,
        failure,
    })
}

fn gallery_table(report: &GalleryReport<f64>) -> Table {
    match report {
        GalleryReport::Shear { rows, .. } => {
            let mut header = names(&["n"]);
            header.extend(coord_names("a", 2));
            header.extend(coord_names("b", 2));
            header.extend(names(&["to_limit", "source_gap", "image_gap"]));
            let mut t = Table::new(header);
            for r in rows {
                let mut row = vec![r.n.to_string()];
                row.extend(coords(&r.a));
                row.extend(coords(&r.b));
                row.extend([r.to_limit, r.source_gap, r.image_gap].map(num));
                t.rows.push(row);
            }
            t
        }
        GalleryReport::Bidisc { rows, .. } => {
            let dim = rows.first().map_or(2, |r| r.z.dim());
            let mut header = names(&["n"]);
            header.extend(coord_names("z", dim));
            header.extend(coord_names("w", dim));
            header.extend(names(&["lower", "upper"]));
            let mut t = Table::new(header);
            for r in rows {
                let mut row = vec![r.n.to_string()];
                row.extend(coords(&r.z));
                row.extend(coords(&r.w));
                row.extend([r.distance.lower, r.distance.upper].map(num));
                t.rows.push(row);
            }
            t
        }
        GalleryReport::Cayley { limit_rows, .. } => {
            let dim = limit_rows.first().map_or(2, |r| r.z.dim());
            let mut header = names(&["n"]);
            header.extend(coord_names("z", dim));
            header.extend(coord_names("image", dim));
            header.extend(names(&["norm", "image_norm"]));
            let mut t = Table::new(header);
            for r in limit_rows {
                let mut row = vec![r.n.to_string()];
                row.extend(coords(&r.z));
                row.extend(coords(&r.image));
                row.extend([r.norm, r.image_norm].map(num));
                t.rows.push(row);
            }
            t
        }
    }
}
