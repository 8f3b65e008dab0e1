//! Commuting pairs: compact return of `f^m g^n`, the audited return bound,
//! the limit retract, and the 1-Lipschitz audit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::error::{KobaError, Result};
use crate::hyperbolicity::{gromov_product, hausdorff};
use crate::metric::DistanceOracle;
use crate::scalar::{lit, Real};

use super::maps::{interior_samples, HoloMap};
use super::orbit::{denjoy_wolff, same_verdict, OrbitClassification};

/// Samples used for the commutation precondition.
pub const COMMUTE_SAMPLES: usize = 100;

/// Orbit length used to locate Denjoy–Wolff points.
pub const DW_ITERATES: usize = 400;

/// Candidates re-evaluated with full distances after the quick scan.
const SHORTLIST: usize = 3;

/// Default search range for `n(m)`.
pub fn default_n_max(m: usize) -> usize {
    4 * m + 100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReturnRow<T: Real> {
    pub m: usize,
    pub n: usize,
    pub dist: T,
    pub slack: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReturnTable<T: Real> {
    pub rows: Vec<ReturnRow<T>>,
    pub max_dist: T,
    pub dw_f: OrbitClassification<T>,
    pub dw_g: OrbitClassification<T>,
}

/// Checks commutation and distinct Denjoy–Wolff points.
pub fn check_pair<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    g: &HoloMap<'_, T>,
    x0: &CVec<T>,
) -> Result<(OrbitClassification<T>, OrbitClassification<T>)>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let domain = f.domain();
    domain.require_inside(x0, "x0")?;
    if !f.commutes_with(g, COMMUTE_SAMPLES, 17)? {
        return Err(KobaError::Precondition("maps do not commute".into()));
    }
    let mut starts = vec![x0.clone()];
    for z in interior_samples(domain, 8, 23)? {
        if starts.len() == 3 {
            break;
        }
        if !starts.contains(&z) {
            starts.push(z);
        }
    }
    let tol = lit::<T>(1e-6);
    let agree = lit::<T>(1e-4);
    let dw_f = denjoy_wolff(oracle, f, &starts, DW_ITERATES, tol, agree)
        .map_err(|e| e.context("Denjoy-Wolff point of f"))?;
    let dw_g = denjoy_wolff(oracle, g, &starts, DW_ITERATES, tol, agree)
        .map_err(|e| e.context("Denjoy-Wolff point of g"))?;
    if same_verdict(&dw_f.verdict, &dw_g.verdict, agree * domain.scale()) {
        return Err(KobaError::Precondition(
            "f and g share their Denjoy-Wolff point".into(),
        ));
    }
    Ok((dw_f, dw_g))
}

/// Upper distance from `x0`, or `None` for points absorbed by the boundary.
fn try_quick<T, O>(oracle: &O, x0: &CVec<T>, z: &CVec<T>) -> Result<Option<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if !oracle.contains(z) {
        return Ok(None);
    }
    oracle.quick_upper(x0, z).map(Some)
}

/// For each `m <= big_m`, the smallest `n <= n_max` minimizing the upper
/// distance from `x0` to `f^m g^n (x0)`.
pub fn commuting_return<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    g: &HoloMap<'_, T>,
    x0: &CVec<T>,
    big_m: usize,
    n_max: usize,
) -> Result<ReturnTable<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let (dw_f, dw_g) = check_pair(oracle, f, g, x0)?;
    let mut fm = Vec::with_capacity(big_m + 1);
    fm.push(x0.clone());
    for m in 1..=big_m {
        fm.push(f.apply(&fm[m - 1]));
    }
    let rows = fm
        .par_iter()
        .enumerate()
        .map(|(m, start)| return_row(oracle, g, x0, m, start, n_max))
        .collect::<Result<Vec<_>>>()?;
    let max_dist = rows.iter().map(|r| r.dist).fold(T::zero(), T::max);
    Ok(ReturnTable {
        rows,
        max_dist,
        dw_f,
        dw_g,
    })
}

fn return_row<T, O>(
    oracle: &O,
    g: &HoloMap<'_, T>,
    x0: &CVec<T>,
    m: usize,
    start: &CVec<T>,
    n_max: usize,
) -> Result<ReturnRow<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    // f^m g^n (x0) = g^n (f^m x0) by commutation.
    let mut z = start.clone();
    let mut scan = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            z = g.apply(&z);
        }
        match try_quick(oracle, x0, &z)? {
            Some(d) => scan.push((d, n, z.clone())),
            None => break,
        }
    }
    if scan.is_empty() {
        return Err(KobaError::Precondition(format!(
            "f^{m}(x0) left the resolvable domain"
        )));
    }
    // Stable sort keeps the smallest n among ties.
    scan.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best: Option<ReturnRow<T>> = None;
    for (_, n, z) in scan.into_iter().take(SHORTLIST) {
        let b = oracle.distance(x0, &z)?;
        let better = match &best {
            None => true,
            Some(r) => b.upper < r.dist || (b.upper == r.dist && n < r.n),
        };
        if better {
            best = Some(ReturnRow {
                m,
                n,
                dist: b.upper,
                slack: oracle.slack(&b),
            });
        }
    }
    Ok(best.expect("nonempty shortlist"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SelectorAudit<T: Real> {
    /// Max Gromov product `(f^m x0 | g^n x0)_{x0}` over `m, n <= M`.
    pub r: T,
    /// Max shadowing gap of the broken geodesics `f^m x0 -> x0 -> g^n x0`.
    pub big_r: T,
    /// `d(x0, g x0)`.
    pub c: T,
    /// `4 r + 2 R + C / 2`.
    pub bound: T,
    pub max_dist: T,
    pub slack: T,
    pub holds: bool,
    /// Pairs `(m, n)` violating `d(f^m x0, g^n x0) >= d(f^m x0, x0) + d(x0, g^n x0) - 2 r`.
    pub eq_violations: Vec<(usize, usize)>,
    pub table: ReturnTable<T>,
}

/// Broken geodesics audited for the shadowing constant.
const SHADOW_PAIRS: usize = 8;

/// Audits the compact-return bound `4 r + 2 R + C/2` against the observed
/// minima.
pub fn selector_bound_audit<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    g: &HoloMap<'_, T>,
    x0: &CVec<T>,
    big_m: usize,
) -> Result<SelectorAudit<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let table = commuting_return(oracle, f, g, x0, big_m, default_n_max(big_m))?;
    let orbit = |h: &HoloMap<'_, T>| {
        let mut v = vec![x0.clone()];
        for k in 1..=big_m {
            let next = h.apply(&v[k - 1]);
            v.push(next);
        }
        v
    };
    let (fo, go) = (orbit(f), orbit(g));
    let dist = |a: &CVec<T>, b: &CVec<T>| oracle.distance(a, b);
    let df: Vec<_> = fo.iter().map(|p| dist(p, x0)).collect::<Result<_>>()?;
    let dg: Vec<_> = go.iter().map(|q| dist(x0, q)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..=big_m)
        .flat_map(|m| (0..=big_m).map(move |n| (m, n)))
        .collect();
    let dfg = cells
        .par_iter()
        .map(|&(m, n)| dist(&fo[m], &go[n]))
        .collect::<Result<Vec<_>>>()?;

    let mut r = T::zero();
    let mut pair_slack = T::zero();
    for (k, &(m, n)) in cells.iter().enumerate() {
        r = r.max(gromov_product(df[m].upper, dg[n].upper, dfg[k].upper));
        pair_slack =
            pair_slack.max(oracle.slack(&df[m]) + oracle.slack(&dg[n]) + oracle.slack(&dfg[k]));
    }
    let eq_violations = cells
        .iter()
        .enumerate()
        .filter(|(k, &(m, n))| {
            dfg[*k].upper < df[m].upper + dg[n].upper - lit::<T>(2.0) * r - pair_slack
        })
        .map(|(_, &c)| c)
        .collect();

    let stride = (big_m / SHADOW_PAIRS).max(1);
    let picks: Vec<&ReturnRow<T>> = table
        .rows
        .iter()
        .filter(|row| row.m > 0 && row.n > 0 && row.m % stride == 0)
        .collect();
    let gaps = picks
        .par_iter()
        .map(|row| broken_geodesic_gap(oracle, &fo[row.m], x0, &g.power(x0, row.n)))
        .collect::<Result<Vec<_>>>()?;
    let big_r = gaps.into_iter().fold(T::zero(), T::max);

    let c = dist(x0, &go[1.min(big_m)])?.upper;
    let bound = lit::<T>(4.0) * r + lit::<T>(2.0) * big_r + lit::<T>(0.5) * c;
    let worst = table
        .rows
        .iter()
        .max_by(|a, b| {
            a.dist
                .partial_cmp(&b.dist)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("row for m = 0");
    let slack = worst.slack + pair_slack;
    let holds = table.max_dist <= bound + slack;
    Ok(SelectorAudit {
        r,
        big_r,
        c,
        bound,
        max_dist: table.max_dist,
        slack,
        holds,
        eq_violations,
        table,
    })
}

/// Hausdorff gap between the broken geodesic `a -> b -> c` and the
/// geodesic `a -> c`.
fn broken_geodesic_gap<T, O>(oracle: &O, a: &CVec<T>, b: &CVec<T>, c: &CVec<T>) -> Result<T>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    if a == c {
        return Ok(T::zero());
    }
    let mut nodes = Vec::new();
    if a != b {
        nodes.extend(oracle.geodesic(a, b)?.nodes);
        nodes.pop();
    }
    if b != c {
        nodes.extend(oracle.geodesic(b, c)?.nodes);
    } else {
        nodes.push(c.clone());
    }
    let direct = oracle.geodesic(a, c)?;
    hausdorff(oracle, &nodes, &direct.nodes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RetractReport<T: Real> {
    pub grid: Vec<CVec<T>>,
    /// `f^{m_K} g^{n_K}` on the grid.
    pub h_samples: Vec<CVec<T>>,
    /// `f^{p} g^{p'}` on the grid, for the last schedule difference.
    pub rho_samples: Vec<CVec<T>>,
    /// `max |rho(rho(z)) - rho(z)|`.
    pub idempotency_defect: T,
    /// `max |rho(f(rho z)) - f(rho z)|`: how far `f` moves the image off itself.
    pub invariance_defect: T,
}

/// Approximates the limit retract from a schedule of `(m_k, n_k)` pairs.
pub fn retract_approx<T: Real>(
    f: &HoloMap<'_, T>,
    g: &HoloMap<'_, T>,
    schedule: &[(usize, usize)],
    grid: &[CVec<T>],
) -> Result<RetractReport<T>> {
    if schedule.len() < 3 {
        return Err(KobaError::InvalidInput(
            "schedule needs at least 3 pairs".into(),
        ));
    }
    let domain = f.domain();
    for z in grid {
        domain.require_inside(z, "grid point")?;
    }
    let k = schedule.len() - 1;
    let (m_k, n_k) = schedule[k];
    let (m_p, n_p) = schedule[k - 1];
    if m_k < m_p || n_k < n_p {
        return Err(KobaError::InvalidInput(
            "schedule differences must be nonnegative".into(),
        ));
    }
    let (p, pp) = (m_k - m_p, n_k - n_p);
    let fg = |z: &CVec<T>, a: usize, b: usize| f.power(&g.power(z, b), a);
    let rho = |z: &CVec<T>| fg(z, p, pp);

    let h_samples: Vec<CVec<T>> = grid.par_iter().map(|z| fg(z, m_k, n_k)).collect();
    let rho_samples: Vec<CVec<T>> = grid.par_iter().map(rho).collect();
    let mut idempotency_defect = T::zero();
    let mut invariance_defect = T::zero();
    for r in &rho_samples {
        idempotency_defect = idempotency_defect.max(rho(r).dist(r));
        let fr = f.apply(r);
        invariance_defect = invariance_defect.max(rho(&fr).dist(&fr));
    }
    Ok(RetractReport {
        grid: grid.to_vec(),
        h_samples,
        rho_samples,
        idempotency_defect,
        invariance_defect,
    })
}

/// The schedule `(m, n(m))` read from a return table, keeping the rows
/// whose `n` does not decrease.
pub fn schedule_from(table: &ReturnTable<impl Real>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for row in &table.rows {
        if out.last().is_none_or(|&(_, n)| row.n >= n) {
            out.push((row.m, row.n));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LipschitzAudit<T: Real> {
    pub n_pairs: usize,
    pub violations: usize,
    /// Largest `d(fx, fy) - d(x, y)` before slack.
    pub worst_excess: T,
}

/// Checks `d(fx, fy) <= d(x, y) + 2 slack` on seeded interior pairs.
pub fn lipschitz_audit<T, O>(
    oracle: &O,
    f: &HoloMap<'_, T>,
    n_pairs: usize,
    seed: u64,
) -> Result<LipschitzAudit<T>>
where
    T: Real,
    O: DistanceOracle<T> + ?Sized,
{
    let pts = interior_samples(f.domain(), 2 * n_pairs, seed)?;
    let results = pts
        .par_chunks(2)
        .map(|xy| {
            let (x, y) = (&xy[0], &xy[1]);
            let before = oracle.distance(x, y)?;
            let after = oracle.distance(&f.apply(x), &f.apply(y))?;
            let slack = oracle.slack(&before).max(oracle.slack(&after));
            let excess = after.upper - before.upper;
            Ok((excess, excess > lit::<T>(2.0) * slack))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzAudit {
        n_pairs,
        violations: results.iter().filter(|r| r.1).count(),
        worst_excess: results.iter().map(|r| r.0).fold(T::neg_infinity(), T::max),
    })
}

/// Euclidean grid of points on the segment between two interior points.
pub fn segment_grid<T: Real>(a: &CVec<T>, b: &CVec<T>, n: usize) -> Vec<CVec<T>> {
    let n = n.max(2);
    (0..n)
        .map(|k| a.lerp(b, lit::<T>(k as f64 / (n - 1) as f64)))
        .collect()
}
