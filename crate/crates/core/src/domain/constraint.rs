//! Convex defining functions.
//!
//! Every domain is the strict sublevel set `{ value_j(z) < 0 for all j }` of a
//! finite family of convex functions of the `2d` real coordinates. Two shapes
//! cover every supported kind: real half-spaces and second-order (norm) cones.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint<T: Real> {
    /// `Re<a, z> + c < 0`.
    HalfSpace { a: CVec<T>, c: T },
    /// `||L z + b|| < Re<a, z> + c`, with `L` given by its complex rows.
    NormCone {
        rows: Vec<CVec<T>>,
        b: CVec<T>,
        a: CVec<T>,
        c: T,
    },
}

impl<T: Real> Constraint<T> {
    pub fn half_space(a: CVec<T>, c: T) -> Self {
        Constraint::HalfSpace { a, c }
    }

    /// `||z - center|| < radius` restricted to the coordinates in `coords`.
    pub fn coordinate_ball(dim: usize, coords: &[usize], radius: T) -> Self {
        let rows = coords.iter().map(|&j| CVec::basis(dim, j)).collect();
        Constraint::NormCone {
            rows,
            b: CVec::zeros(coords.len()),
            a: CVec::zeros(dim),
            c: radius,
        }
    }

    /// Rejects malformed payloads and normalizes half-space normals to unit
    /// length so that values are Euclidean distances.
    pub fn validated(self, dim: usize) -> Result<Self> {
        match self {
            Constraint::HalfSpace { a, c } => {
                a.check_dim(dim)?;
                let n = a.norm();
                if n == T::zero() || !c.is_finite() {
                    return Err(KobaError::InvalidInput(
                        "half-space constraint needs a nonzero normal".into(),
                    ));
                }
                Ok(Constraint::HalfSpace {
                    a: a.scale(T::one() / n),
                    c: c / n,
                })
            }
            Constraint::NormCone { rows, b, a, c } => {
                a.check_dim(dim)?;
                if rows.len() != b.dim() {
                    return Err(KobaError::InvalidInput(format!(
                        "norm-cone constraint has {} rows but offset of length {}",
                        rows.len(),
                        b.dim()
                    )));
                }
                for r in &rows {
                    r.check_dim(dim)?;
                }
                if !b.is_finite() || !c.is_finite() {
                    return Err(KobaError::InvalidInput(
                        "norm-cone constraint has non-finite entries".into(),
                    ));
                }
                Ok(Constraint::NormCone { rows, b, a, c })
            }
        }
    }

    fn apply_rows(rows: &[CVec<T>], z: &CVec<T>) -> CVec<T> {
        CVec(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .zip(z.iter())
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (l, x)| {
                            acc + l * x
                        })
                })
                .collect(),
        )
    }

    /// Defining function; negative exactly on the open set.
    pub fn value(&self, z: &CVec<T>) -> T {
        match self {
            Constraint::HalfSpace { a, c } => a.real_dot(z) + *c,
            Constraint::NormCone { rows, b, a, c } => {
                let p = &Self::apply_rows(rows, z) + b;
                p.norm() - a.real_dot(z) - *c
            }
        }
    }

    /// Recession function `lim_{t -> inf} value(z + t u) / t`.
    ///
    /// `u` lies in the recession cone of this constraint iff the slope is `<= 0`.
    pub fn slope(&self, u: &CVec<T>) -> T {
        match self {
            Constraint::HalfSpace { a, .. } => a.real_dot(u),
            Constraint::NormCone { rows, a, .. } => {
                Self::apply_rows(rows, u).norm() - a.real_dot(u)
            }
        }
    }

    /// True when translating by every real multiple of `v` leaves the
    /// constraint unchanged.
    pub fn invariant_along(&self, v: &CVec<T>, tol: T) -> bool {
        match self {
            Constraint::HalfSpace { a, .. } => a.real_dot(v).abs() <= tol,
            Constraint::NormCone { rows, a, .. } => {
                Self::apply_rows(rows, v).norm() <= tol && a.real_dot(v).abs() <= tol
            }
        }
    }

    /// First `t > 0` with `value(z + t u) = 0`, or `None` when the ray never
    /// leaves. Requires `value(z) < 0`.
    pub fn exit_time(&self, z: &CVec<T>, u: &CVec<T>) -> Option<T> {
        match self {
            Constraint::HalfSpace { a, c } => {
                let s = a.real_dot(u);
                if s <= T::zero() {
                    None
                } else {
                    Some((-(a.real_dot(z) + *c) / s).max(T::zero()))
                }
            }
            Constraint::NormCone { rows, b, a, c } => {
                let p = &Self::apply_rows(rows, z) + b;
                let q = Self::apply_rows(rows, u);
                cone_exit(
                    p.norm_sqr(),
                    p.real_dot(&q),
                    q.norm_sqr(),
                    a.real_dot(z) + *c,
                    a.real_dot(u),
                )
            }
        }
    }

    /// Precomputes the restriction to the complex line `z + C w`.
    pub(crate) fn slice(&self, z: &CVec<T>, w: &CVec<T>) -> SlicePart<T> {
        match self {
            Constraint::HalfSpace { a, c } => SlicePart::Half {
                m0: a.real_dot(z) + *c,
                alpha: a.dot(w),
            },
            Constraint::NormCone { rows, b, a, c } => {
                let p = &Self::apply_rows(rows, z) + b;
                let r = Self::apply_rows(rows, w);
                SlicePart::Cone {
                    pp: p.norm_sqr(),
                    pr: p.dot(&r),
                    rr: r.norm_sqr(),
                    m: a.real_dot(z) + *c,
                    alpha: a.dot(w),
                }
            }
        }
    }
}

/// One constraint restricted to a complex line `ζ ↦ z + ζ w`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum SlicePart<T: Real> {
    Half {
        m0: T,
        alpha: Complex<T>,
    },
    Cone {
        pp: T,
        pr: Complex<T>,
        rr: T,
        m: T,
        alpha: Complex<T>,
    },
}

impl<T: Real> SlicePart<T> {
    /// Minimum exit time over all phases when it has a closed form:
    /// `Some(None)` if the line never leaves this constraint.
    pub(crate) fn closed_min(&self) -> Option<Option<T>> {
        match *self {
            SlicePart::Half { m0, alpha } => {
                let n = alpha.norm();
                Some((n > T::zero()).then(|| (-m0 / n).max(T::zero())))
            }
            // Without an affine side the slice is the disc
            // |zeta + conj(pr)/rr| < R, and the answer is R - |centre|.
            SlicePart::Cone {
                pp,
                pr,
                rr,
                m,
                alpha,
            } if alpha.re == T::zero() && alpha.im == T::zero() => {
                if rr <= T::zero() {
                    return Some(None);
                }
                let gap = (m * m - pp).max(T::zero()) / rr;
                let centre = pr.norm() / rr;
                let radius = (gap + centre * centre).sqrt();
                Some(Some(gap / (radius + centre)))
            }
            SlicePart::Cone {
                pp,
                pr,
                rr,
                m,
                alpha,
            } => conic_nearest(pp, pr, rr, m, alpha),
        }
    }

    /// Exit time along `z + t e w` for the unit phase `e`.
    pub(crate) fn exit(&self, e: Complex<T>) -> Option<T> {
        match *self {
            SlicePart::Half { m0, alpha } => {
                let s = (e * alpha).re;
                if s <= T::zero() {
                    None
                } else {
                    Some((-m0 / s).max(T::zero()))
                }
            }
            SlicePart::Cone {
                pp,
                pr,
                rr,
                m,
                alpha,
            } => cone_exit(pp, (e * pr).re, rr, m, (e * alpha).re),
        }
    }
}

/// Distance from `zeta = 0` to the boundary of the planar slice
/// `{zeta : ||p + zeta r|| < m + Re(zeta alpha)}`, or `None` in degenerate
/// configurations that should fall back to a phase search.
///
/// With `x = (Re zeta, Im zeta)` the boundary lies on the quadric
/// `Q(x) = x'(rr I - g g')x + 2 b'x + (pp - m^2)`, `g = (Re alpha, -Im alpha)`,
/// `b = (Re pr, -Im pr) - m g`. In the eigenbasis `(g/|g|, g_perp)` the
/// nearest point is `x_k = mu b_k / (1 - mu lambda_k)` where `mu` is the
/// unique root in `(0, 1/rr)` of the increasing secular function
/// `phi(mu) = sum_k b_k^2 mu (2 - mu lambda_k) / (1 - mu lambda_k)^2 + pp - m^2`.
fn conic_nearest<T: Real>(
    pp: T,
    pr: Complex<T>,
    rr: T,
    m: T,
    alpha: Complex<T>,
) -> Option<Option<T>> {
    let c0 = pp - m * m;
    if c0 >= T::zero() || m <= T::zero() {
        return Some(Some(T::zero()));
    }
    let gn = alpha.norm();
    let scale = (pp.sqrt() + m) * (rr.sqrt() + gn);
    // The line lies in the kernel of the rows: the slice is a half-plane.
    if rr <= T::epsilon() * scale * scale {
        return Some(Some(((m - pp.sqrt()) / gn).max(T::zero())));
    }
    let (g1, g2) = (alpha.re / gn, -alpha.im / gn);
    let (b1, b2) = (pr.re - m * alpha.re, -pr.im + m * alpha.im);
    let bu = g1 * b1 + g2 * b2;
    let mut bw = -g2 * b1 + g1 * b2;
    let (l1, l2) = (rr - gn * gn, rr);
    let two = lit::<T>(2.0);
    let term = |mu: T, b: T, l: T| {
        let d = T::one() - mu * l;
        (
            b * b * mu * (two - mu * l) / (d * d),
            two * b * b / (d * d * d),
        )
    };
    if bw.abs() <= lit::<T>(1e-9) * scale {
        bw = T::zero();
        // Without the pole the secular function may stay negative on
        // (0, 1/l2); the nearest point then sits at mu = 1/l2 with a free
        // component along the second eigenvector.
        let (f_end, _) = term(T::one() / l2, bu, l1);
        if f_end + c0 < T::zero() {
            let xu = bu / (gn * gn);
            let xw2 = -(l1 * xu * xu + two * bu * xu + c0) / l2;
            return Some(Some((xu * xu + xw2.max(T::zero())).sqrt()));
        }
    }
    let phi = |mu: T| {
        let (f1, d1) = term(mu, bu, l1);
        if bw == T::zero() {
            return (f1 + c0, d1);
        }
        let (f2, d2) = term(mu, bw, l2);
        (f1 + f2 + c0, d1 + d2)
    };
    let (mut lo, mut hi) = (T::zero(), T::one() / l2);
    let mut mu = hi / two;
    for _ in 0..200 {
        let (f, df) = phi(mu);
        if f == T::zero() {
            break;
        }
        if f < T::zero() {
            lo = mu;
        } else {
            hi = mu;
        }
        let mut next = mu - f / df;
        if !(next > lo && next < hi) {
            next = (lo + hi) / two;
        }
        if (next - mu).abs() <= T::epsilon() * lit(4.0) * mu || hi - lo <= T::epsilon() * hi {
            mu = next;
            break;
        }
        mu = next;
    }
    if bw == T::zero() && mu * l2 >= T::one() {
        mu = T::one() / l2 * (T::one() - T::epsilon());
    }
    let u = mu * bu / (T::one() - mu * l1);
    let w = if bw == T::zero() {
        T::zero()
    } else {
        mu * bw / (T::one() - mu * l2)
    };
    Some(Some((u * u + w * w).sqrt()))
}

/// First root of `||p + t q|| - m - s t` for `t > 0`, given
/// `pp = ||p||^2`, `pq = Re<p, q>`, `qq = ||q||^2`.
fn cone_exit<T: Real>(pp: T, pq: T, qq: T, m: T, s: T) -> Option<T> {
    let aa = qq - s * s;
    let bb = pq - m * s;
    let cc = pp - m * m;
    if cc >= T::zero() || m <= T::zero() {
        return Some(T::zero());
    }
    let small = T::epsilon() * lit(64.0) * (qq + s * s);
    if aa <= small && s >= T::zero() {
        // |s| >= ||q|| with s >= 0: the affine side grows at least as fast as
        // the norm along the ray.
        return None;
    }
    // Roots of (m + s t)^2 = ||p + t q||^2, i.e. aa t^2 + 2 bb t + cc = 0
    // with cc < 0. Whenever a crossing exists the first one is
    // -cc / (bb + sqrt(disc)), whatever the sign of aa; the remaining
    // branch is the ordinary larger root.
    // bb^2 - aa cc regrouped as ||m q - s p||^2 - (|p|^2 |q|^2 - <p,q>^2):
    // exact for a tangent line with p or q zero, where the textbook form
    // leaves a rounding residue whose square root is visible.
    let disc = ((m * m * qq - lit::<T>(2.0) * m * s * pq + s * s * pp) - (pp * qq - pq * pq))
        .max(T::zero())
        .sqrt();
    if bb > T::zero() {
        Some(-cc / (bb + disc))
    } else if aa > small {
        Some((-bb + disc) / aa)
    } else {
        // Only reachable through rounding: the affine side vanishes here.
        Some(m / (-s))
    }
}
