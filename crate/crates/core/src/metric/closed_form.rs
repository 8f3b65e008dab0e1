//! Classical closed forms: the Kobayashi metric and distance of the disc,
//! ball, polydisc and products of half-planes, plus affine embeddings into
//! `{Re w_j < 0}` used for lower bounds.

use num_complex::Complex;

use crate::cvec::CVec;
use crate::domain::{ConvexDomain, DomainKind};
use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

use super::config::EmbeddingChoice;

/// `arctanh(s)` given both `s^2 = num / den` and `1 - s^2 = gap / den`,
/// which keeps precision at either end of `[0, 1)`.
fn arctanh_split<T: Real>(num: T, gap: T, den: T) -> T {
    let s2 = (num / den).max(T::zero());
    if s2 < lit(0.5) {
        return s2.sqrt().atanh();
    }
    let q = (gap / den).max(T::min_positive_value());
    let s = s2.min(T::one()).sqrt();
    ((T::one() + s) / q.sqrt()).ln()
}

/// `1 - |z|^2` without cancellation for `|z|` near 1.
fn one_minus_sq<T: Real>(r: T) -> T {
    (T::one() - r) * (T::one() + r)
}

/// Poincaré distance on the unit disc, normalized so that `k(0; 1) = 1`.
pub fn disc_distance<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let den = (Complex::new(T::one(), T::zero()) - a.conj() * b).norm_sqr();
    let gap = one_minus_sq(a.norm()) * one_minus_sq(b.norm());
    arctanh_split((a - b).norm_sqr(), gap, den)
}

/// Kobayashi distance of the unit ball.
pub fn ball_distance<T: Real>(x: &CVec<T>, y: &CVec<T>) -> T {
    let den = (Complex::new(T::one(), T::zero()) - y.dot(x)).norm_sqr();
    let gap = one_minus_sq(x.norm()) * one_minus_sq(y.norm());
    // |1 - <x,y>|^2 - gap = |x - y|^2 - sum_{j<k} |x_j y_k - x_k y_j|^2
    let mut wedge = T::zero();
    for j in 0..x.dim() {
        for k in j + 1..x.dim() {
            wedge += (x[j] * y[k] - x[k] * y[j]).norm_sqr();
        }
    }
    arctanh_split(x.dist(y).powi(2) - wedge, gap, den)
}

pub fn polydisc_distance<T: Real>(x: &CVec<T>, y: &CVec<T>) -> T {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| disc_distance(*a, *b))
        .fold(T::zero(), T::max)
}

/// Distance in the left half-plane `{Re z < 0}`.
pub fn half_plane_distance<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    let den = (a + b.conj()).norm_sqr();
    arctanh_split((a - b).norm_sqr(), lit::<T>(4.0) * a.re * b.re, den)
}

/// Distance in `{Re z_j < 0 for all j}`.
pub fn half_spaces_distance<T: Real>(x: &CVec<T>, y: &CVec<T>) -> T {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| half_plane_distance(*a, *b))
        .fold(T::zero(), T::max)
}

/// Closed-form Kobayashi distance for kinds that have one.
pub fn closed_form_distance<T: Real>(
    domain: &ConvexDomain<T>,
    x: &CVec<T>,
    y: &CVec<T>,
) -> Result<T> {
    domain.require_inside(x, "x")?;
    domain.require_inside(y, "y")?;
    match domain.kind() {
        DomainKind::Ball => Ok(ball_distance(x, y)),
        DomainKind::Polydisc => Ok(polydisc_distance(x, y)),
        DomainKind::LeftHalfSpaces => Ok(half_spaces_distance(x, y)),
        k => Err(KobaError::Unsupported(format!(
            "no closed-form distance for {k:?}"
        ))),
    }
}

/// Closed-form infinitesimal Kobayashi metric `k_D(z; v)`.
pub fn exact_infinitesimal<T: Real>(
    domain: &ConvexDomain<T>,
    z: &CVec<T>,
    v: &CVec<T>,
) -> Result<T> {
    v.check_dim(domain.dim())?;
    if !domain.kind().has_closed_form() {
        return Err(KobaError::Unsupported(format!(
            "no closed-form metric for {:?}",
            domain.kind()
        )));
    }
    domain.require_inside(z, "z")?;
    Ok(exact_unchecked(domain.kind(), z, v))
}

pub(crate) fn exact_unchecked<T: Real>(kind: DomainKind, z: &CVec<T>, v: &CVec<T>) -> T {
    match kind {
        DomainKind::Ball => {
            let s = one_minus_sq(z.norm());
            (v.norm_sqr() / s + z.dot(v).norm_sqr() / (s * s)).sqrt()
        }
        DomainKind::Polydisc => z
            .iter()
            .zip(v.iter())
            .map(|(a, w)| w.norm() / one_minus_sq(a.norm()))
            .fold(T::zero(), T::max),
        DomainKind::LeftHalfSpaces => z
            .iter()
            .zip(v.iter())
            .map(|(a, w)| w.norm() / (lit::<T>(2.0) * a.re.abs()))
            .fold(T::zero(), T::max),
        _ => T::nan(),
    }
}

/// Holomorphic affine map `z -> M z + shift` sending the domain into the
/// product of left half-planes; distances there bound `K_D` from below.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineEmbedding<T: Real> {
    pub rows: Vec<CVec<T>>,
    pub shift: CVec<T>,
}

impl<T: Real> AffineEmbedding<T> {
    /// Built-in embedding for kinds that admit an obvious one.
    pub fn auto(domain: &ConvexDomain<T>) -> Option<Self> {
        let d = domain.dim();
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let identity: Vec<CVec<T>> = (0..d).map(|j| CVec::basis(d, j)).collect();
        match domain.kind() {
            DomainKind::LeftHalfSpaces => Some(AffineEmbedding {
                rows: identity,
                shift: CVec::zeros(d),
            }),
            // |z_j| < 1 forces Re z_j - 1 < 0.
            DomainKind::Ball | DomainKind::Polydisc => Some(AffineEmbedding {
                rows: identity,
                shift: CVec(vec![-one; d]),
            }),
            // Re(i z_0) = -Im z_0 < 0 and Re(z_j + i z_0) <= |z_j| - Im z_0 < 0.
            DomainKind::Siegel => {
                let rows = (0..d)
                    .map(|j| {
                        let mut r = CVec::zeros(d);
                        r[0] = i;
                        if j > 0 {
                            r[j] = one;
                        }
                        r
                    })
                    .collect();
                Some(AffineEmbedding {
                    rows,
                    shift: CVec::zeros(d),
                })
            }
            _ => None,
        }
    }

    /// Resolves a config choice, checking the witness maps into the target.
    pub fn from_choice(domain: &ConvexDomain<T>, choice: &EmbeddingChoice) -> Result<Option<Self>> {
        let e = match choice {
            EmbeddingChoice::Off => return Ok(None),
            EmbeddingChoice::Auto => return Ok(Self::auto(domain)),
            EmbeddingChoice::Affine { rows, shift } => AffineEmbedding {
                rows: rows.iter().map(|r| r.cast()).collect(),
                shift: shift.cast(),
            },
        };
        let d = domain.dim();
        if e.rows.len() != d {
            return Err(KobaError::DimensionMismatch {
                expected: d,
                found: e.rows.len(),
            });
        }
        for r in &e.rows {
            r.check_dim(d)?;
        }
        e.shift.check_dim(d)?;
        if !e.maps_inside(domain.witness()) {
            return Err(KobaError::InvalidInput(
                "embedding does not send the witness into {Re w_j < 0}".into(),
            ));
        }
        Ok(Some(e))
    }

    pub fn apply(&self, z: &CVec<T>) -> CVec<T> {
        CVec(
            self.rows
                .iter()
                .zip(self.shift.iter())
                .map(|(r, s)| r.iter().zip(z.iter()).fold(*s, |acc, (m, x)| acc + m * x))
                .collect(),
        )
    }

    fn maps_inside(&self, z: &CVec<T>) -> bool {
        self.apply(z).iter().all(|w| w.re < T::zero())
    }

    /// `K_H(Ax, Ay)`, or `None` if an image leaves the target.
    pub fn lower_bound(&self, x: &CVec<T>, y: &CVec<T>) -> Option<T> {
        let (ax, ay) = (self.apply(x), self.apply(y));
        if ax.iter().chain(ay.iter()).any(|w| !(w.re < T::zero())) {
            return None;
        }
        Some(half_spaces_distance(&ax, &ay))
    }
}
