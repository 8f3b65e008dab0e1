//! Points and tangent vectors of `C^d`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KobaError, Result};
use crate::scalar::{lit, Real};

/// A point (or tangent vector) of `C^d`, stored as `d` complex coordinates.
///
/// Equivalently `2d` real coordinates `(Re z_0, Im z_0, Re z_1, ...)`; the
/// `real_*` accessors expose that view.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CVec<T: Real>(pub Vec<Complex<T>>);

impl<T: Real> CVec<T> {
    pub fn new(coords: Vec<Complex<T>>) -> Self {
        CVec(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        CVec(vec![Complex::new(T::zero(), T::zero()); dim])
    }

    /// The `j`-th standard basis vector `e_j`.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[j] = Complex::new(T::one(), T::zero());
        v
    }

    /// Builds a vector from `2d` real coordinates.
    pub fn from_real(coords: &[T]) -> Self {
        assert!(coords.len().is_multiple_of(2), "odd number of real coordinates");
        CVec(
            coords
                .chunks_exact(2)
                .map(|c| Complex::new(c[0], c[1]))
                .collect(),
        )
    }

    /// Builds a vector from `(re, im)` pairs given as `f64`.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        CVec(
            pairs
                .iter()
                .map(|&(re, im)| Complex::new(lit(re), lit(im)))
                .collect(),
        )
    }

    /// A one-dimensional vector holding a single complex number.
    pub fn scalar(re: f64, im: f64) -> Self {
        Self::from_pairs(&[(re, im)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn real_dim(&self) -> usize {
        2 * self.0.len()
    }

    pub fn real(&self, k: usize) -> T {
        let c = self.0[k / 2];
        if k.is_multiple_of(2) {
            c.re
        } else {
            c.im
        }
    }

    pub fn real_mut(&mut self, k: usize) -> &mut T {
        let c = &mut self.0[k / 2];
        if k.is_multiple_of(2) {
            &mut c.re
        } else {
            &mut c.im
        }
    }

    pub fn to_real(&self) -> Vec<T> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.0.iter()
    }

    /// Hermitian product `<a, z> = sum conj(a_j) z_j`.
    ///
    /// Its real part is the Euclidean inner product of the real coordinate
    /// vectors.
    pub fn dot(&self, other: &Self) -> Complex<T> {
        self.0
            .iter()
            .zip(&other.0)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, z)| {
                acc + a.conj() * z
            })
    }

    /// Real inner product of the underlying `R^{2d}` vectors.
    pub fn real_dot(&self, other: &Self) -> T {
        self.dot(other).re
    }

    pub fn norm_sqr(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    pub fn dist(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_sqr())
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0
            .iter()
            .all(|c| c.re == T::zero() && c.im == T::zero())
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self.scale(T::one() / n))
        } else {
            None
        }
    }

    pub fn scale(&self, s: T) -> Self {
        CVec(self.0.iter().map(|c| c * s).collect())
    }

    pub fn cscale(&self, s: Complex<T>) -> Self {
        CVec(self.0.iter().map(|c| c * s).collect())
    }

    /// `self + s * dir`.
    pub fn add_scaled(&self, s: T, dir: &Self) -> Self {
        CVec(self.0.iter().zip(&dir.0).map(|(a, b)| a + b * s).collect())
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        CVec(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + (b - a) * t)
                .collect(),
        )
    }

    /// Converts every coordinate into another scalar type.
    pub fn cast<U: Real>(&self) -> CVec<U> {
        CVec(
            self.0
                .iter()
                .map(|c| {
                    Complex::new(
                        U::from(c.re).expect("castable"),
                        U::from(c.im).expect("castable"),
                    )
                })
                .collect(),
        )
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(KobaError::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        if !self.is_finite() {
            return Err(KobaError::InvalidInput(
                "vector has non-finite coordinates".into(),
            ));
        }
        Ok(())
    }
}

impl<T: Real> Index<usize> for CVec<T> {
    type Output = Complex<T>;
    fn index(&self, j: usize) -> &Complex<T> {
        &self.0[j]
    }
}

impl<T: Real> IndexMut<usize> for CVec<T> {
    fn index_mut(&mut self, j: usize) -> &mut Complex<T> {
        &mut self.0[j]
    }
}

impl<'a, T: Real> Add<&'a CVec<T>> for &'a CVec<T> {
    type Output = CVec<T>;
    fn add(self, rhs: &'a CVec<T>) -> CVec<T> {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a, T: Real> Sub<&'a CVec<T>> for &'a CVec<T> {
    type Output = CVec<T>;
    fn sub(self, rhs: &'a CVec<T>) -> CVec<T> {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl<T: Real> Add for CVec<T> {
    type Output = CVec<T>;
    fn add(self, rhs: CVec<T>) -> CVec<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for CVec<T> {
    type Output = CVec<T>;
    fn sub(self, rhs: CVec<T>) -> CVec<T> {
        &self - &rhs
    }
}

impl<T: Real> AddAssign<&CVec<T>> for CVec<T> {
    fn add_assign(&mut self, rhs: &CVec<T>) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl<T: Real> SubAssign<&CVec<T>> for CVec<T> {
    fn sub_assign(&mut self, rhs: &CVec<T>) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
    }
}

impl<T: Real> Mul<T> for &CVec<T> {
    type Output = CVec<T>;
    fn mul(self, s: T) -> CVec<T> {
        self.scale(s)
    }
}

impl<T: Real> Neg for &CVec<T> {
    type Output = CVec<T>;
    fn neg(self) -> CVec<T> {
        CVec(self.0.iter().map(|c| -c).collect())
    }
}

// JSON encoding: a list of `[re, im]` pairs.
impl<T: Real> Serialize for CVec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[T; 2]> = self.0.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for CVec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[T; 2]> = Vec::deserialize(d)?;
        Ok(CVec(
            pairs
                .into_iter()
                .map(|[re, im]| Complex::new(re, im))
                .collect(),
        ))
    }
}

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}
