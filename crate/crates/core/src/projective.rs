//! Certainty on the real projective line.
//!
//! On the ordered simplex (`p_1 ≥ p_2 ≥ …`) each label `i ≥ 2` maps to the
//! homogeneous point `[p_1 - p_i : 1]`. For a positive gap this is the same
//! point as `[1 : 1/(p_1 - p_i)]`, so certainty and doubt are two charts of
//! one point; a tie lands on the point at infinity `[0 : 1]`.
//!
//! The circle is identified with ℝP¹ through stereographic projection:
//! `θ ↦ [1 - sin θ : cos θ]` (or `[cos θ : 1 + sin θ]` at `θ = π/2`), with
//! inverse `[a : b] ↦ arcsin((b² - a²)/(a² + b²))`, ranging over `[-π/2, π/2]`.
//! The forward map is 2-to-1 on the full circle.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::score_core::ProbabilityVector;

/// A point `[a : b]` of ℝP¹ stored as its unit-norm representative with the
/// first nonzero coordinate positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rp1Point<T> {
    a: T,
    b: T,
}

impl<T: Scalar> Rp1Point<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("homogeneous coordinates must be finite"));
        }
        if a == T::zero() && b == T::zero() {
            return Err(Error::invalid("[0 : 0] is not a projective point"));
        }
        let norm = a.hypot(b);
        let (mut a, mut b) = (a / norm, b / norm);
        if a < T::zero() || (a == T::zero() && b < T::zero()) {
            a = -a;
            b = -b;
        }
        // keep +0.0 so that serialization is canonical
        Ok(Self {
            a: a + T::zero(),
            b: b + T::zero(),
        })
    }

    /// `[1 : 0]`, the image of the top label.
    pub fn origin() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
        }
    }

    /// `[0 : 1]`.
    pub fn infinity() -> Self {
        Self {
            a: T::zero(),
            b: T::one(),
        }
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn coords(&self) -> [T; 2] {
        [self.a, self.b]
    }

    pub fn is_infinity(&self) -> bool {
        self.a == T::zero()
    }

    /// `a₁b₂ - a₂b₁` on the normalized representatives.
    pub fn cross(&self, other: &Self) -> T {
        self.a * other.b - other.a * self.b
    }

    /// Projective equality within `T::PROJECTIVE_TOLERANCE`.
    pub fn projectively_eq(&self, other: &Self) -> bool {
        self.cross(other).abs() <= T::lit(T::PROJECTIVE_TOLERANCE)
    }
}

impl<T: Scalar> Serialize for Rp1Point<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pair = [
            self.a.to_f64().unwrap_or(f64::NAN),
            self.b.to_f64().unwrap_or(f64::NAN),
        ];
        pair.serialize(serializer)
    }
}

pub fn rp1_new<T: Scalar>(a: T, b: T) -> Result<Rp1Point<T>> {
    Rp1Point::new(a, b)
}

/// Image of an ordered probability vector in `(ℝP¹)^N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct CertaintyProjection<T> {
    pub points: Vec<Rp1Point<T>>,
}

/// `f_1 = [1 : 0]`, `f_i = [p_1 - p_i : 1]`.
///
/// Fails unless `p` is sorted in non-increasing order; see
/// [`sort_descending`](crate::score_core::sort_descending).
pub fn certainty_projection<T: Scalar>(p: &ProbabilityVector<T>) -> Result<CertaintyProjection<T>> {
    let e = p.entries();
    if let Some(i) = e.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::invalid(format!(
            "input is not sorted in descending order at position {}",
            i + 1
        )));
    }
    let top = e[0];
    let mut points = Vec::with_capacity(e.len());
    points.push(Rp1Point::origin());
    for &x in &e[1..] {
        points.push(Rp1Point::new(top - x, T::one())?);
    }
    Ok(CertaintyProjection { points })
}

/// Stereographic projection `S¹ → ℝP¹`.
pub fn angle_to_rp1<T: Scalar>(theta: T) -> Result<Rp1Point<T>> {
    if !theta.is_finite() {
        return Err(Error::invalid("angle must be finite"));
    }
    let (s, c) = theta.sin_cos();
    let a = T::one() - s;
    if a == T::zero() {
        // θ ≡ π/2: first chart collapses, use [cos θ : 1 + sin θ]
        Rp1Point::new(c, T::one() + s)
    } else {
        Rp1Point::new(a, c)
    }
}

/// Inverse stereographic projection `ℝP¹ → [-π/2, π/2]`.
///
/// Evaluated as `2·atan2(|b|, |a|) - π/2`, which equals
/// `arcsin((b² - a²)/(a² + b²))` but stays accurate near `±π/2` where the
/// arcsin form loses half its digits.
pub fn rp1_to_angle<T: Scalar>(pt: &Rp1Point<T>) -> T {
    if pt.is_infinity() {
        return T::FRAC_PI_2();
    }
    let two = T::one() + T::one();
    two * pt.b.abs().atan2(pt.a.abs()) - T::FRAC_PI_2()
}
