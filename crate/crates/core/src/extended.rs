//! Reals extended by a single point at infinity.
//!
//! Doubt is the reciprocal of a margin, so an exact tie produces a value that
//! is not a real number. [`ExtendedReal`] carries that value explicitly
//! instead of relying on IEEE infinities, which keeps `NaN` out of the score
//! path (`inf - inf`, `0 * inf`) and gives the serializer a single token.
//!
//! The infinity is unsigned: ties are detected as an exact zero difference,
//! and `x - x` is `+0.0` for every finite `x`, so no signed infinity is ever
//! produced by the score functions.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite real or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal<T> {
    Finite(T),
    Infinity,
}

impl<T: Scalar> ExtendedReal<T> {
    /// Wraps a float. `NaN` is rejected; IEEE infinities map to [`Infinity`](Self::Infinity).
    pub fn new(x: T) -> Result<Self> {
        if x.is_nan() {
            Err(Error::invalid("NaN is not an extended real"))
        } else if x.is_infinite() {
            Ok(ExtendedReal::Infinity)
        } else {
            Ok(ExtendedReal::Finite(x))
        }
    }

    pub fn zero() -> Self {
        ExtendedReal::Finite(T::zero())
    }

    /// `1/x` with `1/0 = ∞` and `1/∞ = 0`.
    pub fn recip_of(x: T) -> Self {
        if x == T::zero() {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(x.recip())
        }
    }

    pub fn recip(self) -> Self {
        match self {
            ExtendedReal::Finite(x) => Self::recip_of(x),
            ExtendedReal::Infinity => Self::zero(),
        }
    }

    pub fn abs(self) -> Self {
        match self {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(x.abs()),
            ExtendedReal::Infinity => ExtendedReal::Infinity,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_infinite()
    }

    pub fn finite(self) -> Option<T> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::Infinity => None,
        }
    }

    /// IEEE view of the value; the point at infinity becomes `+inf`.
    pub fn to_float(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }

    /// Larger of two values, with infinity above every finite value.
    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl<T: Scalar> PartialOrd for ExtendedReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Infinity, Infinity) => Some(Ordering::Equal),
            (Infinity, Finite(_)) => Some(Ordering::Greater),
            (Finite(_), Infinity) => Some(Ordering::Less),
        }
    }
}

impl<T: Scalar> From<T> for ExtendedReal<T> {
    /// Lossy for `NaN`, which is mapped to infinity; use [`ExtendedReal::new`] to reject it.
    fn from(x: T) -> Self {
        ExtendedReal::new(x).unwrap_or(ExtendedReal::Infinity)
    }
}

impl<T: Scalar> fmt::Display for ExtendedReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => fmt::Display::fmt(x, f),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

impl<T: Scalar> Serialize for ExtendedReal<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => serializer.serialize_f64(x.to_f64().unwrap_or(f64::NAN)),
            ExtendedReal::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ExtendedReal<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor<T>(std::marker::PhantomData<T>);

        impl<T: Scalar> Visitor<'_> for ExtVisitor<T> {
            type Value = ExtendedReal<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                let x = T::from_f64(v).ok_or_else(|| E::custom("value out of range"))?;
                ExtendedReal::new(x).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                parse_token(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtVisitor(std::marker::PhantomData))
    }
}

/// Parses the text form used in JSON strings and CSV cells.
pub fn parse_token<T: Scalar>(s: &str) -> Result<ExtendedReal<T>> {
    match s.trim() {
        "inf" | "+inf" | "-inf" => Ok(ExtendedReal::Infinity),
        t => {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::invalid(format!("not an extended real: {t:?}")))?;
            let x = T::from_f64(v).ok_or_else(|| Error::invalid("value out of range"))?;
            ExtendedReal::new(x)
        }
    }
}
