//! Matrix encodings of certainty and doubt.
//!
//! `C°(p) = p·1ᵀ - 1·pᵀ` collects every pairwise margin, `C(p) = I + C°(p)`,
//! and the doubt matrix `D(p)` is the elementwise reciprocal of `C(p)` minus
//! the identity. `C(p)` is always invertible (identity plus a skew-symmetric
//! matrix), but its linear-algebra inverse is not a doubt score: at
//! `p = [0.5, 0.5]` it is the identity while `D(p)` is infinite off the
//! diagonal.

use std::ops::Index;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::scalar::Scalar;
use crate::score_core::ProbabilityVector;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Copy> SquareMatrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                data.push(f(i, k));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        self.data[i * self.n + k]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, k| self.get(k, i))
    }

    pub fn to_nested(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, k| if i == k { T::one() } else { T::zero() })
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> T {
        (0..self.n)
            .map(|k| (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, k).abs()))
            .fold(T::zero(), T::max)
    }

    /// Maximum row 1-norm.
    pub fn norm_inf(&self) -> T {
        self.rows()
            .map(|r| r.iter().fold(T::zero(), |acc, x| acc + x.abs()))
            .fold(T::zero(), T::max)
    }
}

impl<T: Copy> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;

    fn index(&self, (i, k): (usize, usize)) -> &T {
        &self.data[i * self.n + k]
    }
}

impl<T: Copy + Serialize> Serialize for SquareMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.rows())
    }
}

/// `C(p) = I + C°(p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct CertaintyMatrix<T>(SquareMatrix<T>);

impl<T: Scalar> CertaintyMatrix<T> {
    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        self.0.get(i, k)
    }

    /// Linear-algebra inverse, `None` on a zero pivot.
    pub fn inverse(&self) -> Option<SquareMatrix<T>> {
        Lu::factor(&self.0).map(|lu| lu.inverse())
    }
}

/// `D(p) = Inv(C(p)) - I`, elementwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct DoubtMatrix<T>(SquareMatrix<ExtendedReal<T>>);

impl<T: Scalar> DoubtMatrix<T> {
    pub fn matrix(&self) -> &SquareMatrix<ExtendedReal<T>> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.n
    }

    pub fn get(&self, i: usize, k: usize) -> ExtendedReal<T> {
        self.0.get(i, k)
    }

    /// Extended Chebyshev norm: the largest absolute entry, or infinity.
    pub fn max_abs(&self) -> ExtendedReal<T> {
        self.0
            .data
            .iter()
            .map(|d| d.abs())
            .fold(ExtendedReal::zero(), ExtendedReal::max)
    }
}

/// Result of [`is_invertible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invertibility<T> {
    pub invertible: bool,
    /// 1-norm condition number; infinite when not invertible.
    pub condition: T,
}

/// `p·1ᵀ - 1·pᵀ`, entry `(i, k)` is `p_i - p_k`.
pub fn certainty_offset_matrix<T: Scalar>(p: &ProbabilityVector<T>) -> SquareMatrix<T> {
    let e = p.entries();
    SquareMatrix::from_fn(e.len(), |i, k| e[i] - e[k])
}

pub fn certainty_matrix<T: Scalar>(p: &ProbabilityVector<T>) -> CertaintyMatrix<T> {
    let e = p.entries();
    CertaintyMatrix(SquareMatrix::from_fn(e.len(), |i, k| {
        if i == k {
            T::one()
        } else {
            e[i] - e[k]
        }
    }))
}

/// LU with partial pivoting; reports failure on an exactly zero pivot.
pub fn is_invertible<T: Scalar>(c: &CertaintyMatrix<T>) -> Invertibility<T> {
    match Lu::factor(&c.0) {
        Some(lu) => Invertibility {
            invertible: true,
            condition: c.0.norm_1() * lu.inverse().norm_1(),
        },
        None => Invertibility {
            invertible: false,
            condition: T::infinity(),
        },
    }
}

pub fn doubt_matrix<T: Scalar>(p: &ProbabilityVector<T>) -> DoubtMatrix<T> {
    let e = p.entries();
    DoubtMatrix(SquareMatrix::from_fn(e.len(), |i, k| {
        if i == k {
            ExtendedReal::zero()
        } else {
            ExtendedReal::recip_of(e[i] - e[k])
        }
    }))
}

/// `‖D(p)‖′∞`: one over the smallest gap between any two coordinates,
/// infinite when two coordinates coincide.
pub fn max_doubt_score<T: Scalar>(p: &ProbabilityVector<T>) -> Result<ExtendedReal<T>> {
    if p.len() < 2 {
        return Err(Error::invalid("max doubt needs at least 2 labels"));
    }
    Ok(doubt_matrix(p).max_abs())
}

/// Largest row 1-norm of `C(p)`.
pub fn row_l1_max<T: Scalar>(c: &CertaintyMatrix<T>) -> T {
    c.0.norm_inf()
}

struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(a: &SquareMatrix<T>) -> Option<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| {
                    lu[r * n + col]
                        .abs()
                        .partial_cmp(&lu[s * n + col].abs())
                        .expect("finite entries")
                })
                .expect("non-empty range");
            if lu[pivot_row * n + col] == T::zero() {
                return None;
            }
            if pivot_row != col {
                for k in 0..n {
                    lu.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for k in col + 1..n {
                    let upd = factor * lu[col * n + k];
                    lu[r * n + k] = lu[r * n + k] - upd;
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] = x[i] - self.lu[i * n + k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] = x[i] - self.lu[i * n + k] * x[k];
            }
            x[i] = x[i] / self.lu[i * n + i];
        }
        x
    }

    fn inverse(&self) -> SquareMatrix<T> {
        let n = self.n;
        let cols: Vec<Vec<T>> = (0..n)
            .map(|k| {
                let e: Vec<T> = (0..n)
                    .map(|i| if i == k { T::one() } else { T::zero() })
                    .collect();
                self.solve(&e)
            })
            .collect();
        SquareMatrix::from_fn(n, |i, k| cols[k][i])
    }
}
