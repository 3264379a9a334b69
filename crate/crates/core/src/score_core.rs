//! Pairwise certainty and doubt on probability and logit vectors.
//!
//! For a vector `v` with predicted label `j`, the certainty of label `j` over
//! label `i` is the margin `v[j] - v[i]` and the doubt is its reciprocal. The
//! predicted label itself gets certainty 1 and doubt 0. On probabilities the
//! off-argmax certainties lie in `[0, max p]` and the doubts in
//! `[1 / max p, ∞]`; on logits the margins are unbounded.

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::scalar::Scalar;

/// A point of the probability simplex with at least two labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> ProbabilityVector<T> {
    /// Validates `entries` against the simplex.
    ///
    /// Entries slightly below zero (down to `-T::NEGATIVE_SLACK`) are clamped
    /// to zero; the sum must be within `T::SIMPLEX_TOLERANCE` of one.
    pub fn new(mut entries: Vec<T>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid(format!(
                "probability vector needs at least 2 entries, got {}",
                entries.len()
            )));
        }
        let slack = T::lit(T::NEGATIVE_SLACK);
        for (i, x) in entries.iter_mut().enumerate() {
            if !x.is_finite() {
                return Err(Error::invalid(format!("probability {i} is not finite")));
            }
            if *x < T::zero() {
                if *x < -slack {
                    return Err(Error::invalid(format!("probability {i} is negative: {x}")));
                }
                *x = T::zero();
            }
        }
        let sum = entries.iter().fold(T::zero(), |acc, &x| acc + x);
        if (sum - T::one()).abs() > T::lit(T::SIMPLEX_TOLERANCE) {
            return Err(Error::invalid(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest probability, `p̂`.
    pub fn max_prob(&self) -> T {
        self.entries[self.argmax()]
    }

    pub fn argmax(&self) -> usize {
        first_argmax(&self.entries)
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }
}

/// Unnormalized class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> LogitVector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid(format!(
                "logit vector needs at least 2 entries, got {}",
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("logit {i} is not finite")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn argmax(&self) -> usize {
        first_argmax(&self.entries)
    }

    /// Adds `c` to every entry.
    pub fn shifted(&self, c: T) -> Result<Self> {
        Self::new(self.entries.iter().map(|&x| x + c).collect())
    }

    /// Numerically stable softmax (max-subtracted).
    pub fn softmax(&self) -> ProbabilityVector<T> {
        let m = self.entries[self.argmax()];
        let exps: Vec<T> = self.entries.iter().map(|&y| (y - m).exp()).collect();
        let sum = exps.iter().fold(T::zero(), |acc, &e| acc + e);
        ProbabilityVector {
            entries: exps.into_iter().map(|e| e / sum).collect(),
        }
    }

    /// `ln softmax(y)`, computed without forming the probabilities.
    pub fn log_softmax(&self) -> Vec<T> {
        let m = self.entries[self.argmax()];
        let sum = self.entries.iter().fold(T::zero(), |acc, &y| acc + (y - m).exp());
        let lse = m + sum.ln();
        self.entries.iter().map(|&y| y - lse).collect()
    }
}

/// Output of the certainty maps.
#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyVector<T> {
    pub scores: Vec<T>,
    pub argmax_index: usize,
}

impl<T: Scalar> CertaintyVector<T> {
    /// Scores at every index except the argmax.
    pub fn off_argmax(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        let j = self.argmax_index;
        self.scores
            .iter()
            .copied()
            .enumerate()
            .filter(move |&(i, _)| i != j)
    }
}

/// Output of the doubt maps.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubtVector<T> {
    pub scores: Vec<ExtendedReal<T>>,
    pub argmax_index: usize,
}

impl<T: Scalar> DoubtVector<T> {
    pub fn off_argmax(&self) -> impl Iterator<Item = (usize, ExtendedReal<T>)> + '_ {
        let j = self.argmax_index;
        self.scores
            .iter()
            .copied()
            .enumerate()
            .filter(move |&(i, _)| i != j)
    }

    /// Largest off-argmax doubt; infinity for a tied maximum.
    pub fn max(&self) -> ExtendedReal<T> {
        self.off_argmax()
            .map(|(_, d)| d)
            .fold(ExtendedReal::zero(), ExtendedReal::max)
    }
}

fn first_argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax_index<T: Scalar>(v: &[T]) -> Result<usize> {
    if v.len() < 2 {
        return Err(Error::invalid(format!(
            "argmax needs at least 2 entries, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("argmax of a vector containing NaN"));
    }
    Ok(first_argmax(v))
}

/// Sorts into the ordered simplex (non-increasing entries).
///
/// The returned permutation maps output positions to input positions:
/// `sorted[k] == p[perm[k]]`. The sort is stable.
pub fn sort_descending<T: Scalar>(p: &ProbabilityVector<T>) -> (ProbabilityVector<T>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..p.len()).collect();
    perm.sort_by(|&a, &b| p.entries[b].partial_cmp(&p.entries[a]).expect("validated finite"));
    let entries = perm.iter().map(|&k| p.entries[k]).collect();
    (ProbabilityVector { entries }, perm)
}

fn check_index(len: usize, j: usize) -> Result<()> {
    if j >= len {
        Err(Error::invalid(format!("index {j} out of range for length {len}")))
    } else {
        Ok(())
    }
}

fn margins<T: Scalar>(v: &[T], j: usize) -> CertaintyVector<T> {
    let top = v[j];
    let scores = v
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == j { T::one() } else { top - x })
        .collect();
    CertaintyVector {
        scores,
        argmax_index: j,
    }
}

fn reciprocal_margins<T: Scalar>(v: &[T], j: usize) -> DoubtVector<T> {
    let top = v[j];
    let scores = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == j {
                ExtendedReal::zero()
            } else {
                ExtendedReal::recip_of(top - x)
            }
        })
        .collect();
    DoubtVector {
        scores,
        argmax_index: j,
    }
}

pub fn pairwise_certainty<T: Scalar>(p: &ProbabilityVector<T>) -> CertaintyVector<T> {
    margins(&p.entries, p.argmax())
}

/// Certainty relative to a caller-chosen label `j`. Margins against labels
/// scoring above `j` come out negative.
pub fn pairwise_certainty_at<T: Scalar>(p: &ProbabilityVector<T>, j: usize) -> Result<CertaintyVector<T>> {
    check_index(p.len(), j)?;
    Ok(margins(&p.entries, j))
}

pub fn pairwise_doubt<T: Scalar>(p: &ProbabilityVector<T>) -> DoubtVector<T> {
    reciprocal_margins(&p.entries, p.argmax())
}

pub fn pairwise_doubt_at<T: Scalar>(p: &ProbabilityVector<T>, j: usize) -> Result<DoubtVector<T>> {
    check_index(p.len(), j)?;
    Ok(reciprocal_margins(&p.entries, j))
}

/// Logit margins `y[j] - y[i]`, equal to log-probability differences.
pub fn raw_certainty<T: Scalar>(y: &LogitVector<T>) -> CertaintyVector<T> {
    margins(&y.entries, y.argmax())
}

pub fn raw_certainty_at<T: Scalar>(y: &LogitVector<T>, j: usize) -> Result<CertaintyVector<T>> {
    check_index(y.len(), j)?;
    Ok(margins(&y.entries, j))
}

pub fn raw_doubt<T: Scalar>(y: &LogitVector<T>) -> DoubtVector<T> {
    reciprocal_margins(&y.entries, y.argmax())
}

pub fn raw_doubt_at<T: Scalar>(y: &LogitVector<T>, j: usize) -> Result<DoubtVector<T>> {
    check_index(y.len(), j)?;
    Ok(reciprocal_margins(&y.entries, j))
}

/// `-ln` of each pairwise certainty (natural log).
pub fn neg_log_certainty<T: Scalar>(p: &ProbabilityVector<T>) -> DoubtVector<T> {
    neg_log_of(&margins(&p.entries, p.argmax()))
}

pub fn neg_log_certainty_at<T: Scalar>(p: &ProbabilityVector<T>, j: usize) -> Result<DoubtVector<T>> {
    check_index(p.len(), j)?;
    Ok(neg_log_of(&margins(&p.entries, j)))
}

fn neg_log_of<T: Scalar>(c: &CertaintyVector<T>) -> DoubtVector<T> {
    let j = c.argmax_index;
    let scores = c
        .scores
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == j {
                ExtendedReal::zero()
            } else if x == T::zero() {
                ExtendedReal::Infinity
            } else {
                // `0 - ln` rather than `-ln` so that a margin of 1 gives +0.0
                ExtendedReal::from(T::zero() - x.ln())
            }
        })
        .collect();
    DoubtVector {
        scores,
        argmax_index: j,
    }
}
