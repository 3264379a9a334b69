//! Doubt costs and their gradients.
//!
//! With `P = ∏_{i≠j} g_i` the product of the off-argmax margins, the cost is
//!
//! ```text
//! θ = arcsin((1 - P²) / (1 + P²)) = π/2 - 2·atan|P|
//! ```
//!
//! i.e. the inverse stereographic projection of `[P : 1]`. It is 0 when every
//! margin is 1, `π/2` when some margin vanishes, and (for logits, where `|P|`
//! can exceed 1) tends to `-π/2` as the margins grow. The atan form is used
//! for evaluation; it is exact at both boundaries and its derivative
//! `dθ/d|P| = -2/(1 + P²)` is bounded, so no clamping is needed.
//!
//! Gradients hold the argmax `j` fixed. Where `P = 0` the cost has a kink
//! and the gradient is reported as zero with [`Gradient::degenerate`] set.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::score_core::{LogitVector, ProbabilityVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostValue<T> {
    /// Radians in `[-π/2, π/2]`.
    pub theta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub entries: Vec<T>,
    /// Set when the cost is not differentiable at the input (a zero margin);
    /// `entries` is then all zeros.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeLoss<T> {
    /// `cross_entropy + λ·doubt_cost`.
    pub loss: T,
    pub cross_entropy: T,
    pub doubt_cost: T,
    pub gradient: Gradient<T>,
}

fn margin_product<T: Scalar>(v: &[T], j: usize) -> T {
    let top = v[j];
    v.iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .fold(T::one(), |acc, (_, &x)| acc * (top - x))
}

fn theta_of_product<T: Scalar>(prod: T) -> T {
    let two = T::one() + T::one();
    two * T::one().atan2(prod.abs()) - T::FRAC_PI_2()
}

fn product_gradient<T: Scalar>(v: &[T], j: usize) -> Gradient<T> {
    let n = v.len();
    let top = v[j];
    let idx: Vec<usize> = (0..n).filter(|&i| i != j).collect();
    let gaps: Vec<T> = idx.iter().map(|&i| top - v[i]).collect();
    let prod = gaps.iter().fold(T::one(), |acc, &g| acc * g);
    if prod == T::zero() {
        return Gradient {
            entries: vec![T::zero(); n],
            degenerate: true,
        };
    }

    // leave-one-out products without division
    let m = gaps.len();
    let mut prefix = vec![T::one(); m + 1];
    for k in 0..m {
        prefix[k + 1] = prefix[k] * gaps[k];
    }
    let mut suffix = vec![T::one(); m + 1];
    for k in (0..m).rev() {
        suffix[k] = suffix[k + 1] * gaps[k];
    }

    let two = T::one() + T::one();
    let outer = -two * prod.signum() / (T::one() + prod * prod);
    let mut entries = vec![T::zero(); n];
    let mut d_top = T::zero();
    for (k, &i) in idx.iter().enumerate() {
        let others = prefix[k] * suffix[k + 1];
        // ∂g_i/∂v_i = -1, ∂g_i/∂v_j = +1
        entries[i] = -outer * others;
        d_top = d_top + others;
    }
    entries[j] = outer * d_top;
    Gradient {
        entries,
        degenerate: false,
    }
}

/// `∏_{i≠j} χ_i`; zero exactly when the top probability is tied.
pub fn certainty_product<T: Scalar>(p: &ProbabilityVector<T>) -> T {
    margin_product(p.entries(), p.argmax())
}

/// `∏_{i≠j} ξ_i` over logit margins.
pub fn raw_certainty_product<T: Scalar>(y: &LogitVector<T>) -> T {
    margin_product(y.entries(), y.argmax())
}

/// Doubt cost on probabilities, in `[0, π/2]`.
pub fn doubt_cost<T: Scalar>(p: &ProbabilityVector<T>) -> CostValue<T> {
    CostValue {
        theta: theta_of_product(certainty_product(p)),
    }
}

/// Doubt cost against a caller-chosen label `j` (batch re-scoring).
pub fn doubt_cost_at<T: Scalar>(p: &ProbabilityVector<T>, j: usize) -> Result<CostValue<T>> {
    check_label(p.len(), j)?;
    Ok(CostValue {
        theta: theta_of_product(margin_product(p.entries(), j)),
    })
}

pub fn raw_doubt_cost_at<T: Scalar>(y: &LogitVector<T>, j: usize) -> Result<CostValue<T>> {
    check_label(y.len(), j)?;
    Ok(CostValue {
        theta: theta_of_product(margin_product(y.entries(), j)),
    })
}

fn check_label(len: usize, j: usize) -> Result<()> {
    if j >= len {
        return Err(Error::invalid(format!(
            "label {j} out of range for {len} classes"
        )));
    }
    Ok(())
}

/// Doubt cost on logits, in `[-π/2, π/2]`.
pub fn raw_doubt_cost<T: Scalar>(y: &LogitVector<T>) -> CostValue<T> {
    CostValue {
        theta: theta_of_product(raw_certainty_product(y)),
    }
}

/// `∂θ/∂p_k`, treating each coordinate as free.
pub fn doubt_cost_gradient<T: Scalar>(p: &ProbabilityVector<T>) -> Gradient<T> {
    product_gradient(p.entries(), p.argmax())
}

/// `∂θ/∂y_k`; sums to zero since the cost only sees differences.
pub fn raw_doubt_cost_gradient<T: Scalar>(y: &LogitVector<T>) -> Gradient<T> {
    product_gradient(y.entries(), y.argmax())
}

/// Softmax cross-entropy `-ln softmax(y)[target]` and its gradient
/// `softmax(y) - e_target`.
pub fn cross_entropy<T: Scalar>(y: &LogitVector<T>, target: usize) -> Result<(T, Vec<T>)> {
    check_label(y.len(), target)?;
    let loss = T::zero() - y.log_softmax()[target];
    let mut grad = y.softmax().into_vec();
    grad[target] = grad[target] - T::one();
    Ok((loss, grad))
}

/// `cross_entropy(y, target) + λ·raw_doubt_cost(y)` with its gradient.
///
/// With `λ = 0` the result is the plain cross-entropy, bit for bit.
pub fn composite_loss<T: Scalar>(y: &LogitVector<T>, target: usize, lambda: T) -> Result<CompositeLoss<T>> {
    if lambda < T::zero() || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let (ce, mut grad) = cross_entropy(y, target)?;
    let theta = raw_doubt_cost(y).theta;
    if lambda == T::zero() {
        let degenerate = raw_certainty_product(y) == T::zero();
        return Ok(CompositeLoss {
            loss: ce,
            cross_entropy: ce,
            doubt_cost: theta,
            gradient: Gradient {
                entries: grad,
                degenerate,
            },
        });
    }
    let penalty = raw_doubt_cost_gradient(y);
    for (g, d) in grad.iter_mut().zip(&penalty.entries) {
        *g = *g + lambda * *d;
    }
    Ok(CompositeLoss {
        loss: ce + lambda * theta,
        cross_entropy: ce,
        doubt_cost: theta,
        gradient: Gradient {
            entries: grad,
            degenerate: penalty.degenerate,
        },
    })
}
