//! Finite discrete distributions over an ordered numeric support.
//!
//! All divergences and surprisals use the natural logarithm. A value the
//! second distribution rules out but the first does not yields an infinite
//! divergence, carried as [`ExtReal::Infinity`] rather than an error.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance for probability sums and value matching.
pub const PROB_TOL: f64 = 1e-9;

/// A nonnegative real extended with `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The value as an `f64`, `f64::INFINITY` for the infinite case.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    /// Negated value, `-inf` for the infinite case. Speaker utilities are
    /// negated divergences.
    pub fn neg(self) -> f64 {
        -self.to_f64()
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinity => None,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinity,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinity) => Some(Ordering::Less),
            (ExtReal::Infinity, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Infinity, ExtReal::Infinity) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::Infinity => serializer.serialize_str("inf"),
        }
    }
}

/// Serializes an `f64` that may be infinite (utilities) as a number or as
/// the strings `"inf"` / `"-inf"`.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn serialize_extended_vec<S: Serializer>(
    v: &[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct Ext(f64);
    impl Serialize for Ext {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_extended(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Ext(*x))?;
    }
    seq.end()
}

/// A probability distribution over a strictly increasing list of values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dist {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl Dist {
    /// Validates and wraps an explicit distribution.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                found: probs.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::InvalidDist("empty support".into()));
        }
        if support.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDist("non-finite support value".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDist("support is not strictly increasing".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDist(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDist(format!("probabilities sum to {total}")));
        }
        Ok(Dist { support, probs })
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; support.len()];
        normalize(&w, &support)
    }

    pub fn point_mass(support: Vec<f64>, at: f64) -> Result<Self> {
        let idx = index_of(&support, at).ok_or(Error::ValueNotInSupport(at))?;
        let mut w = vec![0.0; support.len()];
        w[idx] = 1.0;
        Dist::new(support, w)
    }

    /// Distribution over the indices `0..probs.len()`.
    pub fn over_indices(probs: Vec<f64>) -> Result<Self> {
        let support = (0..probs.len()).map(|i| i as f64).collect();
        Dist::new(support, probs)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index_of(&self, value: f64) -> Option<usize> {
        index_of(&self.support, value)
    }

    /// Probability of a support value, `None` if the value is off-support.
    pub fn prob_of(&self, value: f64) -> Option<f64> {
        self.index_of(value).map(|i| self.probs[i])
    }

    /// True iff this is a point mass.
    pub fn is_point_mass(&self) -> bool {
        self.probs.iter().filter(|p| **p > PROB_TOL).count() == 1
    }

    /// Index of the largest probability (first on ties).
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn same_support(&self, other: &Dist) -> bool {
        self.support.len() == other.support.len()
            && self
                .support
                .iter()
                .zip(&other.support)
                .all(|(a, b)| (a - b).abs() <= PROB_TOL)
    }

    /// Max-norm distance between probability vectors on a shared support.
    pub fn max_abs_diff(&self, other: &Dist) -> Result<f64> {
        if !self.same_support(other) {
            return Err(Error::SupportMismatch);
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Re-expresses `self` on `grid` by exact value match. Every positive-mass
    /// value must appear in `grid`; grid values absent from `self` get 0.
    pub fn regrid(&self, grid: &[f64]) -> Result<Dist> {
        let mut probs = vec![0.0; grid.len()];
        for (v, p) in self.support.iter().zip(&self.probs) {
            match index_of(grid, *v) {
                Some(i) => probs[i] = *p,
                None if *p == 0.0 => {}
                None => return Err(Error::SupportMismatch),
            }
        }
        Dist::new(grid.to_vec(), probs)
    }
}

/// Index of `value` in a sorted support, matching within [`PROB_TOL`].
pub fn index_of(support: &[f64], value: f64) -> Option<usize> {
    support.iter().position(|v| (v - value).abs() <= PROB_TOL)
}

/// Evenly spaced grid from `min` to `max` inclusive.
pub fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(Error::InvalidArgument(format!(
            "bad grid min={min} max={max} step={step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    // Snap to a short decimal so values like 0.1*3 print as 0.3.
    Ok((0..=n)
        .map(|i| {
            let v = min + step * i as f64;
            (v * 1e9).round() / 1e9
        })
        .collect())
}

/// Normalizes nonnegative weights into a distribution on `support`.
pub fn normalize(weights: &[f64], support: &[f64]) -> Result<Dist> {
    if weights.len() != support.len() {
        return Err(Error::LengthMismatch {
            expected: support.len(),
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidDist(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    Dist::new(
        support.to_vec(),
        weights.iter().map(|w| w / total).collect(),
    )
}

/// `D(p || q) = sum_k p(k) ln(p(k)/q(k))` with `0 ln(0/q) = 0`.
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<ExtReal> {
    if !p.same_support(q) {
        return Err(Error::SupportMismatch);
    }
    let mut total = 0.0;
    for (pk, qk) in p.probs.iter().zip(&q.probs) {
        if *pk == 0.0 {
            continue;
        }
        if *qk == 0.0 {
            return Ok(ExtReal::Infinity);
        }
        total += pk * (pk / qk).ln();
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(ExtReal::Finite(total.max(0.0)))
}

/// `-ln p(k)`.
pub fn surprisal(p: &Dist, value: f64) -> Result<ExtReal> {
    let pk = p.prob_of(value).ok_or(Error::ValueNotInSupport(value))?;
    if pk == 0.0 {
        Ok(ExtReal::Infinity)
    } else {
        Ok(ExtReal::Finite(-pk.ln()))
    }
}

/// SoftMax over utilities: `p_i ∝ exp(lambda * u_i)`, `-inf` entries get 0.
pub fn softmax(utilities: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "softmax lambda must be positive, got {lambda}"
        )));
    }
    if utilities.iter().any(|u| u.is_nan() || *u == f64::INFINITY) {
        return Err(Error::InvalidArgument("utilities must be finite or -inf".into()));
    }
    let max = utilities
        .iter()
        .copied()
        .filter(|u| u.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllUtilitiesNegativeInfinite);
    }
    let weights: Vec<f64> = utilities
        .iter()
        .map(|u| {
            if u.is_finite() {
                (lambda * (u - max)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}
