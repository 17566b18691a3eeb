use std::ops::Deref;

use super::RngStream;
use crate::{Error, Result};

/// Tolerance on `|Σq − 1|` for a valid probability vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over `N` classes: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::domain("simplex vector must be nonempty"));
        }
        if let Some(bad) = q.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::domain(format!(
                "simplex entries must be finite and nonnegative, got {bad}"
            )));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!(
                "simplex entries sum to {sum}, not 1"
            )));
        }
        Ok(Self(q))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("simplex vector must be nonempty"));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::domain(format!(
                "one-hot index {index} out of range {n}"
            )));
        }
        let mut q = vec![0.0; n];
        q[index] = 1.0;
        Ok(Self(q))
    }

    /// Normalizes nonnegative weights; `None` when they sum to zero.
    pub(crate) fn normalized(weights: &[f64]) -> Option<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return None;
        }
        Some(Self(weights.iter().map(|w| w / sum).collect()))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for SimplexVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One draw from `Gamma(shape, 1)`.
///
/// Marsaglia-Tsang squeeze for `shape >= 1`; smaller shapes use the boost
/// `Gamma(a) = Gamma(a + 1) · U^(1/a)`.
pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::domain(format!(
            "gamma shape must be positive, got {shape}"
        )));
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        return Ok(boosted * rng.next_open01().powf(1.0 / shape));
    }
    Ok(marsaglia_tsang(shape, rng))
}

fn marsaglia_tsang(shape: f64, rng: &mut RngStream) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.next_open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from `Dir(alphas)` via normalized gamma variates.
///
/// When every gamma variate underflows to zero (tiny concentrations) the
/// result is a one-hot vector at a uniformly drawn index, the `α → 0` limit.
pub fn sample_dirichlet(alphas: &[f64], rng: &mut RngStream) -> Result<SimplexVector> {
    if alphas.is_empty() {
        return Err(Error::domain("dirichlet needs at least one concentration"));
    }
    let gammas = alphas
        .iter()
        .map(|&a| sample_gamma(a, rng))
        .collect::<Result<Vec<_>>>()?;
    match SimplexVector::normalized(&gammas) {
        Some(q) => Ok(q),
        None => SimplexVector::one_hot(alphas.len(), rng.below(alphas.len())),
    }
}

/// Inverse-CDF draw of a class index from one uniform.
pub fn sample_categorical(q: &SimplexVector, rng: &mut RngStream) -> usize {
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in q.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last_positive = i;
            if u < cum {
                return i;
            }
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    last_positive
}
