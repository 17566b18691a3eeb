//! Differentiable classifiers.
//!
//! Every model is a pure function of a flat [`ParamVector`] and a [`Batch`].
//! Loss is the mean softmax cross-entropy over the batch, gradients are exact
//! (backpropagation), and Hessian-vector products are central differences of
//! exact gradients.

mod network;
mod quadratic;

use std::ops::Deref;

pub use network::{ModelKind, ModelSpec};
pub use quadratic::QuadraticHarness;

use crate::{error::check_dim, Error, Result};

/// Flat parameter vector, layer-major (see [`ModelSpec`] for the layout).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!(
                "parameter {bad} is not finite ({})",
                values[bad]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `self − scale · direction`.
    pub fn step(&self, scale: f64, direction: &ParamVector) -> Result<ParamVector> {
        check_dim(self.len(), direction.len())?;
        Ok(Self(
            self.0
                .iter()
                .zip(&direction.0)
                .map(|(w, d)| w - scale * d)
                .collect(),
        ))
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A labeled mini-batch: `len × input_dim` row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Vec<f64>,
    input_dim: usize,
    labels: Vec<usize>,
}

impl Batch {
    pub fn new(features: Vec<f64>, input_dim: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::domain("batch must hold at least one example"));
        }
        check_dim(labels.len() * input_dim, features.len())?;
        Ok(Self {
            features,
            input_dim,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// The `i`-th example as a batch of one.
    pub fn example(&self, i: usize) -> Batch {
        Batch {
            features: self.row(i).to_vec(),
            input_dim: self.input_dim,
            labels: vec![self.labels[i]],
        }
    }
}

/// A scalar objective `f(w; batch)` with exact gradients.
pub trait Differentiable: Sync {
    fn num_params(&self) -> usize;

    fn loss(&self, w: &ParamVector, batch: &Batch) -> Result<f64>;

    fn grad(&self, w: &ParamVector, batch: &Batch) -> Result<ParamVector>;

    /// `∇²f(w; batch) · v`, by default a central difference of exact
    /// gradients with the step from [`hvp_step`].
    fn hvp(&self, w: &ParamVector, v: &ParamVector, batch: &Batch) -> Result<ParamVector> {
        fd_hvp(|x| self.grad(x, batch), w, v)
    }
}

pub trait Classifier: Differentiable {
    fn num_classes(&self) -> usize;

    /// Number of examples whose argmax logit equals the label; ties go to the
    /// lowest class index.
    fn correct(&self, w: &ParamVector, batch: &Batch) -> Result<usize>;

    fn accuracy(&self, w: &ParamVector, batch: &Batch) -> Result<f64> {
        Ok(self.correct(w, batch)? as f64 / batch.len() as f64)
    }
}

/// Finite-difference step for the Hessian-vector product:
/// `1e-4 · (1 + ‖w‖∞) / (‖v‖∞ + 1e-12)`.
pub fn hvp_step(w: &ParamVector, v: &ParamVector) -> f64 {
    1e-4 * (1.0 + w.norm_inf()) / (v.norm_inf() + 1e-12)
}

/// Central-difference Hessian-vector product of an exact gradient function.
/// Returns exact zeros when `v` is zero.
pub fn fd_hvp<G>(grad: G, w: &ParamVector, v: &ParamVector) -> Result<ParamVector>
where
    G: Fn(&ParamVector) -> Result<ParamVector>,
{
    check_dim(w.len(), v.len())?;
    if v.iter().all(|&x| x == 0.0) {
        return Ok(ParamVector::zeros(w.len()));
    }
    let h = hvp_step(w, v);
    let plus = w.step(-h, v)?;
    let minus = w.step(h, v)?;
    let gp = grad(&plus)?;
    let gm = grad(&minus)?;
    check_dim(w.len(), gp.len())?;
    Ok(ParamVector::from_raw(
        gp.iter()
            .zip(gm.iter())
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect(),
    ))
}
