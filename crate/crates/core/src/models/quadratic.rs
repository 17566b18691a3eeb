use super::{Batch, Differentiable, ParamVector};
use crate::{error::check_dim, Error, Result};

/// `f(w) = ½ wᵀ diag(a) w`, independent of the batch.
///
/// Closed-form harness for checking the federated update rules: every batch
/// is effectively a full batch.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHarness {
    diag: Vec<f64>,
}

impl QuadraticHarness {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || diag.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("quadratic harness needs finite curvatures"));
        }
        Ok(Self { diag })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

impl Differentiable for QuadraticHarness {
    fn num_params(&self) -> usize {
        self.diag.len()
    }

    fn loss(&self, w: &ParamVector, _batch: &Batch) -> Result<f64> {
        check_dim(self.diag.len(), w.len())?;
        Ok(0.5
            * self
                .diag
                .iter()
                .zip(w.iter())
                .map(|(a, x)| a * x * x)
                .sum::<f64>())
    }

    fn grad(&self, w: &ParamVector, _batch: &Batch) -> Result<ParamVector> {
        check_dim(self.diag.len(), w.len())?;
        Ok(ParamVector::from_raw(
            self.diag.iter().zip(w.iter()).map(|(a, x)| a * x).collect(),
        ))
    }
}
