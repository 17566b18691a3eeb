use crate::{Error, Result};

/// Round and local-training parameters shared by every strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct FedAvgConfig {
    /// Communication rounds.
    pub rounds: usize,
    /// Fraction `r` of clients selected per round, in `(0, 1]`.
    pub client_fraction: f64,
    /// Local gradient steps `τ` per round (steps, not epochs).
    pub local_steps: usize,
    pub batch_size: usize,
    pub local_lr: f64,
}

impl Default for FedAvgConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            client_fraction: 0.5,
            local_steps: 10,
            batch_size: 40,
            local_lr: 0.01,
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {x}")))
    }
}

impl FedAvgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.client_fraction > 0.0 && self.client_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "client_fraction must lie in (0, 1], got {}",
                self.client_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        positive("local_lr", self.local_lr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Keeps the `(I − α′∇²f)` correction, via a Hessian-vector product.
    Hessian,
    /// Drops the correction term.
    FirstOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerFedAvgConfig {
    pub base: FedAvgConfig,
    /// Inner (adaptation) step `α′ ≥ 0`.
    pub alpha_inner: f64,
    /// Outer step `β > 0`.
    pub beta: f64,
    pub variant: Variant,
}

impl PerFedAvgConfig {
    pub fn new(base: FedAvgConfig, variant: Variant) -> Self {
        Self {
            base,
            alpha_inner: 0.01,
            beta: 0.01,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.alpha_inner >= 0.0) || !self.alpha_inner.is_finite() {
            return Err(Error::domain(format!(
                "alpha_inner must be nonnegative, got {}",
                self.alpha_inner
            )));
        }
        positive("beta", self.beta)
    }
}

/// How the server combines client models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Plain mean of the received models.
    Uniform,
    /// Mean weighted by each client's training-set size.
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    FedAvg(FedAvgConfig),
    PerFedAvg(PerFedAvgConfig),
}

impl Strategy {
    pub fn base(&self) -> &FedAvgConfig {
        match self {
            Strategy::FedAvg(cfg) => cfg,
            Strategy::PerFedAvg(cfg) => &cfg.base,
        }
    }

    /// Weighted for FedAvg, uniform for Per-FedAvg.
    pub fn default_aggregation(&self) -> Aggregation {
        match self {
            Strategy::FedAvg(_) => Aggregation::Weighted,
            Strategy::PerFedAvg(_) => Aggregation::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::FedAvg(cfg) => cfg.validate(),
            Strategy::PerFedAvg(cfg) => cfg.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let base = FedAvgConfig::default();
        assert!(base.validate().is_ok());
        assert!(PerFedAvgConfig::new(base, Variant::Hessian)
            .validate()
            .is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let c = FedAvgConfig {
            client_fraction: 0.0,
            ..FedAvgConfig::default()
        };
        assert!(c.validate().is_err());
        let c = FedAvgConfig {
            batch_size: 0,
            ..FedAvgConfig::default()
        };
        assert!(c.validate().is_err());
        let mut p = PerFedAvgConfig::new(FedAvgConfig::default(), Variant::FirstOrder);
        p.alpha_inner = -0.1;
        assert!(p.validate().is_err());
        p.alpha_inner = 0.0;
        p.beta = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn aggregation_defaults() {
        assert_eq!(
            Strategy::FedAvg(FedAvgConfig::default()).default_aggregation(),
            Aggregation::Weighted
        );
        let p = PerFedAvgConfig::new(FedAvgConfig::default(), Variant::Hessian);
        assert_eq!(
            Strategy::PerFedAvg(p).default_aggregation(),
            Aggregation::Uniform
        );
    }
}
