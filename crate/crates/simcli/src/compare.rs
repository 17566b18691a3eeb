//! Algorithm × alpha_dir × τ comparison grid.

use std::{fmt::Write as _, path::Path};

use crate::{
    config::{Algorithm, ExperimentConfig},
    experiment::{prepare, run_prepared, Summary},
    SimError, SimResult,
};

pub const COMPARISON_HEADER: &str =
    "algorithm,alpha_dir,tau,headline_acc,global_acc,personalized_acc";

pub type ComparisonCell = Summary;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Ordered by alpha_dir, then τ, then algorithm, each in the order given.
    pub cells: Vec<ComparisonCell>,
}

/// Runs every grid cell from `base`. Cells that share an alpha_dir reuse one
/// dataset, partition, and split; all cells use `base.seed`.
pub fn run_comparison(
    base: &ExperimentConfig,
    algorithms: &[Algorithm],
    alpha_dirs: &[f64],
    taus: &[usize],
) -> SimResult<ComparisonTable> {
    if algorithms.is_empty() || alpha_dirs.is_empty() || taus.is_empty() {
        return Err(SimError::Core(fedsim_core::Error::Domain(
            "comparison grid is empty".into(),
        )));
    }
    base.validate()?;
    let mut cells = Vec::with_capacity(algorithms.len() * alpha_dirs.len() * taus.len());
    for &alpha_dir in alpha_dirs {
        let population = ExperimentConfig {
            alpha_dir,
            ..base.clone()
        };
        let prepared = prepare(&population)?;
        for &tau in taus {
            for &algorithm in algorithms {
                let cfg = ExperimentConfig {
                    algorithm,
                    local_steps: tau,
                    ..population.clone()
                };
                cells.push(run_prepared(&cfg, &prepared)?.summary);
            }
        }
    }
    Ok(ComparisonTable { cells })
}

impl ComparisonTable {
    pub fn cell(
        &self,
        algorithm: Algorithm,
        alpha_dir: f64,
        tau: usize,
    ) -> Option<&ComparisonCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.alpha_dir == alpha_dir && c.tau == tau)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                c.algorithm, c.alpha_dir, c.tau, c.headline_acc, c.global_acc, c.personalized_acc
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> SimResult<()> {
        Ok(std::fs::write(path, self.to_csv())?)
    }

    /// Text table: one row per (alpha_dir, τ), one column per algorithm with
    /// its headline accuracy in percent. FedAvg columns carry the
    /// personalized accuracy in parentheses as a supplementary figure.
    pub fn render(&self) -> String {
        let mut algorithms: Vec<Algorithm> = Vec::new();
        let mut settings: Vec<(f64, usize)> = Vec::new();
        for c in &self.cells {
            if !algorithms.contains(&c.algorithm) {
                algorithms.push(c.algorithm);
            }
            if !settings.contains(&(c.alpha_dir, c.tau)) {
                settings.push((c.alpha_dir, c.tau));
            }
        }
        let mut out = format!("{:>10} {:>4}", "alpha_dir", "tau");
        for a in &algorithms {
            let _ = write!(out, " {:>18}", a.name());
        }
        out.push('\n');
        for &(alpha, tau) in &settings {
            let _ = write!(out, "{alpha:>10} {tau:>4}");
            for &a in &algorithms {
                let text = match self.cell(a, alpha, tau) {
                    Some(c) if a.is_personalized() => format!("{:.2}%", 100.0 * c.headline_acc),
                    Some(c) => format!(
                        "{:.2}% ({:.2}%)",
                        100.0 * c.headline_acc,
                        100.0 * c.personalized_acc
                    ),
                    None => "-".into(),
                };
                let _ = write!(out, " {text:>18}");
            }
            out.push('\n');
        }
        out
    }
}
