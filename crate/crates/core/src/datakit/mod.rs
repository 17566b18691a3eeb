//! Datasets and client partitioning.

mod io;
mod partition;
mod split;
mod stats;

pub use io::{
    load_csv_dataset, read_partition_manifest, write_csv_dataset, write_partition_manifest,
};
pub use partition::{
    partition_dirichlet, partition_iid, partition_sort_shard, ClientPartition, DirichletSpec,
};
pub use split::{split_client_train_test, ClientSplit};
pub use stats::{partition_stats, total_variation, PartitionStats};

use crate::{
    error::check_dim,
    models::Batch,
    numkit::{labels, make_rng_stream, RngStream},
    Error, Result,
};

/// A labeled dataset with `len × dim` row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("feature dimension must be positive"));
        }
        check_dim(labels.len() * dim, features.len())?;
        if labels.len() < num_classes {
            return Err(Error::domain(format!(
                "dataset has {} examples but {num_classes} classes",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::domain(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("features must be finite"));
        }
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Gathers the given examples into a batch. Panics on out-of-range indices.
    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Batch::new(
            features,
            self.dim,
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// Indices of each class, ascending.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        by_class
    }
}

/// Gaussian-mixture data source: class `c` is `N(separation · u_c, noise² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    pub class_separation: f64,
    pub noise_scale: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::domain("synthetic data needs at least 2 classes"));
        }
        if self.input_dim == 0 || self.samples_per_class == 0 {
            return Err(Error::domain(
                "input_dim and samples_per_class must be positive",
            ));
        }
        if !(self.class_separation >= 0.0) || !self.class_separation.is_finite() {
            return Err(Error::domain(
                "class_separation must be finite and nonnegative",
            ));
        }
        if !(self.noise_scale > 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::domain("noise_scale must be positive"));
        }
        Ok(())
    }
}

/// Unit class directions, a pure function of `(num_classes, dim)`.
///
/// Standard basis vectors when `dim ≥ num_classes`; otherwise Gaussian
/// directions from a fixed stream, normalized.
pub fn class_directions(num_classes: usize, dim: usize) -> Vec<Vec<f64>> {
    if dim >= num_classes {
        return (0..num_classes)
            .map(|c| {
                let mut u = vec![0.0; dim];
                u[c] = 1.0;
                u
            })
            .collect();
    }
    let mut rng = make_rng_stream(0, &[labels::DIRECTIONS, num_classes as u64, dim as u64]);
    (0..num_classes)
        .map(|_| loop {
            let u: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                break u.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Balanced Gaussian-mixture dataset; examples are interleaved by class
/// (`label[i] = i mod N`).
pub fn generate_synthetic(spec: &SyntheticSpec, rng: &mut RngStream) -> Result<Dataset> {
    spec.validate()?;
    let dirs = class_directions(spec.num_classes, spec.input_dim);
    let n = spec.num_classes * spec.samples_per_class;
    let mut features = Vec::with_capacity(n * spec.input_dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.samples_per_class {
        for (c, u) in dirs.iter().enumerate() {
            features.extend(
                u.iter()
                    .map(|m| spec.class_separation * m + spec.noise_scale * rng.standard_normal()),
            );
            labels.push(c);
        }
    }
    Dataset::new(features, spec.input_dim, labels, spec.num_classes)
}
