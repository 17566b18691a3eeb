use std::fmt;

use super::{ClientPartition, Dataset};

/// Per-client class histograms and a heterogeneity summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    /// `K × N` class counts.
    pub counts: Vec<Vec<usize>>,
    /// Mean total-variation distance over all client pairs (0 for one client).
    pub mean_pairwise_tv: f64,
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn partition_stats(partition: &ClientPartition, dataset: &Dataset) -> PartitionStats {
    let classes = dataset.num_classes();
    let counts: Vec<Vec<usize>> = partition
        .index_sets()
        .iter()
        .map(|set| {
            let mut row = vec![0; classes];
            for &i in set {
                row[dataset.labels()[i]] += 1;
            }
            row
        })
        .collect();
    let dists: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            row.iter().map(|&c| c as f64 / n as f64).collect()
        })
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..dists.len() {
        for b in a + 1..dists.len() {
            sum += total_variation(&dists[a], &dists[b]);
            pairs += 1;
        }
    }
    PartitionStats {
        counts,
        mean_pairwise_tv: if pairs == 0 { 0.0 } else { sum / pairs as f64 },
    }
}

impl fmt::Display for PartitionStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let classes = self.counts.first().map_or(0, Vec::len);
        write!(f, "client")?;
        for c in 0..classes {
            write!(f, "\tc{c}")?;
        }
        writeln!(f, "\ttotal")?;
        for (k, row) in self.counts.iter().enumerate() {
            write!(f, "{k}")?;
            for c in row {
                write!(f, "\t{c}")?;
            }
            writeln!(f, "\t{}", row.iter().sum::<usize>())?;
        }
        write!(f, "mean pairwise TV: {:.6}", self.mean_pairwise_tv)
    }
}
