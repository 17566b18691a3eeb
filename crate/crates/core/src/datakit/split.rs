use super::{ClientPartition, Dataset};
use crate::{numkit::RngStream, Error, Result};

/// One client's disjoint train/test division of its `P_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientSplit {
    pub client_id: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl ClientSplit {
    /// Clients without test examples are left out of every accuracy.
    pub fn excluded_from_evaluation(&self) -> bool {
        self.test.is_empty()
    }
}

/// Test-set size for a client of `n` examples: `round(fraction · n)`, clamped
/// so that a client with at least two examples keeps one on each side.
fn test_size(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return 0;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Per-client stratified train/test split.
///
/// The test quota is allocated across the client's classes by largest
/// remainder (ties to the lower class), then filled with random examples of
/// each class. Index lists are returned ascending.
pub fn split_client_train_test(
    partition: &ClientPartition,
    dataset: &Dataset,
    test_fraction: f64,
    rng: &mut RngStream,
) -> Result<Vec<ClientSplit>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::domain(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let classes = dataset.num_classes();
    partition
        .index_sets()
        .iter()
        .enumerate()
        .map(|(client_id, set)| {
            let n = set.len();
            let quota = test_size(n, test_fraction);
            let mut by_class = vec![Vec::new(); classes];
            for &i in set {
                let y = *dataset
                    .labels()
                    .get(i)
                    .ok_or_else(|| Error::domain(format!("index {i} outside dataset")))?;
                by_class[y].push(i);
            }
            let ideal: Vec<f64> = by_class
                .iter()
                .map(|c| quota as f64 * c.len() as f64 / n as f64)
                .collect();
            let mut take: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
            let mut order: Vec<usize> = (0..classes).collect();
            order.sort_by(|&a, &b| {
                let (fa, fb) = (ideal[a] - ideal[a].floor(), ideal[b] - ideal[b].floor());
                fb.total_cmp(&fa).then(a.cmp(&b))
            });
            let mut remaining = quota - take.iter().sum::<usize>();
            for &c in order.iter().cycle() {
                if remaining == 0 {
                    break;
                }
                if take[c] < by_class[c].len() {
                    take[c] += 1;
                    remaining -= 1;
                }
            }
            let mut train = Vec::with_capacity(n - quota);
            let mut test = Vec::with_capacity(quota);
            for (members, &t) in by_class.iter_mut().zip(&take) {
                rng.shuffle(members);
                test.extend_from_slice(&members[..t]);
                train.extend_from_slice(&members[t..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Ok(ClientSplit {
                client_id,
                train,
                test,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::make_rng_stream;

    fn data(labels: Vec<usize>, classes: usize) -> Dataset {
        let n = labels.len();
        Dataset::new((0..n).map(|i| i as f64).collect(), 1, labels, classes).unwrap()
    }

    #[test]
    fn ten_examples_split_eight_two() {
        let ds = data((0..10).map(|i| i % 2).collect(), 2);
        let part = ClientPartition::new(vec![(0..10).collect()], 10).unwrap();
        let split = split_client_train_test(&part, &ds, 0.2, &mut make_rng_stream(0, &[])).unwrap();
        assert_eq!(split[0].train.len(), 8);
        assert_eq!(split[0].test.len(), 2);
        // stratified: one test example per class
        let test_labels: Vec<usize> = split[0].test.iter().map(|&i| ds.labels()[i]).collect();
        assert!(test_labels.contains(&0) && test_labels.contains(&1));
    }

    #[test]
    fn singleton_client_is_excluded() {
        let ds = data(vec![0, 1, 0], 2);
        let part = ClientPartition::new(vec![vec![0], vec![1, 2]], 3).unwrap();
        let split = split_client_train_test(&part, &ds, 0.2, &mut make_rng_stream(0, &[])).unwrap();
        assert_eq!(split[0].train, vec![0]);
        assert!(split[0].excluded_from_evaluation());
        assert_eq!(split[1].train.len(), 1);
        assert_eq!(split[1].test.len(), 1);
    }

    #[test]
    fn train_and_test_cover_client_disjointly() {
        let ds = data((0..60).map(|i| (i * 7) % 3).collect(), 3);
        let part = ClientPartition::new(
            vec![(0..17).collect(), (17..40).collect(), (40..60).collect()],
            60,
        )
        .unwrap();
        let split = split_client_train_test(&part, &ds, 0.3, &mut make_rng_stream(2, &[])).unwrap();
        for (s, set) in split.iter().zip(part.index_sets()) {
            let mut all = [s.train.clone(), s.test.clone()].concat();
            all.sort_unstable();
            assert_eq!(&all, set);
            assert!(s.train.iter().all(|i| !s.test.contains(i)));
            assert_eq!(s.test.len(), test_size(set.len(), 0.3));
        }
    }

    #[test]
    fn fraction_bounds() {
        let ds = data(vec![0, 1], 2);
        let part = ClientPartition::new(vec![vec![0, 1]], 2).unwrap();
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(split_client_train_test(&part, &ds, f, &mut make_rng_stream(0, &[])).is_err());
        }
    }
}
