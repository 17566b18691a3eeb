use super::Dataset;
use crate::{
    numkit::{sample_categorical, sample_dirichlet, RngStream, SimplexVector},
    Error, Result,
};

/// Disjoint per-client index sets `P_k` into a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientPartition {
    index_sets: Vec<Vec<usize>>,
}

impl ClientPartition {
    /// Validates: every index `< dataset_len`, no index used twice (within or
    /// across clients), every client nonempty.
    pub fn new(index_sets: Vec<Vec<usize>>, dataset_len: usize) -> Result<Self> {
        if index_sets.is_empty() {
            return Err(Error::domain("partition needs at least one client"));
        }
        let mut owner = vec![usize::MAX; dataset_len];
        for (k, set) in index_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::domain(format!("client {k} holds no examples")));
            }
            for &i in set {
                if i >= dataset_len {
                    return Err(Error::domain(format!(
                        "client {k}: index {i} outside dataset of {dataset_len}"
                    )));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::domain(format!(
                        "index {i} assigned to clients {} and {k}",
                        owner[i]
                    )));
                }
                owner[i] = k;
            }
        }
        Ok(Self { index_sets })
    }

    pub fn num_clients(&self) -> usize {
        self.index_sets.len()
    }

    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }

    pub fn client(&self, k: usize) -> &[usize] {
        &self.index_sets[k]
    }

    /// `n_k` for every client.
    pub fn counts(&self) -> Vec<usize> {
        self.index_sets.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.index_sets.iter().map(Vec::len).sum()
    }
}

fn check_clients(num_clients: usize, n: usize) -> Result<()> {
    if num_clients < 1 {
        return Err(Error::domain("need at least one client"));
    }
    if num_clients > n {
        return Err(Error::domain(format!(
            "{num_clients} clients exceed {n} examples"
        )));
    }
    Ok(())
}

/// Random permutation dealt round-robin; client sizes differ by at most one.
pub fn partition_iid(
    dataset: &Dataset,
    num_clients: usize,
    rng: &mut RngStream,
) -> Result<ClientPartition> {
    check_clients(num_clients, dataset.len())?;
    let mut perm: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut perm);
    let mut sets = vec![Vec::new(); num_clients];
    for (pos, i) in perm.into_iter().enumerate() {
        sets[pos % num_clients].push(i);
    }
    sets.iter_mut().for_each(|s| s.sort_unstable());
    ClientPartition::new(sets, dataset.len())
}

/// Per-client class proportions `q ~ Dir(alpha_dir · N · prior)`.
///
/// `alpha_dir` is the concentration per class: a uniform prior gives
/// `Dir(alpha_dir, ..., alpha_dir)`, and the prior is the mean of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec {
    alpha_dir: f64,
    prior: SimplexVector,
    samples_per_client: usize,
}

impl DirichletSpec {
    pub fn new(alpha_dir: f64, prior: SimplexVector, samples_per_client: usize) -> Result<Self> {
        if !(alpha_dir > 0.0) || !alpha_dir.is_finite() {
            return Err(Error::domain(format!(
                "alpha_dir must be positive, got {alpha_dir}"
            )));
        }
        if samples_per_client == 0 {
            return Err(Error::domain("samples_per_client must be positive"));
        }
        Ok(Self {
            alpha_dir,
            prior,
            samples_per_client,
        })
    }

    /// Uniform class prior over `num_classes`.
    pub fn uniform(alpha_dir: f64, num_classes: usize, samples_per_client: usize) -> Result<Self> {
        Self::new(
            alpha_dir,
            SimplexVector::uniform(num_classes)?,
            samples_per_client,
        )
    }

    pub fn alpha_dir(&self) -> f64 {
        self.alpha_dir
    }

    pub fn prior(&self) -> &SimplexVector {
        &self.prior
    }

    pub fn samples_per_client(&self) -> usize {
        self.samples_per_client
    }
}

/// Dirichlet label-skew partition.
///
/// Clients are filled in order `0..K`. Client `k` draws `q_k ~ Dir(α·N·p)`, then
/// `samples_per_client` labels from `q_k`, each taking one unassigned example
/// of that class. Classes whose pool is exhausted are dropped and `q_k` is
/// renormalized over the rest; if none of the remaining classes has mass under
/// `q_k`, the prior restricted to the remaining classes is used instead (and
/// uniform if that is zero too). Once every pool is dry, clients keep what
/// they have; a client that would receive nothing is an error.
pub fn partition_dirichlet(
    dataset: &Dataset,
    num_clients: usize,
    spec: &DirichletSpec,
    rng: &mut RngStream,
) -> Result<ClientPartition> {
    if num_clients < 1 {
        return Err(Error::domain("need at least one client"));
    }
    let classes = dataset.num_classes();
    if spec.prior.len() != classes {
        return Err(Error::domain(format!(
            "prior has {} classes, dataset has {classes}",
            spec.prior.len()
        )));
    }
    let mut pools = dataset.class_indices();
    for pool in &mut pools {
        rng.shuffle(pool);
    }
    let support: Vec<usize> = (0..classes).filter(|&c| spec.prior[c] > 0.0).collect();
    let scale = spec.alpha_dir * classes as f64;
    let alphas: Vec<f64> = support.iter().map(|&c| scale * spec.prior[c]).collect();

    let mut sets = Vec::with_capacity(num_clients);
    for _ in 0..num_clients {
        let q_support = sample_dirichlet(&alphas, rng)?;
        let mut q = vec![0.0; classes];
        for (&c, &p) in support.iter().zip(q_support.iter()) {
            q[c] = p;
        }
        let mut current = SimplexVector::new(q.clone())?;
        let mut exhausted = false;
        let mut set = Vec::with_capacity(spec.samples_per_client);
        while set.len() < spec.samples_per_client {
            let c = sample_categorical(&current, rng);
            if let Some(i) = pools[c].pop() {
                set.push(i);
                continue;
            }
            if pools.iter().all(Vec::is_empty) {
                exhausted = true;
                break;
            }
            current = renormalized(&q, spec.prior.as_ref(), &pools);
        }
        if exhausted && set.is_empty() {
            // every pool is dry, so there is no leftover to hand out
            return Err(Error::domain(format!(
                "dataset of {} examples exhausted before all {num_clients} clients received data",
                dataset.len()
            )));
        }
        set.sort_unstable();
        sets.push(set);
    }
    ClientPartition::new(sets, dataset.len())
}

fn renormalized(q: &[f64], prior: &[f64], pools: &[Vec<usize>]) -> SimplexVector {
    let mask = |w: &[f64]| -> Vec<f64> {
        w.iter()
            .zip(pools)
            .map(|(&x, pool)| if pool.is_empty() { 0.0 } else { x })
            .collect()
    };
    SimplexVector::normalized(&mask(q))
        .or_else(|| SimplexVector::normalized(&mask(prior)))
        .or_else(|| SimplexVector::normalized(&mask(&vec![1.0; q.len()])))
        .expect("at least one pool is nonempty")
}

/// Sort-and-partition: indices sorted by label (ties by index) are cut into
/// `K · shards_per_client` equal shards and each client receives
/// `shards_per_client` random shards.
pub fn partition_sort_shard(
    dataset: &Dataset,
    num_clients: usize,
    shards_per_client: usize,
    rng: &mut RngStream,
) -> Result<ClientPartition> {
    check_clients(num_clients, dataset.len())?;
    let shards = num_clients * shards_per_client;
    if shards_per_client == 0 || !dataset.len().is_multiple_of(shards) {
        return Err(Error::domain(format!(
            "{num_clients} clients × {shards_per_client} shards do not divide {} examples",
            dataset.len()
        )));
    }
    let shard_len = dataset.len() / shards;
    let mut sorted: Vec<usize> = (0..dataset.len()).collect();
    sorted.sort_by_key(|&i| (dataset.labels()[i], i));
    let mut order: Vec<usize> = (0..shards).collect();
    rng.shuffle(&mut order);
    let sets = order
        .chunks(shards_per_client)
        .map(|mine| {
            let mut set: Vec<usize> = mine
                .iter()
                .flat_map(|&s| sorted[s * shard_len..(s + 1) * shard_len].iter().copied())
                .collect();
            set.sort_unstable();
            set
        })
        .collect();
    ClientPartition::new(sets, dataset.len())
}
