//! Federated strategies: FedAvg and Per-FedAvg.
//!
//! A round selects clients, runs each selected client's local procedure from
//! the current global model on its own derived random stream, and averages
//! the returned models in ascending client-id order. Per-client work is a
//! pure function of `(w, client data, stream)` and runs on the rayon pool.

mod config;
mod eval;
mod local;

pub use config::{Aggregation, FedAvgConfig, PerFedAvgConfig, Strategy, Variant};
pub use eval::{
    evaluate_global, evaluate_personalized, mean_train_loss, meta_objective, personalize,
};
pub use local::{draw_batch, local_sgd, perfedavg_local, BatchTriple};

use rayon::prelude::*;

use crate::{
    datakit::{ClientSplit, Dataset},
    error::check_dim,
    models::{Differentiable, ParamVector},
    numkit::{labels, make_rng_stream, RngStream},
    Error, Result,
};

/// A client's view of the data: train/test indices into the shared dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientState {
    pub id: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl From<&ClientSplit> for ClientState {
    fn from(split: &ClientSplit) -> Self {
        Self {
            id: split.client_id,
            train: split.train.clone(),
            test: split.test.clone(),
        }
    }
}

impl ClientState {
    /// Stream for this client's local work in `round`.
    pub fn round_stream(&self, seed: u64, round: usize) -> RngStream {
        make_rng_stream(seed, &[labels::LOCAL_TRAIN, round as u64, self.id as u64])
    }
}

/// Number of participants per round: `max(1, round(r · K))`.
pub fn participants_per_round(num_clients: usize, fraction: f64) -> usize {
    ((fraction * num_clients as f64).round() as usize).clamp(1, num_clients)
}

/// Uniform sample of client ids without replacement, sorted ascending.
pub fn select_clients(
    num_clients: usize,
    fraction: f64,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    if num_clients < 1 {
        return Err(Error::domain("need at least one client"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::domain(format!(
            "client fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let ids: Vec<usize> = (0..num_clients).collect();
    let mut chosen =
        rng.sample_without_replacement(&ids, participants_per_round(num_clients, fraction));
    chosen.sort_unstable();
    Ok(chosen)
}

/// A locally trained model as returned to the server.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    /// `n_k`, the number of training examples behind the update.
    pub num_samples: usize,
    pub params: ParamVector,
}

/// Averages client models, uniformly or weighted by `n_k / Σn`. Updates are
/// reduced in ascending client-id order regardless of arrival order.
pub fn aggregate(updates: &[ClientUpdate], aggregation: Aggregation) -> Result<ParamVector> {
    let first = updates
        .first()
        .ok_or_else(|| Error::domain("cannot aggregate zero updates"))?;
    let dim = first.params.len();
    let mut ordered: Vec<&ClientUpdate> = updates.iter().collect();
    ordered.sort_by_key(|u| u.client_id);
    let total: usize = ordered.iter().map(|u| u.num_samples).sum();
    if aggregation == Aggregation::Weighted && total == 0 {
        return Err(Error::domain(
            "weighted aggregation needs positive sample counts",
        ));
    }
    let mut out = vec![0.0; dim];
    for u in ordered {
        check_dim(dim, u.params.len())?;
        let coeff = match aggregation {
            Aggregation::Uniform => 1.0 / updates.len() as f64,
            Aggregation::Weighted => u.num_samples as f64 / total as f64,
        };
        out.iter_mut()
            .zip(u.params.iter())
            .for_each(|(o, w)| *o += coeff * w);
    }
    Ok(ParamVector::from_raw(out))
}

/// Outcome of one communication round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub round: usize,
    pub params: ParamVector,
    /// Selected clients that trained and uploaded a model.
    pub participants: Vec<usize>,
    /// Selected clients skipped for having no training data.
    pub skipped: Vec<usize>,
    /// Scalars downloaded plus uploaded this round.
    pub params_exchanged: u64,
}

/// Runs one round of `strategy` from `global`.
///
/// Selection uses the stream `(seed, [SELECT, round])`; client `i` trains on
/// `(seed, [LOCAL_TRAIN, round, i])`. Rounds are numbered from 1.
#[allow(clippy::too_many_arguments)]
pub fn run_round<M: Differentiable>(
    model: &M,
    strategy: &Strategy,
    aggregation: Aggregation,
    round: usize,
    global: &ParamVector,
    clients: &[ClientState],
    dataset: &Dataset,
    seed: u64,
) -> Result<RoundResult> {
    let base = strategy.base();
    let mut select_rng = make_rng_stream(seed, &[labels::SELECT, round as u64]);
    let selected = select_clients(clients.len(), base.client_fraction, &mut select_rng)?;
    let (active, skipped): (Vec<usize>, Vec<usize>) = selected
        .into_iter()
        .partition(|&i| !clients[i].train.is_empty());

    let updates = active
        .par_iter()
        .map(|&i| {
            let client = &clients[i];
            let mut rng = client.round_stream(seed, round);
            let params = match strategy {
                Strategy::FedAvg(cfg) => local_sgd(model, client, global, cfg, dataset, &mut rng)?,
                Strategy::PerFedAvg(cfg) => {
                    perfedavg_local(model, client, global, cfg, dataset, &mut rng)?
                }
            };
            Ok(ClientUpdate {
                client_id: client.id,
                num_samples: client.train.len(),
                params,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let params = if updates.is_empty() {
        global.clone()
    } else {
        aggregate(&updates, aggregation)?
    };
    if !params.is_finite() {
        return Err(Error::domain(format!(
            "global model diverged in round {round}"
        )));
    }
    Ok(RoundResult {
        round,
        params_exchanged: 2 * (active.len() * global.len()) as u64,
        params,
        participants: active,
        skipped,
    })
}
