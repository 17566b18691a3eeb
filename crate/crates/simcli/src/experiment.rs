//! Dataset, partition, split, training loop, and periodic evaluation.

use fedsim_core::{
    datakit::{
        generate_synthetic, load_csv_dataset, partition_dirichlet, partition_iid,
        partition_sort_shard, split_client_train_test, write_partition_manifest, ClientPartition,
        Dataset, DirichletSpec,
    },
    fedcore::{evaluate_global, evaluate_personalized, mean_train_loss, run_round, ClientState},
    models::{ModelSpec, ParamVector},
    numkit::{labels, make_rng_stream},
};

use crate::{
    config::{Algorithm, DatasetSource, ExperimentConfig, PartitionScheme},
    metrics::emit_metrics_csv,
    MetricsRow, SimError, SimResult,
};

/// Everything a run needs before training starts. Depends only on the data,
/// partition, and split fields of the config plus the seed, so comparison
/// cells that share those reuse one `Prepared`.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub partition: ClientPartition,
    pub clients: Vec<ClientState>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> SimResult<Dataset> {
    match cfg.dataset {
        DatasetSource::Synthetic => Ok(generate_synthetic(
            &cfg.synthetic_spec(),
            &mut make_rng_stream(cfg.seed, &[labels::DATA]),
        )?),
        DatasetSource::Csv => {
            let path = cfg
                .csv_path
                .as_ref()
                .ok_or_else(|| SimError::config("dataset=csv requires csv_path"))?;
            Ok(load_csv_dataset(path)?)
        }
    }
}

pub fn build_partition(cfg: &ExperimentConfig, dataset: &Dataset) -> SimResult<ClientPartition> {
    let mut rng = make_rng_stream(cfg.seed, &[labels::PARTITION]);
    let k = cfg.num_clients;
    let partition = match cfg.partition {
        PartitionScheme::Iid => partition_iid(dataset, k, &mut rng)?,
        PartitionScheme::Shards => {
            partition_sort_shard(dataset, k, cfg.shards_per_client, &mut rng)?
        }
        PartitionScheme::Dirichlet => {
            let spec = DirichletSpec::uniform(
                cfg.alpha_dir,
                dataset.num_classes(),
                cfg.samples_per_client,
            )?;
            partition_dirichlet(dataset, k, &spec, &mut rng)?
        }
    };
    Ok(partition)
}

pub fn prepare(cfg: &ExperimentConfig) -> SimResult<Prepared> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let partition = build_partition(cfg, &dataset)?;
    let splits = split_client_train_test(
        &partition,
        &dataset,
        cfg.test_fraction,
        &mut make_rng_stream(cfg.seed, &[labels::SPLIT]),
    )?;
    let clients: Vec<ClientState> = splits.iter().map(ClientState::from).collect();
    if clients.iter().all(|c| c.train.is_empty()) {
        return Err(SimError::Core(fedsim_core::Error::Domain(
            "every client has an empty training set".into(),
        )));
    }
    if let Some(path) = &cfg.manifest_path {
        write_partition_manifest(&partition, path)?;
    }
    Ok(Prepared {
        dataset,
        partition,
        clients,
    })
}

/// Final-round results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub alpha_dir: f64,
    pub tau: usize,
    pub rounds: usize,
    pub global_acc: f64,
    pub personalized_acc: f64,
    /// Personalized accuracy for Per-FedAvg, global accuracy for FedAvg.
    pub headline_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Summary,
    pub params: ParamVector,
}

fn evaluate(
    model: &ModelSpec,
    w: &ParamVector,
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    round: usize,
    participants: usize,
    params_exchanged: u64,
) -> SimResult<MetricsRow> {
    let (clients, dataset) = (&prepared.clients, &prepared.dataset);
    Ok(MetricsRow {
        round,
        global_acc: evaluate_global(model, w, clients, dataset)?,
        personalized_acc: evaluate_personalized(model, w, clients, cfg.alpha_inner, dataset)?,
        mean_train_loss: mean_train_loss(model, w, clients, dataset)?,
        participants,
        params_exchanged,
    })
}

/// Trains on an already prepared population. Round 0 (the initial model) is
/// always evaluated, then every `eval_every` rounds and the final round.
pub fn run_prepared(cfg: &ExperimentConfig, prepared: &Prepared) -> SimResult<ExperimentOutput> {
    cfg.validate()?;
    let dataset = &prepared.dataset;
    let model = cfg.model_spec(dataset.dim(), dataset.num_classes())?;
    let strategy = cfg.strategy();
    let aggregation = cfg.aggregation();

    let mut w = model.init_params(&mut make_rng_stream(cfg.seed, &[labels::INIT]));
    let mut exchanged = 0u64;
    let mut rows = vec![evaluate(&model, &w, cfg, prepared, 0, 0, 0)?];
    for round in 1..=cfg.rounds {
        let result = run_round(
            &model,
            &strategy,
            aggregation,
            round,
            &w,
            &prepared.clients,
            dataset,
            cfg.seed,
        )?;
        w = result.params;
        exchanged += result.params_exchanged;
        if round % cfg.eval_every == 0 || round == cfg.rounds {
            rows.push(evaluate(
                &model,
                &w,
                cfg,
                prepared,
                round,
                result.participants.len(),
                exchanged,
            )?);
        }
    }

    let last = rows.last().expect("round 0 is always evaluated");
    let headline_acc = if cfg.algorithm.is_personalized() {
        last.personalized_acc
    } else {
        last.global_acc
    };
    let summary = Summary {
        algorithm: cfg.algorithm,
        alpha_dir: cfg.alpha_dir,
        tau: cfg.local_steps,
        rounds: cfg.rounds,
        global_acc: last.global_acc,
        personalized_acc: last.personalized_acc,
        headline_acc,
    };
    Ok(ExperimentOutput {
        rows,
        summary,
        params: w,
    })
}

/// Full run from a config; writes the metrics CSV when `metrics_path` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> SimResult<ExperimentOutput> {
    let prepared = prepare(cfg)?;
    let output = run_prepared(cfg, &prepared)?;
    if let Some(path) = &cfg.metrics_path {
        emit_metrics_csv(&output.rows, path)?;
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            samples_per_class: 60,
            num_clients: 6,
            samples_per_client: 80,
            rounds: 4,
            eval_every: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_rounds_gives_initial_row() {
        let out = run_experiment(&ExperimentConfig {
            rounds: 0,
            ..small()
        })
        .unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].round, 0);
        assert_eq!(out.rows[0].params_exchanged, 0);
    }

    #[test]
    fn evaluation_schedule_and_accounting() {
        let cfg = ExperimentConfig {
            rounds: 5,
            ..small()
        };
        let out = run_experiment(&cfg).unwrap();
        let rounds: Vec<usize> = out.rows.iter().map(|r| r.round).collect();
        assert_eq!(rounds, vec![0, 2, 4, 5]);
        let dim = cfg.model_spec(20, 10).unwrap().param_count() as u64;
        // 3 of 6 clients per round, download + upload
        assert_eq!(out.rows[3].params_exchanged, 5 * 3 * 2 * dim);
        assert_eq!(out.rows[1].participants, 3);
    }

    #[test]
    fn deterministic() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn headline_follows_algorithm() {
        let pfa = run_experiment(&small()).unwrap().summary;
        assert_eq!(pfa.headline_acc, pfa.personalized_acc);
        let fa = run_experiment(&ExperimentConfig {
            algorithm: Algorithm::FedAvg,
            ..small()
        })
        .unwrap()
        .summary;
        assert_eq!(fa.headline_acc, fa.global_acc);
    }

    #[test]
    fn separable_iid_fedavg_learns() {
        let cfg = ExperimentConfig {
            algorithm: Algorithm::FedAvg,
            partition: PartitionScheme::Iid,
            num_clients: 10,
            samples_per_class: 100,
            class_separation: 5.0,
            rounds: 50,
            eval_every: 50,
            ..ExperimentConfig::default()
        };
        let acc = run_experiment(&cfg).unwrap().summary.global_acc;
        assert!(acc > 0.85, "{acc}");
    }

    #[test]
    fn undersized_population_is_a_setup_error() {
        // 10 clients × 200 draws on 100 examples exhausts every pool
        let cfg = ExperimentConfig {
            samples_per_class: 10,
            num_clients: 10,
            ..small()
        };
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn manifest_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let cfg = ExperimentConfig {
            manifest_path: Some(path.clone()),
            ..small()
        };
        let prepared = prepare(&cfg).unwrap();
        let back =
            fedsim_core::datakit::read_partition_manifest(&path, prepared.dataset.len()).unwrap();
        assert_eq!(back, prepared.partition);
    }
}
