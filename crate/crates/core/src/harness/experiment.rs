//! The federated training loop and multi-mode comparisons.

use rayon::prelude::*;

use crate::client::{local_training, ClientResult};
use crate::data::{self, Dataset, PartitionSpec};
use crate::error::{Error, Result};
use crate::harness::config::{DatasetSource, ExperimentConfig};
use crate::metrics::{self, evaluate, Evaluation};
use crate::model::{self, ClassifierParams, ModelParams};
use crate::numkit::Rng;
use crate::server::{
    self, aggregate, select_with_similarities, MajorVectors, Payload, SelectionMode,
    SimilarityReport,
};

/// Everything derived from the seed before training starts; shared by all
/// modes run with the same seed.
#[derive(Debug, Clone)]
pub struct Setup {
    pub train: Dataset,
    pub test: Dataset,
    pub partition: PartitionSpec,
    pub shards: Vec<Dataset>,
    pub init: ModelParams,
}

/// Builds dataset, held-out split, partition and initial model for `cfg`.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let root = Rng::new(cfg.seed);
    let full = match &cfg.dataset {
        DatasetSource::Synth => data::synth_clusters(&mut root.child("data", 0), &cfg.synth_spec())?,
        DatasetSource::File(path) => {
            let ds = data::load_features(path)?;
            if ds.num_classes != cfg.classes || ds.num_features() != cfg.features {
                return Err(Error::Config(format!(
                    "feature file declares C={} F={}, config says classes={} features={}",
                    ds.num_classes,
                    ds.num_features(),
                    cfg.classes,
                    cfg.features
                )));
            }
            ds
        }
    };
    let (train, test) = data::stratified_split(&mut root.child("split", 0), &full, cfg.eval_split)?;
    let partition = data::partition(
        &mut root.child("partition", 0),
        &train,
        cfg.clients,
        cfg.alpha,
        cfg.min_samples,
    )?;
    if let Some(k) = partition.client_indices.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "client {k} received no samples; raise min_samples or alpha"
        )));
    }
    let shards = partition
        .client_indices
        .iter()
        .map(|idx| train.subset(idx))
        .collect();
    let init = model::init(&mut root.child("init", 0), cfg.dims())?;
    Ok(Setup {
        train,
        test,
        partition,
        shards,
        init,
    })
}

/// One communication round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub eval: Evaluation,
    pub client_ce: Vec<f64>,
    pub client_con: Vec<f64>,
    /// `N_k`-weighted means of the client losses.
    pub mean_ce: f64,
    pub mean_con: f64,
    /// Source client of each anchor row selected at the end of this round;
    /// empty in the `none` mode.
    pub provenance: Vec<usize>,
    pub similarity: SimilarityReport,
    pub payload: Payload,
    pub degenerate_batches: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub initial: Evaluation,
    pub final_eval: Evaluation,
    pub rounds: Vec<RoundLog>,
    pub partition: PartitionSpec,
    pub final_params: ModelParams,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = prepare(cfg)?;
    run_prepared(cfg, &setup)
}

/// Runs the federated loop on an already prepared setup.
pub fn run_prepared(cfg: &ExperimentConfig, setup: &Setup) -> Result<ExperimentResult> {
    let root = Rng::new(cfg.seed);
    let client_cfg = cfg.client_config();
    let weights = setup.partition.weights();
    let k = setup.shards.len();

    let mut global = setup.init.clone();
    let mut anchors = match cfg.mode {
        SelectionMode::None => None,
        _ => Some(MajorVectors::from_initial(global.classifier.weights.clone())),
    };
    let initial = evaluate(&global, &setup.test)?;
    let mut rounds = Vec::with_capacity(cfg.rounds);

    for t in 1..=cfg.rounds {
        let round_rng = root.child("round", t as u64);
        let payload = server::payload(&global, anchors.as_ref());
        let results: Vec<ClientResult> = (0..k)
            .into_par_iter()
            .map(|c| {
                let mut rng = round_rng.child("client", c as u64);
                local_training(&global, anchors.as_ref(), &setup.shards[c], &client_cfg, &mut rng)
                    .map_err(|e| e.in_round(t, Some(c)))
            })
            .collect::<Result<_>>()?;

        let classifiers: Vec<ClassifierParams> =
            results.iter().map(|r| r.params.classifier.clone()).collect();
        let similarity = server::similarity_report(&classifiers, &weights, t)
            .map_err(|e| attribute_degenerate(e, t, &classifiers))?;
        let params: Vec<ModelParams> = results.iter().map(|r| r.params.clone()).collect();
        global = aggregate(&params, &weights).map_err(|e| e.in_round(t, None))?;
        anchors = select_with_similarities(
            cfg.mode,
            &classifiers,
            &similarity.local,
            &mut round_rng.child("select", 0),
        )
        .map_err(|e| e.in_round(t, None))?;

        let eval = evaluate(&global, &setup.test).map_err(|e| e.in_round(t, None))?;
        let weighted = |f: fn(&ClientResult) -> f64| {
            results.iter().zip(&weights).map(|(r, w)| w * f(r)).sum::<f64>()
        };
        rounds.push(RoundLog {
            round: t,
            eval,
            client_ce: results.iter().map(|r| r.mean_ce).collect(),
            client_con: results.iter().map(|r| r.mean_con).collect(),
            mean_ce: weighted(|r| r.mean_ce),
            mean_con: weighted(|r| r.mean_con),
            provenance: anchors
                .as_ref()
                .map(|a| a.provenance.iter().map(|p| p.expect("selected row")).collect())
                .unwrap_or_default(),
            similarity,
            payload,
            degenerate_batches: results.iter().map(|r| r.degenerate_batches).sum(),
        });
    }

    let final_eval = rounds.last().map_or_else(|| initial.clone(), |r| r.eval.clone());
    Ok(ExperimentResult {
        config: cfg.clone(),
        initial,
        final_eval,
        rounds,
        partition: setup.partition.clone(),
        final_params: global,
    })
}

fn attribute_degenerate(e: Error, round: usize, classifiers: &[ClassifierParams]) -> Error {
    let client = classifiers
        .iter()
        .position(|c| server::local_avg_similarity(c).is_err());
    e.in_round(round, client)
}

/// Centralized reference: SGD on the pooled training set for
/// `rounds × local_epochs` epochs from the same initial model.
pub fn run_centralized(cfg: &ExperimentConfig, setup: &Setup) -> Result<Evaluation> {
    let trained = metrics::centralized_train(
        &setup.init,
        &setup.train,
        cfg.learning_rate,
        cfg.batch_size,
        cfg.rounds * cfg.local_epochs,
        &mut Rng::new(cfg.seed).child("centralized", 0),
    )?;
    evaluate(&trained, &setup.test)
}

/// μ values swept by [`compare_modes`] when a sweep is requested.
pub const MU_SWEEP: [f64; 3] = [0.1, 0.5, 1.0];

/// One table row of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    /// A selection mode name, or `centralized`.
    pub method: String,
    pub seed: u64,
    pub mu: f64,
    pub eval: Evaluation,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub runs: Vec<ExperimentResult>,
    pub centralized: Vec<ComparisonRow>,
}

impl Comparison {
    /// Federated rows (one per mode, μ and seed) followed by centralized
    /// rows (one per seed).
    pub fn table(&self) -> Vec<ComparisonRow> {
        self.runs
            .iter()
            .map(|r| ComparisonRow {
                method: r.config.mode.to_string(),
                seed: r.config.seed,
                mu: r.config.effective_mu(),
                eval: r.final_eval.clone(),
            })
            .chain(self.centralized.iter().cloned())
            .collect()
    }

    pub fn runs_for(&self, mode: SelectionMode) -> impl Iterator<Item = &ExperimentResult> {
        self.runs.iter().filter(move |r| r.config.mode == mode)
    }

    /// Mean final macro-F1 of a mode across its runs.
    pub fn mean_macro_f1(&self, mode: SelectionMode) -> f64 {
        mean(self.runs_for(mode).map(|r| r.final_eval.macro_f1))
    }

    pub fn mean_centralized_macro_f1(&self) -> f64 {
        mean(self.centralized.iter().map(|r| r.eval.macro_f1))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs every mode on every seed with a shared setup per seed. `mus`
/// lists the μ values for modes with anchors (`none` always runs once
/// per seed); `None` uses the config's μ.
pub fn compare_modes(
    cfg: &ExperimentConfig,
    modes: &[SelectionMode],
    seeds: &[u64],
    mus: Option<&[f64]>,
    with_centralized: bool,
) -> Result<Comparison> {
    let mut runs = Vec::new();
    let mut centralized = Vec::new();
    let default_mu = [cfg.mu];
    let mus = mus.unwrap_or(&default_mu);
    for &seed in seeds {
        let seeded = ExperimentConfig {
            seed,
            ..cfg.clone()
        };
        let setup = prepare(&seeded)?;
        for &mode in modes {
            let mode_mus: &[f64] = if mode == SelectionMode::None {
                &mus[..1]
            } else {
                mus
            };
            for &mu in mode_mus {
                let run_cfg = ExperimentConfig {
                    mode,
                    mu,
                    ..seeded.clone()
                };
                runs.push(run_prepared(&run_cfg, &setup)?);
            }
        }
        if with_centralized {
            centralized.push(ComparisonRow {
                method: "centralized".into(),
                seed,
                mu: 0.0,
                eval: run_centralized(&seeded, &setup)?,
            });
        }
    }
    Ok(Comparison { runs, centralized })
}
