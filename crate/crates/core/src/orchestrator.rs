//! The synchronous round loop: broadcast, local training, collection,
//! classical aggregation, quantum aggregation, evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_quantum, arithmetic_mean_quantum, cluster_weighted_average, fedadam_update, ServerOptimizerState};
use crate::clustering::{eigengap_report, similarity_matrix, spectral_cluster_with_report, ClusterAssignment, EigengapReport};
use crate::data::{self, ClientDataset, Dataset};
use crate::error::{param, Error, Result};
use crate::model::{local_train, predict, ClassicalParams, ClientUpdate, HybridParams, ModelDims, QuantumParams, TrainConfig};
use crate::optim::{AdamConfig, AdamState};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Fedcompass,
    Fedavg,
    Fedprox,
    FedcompassNoClustering,
    FedcompassNoCircular,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Fedcompass,
        Strategy::Fedavg,
        Strategy::Fedprox,
        Strategy::FedcompassNoClustering,
        Strategy::FedcompassNoCircular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fedcompass => "fedcompass",
            Strategy::Fedavg => "fedavg",
            Strategy::Fedprox => "fedprox",
            Strategy::FedcompassNoClustering => "fedcompass_no_clustering",
            Strategy::FedcompassNoCircular => "fedcompass_no_circular",
        }
    }

    pub fn is_fedcompass(self) -> bool {
        matches!(self, Strategy::Fedcompass | Strategy::FedcompassNoClustering | Strategy::FedcompassNoCircular)
    }

    pub fn clusters_clients(self) -> bool {
        matches!(self, Strategy::Fedcompass | Strategy::FedcompassNoCircular)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic,
    Idx,
}

impl FromStr for DatasetSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "idx" => Ok(Self::Idx),
            _ => Err(Error::Parameter(format!("unknown dataset source `{s}`"))),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub clients: usize,
    pub alpha: f64,
    pub rounds: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub server_lr: f64,
    pub server_beta1: f64,
    pub server_beta2: f64,
    pub server_eps: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub clusters: usize,
    pub prox_mu: f64,
    pub features: usize,
    pub hidden: usize,
    pub qubits: usize,
    pub layers: usize,
    /// Class ids kept from the source; the model has `classes.len()` outputs.
    pub classes: Vec<usize>,
    pub dataset: DatasetSource,
    pub per_class: usize,
    pub spread: f64,
    pub idx_images: Option<String>,
    pub idx_labels: Option<String>,
    pub seed: u64,
    /// Worker threads for local training; 0 picks the available parallelism.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Fedcompass,
            clients: 10,
            alpha: 0.3,
            rounds: 5,
            epochs: 5,
            batch: 32,
            lr: 0.001,
            server_lr: 0.001,
            server_beta1: 0.9,
            server_beta2: 0.999,
            server_eps: 1e-8,
            lambda1: 1.0,
            lambda2: 1.0,
            clusters: 2,
            prox_mu: 0.01,
            features: 8,
            hidden: 16,
            qubits: 4,
            layers: 2,
            classes: vec![0, 1, 2, 3],
            dataset: DatasetSource::Synthetic,
            per_class: 3000,
            spread: 0.3,
            idx_images: None,
            idx_labels: None,
            seed: 42,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            features: self.features,
            hidden: self.hidden,
            qubits: self.qubits,
            layers: self.layers,
            classes: self.classes.len(),
        }
    }

    pub fn server_adam(&self) -> AdamConfig {
        AdamConfig { lr: self.server_lr, beta1: self.server_beta1, beta2: self.server_beta2, eps: self.server_eps }
    }

    /// Field-level checks; errors carry the offending key name.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key: &'static str, msg: String| Err((key, msg));
        if self.clients == 0 {
            return fail("clients", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha", format!("must be positive, got {}", self.alpha));
        }
        if self.epochs == 0 {
            return fail("epochs", "must be at least 1".into());
        }
        if self.batch == 0 {
            return fail("batch", "must be at least 1".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return fail("lr", format!("must be non-negative, got {}", self.lr));
        }
        if !(self.server_lr > 0.0 && self.server_lr.is_finite()) {
            return fail("server_lr", format!("must be positive, got {}", self.server_lr));
        }
        if !(0.0..1.0).contains(&self.server_beta1) {
            return fail("server_beta1", "must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.server_beta2) {
            return fail("server_beta2", "must lie in [0, 1)".into());
        }
        if !(self.server_eps > 0.0) {
            return fail("server_eps", "must be positive".into());
        }
        if !(self.lambda1 >= 0.0) {
            return fail("lambda1", "must be non-negative".into());
        }
        if !(self.lambda2 >= 0.0) {
            return fail("lambda2", "must be non-negative".into());
        }
        if self.strategy.clusters_clients() && (self.clusters == 0 || self.clusters > self.clients) {
            return fail("clusters", format!("must lie in 1..={}", self.clients));
        }
        if !(self.prox_mu >= 0.0 && self.prox_mu.is_finite()) {
            return fail("prox_mu", "must be non-negative".into());
        }
        if self.hidden == 0 {
            return fail("hidden", "must be at least 1".into());
        }
        if self.qubits == 0 || self.qubits > 20 {
            return fail("qubits", "must lie in 1..=20".into());
        }
        if self.classes.is_empty() {
            return fail("classes", "must list at least one class".into());
        }
        if self.classes.len() > self.qubits {
            return fail("classes", format!("{} classes exceed {} qubits", self.classes.len(), self.qubits));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return fail("classes", format!("class {c} listed twice"));
            }
        }
        match self.dataset {
            DatasetSource::Synthetic => {
                if self.classes.len() < 2 {
                    return fail("classes", "synthetic data needs at least 2 classes".into());
                }
                if self.features < 2 {
                    return fail("features", "synthetic data needs at least 2 features".into());
                }
                if self.per_class == 0 {
                    return fail("per_class", "must be at least 1".into());
                }
                if !(self.spread >= 0.0 && self.spread.is_finite()) {
                    return fail("spread", "must be non-negative".into());
                }
            }
            DatasetSource::Idx => {
                if self.idx_images.is_none() {
                    return fail("idx_images", "required when dataset = idx".into());
                }
                if self.idx_labels.is_none() {
                    return fail("idx_labels", "required when dataset = idx".into());
                }
            }
        }
        Ok(())
    }
}

/// Per-round report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub alpha: f64,
    pub accuracy: f64,
    pub loss: f64,
    /// Mean of the clients' final-epoch losses; absent for the round-0 baseline.
    pub mean_train_loss: Option<f64>,
    pub cluster_accuracies: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub eigengap: EigengapReport,
    pub degeneracies: usize,
    pub samples_seen: usize,
    pub duration_ms: f64,
}

/// Scores of a set of cluster models on the shared test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub loss: f64,
    pub cluster_accuracies: Vec<f64>,
    pub cluster_losses: Vec<f64>,
}

/// Scores every cluster model on the whole test set and averages with weights
/// equal to each cluster's share of training samples. `client_counts[i]` is
/// `n_i` for client `i` of `assignment`.
pub fn evaluate(
    cluster_models: &[ClassicalParams],
    phi: &QuantumParams,
    assignment: &ClusterAssignment,
    client_counts: &[usize],
    test: &Dataset,
) -> Result<Evaluation> {
    if test.is_empty() {
        return param("evaluation needs a non-empty test set");
    }
    if cluster_models.len() != assignment.clusters() || client_counts.len() != assignment.len() {
        return param("cluster models, assignment and client counts disagree");
    }
    let total: usize = client_counts.iter().sum();
    let mut cluster_accuracies = Vec::with_capacity(cluster_models.len());
    let mut cluster_losses = Vec::with_capacity(cluster_models.len());
    let (mut accuracy, mut loss) = (0.0, 0.0);
    for (m, classical) in cluster_models.iter().enumerate() {
        let model = HybridParams { classical: classical.clone(), quantum: phi.clone() };
        let mut correct = 0usize;
        let mut loss_sum = 0.0;
        for i in 0..test.len() {
            let (pred, l) = predict(&model, test.feature(i), test.label(i), test.classes())?;
            correct += usize::from(pred == test.label(i));
            loss_sum += l;
        }
        let acc = correct as f64 / test.len() as f64;
        let l = loss_sum / test.len() as f64;
        let share: usize = assignment.members(m).iter().map(|&i| client_counts[i]).sum();
        let share = if total == 0 { 1.0 / cluster_models.len() as f64 } else { share as f64 / total as f64 };
        accuracy += share * acc;
        loss += share * l;
        cluster_accuracies.push(acc);
        cluster_losses.push(l);
    }
    if cluster_models.len() == 1 {
        accuracy = cluster_accuracies[0];
        loss = cluster_losses[0];
    }
    Ok(Evaluation { accuracy, loss, cluster_accuracies, cluster_losses })
}

/// Global model held by the server between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub round: usize,
    /// Classical model per cluster; clients receive the model of the cluster they were last assigned to.
    pub cluster_models: Vec<ClassicalParams>,
    pub assignment: ClusterAssignment,
    pub quantum: QuantumParams,
    pub optimizer: ServerOptimizerState,
    /// Updates collected in the last completed round, in client-id order.
    pub last_updates: Vec<ClientUpdate>,
}

impl ServerState {
    pub fn initial(init: HybridParams, n_clients: usize) -> Self {
        let len = init.quantum.len();
        Self {
            round: 0,
            cluster_models: vec![init.classical],
            assignment: ClusterAssignment::single(n_clients),
            quantum: init.quantum.wrapped(),
            optimizer: AdamState::zeros(len),
            last_updates: Vec::new(),
        }
    }

    /// The model client `i` trains from in the next round.
    pub fn model_for(&self, client: usize) -> HybridParams {
        HybridParams {
            classical: self.cluster_models[self.assignment.cluster_of(client)].clone(),
            quantum: self.quantum.clone(),
        }
    }
}

/// Builds the configured dataset and splits off the shared stratified test set.
pub fn build_datasets(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let full = match config.dataset {
        DatasetSource::Synthetic => data::generate_synthetic(
            config.classes.len(),
            config.features,
            config.per_class,
            config.spread,
            derive_seed(config.seed, Stream::Dataset, 0, 0),
        )?,
        DatasetSource::Idx => {
            let images = config.idx_images.as_deref().ok_or_else(|| Error::Parameter("idx_images missing".into()))?;
            let labels = config.idx_labels.as_deref().ok_or_else(|| Error::Parameter("idx_labels missing".into()))?;
            data::load_idx(images.as_ref(), labels.as_ref(), &config.classes)?
        }
    };
    Ok(data::train_test_split(&full, derive_seed(config.seed, Stream::Split, 0, 0)))
}

/// One experiment: data, partition, server state and the round loop.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ExperimentConfig,
    dims: ModelDims,
    train: Dataset,
    test: Dataset,
    clients: Vec<ClientDataset>,
    state: ServerState,
    pool: std::sync::Arc<rayon::ThreadPool>,
}

impl Simulation {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let (train, test) = build_datasets(&config)?;
        Self::with_data(config, train, test)
    }

    /// Uses the given split; the model input width follows the training data.
    pub fn with_data(mut config: ExperimentConfig, train: Dataset, test: Dataset) -> Result<Self> {
        config.features = train.dim();
        config.validate().map_err(|(k, m)| Error::Parameter(format!("{k}: {m}")))?;
        if test.dim() != train.dim() || test.classes() != train.classes() {
            return param("train and test sets disagree on shape");
        }
        let dims = ModelDims { classes: train.classes(), ..config.dims() };
        dims.validate()?;
        let clients = data::dirichlet_partition(
            &train,
            config.clients,
            config.alpha,
            derive_seed(config.seed, Stream::Partition, 0, 0),
        )?;
        let init = HybridParams::init(&dims, derive_seed(config.seed, Stream::Init, 0, 0))?;
        let state = ServerState::initial(init, config.clients);
        let workers = if config.workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.clients)
        } else {
            config.workers
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
        Ok(Self { config, dims, train, test, clients, state, pool: std::sync::Arc::new(pool) })
    }

    /// Replaces the round-0 global model.
    pub fn set_initial_params(&mut self, init: HybridParams) -> Result<()> {
        if self.state.round != 0 {
            return Err(Error::Protocol("initial parameters can only be set before the first round".into()));
        }
        if init.flatten().len() != self.dims.classical_len() + self.dims.quantum_len() {
            return param("initial parameters do not match the model dimensions");
        }
        self.state = ServerState::initial(init, self.config.clients);
        Ok(())
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn state(&self) -> &ServerState {
        &self.state
    }

    pub fn clients(&self) -> &[ClientDataset] {
        &self.clients
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn test_set(&self) -> &Dataset {
        &self.test
    }

    pub fn client_counts(&self) -> Vec<usize> {
        self.clients.iter().map(ClientDataset::len).collect()
    }

    /// Laplacian spectrum of the current partition under the configured lambdas.
    pub fn eigengap(&self) -> Result<EigengapReport> {
        let dists = self
            .clients
            .iter()
            .map(|c| data::class_distribution(c, &self.train))
            .collect::<Result<Vec<_>>>()?;
        eigengap_report(&similarity_matrix(&dists, self.config.lambda1, self.config.lambda2)?)
    }

    /// Round-0 row: the initial model, one cluster, no training.
    pub fn baseline_metrics(&self) -> Result<RoundMetrics> {
        let eval = evaluate(
            &self.state.cluster_models,
            &self.state.quantum,
            &self.state.assignment,
            &self.client_counts(),
            &self.test,
        )?;
        Ok(RoundMetrics {
            round: self.state.round,
            strategy: self.config.strategy,
            seed: self.config.seed,
            alpha: self.config.alpha,
            accuracy: eval.accuracy,
            loss: eval.loss,
            mean_train_loss: None,
            cluster_accuracies: eval.cluster_accuracies,
            cluster_sizes: self.state.assignment.sizes(),
            eigengap: self.eigengap()?,
            degeneracies: 0,
            samples_seen: 0,
            duration_ms: 0.0,
        })
    }

    fn train_clients(&self, round: usize) -> Result<Vec<ClientUpdate>> {
        let cfg = TrainConfig {
            epochs: self.config.epochs,
            batch_size: self.config.batch,
            lr: self.config.lr,
            prox_mu: if self.config.strategy == Strategy::Fedprox { self.config.prox_mu } else { 0.0 },
        };
        let results: Vec<Result<ClientUpdate>> = self.pool.install(|| {
            self.clients
                .par_iter()
                .map(|client| {
                    let init = self.state.model_for(client.client_id);
                    let seed = derive_seed(self.config.seed, Stream::Client, client.client_id as u64, round as u64);
                    local_train(client, &self.train, &init, &cfg, seed)
                })
                .collect()
        });
        let mut updates = results.into_iter().collect::<Result<Vec<_>>>()?;
        updates.sort_by_key(|u| u.client_id);
        Ok(updates)
    }

    /// Runs one full round. On error the server state is left as it was.
    pub fn run_round(&mut self) -> Result<RoundMetrics> {
        let started = Instant::now();
        let round = self.state.round + 1;
        let updates = self.train_clients(round)?;
        let (next, degeneracies, eigengap) = self.aggregate(round, updates)?;
        let eval = evaluate(&next.cluster_models, &next.quantum, &next.assignment, &self.client_counts(), &self.test)?;
        let mean_train_loss = next.last_updates.iter().map(|u| u.train_loss).sum::<f64>() / next.last_updates.len() as f64;
        let samples_seen = next.last_updates.iter().map(|u| u.samples_seen).sum();
        let metrics = RoundMetrics {
            round,
            strategy: self.config.strategy,
            seed: self.config.seed,
            alpha: self.config.alpha,
            accuracy: eval.accuracy,
            loss: eval.loss,
            mean_train_loss: Some(mean_train_loss),
            cluster_accuracies: eval.cluster_accuracies,
            cluster_sizes: next.assignment.sizes(),
            eigengap,
            degeneracies,
            samples_seen,
            duration_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        self.state = next;
        Ok(metrics)
    }

    /// Server steps 4 and 5 on a set of collected updates, producing the next state.
    pub fn aggregate(&self, round: usize, mut updates: Vec<ClientUpdate>) -> Result<(ServerState, usize, EigengapReport)> {
        updates.sort_by_key(|u| u.client_id);
        if updates.len() != self.clients.len() {
            return Err(Error::Protocol(format!("{} of {} clients reported", updates.len(), self.clients.len())));
        }
        let strategy = self.config.strategy;
        let dists: Vec<_> = updates.iter().map(|u| u.distribution.clone()).collect();
        let similarity = similarity_matrix(&dists, self.config.lambda1, self.config.lambda2)?;
        let (assignment, eigengap) = if strategy.clusters_clients() {
            let seed = derive_seed(self.config.seed, Stream::Cluster, 0, round as u64);
            spectral_cluster_with_report(&similarity, self.config.clusters, seed)?
        } else {
            (ClusterAssignment::single(updates.len()), eigengap_report(&similarity)?)
        };
        let cluster_models = cluster_weighted_average(&updates, &assignment)?;

        let (quantum, optimizer, degeneracies) = match strategy {
            Strategy::Fedavg | Strategy::Fedprox => (arithmetic_mean_quantum(&updates)?, self.state.optimizer.clone(), 0),
            Strategy::Fedcompass | Strategy::FedcompassNoClustering => {
                let agg = aggregate_quantum(&updates, &self.state.quantum)?;
                let (phi, opt) = fedadam_update(&self.state.quantum, &agg.params, &self.state.optimizer, &self.config.server_adam())?;
                (phi, opt, agg.degenerate.len())
            }
            Strategy::FedcompassNoCircular => {
                let bar = arithmetic_mean_quantum(&updates)?;
                let (phi, opt) = fedadam_update(&self.state.quantum, &bar, &self.state.optimizer, &self.config.server_adam())?;
                (phi, opt, 0)
            }
        };
        let next = ServerState { round, cluster_models, assignment, quantum, optimizer, last_updates: updates };
        Ok((next, degeneracies, eigengap))
    }

    /// Baseline row followed by one row per configured round.
    pub fn run(&mut self) -> Result<Vec<RoundMetrics>> {
        let mut out = vec![self.baseline_metrics()?];
        for _ in 0..self.config.rounds {
            out.push(self.run_round()?);
        }
        Ok(out)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RoundMetrics>> {
    Simulation::new(config.clone())?.run()
}
