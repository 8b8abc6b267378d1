use fedsim_core::aggregation::{cluster_weighted_average, fedadam_update};
use fedsim_core::clustering::ClusterAssignment;
use fedsim_core::data::Dataset;
use fedsim_core::model::{ClassicalParams, QuantumParams};
use fedsim_core::orchestrator::{evaluate, run_experiment, ExperimentConfig, Simulation, Strategy};
use fedsim_core::Error;

fn small(strategy: Strategy) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        clients: 4,
        rounds: 2,
        epochs: 1,
        per_class: 60,
        hidden: 6,
        lr: 0.01,
        server_lr: 0.05,
        workers: 2,
        ..ExperimentConfig::default()
    }
}

fn quantum_of(sim: &Simulation) -> &QuantumParams {
    &sim.state().quantum
}

#[test]
fn same_seed_gives_identical_metrics() {
    let cfg = small(Strategy::Fedcompass);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&ExperimentConfig { workers: 1, ..cfg }).unwrap();
    let strip = |m: &[fedsim_core::orchestrator::RoundMetrics]| {
        m.iter().map(|r| fedsim_core::orchestrator::RoundMetrics { duration_ms: 0.0, ..r.clone() }).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.len(), 3);
    for m in &a {
        assert!((0.0..=1.0).contains(&m.accuracy));
        assert_eq!(m.cluster_sizes.iter().sum::<usize>(), 4);
    }
}

#[test]
fn zero_rounds_gives_baseline_only() {
    let metrics = run_experiment(&ExperimentConfig { rounds: 0, ..small(Strategy::Fedavg) }).unwrap();
    assert_eq!(metrics.len(), 1);
    assert_eq!(metrics[0].round, 0);
    assert_eq!(metrics[0].mean_train_loss, None);
    assert_eq!(metrics[0].samples_seen, 0);
}

#[test]
fn fedprox_without_proximal_term_is_fedavg() {
    let mut prox = Simulation::new(ExperimentConfig { prox_mu: 0.0, ..small(Strategy::Fedprox) }).unwrap();
    let mut avg = Simulation::new(small(Strategy::Fedavg)).unwrap();
    for _ in 0..2 {
        let a = prox.run_round().unwrap();
        let b = avg.run_round().unwrap();
        assert_eq!(prox.state().cluster_models, avg.state().cluster_models);
        assert_eq!(quantum_of(&prox), quantum_of(&avg));
        assert_eq!((a.accuracy, a.loss, a.mean_train_loss), (b.accuracy, b.loss, b.mean_train_loss));
    }
}

#[test]
fn one_cluster_fedcompass_is_no_clustering() {
    let mut one = Simulation::new(ExperimentConfig { clusters: 1, ..small(Strategy::Fedcompass) }).unwrap();
    let mut flat = Simulation::new(small(Strategy::FedcompassNoClustering)).unwrap();
    for _ in 0..2 {
        one.run_round().unwrap();
        flat.run_round().unwrap();
        assert_eq!(one.state().cluster_models, flat.state().cluster_models);
        assert_eq!(quantum_of(&one), quantum_of(&flat));
    }
}

#[test]
fn one_cluster_classical_path_is_the_fedavg_path() {
    let mut compass = Simulation::new(ExperimentConfig { clusters: 1, ..small(Strategy::Fedcompass) }).unwrap();
    let mut avg = Simulation::new(small(Strategy::Fedavg)).unwrap();
    for round in 1..=3 {
        compass.run_round().unwrap();
        avg.run_round().unwrap();
        let updates = compass.state().last_updates.clone();
        let (via_fedavg, _, _) = avg.aggregate(round, updates.clone()).unwrap();
        assert_eq!(via_fedavg.cluster_models, compass.state().cluster_models, "round {round}");
        let plain = cluster_weighted_average(&updates, &ClusterAssignment::single(updates.len())).unwrap();
        assert_eq!(plain, compass.state().cluster_models);
        if round == 1 {
            // Same broadcast model, so the first classical aggregates agree across runs.
            assert_eq!(avg.state().cluster_models, compass.state().cluster_models);
        }
    }
}

#[test]
fn aggregation_is_order_independent() {
    let mut sim = Simulation::new(small(Strategy::Fedcompass)).unwrap();
    sim.run_round().unwrap();
    let mut updates = sim.state().last_updates.clone();
    let (a, da, ea) = sim.aggregate(2, updates.clone()).unwrap();
    updates.reverse();
    updates.swap(0, 1);
    let (b, db, eb) = sim.aggregate(2, updates).unwrap();
    assert_eq!(a, b);
    assert_eq!((da, ea), (db, eb));
}

#[test]
fn single_client_passes_its_model_through() {
    let cfg = ExperimentConfig { clients: 1, clusters: 1, ..small(Strategy::Fedcompass) };
    let mut sim = Simulation::new(cfg.clone()).unwrap();
    let before = sim.state().clone();
    sim.run_round().unwrap();
    let u = &sim.state().last_updates[0];
    assert_eq!(sim.state().cluster_models, vec![u.params.classical.clone()]);
    let (phi, _) = fedadam_update(&before.quantum, &u.params.quantum, &before.optimizer, &cfg.server_adam()).unwrap();
    assert_eq!(&phi, quantum_of(&sim));

    // M is ignored outside the clustering strategies, so the default of 2 is fine here.
    let mut avg = Simulation::new(ExperimentConfig { strategy: Strategy::Fedavg, clusters: 2, ..cfg }).unwrap();
    avg.run_round().unwrap();
    let u = &avg.state().last_updates[0];
    assert_eq!(avg.state().cluster_models, vec![u.params.classical.clone()]);
    assert_eq!(quantum_of(&avg), &u.params.quantum);
}

#[test]
fn samples_seen_is_conserved() {
    let cfg = ExperimentConfig { epochs: 3, ..small(Strategy::Fedprox) };
    let mut sim = Simulation::new(cfg).unwrap();
    let m = sim.run_round().unwrap();
    let total: usize = sim.client_counts().iter().sum();
    assert_eq!(m.samples_seen, total * 3);
    assert_eq!(total, sim.train_set().len());
}

#[test]
fn failed_round_leaves_state_untouched() {
    let mut sim = Simulation::new(ExperimentConfig { lr: f64::MAX, epochs: 3, ..small(Strategy::Fedcompass) }).unwrap();
    let before = sim.state().clone();
    assert!(matches!(sim.run_round(), Err(Error::Numeric(_))));
    assert_eq!(sim.state(), &before);
}

#[test]
fn partial_collection_is_rejected() {
    let mut sim = Simulation::new(small(Strategy::Fedavg)).unwrap();
    sim.run_round().unwrap();
    let before = sim.state().clone();
    let mut updates = before.last_updates.clone();
    updates.pop();
    assert!(matches!(sim.aggregate(2, updates), Err(Error::Protocol(_))));
    assert_eq!(sim.state(), &before);
}

#[test]
fn clustering_strategies_report_their_clusters() {
    let mut sim = Simulation::new(small(Strategy::Fedcompass)).unwrap();
    let m = sim.run_round().unwrap();
    assert_eq!(m.cluster_sizes.len(), 2);
    assert_eq!(m.cluster_accuracies.len(), 2);
    assert_eq!(sim.state().cluster_models.len(), 2);
    assert_eq!(m.eigengap.eigenvalues.len(), 4);
    let mut avg = Simulation::new(small(Strategy::FedcompassNoCircular)).unwrap();
    assert_eq!(avg.run_round().unwrap().cluster_sizes.len(), 2);
    let mut flat = Simulation::new(small(Strategy::FedcompassNoClustering)).unwrap();
    assert_eq!(flat.run_round().unwrap().cluster_sizes, vec![4]);
}

#[test]
fn local_training_reduces_loss_on_toy_data() {
    let cfg = ExperimentConfig { clients: 2, clusters: 1, epochs: 3, lr: 0.02, ..small(Strategy::Fedavg) };
    let mut sim = Simulation::new(cfg).unwrap();
    let base = sim.baseline_metrics().unwrap();
    let first = sim.run_round().unwrap();
    let second = sim.run_round().unwrap();
    assert!(first.loss < base.loss);
    assert!(second.mean_train_loss.unwrap() < first.mean_train_loss.unwrap());
}

/// Two-class set where `x = 0` is class 0 and `x = 1` is class 1.
fn toy_test_set() -> Dataset {
    Dataset::new(vec![0.0, 1.0, 0.0, 1.0], vec![0, 1, 0, 1], 1, 2).unwrap()
}

// W1 = 20 saturates tanh so class 1 embeds at (1, 1); after the CNOT ring that
// state reads <Z0> = -1, <Z1> = +1. Class 0 embeds at (0, 0) and reads a tie,
// which resolves to class 0.
fn perfect_model() -> ClassicalParams {
    ClassicalParams::from_flat(1, 1, 2, vec![20.0, 0.0, 20.0, 20.0, 0.0, 0.0]).unwrap()
}

fn constant_model() -> ClassicalParams {
    ClassicalParams::from_flat(1, 1, 2, vec![0.0; 6]).unwrap()
}

#[test]
fn evaluation_weights_clusters_by_train_share() {
    let phi = QuantumParams::new(2, 1, vec![0.0, 0.0]).unwrap();
    let test = toy_test_set();
    let one = evaluate(&[perfect_model()], &phi, &ClusterAssignment::single(2), &[5, 5], &test).unwrap();
    assert_eq!(one.accuracy, 1.0);
    let assignment = ClusterAssignment::from_labels(&[0, 1]).unwrap();
    let two = evaluate(&[constant_model(), perfect_model()], &phi, &assignment, &[1, 3], &test).unwrap();
    assert_eq!(two.cluster_accuracies, vec![0.5, 1.0]);
    assert!((two.accuracy - 0.875).abs() < 1e-15);
}

#[test]
fn evaluation_rejects_empty_test_set() {
    let phi = QuantumParams::new(2, 1, vec![0.0, 0.0]).unwrap();
    let empty = Dataset::new(vec![], vec![], 1, 2).unwrap();
    let r = evaluate(&[constant_model()], &phi, &ClusterAssignment::single(1), &[1], &empty);
    assert!(matches!(r, Err(Error::Parameter(_))));
}

#[test]
fn invalid_configs_name_their_key() {
    let bad = [
        (ExperimentConfig { qubits: 2, ..ExperimentConfig::default() }, "classes"),
        (ExperimentConfig { clusters: 11, ..ExperimentConfig::default() }, "clusters"),
        (ExperimentConfig { alpha: 0.0, ..ExperimentConfig::default() }, "alpha"),
        (ExperimentConfig { clients: 0, ..ExperimentConfig::default() }, "clients"),
    ];
    for (cfg, key) in bad {
        assert_eq!(cfg.validate().unwrap_err().0, key);
    }
}
