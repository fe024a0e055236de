use hdalab_core::augment::AugmentationPolicy;
use hdalab_core::data::{generate_synthetic, Dataset, Source};
use hdalab_core::engine::{
    evaluate, run_experiment, train, write_history_csv, ExperimentSetup, Protocol, TrainConfig,
};
use hdalab_core::model::{
    adam_step, build_model, read_checkpoint, write_checkpoint, AdamConfig, AdamState, LayerSpec, ModelName,
    Parameters,
};

fn linear_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig { epochs, seed, model_name: ModelName::LinearBaseline, ..Default::default() }
}

#[test]
fn adam_step_size_approaches_lr_under_constant_gradient() {
    let layers = [LayerSpec::Dense { in_features: 3, out_features: 2 }];
    let mut params = Parameters::<f64>::zeros(&layers);
    let mut grads = params.zeros_like();
    for (k, g) in grads.tensors_mut().iter_mut().flat_map(|t| t.data.iter_mut()).enumerate() {
        *g = if k % 2 == 0 { 0.3 } else { -2.0 };
    }
    let cfg = AdamConfig { lr: 1e-3, ..Default::default() };
    let mut state = AdamState::new(&params, cfg);
    let mut before = params.clone();
    for _ in 0..5000 {
        before = params.clone();
        adam_step(&mut params, &grads, &mut state);
    }
    for ((a, b), g) in before.iter().zip(params.iter()).zip(grads.iter()) {
        let moved = a - b;
        assert!((moved - cfg.lr * g.signum()).abs() < 1e-6 * cfg.lr, "{moved}");
    }
}

#[test]
fn training_is_bit_reproducible() {
    let ds = generate_synthetic(8, 3).unwrap();
    let spec = build_model("mini_vgg").unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 5, seed: 4, ..Default::default() };
    let a = train(&spec, &ds, &ds, &cfg).unwrap();
    let b = train(&spec, &ds, &ds, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.final_params, b.final_params);
    let mut ha = Vec::new();
    let mut hb = Vec::new();
    write_history_csv(&a.history, &mut ha).unwrap();
    write_history_csv(&b.history, &mut hb).unwrap();
    assert_eq!(ha, hb);

    let other = train(&spec, &ds, &ds, &TrainConfig { seed: 5, ..cfg }).unwrap();
    assert_ne!(other.final_params, a.final_params);
}

#[test]
fn one_item_epoch_takes_one_step() {
    let ds = generate_synthetic(1, 0).unwrap().select(&[0]);
    let spec = build_model("linear_baseline").unwrap();
    let out = train(&spec, &ds, &ds, &linear_config(1, 0)).unwrap();
    assert_eq!(out.optimizer_steps, 1);
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.history[0].epoch, 1);
}

#[test]
fn final_short_batch_is_trained() {
    let ds = generate_synthetic(11, 0).unwrap();
    let spec = build_model("linear_baseline").unwrap();
    let out = train(&spec, &ds, &ds, &linear_config(3, 0)).unwrap();
    // 33 items at batch 32 is two steps per epoch.
    assert_eq!(out.optimizer_steps, 6);
}

#[test]
fn linear_baseline_overfits_32_items() {
    let ds = generate_synthetic(11, 12).unwrap().select(&(0..32).collect::<Vec<_>>());
    let spec = build_model("linear_baseline").unwrap();
    let out = train(&spec, &ds, &ds, &linear_config(200, 1)).unwrap();
    let first = out.history.iter().position(|m| m.train_acc == 1.0);
    assert!(first.is_some(), "final train_acc {}", out.history.last().unwrap().train_acc);
    for m in &out.history {
        assert!((0.0..=1.0).contains(&m.train_acc) && (0.0..=1.0).contains(&m.val_acc));
        assert!(m.train_loss.is_finite() && m.val_loss.is_finite());
    }
}

#[test]
fn best_parameters_reproduce_best_validation_accuracy() {
    let ds = generate_synthetic(10, 2).unwrap();
    let (tr, va) = (ds.select(&(0..24).collect::<Vec<_>>()), ds.select(&(24..30).collect::<Vec<_>>()));
    let spec = build_model("linear_baseline").unwrap();
    let out = train(&spec, &tr, &va, &linear_config(6, 9)).unwrap();
    let eval = evaluate(&spec, &out.best_params, &va).unwrap();
    assert_eq!(eval.accuracy, out.history[out.best_epoch].val_acc);

    let mut bytes = Vec::new();
    write_checkpoint(&spec, &out.best_params, &mut bytes).unwrap();
    let (spec2, params2) = read_checkpoint(bytes.as_slice()).unwrap();
    assert_eq!(spec2, spec);
    assert_eq!(params2, out.best_params);
}

#[test]
fn identity_policy_gives_identical_arms() {
    let ds = generate_synthetic(20, 1).unwrap();
    let report = run_experiment(&ds, &AugmentationPolicy::identity(), &linear_config(2, 3), &ExperimentSetup::default())
        .unwrap();
    assert!(report.arms_identical);
    assert_eq!(report.baseline, report.hda);
    assert_eq!(report.test_acc_delta, 0.0);
}

#[test]
fn leakage_counter_separates_protocols() {
    let base = generate_synthetic(20, 6).unwrap();
    let policy = AugmentationPolicy::default();
    let cfg = linear_config(1, 0);

    let after = run_experiment(&base, &policy, &cfg, &ExperimentSetup::default()).unwrap();
    assert_eq!(after.baseline.leakage.total(), 0);
    assert_eq!(after.hda.leakage.total(), 0);
    assert_eq!(after.hda.train_size, 4 * after.baseline.train_size);

    let mut items = base.items().to_vec();
    items.extend(base.items().iter().cloned());
    let duplicated = Dataset::new(items, Source::Synthetic).unwrap();
    let setup = ExperimentSetup { protocol: Protocol::AugmentBeforeSplit, ..Default::default() };
    let before = run_experiment(&duplicated, &policy, &cfg, &setup).unwrap();
    assert!(before.hda.leakage.train_test > 0);
    assert_eq!(before.protocol, Protocol::AugmentBeforeSplit);
}
