//! Training-loop invariants: determinism, batching and convergence direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use valence_core::models::FeatureTimeline;
use valence_core::optim::{sgd_step, OptState, SgdConfig};
use valence_core::prep::make_windows;
use valence_core::train::{
    batch_gradient_cnn, rnn_samples, shuffled_indices, train_cnn, train_rnn, AugmentConfig, CnnFlags, Silent,
};
use valence_core::{Activation, CnnModel, CnnSpec, Error, Mode, ParamSet, RnnSpec, Tensor};

fn tiny_spec() -> CnnSpec {
    CnnSpec {
        input_height: 36,
        input_width: 36,
        conv_filters: [2, 3, 4],
        fc_units: 6,
        ..CnnSpec::default()
    }
}

fn images(n: usize, seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Tensor::from_fn(&[1, 36, 36], |_| rng.random_range(-1.0..1.0)))
        .collect()
}

fn cfg(epochs: usize) -> SgdConfig {
    SgdConfig {
        batch_size: 4,
        epochs,
        ..SgdConfig::default()
    }
}

#[test]
fn momentum_two_steps_by_hand() {
    let mut p = ParamSet::new();
    p.push("w", Tensor::vector(vec![1.0]));
    let mut g = ParamSet::new();
    g.push("w", Tensor::vector(vec![0.5]));
    let cfg = SgdConfig {
        learning_rate: 0.1,
        momentum: 0.9,
        weight_decay: 0.0,
        ..SgdConfig::default()
    };
    let mut state = OptState::new(&p);
    sgd_step(&mut p, &g, &mut state, &cfg).unwrap();
    assert!((p.at(0).data()[0] - 0.95).abs() < 1e-15);
    sgd_step(&mut p, &g, &mut state, &cfg).unwrap();
    // v = 0.9 * -0.05 - 0.05 = -0.095
    assert!((p.at(0).data()[0] - 0.855).abs() < 1e-15);
}

#[test]
fn cnn_training_is_deterministic() {
    let imgs = images(10, 1);
    let samples: Vec<(Tensor, f64)> = imgs.into_iter().enumerate().map(|(i, t)| (t, (i as f64 * 0.3).sin())).collect();
    let flags = CnnFlags { dropout: true, augment: true };
    let run = || train_cnn(&samples, tiny_spec(), &cfg(2), flags, &AugmentConfig::default(), &mut Silent).unwrap();
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a.params().checksum(), b.params().checksum());
    assert_eq!(ha, hb);
}

#[test]
fn zero_label_loss_is_non_increasing() {
    let samples: Vec<(Tensor, f64)> = images(16, 2).into_iter().map(|t| (t, 0.0)).collect();
    let spec = CnnSpec { conv_filters: [2, 2, 2], fc_units: 5, ..tiny_spec() };
    let cfg = SgdConfig { epochs: 5, ..SgdConfig::default() };
    let (_, history) = train_cnn(&samples, spec, &cfg, CnnFlags::default(), &AugmentConfig::default(), &mut Silent).unwrap();
    let losses: Vec<f64> = history.epochs.iter().map(|e| e.loss).collect();
    assert_eq!(losses.len(), 5);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0], "{losses:?}");
    }
}

#[test]
fn small_step_lowers_batch_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut model = CnnModel::init(tiny_spec(), &mut rng).unwrap();
    let imgs = images(8, 4);
    let batch: Vec<(&Tensor, f64)> = imgs.iter().enumerate().map(|(i, t)| (t, i as f64 / 8.0 - 0.5)).collect();
    let (before, grads) = batch_gradient_cnn(&model, &batch, Mode::Eval, &mut rng).unwrap();
    let step = SgdConfig {
        learning_rate: 1e-6,
        momentum: 0.0,
        weight_decay: 0.0,
        ..SgdConfig::default()
    };
    let mut state = OptState::new(model.params());
    sgd_step(model.params_mut(), &grads, &mut state, &step).unwrap();
    let (after, _) = batch_gradient_cnn(&model, &batch, Mode::Eval, &mut rng).unwrap();
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn shuffle_is_a_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [0, 1, 2, 17, 300] {
        let mut idx = shuffled_indices(n, &mut rng);
        idx.sort_unstable();
        assert_eq!(idx, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn partial_last_batch_is_kept() {
    // 10 samples, batch 4 -> batches of 4, 4, 2. The step is too small to move
    // any parameter, so the reported loss is the plain mean over all 10.
    let samples: Vec<(Tensor, f64)> = images(10, 6).into_iter().map(|t| (t, 0.25)).collect();
    let cfg = SgdConfig { learning_rate: 1e-300, epochs: 1, batch_size: 4, ..SgdConfig::default() };
    let (model, history) =
        train_cnn(&samples, tiny_spec(), &cfg, CnnFlags::default(), &AugmentConfig::default(), &mut Silent).unwrap();
    let all: Vec<(&Tensor, f64)> = samples.iter().map(|(t, y)| (t, *y)).collect();
    let (loss, _) = batch_gradient_cnn(&model, &all, Mode::Eval, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!((history.epochs[0].loss - loss).abs() < 1e-12);
}

#[test]
fn empty_training_set_is_an_error() {
    let err = train_cnn(&[], tiny_spec(), &cfg(1), CnnFlags::default(), &AugmentConfig::default(), &mut Silent);
    assert!(matches!(err, Err(Error::Empty(_))));
}

#[test]
fn diverging_run_reports_non_finite_loss() {
    let samples: Vec<(Tensor, f64)> = images(4, 7).into_iter().map(|t| (t, 1e3)).collect();
    let cfg = SgdConfig { learning_rate: 1e6, momentum: 0.9, epochs: 50, batch_size: 2, ..SgdConfig::default() };
    let err = train_cnn(&samples, tiny_spec(), &cfg, CnnFlags::default(), &AugmentConfig::default(), &mut Silent);
    assert!(matches!(err, Err(Error::NonFiniteLoss { .. })), "{err:?}");
}

fn timeline(id: &str, t: usize, dim: usize, seed: u64) -> FeatureTimeline {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats = Tensor::from_fn(&[t, dim], |_| rng.random_range(-1.0..1.0));
    let labels = (0..t).map(|i| (i as f64 * 0.05).sin() * 0.5).collect();
    FeatureTimeline::new(id, feats, Some(labels), vec![false; t]).unwrap()
}

#[test]
fn window_sampling_counts() {
    let spec = RnnSpec { input_dim: 3, hidden_sizes: vec![4], window: 100, ..RnnSpec::default() };
    let tl = timeline("s", 105, 3, 1);
    assert_eq!(rnn_samples(std::slice::from_ref(&tl), &spec).unwrap().len(), 6);
    let windows = make_windows(&tl, 100).unwrap();
    assert_eq!(windows.len(), 6);
    assert_eq!(windows[0].end, 99);
    assert_eq!(windows[5].end, 104);

    let exact = timeline("e", 100, 3, 2);
    assert_eq!(rnn_samples(&[exact], &spec).unwrap().len(), 1);

    let short = timeline("short", 99, 3, 3);
    assert!(matches!(
        rnn_samples(&[short], &spec),
        Err(Error::SequenceTooShort { len: 99, window: 100, .. })
    ));
}

#[test]
fn rnn_training_reduces_loss_and_is_deterministic() {
    let spec = RnnSpec {
        input_dim: 4,
        hidden_sizes: vec![6],
        window: 8,
        activation: Activation::Tanh,
    };
    let tls = vec![timeline("a", 60, 4, 10), timeline("b", 45, 4, 11)];
    let cfg = SgdConfig { batch_size: 16, epochs: 8, ..SgdConfig::rnn_default() };
    let (m1, h1) = train_rnn(&tls, spec.clone(), &cfg, &mut Silent).unwrap();
    let (m2, _) = train_rnn(&tls, spec, &cfg, &mut Silent).unwrap();
    assert_eq!(m1.params().checksum(), m2.params().checksum());
    assert!(h1.epochs.last().unwrap().loss < h1.epochs[0].loss);
}
