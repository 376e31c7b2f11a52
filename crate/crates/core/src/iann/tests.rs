use super::*;
use crate::blackbox::{BlackBox, Builtin, Domain};
use crate::numerics::RngStream;
use crate::sampling::lhd_maximin;

fn tiny_spec(activation: Activation) -> MlpSpec {
    MlpSpec {
        hidden: vec![8, 6],
        activation,
    }
}

fn random_batch(d: usize, batch: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = RngStream::new(seed);
    let inputs: Vec<f64> = (0..batch * d).map(|_| rng.next_f64()).collect();
    let targets: Vec<f64> = (0..batch).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
    (inputs, targets)
}

fn sample_models(activation: Activation, seed: u64) -> Vec<IannModel> {
    let spec = tiny_spec(activation);
    vec![
        IannModel::first_level(Domain::unit(4), 1, &spec, &RngStream::new(seed)),
        IannModel::ovh(
            Domain::unit(4),
            vec![2, 0, 3, 1],
            &spec,
            &RngStream::new(seed + 1),
        ),
        IannModel::dash(
            Domain::unit(5),
            vec![vec![0, 2], vec![1, 4], vec![3]],
            vec![vec![0.6, -0.8], vec![0.5, 0.5], vec![1.0]],
            vec![2, 0, 1],
            &spec,
            &RngStream::new(seed + 2),
        ),
    ]
}

#[test]
fn backprop_matches_finite_differences() {
    for activation in [Activation::Tanh, Activation::Relu, Activation::Softplus] {
        for (k, model) in sample_models(activation, 40).into_iter().enumerate() {
            let (inputs, targets) = random_batch(model.dim(), 8, 7 + k as u64);
            let err = check::max_gradient_error(&model, &inputs, &targets);
            assert!(
                err <= 1e-5,
                "{activation:?} model {k}: max gradient error {err}"
            );
        }
    }
}

#[test]
fn gradient_zero_when_predictions_equal_targets() {
    let model = &sample_models(Activation::Tanh, 3)[1];
    let (inputs, _) = random_batch(4, 6, 9);
    let mut ws = ModelWorkspace::default();
    // Targets equal to the current predictions: the loss gradient vanishes.
    let d_out = vec![0.0; 6];
    ws.forward(model, &inputs, 6);
    let mut grads = ModelGrads::zeros_like(model);
    ws.backward(model, &inputs, &d_out, 6, &mut grads);
    let mut max = 0.0f64;
    grads.for_each(|g| max = max.max(g.abs()));
    assert_eq!(max, 0.0);
}

fn linear_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let f = BlackBox::builtin(Builtin::Linear(d));
    let design = lhd_maximin(n, d, 5, &RngStream::new(seed)).unwrap();
    dataset_from_design(&f, &design).unwrap()
}

#[test]
fn training_fits_a_linear_target() {
    let data = linear_dataset(800, 4, 21);
    let variance = {
        let mean = data.targets.iter().sum::<f64>() / data.n as f64;
        data.targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / data.n as f64
    };
    let spec = MlpSpec {
        hidden: vec![32],
        activation: Activation::Tanh,
    };
    let mut model = IannModel::ovh(Domain::unit(4), vec![0, 1, 2, 3], &spec, &RngStream::new(2));
    let opts = TrainOptions {
        max_epochs: 200,
        batch_size: 32,
        learning_rate: 4e-3,
        validation_fraction: 0.1,
        seed: 5,
        ..TrainOptions::default()
    };
    let meta = train(&mut model, &data, &opts).unwrap();
    assert!(
        meta.final_train_mse <= 1e-4 * variance,
        "train MSE {} vs variance {variance}",
        meta.final_train_mse
    );
    assert_eq!(meta.loss_history.len(), meta.epochs_run);
    // Latent ranges were normalized onto [-1, 1] over the design.
    assert_eq!(model.axis2_stats.len(), model.levels());
    for (k, s) in model.axis2_stats.iter().enumerate().take(model.n_latents()) {
        assert!(s.min >= -1.0 - 1e-9 && s.max <= 1.0 + 1e-9, "latent {k}: {s:?}");
        assert!(s.p01 >= s.min && s.p99 <= s.max);
    }
}

#[test]
fn zero_epochs_leave_the_model_unchanged() {
    let data = linear_dataset(64, 4, 3);
    let spec = tiny_spec(Activation::Tanh);
    let mut model = IannModel::ovh(Domain::unit(4), vec![0, 1, 2, 3], &spec, &RngStream::new(8));
    let before = model.clone();
    let opts = TrainOptions {
        max_epochs: 0,
        ..TrainOptions::default()
    };
    train(&mut model, &data, &opts).unwrap();
    assert_eq!(model.structure, before.structure);
}

#[test]
fn same_seed_reproduces_identical_weights() {
    let data = linear_dataset(200, 4, 17);
    let spec = tiny_spec(Activation::Tanh);
    let opts = TrainOptions {
        max_epochs: 30,
        batch_size: 32,
        seed: 123,
        ..TrainOptions::default()
    };
    let run = |_: u32| {
        let mut model =
            IannModel::ovh(Domain::unit(4), vec![1, 0, 3, 2], &spec, &RngStream::new(55));
        train(&mut model, &data, &opts).unwrap();
        let mut params = Vec::new();
        model.for_each_param(|p| params.push(*p));
        params
    };
    let a = run(0);
    let b = run(1);
    assert_eq!(a, b, "training must be bit-deterministic given the seed");
}

#[test]
fn combination_weights_only_touch_their_group() {
    let data = linear_dataset(200, 5, 29);
    let spec = tiny_spec(Activation::Tanh);
    let groups = vec![vec![0, 2], vec![1, 4], vec![3]];
    let mut model = IannModel::dash(
        Domain::unit(5),
        groups.clone(),
        vec![vec![0.6, -0.8], vec![0.5, 0.5], vec![1.0]],
        vec![0, 1, 2],
        &spec,
        &RngStream::new(4),
    );
    let opts = TrainOptions {
        max_epochs: 40,
        batch_size: 32,
        seed: 9,
        ..TrainOptions::default()
    };
    train(&mut model, &data, &opts).unwrap();
    // The combination values depend only on each group's own members: the
    // support mask is structural, so off-support inputs cannot leak in.
    let u = [0.3, 0.9, 0.1, 0.5, 0.7];
    let v = model.combination_values(&u).unwrap();
    let mut u2 = u;
    u2[1] = 0.2; // member of group 2 only
    let v2 = model.combination_values(&u2).unwrap();
    assert_eq!(v[0], v2[0], "group 1 ignores x2");
    assert_eq!(v[2], v2[2], "group 3 ignores x2");
    assert_ne!(v[1], v2[1]);
    if let ModelStructure::Dash { beta, .. } = &model.structure {
        for (b, g) in beta.iter().zip(&groups) {
            assert_eq!(b.len(), g.len(), "weights exist only on the support");
        }
    }
}

#[test]
fn rescaled_targets_train_to_matching_accuracy() {
    fn base(x: &[f64]) -> f64 {
        (2.0 * x[0] - x[1]).sin() + x[2]
    }
    fn base_grad(x: &[f64]) -> Vec<f64> {
        let c = (2.0 * x[0] - x[1]).cos();
        vec![2.0 * c, -c, 1.0]
    }
    fn scaled(x: &[f64]) -> f64 {
        40.0 * base(x)
    }
    fn scaled_grad(x: &[f64]) -> Vec<f64> {
        base_grad(x).into_iter().map(|g| 40.0 * g).collect()
    }
    let fa = BlackBox::from_parts(Domain::unit(3), base, base_grad);
    let fb = BlackBox::from_parts(Domain::unit(3), scaled, scaled_grad);
    let design = lhd_maximin(600, 3, 5, &RngStream::new(31)).unwrap();
    let spec = MlpSpec {
        hidden: vec![16, 16],
        activation: Activation::Tanh,
    };
    let opts = TrainOptions {
        max_epochs: 150,
        batch_size: 64,
        seed: 77,
        ..TrainOptions::default()
    };
    let mut r2 = Vec::new();
    for f in [&fa, &fb] {
        let data = dataset_from_design(f, &design).unwrap();
        let mut model =
            IannModel::ovh(Domain::unit(3), vec![0, 1, 2], &spec, &RngStream::new(12));
        train(&mut model, &data, &opts).unwrap();
        r2.push(test_r2(&model, f, 2000, &RngStream::new(500)).unwrap());
    }
    assert!(
        (r2[0] - r2[1]).abs() <= 0.005,
        "target rescaling changed accuracy: {r2:?}"
    );
}

#[test]
fn r_squared_reference_points() {
    let targets = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(r_squared(&targets, &targets).unwrap(), 1.0);
    let mean = [2.5; 4];
    assert_eq!(r_squared(&targets, &mean).unwrap(), 0.0);
    assert!(matches!(
        r_squared(&[2.0; 4], &[2.0; 4]),
        Err(IannError::Degenerate(_))
    ));
}

#[test]
fn linear_baseline_is_exact_on_a_linear_function() {
    let f = BlackBox::builtin(Builtin::Linear(5));
    let r2 = linear_baseline_r2(&f, 400, 2000, &RngStream::new(6)).unwrap();
    assert!((r2 - 1.0).abs() <= 1e-10, "r2 = {r2}");
}

#[test]
fn model_json_round_trip_is_bit_exact() {
    let data = linear_dataset(150, 5, 41);
    let spec = tiny_spec(Activation::Tanh);
    let mut model = IannModel::dash(
        Domain::unit(5),
        vec![vec![0, 2], vec![1, 4], vec![3]],
        vec![vec![0.6, -0.8], vec![0.5, 0.5], vec![1.0]],
        vec![2, 0, 1],
        &spec,
        &RngStream::new(14),
    );
    train(
        &mut model,
        &data,
        &TrainOptions {
            max_epochs: 20,
            batch_size: 32,
            seed: 2,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    let json = model_to_json(&model);
    let back = model_from_json(&json).unwrap();
    let mut rng = RngStream::new(100);
    for _ in 0..50 {
        let u: Vec<f64> = (0..5).map(|_| rng.next_f64()).collect();
        let (fa, la) = model.forward(&u);
        let (fb, lb) = back.forward(&u);
        assert_eq!(fa.to_bits(), fb.to_bits(), "predictions must round-trip exactly");
        assert_eq!(la, lb);
    }
    assert!(model_from_json("{\"format\": \"other\"}").is_err());
    assert!(model_from_json("not json").is_err());
}

#[test]
fn first_level_sweep_returns_one_fit_per_input() {
    fn f3(x: &[f64]) -> f64 {
        x[0] * (x[1] + 2.0 * x[2]).exp()
    }
    fn f3_grad(x: &[f64]) -> Vec<f64> {
        let e = (x[1] + 2.0 * x[2]).exp();
        vec![e, x[0] * e, 2.0 * x[0] * e]
    }
    let f = BlackBox::from_parts(Domain::unit(3), f3, f3_grad);
    let design = lhd_maximin(400, 3, 5, &RngStream::new(1)).unwrap();
    let data = dataset_from_design(&f, &design).unwrap();
    let spec = MlpSpec {
        hidden: vec![12, 12],
        activation: Activation::Tanh,
    };
    let opts = TrainOptions {
        max_epochs: 120,
        batch_size: 64,
        seed: 3,
        ..TrainOptions::default()
    };
    let fits = fit_first_level_all(&f, &data, &spec, &opts, 1000, &RngStream::new(8)).unwrap();
    assert_eq!(fits.len(), 3);
    // The product structure singles out x1 exactly; it must win the sweep.
    let best = fits
        .iter()
        .max_by(|a, b| a.test_r2.partial_cmp(&b.test_r2).unwrap())
        .unwrap();
    assert_eq!(best.singled_out, 0, "r2 table: {:?}",
        fits.iter().map(|f| (f.singled_out, f.test_r2)).collect::<Vec<_>>());
    assert!(best.test_r2 > 0.95, "best fit should be accurate");
}

#[test]
fn two_input_first_level_has_a_single_input_h_net() {
    let model = IannModel::first_level(
        Domain::unit(2),
        0,
        &tiny_spec(Activation::Tanh),
        &RngStream::new(1),
    );
    if let ModelStructure::FirstLevel { h_net, .. } = &model.structure {
        assert_eq!(h_net.input_dim(), 1);
    } else {
        unreachable!();
    }
    let (f, latents) = model.forward(&[0.3, 0.8]);
    assert!(f.is_finite());
    assert_eq!(latents.len(), 1);
}

#[test]
fn divergence_is_reported_with_the_epoch() {
    let data = linear_dataset(128, 4, 51);
    let spec = tiny_spec(Activation::Tanh);
    let mut model = IannModel::ovh(Domain::unit(4), vec![0, 1, 2, 3], &spec, &RngStream::new(1));
    let opts = TrainOptions {
        max_epochs: 50,
        batch_size: 32,
        // Steps this size overflow the squared error to infinity; Adam's
        // normalized updates shrug off anything smaller.
        learning_rate: 1e200,
        seed: 1,
        ..TrainOptions::default()
    };
    match train(&mut model, &data, &opts) {
        Err(IannError::Divergence { epoch }) => assert!(epoch >= 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}
