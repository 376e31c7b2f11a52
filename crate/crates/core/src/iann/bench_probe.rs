//! Throughput probe (run with --ignored --nocapture) for sizing the
//! benchmark configurations.

use super::*;
use crate::blackbox::{BlackBox, Builtin};
use crate::numerics::RngStream;
use crate::sampling::training_design;

#[test]
#[ignore = "timing probe"]
fn harmonic_capacity() {
    let f = BlackBox::builtin(Builtin::Harmonic);
    let design = training_design(20_000, 4, 0.1, 5, &RngStream::new(7)).unwrap();
    let data = dataset_from_design(&f, &design).unwrap();
    for (label, hidden, epochs) in [
        ("32x2/400", vec![32, 32], 400usize),
        ("64x3/400", vec![64, 64, 64], 400),
    ] {
        let spec = MlpSpec {
            hidden,
            activation: Activation::Tanh,
        };
        let mut model = IannModel::ovh(
            f.domain().clone(),
            vec![0, 3, 1, 2],
            &spec,
            &RngStream::new(1),
        );
        let opts = TrainOptions {
            max_epochs: epochs,
            seed: 3,
            ..TrainOptions::default()
        };
        let t0 = std::time::Instant::now();
        let meta = train(&mut model, &data, &opts).unwrap();
        let r2 = test_r2(&model, &f, 50_000, &RngStream::new(9)).unwrap();
        println!(
            "{label}: {:.1}s for {} epochs (early_stop={}), train MSE {:.3e}, r2 {:.5}",
            t0.elapsed().as_secs_f64(),
            meta.epochs_run,
            meta.early_stopped,
            meta.final_train_mse,
            r2
        );
    }
}

#[test]
#[ignore = "timing probe"]
fn training_throughput() {
    let f = BlackBox::builtin(Builtin::Quad5);
    let design = training_design(20_000, 5, 0.1, 5, &RngStream::new(7)).unwrap();
    let data = dataset_from_design(&f, &design).unwrap();
    let spec = MlpSpec::default();
    let mut model = IannModel::ovh(
        f.domain().clone(),
        vec![0, 1, 2, 3, 4],
        &spec,
        &RngStream::new(1),
    );
    let opts = TrainOptions {
        max_epochs: 20,
        seed: 3,
        ..TrainOptions::default()
    };
    let t0 = std::time::Instant::now();
    let meta = train(&mut model, &data, &opts).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "20 epochs in {dt:.2}s ({:.3}s/epoch), final train MSE {:.3e}, val {:?}",
        dt / 20.0,
        meta.final_train_mse,
        meta.final_val_mse
    );
    let t1 = std::time::Instant::now();
    let r2 = test_r2(&model, &f, 100_000, &RngStream::new(9)).unwrap();
    println!("r2 after 20 epochs: {r2:.5} (test eval {:.2}s)", t1.elapsed().as_secs_f64());
}
