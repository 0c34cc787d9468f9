mod common;

use adam_infomax::experiment::{self, Experiment, SynthOptions};
use adam_infomax::infomax::record_entropy;
use adam_infomax::separator::{run, Algorithm, GradientVariant, InitialSeparation, RunConfig};
use adam_infomax::{AdamHyper, SeparatingMatrix, SignalMatrix};
use common::*;
use ndarray::Array2;

fn laplacian_mixture(seed: u64, n: usize, len: usize) -> SignalMatrix {
    let mut rng = rng(seed);
    let g = gaussian(&mut rng, n, len, 1.0);
    // sign(g)·g² is heavy-tailed enough for tanh InfoMax
    SignalMatrix::new(g.mapv(|v| v * v.abs()), 1.0).unwrap()
}

fn record_w(x: &SignalMatrix, config: &RunConfig) -> Vec<Array2<f64>> {
    let mut ws = Vec::new();
    run(x, config, None, |it| ws.push(it.w.as_array().clone())).unwrap();
    ws
}

#[test]
fn natural_gradient_trajectory_is_permutation_covariant() {
    let x = laplacian_mixture(50, 3, 150);
    let mut r = rng(51);
    let w0 = well_conditioned(&mut r, 3, 20.0).into_inner();
    let perm = permutation_matrix(&[2, 0, 1]);
    for algorithm in Algorithm::ALL {
        let base = RunConfig {
            algorithm,
            gradient_variant: GradientVariant::Natural,
            block_size: 3,
            epochs: 1,
            mu: 0.01,
            adam: AdamHyper {
                eta: 0.01,
                ..AdamHyper::default()
            },
            w0: InitialSeparation::Explicit(w0.clone()),
            ..RunConfig::default()
        };
        let permuted = RunConfig {
            w0: InitialSeparation::Explicit(perm.dot(&w0)),
            ..base.clone()
        };
        let a = record_w(&x, &base);
        let b = record_w(&x, &permuted);
        assert_eq!(a.len(), 50);
        for (t, (wa, wb)) in a.iter().zip(&b).enumerate() {
            let expected = perm.dot(wa);
            let err = wb
                .iter()
                .zip(expected.iter())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{:?} iteration {}: {err}", algorithm, t + 1);
        }
    }
}

#[test]
fn observer_sees_every_iteration_and_runs_are_deterministic() {
    let x = laplacian_mixture(52, 2, 1000);
    let config = RunConfig {
        block_size: 30,
        epochs: 3,
        ..RunConfig::default()
    };
    let mut seen = Vec::new();
    let a = run(&x, &config, None, |it| seen.push((it.t, it.epoch))).unwrap();
    // ⌊1000/30⌋ = 33 blocks per epoch
    assert_eq!(seen.len(), 99);
    assert_eq!(seen.first(), Some(&(1, 1)));
    assert_eq!(seen[33], (34, 2));
    assert_eq!(seen.last(), Some(&(99, 3)));
    let b = run(&x, &config, None, |_| {}).unwrap();
    assert_eq!(a.w_final, b.w_final);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.trace.len(), 99);
    assert!(a
        .trace
        .entries()
        .iter()
        .all(|e| e.pi.is_none() && e.grad_norm.unwrap() > 0.0));
}

#[test]
fn separation_applies_final_w_to_whole_record() {
    // 1001 samples, block 100: the trailing sample is never trained on
    let x = laplacian_mixture(53, 2, 1001);
    let config = RunConfig {
        block_size: 100,
        epochs: 2,
        ..RunConfig::default()
    };
    let r = run(&x, &config, None, |_| {}).unwrap();
    assert_eq!(r.separated.samples(), 1001);
    let expected = r.w_final.as_array().dot(&x.data());
    assert_eq!(r.separated.data(), expected);
}

#[test]
fn natural_gradient_separates_super_gaussian_sources() {
    let s = laplacian_mixture(54, 3, 20_000);
    let mut r = rng(55);
    let a =
        adam_infomax::MixingMatrix::new(well_conditioned(&mut r, 3, 10.0).into_inner()).unwrap();
    let x = adam_infomax::signals::mix(&s, &a, adam_infomax::NoiseSpec::None, 0).unwrap();
    for algorithm in Algorithm::ALL {
        let config = RunConfig {
            algorithm,
            epochs: 30,
            mu: 0.002,
            adam: AdamHyper {
                eta: 0.005,
                ..AdamHyper::default()
            },
            ..RunConfig::default()
        };
        let result = run(&x, &config, Some(&a), |_| {}).unwrap();
        let pi = adam_infomax::amari_pi(&result.w_final, &a).unwrap();
        assert!(pi < 0.05, "{algorithm:?}: PI {pi}");
    }
}

/// Record-averaged entropy objective should rise between the end of the
/// first and the last epoch on the exp1 data, for every optimizer.
#[test]
fn exp1_entropy_increases_for_all_algorithms() {
    let data = experiment::synthesize(Experiment::Exp1, 1, &SynthOptions::default()).unwrap();
    for config in experiment::bench_configs(Experiment::Exp1, 1) {
        let mut first_epoch_w: Option<SeparatingMatrix> = None;
        let result = run(&data.mixtures, &config, None, |it| {
            if it.t == 1000 {
                first_epoch_w = Some(it.w.clone());
            }
        })
        .unwrap();
        let h1 = record_entropy(&first_epoch_w.unwrap(), data.mixtures.data(), 30).unwrap();
        let h_end = record_entropy(&result.w_final, data.mixtures.data(), 30).unwrap();
        assert!(h_end > h1, "{:?}: {h1} -> {h_end}", config.algorithm);
    }
}

mod vec_mat {
    use adam_infomax::separator::{matricize, stack_columns, unstack_columns};
    use ndarray::{Array1, Array2};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn stacking_round_trips(
            (n, v) in (1usize..7).prop_flat_map(|n| (Just(n), prop::collection::vec(-1e6..1e6f64, n * n)))
        ) {
            let a = Array2::from_shape_vec((n, n), v).unwrap();
            let flat = stack_columns(a.view());
            // column-major: entry (i, j) sits at j*n + i
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(flat[j * n + i], a[[i, j]]);
                }
            }
            prop_assert_eq!(&unstack_columns(flat.view(), n).unwrap(), &a);
            let w = matricize(flat.view(), n).unwrap();
            prop_assert_eq!(w.as_array(), &a);
        }

        #[test]
        fn wrong_length_is_rejected(n in 1usize..6, extra in 1usize..4) {
            let v = Array1::<f64>::zeros(n * n + extra);
            prop_assert!(unstack_columns(v.view(), n).is_err());
        }
    }
}
