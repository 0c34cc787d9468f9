use std::ffi::CStr;
use std::ptr;

use adam_infomax::experiment::{self, Experiment};
use adam_infomax::separator::{run, Algorithm};
use adam_infomax::signals::{self, NoiseSpec};
use adam_infomax_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ai_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn status_codes_are_stable() {
    assert_eq!(AiStatus::Ok as i32, 0);
    assert_eq!(AiStatus::InvalidArgument as i32, 1);
    assert_eq!(AiStatus::SingularMatrix as i32, 2);
    assert_eq!(AiStatus::Diverged as i32, 4);
    assert_eq!(AiStatus::Panic as i32, 8);
}

#[test]
fn separate_matches_the_rust_api() {
    let sources = signals::generate_paper_sources(1500, 2).unwrap();
    let a = signals::hilbert_matrix(5).unwrap();
    let x = signals::mix(&sources, &a, NoiseSpec::None, 2).unwrap();
    let mut cfg = AiRunConfig {
        epochs: 3,
        ..ai_run_config_default()
    };
    assert_eq!(
        unsafe { ai_run_config_for_experiment(1, AiAlgorithm::Momentum, 2, &mut cfg) },
        AiStatus::Ok
    );
    assert_eq!(cfg.epochs, 200);
    cfg.epochs = 3;

    let flat: Vec<f64> = x.data().iter().copied().collect();
    let mixing: Vec<f64> = a.as_array().iter().copied().collect();
    let mut handle = ptr::null_mut();
    let st = unsafe {
        ai_separate(
            flat.as_ptr(),
            5,
            1500,
            &cfg,
            ptr::null(),
            mixing.as_ptr(),
            &mut handle,
        )
    };
    assert_eq!(st, AiStatus::Ok, "{}", last_error());
    assert!(last_error().is_empty());

    let mut rust_cfg = experiment::default_config(Experiment::Exp1, Algorithm::Momentum, 2);
    rust_cfg.epochs = 3;
    let expected = run(&x, &rust_cfg, Some(&a), |_| {}).unwrap();

    let mut w = vec![0.0; 25];
    assert_eq!(
        unsafe { ai_result_w(handle, w.as_mut_ptr(), 25) },
        AiStatus::Ok
    );
    assert_eq!(
        w,
        expected
            .w_final
            .as_array()
            .iter()
            .copied()
            .collect::<Vec<_>>()
    );

    let mut sep = vec![0.0; 5 * 1500];
    assert_eq!(
        unsafe { ai_result_separated(handle, sep.as_mut_ptr(), sep.len()) },
        AiStatus::Ok
    );
    assert_eq!(sep[1500 * 2 + 7], expected.separated.data()[[2, 7]]);

    assert_eq!(
        unsafe { ai_result_trace_len(handle, AiTraceKind::Iterations) },
        150
    );
    assert_eq!(
        unsafe { ai_result_trace_len(handle, AiTraceKind::Epochs) },
        3
    );
    let mut e = AiTraceEntry {
        iteration: 0,
        epoch: 0,
        pi: 0.0,
        grad_norm: 0.0,
    };
    assert_eq!(
        unsafe { ai_result_trace_entry(handle, AiTraceKind::Iterations, 0, &mut e) },
        AiStatus::Ok
    );
    assert_eq!((e.iteration, e.epoch), (1, 1));
    assert!(e.pi.is_nan());
    assert_eq!(e.grad_norm, expected.trace.entries()[0].grad_norm.unwrap());
    assert_eq!(
        unsafe { ai_result_trace_entry(handle, AiTraceKind::Epochs, 3, &mut e) },
        AiStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    let mut small = vec![0.0; 4];
    assert_eq!(
        unsafe { ai_result_w(handle, small.as_mut_ptr(), 4) },
        AiStatus::InvalidArgument
    );
    unsafe { ai_result_free(handle) };
}

#[test]
fn null_pointers_and_bad_arguments() {
    let cfg = ai_run_config_default();
    let x = [0.1, 0.2, 0.3, 0.4];
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(
            ai_separate(
                ptr::null(),
                2,
                2,
                &cfg,
                ptr::null(),
                ptr::null(),
                &mut handle
            ),
            AiStatus::NullPointer
        );
        assert!(handle.is_null());
        assert_eq!(
            ai_separate(
                x.as_ptr(),
                2,
                2,
                ptr::null(),
                ptr::null(),
                ptr::null(),
                &mut handle
            ),
            AiStatus::NullPointer
        );
        assert_eq!(
            ai_separate(
                x.as_ptr(),
                2,
                2,
                &cfg,
                ptr::null(),
                ptr::null(),
                ptr::null_mut()
            ),
            AiStatus::NullPointer
        );
        let bad = AiRunConfig {
            block_size: 0,
            ..cfg
        };
        assert_eq!(
            ai_separate(
                x.as_ptr(),
                2,
                2,
                &bad,
                ptr::null(),
                ptr::null(),
                &mut handle
            ),
            AiStatus::InvalidArgument
        );
        assert!(last_error().contains("block_size"));

        assert_eq!(ai_result_channels(ptr::null()), 0);
        assert_eq!(ai_result_trace_len(ptr::null(), AiTraceKind::Epochs), 0);
        assert_eq!(
            ai_result_w(ptr::null(), ptr::null_mut(), 0),
            AiStatus::NullPointer
        );
        ai_result_free(ptr::null_mut());
        ai_adam_free(ptr::null_mut());

        let mut cfg_out = cfg;
        assert_eq!(
            ai_run_config_for_experiment(4, AiAlgorithm::Adam, 0, &mut cfg_out),
            AiStatus::InvalidArgument
        );
        let mut pi = 0.0;
        assert_eq!(
            ai_amari_pi(x.as_ptr(), x.as_ptr(), 1, &mut pi),
            AiStatus::InvalidArgument
        );
        let zero = [0.0; 4];
        assert_eq!(
            ai_amari_pi(zero.as_ptr(), x.as_ptr(), 2, &mut pi),
            AiStatus::Degenerate
        );
    }
}

#[test]
fn singular_and_divergent_runs_report_status() {
    let x: Vec<f64> = (0..600)
        .map(|i| ((i * 37 % 101) as f64 - 50.0) / 10.0)
        .collect();
    let singular = [1.0, 1.0, 1.0, 1.0];
    let mut g = [0.0; 4];
    let st = unsafe {
        ai_gradient(
            singular.as_ptr(),
            x.as_ptr(),
            2,
            3,
            AiGradient::Standard,
            g.as_mut_ptr(),
        )
    };
    assert_eq!(st, AiStatus::SingularMatrix);
    let st = unsafe {
        ai_gradient(
            singular.as_ptr(),
            x.as_ptr(),
            2,
            3,
            AiGradient::Natural,
            g.as_mut_ptr(),
        )
    };
    assert_eq!(st, AiStatus::Ok);

    let cfg = AiRunConfig {
        algorithm: AiAlgorithm::Sgd,
        mu: 0.9,
        epochs: 50,
        block_size: 1,
        ..ai_run_config_default()
    };
    let mut handle = ptr::null_mut();
    let st = unsafe {
        ai_separate(
            x.as_ptr(),
            2,
            300,
            &cfg,
            ptr::null(),
            ptr::null(),
            &mut handle,
        )
    };
    assert_eq!(st, AiStatus::Diverged, "{}", last_error());
    assert!(handle.is_null());
}

#[test]
fn gradient_matches_worked_example() {
    let w = [2.0];
    let x = [0.5];
    let mut g = [0.0];
    unsafe {
        assert_eq!(
            ai_gradient(
                w.as_ptr(),
                x.as_ptr(),
                1,
                1,
                AiGradient::Standard,
                g.as_mut_ptr()
            ),
            AiStatus::Ok
        );
    }
    assert!((g[0] - (-0.261_594_155_955_764_9)).abs() < 1e-12);
}

#[test]
fn adam_handle_steps_and_keeps_state_on_error() {
    let hyper = ai_adam_hyper_default();
    assert_eq!(hyper.beta2, 0.999);
    let mut adam = ptr::null_mut();
    unsafe {
        assert_eq!(ai_adam_new(2, &hyper, &mut adam), AiStatus::Ok);
        let mut u = [0.0; 2];
        assert_eq!(
            ai_adam_step(
                adam,
                [4.0, -1.0].as_ptr(),
                2,
                AiDirection::Descent,
                u.as_mut_ptr()
            ),
            AiStatus::Ok
        );
        assert!((u[0] + 0.001).abs() < 1e-9);
        assert!((u[1] - 0.001).abs() < 1e-9);
        assert_eq!(
            ai_adam_step(
                adam,
                [f64::NAN, 0.0].as_ptr(),
                2,
                AiDirection::Descent,
                u.as_mut_ptr()
            ),
            AiStatus::InvalidArgument
        );
        assert_eq!(
            ai_adam_step(
                adam,
                [1.0].as_ptr(),
                1,
                AiDirection::Descent,
                u.as_mut_ptr()
            ),
            AiStatus::InvalidArgument
        );
        assert_eq!(ai_adam_steps(adam), 1);
        ai_adam_free(adam);

        let bad = AiAdamHyper {
            beta1: 1.0,
            ..hyper
        };
        assert_eq!(ai_adam_new(2, &bad, &mut adam), AiStatus::InvalidArgument);
        assert!(adam.is_null());
    }
}

#[test]
fn errors_are_per_thread() {
    let mut pi = 0.0;
    unsafe { ai_amari_pi(ptr::null(), ptr::null(), 2, &mut pi) };
    assert!(!last_error().is_empty());
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(ai_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
