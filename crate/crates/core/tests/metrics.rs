use aepinn::diffengine::Activation;
use aepinn::metrics::{
    compute_errors, error_csv, error_table, parse_error_csv, pointwise_errors, ErrorReport,
    ErrorRow, ERROR_CSV_HEADER,
};
use aepinn::networks::{FcnArch, ModelArch};
use aepinn::problems::{builtin, ProblemId};
use aepinn::Error;
use proptest::prelude::*;

fn row(method: &str, kappa: Option<i32>, e: f64) -> ErrorRow {
    ErrorRow {
        method: method.into(),
        problem: "ex2:k=2".into(),
        kappa,
        report: ErrorReport {
            e_max: e,
            e_rms: e / 3.0,
            e_rms_conventional: e / 7.0,
            e_l2rel: e * 1.1,
            n_test: 40000,
        },
        seed: 1234,
        iterations: 20000,
    }
}

#[test]
fn exact_model_has_zero_errors_on_every_test_grid() {
    for id in ProblemId::ALL {
        let spec = builtin(id).unwrap();
        let model = ModelArch::Exact {
            problem: id.to_string(),
        }
        .build()
        .unwrap();
        let r = compute_errors(model.as_ref(), &[], &spec, None).unwrap();
        assert_eq!((r.e_max, r.e_rms, r.e_l2rel), (0.0, 0.0, 0.0), "{id}");
        assert_eq!(r.n_test, spec.test_grid.per_axis.pow(spec.dim() as u32));
    }
}

#[test]
fn test_grid_sizes() {
    let n = |id| {
        let s = builtin(id).unwrap();
        s.grid_points(None).len() / s.dim()
    };
    assert_eq!(n(ProblemId::Ex1), 1000);
    assert_eq!(n(ProblemId::Ex2 { kappa: 2 }), 40000);
    assert_eq!(n(ProblemId::Ex3), 40000);
    assert_eq!(n(ProblemId::Ex4), 125000);
    assert_eq!(n(ProblemId::Ex5), 1_000_000);
}

#[test]
fn constant_error_follows_the_scaled_norm() {
    let c = -0.25;
    let n = 400;
    let r = ErrorReport::from_errors(&vec![c; n], &vec![2.0; n]).unwrap();
    assert_eq!(r.e_max, 0.25);
    assert!((r.e_rms - 0.25 / (n as f64).sqrt()).abs() <= 1e-17);
    assert!((r.e_rms_conventional - 0.25).abs() <= 1e-16);
    assert!((r.e_l2rel - 0.125).abs() <= 1e-16);
}

#[test]
fn zero_exact_solution_makes_relative_error_undefined() {
    let err = ErrorReport::from_errors(&[0.1, 0.2], &[0.0, 0.0]).unwrap_err();
    assert_eq!(err, Error::UndefinedRelativeError);
}

#[test]
fn max_error_bounds_every_pointwise_error() {
    let spec = builtin(ProblemId::Ex3).unwrap();
    let arch = ModelArch::Pinn {
        net: FcnArch::uniform(2, 2, 6, Activation::Tanh),
    };
    let model = arch.build().unwrap();
    let params: Vec<f64> = (0..model.num_params())
        .map(|i| ((i * 37 % 11) as f64 - 5.0) / 10.0)
        .collect();
    let pts = spec.grid_points(Some(30));
    let (exact, errors) = pointwise_errors(model.as_ref(), &params, &spec, &pts).unwrap();
    let r = compute_errors(model.as_ref(), &params, &spec, Some(30)).unwrap();
    assert_eq!(r, ErrorReport::from_errors(&errors, &exact).unwrap());
    assert!(errors.iter().all(|e| e.abs() <= r.e_max));
    assert!(errors.iter().any(|e| e.abs() == r.e_max));
    for (x, (u, e)) in pts.chunks_exact(2).zip(exact.iter().zip(&errors)) {
        let sub = spec.domain.subdomain_by_sign(x).unwrap();
        assert!((e - (u - model.value(&params, x, sub).unwrap())).abs() <= 1e-14);
    }
}

#[test]
fn single_report_table_has_three_metric_rows() {
    let mut r = row("ae", None, 1e-3);
    r.problem = "ex1".into();
    let t = error_table(&[r]);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("metric"));
    assert!(lines[1].starts_with("E_M"));
    assert!(lines[3].starts_with("E_L"));
}

#[test]
fn kappa_sweep_table_has_kappa_column() {
    let rows: Vec<ErrorRow> = [2, 3, 4]
        .iter()
        .flat_map(|&k| [row("pinn", Some(k), 0.5), row("ae", Some(k), 1e-4)])
        .collect();
    let t = error_table(&rows);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines.len(), 1 + 9);
    assert!(lines[0].starts_with("kappa"));
    assert!(lines[0].contains("pinn") && lines[0].contains("ae"));
    assert!(lines[7].starts_with('4'));
}

#[test]
fn csv_rejects_malformed_input() {
    assert!(parse_error_csv("nope\n").is_err());
    assert!(parse_error_csv(&format!("{ERROR_CSV_HEADER}\nae,ex1,,x,1,1,1,3,1,1\n")).is_err());
}

proptest! {
    #[test]
    fn csv_round_trips_to_full_precision(
        e in prop::array::uniform4(1e-300f64..1e300),
        n in 1usize..1_000_000,
        kappa in prop::option::of(2i32..5),
        seed in any::<u64>(),
    ) {
        let r = ErrorRow {
            method: "mpinn".into(),
            problem: "ex4".into(),
            kappa,
            report: ErrorReport { e_max: e[0], e_rms: e[1], e_rms_conventional: e[2], e_l2rel: e[3], n_test: n },
            seed,
            iterations: n + 1,
        };
        let rows = vec![r.clone(), r];
        prop_assert_eq!(parse_error_csv(&error_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn scaling_errors_scales_every_metric(
        errs in prop::collection::vec(-10.0f64..10.0, 1..200),
        s in 0.01f64..100.0,
    ) {
        let exact: Vec<f64> = (0..errs.len()).map(|i| 1.0 + i as f64).collect();
        let a = ErrorReport::from_errors(&errs, &exact).unwrap();
        let scaled: Vec<f64> = errs.iter().map(|e| e * s).collect();
        let b = ErrorReport::from_errors(&scaled, &exact).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1e-300);
        prop_assert!(close(b.e_max, s * a.e_max));
        prop_assert!(close(b.e_rms, s * a.e_rms));
        prop_assert!(close(b.e_l2rel, s * a.e_l2rel));
        prop_assert!(a.e_max >= 0.0 && a.e_l2rel >= 0.0);
    }
}
