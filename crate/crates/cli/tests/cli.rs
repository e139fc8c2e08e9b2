use std::path::Path;
use std::process::{Command, Output};

use aepinn::metrics::{compute_errors, parse_error_csv};
use aepinn::networks::{Checkpoint, ModelArch};
use aepinn::problems::{builtin, ProblemId};
use aepinn_cli::commands::{self, RunManifest};
use aepinn_cli::config::RunFile;
use aepinn_cli::presets::{self, Method, Preset};

fn aepinn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aepinn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_match_published_settings() {
    let c = presets::counts(ProblemId::Ex3);
    assert_eq!(
        (c.interior.iter().sum::<usize>(), c.boundary, c.interface),
        (500, 400, 600)
    );
    let c = presets::counts(ProblemId::Ex5);
    assert_eq!(c.interior, vec![100, 100, 100, 700]);
    assert_eq!(presets::iterations(ProblemId::Ex1, Preset::Paper), 20_000);
    assert_eq!(presets::iterations(ProblemId::Ex3, Preset::Paper), 100_000);
    assert_eq!(presets::iterations(ProblemId::Ex3, Preset::Desk), 30_000);
    for id in ProblemId::ALL {
        for m in Method::ALL {
            let cfg = presets::config(id, m, Preset::Desk).unwrap();
            cfg.validate(&builtin(id).unwrap()).unwrap();
            assert_eq!(cfg.seed, 1234);
            assert_eq!(cfg.lr, 1e-3);
        }
    }
}

#[test]
fn config_file_overrides_presets_and_rejects_unknown_keys() {
    let file = RunFile::parse(
        "problem = \"ex2:k=2\"\nmethod = \"mpinn\"\niterations = 7\nseed = 9\n[points]\nboundary = 10\n",
    )
    .unwrap();
    let r = file.resolve().unwrap();
    assert_eq!(r.method, Method::Mpinn);
    assert_eq!(r.train.iterations, 7);
    assert_eq!(r.train.seed, 9);
    assert_eq!(r.train.counts.boundary, 10);
    assert_eq!(
        r.train.counts.interface,
        presets::counts(ProblemId::Ex2 { kappa: 2 }).interface
    );
    let err = RunFile::parse("problem = \"ex1\"\nlearning_rate = 1.0\n").unwrap_err();
    assert!(format!("{err:#}").contains("learning_rate"), "{err:#}");
    let cli = RunFile {
        iterations: Some(3),
        ..RunFile::default()
    };
    assert_eq!(file.overlay(&cli).iterations, Some(3));
}

#[test]
fn missing_or_unknown_problem_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["train"][..], &["train", "--problem", "ex9"][..]] {
        let o = aepinn(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
        let msg = stderr(&o);
        for id in ProblemId::ALL {
            assert!(msg.contains(&id.to_string()), "{msg}");
        }
    }
}

#[test]
fn train_writes_all_artifacts_and_replay_reproduces_them() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = aepinn(
        &[
            "train",
            "--problem",
            "ex1",
            "--iterations",
            "10",
            "--grid",
            "50",
        ],
        &run,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "manifest.json",
        "history.csv",
        "checkpoint.json",
        "errors.csv",
    ] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let m = RunManifest::load(&run.join("manifest.json")).unwrap();
    assert_eq!(m.config.iterations, 10);
    assert_eq!(m.grid.as_ref().unwrap().n_test, 50);
    let rows = parse_error_csv(&std::fs::read_to_string(run.join("errors.csv")).unwrap()).unwrap();
    assert_eq!(rows[0].report, m.errors.unwrap());

    let again = dir.path().join("replay");
    let path = run.join("manifest.json");
    let o = aepinn(&["train", "--replay", path.to_str().unwrap()], &again);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["checkpoint.json", "history.csv", "errors.csv"] {
        assert_eq!(
            std::fs::read(run.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f} differs on replay"
        );
    }
}

#[test]
fn dump_points_counts_match_manifest_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = aepinn(&["dump-points", "--problem", "ex3"], &out);
        assert!(o.status.success(), "{}", stderr(&o));
        (
            std::fs::read(out.join("points.csv")).unwrap(),
            RunManifest::load(&out.join("manifest.json")).unwrap(),
        )
    };
    let (a, m) = read("a");
    let (b, _) = read("b");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1500);
    assert_eq!(m.splits.total, 1500);
    assert_eq!(m.splits.interior, vec![113, 387]);
    let count = |tag: &str| {
        rows.iter()
            .filter(|r| r.split(',').nth(2) == Some(tag))
            .count()
    };
    assert_eq!(count("boundary"), 400);
    assert_eq!(count("interface"), 600);
}

#[test]
fn error_field_of_exact_model_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let id = ProblemId::Ex2 { kappa: 2 };
    let ckpt = dir.path().join("exact.json");
    let arch = ModelArch::Exact {
        problem: id.to_string(),
    };
    Checkpoint::new(arch, 1234, 0, vec![])
        .unwrap()
        .save(&ckpt)
        .unwrap();
    let o = aepinn(
        &[
            "error-field",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--problem",
            &id.to_string(),
            "--grid",
            "30",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("error_field.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,abs_error"));
    assert_eq!(text.lines().count(), 1 + 30 * 30);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.0")));
}

#[test]
fn error_field_maximum_equals_reported_max_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunFile {
        problem: Some("ex1".into()),
        iterations: Some(5),
        ..RunFile::default()
    }
    .resolve()
    .unwrap();
    let rep = commands::train_run(&run, &dir.path().join("run"), "train").unwrap();
    let (_, max) = commands::error_field(
        &dir.path().join("run/checkpoint.json"),
        ProblemId::Ex1,
        None,
        dir.path(),
    )
    .unwrap();
    assert_eq!(max, rep.row.report.e_max);
    let ck = Checkpoint::load(&dir.path().join("run/checkpoint.json")).unwrap();
    let model = ck.arch.build().unwrap();
    let again = compute_errors(
        model.as_ref(),
        &ck.params,
        &builtin(ProblemId::Ex1).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(again, rep.row.report);
}

#[test]
fn compare_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let o = aepinn(
        &[
            "compare",
            "--problem",
            "ex1",
            "--methods",
            "ae,pinn",
            "--iterations",
            "3",
            "--grid",
            "20",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows =
        parse_error_csv(&std::fs::read_to_string(dir.path().join("errors.csv")).unwrap()).unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["ae", "pinn"]);
    assert!(dir.path().join("table.txt").is_file());
    assert!(dir.path().join("ex1/pinn/checkpoint.json").is_file());
}

#[test]
fn gradcheck_command_passes_on_one_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = aepinn(&["gradcheck", "--problem", "ex4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        4,
        "{out}"
    );
}
