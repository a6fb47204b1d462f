use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dymgnn::dataprep::{list_windows, read_window, window_dir, MANIFEST_FILE};
use dymgnn::model::{Architecture, Checkpoint, Temporal, Topological};

fn dymgnn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dymgnn"))
        .args(args)
        .env("DYMGNN_OUT", out)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = dymgnn(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Small panel → 3 windows (train 0, validate 1, test 2).
fn small_pipeline(root: &Path) {
    ok(
        root,
        &[
            "synth",
            "--loans",
            "120",
            "--months",
            "8",
            "--seed",
            "3",
            "--base-rate",
            "0.15",
        ],
    );
    ok(root, &["build"]);
}

const QUICK: [&str; 8] = [
    "--train-windows",
    "0",
    "--validation-window",
    "1",
    "--epochs",
    "3",
    "--embedding",
    "4",
];

fn train(root: &Path, model: &str, output: &str) -> Output {
    let mut args = vec!["train", "--model", model, "--output", output];
    args.extend(QUICK);
    ok(root, &args)
}

#[test]
fn synth_header_determinism_and_row_audit() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(
            d.path(),
            &["synth", "--loans", "150", "--months", "10", "--seed", "9"],
        );
    }
    let csv_a = read(a.path().join("panel.csv"));
    assert_eq!(csv_a, read(b.path().join("panel.csv")));
    assert!(csv_a.starts_with(
        "loan_id,period,fico,if_fthb,mi_pct,cnt_units,if_prim_res,dti,ltv,if_corr,if_sf,if_purc,cnt_borr,if_sc,\
current_upb,if_delq_sts,mths_remng,current_int_rt,zip,company,default\n"
    ));
    // Each loan appears in every month up to (excluding) its default month.
    let mut per_loan = std::collections::BTreeMap::<String, usize>::new();
    for line in csv_a.lines().skip(1) {
        *per_loan
            .entry(line.split(',').next().unwrap().to_string())
            .or_default() += 1;
    }
    assert_eq!(per_loan.len(), 150);
    assert!(per_loan.values().all(|&k| (1..=10).contains(&k)));
    let attrited = per_loan.values().filter(|&&k| k < 10).count();
    assert_eq!(
        csv_a.lines().count() - 1,
        150 * 10 - per_loan.values().map(|k| 10 - k).sum::<usize>()
    );
    assert!(attrited > 0);
    let manifest = read(a.path().join("panel.csv.manifest.toml"));
    assert!(manifest.contains("status = \"ok\""));
    assert!(a.path().join("panel.csv.config.toml").exists());
}

#[test]
fn build_layers_isolation_and_window_count() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["synth", "--loans", "100", "--months", "18", "--seed", "1"],
    );
    ok(d.path(), &["build", "--layers", "both"]);
    let data = d.path().join("windows");
    let listed = read(data.join(MANIFEST_FILE));
    assert_eq!(list_windows(&data).unwrap().len(), 13);
    assert!(listed.starts_with("layers area,company\n"));
    assert_eq!(
        read_window(&window_dir(&data, 0))
            .unwrap()
            .topology
            .layers(),
        2
    );

    ok(
        d.path(),
        &[
            "build",
            "--layers",
            "company",
            "--isolate-fraction",
            "0",
            "--output",
            "flat",
        ],
    );
    let w = read_window(&window_dir(&d.path().join("flat"), 4)).unwrap();
    assert_eq!(w.topology.layers(), 1);
    let isolated = w.labeled().unwrap();
    // With nothing isolated the materialized topology keeps every stored edge.
    assert_eq!(
        isolated.sequence.topology().intra_edges(),
        w.topology.intra_edges()
    );
}

#[test]
fn train_records_architecture_and_runtime() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    train(d.path(), "gat-lstm-att", "gat.ckpt");
    let cp = Checkpoint::load(&d.path().join("gat.ckpt")).unwrap();
    assert_eq!(
        cp.config().architecture,
        Architecture::Graph {
            topological: Topological::Gat,
            temporal: Temporal::Lstm,
            attention: true
        }
    );
    assert!(cp.scaling.is_some());
    let log = read(d.path().join("gat.ckpt.train_log.csv"));
    assert_eq!(
        log.lines().next().unwrap(),
        "epoch,train_loss,val_loss,val_auc,best"
    );
    assert_eq!(log.lines().count(), 4);

    train(d.path(), "static-gat", "static.ckpt");
    assert!(Checkpoint::load(&d.path().join("static.ckpt"))
        .unwrap()
        .config()
        .architecture
        .is_static());
    let runtime = read(d.path().join("runtime.csv"));
    let lines: Vec<&str> = runtime.lines().collect();
    assert_eq!(lines[0], "checkpoint,model,seconds,epochs,normalized");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().any(|l| l.ends_with(",1.00")));
}

#[test]
fn failed_training_leaves_no_partial_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    train(d.path(), "gcn-gru", "model.ckpt");
    let before = std::fs::read(d.path().join("model.ckpt")).unwrap();
    let o = dymgnn(
        d.path(),
        &[
            "train",
            "--model",
            "gcn-gru",
            "--train-windows",
            "0",
            "--validation-window",
            "9",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read(d.path().join("model.ckpt")).unwrap(), before);
    let manifest = read(d.path().join("model.ckpt.manifest.toml"));
    assert!(manifest.contains("status = \"failed\"") && manifest.contains("window 9"));
    let stray: Vec<_> = std::fs::read_dir(d.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(".tmp"))
        .collect();
    assert!(stray.is_empty(), "{stray:?}");
}

#[test]
fn eval_compares_checkpoints_with_shared_seed() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    train(d.path(), "gcn-lstm", "a.ckpt");
    train(d.path(), "logreg", "b.ckpt");
    ok(
        d.path(),
        &[
            "eval",
            "--checkpoint",
            "a.ckpt",
            "--checkpoint",
            "b.ckpt",
            "--window",
            "2",
            "--resamples",
            "200",
        ],
    );
    let csv = read(d.path().join("eval.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "checkpoint,model,window,nodes,threshold,auc,auc_lower,auc_upper,f1,f1_lower,f1_upper"
    );
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').skip(5).map(|x| x.parse().unwrap()).collect();
        assert!(
            v[1] <= v[0] && v[0] <= v[2] && v[4] <= v[3] && v[3] <= v[5],
            "{row}"
        );
    }
    assert!(read(d.path().join("eval.csv.txt")).contains("AUC"));

    // Scoring one checkpoint alone reproduces its row: the seed is shared, not advanced.
    ok(
        d.path(),
        &[
            "eval",
            "--checkpoint",
            "b.ckpt",
            "--window",
            "2",
            "--resamples",
            "200",
            "--output",
            "b.csv",
        ],
    );
    assert_eq!(
        read(d.path().join("b.csv")).lines().nth(1).unwrap(),
        lines[2]
    );
}

#[test]
fn eval_on_training_window_beats_chance() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    ok(
        d.path(),
        &[
            "train",
            "--model",
            "logreg",
            "--train-windows",
            "0",
            "--validation-window",
            "0",
            "--learning-rate",
            "0.01",
        ],
    );
    ok(d.path(), &["eval", "--window", "0", "--resamples", "100"]);
    let csv = read(d.path().join("eval.csv"));
    let auc: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(5)
        .unwrap()
        .parse()
        .unwrap();
    assert!(auc > 0.5, "auc {auc}");
}

#[test]
fn explain_exports() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    train(d.path(), "gcn-gru", "plain.ckpt");
    let o = ok(
        d.path(),
        &[
            "explain",
            "--checkpoint",
            "plain.ckpt",
            "--samples",
            "4",
            "--top-k",
            "3",
            "--window",
            "2",
        ],
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("attention export skipped"));
    let out = d.path().join("explain");
    assert!(!out.join("attention.csv").exists());
    let imp = read(out.join("importance.csv"));
    let vals: Vec<f64> = imp
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 16);
    assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    let nodes = read(out.join("attribution.csv")).lines().count() - 1;
    assert_eq!(
        read(out.join("dependency.csv")).lines().count() - 1,
        3 * nodes
    );

    train(d.path(), "gcn-gru-att", "att.ckpt");
    ok(
        d.path(),
        &[
            "explain",
            "--checkpoint",
            "att.ckpt",
            "--samples",
            "2",
            "--window",
            "2",
            "--output",
            "att",
        ],
    );
    let att = read(d.path().join("att").join("attention.csv"));
    let betas: Vec<f64> = att
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(betas.len(), 6);
    assert!((betas.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn exit_codes_and_config_files() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[synth]\nloans = 30\nmonths = 7\n[train]\nepochz = 3\n",
    )
    .unwrap();
    let cfg_s = cfg.to_str().unwrap();
    assert_eq!(
        dymgnn(d.path(), &["--config", cfg_s, "synth"])
            .status
            .code(),
        Some(2)
    );
    std::fs::write(&cfg, "[synth]\nloans = 30\nmonths = 7\n").unwrap();
    ok(d.path(), &["--config", cfg_s, "synth"]);
    assert_eq!(
        read(d.path().join("panel.csv"))
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1),
        Some("2012-01")
    );
    assert_eq!(
        dymgnn(d.path(), &["synth", "--set", "bogus=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dymgnn(d.path(), &["synth", "--set", "loans=-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dymgnn(d.path(), &["build", "--panel", "missing.csv"])
            .status
            .code(),
        Some(3)
    );
    let manifest = read(d.path().join("windows.manifest.toml"));
    assert!(manifest.contains("error_kind = \"data\""));
    std::fs::write(d.path().join("bad.csv"), "loan_id,period\nL1,2012-01\n").unwrap();
    assert_eq!(
        dymgnn(d.path(), &["build", "--panel", "bad.csv"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(dymgnn(d.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(dymgnn(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn pipeline_is_reproducible() {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for r in &runs {
        small_pipeline(r.path());
        train(r.path(), "gat-gru-att", "model.ckpt");
        ok(r.path(), &["eval", "--window", "2", "--resamples", "100"]);
        ok(r.path(), &["explain", "--samples", "3", "--window", "2"]);
    }
    let (a, b) = (runs[0].path(), runs[1].path());
    for f in [
        "panel.csv",
        "model.ckpt",
        "model.ckpt.train_log.csv",
        "eval.csv",
        "explain/attribution.csv",
        "explain/attention.csv",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    for i in list_windows(&a.join("windows")).unwrap() {
        for f in ["features.csv", "labels.csv", "meta.txt"] {
            let rel = window_dir(Path::new("windows"), i).join(f);
            assert_eq!(
                std::fs::read(a.join(&rel)).unwrap(),
                std::fs::read(b.join(&rel)).unwrap()
            );
        }
    }
}

#[test]
fn diverging_training_exits_with_numeric_code() {
    let d = tempfile::tempdir().unwrap();
    small_pipeline(d.path());
    let o = dymgnn(
        d.path(),
        &[
            "train",
            "--model",
            "mlp",
            "--train-windows",
            "0",
            "--validation-window",
            "1",
            "--learning-rate",
            "1e308",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(read(d.path().join("model.ckpt.manifest.toml")).contains("error_kind = \"numeric\""));
    assert!(!d.path().join("model.ckpt").exists());
}
