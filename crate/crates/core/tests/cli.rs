use std::path::Path;
use std::process::{Command, Output};

use heatcast::eval::{read_forecast, MetricsReport};

fn heatcast(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatcast"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL: &str = "\
synth.start_date = 2018-11-01
synth.dma_count = 2
train.max_epochs = 2
train.batch_size = 32
fprime.maps = 2
fprime.attn_dim = 4
fprime.dense = 8
f.maps = 2
f.dense = 8
lstm.layers = 1
lstm.hidden = 4
";

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&heatcast(dir.path(), &[])), 1);
    assert_eq!(code(&heatcast(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&heatcast(dir.path(), &["train", "--model", "gru"])), 1);
    assert_eq!(code(&heatcast(dir.path(), &["synth", "--days", "many"])), 1);
    assert_eq!(code(&heatcast(dir.path(), &["--help"])), 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&heatcast(p, &["preprocess", "--input", "missing"])), 2);
    std::fs::create_dir(p.join("raw")).unwrap();
    std::fs::write(p.join("raw/meters.csv"), "timestamp,meter\n").unwrap();
    std::fs::write(p.join("raw/weather.csv"), "timestamp,max_temp_c,feels_like_c\n").unwrap();
    let out = heatcast(p, &["preprocess", "--input", "raw"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
    std::fs::write(p.join("bad.ckpt"), b"not a checkpoint").unwrap();
    assert_eq!(code(&heatcast(p, &["evaluate", "--checkpoint", "bad.ckpt"])), 2);
    std::fs::write(p.join("bad.cfg"), "no equals sign here\n").unwrap();
    assert_eq!(code(&heatcast(p, &["--config", "bad.cfg", "synth", "--days", "30"])), 2);
    assert_eq!(code(&heatcast(p, &["synth", "--days", "5"])), 2);
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(heatcast(p, &["synth", "--seed", "42", "--days", "60", "--out", "a"]));
    ok(heatcast(p, &["synth", "--seed", "42", "--days", "60", "--out", "b"]));
    ok(heatcast(p, &["synth", "--seed", "43", "--days", "60", "--out", "c"]));
    for f in ["meters.csv", "weather.csv"] {
        let a = std::fs::read(p.join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(p.join("b").join(f)).unwrap(), "{f}");
        assert_ne!(a, std::fs::read(p.join("c").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn end_to_end_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("small.cfg"), SMALL).unwrap();
    let with_cfg = |args: &[&str]| {
        let mut all = vec!["--config", "small.cfg"];
        all.extend_from_slice(args);
        ok(heatcast(p, &all))
    };
    with_cfg(&["synth", "--days", "75", "--out", "raw"]);
    with_cfg(&["preprocess", "--input", "raw", "--out", "clean"]);
    assert!(p.join("clean/demand.csv").exists());
    with_cfg(&["decompose", "--data", "clean", "--out", "dec.csv"]);
    let dec = std::fs::read_to_string(p.join("dec.csv")).unwrap();
    assert_eq!(dec.lines().count(), 1 + 2 * 75 * 24);

    let out = with_cfg(&["train", "--model", "fprime", "--data", "clean", "--out", "fp.ckpt", "--log", "fp.log"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("epoch=0 "));
    assert_eq!(std::fs::read_to_string(p.join("fp.log")).unwrap().lines().count(), 2);

    let out = with_cfg(&[
        "evaluate", "--data", "clean", "--checkpoint", "fp.ckpt", "--out", "report.json", "--forecasts", "all.csv",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fprime") && stdout.contains("persistence"), "{stdout}");
    let report = MetricsReport::from_json(&std::fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.model, "fprime");
    assert_eq!(report.per_dma.len(), 2);
    assert!(report.aggregate.mape.mean.is_finite());
    let records = read_forecast(p.join("all.csv")).unwrap();
    assert_eq!(records.len(), 2 * 24 * report.aggregate.windows);

    with_cfg(&["forecast", "--data", "clean", "--checkpoint", "fp.ckpt", "--out", "fc.csv"]);
    assert_eq!(read_forecast(p.join("fc.csv")).unwrap().len(), 48);
    let bad = heatcast(
        p,
        &["--config", "small.cfg", "forecast", "--data", "clean", "--checkpoint", "fp.ckpt", "--origin", "2017-01-01T00:00:00Z"],
    );
    assert_eq!(code(&bad), 2);

    with_cfg(&["plot-data", "--data", "clean", "--checkpoint", "fp.ckpt", "--out", "plots"]);
    for f in ["scalogram.csv", "forecast_week.csv", "series.csv"] {
        assert!(p.join("plots").join(f).exists(), "{f}");
    }

    for kind in ["lstm", "f"] {
        let ckpt = format!("{kind}.ckpt");
        with_cfg(&["train", "--model", kind, "--data", "clean", "--out", &ckpt]);
        with_cfg(&["evaluate", "--data", "clean", "--checkpoint", &ckpt, "--out", "r.json"]);
    }

    std::fs::write(p.join("grid.cfg"), format!("{SMALL}grid.train.learning_rate = 0.01, 0.001\ngrid.fprime.attn_dim = 2, 4\n")).unwrap();
    let out = ok(heatcast(p, &["--config", "grid.cfg", "train", "--grid", "--data", "clean", "--out", "g.ckpt"]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("grid {")).count(), 4, "{stdout}");
    assert!(stdout.contains("grid: 4 cells"));
    with_cfg(&["evaluate", "--data", "clean", "--checkpoint", "g.ckpt", "--out", "g.json"]);
    std::fs::write(p.join("badgrid.cfg"), format!("{SMALL}grid.train.learning_rate = fast\n")).unwrap();
    assert_eq!(code(&heatcast(p, &["--config", "badgrid.cfg", "train", "--grid", "--data", "clean"])), 2);
}
