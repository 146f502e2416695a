use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "seed": 5,
  "datasets": [{
    "name": "toy",
    "synth": {"kind": "dense-binary", "n": 80, "d": 8, "planted": 2},
    "model": {"arch": "mlp", "hidden": [6]},
    "train": {"epochs": 10, "learning_rate": 0.02}
  }],
  "methods": ["gradients", "lime"],
  "n_explain": 3,
  "completeness": {"l": 30, "n_samples": 10},
  "steal": {"layers": [1], "units_per_layer": 8, "n_queries": 100, "k": 3, "train": {"epochs": 5}}
}"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_explainbench")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn full_pipeline_through_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("config.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = d.join("out");

    let o = cli(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data = out.join("toy.jsonl");
    assert!(data.exists());

    let o = cli(&["train", "--config", p(&cfg), "--out", p(&out), "--data", p(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = out.join("toy.model.json");
    assert!(out.join("toy.train.json").exists());

    let o = cli(&["explain", "--out", p(&out), "--model", p(&model), "--data", p(&data), "--method", "ig", "--n", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let expl = out.join("ig.jsonl");
    assert_eq!(std::fs::read_to_string(&expl).unwrap().lines().count(), 4);

    let o = cli(&["evaluate", "--out", p(&out), "--model", p(&model), "--data", p(&data), "--explanations", p(&expl)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["da.csv", "maz.csv", "evaluation.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let o = cli(&["render", "--out", p(&out), "--data", p(&data), "--explanations", p(&expl)]);
    assert_eq!(code(&o), 0);

    let o = cli(&["compare", "--out", p(&out), "--model", p(&model), "--data", p(&data), "--method", "gradients,ig,random", "--k", "3", "--n", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("gradients"));

    let o = cli(&[
        "steal", "--config", p(&cfg), "--out", p(&out), "--model", p(&model), "--data", p(&data), "--layers", "1", "--units", "8", "--k", "3",
        "--n", "5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("steal.json").exists());

    let rep = d.join("rep");
    let o = cli(&["--jobs", "1", "report", "--config", p(&cfg), "--out", p(&rep)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rep.join("report.json").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let read = |seed: &str| {
        let out = dir.path().join(format!("s{seed}"));
        assert_eq!(code(&cli(&["synth", "--config", p(&cfg), "--out", p(&out), "--seed", seed])), 0);
        std::fs::read_to_string(out.join("toy.jsonl")).unwrap()
    };
    assert_eq!(read("1"), read("1"));
    assert_ne!(read("1"), read("2"));
}

#[test]
fn usage_and_input_errors_exit_one() {
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["explode"])), 1);
    assert_eq!(code(&cli(&["--help"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&cli(&["synth", "--out", p(&out)])), 1);
    assert_eq!(code(&cli(&["synth", "--config", "/nonexistent/c.json", "--out", p(&out)])), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(code(&cli(&["report", "--config", p(&bad), "--out", p(&out)])), 1);
}

#[test]
fn failed_stage_exits_two_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    // the pooling window is wider than the convolution output, so training fails
    let json = CONFIG.replace(
        r#""model": {"arch": "mlp", "hidden": [6]},"#,
        r#""model": {"arch": "cnn", "channels": 2, "width": 3, "pool": 40},"#,
    );
    std::fs::write(&cfg, json).unwrap();
    let out = dir.path().join("o");
    let o = cli(&["report", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"stage\": \"train\""));
}
