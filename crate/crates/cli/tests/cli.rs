use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmu-events"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, sps: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    ok(&["gen", "--sps", sps, "--seed", seed, "--out", p(&out)]);
    out
}

#[test]
fn gen_is_byte_identical_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.ndjson", "60", "7");
    let b = gen(dir.path(), "b.ndjson", "60", "7");
    let c = gen(dir.path(), "c.ndjson", "60", "8");
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_ne!(bytes, std::fs::read(&c).unwrap());

    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().count(), 451);
    let rec: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(rec["v_mag"].as_array().unwrap().len(), 60);

    let d = gen(dir.path(), "d.ndjson", "120", "7");
    let text = std::fs::read_to_string(d).unwrap();
    let rec: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(rec["i_ang"].as_array().unwrap().len(), 120);
}

#[test]
fn gen_prints_class_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["gen", "--sps", "60", "--seed", "1", "--out", p(&dir.path().join("x"))]);
    for c in 1..=3 {
        assert!(out.contains(&format!("class {c}: 150")), "{out}");
    }
}

#[test]
fn gen_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.toml");
    std::fs::write(&cfg, "noise_std_fraction = 0.0\ncap_step_v = 0.03\n").unwrap();
    let clean = dir.path().join("clean");
    ok(&["gen", "--seed", "1", "--config", p(&cfg), "--out", p(&clean)]);
    let noisy = gen(dir.path(), "noisy", "60", "1");
    assert_ne!(std::fs::read(&clean).unwrap(), std::fs::read(&noisy).unwrap());

    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = run(&["gen", "--seed", "1", "--config", p(&cfg), "--out", p(&clean)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d", "60", "1");
    let model = dir.path().join("m.json");
    let base = ["train", "--data", p(&data), "--seed", "1", "--model-out", p(&model)];

    let mut args = base.to_vec();
    args.extend(["--method", "pca-svm", "--fraction", "1.5"]);
    assert_eq!(run(&args).status.code(), Some(1));

    let mut args = base.to_vec();
    args.extend(["--method", "svm", "--fraction", "0.5"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pca-svm") && err.contains("ae-softmax"), "{err}");

    assert_eq!(run(&["gen", "--sps", "60", "--out", p(&model)]).status.code(), Some(1));
    assert_eq!(run(&["gen", "--sps", "90", "--seed", "1", "--out", p(&model)]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let garbage = dir.path().join("garbage");
    std::fs::write(&garbage, "not json\n").unwrap();
    for data in [&missing, &garbage] {
        let out = run(&[
            "train", "--method", "pca-svm", "--data", p(data), "--fraction", "0.5", "--seed", "1",
            "--model-out", p(&dir.path().join("m")),
        ]);
        assert_eq!(out.status.code(), Some(2));
    }
}

fn confusion_rows(path: &Path) -> Vec<Vec<u64>> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect())
        .collect()
}

#[test]
fn train_pca_svm_rows_sum_to_75_and_model_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d", "60", "3");
    let model = dir.path().join("m.json");
    let cm = dir.path().join("cm.json");
    let args = [
        "train", "--method", "pca-svm", "--data", p(&data), "--fraction", "0.5", "--seed", "4",
        "--model-out", p(&model), "--confusion-out", p(&cm),
    ];
    let stdout = ok(&args);
    assert!(stdout.contains("accuracy "), "{stdout}");
    for row in confusion_rows(&cm) {
        assert_eq!(row.iter().sum::<u64>(), 75);
    }
    let first = (std::fs::read(&model).unwrap(), std::fs::read(&cm).unwrap());
    ok(&args);
    assert_eq!(first, (std::fs::read(&model).unwrap(), std::fs::read(&cm).unwrap()));

    let out = ok(&["eval", "--model", p(&model), "--data", p(&data)]);
    assert!(out.lines().last().unwrap().starts_with("accuracy "));
}

#[test]
fn train_ae_softmax_never_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d", "60", "3");
    let model = dir.path().join("m.json");
    ok(&[
        "train", "--method", "ae-softmax", "--data", p(&data), "--fraction", "0.5", "--seed", "4",
        "--model-out", p(&model), "--epochs-ae", "10", "--epochs-softmax", "10", "--hidden", "10",
    ]);
    let rows = confusion_rows(&dir.path().join("m.json.confusion.json"));
    assert_eq!(rows.iter().flatten().sum::<u64>(), 225);
    assert!(rows.iter().all(|r| r[3] == 0));
}

#[test]
fn loo_prints_one_accuracy_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d", "60", "3");
    let json = dir.path().join("loo.json");
    let args = [
        "loo", "--method", "pca-svm", "--data", p(&data), "--per-class", "6", "--out", p(&json),
    ];
    let out = ok(&args);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains("18 folds") && out.contains("accuracy"), "{out}");
    let first = std::fs::read(&json).unwrap();
    ok(&args);
    assert_eq!(first, std::fs::read(&json).unwrap());
}

#[test]
fn sweep_csv_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let args = [
        "sweep", "--methods", "pca-svm", "--sps", "60,120", "--seeds", "1..3", "--fractions", "0.2,0.5",
        "--out", p(&csv),
    ];
    ok(&args);
    let first = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "method,sps,fraction,seed,accuracy");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("pca-svm,60,0.2,1,"));
    ok(&args);
    assert_eq!(first, std::fs::read_to_string(&csv).unwrap());

    let seq = dir.path().join("seq.csv");
    let mut seq_args = vec!["--sequential"];
    seq_args.extend_from_slice(&args[..args.len() - 1]);
    seq_args.push(p(&seq));
    ok(&seq_args);
    assert_eq!(first, std::fs::read_to_string(&seq).unwrap());

    assert_eq!(run(&["sweep", "--methods", "all"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--seeds", "5..1"]).status.code(), Some(1));
}
