mod common;

use std::fs;

use common::{ppm, ppm_ok, s, synthetic_csv};
use tempfile::tempdir;

const LSTM_LIGHT: &[&str] = &[
    "--model-type",
    "lstm_light",
    "--hidden-size",
    "10",
    "--ngram",
    "5",
    "--learning-rate",
    "0.005",
    "--batch-size",
    "16",
    "--max-epochs",
    "3",
];

#[test]
fn validate_prints_log_statistics() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 1);
    let out = ppm_ok(&["validate", "--data", s(&data), "--log-name", "syn"]);
    // 30 traces of the six-step process, 21/3/6 split.
    assert!(out.contains("syn\t30\t180\t6\t4"), "{out}");
    assert!(out.contains("train=21\tvalidation=3\ttest=6"), "{out}");
}

#[test]
fn exit_codes_follow_error_family() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 10, 1);

    // Missing dataset is a configuration error.
    assert_eq!(ppm(&["validate"]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(ppm(&["validate", "--config", s(&bad)]).status.code(), Some(2));

    let missing = dir.path().join("missing.csv");
    let out = ppm(&["validate", "--data", s(&missing)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());

    let out = ppm(&["validate", "--data", s(&data), "--role-column", "resource"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource"));

    // Indivisible heads violate a model constraint.
    let run = dir.path().join("run");
    let out = ppm(&[
        "train", "--data", s(&data), "--out", s(&run), "--model-type", "mtlformer", "--embed-dim", "16", "--heads", "3",
        "--ff-dim", "32", "--encoder-layers", "1", "--learning-rate", "0.001", "--batch-size", "8",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // A NaN learning rate diverges on the first batch.
    let mut args = vec!["train", "--data", s(&data), "--out", s(&run)];
    args.extend(LSTM_LIGHT);
    let lr = args.iter().position(|a| *a == "0.005").unwrap();
    args[lr] = "NaN";
    assert_eq!(ppm(&args).status.code(), Some(4));
}

#[test]
fn train_twice_gives_identical_checkpoints() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 2);
    let mut ckpts = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let mut args = vec!["train", "--data", s(&data), "--out", s(&out), "--seed", "9"];
        args.extend(LSTM_LIGHT);
        ppm_ok(&args);
        for f in ["model.ckpt", "history.csv", "params.csv", "vocab.json", "normalizer.json", "seed", "resolved.toml"] {
            assert!(out.join(f).exists(), "{f} missing");
        }
        ckpts.push(fs::read(out.join("model.ckpt")).unwrap());
    }
    assert_eq!(ckpts[0], ckpts[1]);
}

#[test]
fn config_file_is_copied_verbatim_and_flags_override_it() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 3);
    let out = dir.path().join("run");
    let config = dir.path().join("run.toml");
    let text = format!(
        "# hand-written\ndataset = {:?}\nmodel_type = \"lstm_light\"\nhidden_size = 10\nngram = 5\nlearning_rate = 0.005\nbatch_size = 16\nmax_epochs = 2\nseed = 1\n",
        s(&data)
    );
    fs::write(&config, &text).unwrap();
    ppm_ok(&["train", "--config", s(&config), "--out", s(&out), "--seed", "5"]);
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), text);
    assert_eq!(fs::read_to_string(out.join("seed")).unwrap(), "5\n");
    let resolved = fs::read_to_string(out.join("resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 5"), "{resolved}");
}

#[test]
fn evaluate_reruns_standalone_from_run_directory() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 4);
    let run = dir.path().join("run");
    let mut args = vec!["train", "--data", s(&data), "--out", s(&run), "--log-name", "syn"];
    args.extend(LSTM_LIGHT);
    ppm_ok(&args);
    let ckpt = run.join("model.ckpt");
    ppm_ok(&["evaluate", "--config", s(&run.join("resolved.toml")), "--checkpoint", s(&ckpt)]);
    let first = fs::read_to_string(run.join("metrics.csv")).unwrap();
    let preds = fs::read_to_string(run.join("predictions.csv")).unwrap();
    let other = dir.path().join("again");
    ppm_ok(&["evaluate", "--config", s(&run.join("resolved.toml")), "--checkpoint", s(&ckpt), "--out", s(&other)]);
    assert_eq!(fs::read_to_string(other.join("metrics.csv")).unwrap(), first);
    assert_eq!(fs::read_to_string(other.join("predictions.csv")).unwrap(), preds);
    assert!(first.starts_with("log,model,nap_f1,nrp_f1,nwtp_mae,ndp_mae,rtp_mae,parameters\nsyn,lstm_light,"), "{first}");
    // Six test traces of six events give 6·7 next-event samples.
    assert_eq!(preds.lines().count(), 1 + 42);
}

#[test]
fn evaluate_rejects_a_foreign_vocabulary() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 4);
    let run = dir.path().join("run");
    let mut args = vec!["train", "--data", s(&data), "--out", s(&run)];
    args.extend(LSTM_LIGHT);
    ppm_ok(&args);
    let text = fs::read_to_string(&data).unwrap().replace("approve", "sign_off");
    let renamed = dir.path().join("renamed.csv");
    fs::write(&renamed, text).unwrap();
    let out = ppm(&["evaluate", "--data", s(&renamed), "--checkpoint", s(&run.join("model.ckpt")), "--out", s(&run)]);
    assert_eq!(out.status.code(), Some(3));
}

fn grid(data: &str, out: &str, limit: &str, jobs: &str) {
    ppm_ok(&[
        "gridsearch", "--data", data, "--out", out, "--model-type", "lstm_light", "--grid-limit", limit, "--jobs", jobs,
        "--max-epochs", "2", "--seed", "11",
    ]);
}

#[test]
fn grid_limit_takes_a_prefix_of_the_larger_run() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 5);
    let (small, large) = (dir.path().join("small"), dir.path().join("large"));
    grid(s(&data), s(&small), "3", "1");
    grid(s(&data), s(&large), "5", "2");
    let small_rows = fs::read_to_string(small.join("grid_results.csv")).unwrap();
    let large_rows = fs::read_to_string(large.join("grid_results.csv")).unwrap();
    let small_lines: Vec<&str> = small_rows.lines().collect();
    let large_lines: Vec<&str> = large_rows.lines().collect();
    assert_eq!(small_lines.len(), 1 + 3);
    assert_eq!(large_lines.len(), 1 + 5);
    assert_eq!(small_lines[..], large_lines[..4]);
    for i in 0..3 {
        let name = format!("checkpoints/candidate_{i:04}.ckpt");
        assert_eq!(fs::read(small.join(&name)).unwrap(), fs::read(large.join(&name)).unwrap());
    }
}

#[test]
fn select_then_evaluate_the_chosen_checkpoint() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 6);
    let g = dir.path().join("grid");
    grid(s(&data), s(&g), "4", "1");
    let sel = dir.path().join("sel");
    let out = ppm_ok(&["select", "--grid", s(&g), "--out", s(&sel), "--lambda", "2"]);
    assert!(out.contains("selected=candidate_"), "{out}");
    let scores = fs::read_to_string(sel.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1 + 4);
    assert_eq!(scores.lines().filter(|l| l.ends_with(",true")).count(), 1);
    // The lowest-loss candidate scores exactly 1.
    assert!(scores.lines().skip(1).any(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap() == 1.0), "{scores}");
    for f in ["best.ckpt", "history.csv", "vocab.json", "normalizer.json", "seed", "selection.json"] {
        assert!(sel.join(f).exists(), "{f} missing");
    }
    ppm_ok(&["evaluate", "--data", s(&data), "--checkpoint", s(&sel.join("best.ckpt")), "--out", s(&sel)]);
    assert!(sel.join("metrics.csv").exists());
}

#[test]
fn preprocess_reuses_a_fresh_cache_and_rebuilds_a_stale_one() {
    let dir = tempdir().unwrap();
    let data = synthetic_csv(dir.path(), 30, 7);
    let out = dir.path().join("pre");
    let first = ppm_ok(&["preprocess", "--data", s(&data), "--out", s(&out), "--ngram", "5"]);
    assert!(first.starts_with("samples\t"), "{first}");
    assert!(first.contains("width=5"), "{first}");
    let again = ppm_ok(&["preprocess", "--data", s(&data), "--out", s(&out), "--ngram", "5"]);
    assert!(again.starts_with("cache up to date"), "{again}");
    let changed = ppm_ok(&["preprocess", "--data", s(&data), "--out", s(&out), "--ngram", "10"]);
    assert!(changed.contains("width=10"), "{changed}");
}

#[test]
fn reference_page_is_current() {
    let generated = ppm_ok(&["reference"]);
    let committed = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/cli-reference.md")).unwrap();
    assert_eq!(committed, generated, "regenerate with `ppm reference > docs/cli-reference.md`");
}
