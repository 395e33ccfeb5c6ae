//! End-to-end tests of the `emergence` binary: exit codes, error messages,
//! file contracts, and flag/config precedence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emergence"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should start")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        stderr(out)
    );
}

fn assert_exit_1(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(1),
        "expected exit 1\nstdout: {}\nstderr: {}",
        stdout(out),
        stderr(out)
    );
}

/// Writes a small synthetic-pipeline config rooted at `dir/run`.
fn write_config(dir: &Path) -> PathBuf {
    let run = dir.join("run");
    let text = format!(
        r#"
seed = 5

[paths]
output = "{}"

[preprocess]
passthrough = true

[lda]
topics = 3
alpha = 0.2
burn_in = 60
samples = 5
thin = 2

[synth]
topics = 3
vocab_size = 40
docs_per_period = 6
periods = 15
doc_length = 40
alpha = 0.5
eta = 0.1
"#,
        run.display()
    );
    let path = dir.join("pipeline.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Indicator CSV over the default simulated period range.
fn write_indicators(dir: &Path) -> PathBuf {
    let mut text = String::from("name,year,count\n");
    for year in 1970..1985 {
        let wobble = f64::sin(0.9 * f64::from(year - 1970));
        text.push_str(&format!("probe,{year},{}\n", 10.0 + wobble));
    }
    let path = dir.join("indicators.csv");
    fs::write(&path, text).unwrap();
    path
}

fn config_arg(path: &Path) -> String {
    path.display().to_string()
}

#[test]
fn version_prints_a_build_identifier() {
    let out = run(&["--version"]);
    assert_ok(&out);
    assert_eq!(stdout(&out).trim(), "emergence 0.1.0");
}

#[test]
fn pipeline_produces_expected_files_and_report_omits_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    let run_dir = dir.path().join("run");

    let out = run(&["--config", &config, "simulate"]);
    assert_ok(&out);
    let out = run(&["--config", &config, "ingest"]);
    assert_ok(&out);
    let summary = stdout(&out);
    assert!(
        summary.contains("documents") && summary.contains("terms") && summary.contains("dropped"),
        "{summary}"
    );
    assert_ok(&run(&["--config", &config, "fit"]));
    assert_ok(&run(&["--config", &config, "trend"]));
    assert_ok(&run(&["--config", &config, "report"]));

    for name in [
        "corpus.jsonl",
        "truth.json",
        "matrix.txt",
        "vocab.txt",
        "model.json",
        "series.csv",
        "trend.json",
        "fig_prevalence.csv",
        "report.json",
    ] {
        assert!(run_dir.join(name).exists(), "missing {name}");
    }

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["version"], "emergence 0.1.0");
    assert_eq!(report["topics"], 3);
    assert!(
        report.get("alignment").is_none(),
        "alignment should be omitted when align never ran"
    );
    assert_eq!(report["trends"].as_array().unwrap().len(), 3);
}

#[test]
fn align_and_report_cover_indicator_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    let indicators = write_indicators(dir.path());
    let run_dir = dir.path().join("run");

    for args in [
        vec!["simulate"],
        vec!["ingest"],
        vec!["fit"],
        vec!["trend"],
    ] {
        let mut full = vec!["--config", config.as_str()];
        full.extend(args);
        assert_ok(&run(&full));
    }
    let ind = indicators.display().to_string();
    assert_ok(&run(&[
        "--config",
        &config,
        "align",
        "--indicators",
        &ind,
        "--max-lag",
        "2",
    ]));
    assert_ok(&run(&["--config", &config, "report", "--indicators", &ind]));

    // One profile row per valid lag: 15 shared periods, min_overlap 10,
    // so every lag in [-2, 2] is valid for each of the 3 pairs.
    let profile = fs::read_to_string(run_dir.join("lag_profiles.csv")).unwrap();
    assert_eq!(profile.lines().count(), 1 + 3 * 5, "{profile}");
    assert_eq!(
        profile.lines().next().unwrap(),
        "topic,indicator,lag,corr,overlap"
    );
    assert_eq!(
        profile,
        fs::read_to_string(run_dir.join("fig_lag_profiles.csv")).unwrap()
    );

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    let alignment = report["alignment"].as_array().unwrap();
    assert_eq!(alignment.len(), 3);
    for row in alignment {
        assert_eq!(row["indicator"], "probe");
    }

    let fig = fs::read_to_string(run_dir.join("fig_topic_indicator.csv")).unwrap();
    assert_eq!(
        fig.lines().next().unwrap(),
        "topic,indicator,period,prevalence,indicator_value"
    );
    assert_eq!(fig.lines().count(), 1 + 3 * 15);
}

#[test]
fn malformed_jsonl_reports_the_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    let corpus = dir.path().join("bad.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"year\":1990,\"text\":\"alpha beta\"}\nnot json at all\n",
    )
    .unwrap();

    let out = run(&[
        "--config",
        &config,
        "ingest",
        "--corpus",
        &corpus.display().to_string(),
    ]);
    assert_exit_1(&out);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn all_stopword_corpus_fails_with_named_error() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let corpus = dir.path().join("stop.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"year\":1990,\"text\":\"the and of\"}\n{\"id\":\"b\",\"year\":1991,\"text\":\"was were\"}\n",
    )
    .unwrap();

    let out = run(&[
        "--output",
        &run_dir.display().to_string(),
        "ingest",
        "--corpus",
        &corpus.display().to_string(),
    ]);
    assert_exit_1(&out);
    assert!(
        stderr(&out).contains("AllDocumentsEmpty"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_files_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));

    // fit before ingest: matrix.txt is missing.
    let out = run(&["--config", &config, "fit"]);
    assert_exit_1(&out);
    assert!(stderr(&out).contains("matrix.txt"), "{}", stderr(&out));

    // align with a nonexistent indicator file: path appears verbatim.
    // (Needs the series to exist first, since align reads that before
    // the indicators.)
    for args in [
        vec!["simulate"],
        vec!["ingest"],
        vec!["fit"],
        vec!["trend"],
    ] {
        let mut full = vec!["--config", config.as_str()];
        full.extend(args);
        assert_ok(&run(&full));
    }
    let missing = dir.path().join("nope").join("citations.csv");
    let out = run(&[
        "--config",
        &config,
        "align",
        "--indicators",
        &missing.display().to_string(),
    ]);
    assert_exit_1(&out);
    assert!(
        stderr(&out).contains("citations.csv"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    fs::write(&path, "[lda]\ntopcs = 3\n").unwrap();
    let out = run(&["--config", &config_arg(&path), "simulate"]);
    assert_exit_1(&out);
    assert!(stderr(&out).contains("topcs"), "{}", stderr(&out));
}

#[test]
fn seed_flag_overrides_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    let run_dir = dir.path().join("run");

    for args in [
        vec!["simulate"],
        vec!["ingest"],
        vec!["fit"],
        vec!["trend"],
        vec!["report"],
    ] {
        let mut full = vec!["--config", config.as_str(), "--seed", "99"];
        full.extend(args);
        assert_ok(&run(&full));
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn invalid_trend_correction_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    for args in [vec!["simulate"], vec!["ingest"], vec!["fit"]] {
        let mut full = vec!["--config", config.as_str()];
        full.extend(args);
        assert_ok(&run(&full));
    }
    let out = run(&["--config", &config, "trend", "--correction", "holm"]);
    assert_exit_1(&out);
    assert!(stderr(&out).contains("holm"), "{}", stderr(&out));
}

#[test]
fn topics_prints_one_line_per_topic() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    for args in [vec!["simulate"], vec!["ingest"], vec!["fit"]] {
        let mut full = vec!["--config", config.as_str()];
        full.extend(args);
        assert_ok(&run(&full));
    }
    let out = run(&["--config", &config, "topics", "--words", "4"]);
    assert_ok(&out);
    let body = stdout(&out);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 3, "{body}");
    for (k, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("topic {k}: ")), "{line}");
        assert_eq!(line.split(' ').count(), 2 + 4, "{line}");
    }
}

#[test]
fn single_topic_model_has_unit_theta() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_arg(&write_config(dir.path()));
    let run_dir = dir.path().join("run");
    assert_ok(&run(&["--config", &config, "simulate"]));
    assert_ok(&run(&["--config", &config, "ingest"]));
    assert_ok(&run(&["--config", &config, "fit", "--topics", "1"]));

    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("model.json")).unwrap()).unwrap();
    let theta = model["theta"].as_array().unwrap();
    assert_eq!(theta.len(), 90);
    assert!(theta.iter().all(|v| v.as_f64().unwrap() == 1.0));
}
