//! The pipeline subcommands. Each reads its inputs from the output
//! directory (or configured paths), writes its outputs atomically, and
//! prints a one-line summary.

use std::collections::HashSet;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use emergence_core::align::{
    classify_pattern, lag_correlation, read_indicators_csv, write_lag_profiles_csv, AlignError,
    LagPoint, LagResult, Pattern, SkippedLag,
};
use emergence_core::corpus::{
    build_corpus, read_jsonl, read_matrix, read_vocabulary, write_jsonl, write_matrix,
    write_vocabulary,
};
use emergence_core::lda::{self, read_model, top_words, write_model};
use emergence_core::synthgen::{
    generate, greedy_cosine_match, read_truth, top_n_overlap, truth_beta_for_vocab, write_truth,
};
use emergence_core::trend::{
    aggregate, detect_emergence, read_series_csv, trend_test, write_series_csv, Correction,
    TrendResult,
};

use crate::config::Settings;
use crate::out;
use crate::Failure;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::input(e.to_string())
}

fn internal<E: std::fmt::Display>(e: E) -> Failure {
    Failure::internal(e.to_string())
}

pub fn simulate(s: &Settings) -> Result<(), Failure> {
    let spec = s.synth()?;
    let (docs, truth) = generate(&spec).map_err(input)?;
    out::atomic_write(&s.output, out::CORPUS, |w| {
        write_jsonl(w, &docs).map_err(input)
    })?;
    out::atomic_write(&s.output, out::TRUTH, |w| {
        write_truth(w, &truth).map_err(input)
    })?;
    println!(
        "simulate: {} documents over {} periods (K={}, V={}) -> {}",
        docs.len(),
        spec.periods,
        spec.topics,
        spec.vocab_size,
        s.output.join(out::CORPUS).display()
    );
    Ok(())
}

pub fn ingest(s: &Settings, corpus_flag: Option<&Path>, passthrough: bool) -> Result<(), Failure> {
    let config = s.preprocess(passthrough)?;
    let corpus_path = corpus_flag
        .map(Path::to_path_buf)
        .or_else(|| s.file.paths.corpus.clone())
        .unwrap_or_else(|| s.output.join(out::CORPUS));
    let file = out::open_path(&corpus_path)?;
    let docs = read_jsonl(BufReader::new(file))
        .map_err(|e| Failure::input(format!("{}: {e}", corpus_path.display())))?;
    let built = build_corpus(&docs, &config).map_err(input)?;
    out::atomic_write(&s.output, out::MATRIX, |w| {
        write_matrix(w, &built.matrix).map_err(input)
    })?;
    out::atomic_write(&s.output, out::VOCAB, |w| {
        write_vocabulary(w, &built.vocabulary).map_err(input)
    })?;
    println!(
        "ingest: {} documents, {} terms, {} dropped",
        built.matrix.n_docs(),
        built.vocabulary.len(),
        built.dropped.len()
    );
    Ok(())
}

pub struct FitOverrides {
    pub topics: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub thin: Option<usize>,
}

pub fn fit(s: &Settings, ov: &FitOverrides, truth_path: Option<&Path>) -> Result<(), Failure> {
    let matrix = read_matrix(BufReader::new(out::open(&s.output, out::MATRIX)?)).map_err(input)?;
    let vocab =
        read_vocabulary(BufReader::new(out::open(&s.output, out::VOCAB)?)).map_err(input)?;
    if vocab.len() != matrix.vocab_size {
        return Err(Failure::input(format!(
            "vocab.txt has {} terms but matrix.txt expects {}",
            vocab.len(),
            matrix.vocab_size
        )));
    }

    let mut config = s.lda(ov.topics)?;
    if let Some(v) = ov.alpha {
        config.alpha = v;
    }
    if let Some(v) = ov.eta {
        config.eta = v;
    }
    if let Some(v) = ov.burn_in {
        config.burn_in = v;
    }
    if let Some(v) = ov.samples {
        config.samples = v;
    }
    if let Some(v) = ov.thin {
        config.thin = v;
    }

    let model = lda::fit(&matrix, &config, &vocab.sha256_hex()).map_err(input)?;
    out::atomic_write(&s.output, out::MODEL, |w| {
        write_model(w, &model).map_err(input)
    })?;
    println!(
        "fit: D={} V={} K={}, {} sweeps ({} states averaged)",
        model.n_docs(),
        model.vocab_size(),
        model.n_topics(),
        model.sweeps_run,
        model.samples_collected
    );

    if let Some(path) = truth_path {
        let truth = read_truth(BufReader::new(out::open_path(path)?))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let planted = truth_beta_for_vocab(&truth, &vocab).map_err(input)?;
        if planted.rows() != model.n_topics() {
            return Err(Failure::input(format!(
                "truth has {} topics but the model has {}",
                planted.rows(),
                model.n_topics()
            )));
        }
        let matches = greedy_cosine_match(&model.beta, &planted);
        let k = matches.len() as f64;
        let mean_cosine = matches.iter().map(|m| m.cosine).sum::<f64>() / k;
        let mean_overlap = matches
            .iter()
            .map(|m| top_n_overlap(model.beta.row(m.estimated), planted.row(m.truth), 10) as f64)
            .sum::<f64>()
            / k;
        println!("recovery: mean cosine {mean_cosine:.3}, mean top-10 overlap {mean_overlap:.1}/10");
    }
    Ok(())
}

pub fn topics(s: &Settings, words: usize) -> Result<(), Failure> {
    let model = read_model(BufReader::new(out::open(&s.output, out::MODEL)?)).map_err(input)?;
    let vocab =
        read_vocabulary(BufReader::new(out::open(&s.output, out::VOCAB)?)).map_err(input)?;
    if vocab.sha256_hex() != model.vocab_hash {
        return Err(Failure::input(
            "vocab.txt does not match the vocabulary the model was fitted on",
        ));
    }
    for k in 0..model.n_topics() {
        let tops = top_words(&model, &vocab, k, words.min(vocab.len())).map_err(input)?;
        let line: Vec<&str> = tops.iter().map(|(term, _)| term.as_str()).collect();
        println!("topic {k}: {}", line.join(" "));
    }
    Ok(())
}

/// One topic's row in trend.json: the full test statistics plus the
/// decision inputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrendEntry {
    pub topic: usize,
    pub n: usize,
    pub s: i64,
    pub tau: f64,
    pub var_s: f64,
    pub z: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub sen_slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate: bool,
    pub small_sample: bool,
    pub flagged: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrendFile {
    pub alpha: f64,
    pub correction: Correction,
    pub confidence: f64,
    pub results: Vec<TrendEntry>,
    /// Flagged topics, most significant first.
    pub emerging: Vec<usize>,
}

fn parse_correction(raw: &str) -> Result<Correction, Failure> {
    match raw {
        "none" => Ok(Correction::None),
        "bonferroni" => Ok(Correction::Bonferroni),
        other => Err(Failure::input(format!(
            "unknown correction {other:?}; use none or bonferroni"
        ))),
    }
}

pub fn trend(
    s: &Settings,
    alpha_flag: Option<f64>,
    correction_flag: Option<&str>,
    confidence_flag: Option<f64>,
) -> Result<(), Failure> {
    let model = read_model(BufReader::new(out::open(&s.output, out::MODEL)?)).map_err(input)?;
    let matrix = read_matrix(BufReader::new(out::open(&s.output, out::MATRIX)?)).map_err(input)?;
    if matrix.n_docs() != model.n_docs() {
        return Err(Failure::input(format!(
            "matrix.txt has {} documents but the model was fitted on {}",
            matrix.n_docs(),
            model.n_docs()
        )));
    }

    let (mut alpha, mut correction, mut confidence) = s.trend();
    if let Some(v) = alpha_flag {
        alpha = v;
    }
    if let Some(raw) = correction_flag {
        correction = parse_correction(raw)?;
    }
    if let Some(v) = confidence_flag {
        confidence = v;
    }

    let periods: Vec<i32> = matrix.docs.iter().map(|d| d.period).collect();
    let series = aggregate(&model.theta, &periods).map_err(input)?;
    for ts in &series {
        if ts.points.iter().any(|p| !(0.0..=1.0).contains(&p.value)) {
            return Err(Failure::internal(format!(
                "aggregated prevalence for topic {} left [0, 1]",
                ts.topic
            )));
        }
    }
    out::atomic_write(&s.output, out::SERIES, |w| {
        write_series_csv(w, &series).map_err(input)
    })?;

    let results: Vec<TrendResult> = series
        .iter()
        .map(|ts| trend_test(ts, confidence))
        .collect::<Result<_, _>>()
        .map_err(input)?;
    let emerging = detect_emergence(&results, alpha, correction).map_err(input)?;
    let flagged: HashSet<usize> = emerging.iter().copied().collect();
    let m = results.len();
    let entries = results
        .iter()
        .enumerate()
        .map(|(topic, r)| TrendEntry {
            topic,
            n: r.n,
            s: r.s,
            tau: r.tau,
            var_s: r.var_s,
            z: r.z,
            p_value: r.p_value,
            p_adjusted: correction.adjust(r.p_value, m),
            sen_slope: r.sen_slope,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            degenerate: r.degenerate,
            small_sample: r.small_sample,
            flagged: flagged.contains(&topic),
        })
        .collect();
    let file = TrendFile {
        alpha,
        correction,
        confidence,
        results: entries,
        emerging,
    };
    out::atomic_write(&s.output, out::TREND, |w| {
        serde_json::to_writer_pretty(w, &file).map_err(internal)
    })?;

    if file.emerging.is_empty() {
        println!("trend: no emerging topics at alpha {alpha} ({correction:?})");
    } else {
        let list: Vec<String> = file.emerging.iter().map(usize::to_string).collect();
        println!(
            "trend: {} emerging topic(s): {}",
            file.emerging.len(),
            list.join(" ")
        );
    }
    Ok(())
}

/// One (topic, indicator) row in align.json.
#[derive(Debug, Serialize, Deserialize)]
pub struct AlignEntry {
    pub topic: usize,
    pub indicator: String,
    pub best_lag: i32,
    pub max_corr: f64,
    pub corr_at_zero: Option<f64>,
    pub all_negative: bool,
    pub pattern: Pattern,
    pub profile: Vec<LagPoint>,
    pub skipped: Vec<SkippedLag>,
}

/// A pair with no valid lag at all; kept out of `results` but recorded.
#[derive(Debug, Serialize, Deserialize)]
pub struct UnusablePair {
    pub topic: usize,
    pub indicator: String,
    pub reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlignFile {
    pub max_lag: i32,
    pub min_overlap: usize,
    pub near_window: i32,
    pub results: Vec<AlignEntry>,
    pub unusable_pairs: Vec<UnusablePair>,
}

pub struct AlignOverrides {
    pub max_lag: Option<i32>,
    pub min_overlap: Option<usize>,
    pub near_window: Option<i32>,
}

pub fn align(
    s: &Settings,
    indicators_flag: Option<&Path>,
    ov: &AlignOverrides,
) -> Result<(), Failure> {
    let series =
        read_series_csv(BufReader::new(out::open(&s.output, out::SERIES)?)).map_err(input)?;
    let path = s.indicators_path(indicators_flag).ok_or_else(|| {
        Failure::input("no indicator file; pass --indicators or set [paths] indicators")
    })?;
    let indicators = read_indicators_csv(BufReader::new(out::open_path(&path)?))
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if indicators.is_empty() {
        return Err(Failure::input(format!(
            "{}: no indicator rows",
            path.display()
        )));
    }

    let (mut max_lag, mut min_overlap, mut near_window) = s.align();
    if let Some(v) = ov.max_lag {
        max_lag = v;
    }
    if let Some(v) = ov.min_overlap {
        min_overlap = v;
    }
    if let Some(v) = ov.near_window {
        near_window = v;
    }

    let mut entries = Vec::new();
    let mut lag_results: Vec<LagResult> = Vec::new();
    let mut unusable = Vec::new();
    for ts in &series {
        for ind in &indicators {
            match lag_correlation(ts, ind, max_lag, min_overlap) {
                Ok(r) => {
                    let pattern = classify_pattern(&r, near_window);
                    entries.push(AlignEntry {
                        topic: r.topic,
                        indicator: r.indicator.clone(),
                        best_lag: r.best_lag,
                        max_corr: r.max_corr,
                        corr_at_zero: r.corr_at_zero,
                        all_negative: r.all_negative,
                        pattern,
                        profile: r.profile.clone(),
                        skipped: r.skipped.clone(),
                    });
                    lag_results.push(r);
                }
                Err(e @ AlignError::NoValidLag { .. }) => unusable.push(UnusablePair {
                    topic: ts.topic,
                    indicator: ind.name.clone(),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(input(e)),
            }
        }
    }
    if entries.is_empty() {
        return Err(Failure::input(format!(
            "no usable topic-indicator pair: every lag fell below min_overlap={min_overlap}"
        )));
    }

    let file = AlignFile {
        max_lag,
        min_overlap,
        near_window,
        results: entries,
        unusable_pairs: unusable,
    };
    out::atomic_write(&s.output, out::ALIGN, |w| {
        serde_json::to_writer_pretty(w, &file).map_err(internal)
    })?;
    out::atomic_write(&s.output, out::LAG_PROFILES, |w| {
        write_lag_profiles_csv(w, &lag_results).map_err(input)
    })?;

    for e in &file.results {
        println!(
            "align: topic {} x {}: best lag {:+} (r={:.3}) - {}",
            e.topic, e.indicator, e.best_lag, e.max_corr, e.pattern
        );
    }
    if !file.unusable_pairs.is_empty() {
        println!(
            "align: {} pair(s) had no lag with enough overlap",
            file.unusable_pairs.len()
        );
    }
    Ok(())
}

/// Table 2-shaped row: exactly the columns the trend table publishes.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportTrendRow {
    pub topic: usize,
    pub tau: f64,
    pub p_value: f64,
    pub sen_slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Table 3-shaped row: exactly the columns the alignment table publishes.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportAlignRow {
    pub topic: usize,
    pub indicator: String,
    pub best_lag: i32,
    pub max_corr: f64,
    pub corr_at_zero: Option<f64>,
    pub pattern: Pattern,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    /// Build identifier, matching `emergence --version`.
    pub version: String,
    pub seed: u64,
    pub topics: usize,
    pub periods: Vec<i32>,
    pub trends: Vec<ReportTrendRow>,
    pub emerging: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<Vec<ReportAlignRow>>,
}

pub fn report(s: &Settings, indicators_flag: Option<&Path>) -> Result<(), Failure> {
    let series =
        read_series_csv(BufReader::new(out::open(&s.output, out::SERIES)?)).map_err(input)?;
    let trend_file: TrendFile =
        serde_json::from_reader(BufReader::new(out::open(&s.output, out::TREND)?))
            .map_err(|e| Failure::input(format!("{}: {e}", out::TREND)))?;
    let align_path = s.output.join(out::ALIGN);
    let align_file: Option<AlignFile> = if align_path.exists() {
        let parsed = serde_json::from_reader(BufReader::new(out::open_path(&align_path)?))
            .map_err(|e| Failure::input(format!("{}: {e}", out::ALIGN)))?;
        Some(parsed)
    } else {
        None
    };

    let mut written = vec![out::REPORT, out::FIG_PREVALENCE];
    out::atomic_write(&s.output, out::FIG_PREVALENCE, |w| {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "topic,period,value").map_err(input)?;
        for ts in &series {
            for p in &ts.points {
                writeln!(w, "{},{},{}", ts.topic, p.period, p.value).map_err(input)?;
            }
        }
        w.flush().map_err(input)
    })?;

    if let Some(af) = &align_file {
        out::atomic_write(&s.output, out::FIG_LAG_PROFILES, |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["topic", "indicator", "lag", "corr", "overlap"])
                .map_err(input)?;
            for e in &af.results {
                for p in &e.profile {
                    w.write_record([
                        e.topic.to_string(),
                        e.indicator.clone(),
                        p.lag.to_string(),
                        p.corr.to_string(),
                        p.n.to_string(),
                    ])
                    .map_err(input)?;
                }
            }
            w.flush().map_err(input)
        })?;
        written.push(out::FIG_LAG_PROFILES);

        if let Some(path) = s.indicators_path(indicators_flag) {
            let indicators = read_indicators_csv(BufReader::new(out::open_path(&path)?))
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            out::atomic_write(&s.output, out::FIG_TOPIC_INDICATOR, |w| {
                write_topic_indicator_pairs(w, &series, af, &indicators)
            })?;
            written.push(out::FIG_TOPIC_INDICATOR);
        } else {
            println!(
                "report: no indicator file configured; skipping {}",
                out::FIG_TOPIC_INDICATOR
            );
        }
    }

    let trends = trend_file
        .results
        .iter()
        .map(|r| ReportTrendRow {
            topic: r.topic,
            tau: r.tau,
            p_value: r.p_value,
            sen_slope: r.sen_slope,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
        })
        .collect();
    let alignment = align_file.as_ref().map(|af| {
        af.results
            .iter()
            .map(|r| ReportAlignRow {
                topic: r.topic,
                indicator: r.indicator.clone(),
                best_lag: r.best_lag,
                max_corr: r.max_corr,
                corr_at_zero: r.corr_at_zero,
                pattern: r.pattern,
            })
            .collect()
    });
    let report = Report {
        version: format!("emergence {VERSION}"),
        seed: s.seed,
        topics: series.len(),
        periods: series.first().map(|ts| ts.periods()).unwrap_or_default(),
        trends,
        emerging: trend_file.emerging.clone(),
        alignment,
    };
    out::atomic_write(&s.output, out::REPORT, |w| {
        serde_json::to_writer_pretty(w, &report).map_err(internal)
    })?;

    println!("report: wrote {}", written.join(", "));
    Ok(())
}

/// Joint prevalence/indicator rows for the topic-indicator figure: one row
/// per period where both sides of an aligned pair have a value.
fn write_topic_indicator_pairs(
    w: &mut dyn Write,
    series: &[emergence_core::trend::TopicSeries],
    align_file: &AlignFile,
    indicators: &[emergence_core::align::IndicatorSeries],
) -> Result<(), Failure> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["topic", "indicator", "period", "prevalence", "indicator_value"])
        .map_err(input)?;
    for e in &align_file.results {
        let Some(ts) = series.iter().find(|ts| ts.topic == e.topic) else {
            continue;
        };
        let Some(ind) = indicators.iter().find(|i| i.name == e.indicator) else {
            continue;
        };
        let by_period: std::collections::BTreeMap<i32, f64> = ind.points.iter().copied().collect();
        for p in &ts.points {
            if let Some(&value) = by_period.get(&p.period) {
                csv.write_record([
                    e.topic.to_string(),
                    e.indicator.clone(),
                    p.period.to_string(),
                    p.value.to_string(),
                    value.to_string(),
                ])
                .map_err(input)?;
            }
        }
    }
    csv.flush().map_err(input)
}
