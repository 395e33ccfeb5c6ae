//! Per-period topic prevalence series and the monotonic-trend test used to
//! decide which topics are emerging.
//!
//! A topic's per-period series is the mean posterior topic share over the
//! documents of that period. Emergence is judged by the Mann-Kendall test
//! (tie-corrected, with continuity-corrected normal approximation) combined
//! with Sen's slope estimator for the magnitude, so the decision is rank
//! based and robust to outlying periods.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lda::DenseMatrix;
use crate::stats;

#[derive(Debug, Error)]
pub enum TrendError {
    #[error("series too short for the trend test: n={n}, need at least 4")]
    TooShort { n: usize },
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("periods must be strictly increasing")]
    NonMonotonicPeriods,
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("no documents to aggregate")]
    EmptyInput,
    #[error("series csv: {0}")]
    Csv(String),
}

/// One period of a topic's prevalence series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub period: i32,
    pub value: f64,
    /// Number of documents averaged for this period.
    pub n_docs: usize,
}

/// A topic's mean prevalence per period, periods strictly ascending.
/// Periods without documents are simply absent, never zero-filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSeries {
    pub topic: usize,
    pub points: Vec<SeriesPoint>,
}

impl TopicSeries {
    pub fn periods(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.period).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Averages document–topic proportions into per-period series, one per
/// topic, all sharing the same ascending period grid.
pub fn aggregate(theta: &DenseMatrix, periods: &[i32]) -> Result<Vec<TopicSeries>, TrendError> {
    if theta.rows() != periods.len() {
        return Err(TrendError::LengthMismatch {
            what: "periods",
            got: periods.len(),
            expected: theta.rows(),
        });
    }
    if theta.rows() == 0 {
        return Err(TrendError::EmptyInput);
    }
    let k = theta.cols();

    let mut by_period: std::collections::BTreeMap<i32, (usize, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for (row, &period) in periods.iter().enumerate() {
        let entry = by_period.entry(period).or_insert_with(|| (0, vec![0.0; k]));
        entry.0 += 1;
        for (acc, &v) in entry.1.iter_mut().zip(theta.row(row)) {
            *acc += v;
        }
    }

    Ok((0..k)
        .map(|topic| TopicSeries {
            topic,
            points: by_period
                .iter()
                .map(|(&period, (n, sums))| SeriesPoint {
                    period,
                    value: sums[topic] / *n as f64,
                    n_docs: *n,
                })
                .collect(),
        })
        .collect())
}

/// Mann-Kendall test statistics for one series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MannKendall {
    /// Sum over all pairs i<j of sign(x_j - x_i).
    pub s: i64,
    /// Tie-corrected rank correlation (Kendall's tau-b against time).
    pub tau: f64,
    /// Tie-corrected variance of S.
    pub var_s: f64,
    /// Continuity-corrected normal statistic.
    pub z: f64,
    /// Two-sided p-value from the normal approximation.
    pub p_value: f64,
    pub n: usize,
    /// All values tied; tau=0, p=1 by convention.
    pub degenerate: bool,
    /// The normal approximation is shaky below n=10.
    pub small_sample: bool,
}

/// Runs the Mann-Kendall test on values ordered by period.
///
/// Requires n >= 4. A fully tied series is not an error: it reports
/// `tau = 0`, `p = 1` with the `degenerate` flag set.
pub fn mann_kendall(values: &[f64]) -> Result<MannKendall, TrendError> {
    let n = values.len();
    if n < 4 {
        return Err(TrendError::TooShort { n });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(TrendError::NonFinite);
    }

    let mut s: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += match values[j].partial_cmp(&values[i]).unwrap() {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            };
        }
    }

    let ties = tie_groups(values);
    let nf = n as f64;
    let mut var_s = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let mut tie_pairs = 0.0;
    for &t in &ties {
        let tf = t as f64;
        var_s -= tf * (tf - 1.0) * (2.0 * tf + 5.0);
        tie_pairs += tf * (tf - 1.0) / 2.0;
    }
    var_s /= 18.0;

    let pairs = nf * (nf - 1.0) / 2.0;
    let untied_pairs = pairs - tie_pairs;
    let small_sample = n < 10;

    if untied_pairs == 0.0 {
        // Every value equal: S = 0 and the variance vanishes.
        return Ok(MannKendall {
            s: 0,
            tau: 0.0,
            var_s: 0.0,
            z: 0.0,
            p_value: 1.0,
            n,
            degenerate: true,
            small_sample,
        });
    }

    let tau = s as f64 / (untied_pairs * pairs).sqrt();
    let z = if s > 0 {
        (s as f64 - 1.0) / var_s.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var_s.sqrt()
    } else {
        0.0
    };
    let p_value = stats::normal_two_sided_p(z);

    Ok(MannKendall {
        s,
        tau,
        var_s,
        z,
        p_value,
        n,
        degenerate: false,
        small_sample,
    })
}

/// Sizes (>1) of groups of exactly equal values.
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        groups.push(run);
    }
    groups
}

/// Sen's slope estimate with its rank-based confidence interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SenSlope {
    pub slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Median of all pairwise slopes `(x_j - x_i) / (t_j - t_i)` over the
/// actual period values, with the classical rank-based confidence interval
/// driven by the Mann-Kendall variance: with `C = z_{(1+conf)/2} sqrt(var_S)`
/// and `N` pairwise slopes, the bounds sit at the 1-indexed ranks
/// `floor((N - C)/2)` and `ceil((N + C)/2) + 1` of the sorted slopes,
/// clamped into `[1, N]`.
pub fn sen_slope(
    periods: &[i32],
    values: &[f64],
    confidence: f64,
    var_s: f64,
) -> Result<SenSlope, TrendError> {
    let n = values.len();
    if periods.len() != n {
        return Err(TrendError::LengthMismatch {
            what: "periods",
            got: periods.len(),
            expected: n,
        });
    }
    if n < 2 {
        return Err(TrendError::TooShort { n });
    }
    if values.iter().any(|v| !v.is_finite()) || !var_s.is_finite() || var_s < 0.0 {
        return Err(TrendError::NonFinite);
    }
    if periods.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TrendError::NonMonotonicPeriods);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(TrendError::InvalidConfidence(confidence));
    }

    let mut slopes = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            slopes.push((values[j] - values[i]) / f64::from(periods[j] - periods[i]));
        }
    }
    slopes.sort_unstable_by(f64::total_cmp);
    let count = slopes.len();

    let slope = if count % 2 == 1 {
        slopes[count / 2]
    } else {
        (slopes[count / 2 - 1] + slopes[count / 2]) / 2.0
    };

    let c = stats::normal_quantile((1.0 + confidence) / 2.0) * var_s.sqrt();
    let nf = count as f64;
    let low_rank = (((nf - c) / 2.0).floor() as i64).clamp(1, count as i64);
    let high_rank = ((((nf + c) / 2.0).ceil() as i64) + 1).clamp(1, count as i64);

    Ok(SenSlope {
        slope,
        ci_low: slopes[(low_rank - 1) as usize],
        ci_high: slopes[(high_rank - 1) as usize],
    })
}

/// The full per-topic trend report: Mann-Kendall statistics plus Sen's
/// slope and confidence interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrendResult {
    pub s: i64,
    pub tau: f64,
    pub var_s: f64,
    pub z: f64,
    pub p_value: f64,
    pub sen_slope: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub degenerate: bool,
    pub small_sample: bool,
}

/// Runs both tests on one topic series.
pub fn trend_test(series: &TopicSeries, confidence: f64) -> Result<TrendResult, TrendError> {
    let periods = series.periods();
    let values = series.values();
    let mk = mann_kendall(&values)?;
    let sen = sen_slope(&periods, &values, confidence, mk.var_s)?;
    Ok(TrendResult {
        s: mk.s,
        tau: mk.tau,
        var_s: mk.var_s,
        z: mk.z,
        p_value: mk.p_value,
        sen_slope: sen.slope,
        ci_low: sen.ci_low,
        ci_high: sen.ci_high,
        n: mk.n,
        degenerate: mk.degenerate,
        small_sample: mk.small_sample,
    })
}

/// Multiple-comparison correction applied before the emergence decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    None,
    Bonferroni,
}

impl Correction {
    /// Adjusted p-value given `m` simultaneous tests.
    pub fn adjust(self, p: f64, m: usize) -> f64 {
        match self {
            Correction::None => p,
            Correction::Bonferroni => (p * m as f64).min(1.0),
        }
    }
}

/// Decides which topics are emerging: upward direction (`S > 0`) and
/// corrected p-value at or below `alpha`. Never flags a downward trend,
/// however significant. Returns topic indices (positions in `results`)
/// sorted by ascending corrected p-value, then descending slope.
pub fn detect_emergence(
    results: &[TrendResult],
    alpha: f64,
    correction: Correction,
) -> Result<Vec<usize>, TrendError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TrendError::InvalidAlpha(alpha));
    }
    let m = results.len();
    let mut flagged: Vec<(usize, f64, f64)> = results
        .iter()
        .enumerate()
        .filter_map(|(topic, r)| {
            let p_adj = correction.adjust(r.p_value, m);
            (r.s > 0 && p_adj <= alpha).then_some((topic, p_adj, r.sen_slope))
        })
        .collect();
    flagged.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(b.2.total_cmp(&a.2))
            .then(a.0.cmp(&b.0))
    });
    Ok(flagged.into_iter().map(|(topic, _, _)| topic).collect())
}

/// Writes topic series as CSV with header `topic,period,value,n_docs`.
pub fn write_series_csv<W: std::io::Write>(
    writer: W,
    series: &[TopicSeries],
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "topic,period,value,n_docs")?;
    for s in series {
        for p in &s.points {
            writeln!(w, "{},{},{},{}", s.topic, p.period, p.value, p.n_docs)?;
        }
    }
    w.flush()
}

/// Reads the CSV written by [`write_series_csv`].
pub fn read_series_csv<R: std::io::Read>(reader: R) -> Result<Vec<TopicSeries>, TrendError> {
    let csv_err = |msg: String| TrendError::Csv(msg);
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| csv_err(e.to_string()))?;
        let expected = ["topic", "period", "value", "n_docs"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(csv_err(format!(
                "unexpected series header {headers:?}, want {expected:?}"
            )));
        }
    }
    let mut by_topic: std::collections::BTreeMap<usize, Vec<SeriesPoint>> =
        std::collections::BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let field = |idx: usize, what: &str| -> Result<&str, TrendError> {
            record
                .get(idx)
                .ok_or_else(|| csv_err(format!("row {}: missing {what}", i + 2)))
        };
        let topic: usize = field(0, "topic")?
            .parse()
            .map_err(|_| csv_err(format!("row {}: bad topic", i + 2)))?;
        let period: i32 = field(1, "period")?
            .parse()
            .map_err(|_| csv_err(format!("row {}: bad period", i + 2)))?;
        let value: f64 = field(2, "value")?
            .parse()
            .map_err(|_| csv_err(format!("row {}: bad value", i + 2)))?;
        let n_docs: usize = field(3, "n_docs")?
            .parse()
            .map_err(|_| csv_err(format!("row {}: bad n_docs", i + 2)))?;
        by_topic.entry(topic).or_default().push(SeriesPoint {
            period,
            value,
            n_docs,
        });
    }
    let mut out = Vec::new();
    for (topic, points) in by_topic {
        if points.windows(2).any(|w| w[0].period >= w[1].period) {
            return Err(csv_err(format!(
                "topic {topic}: periods are not strictly ascending"
            )));
        }
        out.push(TopicSeries { topic, points });
    }
    Ok(out)
}
