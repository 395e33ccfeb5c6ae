//! Alignment of topic prevalence series with external indicator series
//! (citation counts, usage statistics, …) via lagged Pearson correlation.
//!
//! For each lag ℓ in `[-max_lag, +max_lag]` the topic value at period `t`
//! is paired with the indicator value at period `t + ℓ`, so a *positive*
//! best lag means the topic moves first and the indicator follows.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trend::TopicSeries;

/// Correlations below this are reported as "weak / misaligned" regardless
/// of where the maximum sits.
pub const WEAK_CORR_THRESHOLD: f64 = 0.3;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error(
        "no lag in [-{max_lag}, {max_lag}] has at least {min_overlap} \
         overlapping periods with positive variance (NoValidLag)"
    )]
    NoValidLag { max_lag: i32, min_overlap: usize },
    #[error("invalid alignment config: {0}")]
    InvalidConfig(String),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("indicator csv: {0}")]
    Csv(String),
}

/// An external indicator series: (period, value) with strictly ascending
/// periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub name: String,
    pub points: Vec<(i32, f64)>,
}

/// Why a lag is missing from the correlation profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    InsufficientOverlap,
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagPoint {
    pub lag: i32,
    pub corr: f64,
    /// Number of overlapping (topic, indicator) pairs at this lag.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedLag {
    pub lag: i32,
    pub reason: SkipReason,
}

/// Correlation profile of one topic against one indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagResult {
    pub topic: usize,
    pub indicator: String,
    /// Lag maximising the signed correlation; ties prefer the smallest
    /// absolute lag, then the more negative lag.
    pub best_lag: i32,
    /// The (signed) correlation at `best_lag`.
    pub max_corr: f64,
    /// Correlation at lag zero, when that lag is in the profile.
    pub corr_at_zero: Option<f64>,
    /// Set when every valid lag correlates negatively.
    pub all_negative: bool,
    pub profile: Vec<LagPoint>,
    /// Lags dropped for insufficient overlap or zero variance.
    pub skipped: Vec<SkippedLag>,
}

/// Lead/lag pattern labels mirroring the alignment summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Contemporaneous,
    NearContemporaneous,
    TopicPrecedes,
    CitationsPrecede,
    WeakOrMisaligned,
}

impl Pattern {
    pub fn label(self) -> &'static str {
        match self {
            Pattern::Contemporaneous => "contemporaneous",
            Pattern::NearContemporaneous => "near-contemporaneous",
            Pattern::TopicPrecedes => "topic precedes citations",
            Pattern::CitationsPrecede => "citations precede topic",
            Pattern::WeakOrMisaligned => "weak / misaligned",
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        match raw.as_str() {
            "contemporaneous" => Ok(Pattern::Contemporaneous),
            "near-contemporaneous" => Ok(Pattern::NearContemporaneous),
            "topic precedes citations" => Ok(Pattern::TopicPrecedes),
            "citations precede topic" => Ok(Pattern::CitationsPrecede),
            "weak / misaligned" => Ok(Pattern::WeakOrMisaligned),
            other => Err(serde::de::Error::custom(format!(
                "unknown pattern label {other:?}"
            ))),
        }
    }
}

/// Computes the lag correlation profile of a topic series against an
/// indicator.
///
/// Lags whose overlap has fewer than `min_overlap` pairs, or where either
/// side has zero variance, are omitted from the profile and listed in
/// `skipped`. If nothing remains the result is [`AlignError::NoValidLag`].
pub fn lag_correlation(
    topic: &TopicSeries,
    indicator: &IndicatorSeries,
    max_lag: i32,
    min_overlap: usize,
) -> Result<LagResult, AlignError> {
    if max_lag < 0 {
        return Err(AlignError::InvalidConfig(format!(
            "max_lag must be >= 0, got {max_lag}"
        )));
    }
    if min_overlap < 3 {
        return Err(AlignError::InvalidConfig(format!(
            "min_overlap must be >= 3, got {min_overlap}"
        )));
    }
    if topic.points.iter().any(|p| !p.value.is_finite())
        || indicator.points.iter().any(|&(_, v)| !v.is_finite())
    {
        return Err(AlignError::NonFinite);
    }

    let ind: BTreeMap<i32, f64> = indicator.points.iter().copied().collect();

    let mut profile = Vec::new();
    let mut skipped = Vec::new();
    for lag in -max_lag..=max_lag {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for p in &topic.points {
            if let Some(&c) = p.period.checked_add(lag).and_then(|t| ind.get(&t)) {
                xs.push(p.value);
                ys.push(c);
            }
        }
        if xs.len() < min_overlap {
            skipped.push(SkippedLag {
                lag,
                reason: SkipReason::InsufficientOverlap,
            });
            continue;
        }
        match pearson(&xs, &ys) {
            Some(corr) => profile.push(LagPoint {
                lag,
                corr,
                n: xs.len(),
            }),
            None => skipped.push(SkippedLag {
                lag,
                reason: SkipReason::ZeroVariance,
            }),
        }
    }

    if profile.is_empty() {
        return Err(AlignError::NoValidLag {
            max_lag,
            min_overlap,
        });
    }

    let best = select_best(&profile);
    Ok(LagResult {
        topic: topic.topic,
        indicator: indicator.name.clone(),
        best_lag: best.lag,
        max_corr: best.corr,
        corr_at_zero: profile.iter().find(|p| p.lag == 0).map(|p| p.corr),
        all_negative: profile.iter().all(|p| p.corr < 0.0),
        profile,
        skipped,
    })
}

/// Picks the profile entry with the largest signed correlation; exact ties
/// prefer the smaller |lag|, and the more negative lag after that.
fn select_best(profile: &[LagPoint]) -> LagPoint {
    let mut best = profile[0];
    for &cand in &profile[1..] {
        let better = cand.corr > best.corr
            || (cand.corr == best.corr
                && (cand.lag.abs() < best.lag.abs()
                    || (cand.lag.abs() == best.lag.abs() && cand.lag < best.lag)));
        if better {
            best = cand;
        }
    }
    best
}

/// Pearson correlation; `None` when either side has zero variance.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Classifies the lead/lag relationship of a lag-correlation result.
///
/// A best correlation below [`WEAK_CORR_THRESHOLD`] (which includes every
/// negative maximum) is "weak / misaligned" no matter where the best lag
/// sits; otherwise the label depends on the best lag alone: zero is
/// "contemporaneous", within `near_window` is "near-contemporaneous", and
/// beyond it the sign of the lag says which side moves first.
pub fn classify_pattern(result: &LagResult, near_window: i32) -> Pattern {
    if result.max_corr < WEAK_CORR_THRESHOLD {
        Pattern::WeakOrMisaligned
    } else if result.best_lag == 0 {
        Pattern::Contemporaneous
    } else if result.best_lag.abs() <= near_window {
        Pattern::NearContemporaneous
    } else if result.best_lag > 0 {
        Pattern::TopicPrecedes
    } else {
        Pattern::CitationsPrecede
    }
}

/// Reads an indicator CSV with header `name,year,count`; one file may carry
/// several indicators. Points are sorted by year per indicator; duplicate
/// (name, year) rows are an error. Returns indicators in first-appearance
/// order.
pub fn read_indicators_csv<R: Read>(reader: R) -> Result<Vec<IndicatorSeries>, AlignError> {
    let csv_err = |msg: String| AlignError::Csv(msg);
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| csv_err(e.to_string()))?;
        let expected = ["name", "year", "count"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(csv_err(format!(
                "unexpected indicator header {headers:?}, want {expected:?}"
            )));
        }
    }
    let mut order = Vec::new();
    let mut by_name: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let row = i + 2;
        let name = record
            .get(0)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| csv_err(format!("row {row}: missing indicator name")))?
            .to_string();
        let year: i32 = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| csv_err(format!("row {row}: bad year")))?;
        let count: f64 = record
            .get(2)
            .and_then(|s| s.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| csv_err(format!("row {row}: bad count")))?;
        if !by_name.contains_key(&name) {
            order.push(name.clone());
        }
        if by_name.entry(name.clone()).or_default().insert(year, count).is_some() {
            return Err(csv_err(format!(
                "row {row}: duplicate entry for indicator {name:?}, year {year}"
            )));
        }
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let points = by_name.remove(&name).unwrap().into_iter().collect();
            IndicatorSeries { name, points }
        })
        .collect())
}

/// Writes lag profiles as CSV with header `topic,indicator,lag,corr,overlap`,
/// one row per valid lag. Indicator names are quoted as needed.
pub fn write_lag_profiles_csv<W: Write>(
    writer: W,
    results: &[LagResult],
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["topic", "indicator", "lag", "corr", "overlap"])?;
    for r in results {
        for p in &r.profile {
            w.write_record([
                r.topic.to_string(),
                r.indicator.clone(),
                p.lag.to_string(),
                p.corr.to_string(),
                p.n.to_string(),
            ])?;
        }
    }
    w.flush()
}
