//! Output-directory plumbing: the pipeline's fixed file names, atomic
//! writes, and uniform open-with-path error messages.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::Failure;

pub const CORPUS: &str = "corpus.jsonl";
pub const TRUTH: &str = "truth.json";
pub const MATRIX: &str = "matrix.txt";
pub const VOCAB: &str = "vocab.txt";
pub const MODEL: &str = "model.json";
pub const SERIES: &str = "series.csv";
pub const TREND: &str = "trend.json";
pub const ALIGN: &str = "align.json";
pub const LAG_PROFILES: &str = "lag_profiles.csv";
pub const REPORT: &str = "report.json";
pub const FIG_PREVALENCE: &str = "fig_prevalence.csv";
pub const FIG_TOPIC_INDICATOR: &str = "fig_topic_indicator.csv";
pub const FIG_LAG_PROFILES: &str = "fig_lag_profiles.csv";

/// Writes `name` under `dir` atomically: content goes to a temp file in
/// the same directory which is then renamed over the target, so a crash
/// mid-write can never leave a truncated stage file behind.
pub fn atomic_write(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut dyn Write) -> Result<(), Failure>,
) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let mut tmp = tempfile::Builder::new()
        .prefix(name)
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| Failure::input(format!("cannot write in {}: {e}", dir.display())))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut()
        .flush()
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(&path)
        .map_err(|e| Failure::input(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(path)
}

/// Opens a stage file for reading; a missing file is an input error that
/// names the path.
pub fn open(dir: &Path, name: &str) -> Result<fs::File, Failure> {
    open_path(&dir.join(name))
}

pub fn open_path(path: &Path) -> Result<fs::File, Failure> {
    fs::File::open(path)
        .map_err(|e| Failure::input(format!("cannot open {}: {e}", path.display())))
}
