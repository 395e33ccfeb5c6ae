//! Model persistence: one JSON document carrying the config, the
//! vocabulary hash, both estimate matrices (row-major) and the sweep
//! bookkeeping. Floats are written in scientific notation with 17
//! significant digits, which round-trips every f64 bit-faithfully and
//! keeps reruns byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LdaConfig, LdaError, LdaModel};

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config: LdaConfig,
    vocab_hash: String,
    docs: usize,
    vocab_size: usize,
    sweeps_run: usize,
    samples_collected: usize,
    /// D x K, row-major.
    theta: Vec<f64>,
    /// K x V, row-major.
    beta: Vec<f64>,
}

/// serde_json formatter that renders every float as `{:.16e}` — 17
/// significant digits.
struct SciFloats;

impl serde_json::ser::Formatter for SciFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn write_model<W: Write>(writer: W, model: &LdaModel) -> Result<(), LdaError> {
    let file = ModelFile {
        config: model.config.clone(),
        vocab_hash: model.vocab_hash.clone(),
        docs: model.n_docs(),
        vocab_size: model.vocab_size(),
        sweeps_run: model.sweeps_run,
        samples_collected: model.samples_collected,
        theta: model.theta.data().to_vec(),
        beta: model.beta.data().to_vec(),
    };
    let mut ser = serde_json::Serializer::with_formatter(writer, SciFloats);
    file.serialize(&mut ser)
        .map_err(|e| LdaError::Format(e.to_string()))?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<LdaModel, LdaError> {
    let file: ModelFile =
        serde_json::from_reader(reader).map_err(|e| LdaError::Format(e.to_string()))?;
    file.config.validate()?;
    let k = file.config.topics;
    let theta = DenseMatrix::from_flat(file.docs, k, file.theta).map_err(LdaError::Format)?;
    let beta = DenseMatrix::from_flat(k, file.vocab_size, file.beta).map_err(LdaError::Format)?;
    Ok(LdaModel {
        config: file.config,
        vocab_hash: file.vocab_hash,
        theta,
        beta,
        sweeps_run: file.sweeps_run,
        samples_collected: file.samples_collected,
    })
}
