//! Detecting emerging themes in longitudinal text corpora.
//!
//! The pipeline implemented here has four stages:
//!
//! 1. [`corpus`] — tokenise raw documents and build a pruned document–term
//!    matrix with an explicit, reproducible vocabulary order.
//! 2. [`lda`] — fit latent Dirichlet allocation by collapsed Gibbs sampling
//!    and average post-burn-in states into posterior-mean topic mixtures.
//! 3. [`trend`] — aggregate document mixtures into per-period topic series
//!    and test each series for a sustained monotonic rise (Mann-Kendall test
//!    plus Sen's slope estimate).
//! 4. [`align`] — compare topic series against external indicator series via
//!    lagged Pearson correlation and classify the lead/lag pattern.
//!
//! [`synthgen`] generates synthetic corpora with known topics and planted
//! prevalence trends, which is how the whole chain is validated end to end.
//!
//! Every stage that consumes randomness takes an explicit 64-bit seed and
//! draws from a single sequential ChaCha8 stream, so identical inputs and
//! seeds reproduce identical outputs byte for byte.

pub mod align;
pub mod corpus;
pub mod lda;
pub mod stats;
pub mod synthgen;
pub mod trend;
