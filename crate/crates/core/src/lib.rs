//! Relay-side iterative detection and decoding for physical-layer network
//! coding (PNC) over doubly-spread underwater acoustic OFDM channels.
//!
//! The library is organized around the processing chain at a PNC relay:
//!
//! - [`channel`]: multi-scale multi-lag (MSML) channel realizations,
//!   frequency-domain inter-carrier coupling matrices, adaptive ICI depth
//!   selection, band truncation, channel-error perturbation, and
//!   measured-CIR ingestion.
//! - [`codec`]: QC-LDPC construction, encoding, interleaving, BPSK symbol
//!   mapping, and joint decoding of superimposed codewords over bit pairs
//!   (generalized sum-product algorithm).
//! - [`detect`]: soft-input soft-output detection of the superimposed
//!   frame — adaptive channel-aware factor-graph detection (ACA-FGD) and
//!   the superimposed-model LMMSE detector (SM-LMMSE).
//! - [`refine`]: parity-check-constrained soft-information refinement of
//!   the decoder feedback.
//! - [`receiver`]: the outer detection → decoding → refinement loop that
//!   emits the network-coded codeword.
//! - [`sim`]: seeded Monte-Carlo experiment engine (BER sweeps, multi-hop
//!   error accumulation, channel energy statistics).
//! - [`cli`]: experiment configuration parsing and result formatting used
//!   by the `pncrelay` binary.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod detect;
pub mod error;
pub mod receiver;
pub mod refine;
pub mod sim;

pub use error::{Error, Result};
