//! Simulation toolkit for overlapped ("meta") multiplexing.
//!
//! A stream of complex symbols is convolved with a pulse that is `K`
//! samples long while one new symbol enters every sample. The result is a
//! heavily overlapped waveform whose channel matrix is a banded Toeplitz
//! matrix; its singular values define a set of parallel Gaussian
//! subchannels. The crate is organized as:
//!
//! - [`waveform`]: pulse shapes, deterministic and Welch spectra, and the
//!   bounded-PSD / fractional-power bandwidth measures.
//! - [`mux`]: bit mapping, the overlap encoder, the channel matrix and its
//!   singular spectrum, and the on-disk frame record.
//! - [`capacity`]: waterfilling, equal-power capacity, the Eb/N0 forms,
//!   spectral efficiency and required-Eb/N0 inversion.
//! - [`channel`]: calibrated AWGN and a root-raised-cosine QAM interferer.
//! - [`decoder`]: Viterbi sequence detection, the SIR particle decoder and
//!   the joint decoder for a shared band.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod decoder;
mod error;
pub mod mux;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type Cpx = num_complex::Complex64;
