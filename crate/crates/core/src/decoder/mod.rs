//! Sequence decoders for the overlapped signal.

mod joint;
mod particle;
mod viterbi;

use serde::{Deserialize, Serialize};

use crate::mux::Alphabet;

pub use joint::{joint_decode, JointResult};
pub use particle::{
    effective_particle_count, smc_decode, smc_decode_with_known, systematic_indices,
    systematic_resample, ParticleEnsemble, SmcConfig, DEFAULT_PARTICLES,
    DEFAULT_RESAMPLE_THRESHOLD,
};
pub use viterbi::{viterbi_decode, viterbi_decode_with_limit, DEFAULT_STATE_LIMIT};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Trellis size (Viterbi only).
    pub states: Option<usize>,
    pub resamples: usize,
    /// Smallest effective particle count seen (particle decoder only).
    pub min_neff: Option<f64>,
    /// Steps where every weight was lost and the ensemble was reset.
    pub underflow_resets: usize,
}

impl Diagnostics {
    fn trellis(states: usize) -> Self {
        Diagnostics {
            states: Some(states),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Alphabet indices, one per transmitted symbol.
    pub symbols: Vec<usize>,
    pub bits: Vec<u8>,
    /// Posterior share of the particles backing each decision.
    pub confidence: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl DecodeResult {
    fn hard(symbols: Vec<usize>, alphabet: &Alphabet, diagnostics: Diagnostics) -> Self {
        DecodeResult {
            bits: alphabet.indices_to_bits(&symbols),
            symbols,
            confidence: None,
            diagnostics,
        }
    }
}
