use super::particle::{smc_decode, smc_decode_with_known, SmcConfig};
use super::DecodeResult;
use crate::channel::{demodulate_qam, make_qam_interferer, InterfererParams, QamDecisions};
use crate::error::Result;
use crate::mux::Alphabet;
use crate::waveform::PulseShape;
use crate::Cpx;

#[derive(Debug, Clone, PartialEq)]
pub struct JointResult {
    pub meta: DecodeResult,
    pub qam: QamDecisions,
}

/// Decode a frame carrying both the overlapped signal and a known-format
/// QAM interferer. The QAM is demodulated first (baseband shift, matched
/// filter, slicing), regenerated from the sliced bits and handed to the
/// particle decoder as a known additive component. With the interferer
/// switched off this is exactly [`smc_decode`].
#[allow(clippy::too_many_arguments)]
pub fn joint_decode(
    samples: &[Cpx],
    pulse: &PulseShape,
    alphabet: &Alphabet,
    interferer: &InterfererParams,
    noise_variance: f64,
    config: &SmcConfig,
    seed: u64,
) -> Result<JointResult> {
    let fs = pulse.sample_rate();
    interferer.validate(fs)?;
    let g = interferer.gain();
    if g == 0.0 {
        return Ok(JointResult {
            meta: smc_decode(samples, pulse, alphabet, noise_variance, config, seed)?,
            qam: QamDecisions {
                soft: Vec::new(),
                indices: Vec::new(),
                bits: Vec::new(),
                marginal_fraction: 0.0,
            },
        });
    }
    let n_sym = interferer.symbols_that_fit(fs, samples.len());
    let scaled: Vec<Cpx> = samples.iter().map(|&s| s / g).collect();
    let qam = demodulate_qam(&scaled, interferer, fs, n_sym)?;
    qam.check_reliable()?;
    let known: Vec<Cpx> = make_qam_interferer(interferer, &qam.bits, fs, samples.len())?
        .into_iter()
        .map(|q| q * g)
        .collect();
    let meta = smc_decode_with_known(
        samples,
        Some(&known),
        pulse,
        alphabet,
        noise_variance,
        config,
        seed,
    )?;
    Ok(JointResult { meta, qam })
}
