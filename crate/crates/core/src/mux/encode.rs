use crate::error::{invalid, Result};
use crate::waveform::PulseShape;
use crate::Cpx;

/// Overlap encoder: full convolution `s_t = sum_k h_k x_{t-k}` with one
/// symbol entering per sample. Output length is `L_t + K - 1`.
pub fn encode(symbols: &[Cpx], pulse: &PulseShape) -> Result<Vec<Cpx>> {
    if symbols.is_empty() {
        return Err(invalid("symbols", "cannot encode an empty frame"));
    }
    let h = pulse.taps();
    let mut out = vec![Cpx::new(0.0, 0.0); symbols.len() + h.len() - 1];
    for (i, &x) in symbols.iter().enumerate() {
        for (o, &hk) in out[i..].iter_mut().zip(h) {
            *o += x * hk;
        }
    }
    Ok(out)
}
