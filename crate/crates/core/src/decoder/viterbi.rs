use super::{DecodeResult, Diagnostics};
use crate::error::{Error, Result};
use crate::mux::Alphabet;
use crate::waveform::PulseShape;
use crate::Cpx;

/// Largest trellis accepted by [`viterbi_decode`].
pub const DEFAULT_STATE_LIMIT: usize = 1 << 20;

/// Number of received samples must be at least `K`; the frame length is
/// `samples.len() - K + 1`.
pub(crate) fn frame_len(samples: &[Cpx], k: usize) -> Result<usize> {
    if samples.len() < k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: samples.len(),
        });
    }
    Ok(samples.len() + 1 - k)
}

/// Maximum-likelihood sequence detection over the ISI trellis.
pub fn viterbi_decode(
    samples: &[Cpx],
    pulse: &PulseShape,
    alphabet: &Alphabet,
) -> Result<DecodeResult> {
    viterbi_decode_with_limit(samples, pulse, alphabet, DEFAULT_STATE_LIMIT)
}

/// States are the last `K - 1` symbol indices, newest in the least
/// significant base-`|A|` digit. Every state starts at metric zero and
/// taps reaching before the frame start are skipped, so the initial
/// digits carry no cost. After the last symbol the remaining `K - 1`
/// samples are scored per final state before traceback.
pub fn viterbi_decode_with_limit(
    samples: &[Cpx],
    pulse: &PulseShape,
    alphabet: &Alphabet,
    state_limit: usize,
) -> Result<DecodeResult> {
    let h = pulse.taps();
    let k = h.len();
    let lt = frame_len(samples, k)?;
    let a = alphabet.len();
    let states_wide = (a as u128).pow((k - 1) as u32);
    if states_wide > state_limit as u128 {
        return Err(Error::StateSpaceTooLarge {
            states: states_wide,
            limit: state_limit,
        });
    }
    let pts = alphabet.points();

    if k == 1 {
        let symbols: Vec<usize> = samples
            .iter()
            .map(|&y| nearest_scaled(y, h[0], pts))
            .collect();
        return Ok(DecodeResult::hard(
            symbols,
            alphabet,
            Diagnostics::trellis(1),
        ));
    }

    let ns = states_wide as usize;
    let top = ns / a; // A^(K-2): weight of the oldest digit
    let digit = |s: usize, j: usize| (s / a.pow(j as u32)) % a;

    // Contribution of a state's digits to the current sample, with taps
    // h_1..h_{K-1}. `valid` limits the digits to those after time zero.
    let tail_of = |s: usize, valid: usize| -> Cpx {
        (1..=valid.min(k - 1))
            .map(|j| pts[digit(s, j - 1)] * h[j])
            .sum()
    };
    let full_tail: Vec<Cpx> = (0..ns).map(|s| tail_of(s, k - 1)).collect();
    let head: Vec<Cpx> = pts.iter().map(|&p| p * h[0]).collect();

    let mut metric = vec![0.0f64; ns];
    let mut next = vec![0.0f64; ns];
    let mut survivors = vec![0u8; lt * ns];
    let mut partial = Vec::new();

    for t in 0..lt {
        let y = samples[t];
        let tail: &[Cpx] = if t >= k - 1 {
            &full_tail
        } else {
            partial.clear();
            partial.extend((0..ns).map(|s| tail_of(s, t)));
            &partial
        };
        let surv = &mut survivors[t * ns..(t + 1) * ns];
        for (sn, (m_out, d_out)) in next.iter_mut().zip(surv.iter_mut()).enumerate() {
            let sym = sn % a;
            let rest = sn / a;
            let base = y - head[sym];
            let mut best = f64::INFINITY;
            let mut best_d = 0;
            for d in 0..a {
                let sp = rest + d * top;
                let m = metric[sp] + (base - tail[sp]).norm_sqr();
                if m < best {
                    best = m;
                    best_d = d;
                }
            }
            *m_out = best;
            *d_out = best_d as u8;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    // Remaining samples only see known history.
    for (s, m) in metric.iter_mut().enumerate() {
        for u in 1..k {
            let mut pred = Cpx::new(0.0, 0.0);
            for (j, &hj) in h.iter().enumerate().skip(u) {
                let back = j - u; // x_{L_t - 1 - back}
                if back < lt {
                    pred += pts[digit(s, back)] * hj;
                }
            }
            *m += (samples[lt - 1 + u] - pred).norm_sqr();
        }
    }

    let mut state = metric
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, &m)| if m < acc.1 { (i, m) } else { acc },
        )
        .0;
    let mut symbols = vec![0usize; lt];
    for t in (0..lt).rev() {
        symbols[t] = state % a;
        let d = survivors[t * ns + state] as usize;
        state = state / a + d * top;
    }
    Ok(DecodeResult::hard(
        symbols,
        alphabet,
        Diagnostics::trellis(ns),
    ))
}

fn nearest_scaled(y: Cpx, h0: f64, pts: &[Cpx]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let d = (y - p * h0).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
