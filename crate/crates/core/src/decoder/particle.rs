use rand::Rng;
use serde::{Deserialize, Serialize};

use super::viterbi::frame_len;
use super::{DecodeResult, Diagnostics};
use crate::channel::mean_power;
use crate::error::{invalid, Error, Result};
use crate::mux::Alphabet;
use crate::rng::{seeded, SimRng};
use crate::waveform::PulseShape;
use crate::Cpx;

pub const DEFAULT_PARTICLES: usize = 1024;
pub const DEFAULT_RESAMPLE_THRESHOLD: f64 = 0.5;

/// Noise variance used for noiseless input, relative to the received
/// power, so that likelihoods stay finite.
const VARIANCE_FLOOR: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmcConfig {
    pub particles: usize,
    /// Resample when `N_eff < resample_threshold * M`.
    #[serde(default = "default_threshold")]
    pub resample_threshold: f64,
    /// Decision lag; `None` means `2K`.
    #[serde(default)]
    pub lag: Option<usize>,
}

fn default_threshold() -> f64 {
    DEFAULT_RESAMPLE_THRESHOLD
}

impl Default for SmcConfig {
    fn default() -> Self {
        SmcConfig {
            particles: DEFAULT_PARTICLES,
            resample_threshold: DEFAULT_RESAMPLE_THRESHOLD,
            lag: None,
        }
    }
}

impl SmcConfig {
    pub fn with_particles(particles: usize) -> Self {
        SmcConfig {
            particles,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        // A single particle is an unweighted random walk: nothing to select.
        if self.particles < 2 {
            return Err(invalid("particles", "need at least 2 particles"));
        }
        if !(self.resample_threshold >= 0.0 && self.resample_threshold <= 1.0) {
            return Err(invalid("resample_threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn lag_for(&self, k: usize) -> usize {
        self.lag.unwrap_or(2 * k)
    }
}

/// `1 / sum w_i^2` for normalized weights.
pub fn effective_particle_count(weights: &[f64]) -> Result<f64> {
    check_normalized(weights)?;
    Ok(1.0 / weights.iter().map(|w| w * w).sum::<f64>())
}

fn check_normalized(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty()
        || weights.iter().any(|w| !(*w >= 0.0))
        || (sum - 1.0).abs() > NORMALIZATION_TOL
    {
        return Err(Error::Unnormalized { sum });
    }
    Ok(())
}

/// Ancestor indices for `count` offspring by systematic resampling: one
/// uniform offset, `count` evenly spaced pointers into the cumulative
/// weights.
pub fn systematic_indices<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_normalized(weights)?;
    let step = 1.0 / count as f64;
    let u0 = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(count);
    let mut cum = weights[0];
    let mut i = 0;
    for j in 0..count {
        let u = u0 + j as f64 * step;
        while u >= cum && i + 1 < weights.len() {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    Ok(out)
}

/// `M` weighted symbol histories. Each particle keeps only its last `W`
/// symbols, stored twice in a `2W` ring so that any suffix is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    window: usize,
    steps: usize,
    buf: Vec<u8>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    /// `m` empty histories with uniform weights.
    pub fn new(m: usize, window: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "ensemble needs at least one particle"));
        }
        if window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        Ok(ParticleEnsemble {
            window,
            steps: 0,
            buf: vec![0; m * 2 * window],
            weights: vec![1.0 / m as f64; m],
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Symbols appended so far (history length, capped at the window).
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: weights.len(),
            });
        }
        check_normalized(&weights)?;
        self.weights = weights;
        Ok(())
    }

    pub fn effective_count(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Last `min(steps, W)` symbols of particle `i`, oldest first.
    pub fn history(&self, i: usize) -> &[u8] {
        self.recent(i, self.steps.min(self.window))
    }

    fn recent(&self, i: usize, n: usize) -> &[u8] {
        if self.steps == 0 || n == 0 {
            return &[];
        }
        let w = self.window;
        let p = (self.steps - 1) % w;
        let end = i * 2 * w + p + w + 1;
        &self.buf[end - n..end]
    }

    /// Append one symbol per particle.
    pub fn push(&mut self, symbols: &[u8]) -> Result<()> {
        if symbols.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: symbols.len(),
            });
        }
        for (i, &s) in symbols.iter().enumerate() {
            self.write(i, s);
        }
        self.steps += 1;
        Ok(())
    }

    fn write(&mut self, i: usize, s: u8) {
        let w = self.window;
        let p = self.steps % w;
        let base = i * 2 * w;
        self.buf[base + p] = s;
        self.buf[base + p + w] = s;
    }

    fn gather(&mut self, ancestors: &[usize], scratch: &mut Vec<u8>) {
        let row = 2 * self.window;
        scratch.clear();
        for &a in ancestors {
            scratch.extend_from_slice(&self.buf[a * row..(a + 1) * row]);
        }
        std::mem::swap(&mut self.buf, scratch);
        let m = self.len();
        self.weights = vec![1.0 / m as f64; m];
    }

    fn resample_with(&mut self, rng: &mut SimRng, scratch: &mut Vec<u8>) -> Result<()> {
        let anc = systematic_indices(&self.weights, self.len(), rng)?;
        self.gather(&anc, scratch);
        Ok(())
    }
}

/// Systematic resampling of a whole ensemble; weights reset to `1/M`.
pub fn systematic_resample(ensemble: &ParticleEnsemble, seed: u64) -> Result<ParticleEnsemble> {
    let mut out = ensemble.clone();
    out.resample_with(&mut seeded(seed), &mut Vec::new())?;
    Ok(out)
}

/// Sequential importance resampling decoder. Each step draws the new
/// symbol uniformly over the alphabet, weights by the Gaussian likelihood
/// `exp(-|y_t - s_t|^2 / sigma^2)` in the log domain and resamples when
/// the effective count drops below the threshold. Symbol `t - lag` is
/// emitted by weighted majority at step `t`; the last `lag` symbols come
/// from the best particle after the trailing samples are scored.
pub fn smc_decode(
    samples: &[Cpx],
    pulse: &PulseShape,
    alphabet: &Alphabet,
    noise_variance: f64,
    config: &SmcConfig,
    seed: u64,
) -> Result<DecodeResult> {
    smc_decode_with_known(samples, None, pulse, alphabet, noise_variance, config, seed)
}

/// As [`smc_decode`], with a known additive component subtracted from
/// every sample before weighting.
pub fn smc_decode_with_known(
    samples: &[Cpx],
    known: Option<&[Cpx]>,
    pulse: &PulseShape,
    alphabet: &Alphabet,
    noise_variance: f64,
    config: &SmcConfig,
    seed: u64,
) -> Result<DecodeResult> {
    config.validate()?;
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(invalid("noise_variance", "must be non-negative and finite"));
    }
    let h = pulse.taps();
    let k = h.len();
    let lt = frame_len(samples, k)?;
    if alphabet.len() > 256 {
        return Err(invalid("alphabet", "at most 256 points"));
    }
    let y: Vec<Cpx> = match known {
        Some(q) if q.len() != samples.len() => {
            return Err(Error::LengthMismatch {
                expected: samples.len(),
                actual: q.len(),
            })
        }
        Some(q) => samples.iter().zip(q).map(|(a, b)| a - b).collect(),
        None => samples.to_vec(),
    };
    let floor = VARIANCE_FLOOR * mean_power(&y).max(f64::MIN_POSITIVE);
    let inv_var = 1.0 / noise_variance.max(floor);

    let m = config.particles;
    let a = alphabet.len();
    let pts = alphabet.points();
    let lag = config.lag_for(k);
    let window = (lag + 1).max(k);
    let threshold = config.resample_threshold * m as f64;

    let mut rng = seeded(seed);
    let mut ens = ParticleEnsemble::new(m, window)?;
    let mut logw = vec![0.0f64; m];
    let mut drawn = vec![0u8; m];
    let mut scratch = Vec::new();
    let mut votes = vec![0.0f64; a];
    let mut diag = Diagnostics {
        min_neff: Some(m as f64),
        ..Diagnostics::default()
    };

    let mut symbols = vec![0usize; lt];
    let mut confidence = vec![0.0f64; lt];

    for t in 0..lt {
        for d in drawn.iter_mut() {
            *d = rng.random_range(0..a) as u8;
        }
        ens.push(&drawn)?;
        let n = (t + 1).min(k);
        for (i, lw) in logw.iter_mut().enumerate() {
            let hist = ens.recent(i, n);
            let mut s = Cpx::new(0.0, 0.0);
            for (j, &x) in hist.iter().enumerate() {
                s += pts[x as usize] * h[n - 1 - j];
            }
            *lw = ens.weights[i].ln() - (y[t] - s).norm_sqr() * inv_var;
        }
        normalize(&mut logw, &mut ens.weights, &mut diag);
        let neff = ens.effective_count();
        diag.min_neff = diag.min_neff.map(|v| v.min(neff));

        if t >= lag {
            let (sym, conf) = vote(&ens, lag, &mut votes);
            symbols[t - lag] = sym;
            confidence[t - lag] = conf;
        }
        if neff < threshold {
            ens.resample_with(&mut rng, &mut scratch)?;
            diag.resamples += 1;
        }
    }

    // Trailing K - 1 samples involve only symbols already drawn.
    let n = lt.min(k);
    for (i, lw) in logw.iter_mut().enumerate() {
        let hist = ens.recent(i, n);
        let mut ll = 0.0;
        for (u, &yu) in y[lt..].iter().enumerate() {
            let mut s = Cpx::new(0.0, 0.0);
            // sample lt + u sees x_{lt-1-b} through tap u + 1 + b
            for b in 0..n {
                let tap = u + 1 + b;
                if tap < k {
                    s += pts[hist[n - 1 - b] as usize] * h[tap];
                }
            }
            ll += (yu - s).norm_sqr();
        }
        *lw = ens.weights[i].ln() - ll * inv_var;
    }
    normalize(&mut logw, &mut ens.weights, &mut diag);

    let best = ens
        .weights
        .iter()
        .enumerate()
        .fold(
            (0, f64::MIN),
            |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc },
        )
        .0;
    let start = lt.saturating_sub(lag);
    let tail = ens.recent(best, lt - start).to_vec();
    for (j, &s) in tail.iter().enumerate() {
        let t = start + j;
        symbols[t] = s as usize;
        let back = lt - t;
        confidence[t] = (0..m)
            .filter(|&i| ens.recent(i, back)[0] == s)
            .map(|i| ens.weights[i])
            .sum();
    }

    let mut result = DecodeResult::hard(symbols, alphabet, diag);
    result.confidence = Some(confidence);
    Ok(result)
}

/// Turn log weights into normalized weights. Non-finite values reset the
/// ensemble to uniform and are counted.
fn normalize(logw: &mut [f64], weights: &mut [f64], diag: &mut Diagnostics) {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    if max.is_finite() {
        for (w, &l) in weights.iter_mut().zip(logw.iter()) {
            *w = (l - max).exp();
            sum += *w;
        }
    }
    if !(sum.is_finite() && sum > 0.0) {
        let u = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = u);
        diag.underflow_resets += 1;
        return;
    }
    weights.iter_mut().for_each(|w| *w /= sum);
}

/// Weighted majority over particles for the symbol `lag` steps back.
fn vote(ens: &ParticleEnsemble, lag: usize, votes: &mut [f64]) -> (usize, f64) {
    votes.iter_mut().for_each(|v| *v = 0.0);
    for (i, &w) in ens.weights.iter().enumerate() {
        votes[ens.recent(i, lag + 1)[0] as usize] += w;
    }
    votes.iter().enumerate().fold(
        (0, f64::MIN),
        |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
    )
}
