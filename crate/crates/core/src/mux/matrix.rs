use std::io::Write;

use nalgebra::{DMatrix, SymmetricTridiagonal, SVD};

use crate::error::{invalid, Error, Result};
use crate::waveform::PulseShape;

/// Frames at least this long use the Gram eigenvalue route under
/// [`SvdMethod::Auto`].
pub const GRAM_THRESHOLD: usize = 512;

const MAX_SVD_ITERATIONS: usize = 10_000;
const MAX_QL_SWEEPS: usize = 60;

/// Banded Toeplitz matrix `H` with `L_t` columns and `L_t + K - 1` rows.
/// Column `c` holds the pulse taps at rows `c..c + K`, so `H x` is the
/// full convolution of `x` with the pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    taps: Vec<f64>,
    cols: usize,
}

pub fn build_channel_matrix(pulse: &PulseShape, frame_len: usize) -> Result<ChannelMatrix> {
    if frame_len < 1 {
        return Err(invalid("frame_len", "L_t must be at least 1"));
    }
    Ok(ChannelMatrix {
        taps: pulse.taps().to_vec(),
        cols: frame_len,
    })
}

impl ChannelMatrix {
    pub fn rows(&self) -> usize {
        self.cols + self.taps.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn overlap(&self) -> usize {
        self.taps.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        if r >= c && r - c < self.taps.len() && c < self.cols {
            self.taps[r - c]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.cols, |r, c| self.entry(r, c))
    }

    /// `H^T H`: symmetric Toeplitz in the pulse autocorrelation.
    pub fn gram(&self) -> DMatrix<f64> {
        let k = self.taps.len();
        let acf: Vec<f64> = (0..k)
            .map(|lag| {
                (0..k - lag)
                    .map(|i| self.taps[i] * self.taps[i + lag])
                    .sum()
            })
            .collect();
        DMatrix::from_fn(self.cols, self.cols, |i, j| {
            let lag = i.abs_diff(j);
            if lag < k {
                acf[lag]
            } else {
                0.0
            }
        })
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.cols as f64 * self.taps.iter().map(|t| t * t).sum::<f64>()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in 0..self.rows() {
            let row: Vec<String> = (0..self.cols)
                .map(|c| format!("{}", self.entry(r, c)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Singular values of `H`, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Wrap values, sorting them into descending order.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(
                "singular values",
                "must be finite and non-negative",
            ));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(SingularSpectrum { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn squared(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Count of values above `rel * largest`.
    pub fn rank(&self, rel: f64) -> usize {
        let cut = self.largest() * rel;
        self.values.iter().filter(|&&v| v > cut).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense SVD below [`GRAM_THRESHOLD`] columns, Gram eigenvalues above.
    #[default]
    Auto,
    Dense,
    Gram,
}

pub fn singular_spectrum(h: &ChannelMatrix) -> Result<SingularSpectrum> {
    singular_spectrum_with(h, SvdMethod::Auto)
}

pub fn singular_spectrum_with(h: &ChannelMatrix, method: SvdMethod) -> Result<SingularSpectrum> {
    let use_gram = match method {
        SvdMethod::Auto => h.cols() >= GRAM_THRESHOLD,
        SvdMethod::Dense => false,
        SvdMethod::Gram => true,
    };
    let values = if use_gram {
        gram_route(h)?
    } else {
        let svd = SVD::try_new(h.to_dense(), false, false, f64::EPSILON, MAX_SVD_ITERATIONS)
            .ok_or(Error::NonConvergence {
                routine: "dense SVD",
            })?;
        svd.singular_values.iter().copied().collect()
    };
    SingularSpectrum::new(values)
}

fn gram_route(h: &ChannelMatrix) -> Result<Vec<f64>> {
    let n = h.cols();
    let (mut diag, off) = if n == 1 {
        (vec![h.gram()[(0, 0)]], Vec::new())
    } else {
        let (d, e) = SymmetricTridiagonal::new(h.gram()).unpack_tridiagonal();
        (d.iter().copied().collect(), e.iter().copied().collect())
    };
    let mut off: Vec<f64> = off;
    off.push(0.0);
    tridiagonal_eigenvalues(&mut diag, &mut off)?;
    Ok(diag.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `e[i]` couples rows `i` and `i + 1`; `e` has the same length as `d`
/// with a trailing zero. Eigenvalues replace `d`.
fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NonConvergence {
                    routine: "tridiagonal QL",
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full thin SVD `H = U diag(s) V^T`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub singular: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

impl SvdFactors {
    pub fn recompose(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.singular));
        &self.u * s * &self.v_t
    }
}

pub fn svd_factors(h: &ChannelMatrix) -> Result<SvdFactors> {
    let svd = SVD::try_new(h.to_dense(), true, true, f64::EPSILON, MAX_SVD_ITERATIONS).ok_or(
        Error::NonConvergence {
            routine: "dense SVD",
        },
    )?;
    Ok(SvdFactors {
        u: svd.u.expect("requested U"),
        singular: svd.singular_values.iter().copied().collect(),
        v_t: svd.v_t.expect("requested V^T"),
    })
}
