use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Cpx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AlphabetKind {
    /// {+1, +j, -1, -j}, two bits per symbol.
    ComplexBpsk,
    /// Gray-coded square QAM with `order` points.
    SquareQam { order: usize },
}

/// Constellation with unit mean energy. `points[b]` is the point for the
/// bit pattern `b`, first bit most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    kind: AlphabetKind,
    points: Vec<Cpx>,
    bits_per_symbol: usize,
}

impl Alphabet {
    /// Gray order around the circle: 00 -> +1, 01 -> +j, 11 -> -1, 10 -> -j.
    pub fn complex_bpsk() -> Self {
        Alphabet {
            kind: AlphabetKind::ComplexBpsk,
            points: vec![
                Cpx::new(1.0, 0.0),
                Cpx::new(0.0, 1.0),
                Cpx::new(0.0, -1.0),
                Cpx::new(-1.0, 0.0),
            ],
            bits_per_symbol: 2,
        }
    }

    /// Square QAM; `order` must be a power of 4. Each axis carries half of
    /// the bits, Gray coded; the first half drives the in-phase axis.
    pub fn square_qam(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(invalid("order", format!("{order} is not a power of 4")));
        }
        let bits = order.trailing_zeros() as usize;
        let half = bits / 2;
        let levels = 1usize << half;
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |gray: usize| {
            let idx = gray_to_binary(gray);
            (2.0 * idx as f64 - (levels as f64 - 1.0)) / scale
        };
        let points = (0..order)
            .map(|b| Cpx::new(level(b >> half), level(b & (levels - 1))))
            .collect();
        Ok(Alphabet {
            kind: AlphabetKind::SquareQam { order },
            points,
            bits_per_symbol: bits,
        })
    }

    pub fn from_kind(kind: AlphabetKind) -> Result<Self> {
        match kind {
            AlphabetKind::ComplexBpsk => Ok(Self::complex_bpsk()),
            AlphabetKind::SquareQam { order } => Self::square_qam(order),
        }
    }

    pub fn kind(&self) -> AlphabetKind {
        self.kind
    }

    pub fn points(&self) -> &[Cpx] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bits carried per symbol (eta).
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn point(&self, index: usize) -> Cpx {
        self.points[index]
    }

    /// Nearest constellation point by Euclidean distance.
    pub fn nearest(&self, z: Cpx) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Smallest distance between two points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Group bits (0/1 bytes) into symbol indices.
    pub fn bits_to_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let eta = self.bits_per_symbol;
        if !bits.len().is_multiple_of(eta) {
            return Err(Error::RaggedBits {
                bits: bits.len(),
                bits_per_symbol: eta,
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("bits", "bits must be 0 or 1"));
        }
        Ok(bits
            .chunks(eta)
            .map(|c| c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
            .collect())
    }

    pub fn indices_to_bits(&self, indices: &[usize]) -> Vec<u8> {
        let eta = self.bits_per_symbol;
        let mut out = Vec::with_capacity(indices.len() * eta);
        for &i in indices {
            for shift in (0..eta).rev() {
                out.push(((i >> shift) & 1) as u8);
            }
        }
        out
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

/// Map bits to constellation points.
pub fn map_bits(bits: &[u8], alphabet: &Alphabet) -> Result<Vec<Cpx>> {
    Ok(alphabet
        .bits_to_indices(bits)?
        .into_iter()
        .map(|i| alphabet.point(i))
        .collect())
}

/// Hard-decision inverse of [`map_bits`].
pub fn demap_symbols(symbols: &[Cpx], alphabet: &Alphabet) -> Vec<u8> {
    let idx: Vec<usize> = symbols.iter().map(|&z| alphabet.nearest(z)).collect();
    alphabet.indices_to_bits(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Cpx {
        Cpx::new(re, im)
    }

    #[test]
    fn gray_table() {
        let a = Alphabet::complex_bpsk();
        let got = map_bits(&[0, 0, 0, 1, 1, 1, 1, 0], &a).unwrap();
        assert_eq!(
            got,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
        );
    }

    #[test]
    fn empty_and_ragged() {
        let a = Alphabet::complex_bpsk();
        assert!(map_bits(&[], &a).unwrap().is_empty());
        assert!(matches!(
            map_bits(&[1, 0, 1], &a),
            Err(Error::RaggedBits { .. })
        ));
    }

    #[test]
    fn unit_mean_energy_and_bijection() {
        for a in [
            Alphabet::complex_bpsk(),
            Alphabet::square_qam(4).unwrap(),
            Alphabet::square_qam(16).unwrap(),
            Alphabet::square_qam(256).unwrap(),
        ] {
            assert_eq!(a.len(), 1 << a.bits_per_symbol());
            let e: f64 = a.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / a.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
            for (i, &p) in a.points().iter().enumerate() {
                assert_eq!(a.nearest(p), i);
            }
        }
    }

    #[test]
    fn qam_neighbours_differ_in_one_bit() {
        let a = Alphabet::square_qam(16).unwrap();
        let d = a.min_distance();
        for i in 0..a.len() {
            for j in 0..a.len() {
                if ((a.point(i) - a.point(j)).norm() - d).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn non_power_of_four_rejected() {
        assert!(Alphabet::square_qam(8).is_err());
        assert!(Alphabet::square_qam(2).is_err());
    }

    proptest! {
        #[test]
        fn bpsk_round_trip(bits in proptest::collection::vec(0u8..2, 0..400).prop_map(|mut v| { if v.len() % 2 == 1 { v.pop(); } v })) {
            let a = Alphabet::complex_bpsk();
            let syms = map_bits(&bits, &a).unwrap();
            prop_assert_eq!(demap_symbols(&syms, &a), bits);
        }
    }
}
