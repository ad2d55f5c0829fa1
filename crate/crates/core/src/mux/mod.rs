//! Bit mapping, the overlap encoder and the convolution channel matrix.

mod alphabet;
mod encode;
mod frame;
mod matrix;

pub use alphabet::{demap_symbols, map_bits, Alphabet, AlphabetKind};
pub use encode::encode;
pub use frame::{
    load_record, read_samples, save_record, sidecar_path, write_samples, Frame, FrameSidecar,
};
pub use matrix::{
    build_channel_matrix, singular_spectrum, singular_spectrum_with, svd_factors, ChannelMatrix,
    SingularSpectrum, SvdFactors, SvdMethod, GRAM_THRESHOLD,
};
