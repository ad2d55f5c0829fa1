//! Calibrated AWGN and the QAM signal that shares the band.

mod interferer;
mod noise;

pub use interferer::{
    db_to_gain, demodulate_qam, make_qam_interferer, rrc, superpose, InterfererParams,
    QamDecisions, DEFAULT_ORDER, DEFAULT_ROLLOFF, DEFAULT_SPAN_SYMBOLS, MARGINAL_RESIDUAL,
    MAX_MARGINAL_FRACTION,
};
pub use noise::{awgn, calibrate_noise, mean_power, measure_ebn0, NoiseCalibration};
