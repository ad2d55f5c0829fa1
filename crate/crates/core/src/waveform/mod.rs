//! Pulse shapes and occupied-bandwidth measurement.

mod bandwidth;
mod pulse;
mod spectrum;

pub use bandwidth::{
    bandwidth_report, bounded_psd_bandwidth, fpcb_bandwidth, BandwidthReport, Occupancy,
    EDGE_GUARD_FRACTION,
};
pub use pulse::{make_pulse, PulseKind, PulseShape, DEFAULT_GAUSSIAN_BT};
pub use spectrum::{
    magnitude_spectrum, welch_psd, SpectrumEstimate, SpectrumSource, MIN_PAD_FACTOR,
};
