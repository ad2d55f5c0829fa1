use metamux::capacity::{
    capacity, capacity_ebn0, required_ebn0, stream_gains, waterfill, CapacityMode, PowerAllocation,
};
use metamux::mux::SingularSpectrum;
use metamux::waveform::{bandwidth_report, make_pulse, PulseKind};
use proptest::prelude::*;

#[test]
fn single_stream_is_shannon() {
    let one = SingularSpectrum::new(vec![1.0]).unwrap();
    for snr in [0.1, 1.0, 10.0, 100.0] {
        let want = 0.5 * (1.0f64 + snr).log2();
        let eq = PowerAllocation::equal(1, snr, 1.0).unwrap();
        let wf = waterfill(&[1.0], 1.0, snr).unwrap();
        for alloc in [eq, wf] {
            let c = capacity(&one, &alloc, None, 1).unwrap();
            assert!((c.total_bits_per_symbol - want).abs() < 1e-12);
        }
    }
}

#[test]
fn rectangle_capacity_grows_with_k() {
    let c: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|&k| {
            let g = stream_gains(&make_pulse(PulseKind::Rectangular, k).unwrap()).unwrap();
            capacity_ebn0(&g, 2.0, 1.0 / k as f64, 10.0, CapacityMode::EqualPower)
                .unwrap()
                .total_bits_per_symbol
        })
        .collect();
    assert!(c.windows(2).all(|w| w[0] < w[1]), "{c:?}");
}

#[test]
fn rectangle_beats_taylor_at_k100() {
    let c = |kind| {
        let g = stream_gains(&make_pulse(kind, 100).unwrap()).unwrap();
        capacity_ebn0(&g, 2.0, 0.01, 20.0, CapacityMode::EqualPower)
            .unwrap()
            .total_bits_per_symbol
    };
    assert!(c(PulseKind::Rectangular) > c(PulseKind::taylor(35.0)));
}

#[test]
fn required_ebn0_rises_with_k_for_taylor() {
    let r: Vec<f64> = [10, 50, 100]
        .iter()
        .map(|&k| {
            let p = make_pulse(PulseKind::taylor(35.0), k).unwrap();
            required_ebn0(&p, 2.0, 2.0 * k as f64, CapacityMode::EqualPower).unwrap()
        })
        .collect();
    assert!(r.windows(2).all(|w| w[0] < w[1]), "{r:?}");
}

#[test]
fn spectral_efficiency_uses_occupied_band() {
    let p = make_pulse(PulseKind::taylor(35.0), 50).unwrap();
    let b = bandwidth_report(&p, 256)
        .unwrap()
        .bounded_psd_35db
        .hz()
        .unwrap();
    let g = stream_gains(&p).unwrap();
    let r = capacity_ebn0(&g, 2.0, 0.02, 30.0, CapacityMode::Waterfill)
        .unwrap()
        .with_spectral_efficiency(b, 1.0)
        .unwrap();
    let eta = r.spectral_efficiency_bits_s_hz.unwrap();
    assert!((eta - r.unfactored() / b).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn capacity_increases_with_ebn0(
        gains in proptest::collection::vec(0.01f64..3.0, 1..20),
        db in -10.0f64..40.0,
        step in 0.1f64..5.0,
    ) {
        let s = SingularSpectrum::new(gains.clone()).unwrap();
        let k = gains.len();
        for mode in [CapacityMode::EqualPower, CapacityMode::Waterfill] {
            let lo = capacity_ebn0(&s, 2.0, 1.0 / k as f64, db, mode).unwrap();
            let hi = capacity_ebn0(&s, 2.0, 1.0 / k as f64, db + step, mode).unwrap();
            prop_assert!(hi.total_bits_per_symbol > lo.total_bits_per_symbol);
        }
    }

    #[test]
    fn waterfill_never_loses_to_equal_power(
        gains in proptest::collection::vec(0.0f64..3.0, 1..20),
        db in -10.0f64..40.0,
    ) {
        prop_assume!(gains.iter().any(|&g| g > 0.1));
        let s = SingularSpectrum::new(gains.clone()).unwrap();
        let ts = 1.0 / gains.len() as f64;
        let eq = capacity_ebn0(&s, 2.0, ts, db, CapacityMode::EqualPower).unwrap();
        let wf = capacity_ebn0(&s, 2.0, ts, db, CapacityMode::Waterfill).unwrap();
        prop_assert!(wf.total_bits_per_symbol >= eq.total_bits_per_symbol - 1e-9);
    }

    #[test]
    fn bandwidth_ordering(k in 4usize..120, which in 0usize..4) {
        let kind = [
            PulseKind::Rectangular,
            PulseKind::taylor(35.0),
            PulseKind::Hamming,
            PulseKind::gaussian(),
        ][which];
        let p = make_pulse(kind, k).unwrap();
        let r = bandwidth_report(&p, 64).unwrap();
        prop_assert!(r.fpcb_99_hz > 0.0);
        prop_assert!(r.fpcb_99_hz <= r.processing_bandwidth_hz);
        if let (Some(a), Some(b)) = (r.bounded_psd_35db.hz(), r.bounded_psd_50db.hz()) {
            prop_assert!(a > 0.0 && b >= a);
        }
    }
}
