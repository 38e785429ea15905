use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vlcphy::framing::assemble_frame;
use vlcphy::framing::{Mhr, Topology};
use vlcphy::harness::{
    ber_sweep, failure_sigma, throughput_check, wilson_interval, LoopbackConfig, SweepSpec,
    ThroughputSpec,
};
use vlcphy::mode::{list_modes, lookup_mode, PhyType};
use vlcphy::modem::{modulate_frame, DimmingConfig};

#[test]
fn sweeps_are_deterministic() {
    let mode = lookup_mode(PhyType::PhyI, 1).unwrap();
    let spec = SweepSpec {
        frames_per_point: 20,
        payload_length: 16,
        oversample: 4,
        seed: 11,
        ..SweepSpec::new(mode, vec![5.0, 8.0])
    };
    let a = ber_sweep(&spec).unwrap();
    let b = ber_sweep(&spec).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.points[0].chip_errors, b.points[0].chip_errors);
}

#[test]
fn error_rates_fall_with_snr() {
    let mode = lookup_mode(PhyType::PhyI, 4).unwrap();
    let spec = SweepSpec {
        frames_per_point: 60,
        payload_length: 64,
        oversample: 4,
        seed: 12,
        ..SweepSpec::new(mode, vec![4.0, 7.0, 10.0, 13.0, f64::INFINITY])
    };
    let result = ber_sweep(&spec).unwrap();
    for pair in result.points.windows(2) {
        assert!(pair[1].ber <= pair[0].ber, "{} -> {}", pair[0].ber, pair[1].ber);
        assert!(pair[1].fer <= pair[0].fer, "{} -> {}", pair[0].fer, pair[1].fer);
    }
    let clean = result.points.last().unwrap();
    assert_eq!((clean.chip_errors, clean.frame_errors), (0, 0));
    assert!(result.points[0].fer > 0.5);
    let csv = result.to_csv();
    assert!(csv.starts_with("snr_db,ber,fer,ci_lo,ci_hi,corrected\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn wilson_intervals_cover_the_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in [0.01, 0.1, 0.5] {
        let n = 500;
        let trials = 400;
        let covered = (0..trials)
            .filter(|_| {
                let k = (0..n).filter(|_| rng.random_bool(p)).count();
                let (lo, hi) = wilson_interval(k, n);
                lo <= p && p <= hi
            })
            .count();
        // Nominal 95%; four standard errors of slack at 400 trials.
        assert!(covered as f64 / trials as f64 > 0.95 - 4.0 * 0.011, "p={p}: {covered}/{trials}");
    }
}

#[test]
fn coding_buys_noise_margin() {
    let config = LoopbackConfig {
        oversample: 4,
        ..LoopbackConfig::default()
    };
    let data = b"margin check payload";
    let median = |mode| {
        let mut sigmas: Vec<f64> = (0..9)
            .map(|seed| failure_sigma(&mode, data, seed, &config, 4.0, 0.01).unwrap().unwrap())
            .collect();
        sigmas.sort_by(f64::total_cmp);
        sigmas[4]
    };
    let coded = median(lookup_mode(PhyType::PhyI, 0).unwrap());
    let uncoded = median(lookup_mode(PhyType::PhyI, 4).unwrap());
    assert!(coded > uncoded, "coded {coded} vs uncoded {uncoded}");
}

#[test]
fn undimmed_throughput_tracks_data_rate() {
    for mode in [lookup_mode(PhyType::PhyI, 3).unwrap(), lookup_mode(PhyType::PhyII, 9).unwrap()] {
        let spec = ThroughputSpec {
            payload_length: 2048,
            ..ThroughputSpec::new(mode, 400_000)
        };
        let r = throughput_check(&spec).unwrap();
        assert!(r.frames_sent >= 2);
        assert_eq!(r.frames_delivered, r.frames_sent);
        // Header and preamble overhead only.
        assert!(r.measured_bps < r.nominal_bps && r.measured_bps > 0.8 * r.nominal_bps, "{r:?}");
    }
}

#[test]
fn frames_keep_the_requested_brightness() {
    for mode in list_modes() {
        for level in [20u8, 50, 80] {
            let cases = match mode.modulation {
                vlcphy::mode::Modulation::Ook => vec![DimmingConfig::level(level), DimmingConfig::compensation(level)],
                vlcphy::mode::Modulation::Vppm => vec![DimmingConfig::level(level)],
            };
            for dimming in cases {
                let frame = assemble_frame(&[0x5a; 512], mode, &dimming, &Mhr::default(), Topology::default()).unwrap();
                let wave = modulate_frame(&frame, 2).unwrap();
                let err = (wave.mean() - level as f64 / 100.0).abs();
                assert!(err < 0.03, "{} at {level}% ({:?}): mean {}", mode.describe(), dimming.ook, wave.mean());
            }
        }
    }
}

#[test]
fn light_runs_stay_short() {
    // A flicker proxy: the longest constant stretch of any frame body,
    // measured in optical clock slots.
    for mode in list_modes() {
        let frame = assemble_frame(&[0u8; 256], mode, &DimmingConfig::default(), &Mhr::default(), Topology::default()).unwrap();
        let wave = modulate_frame(&frame, 2).unwrap();
        let run = wave.max_run().div_ceil(2);
        assert!(run <= 64, "{}: run {run}", mode.describe());
    }
}
