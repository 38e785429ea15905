//! Loopback runs, error-rate sweeps and throughput measurement.
//!
//! Every random choice flows from an explicit seed. Sweep point `i` uses
//! `seed ^ i`, and within a point frame `j` draws its payload and channel
//! seed from a generator seeded by that value, so two modes swept with the
//! same seed see the same payloads and the same noise streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bits::BitSequence;
use crate::channel::{Channel, ChannelConfig};
use crate::error::{Error, Result};
use crate::framing::{assemble_frame, Frame, Mhr, Topology, SHR_LEN};
use crate::mode::{Modulation, OperatingMode};
use crate::modem::{
    generate_idle, modulate_frame, ook_demodulate, psdu_channel_bits, vppm_demodulate, DimmingConfig,
    OokLevels, Waveform, DEFAULT_OVERSAMPLE,
};
use crate::receiver::{Receiver, RxConfig, RxFailure, RxFrame, RxProfile};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Chip error probability of the OOK slicer: the decision averages
/// `oversample` samples, so the effective noise is `sigma / sqrt(N)`.
pub fn ook_chip_error_probability(swing: f64, sigma: f64, oversample: usize) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    q_function(swing / (2.0 * sigma / (oversample as f64).sqrt()))
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // The bounds are exactly 0 and 1 at the extremes; rounding would
    // otherwise leave them a hair inside.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Receiver-side swing of a frame at unit channel gain.
pub fn nominal_swing(mode: &OperatingMode, dimming: &DimmingConfig) -> f64 {
    match mode.modulation {
        Modulation::Ook => OokLevels::for_dimming(dimming).swing(),
        Modulation::Vppm => 1.0,
    }
}

/// Noise level giving `snr_db` for a given swing; infinite SNR is silence.
pub fn sigma_for_snr(snr_db: f64, swing: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        swing / 10f64.powf(snr_db / 20.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopbackConfig {
    pub oversample: usize,
    /// Idle slots before the frame.
    pub lead_slots: usize,
    /// Idle slots after the frame.
    pub tail_slots: usize,
    pub topology: Topology,
}

impl Default for LoopbackConfig {
    fn default() -> Self {
        Self {
            oversample: DEFAULT_OVERSAMPLE,
            lead_slots: 32,
            tail_slots: 32,
            topology: Topology::default(),
        }
    }
}

/// A transmitted frame inside its idle padding.
#[derive(Debug, Clone)]
pub struct TxCapture {
    pub wave: Waveform,
    pub frame: Frame,
    /// Channel bits after the SHR, as sent.
    pub body: BitSequence,
    /// Sample index where the body starts.
    pub body_start: usize,
}

pub fn transmit(
    mode: &OperatingMode,
    payload: &[u8],
    dimming: &DimmingConfig,
    mhr: &Mhr,
    config: &LoopbackConfig,
    delay: usize,
) -> Result<TxCapture> {
    let n = config.oversample;
    let frame = assemble_frame(payload, mode, dimming, mhr, config.topology)?;
    let mut wave = generate_idle(mode, dimming, config.lead_slots, n)?;
    let mut lead = vec![dimming.target(); delay];
    lead.extend(wave.samples);
    wave.samples = lead;
    let frame_start = wave.len();
    wave.append(&modulate_frame(&frame, n)?);
    wave.append(&generate_idle(mode, dimming, config.tail_slots, n)?);
    let mut body = frame.phr_coded.clone();
    body.extend_from(&psdu_channel_bits(&frame)?);
    Ok(TxCapture {
        wave,
        frame,
        body,
        body_start: frame_start + SHR_LEN * n,
    })
}

/// Chip errors of the body when sliced at the true timing with the levels
/// the channel actually produces, i.e. the raw demodulator error count.
pub fn genie_chip_errors(capture: &TxCapture, received: &Waveform, levels: &OokLevels) -> Result<usize> {
    let n = received.oversample;
    let end = capture.body_start + capture.body.len() * n;
    let part = Waveform {
        samples: received.samples[capture.body_start..end].to_vec(),
        sample_rate: received.sample_rate,
        oversample: n,
    };
    let chips = match capture.frame.mode.modulation {
        Modulation::Ook => ook_demodulate(&part, 0, levels)?,
        Modulation::Vppm => vppm_demodulate(&part, 0)?,
    };
    Ok(chips.hamming_distance(&capture.body))
}

#[derive(Debug, Clone)]
pub struct LoopbackReport {
    pub result: std::result::Result<RxFrame, RxFailure>,
    pub passed: bool,
    pub chips: usize,
    pub chip_errors: usize,
    /// Samples of extra delay injected before the capture.
    pub delay: usize,
}

pub fn run_loopback_with(
    mode: &OperatingMode,
    payload: &[u8],
    channel: &ChannelConfig,
    dimming: &DimmingConfig,
    seed: u64,
    config: &LoopbackConfig,
) -> Result<LoopbackReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delay = rng.random_range(0..config.oversample);
    let mhr = Mhr {
        frame_control: 0,
        sequence_number: rng.random(),
    };
    let capture = transmit(mode, payload, dimming, &mhr, config, delay)?;
    let mut ch = Channel::new(ChannelConfig {
        rng_seed: rng.next_u64(),
        ..*channel
    })?;
    let received = ch.apply(&capture.wave);
    let nominal = OokLevels::for_dimming(dimming);
    let levels = OokLevels {
        off: ch.gain() * nominal.off + channel.ambient_dc,
        on: ch.gain() * nominal.on + channel.ambient_dc,
    };
    let chip_errors = genie_chip_errors(&capture, &received, &levels)?;
    let mut rx = Receiver::new(RxProfile::for_mode(mode), RxConfig {
        subframe_length: dimming.subframe_length,
        ..RxConfig::default()
    });
    let result = rx
        .next_frame(&received)
        .unwrap_or_else(|| Err(RxFailure::no_frame()));
    let passed = matches!(&result, Ok(f) if f.payload == payload && f.mhr == mhr);
    Ok(LoopbackReport {
        result,
        passed,
        chips: capture.body.len(),
        chip_errors,
        delay,
    })
}

/// Full transmit chain, channel and receive chain for one frame.
pub fn run_loopback(
    mode: &OperatingMode,
    payload: &[u8],
    channel: &ChannelConfig,
    dimming: &DimmingConfig,
    seed: u64,
) -> Result<LoopbackReport> {
    run_loopback_with(mode, payload, channel, dimming, seed, &LoopbackConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: OperatingMode,
    /// SNR points in dB; `f64::INFINITY` is a noiseless point.
    pub snr_db: Vec<f64>,
    pub frames_per_point: usize,
    pub payload_length: usize,
    pub dimming: DimmingConfig,
    pub seed: u64,
    pub oversample: usize,
}

impl SweepSpec {
    pub fn new(mode: OperatingMode, snr_db: Vec<f64>) -> Self {
        Self {
            mode,
            snr_db,
            frames_per_point: 100,
            payload_length: 64,
            dimming: DimmingConfig::default(),
            seed: 0,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub noise_sigma: f64,
    pub frames: usize,
    pub frame_errors: usize,
    pub fer: f64,
    pub fer_ci: (f64, f64),
    /// Channel chips compared before any decoding.
    pub chips: usize,
    pub chip_errors: usize,
    /// Pre-FEC chip error rate.
    pub ber: f64,
    pub ber_ci: (f64, f64),
    /// RS symbols corrected in delivered frames.
    pub corrected_symbols: usize,
    /// Payload bit errors among frames the receiver delivered.
    pub payload_bit_errors: usize,
    pub delivered_bits: usize,
    /// Delivered payload bits per second of frame air time.
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Delivered payload bits over the air time of every frame in the sweep.
    pub effective_throughput_bps: f64,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,ber,fer,ci_lo,ci_hi,corrected\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
                p.snr_db, p.ber, p.fer, p.ber_ci.0, p.ber_ci.1, p.corrected_symbols
            ));
        }
        out
    }
}

fn bit_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
}

pub fn ber_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.frames_per_point == 0 || spec.snr_db.is_empty() {
        return Err(Error::config("a sweep needs at least one point and one frame"));
    }
    let config = LoopbackConfig {
        oversample: spec.oversample,
        ..LoopbackConfig::default()
    };
    let swing = nominal_swing(&spec.mode, &spec.dimming);
    let clock = spec.mode.optical_clock_hz as f64;
    let mut points = Vec::with_capacity(spec.snr_db.len());
    let (mut all_bits, mut all_time) = (0usize, 0.0);
    for (i, &snr_db) in spec.snr_db.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ i as u64);
        let noise_sigma = sigma_for_snr(snr_db, swing);
        let mut p = SweepPoint {
            snr_db,
            noise_sigma,
            frames: spec.frames_per_point,
            frame_errors: 0,
            fer: 0.0,
            fer_ci: (0.0, 1.0),
            chips: 0,
            chip_errors: 0,
            ber: 0.0,
            ber_ci: (0.0, 1.0),
            corrected_symbols: 0,
            payload_bit_errors: 0,
            delivered_bits: 0,
            throughput_bps: 0.0,
        };
        let mut air_slots = 0usize;
        for _ in 0..spec.frames_per_point {
            let payload: Vec<u8> = (0..spec.payload_length).map(|_| rng.random()).collect();
            let frame_seed = rng.next_u64();
            let report = run_loopback_with(
                &spec.mode,
                &payload,
                &ChannelConfig::awgn(noise_sigma, 0),
                &spec.dimming,
                frame_seed,
                &config,
            )?;
            p.chips += report.chips;
            p.chip_errors += report.chip_errors;
            air_slots += SHR_LEN + report.chips;
            match &report.result {
                Ok(frame) if report.passed => {
                    p.corrected_symbols += frame.fec_report.corrected_count();
                    p.delivered_bits += 8 * payload.len();
                }
                Ok(frame) => {
                    p.frame_errors += 1;
                    p.corrected_symbols += frame.fec_report.corrected_count();
                    if frame.payload.len() == payload.len() {
                        p.payload_bit_errors += bit_errors(&frame.payload, &payload);
                        p.delivered_bits += 8 * payload.len();
                    }
                }
                Err(_) => p.frame_errors += 1,
            }
        }
        p.fer = p.frame_errors as f64 / p.frames as f64;
        p.fer_ci = wilson_interval(p.frame_errors, p.frames);
        p.ber = if p.chips == 0 { 0.0 } else { p.chip_errors as f64 / p.chips as f64 };
        p.ber_ci = wilson_interval(p.chip_errors, p.chips);
        let air_time = air_slots as f64 / clock;
        p.throughput_bps = (p.delivered_bits - p.payload_bit_errors.min(p.delivered_bits)) as f64 / air_time;
        all_bits += p.delivered_bits;
        all_time += air_time;
        points.push(p);
    }
    Ok(SweepResult {
        points,
        effective_throughput_bps: if all_time > 0.0 { all_bits as f64 / all_time } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSpec {
    pub mode: OperatingMode,
    pub dimming: DimmingConfig,
    /// Length of the simulated capture in optical clock slots.
    pub duration_clocks: usize,
    pub payload_length: usize,
    /// Idle slots between consecutive frames.
    pub idle_gap: usize,
    pub oversample: usize,
    pub seed: u64,
}

impl ThroughputSpec {
    pub fn new(mode: OperatingMode, duration_clocks: usize) -> Self {
        Self {
            mode,
            dimming: DimmingConfig::default(),
            duration_clocks,
            payload_length: 4096,
            idle_gap: 0,
            oversample: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub frames_sent: usize,
    pub frames_delivered: usize,
    pub payload_bits: usize,
    /// Seconds from the start of the capture to the end of the last
    /// delivered frame.
    pub elapsed_s: f64,
    pub measured_bps: f64,
    pub nominal_bps: f64,
}

/// Sends back-to-back frames through an identity channel for
/// `duration_clocks` slots and measures the payload rate the receiver
/// delivers. Frames that would not fit whole are not sent; the rest of the
/// capture is idle light.
pub fn throughput_check(spec: &ThroughputSpec) -> Result<ThroughputReport> {
    let mode = &spec.mode;
    let n = spec.oversample;
    let nominal_bps = {
        let r = mode.data_rate();
        *r.numer() as f64 / *r.denom() as f64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut wave = Waveform::new(Vec::new(), mode.optical_clock_hz, n);
    let mut sent = Vec::new();
    let mut slots = 0usize;
    loop {
        let payload: Vec<u8> = (0..spec.payload_length).map(|_| rng.random()).collect();
        let mhr = Mhr {
            frame_control: 0,
            sequence_number: sent.len() as u8,
        };
        let frame = assemble_frame(&payload, mode, &spec.dimming, &mhr, Topology::default())?;
        let frame_wave = modulate_frame(&frame, n)?;
        let frame_slots = frame_wave.len() / n;
        if slots + frame_slots > spec.duration_clocks {
            break;
        }
        wave.append(&frame_wave);
        slots += frame_slots;
        sent.push(payload);
        let gap = spec.idle_gap.min(spec.duration_clocks - slots);
        wave.append(&generate_idle(mode, &spec.dimming, gap, n)?);
        slots += gap;
        if gap < spec.idle_gap {
            break;
        }
    }
    wave.append(&generate_idle(mode, &spec.dimming, spec.duration_clocks - slots, n)?);

    let mut rx = Receiver::new(RxProfile::for_mode(mode), RxConfig {
        subframe_length: spec.dimming.subframe_length,
        ..RxConfig::default()
    });
    let (mut delivered, mut bits, mut end) = (0usize, 0usize, 0usize);
    for frame in rx.receive_all(&wave).into_iter().flatten() {
        if sent.get(frame.mhr.sequence_number as usize) == Some(&frame.payload) {
            delivered += 1;
            bits += 8 * frame.payload.len();
            end = end.max(frame.end);
        }
    }
    let elapsed_s = end as f64 / wave.sample_rate;
    Ok(ThroughputReport {
        frames_sent: sent.len(),
        frames_delivered: delivered,
        payload_bits: bits,
        elapsed_s,
        measured_bps: if elapsed_s > 0.0 { bits as f64 / elapsed_s } else { 0.0 },
        nominal_bps,
    })
}

/// Smallest noise level (to within `tolerance`) at which a loopback with
/// the given seed fails, searched by bisection on `[0, upper]`. Returns
/// `None` when the loopback still passes at `upper`.
pub fn failure_sigma(
    mode: &OperatingMode,
    payload: &[u8],
    seed: u64,
    config: &LoopbackConfig,
    upper: f64,
    tolerance: f64,
) -> Result<Option<f64>> {
    let passes = |sigma: f64| -> Result<bool> {
        Ok(run_loopback_with(
            mode,
            payload,
            &ChannelConfig::awgn(sigma, 0),
            &DimmingConfig::default(),
            seed,
            config,
        )?
        .passed)
    };
    if passes(upper)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, upper);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{lookup_mode, PhyType};

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-9);
        assert!((q_function(3.0) - 1.349_898_031_630_1e-3).abs() < 1e-12);
        assert_eq!(ook_chip_error_probability(1.0, 0.0, 8), 0.0);
    }

    #[test]
    fn wilson_reference_values() {
        // 10 of 100: textbook interval (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.0552).abs() < 1e-4 && (hi - 0.1744).abs() < 1e-4);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.0370).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn snr_sigma_mapping() {
        assert_eq!(sigma_for_snr(f64::INFINITY, 1.0), 0.0);
        assert!((sigma_for_snr(20.0, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn noiseless_loopback_and_empty_payload() {
        let mode = lookup_mode(PhyType::PhyI, 1).unwrap();
        for payload in [&b""[..], b"abc"] {
            let r = run_loopback(&mode, payload, &ChannelConfig::default(), &DimmingConfig::default(), 3).unwrap();
            assert!(r.passed);
            assert_eq!(r.chip_errors, 0);
        }
    }

    #[test]
    fn noiseless_sweep_point() {
        let mode = lookup_mode(PhyType::PhyI, 4).unwrap();
        let mut spec = SweepSpec::new(mode, vec![f64::INFINITY]);
        spec.frames_per_point = 3;
        spec.oversample = 4;
        let r = ber_sweep(&spec).unwrap();
        assert_eq!(r.points[0].ber, 0.0);
        assert_eq!(r.points[0].fer, 0.0);
        assert!(r.to_csv().starts_with("snr_db,ber,fer,ci_lo,ci_hi,corrected\ninf,"));
    }

    #[test]
    fn sweep_is_deterministic() {
        let mode = lookup_mode(PhyType::PhyI, 4).unwrap();
        let mut spec = SweepSpec::new(mode, vec![6.0, 9.0]);
        spec.frames_per_point = 5;
        spec.oversample = 2;
        spec.payload_length = 8;
        spec.seed = 11;
        assert_eq!(ber_sweep(&spec).unwrap(), ber_sweep(&spec).unwrap());
    }

    #[test]
    fn zero_duration_has_no_throughput() {
        let mode = lookup_mode(PhyType::PhyI, 4).unwrap();
        let r = throughput_check(&ThroughputSpec::new(mode, 0)).unwrap();
        assert_eq!(r.measured_bps, 0.0);
        assert_eq!(r.frames_sent, 0);
    }
}
