//! Frame acquisition and decoding.
//!
//! The receiver works from the sample rate alone: the optical clock picks
//! the PHY, modulation and header line code, since clocks are not shared
//! between PHYs. Acquisition correlates a per-slot statistic against the
//! synchronization header, timing recovery refines the chip boundary, and
//! the PHR then tells the receiver everything it needs for the PSDU.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::fec::FecReport;
use crate::framing::{
    decode_phr_section, decode_psdu_section, phr_section_len, psdu_section_len, shr, Mhr, Phr,
    Topology, MHR_LEN, SHR_LEN,
};
use crate::mode::{list_modes, Modulation, OperatingMode, PhyType, RllCode};
use crate::modem::{
    compensation_map, estimate_levels, ook_demodulate, strip_compensation, vppm_demodulate,
    OokLevels, Waveform, DEFAULT_SUBFRAME_LENGTH,
};
use crate::rll::DisparityState;

pub const DETECTION_THRESHOLD: f64 = 0.9;

/// Candidate positions scored per FFT block.
const SEARCH_BLOCK: usize = 1 << 16;

/// What the receiver can infer from the optical clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RxProfile {
    pub phy_type: PhyType,
    pub modulation: Modulation,
    pub rll_code: RllCode,
    pub optical_clock_hz: u64,
}

impl RxProfile {
    pub fn for_clock(optical_clock_hz: u64) -> Result<Self> {
        list_modes()
            .iter()
            .find(|m| m.optical_clock_hz == optical_clock_hz)
            .map(|m| Self {
                phy_type: m.phy_type,
                modulation: m.modulation,
                rll_code: m.rll_code,
                optical_clock_hz,
            })
            .ok_or_else(|| Error::config(format!("no mode runs at {optical_clock_hz} Hz")))
    }

    pub fn for_mode(mode: &OperatingMode) -> Self {
        Self {
            phy_type: mode.phy_type,
            modulation: mode.modulation,
            rll_code: mode.rll_code,
            optical_clock_hz: mode.optical_clock_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxConfig {
    pub detection_threshold: f64,
    /// Sub-frame length assumed for compensation dimming; the PHR does not
    /// carry it.
    pub subframe_length: usize,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            detection_threshold: DETECTION_THRESHOLD,
            subframe_length: DEFAULT_SUBFRAME_LENGTH,
        }
    }
}

/// One number per candidate slot start: the slot's light for OOK, the
/// second half minus the first half for VPPM. Entry `i` covers samples
/// `i..i + n`.
pub fn slot_statistic(samples: &[f64], n: usize, modulation: Modulation) -> Vec<f64> {
    if samples.len() < n || n == 0 {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &s in samples {
        acc += s;
        prefix.push(acc);
    }
    let half = n / 2;
    (0..=samples.len() - n)
        .map(|i| match modulation {
            Modulation::Ook => prefix[i + n] - prefix[i],
            Modulation::Vppm => (prefix[i + n] - prefix[i + half]) - (prefix[i + half] - prefix[i]),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Sample index where the SHR starts.
    pub start: usize,
    pub score: f64,
    pub topology: Topology,
}

struct Correlator {
    n: usize,
    span: usize,
    /// Centered ±1 SHR chips per topology, and their norms.
    templates: Vec<(Vec<f64>, f64)>,
    planner: FftPlanner<f64>,
}

impl Correlator {
    fn new(n: usize) -> Self {
        let templates = Topology::all()
            .map(|t| {
                let chips: Vec<f64> = shr(t).iter().map(|c| 2.0 * c as f64 - 1.0).collect();
                let mean = chips.iter().sum::<f64>() / chips.len() as f64;
                let centered: Vec<f64> = chips.iter().map(|c| c - mean).collect();
                let norm = centered.iter().map(|c| c * c).sum::<f64>().sqrt();
                (centered, norm)
            })
            .collect();
        Self {
            n,
            span: (SHR_LEN - 1) * n + 1,
            templates,
            planner: FftPlanner::new(),
        }
    }

    fn fft(&mut self, len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
        if inverse {
            self.planner.plan_fft_inverse(len)
        } else {
            self.planner.plan_fft_forward(len)
        }
    }

    /// Best Pearson score and topology for positions `from..from + count` of
    /// `h`. Positions whose window runs past `h` are not scored.
    fn scores(&mut self, h: &[f64], from: usize, count: usize) -> Vec<(f64, usize)> {
        if h.len() < from + self.span {
            return Vec::new();
        }
        let count = count.min(h.len() - self.span - from + 1);
        let seg = &h[from..from + count + self.span - 1];
        let size = (seg.len() + self.span).next_power_of_two();
        let forward = self.fft(size, false);
        let inverse = self.fft(size, true);

        let mut hs: Vec<Complex<f64>> = seg.iter().map(|&v| Complex::new(v, 0.0)).collect();
        hs.resize(size, Complex::default());
        forward.process(&mut hs);

        // Window sums and sums of squares along each residue class.
        let n = self.n;
        let mut s1 = vec![0.0; seg.len() + n];
        let mut s2 = vec![0.0; seg.len() + n];
        for (i, &v) in seg.iter().enumerate() {
            s1[i + n] = s1[i] + v;
            s2[i + n] = s2[i] + v * v;
        }
        let k = SHR_LEN as f64;

        let mut best = vec![(0.0, 0usize); count];
        for (ti, (template, norm)) in self.templates.iter().enumerate() {
            let mut ts = vec![Complex::default(); size];
            for (j, &c) in template.iter().enumerate() {
                ts[j * n] = Complex::new(c, 0.0);
            }
            forward.process(&mut ts);
            let mut prod: Vec<Complex<f64>> =
                hs.iter().zip(&ts).map(|(a, b)| a * b.conj()).collect();
            inverse.process(&mut prod);
            for (p, slot) in best.iter_mut().enumerate() {
                let end = p + self.span - 1;
                let sum = s1[end + n] - s1[p];
                let sq = s2[end + n] - s2[p];
                let var = sq - sum * sum / k;
                let r = if var <= 1e-9 * sq.max(1e-300) {
                    0.0
                } else {
                    prod[p].re / size as f64 / (norm * var.sqrt())
                };
                if r > slot.0 {
                    *slot = (r, ti);
                }
            }
        }
        best
    }
}

/// Earliest position at or after `from` where the correlation crosses
/// `threshold`, refined to the best score within one header length after
/// it. The refinement window is that long because the preamble is an
/// alternating pattern: in-band idle light, or a partial overlap with the
/// preamble itself, can cross the threshold a few chips early.
pub fn detect_from(
    wave: &Waveform,
    modulation: Modulation,
    from: usize,
    threshold: f64,
) -> Option<Detection> {
    let n = wave.oversample;
    let h = slot_statistic(&wave.samples, n, modulation);
    detect_in(&h, n, from, threshold)
}

fn detect_in(h: &[f64], n: usize, from: usize, threshold: f64) -> Option<Detection> {
    let mut corr = Correlator::new(n);
    let mut pos = from;
    while pos + corr.span <= h.len() {
        let scores = corr.scores(h, pos, SEARCH_BLOCK + corr.span);
        let searchable = scores.len().min(SEARCH_BLOCK);
        if let Some(first) = scores[..searchable].iter().position(|s| s.0 >= threshold) {
            let end = (first + corr.span).min(scores.len());
            let (offset, &(score, ti)) = scores[first..end]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.0.cmp(&a.0)))
                .expect("non-empty");
            return Some(Detection {
                start: pos + first + offset,
                score,
                topology: Topology::new(ti as u8).expect("index below four"),
            });
        }
        pos += searchable;
    }
    None
}

pub fn detect_frame(wave: &Waveform, modulation: Modulation) -> Result<Detection> {
    detect_from(wave, modulation, 0, DETECTION_THRESHOLD).ok_or(Error::NoFrame)
}

/// Sampling phase in `0..n` that maximizes the energy of the matched-filter
/// output over `slots` slots starting at sample `start`. The filter is a
/// one-slot boxcar of the mean-removed signal for OOK and the half-slot
/// difference for VPPM. Ties go to the earliest phase.
pub fn recover_timing(wave: &Waveform, modulation: Modulation, start: usize, slots: usize) -> Result<usize> {
    let n = wave.oversample;
    let end = start + (slots + 1) * n;
    if slots == 0 || end > wave.len() + 1 {
        return Err(Error::framing("not enough samples for timing recovery"));
    }
    let region = &wave.samples[start..(end - 1).min(wave.len())];
    let mean = region.iter().sum::<f64>() / region.len() as f64;
    let centered: Vec<f64> = match modulation {
        Modulation::Ook => region.iter().map(|s| s - mean).collect(),
        Modulation::Vppm => region.to_vec(),
    };
    let y = slot_statistic(&centered, n, modulation);
    let mut best = (f64::NEG_INFINITY, 0);
    for p in 0..n {
        let energy: f64 = (0..slots)
            .filter_map(|k| y.get(k * n + p))
            .map(|v| v * v)
            .sum();
        if energy > best.0 {
            best = (energy, p);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxStage {
    Detection,
    Header,
    Payload,
}

impl fmt::Display for RxStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RxStage::Detection => "detection",
            RxStage::Header => "header",
            RxStage::Payload => "payload",
        })
    }
}

/// A frame that was found but not delivered.
#[derive(Debug, Clone)]
pub struct RxFailure {
    pub stage: RxStage,
    pub error: Error,
    pub start: Option<usize>,
    pub phr: Option<Phr>,
    pub fec_report: Option<FecReport>,
    /// Sample index just past the frame, once the PHR has given its length.
    pub end: Option<usize>,
}

impl RxFailure {
    fn new(stage: RxStage, error: Error) -> Self {
        Self {
            stage,
            error,
            start: None,
            phr: None,
            fec_report: None,
            end: None,
        }
    }
}

impl RxFailure {
    pub fn no_frame() -> Self {
        Self::new(RxStage::Detection, Error::NoFrame)
    }
}

impl fmt::Display for RxFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for RxFailure {}

#[derive(Debug, Clone)]
pub struct RxFrame {
    pub payload: Vec<u8>,
    pub mhr: Mhr,
    pub phr: Phr,
    pub mode: OperatingMode,
    pub fec_report: FecReport,
    pub topology: Topology,
    pub score: f64,
    /// Sample index of the SHR start.
    pub start: usize,
    /// Sample index just past the last PSDU slot.
    pub end: usize,
}

fn demod_slots(
    wave: &Waveform,
    modulation: Modulation,
    levels: &OokLevels,
    start: usize,
    slots: usize,
) -> Result<BitSequence> {
    let n = wave.oversample;
    let end = start + slots * n;
    if end > wave.len() {
        return Err(Error::framing("waveform ends inside the frame"));
    }
    if slots == 0 {
        return Ok(BitSequence::new());
    }
    let part = Waveform {
        samples: wave.samples[start..end].to_vec(),
        sample_rate: wave.sample_rate,
        oversample: n,
    };
    match modulation {
        Modulation::Ook => ook_demodulate(&part, 0, levels),
        Modulation::Vppm => vppm_demodulate(&part, 0),
    }
}

/// Stateful receiver that walks a capture frame by frame.
#[derive(Debug, Clone)]
pub struct Receiver {
    pub profile: RxProfile,
    pub config: RxConfig,
    position: usize,
}

impl Receiver {
    pub fn new(profile: RxProfile, config: RxConfig) -> Self {
        Self {
            profile,
            config,
            position: 0,
        }
    }

    pub fn for_waveform(wave: &Waveform) -> Result<Self> {
        Ok(Self::new(
            RxProfile::for_clock(wave.optical_clock_hz())?,
            RxConfig::default(),
        ))
    }

    /// Sample index where the next search starts.
    pub fn position(&self) -> usize {
        self.position
    }

    /// Decodes the next frame in `wave`, or returns `None` when no further
    /// synchronization header is found.
    pub fn next_frame(&mut self, wave: &Waveform) -> Option<std::result::Result<RxFrame, RxFailure>> {
        let n = wave.oversample;
        let from = self.position.min(wave.len());
        let h = slot_statistic(&wave.samples[from..], n, self.profile.modulation);
        let mut detection = detect_in(&h, n, 0, self.config.detection_threshold)?;
        detection.start += from;
        let result = self.decode_at(wave, &detection);
        self.position = match &result {
            Ok(frame) => frame.end,
            Err(RxFailure { end: Some(end), .. }) => *end,
            Err(_) => detection.start + SHR_LEN * n,
        };
        Some(result)
    }

    pub fn receive_all(&mut self, wave: &Waveform) -> Vec<std::result::Result<RxFrame, RxFailure>> {
        std::iter::from_fn(|| self.next_frame(wave)).collect()
    }

    fn decode_at(
        &self,
        wave: &Waveform,
        detection: &Detection,
    ) -> std::result::Result<RxFrame, RxFailure> {
        let n = wave.oversample;
        let profile = &self.profile;
        let header_fail = |error: Error| RxFailure {
            start: Some(detection.start),
            ..RxFailure::new(RxStage::Header, error)
        };

        let base = detection.start.saturating_sub(n / 2);
        let start = match recover_timing(wave, profile.modulation, base, SHR_LEN - 1) {
            Ok(p) => base + p,
            Err(_) => detection.start,
        };
        let known = shr(detection.topology);
        let levels = match profile.modulation {
            Modulation::Ook => estimate_levels(wave, start, &known).map_err(header_fail)?,
            Modulation::Vppm => OokLevels::default(),
        };

        let phr_start = start + SHR_LEN * n;
        let phr_len = phr_section_len(profile.phy_type, profile.rll_code);
        let phr_chips = demod_slots(wave, profile.modulation, &levels, phr_start, phr_len)
            .map_err(header_fail)?;
        let mut rd = DisparityState::Negative;
        let phr = decode_phr_section(&phr_chips, profile.phy_type, profile.rll_code, &mut rd)
            .map_err(header_fail)?;
        let mode = phr.mode().map_err(header_fail)?;
        if mode.optical_clock_hz != profile.optical_clock_hz {
            return Err(header_fail(Error::framing(format!(
                "header announces {} at {} Hz, capture runs at {} Hz",
                mode.describe(),
                mode.optical_clock_hz,
                profile.optical_clock_hz
            ))));
        }

        let psdu_octets = phr.psdu_length as usize;
        let psdu_start = phr_start + phr_len * n;
        let coded_len = psdu_section_len(&mode, psdu_octets);
        let dimming = phr.dimming(self.config.subframe_length);
        let map = if dimming.uses_compensation(mode.modulation) {
            Some(compensation_map(coded_len, &dimming).map_err(header_fail)?)
        } else {
            None
        };
        let slots = map.as_ref().map_or(coded_len, |m| m.total_len);
        let end = psdu_start + slots * n;
        let payload_fail = |error: Error, report: Option<FecReport>| RxFailure {
            stage: RxStage::Payload,
            error,
            start: Some(start),
            phr: Some(phr),
            fec_report: report,
            end: Some(end.min(wave.len())),
        };

        let mut chips = demod_slots(wave, mode.modulation, &levels, psdu_start, slots)
            .map_err(|e| payload_fail(e, None))?;
        if let Some(map) = &map {
            chips = strip_compensation(&chips, map).map_err(|e| payload_fail(e, None))?;
        }
        let (psdu, report) = match decode_psdu_section(&chips, &mode, psdu_octets, &mut rd) {
            Ok(ok) => ok,
            Err(Error::DecodeFailure { report }) => {
                return Err(payload_fail(
                    Error::DecodeFailure {
                        report: report.clone(),
                    },
                    Some(report),
                ))
            }
            Err(e) => return Err(payload_fail(e, None)),
        };
        let mhr = Mhr::from_bytes(&psdu).map_err(|e| payload_fail(e, Some(report.clone())))?;
        Ok(RxFrame {
            payload: psdu[MHR_LEN..].to_vec(),
            mhr,
            phr,
            mode,
            fec_report: report,
            topology: detection.topology,
            score: detection.score,
            start,
            end,
        })
    }
}

/// Finds and decodes the first frame in `wave`.
pub fn receive_frame(wave: &Waveform) -> std::result::Result<RxFrame, RxFailure> {
    let mut rx = Receiver::for_waveform(wave).map_err(|e| RxFailure::new(RxStage::Detection, e))?;
    rx.next_frame(wave)
        .unwrap_or_else(|| Err(RxFailure::no_frame()))
}
