//! Sample-domain modulation and dimming.
//!
//! Intensity is normalized: 0.0 is dark, 1.0 is full ON. One optical clock
//! slot spans `oversample` samples. Absolute radiometry lives in
//! [`crate::channel`].

mod compensation;
mod idle;
mod ook;
mod vppm;

pub use compensation::{compensation_fraction, compensation_map, insert_compensation, strip_compensation, CompensationMap};
pub use idle::generate_idle;
pub use ook::{estimate_levels, ook_demodulate, ook_modulate, OokLevels};
pub use vppm::{vppm_demodulate, vppm_modulate, VPPM_SYNC_LEVEL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framing::Frame;
use crate::mode::{Modulation, OperatingMode};

pub const DEFAULT_OVERSAMPLE: usize = 8;
pub const DEFAULT_SUBFRAME_LENGTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    /// Samples per optical clock slot.
    pub oversample: usize,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, optical_clock_hz: u64, oversample: usize) -> Self {
        Self {
            samples,
            sample_rate: optical_clock_hz as f64 * oversample as f64,
            oversample,
        }
    }

    pub fn empty_like(other: &Waveform) -> Self {
        Self {
            samples: Vec::new(),
            sample_rate: other.sample_rate,
            oversample: other.oversample,
        }
    }

    pub fn optical_clock_hz(&self) -> u64 {
        (self.sample_rate / self.oversample as f64).round() as u64
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.samples.iter().sum::<f64>() / self.samples.len() as f64
        }
    }

    /// Appends another waveform with the same timing.
    pub fn append(&mut self, other: &Waveform) {
        debug_assert_eq!(self.oversample, other.oversample);
        self.samples.extend_from_slice(&other.samples);
    }

    /// Longest run of identical consecutive samples.
    pub fn max_run(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        let mut prev = f64::NAN;
        for &s in &self.samples {
            if s == prev {
                run += 1;
            } else {
                run = 1;
                prev = s;
            }
            best = best.max(run);
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum OokDimming {
    /// Re-centre the ON and OFF levels.
    #[default]
    LevelRedefinition,
    /// Insert constant-level symbols between sub-frames.
    CompensationSymbols,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum IdleKind {
    /// At the data clock, built from valid channel symbols.
    #[default]
    InBand,
    /// A DC bias the receiver does not process.
    OutOfBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimmingConfig {
    /// Target average brightness in percent.
    pub target_level: u8,
    pub ook: OokDimming,
    /// Level of OOK compensation symbols, 0 (OFF) or 1 (ON).
    pub compensation_brightness: u8,
    /// Data symbols per sub-frame under compensation dimming.
    pub subframe_length: usize,
    pub idle_kind: IdleKind,
}

impl Default for DimmingConfig {
    fn default() -> Self {
        Self {
            target_level: 50,
            ook: OokDimming::LevelRedefinition,
            compensation_brightness: 0,
            subframe_length: DEFAULT_SUBFRAME_LENGTH,
            idle_kind: IdleKind::InBand,
        }
    }
}

impl DimmingConfig {
    pub fn level(target_level: u8) -> Self {
        Self {
            target_level,
            ..Self::default()
        }
    }

    /// Compensation-symbol dimming with the only brightness that can reach
    /// the target on DC-balanced data.
    pub fn compensation(target_level: u8) -> Self {
        Self {
            target_level,
            ook: OokDimming::CompensationSymbols,
            compensation_brightness: (target_level > 50) as u8,
            ..Self::default()
        }
    }

    pub fn target(&self) -> f64 {
        self.target_level as f64 / 100.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_level > 100 {
            return Err(Error::config(format!(
                "dimming level {} above 100",
                self.target_level
            )));
        }
        if self.subframe_length == 0 {
            return Err(Error::config("sub-frame length must be at least 1"));
        }
        if self.compensation_brightness > 1 {
            return Err(Error::config("compensation brightness must be 0 or 1"));
        }
        Ok(())
    }

    pub(crate) fn uses_compensation(&self, modulation: Modulation) -> bool {
        modulation == Modulation::Ook && self.ook == OokDimming::CompensationSymbols
    }
}

pub(crate) fn check_oversample(oversample: usize, modulation: Modulation) -> Result<()> {
    if oversample < 2 {
        return Err(Error::config(format!("oversample {oversample} below 2")));
    }
    if modulation == Modulation::Vppm && !oversample.is_multiple_of(2) {
        return Err(Error::config(format!(
            "VPPM needs an even oversample, got {oversample}"
        )));
    }
    Ok(())
}

/// Channel bits of the PSDU as sent, i.e. with compensation symbols when the
/// frame uses them.
pub fn psdu_channel_bits(frame: &Frame) -> Result<crate::bits::BitSequence> {
    if frame.dimming.uses_compensation(frame.mode.modulation) {
        Ok(insert_compensation(&frame.psdu_coded, &frame.dimming)?.0)
    } else {
        Ok(frame.psdu_coded.clone())
    }
}

/// Renders a complete frame. VPPM frames send the SHR with a 50% pulse
/// width so that synchronization does not depend on the dimming level; the
/// PHR and PSDU use the requested width.
pub fn modulate_frame(frame: &Frame, oversample: usize) -> Result<Waveform> {
    frame.dimming.validate()?;
    let mode: &OperatingMode = &frame.mode;
    let psdu = psdu_channel_bits(frame)?;
    match mode.modulation {
        Modulation::Ook => {
            let mut chips = frame.shr.clone();
            chips.extend_from(&frame.phr_coded);
            chips.extend_from(&psdu);
            ook_modulate(&chips, mode, &frame.dimming, oversample)
        }
        Modulation::Vppm => {
            let sync = DimmingConfig::level(VPPM_SYNC_LEVEL);
            let mut wave = vppm_modulate(&frame.shr, mode, &sync, oversample)?;
            let mut body = frame.phr_coded.clone();
            body.extend_from(&psdu);
            wave.append(&vppm_modulate(&body, mode, &frame.dimming, oversample)?);
            Ok(wave)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{assemble_frame, Mhr, Topology};
    use crate::mode::list_modes;

    #[test]
    fn oversample_rules() {
        assert!(check_oversample(1, Modulation::Ook).is_err());
        assert!(check_oversample(3, Modulation::Ook).is_ok());
        assert!(check_oversample(3, Modulation::Vppm).is_err());
        assert!(check_oversample(8, Modulation::Vppm).is_ok());
    }

    #[test]
    fn frame_waveform_length() {
        for mode in list_modes() {
            for dimming in [DimmingConfig::level(30), DimmingConfig::compensation(30)] {
                let frame = assemble_frame(b"payload", mode, &dimming, &Mhr::default(), Topology::default()).unwrap();
                let wave = modulate_frame(&frame, 4).unwrap();
                let slots = frame.shr.len() + frame.phr_coded.len() + psdu_channel_bits(&frame).unwrap().len();
                assert_eq!(wave.len(), 4 * slots);
                assert_eq!(wave.optical_clock_hz(), mode.optical_clock_hz);
                assert!(wave.samples.iter().all(|&s| (0.0..=1.0).contains(&s)));
            }
        }
    }
}
