use super::{check_oversample, DimmingConfig, OokDimming, Waveform};
use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::mode::{Modulation, OperatingMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OokLevels {
    pub off: f64,
    pub on: f64,
}

impl Default for OokLevels {
    fn default() -> Self {
        Self { off: 0.0, on: 1.0 }
    }
}

impl OokLevels {
    /// ON/OFF pair for a dimming configuration. Level redefinition keeps the
    /// swing as large as possible while a DC-balanced chip stream averages to
    /// the target: `(0, 2t)` below half brightness, `(2t - 1, 1)` above.
    pub fn for_dimming(dimming: &DimmingConfig) -> Self {
        match dimming.ook {
            OokDimming::CompensationSymbols => Self::default(),
            OokDimming::LevelRedefinition => {
                let t = dimming.target();
                if t <= 0.5 {
                    Self { off: 0.0, on: 2.0 * t }
                } else {
                    Self {
                        off: 2.0 * t - 1.0,
                        on: 1.0,
                    }
                }
            }
        }
    }

    pub fn threshold(&self) -> f64 {
        0.5 * (self.off + self.on)
    }

    pub fn swing(&self) -> f64 {
        self.on - self.off
    }
}

pub fn ook_modulate(
    chips: &BitSequence,
    mode: &OperatingMode,
    dimming: &DimmingConfig,
    oversample: usize,
) -> Result<Waveform> {
    check_oversample(oversample, Modulation::Ook)?;
    dimming.validate()?;
    let levels = OokLevels::for_dimming(dimming);
    let mut samples = Vec::with_capacity(chips.len() * oversample);
    for c in chips.iter() {
        let v = if c == 1 { levels.on } else { levels.off };
        samples.extend(std::iter::repeat_n(v, oversample));
    }
    Ok(Waveform::new(samples, mode.optical_clock_hz, oversample))
}

/// Slices every whole chip from `phase` on by comparing the chip's mean
/// sample against the midpoint of `levels`.
pub fn ook_demodulate(wave: &Waveform, phase: usize, levels: &OokLevels) -> Result<BitSequence> {
    let n = wave.oversample;
    if n == 0 || wave.len() < phase + n {
        return Err(Error::framing("waveform shorter than one chip"));
    }
    let threshold = levels.threshold();
    Ok(wave.samples[phase..]
        .chunks_exact(n)
        .map(|chip| (chip.iter().sum::<f64>() / n as f64 > threshold) as u8)
        .collect())
}

/// Fits ON/OFF levels from a stretch of known chips starting at `start`.
pub fn estimate_levels(
    wave: &Waveform,
    start: usize,
    known: &BitSequence,
) -> Result<OokLevels> {
    let n = wave.oversample;
    if start + known.len() * n > wave.len() {
        return Err(Error::framing("known pattern runs past the waveform"));
    }
    let (mut on, mut on_count, mut off, mut off_count) = (0.0, 0usize, 0.0, 0usize);
    for (i, c) in known.iter().enumerate() {
        let chip = &wave.samples[start + i * n..start + (i + 1) * n];
        let mean = chip.iter().sum::<f64>() / n as f64;
        if c == 1 {
            on += mean;
            on_count += 1;
        } else {
            off += mean;
            off_count += 1;
        }
    }
    if on_count == 0 || off_count == 0 {
        return Err(Error::config("known pattern needs both chip values"));
    }
    Ok(OokLevels {
        off: off / off_count as f64,
        on: on / on_count as f64,
    })
}
