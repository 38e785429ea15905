//! Variable pulse position modulation.
//!
//! Each bit occupies one slot of `oversample` samples and carries a single
//! pulse of width `d * T`, `d` being the dimming level: a 0 starts the pulse
//! at the slot start, a 1 ends it at the slot end. When `d * oversample` is
//! not an integer the edge sample takes the fractional ON time, so the slot
//! energy is exactly `d * oversample` for every bit.

use super::{check_oversample, DimmingConfig, Waveform};
use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::mode::{Modulation, OperatingMode};

/// Pulse width (percent) used for the synchronization header of VPPM frames.
pub const VPPM_SYNC_LEVEL: u8 = 50;

fn check_level(dimming: &DimmingConfig) -> Result<()> {
    let level = dimming.target_level;
    if !(10..=90).contains(&level) || !level.is_multiple_of(10) {
        return Err(Error::config(format!(
            "VPPM dimming {level}% is not on the 10% grid 10..=90"
        )));
    }
    Ok(())
}

fn slot(bit: u8, width: f64, oversample: usize) -> impl Iterator<Item = f64> {
    let start = if bit == 0 { 0.0 } else { oversample as f64 - width };
    let end = start + width;
    (0..oversample).map(move |j| {
        let lo = (j as f64).max(start);
        let hi = ((j + 1) as f64).min(end);
        (hi - lo).max(0.0)
    })
}

pub fn vppm_modulate(
    bits: &BitSequence,
    mode: &OperatingMode,
    dimming: &DimmingConfig,
    oversample: usize,
) -> Result<Waveform> {
    check_oversample(oversample, Modulation::Vppm)?;
    check_level(dimming)?;
    let width = dimming.target_level as f64 * oversample as f64 / 100.0;
    let mut samples = Vec::with_capacity(bits.len() * oversample);
    for b in bits.iter() {
        samples.extend(slot(b, width, oversample));
    }
    Ok(Waveform::new(samples, mode.optical_clock_hz, oversample))
}

/// Half-slot energy comparison: 0 when the first half carries more light,
/// 1 when the second does, 0 on a tie.
pub fn vppm_demodulate(wave: &Waveform, phase: usize) -> Result<BitSequence> {
    let n = wave.oversample;
    if n < 2 || wave.len() < phase + n {
        return Err(Error::framing("waveform shorter than one slot"));
    }
    let half = n / 2;
    Ok(wave.samples[phase..]
        .chunks_exact(n)
        .map(|s| {
            let first: f64 = s[..half].iter().sum();
            let second: f64 = s[half..].iter().sum();
            (second > first) as u8
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{lookup_mode, PhyType};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mode() -> OperatingMode {
        lookup_mode(PhyType::PhyI, 8).unwrap()
    }

    fn bits(v: &[u8]) -> BitSequence {
        BitSequence::from(v)
    }

    #[test]
    fn two_ppm_slots() {
        let d = DimmingConfig::level(50);
        let zero = vppm_modulate(&bits(&[0]), &mode(), &d, 8).unwrap();
        assert_eq!(zero.samples, vec![1., 1., 1., 1., 0., 0., 0., 0.]);
        let one = vppm_modulate(&bits(&[1]), &mode(), &d, 8).unwrap();
        assert_eq!(one.samples, vec![0., 0., 0., 0., 1., 1., 1., 1.]);
    }

    #[test]
    fn fractional_edge() {
        let w = vppm_modulate(&bits(&[0, 1]), &mode(), &DimmingConfig::level(30), 8).unwrap();
        let expected = [1.0, 1.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4, 1.0, 1.0];
        for (a, b) in w.samples.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_equals_level_for_any_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: BitSequence = (0..1000).map(|_| rng.random_range(0..2u8)).collect();
        for level in (10..=90).step_by(10) {
            for n in [2, 4, 8, 10, 16] {
                let w = vppm_modulate(&data, &mode(), &DimmingConfig::level(level), n).unwrap();
                assert!((w.mean() - level as f64 / 100.0).abs() < 1e-12, "{level} {n}");
                let on_time: f64 = w.samples.iter().sum();
                assert!((on_time - level as f64 / 100.0 * (1000 * n) as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn roundtrip_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: BitSequence = (0..500).map(|_| rng.random_range(0..2u8)).collect();
        for level in (10..=90).step_by(10) {
            for n in [2, 4, 8] {
                let w = vppm_modulate(&data, &mode(), &DimmingConfig::level(level), n).unwrap();
                assert_eq!(vppm_demodulate(&w, 0).unwrap(), data, "{level} {n}");
            }
        }
    }

    #[test]
    fn off_grid_levels_rejected() {
        for level in [0, 5, 35, 95, 100] {
            assert!(matches!(
                vppm_modulate(&bits(&[0]), &mode(), &DimmingConfig::level(level), 8),
                Err(Error::Config(_))
            ));
        }
        assert!(vppm_modulate(&bits(&[0]), &mode(), &DimmingConfig::level(50), 7).is_err());
    }

    #[test]
    fn symmetric_slot_is_zero() {
        let w = Waveform::new(vec![0.3; 8], 400_000, 8);
        assert_eq!(vppm_demodulate(&w, 0).unwrap(), bits(&[0]));
    }

    #[test]
    fn high_level_margin() {
        // At 90% both bits overlap in the middle; only the 2 * (1 - d) * T
        // edge region differs, and that is enough on clean input.
        let zero = vppm_modulate(&bits(&[0]), &mode(), &DimmingConfig::level(90), 10).unwrap();
        let one = vppm_modulate(&bits(&[1]), &mode(), &DimmingConfig::level(90), 10).unwrap();
        let differing = zero.samples.iter().zip(&one.samples).filter(|(a, b)| a != b).count();
        assert_eq!(differing, 2);
        assert_eq!(vppm_demodulate(&zero, 0).unwrap(), bits(&[0]));
        assert_eq!(vppm_demodulate(&one, 0).unwrap(), bits(&[1]));
    }
}
