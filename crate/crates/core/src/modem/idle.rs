use super::{check_oversample, ook_modulate, vppm_modulate, DimmingConfig, IdleKind, OokDimming, Waveform};
use crate::bits::BitSequence;
use crate::error::Result;
use crate::mode::{Modulation, OperatingMode};

/// Chips whose ones density tracks `percent` with error under one chip at
/// every prefix.
fn spread_ones(percent: u8, len: usize) -> BitSequence {
    let p = percent as usize;
    (0..len).map(|i| ((i + 1) * p / 100 - i * p / 100) as u8).collect()
}

fn alternating(len: usize) -> BitSequence {
    (0..len).map(|i| (i % 2) as u8).collect()
}

/// Light emitted between frames, `duration` optical clock slots long, with
/// the same average as the frames around it.
pub fn generate_idle(
    mode: &OperatingMode,
    dimming: &DimmingConfig,
    duration: usize,
    oversample: usize,
) -> Result<Waveform> {
    check_oversample(oversample, mode.modulation)?;
    dimming.validate()?;
    if dimming.idle_kind == IdleKind::OutOfBand {
        return Ok(Waveform::new(
            vec![dimming.target(); duration * oversample],
            mode.optical_clock_hz,
            oversample,
        ));
    }
    match mode.modulation {
        Modulation::Vppm => vppm_modulate(&alternating(duration), mode, dimming, oversample),
        Modulation::Ook => match dimming.ook {
            OokDimming::LevelRedefinition => {
                ook_modulate(&alternating(duration), mode, dimming, oversample)
            }
            OokDimming::CompensationSymbols => ook_modulate(
                &spread_ones(dimming.target_level, duration),
                mode,
                dimming,
                oversample,
            ),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{lookup_mode, PhyType};

    #[test]
    fn idle_mean_matches_target() {
        let ook = lookup_mode(PhyType::PhyI, 4).unwrap();
        let vppm = lookup_mode(PhyType::PhyI, 8).unwrap();
        for t in (10..=90).step_by(10) {
            for kind in [IdleKind::InBand, IdleKind::OutOfBand] {
                for base in [DimmingConfig::level(t), DimmingConfig::compensation(t)] {
                    let d = DimmingConfig { idle_kind: kind, ..base };
                    for mode in [&ook, &vppm] {
                        let w = generate_idle(mode, &d, 1000, 4).unwrap();
                        assert_eq!(w.len(), 4000);
                        assert!((w.mean() - t as f64 / 100.0).abs() < 1e-9, "{t} {kind:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn spread_density() {
        let b = spread_ones(37, 100);
        assert_eq!(b.count_ones(), 37);
        assert!(b.max_run() <= 3);
    }
}
