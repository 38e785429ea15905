//! Waveform files: raw little-endian f32 samples plus a JSON sidecar at
//! `<file>.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vlcphy::mode::{lookup_mode, OperatingMode, PhyType};
use vlcphy::modem::{DimmingConfig, Waveform};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_rate: f64,
    pub oversample: usize,
    pub phy: PhyType,
    pub mode_index: usize,
    pub dimming: DimmingConfig,
}

impl Sidecar {
    pub fn mode(&self) -> vlcphy::Result<OperatingMode> {
        lookup_mode(self.phy, self.mode_index)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write(path: &Path, wave: &Waveform, mode: &OperatingMode, dimming: &DimmingConfig) -> io::Result<()> {
    let bytes: Vec<u8> = wave
        .samples
        .iter()
        .flat_map(|&s| (s as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes)?;
    let meta = Sidecar {
        sample_rate: wave.sample_rate,
        oversample: wave.oversample,
        phy: mode.phy_type,
        mode_index: mode.mode_index,
        dimming: *dimming,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")
}

pub fn read(path: &Path) -> io::Result<(Waveform, Sidecar)> {
    let meta: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{} is not a whole number of f32 samples", path.display()),
        ));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let wave = Waveform {
        samples,
        sample_rate: meta.sample_rate,
        oversample: meta.oversample,
    };
    Ok((wave, meta))
}
