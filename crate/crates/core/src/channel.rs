//! Line-of-sight optical channel.
//!
//! The received signal is `quantize(g * lowpass(x) + dc + n)`: a path gain,
//! a first-order LED/photodiode response, ambient DC, white Gaussian noise
//! and an optional ADC.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modem::Waveform;

/// Lambertian mode number for an emitter with the given semi-angle at half
/// power, `m = -ln 2 / ln cos(phi_half)`.
pub fn lambertian_order(half_power_angle_deg: f64) -> Result<f64> {
    if !(half_power_angle_deg > 0.0 && half_power_angle_deg < 90.0) {
        return Err(Error::config(format!(
            "half-power angle {half_power_angle_deg} outside (0, 90) degrees"
        )));
    }
    Ok(-(2f64.ln()) / half_power_angle_deg.to_radians().cos().ln())
}

/// Illuminance in lux at `distance_m` and `off_axis_deg` from a source of
/// on-axis luminous intensity `intensity_cd` and Lambertian order `m`.
pub fn illuminance_at(intensity_cd: f64, distance_m: f64, off_axis_deg: f64, m: f64) -> Result<f64> {
    if distance_m <= 0.0 {
        return Err(Error::config("distance must be positive"));
    }
    let c = off_axis_deg.to_radians().cos().max(0.0);
    Ok(intensity_cd * c.powf(m) / (distance_m * distance_m))
}

/// Photometric description of a link: what a lux meter would read at the
/// receiver, and the scalar that maps normalized intensity to the
/// receiver's electrical signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub luminous_intensity_cd: f64,
    pub illuminance_lux: f64,
    pub electrical_gain: f64,
}

impl LinkBudget {
    pub fn new(
        luminous_intensity_cd: f64,
        distance_m: f64,
        off_axis_deg: f64,
        m: f64,
        electrical_gain: f64,
    ) -> Result<Self> {
        Ok(Self {
            luminous_intensity_cd,
            illuminance_lux: illuminance_at(luminous_intensity_cd, distance_m, off_axis_deg, m)?,
            electrical_gain,
        })
    }
}

/// Electrical SNR in dB for an ON/OFF swing `swing` after gain `gain`.
pub fn snr_for(gain: f64, swing: f64, noise_sigma: f64) -> f64 {
    if noise_sigma == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (gain * swing / noise_sigma).log10()
    }
}

/// SNR of `clean` through `config`, with the swing taken from the
/// waveform's extreme levels.
pub fn snr_of(config: &ChannelConfig, clean: &Waveform) -> Result<f64> {
    let hi = clean.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = clean.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let swing = if clean.is_empty() { 0.0 } else { hi - lo };
    Ok(snr_for(config.gain.gain()?, swing, config.noise_sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainModel {
    Direct {
        gain: f64,
    },
    Lambertian {
        half_power_angle_deg: f64,
        distance_m: f64,
        /// Angle of emission relative to the emitter axis.
        irradiance_angle_deg: f64,
        /// Angle of arrival relative to the detector normal.
        incidence_angle_deg: f64,
        detector_area_m2: f64,
        /// Detector field of view; light from further off axis is lost.
        field_of_view_deg: f64,
        /// Responsivity times transimpedance, or any other scale applied
        /// after the optics.
        electrical_gain: f64,
    },
}

impl Default for GainModel {
    fn default() -> Self {
        GainModel::Direct { gain: 1.0 }
    }
}

impl GainModel {
    pub fn gain(&self) -> Result<f64> {
        match *self {
            GainModel::Direct { gain } => Ok(gain),
            GainModel::Lambertian {
                half_power_angle_deg,
                distance_m,
                irradiance_angle_deg,
                incidence_angle_deg,
                detector_area_m2,
                field_of_view_deg,
                electrical_gain,
            } => {
                let m = lambertian_order(half_power_angle_deg)?;
                if distance_m <= 0.0 {
                    return Err(Error::config("distance must be positive"));
                }
                if incidence_angle_deg.abs() > field_of_view_deg || incidence_angle_deg.abs() >= 90.0 {
                    return Ok(0.0);
                }
                let phi = irradiance_angle_deg.to_radians().cos().max(0.0);
                let psi = incidence_angle_deg.to_radians().cos();
                Ok((m + 1.0) * detector_area_m2 / (2.0 * PI * distance_m * distance_m)
                    * phi.powf(m)
                    * psi
                    * electrical_gain)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    /// Input mapped to the top code; the bottom code is 0.
    pub full_scale: f64,
}

impl AdcConfig {
    pub fn quantize(&self, v: f64) -> f64 {
        let top = ((1u64 << self.bits) - 1) as f64;
        let code = (v / self.full_scale * top).round().clamp(0.0, top) as u64;
        code as f64 * self.full_scale / top
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub gain: GainModel,
    /// 3 dB bandwidth of the front end; `None` is flat.
    pub led_cutoff_hz: Option<f64>,
    pub ambient_dc: f64,
    pub noise_sigma: f64,
    pub adc: Option<AdcConfig>,
    pub rng_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            gain: GainModel::default(),
            led_cutoff_hz: None,
            ambient_dc: 0.0,
            noise_sigma: 0.0,
            adc: None,
            rng_seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn awgn(noise_sigma: f64, seed: u64) -> Self {
        Self {
            noise_sigma,
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gain.gain()?;
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::config("noise sigma must be finite and non-negative"));
        }
        if let Some(b) = self.led_cutoff_hz {
            if b <= 0.0 || !b.is_finite() {
                return Err(Error::config("bandwidth must be positive"));
            }
        }
        if let Some(adc) = self.adc {
            if adc.bits == 0 || adc.bits > 32 || adc.full_scale <= 0.0 {
                return Err(Error::config("ADC needs 1..=32 bits and a positive full scale"));
            }
        }
        Ok(())
    }
}

/// A channel instance. Noise continues from call to call, so feeding a
/// capture in pieces gives the same result as feeding it whole; the filter
/// state carries over too.
#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    gain: f64,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    filter_state: f64,
}

impl Channel {
    pub fn new(config: ChannelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            gain: config.gain.gain()?,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            noise: (config.noise_sigma > 0.0)
                .then(|| Normal::new(0.0, config.noise_sigma).expect("validated sigma")),
            filter_state: 0.0,
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn apply(&mut self, wave: &Waveform) -> Waveform {
        let alpha = self
            .config
            .led_cutoff_hz
            .map(|fc| 1.0 - (-2.0 * PI * fc / wave.sample_rate).exp());
        let mut out = Vec::with_capacity(wave.len());
        for &x in &wave.samples {
            let filtered = match alpha {
                Some(a) => {
                    self.filter_state += a * (x - self.filter_state);
                    self.filter_state
                }
                None => x,
            };
            let mut y = self.gain * filtered + self.config.ambient_dc;
            if let Some(noise) = &self.noise {
                y += noise.sample(&mut self.rng);
            }
            if let Some(adc) = &self.config.adc {
                y = adc.quantize(y);
            }
            out.push(y);
        }
        Waveform {
            samples: out,
            sample_rate: wave.sample_rate,
            oversample: wave.oversample,
        }
    }
}

pub fn apply_channel(wave: &Waveform, config: &ChannelConfig) -> Result<Waveform> {
    Ok(Channel::new(*config)?.apply(wave))
}
