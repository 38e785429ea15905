//! PHY I and PHY II operating mode registry.
//!
//! Each mode fixes a modulation, a run-length-limited line code, an optical
//! clock and an optional FEC configuration. The nominal data rate follows from
//! those alone:
//!
//! ```text
//! rate = optical_clock * r_rll * r_rs * r_cc
//! ```
//!
//! with `r_rll` = 1/2 (Manchester), 2/3 (4B6B) or 4/5 (8B10B).

use std::fmt;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rate = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhyType {
    #[serde(rename = "PHY-I")]
    PhyI,
    #[serde(rename = "PHY-II")]
    PhyII,
}

impl PhyType {
    /// Single-bit encoding used in the PHY header.
    pub fn bit(self) -> u8 {
        match self {
            PhyType::PhyI => 0,
            PhyType::PhyII => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            PhyType::PhyI
        } else {
            PhyType::PhyII
        }
    }

    pub fn max_optical_clock_hz(self) -> u64 {
        match self {
            PhyType::PhyI => 400_000,
            PhyType::PhyII => 120_000_000,
        }
    }
}

impl fmt::Display for PhyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhyType::PhyI => "PHY-I",
            PhyType::PhyII => "PHY-II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Ook,
    Vppm,
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Ook => "OOK",
            Modulation::Vppm => "VPPM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RllCode {
    Manchester,
    FourBSixB,
    EightBTenB,
}

impl RllCode {
    /// Information bits per channel bit.
    pub fn rate(self) -> Rate {
        match self {
            RllCode::Manchester => Ratio::new(1, 2),
            RllCode::FourBSixB => Ratio::new(2, 3),
            RllCode::EightBTenB => Ratio::new(4, 5),
        }
    }

    /// Input bits consumed per code block.
    pub fn block_in(self) -> usize {
        match self {
            RllCode::Manchester => 1,
            RllCode::FourBSixB => 4,
            RllCode::EightBTenB => 8,
        }
    }

    pub fn block_out(self) -> usize {
        match self {
            RllCode::Manchester => 2,
            RllCode::FourBSixB => 6,
            RllCode::EightBTenB => 10,
        }
    }

    /// Longest run of identical channel bits the code can emit.
    pub fn max_run(self) -> usize {
        match self {
            RllCode::Manchester => 2,
            RllCode::FourBSixB => 4,
            RllCode::EightBTenB => 5,
        }
    }
}

impl fmt::Display for RllCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RllCode::Manchester => "Manchester",
            RllCode::FourBSixB => "4B6B",
            RllCode::EightBTenB => "8B10B",
        })
    }
}

/// Inner convolutional code rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CcRate {
    OneQuarter,
    OneThird,
    TwoThirds,
}

impl CcRate {
    pub fn rate(self) -> Rate {
        match self {
            CcRate::OneQuarter => Ratio::new(1, 4),
            CcRate::OneThird => Ratio::new(1, 3),
            CcRate::TwoThirds => Ratio::new(2, 3),
        }
    }
}

impl fmt::Display for CcRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CcRate::OneQuarter => "1/4",
            CcRate::OneThird => "1/3",
            CcRate::TwoThirds => "2/3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RsParams {
    pub n: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatingMode {
    pub phy_type: PhyType,
    pub mode_index: usize,
    pub modulation: Modulation,
    pub rll_code: RllCode,
    pub optical_clock_hz: u64,
    pub rs_params: Option<RsParams>,
    pub cc_rate: Option<CcRate>,
}

impl OperatingMode {
    pub fn data_rate(&self) -> Rate {
        data_rate(self)
    }

    /// Product of the FEC code rates, 1 for uncoded modes.
    pub fn fec_rate(&self) -> Rate {
        let rs = self
            .rs_params
            .map_or(Ratio::from_integer(1), |p| Ratio::new(p.k as u64, p.n as u64));
        let cc = self.cc_rate.map_or(Ratio::from_integer(1), CcRate::rate);
        rs * cc
    }

    /// Payload bits carried per optical clock slot, ignoring framing.
    pub fn spectral_efficiency(&self) -> Rate {
        self.rll_code.rate() * self.fec_rate()
    }

    pub fn describe(&self) -> String {
        let rs = self
            .rs_params
            .map_or("none".to_string(), |p| format!("RS({},{})", p.n, p.k));
        let cc = self.cc_rate.map_or("none".to_string(), |c| c.to_string());
        format!(
            "{} #{}: {} {} {} {} CC {} -> {}",
            self.phy_type,
            self.mode_index,
            self.modulation,
            self.rll_code,
            format_hz(self.optical_clock_hz),
            rs,
            cc,
            format_rate(self.data_rate())
        )
    }
}

pub fn data_rate(mode: &OperatingMode) -> Rate {
    Ratio::from_integer(mode.optical_clock_hz) * mode.spectral_efficiency()
}

/// Renders a bit rate with four significant digits in b/s, kb/s or Mb/s.
pub fn format_rate(rate: Rate) -> String {
    let bps = *rate.numer() as f64 / *rate.denom() as f64;
    let (value, unit) = if bps >= 1e6 {
        (bps / 1e6, "Mb/s")
    } else if bps >= 1e3 {
        (bps / 1e3, "kb/s")
    } else {
        (bps, "b/s")
    };
    format!("{} {unit}", four_significant(value))
}

fn four_significant(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let digits = v.abs().log10().floor() as i32 + 1;
    let decimals = (4 - digits).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn format_hz(hz: u64) -> String {
    if hz >= 1_000_000 {
        format!("{} MHz", hz as f64 / 1e6)
    } else {
        format!("{} kHz", hz as f64 / 1e3)
    }
}

const fn row(
    phy_type: PhyType,
    mode_index: usize,
    modulation: Modulation,
    rll_code: RllCode,
    optical_clock_hz: u64,
    rs: Option<(usize, usize)>,
    cc_rate: Option<CcRate>,
) -> OperatingMode {
    OperatingMode {
        phy_type,
        mode_index,
        modulation,
        rll_code,
        optical_clock_hz,
        rs_params: match rs {
            Some((n, k)) => Some(RsParams { n, k }),
            None => None,
        },
        cc_rate,
    }
}

use CcRate::*;
use Modulation::*;
use PhyType::*;
use RllCode::*;

static MODES: [OperatingMode; 23] = [
    row(PhyI, 0, Ook, Manchester, 200_000, Some((15, 7)), Some(OneQuarter)),
    row(PhyI, 1, Ook, Manchester, 200_000, Some((15, 11)), Some(OneThird)),
    row(PhyI, 2, Ook, Manchester, 200_000, Some((15, 11)), Some(TwoThirds)),
    row(PhyI, 3, Ook, Manchester, 200_000, Some((15, 11)), None),
    row(PhyI, 4, Ook, Manchester, 200_000, None, None),
    row(PhyI, 5, Vppm, FourBSixB, 400_000, Some((15, 2)), None),
    row(PhyI, 6, Vppm, FourBSixB, 400_000, Some((15, 4)), None),
    row(PhyI, 7, Vppm, FourBSixB, 400_000, Some((15, 7)), None),
    row(PhyI, 8, Vppm, FourBSixB, 400_000, None, None),
    row(PhyII, 0, Vppm, FourBSixB, 3_750_000, Some((64, 32)), None),
    row(PhyII, 1, Vppm, FourBSixB, 3_750_000, Some((160, 128)), None),
    row(PhyII, 2, Vppm, FourBSixB, 7_500_000, Some((64, 32)), None),
    row(PhyII, 3, Vppm, FourBSixB, 7_500_000, Some((160, 128)), None),
    row(PhyII, 4, Vppm, FourBSixB, 7_500_000, None, None),
    row(PhyII, 5, Ook, EightBTenB, 15_000_000, Some((64, 32)), None),
    row(PhyII, 6, Ook, EightBTenB, 15_000_000, Some((160, 128)), None),
    row(PhyII, 7, Ook, EightBTenB, 30_000_000, Some((64, 32)), None),
    row(PhyII, 8, Ook, EightBTenB, 30_000_000, Some((160, 128)), None),
    row(PhyII, 9, Ook, EightBTenB, 60_000_000, Some((64, 32)), None),
    row(PhyII, 10, Ook, EightBTenB, 60_000_000, Some((160, 128)), None),
    row(PhyII, 11, Ook, EightBTenB, 120_000_000, Some((64, 32)), None),
    row(PhyII, 12, Ook, EightBTenB, 120_000_000, Some((160, 128)), None),
    row(PhyII, 13, Ook, EightBTenB, 120_000_000, None, None),
];

/// All registered modes, PHY I first, in table order.
pub fn list_modes() -> &'static [OperatingMode] {
    &MODES
}

pub fn modes_for(phy: PhyType) -> impl Iterator<Item = &'static OperatingMode> {
    MODES.iter().filter(move |m| m.phy_type == phy)
}

pub fn lookup_mode(phy: PhyType, mode_index: usize) -> Result<OperatingMode> {
    modes_for(phy)
        .find(|m| m.mode_index == mode_index)
        .copied()
        .ok_or_else(|| Error::NotFound(format!("{phy} mode {mode_index}")))
}

/// Modulation used at a given optical clock. Each clock in the registry is
/// served by exactly one modulation, which is what lets a receiver that knows
/// only its PHY type and sample clock demodulate the header.
pub fn modulation_for_clock(phy: PhyType, clock_hz: u64) -> Option<(Modulation, RllCode)> {
    static CLOCKS: OnceLock<Vec<(PhyType, u64, Modulation, RllCode)>> = OnceLock::new();
    let table = CLOCKS.get_or_init(|| {
        let mut v: Vec<_> = MODES
            .iter()
            .map(|m| (m.phy_type, m.optical_clock_hz, m.modulation, m.rll_code))
            .collect();
        v.dedup();
        v
    });
    table
        .iter()
        .find(|(p, c, _, _)| *p == phy && *c == clock_hz)
        .map(|&(_, _, m, r)| (m, r))
}
