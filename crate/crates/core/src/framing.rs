//! Frame construction and parsing: SHR (FLP + TDP), PHR, PSDU (MHR + payload).
//!
//! Layout on the channel, in optical clock slots:
//!
//! ```text
//! | FLP 64 | TDP 60 | PHR (header code + RLL) | PSDU (mode FEC + RLL) |
//! ```
//!
//! The SHR is sent uncoded. The PHR is always protected by the most robust
//! code of its PHY so that a receiver can read it knowing only the PHY type
//! and optical clock:
//!
//! * PHY I: RS(15,7) + CC 1/4, Manchester;
//! * PHY II: RS(64,32), with the line code of the clock's modulation.
//!
//! PHR bit layout (47 bits, MSB first). This is this crate's own layout, not
//! the standard's bit map:
//!
//! ```text
//! phy:1 | mcs:6 | psdu_length:16 | dimming:7 | compensation:1 | crc:16
//! ```
//!
//! `crc` is CRC-16/CCITT-FALSE over the 31 preceding bits.

use std::fmt::Write as _;

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::fec::{FecReport, FecScheme};
use crate::mode::{lookup_mode, Modulation, OperatingMode, PhyType, RllCode};
use crate::modem::{DimmingConfig, OokDimming};
use crate::rll::{self, DisparityState};

pub const FLP_LEN: usize = 64;
pub const TDP_PERIOD: usize = 15;
pub const TDP_REPEATS: usize = 4;
pub const TDP_LEN: usize = TDP_PERIOD * TDP_REPEATS;
pub const SHR_LEN: usize = FLP_LEN + TDP_LEN;
pub const PHR_INFO_BITS: usize = 31;
pub const PHR_BITS: usize = PHR_INFO_BITS + 16;
pub const MHR_LEN: usize = 3;
pub const MAX_PSDU_LEN: usize = u16::MAX as usize;
pub const MAX_PAYLOAD_LEN: usize = MAX_PSDU_LEN - MHR_LEN;
pub const TOPOLOGIES: usize = 4;

/// Cyclic shifts of the length-15 m-sequence used for the four topologies.
const TDP_SHIFTS: [usize; TOPOLOGIES] = [0, 4, 8, 12];

/// One period of the m-sequence from x^4 + x + 1, seeded with 0001.
fn m_sequence() -> [u8; TDP_PERIOD] {
    let mut reg = 0b0001u8;
    let mut out = [0u8; TDP_PERIOD];
    for bit in out.iter_mut() {
        *bit = reg & 1;
        let feedback = (reg ^ (reg >> 1)) & 1;
        reg = (reg >> 1) | (feedback << 3);
    }
    out
}

/// Topology index carried by the TDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Topology(u8);

impl Topology {
    pub fn new(index: u8) -> Result<Self> {
        if (index as usize) < TOPOLOGIES {
            Ok(Self(index))
        } else {
            Err(Error::config(format!("topology {index} out of range")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Topology> {
        (0..TOPOLOGIES as u8).map(Topology)
    }
}

/// "01" repeated.
pub fn flp() -> BitSequence {
    (0..FLP_LEN).map(|i| (i % 2) as u8).collect()
}

/// One TDP period for the topology, before repetition.
pub fn tdp_period(topology: Topology) -> BitSequence {
    let seq = m_sequence();
    let shift = TDP_SHIFTS[topology.index()];
    (0..TDP_PERIOD)
        .map(|i| seq[(i + shift) % TDP_PERIOD])
        .collect()
}

pub fn tdp(topology: Topology) -> BitSequence {
    let period = tdp_period(topology);
    let mut out = BitSequence::with_capacity(TDP_LEN);
    for _ in 0..TDP_REPEATS {
        out.extend_from(&period);
    }
    out
}

pub fn shr(topology: Topology) -> BitSequence {
    let mut out = flp();
    out.extend_from(&tdp(topology));
    out
}

/// CRC-16/CCITT-FALSE over an arbitrary number of bits.
pub fn crc16(bits: impl IntoIterator<Item = u8>) -> u16 {
    let mut crc = 0xffffu16;
    for b in bits {
        let top = ((crc >> 15) as u8) ^ (b & 1);
        crc <<= 1;
        if top == 1 {
            crc ^= 0x1021;
        }
    }
    crc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phr {
    pub phy_type: PhyType,
    pub mcs_id: u8,
    pub psdu_length: u16,
    pub dimming_level: u8,
    /// Set when the PSDU carries OOK compensation symbols.
    pub compensation: bool,
    pub header_check: u16,
}

impl Phr {
    pub fn mode(&self) -> Result<OperatingMode> {
        lookup_mode(self.phy_type, self.mcs_id as usize).map_err(|_| Error::UnknownMode {
            phy: self.phy_type.bit(),
            mcs: self.mcs_id,
        })
    }

    /// The dimming configuration implied by the header, with receiver-side
    /// defaults for fields the header does not carry.
    pub fn dimming(&self, subframe_length: usize) -> DimmingConfig {
        let base = if self.compensation {
            DimmingConfig::compensation(self.dimming_level)
        } else {
            DimmingConfig::level(self.dimming_level)
        };
        DimmingConfig {
            subframe_length,
            ..base
        }
    }
}

fn phr_info_bits(phy: PhyType, mcs: u8, psdu_length: u16, dimming: u8, comp: bool) -> BitSequence {
    let mut b = BitSequence::with_capacity(PHR_BITS);
    b.push(phy.bit());
    b.push_word(mcs as u64, 6);
    b.push_word(psdu_length as u64, 16);
    b.push_word(dimming as u64, 7);
    b.push(comp as u8);
    b
}

pub fn build_phr(mode: &OperatingMode, psdu_length: usize, dimming: &DimmingConfig) -> Result<BitSequence> {
    if psdu_length > MAX_PSDU_LEN {
        return Err(Error::framing(format!(
            "PSDU of {psdu_length} octets exceeds {MAX_PSDU_LEN}"
        )));
    }
    if dimming.target_level > 100 {
        return Err(Error::config(format!(
            "dimming level {} above 100",
            dimming.target_level
        )));
    }
    let compensation = mode.modulation == Modulation::Ook
        && dimming.ook == OokDimming::CompensationSymbols;
    let mut bits = phr_info_bits(
        mode.phy_type,
        mode.mode_index as u8,
        psdu_length as u16,
        dimming.target_level,
        compensation,
    );
    let crc = crc16(bits.iter());
    bits.push_word(crc as u64, 16);
    Ok(bits)
}

pub fn parse_phr(bits: &BitSequence) -> Result<Phr> {
    if bits.len() != PHR_BITS {
        return Err(Error::framing(format!(
            "PHR has {} bits, expected {PHR_BITS}",
            bits.len()
        )));
    }
    let header_check = bits.read_word(PHR_INFO_BITS, 16) as u16;
    if crc16(bits.iter().take(PHR_INFO_BITS)) != header_check {
        return Err(Error::HeaderCorrupt);
    }
    let phr = Phr {
        phy_type: PhyType::from_bit(bits[0]),
        mcs_id: bits.read_word(1, 6) as u8,
        psdu_length: bits.read_word(7, 16) as u16,
        dimming_level: bits.read_word(23, 7) as u8,
        compensation: bits[30] == 1,
        header_check,
    };
    if phr.dimming_level > 100 {
        return Err(Error::HeaderCorrupt);
    }
    phr.mode()?;
    Ok(phr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Mhr {
    pub frame_control: u16,
    pub sequence_number: u8,
}

impl Mhr {
    pub fn to_bytes(self) -> [u8; MHR_LEN] {
        let [hi, lo] = self.frame_control.to_be_bytes();
        [hi, lo, self.sequence_number]
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        match bytes {
            [hi, lo, seq, ..] => Ok(Self {
                frame_control: u16::from_be_bytes([*hi, *lo]),
                sequence_number: *seq,
            }),
            _ => Err(Error::framing("PSDU shorter than the MAC header")),
        }
    }
}

/// Line code used for the PHR at a given PHY and modulation.
pub fn header_rll(phy: PhyType, mode_rll: RllCode) -> RllCode {
    match phy {
        PhyType::PhyI => RllCode::Manchester,
        PhyType::PhyII => mode_rll,
    }
}

fn coded_section_len(scheme: &FecScheme, rll: RllCode, payload_bits: usize) -> usize {
    rll::encoded_len(rll, scheme.encoded_len(payload_bits))
}

/// Channel bits occupied by the PHR.
pub fn phr_section_len(phy: PhyType, mode_rll: RllCode) -> usize {
    coded_section_len(&FecScheme::header(phy), header_rll(phy, mode_rll), PHR_BITS)
}

/// Channel bits occupied by a PSDU of `psdu_octets`, before any compensation
/// symbols.
pub fn psdu_section_len(mode: &OperatingMode, psdu_octets: usize) -> usize {
    coded_section_len(&FecScheme::for_mode(mode), mode.rll_code, 8 * psdu_octets)
}

fn encode_section(
    scheme: &FecScheme,
    rll: RllCode,
    bits: &BitSequence,
    rd: &mut DisparityState,
) -> BitSequence {
    let mut coded = scheme.encode(bits);
    let pad = rll::pad_len(rll, coded.len());
    coded.extend_from(&BitSequence::zeros(pad));
    rll::rll_encode(rll, &coded, rd).expect("padded to whole RLL blocks")
}

fn decode_section(
    scheme: &FecScheme,
    rll: RllCode,
    chips: &BitSequence,
    payload_bits: usize,
    rd: &mut DisparityState,
) -> Result<(BitSequence, FecReport)> {
    let (mut coded, _) = rll::rll_decode_lenient(rll, chips, rd)?;
    coded.truncate(scheme.encoded_len(payload_bits));
    scheme.decode(&coded, payload_bits)
}

/// Recovers the PHR from its channel bits. `rd` starts a frame at
/// [`DisparityState::Negative`] and is left where the PSDU continues.
pub fn decode_phr_section(
    chips: &BitSequence,
    phy: PhyType,
    mode_rll: RllCode,
    rd: &mut DisparityState,
) -> Result<Phr> {
    let (bits, _) = decode_section(
        &FecScheme::header(phy),
        header_rll(phy, mode_rll),
        chips,
        PHR_BITS,
        rd,
    )
    .map_err(|e| match e {
        Error::DecodeFailure { .. } | Error::InvalidSymbol { .. } => Error::HeaderCorrupt,
        other => other,
    })?;
    parse_phr(&bits)
}

pub fn decode_psdu_section(
    chips: &BitSequence,
    mode: &OperatingMode,
    psdu_octets: usize,
    rd: &mut DisparityState,
) -> Result<(Vec<u8>, FecReport)> {
    let (bits, report) = decode_section(
        &FecScheme::for_mode(mode),
        mode.rll_code,
        chips,
        8 * psdu_octets,
        rd,
    )?;
    Ok((bits.to_bytes(), report))
}

/// A fully coded frame. Sections are channel bits, one per optical clock slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub shr: BitSequence,
    pub phr_coded: BitSequence,
    pub psdu_coded: BitSequence,
    pub mode: OperatingMode,
    pub dimming: DimmingConfig,
    pub topology: Topology,
    pub psdu_length: usize,
}

impl Frame {
    /// Start offsets of PHR and PSDU and the total length, in slots.
    pub fn offsets(&self) -> (usize, usize, usize) {
        let phr = self.shr.len();
        let psdu = phr + self.phr_coded.len();
        (phr, psdu, psdu + self.psdu_coded.len())
    }

    pub fn bits(&self) -> BitSequence {
        let mut out = self.shr.clone();
        out.extend_from(&self.phr_coded);
        out.extend_from(&self.psdu_coded);
        out
    }

    /// Section-labelled hex dump, 64 bits per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (name, bits) in [
            ("SHR", &self.shr),
            ("PHR", &self.phr_coded),
            ("PSDU", &self.psdu_coded),
        ] {
            let _ = writeln!(out, "{name} {} bits", bits.len());
            for (line, start) in (0..bits.len()).step_by(64).enumerate() {
                let end = (start + 64).min(bits.len());
                let chunk = bits.slice(start, end);
                let _ = write!(out, "  {:06}: ", line * 64);
                for nibble in 0..chunk.len().div_ceil(4) {
                    let lo = 4 * nibble;
                    let hi = (lo + 4).min(chunk.len());
                    let v = chunk.read_word(lo, hi - lo) << (4 - (hi - lo));
                    let _ = write!(out, "{v:x}");
                }
                out.push('\n');
            }
        }
        out
    }
}

pub fn assemble_frame(
    payload: &[u8],
    mode: &OperatingMode,
    dimming: &DimmingConfig,
    mhr: &Mhr,
    topology: Topology,
) -> Result<Frame> {
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(Error::framing(format!(
            "payload of {} octets exceeds {MAX_PAYLOAD_LEN}",
            payload.len()
        )));
    }
    let psdu_length = MHR_LEN + payload.len();
    let phr = build_phr(mode, psdu_length, dimming)?;

    let mut psdu = mhr.to_bytes().to_vec();
    psdu.extend_from_slice(payload);

    let mut rd = DisparityState::Negative;
    let phr_coded = encode_section(
        &FecScheme::header(mode.phy_type),
        header_rll(mode.phy_type, mode.rll_code),
        &phr,
        &mut rd,
    );
    let psdu_coded = encode_section(
        &FecScheme::for_mode(mode),
        mode.rll_code,
        &BitSequence::from_bytes(&psdu),
        &mut rd,
    );
    Ok(Frame {
        shr: shr(topology),
        phr_coded,
        psdu_coded,
        mode: *mode,
        dimming: *dimming,
        topology,
        psdu_length,
    })
}

/// Closed-form frame size in optical clock slots, without dimming
/// compensation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameLayout {
    pub shr: usize,
    pub phr: usize,
    pub psdu: usize,
    pub total_bits: usize,
    /// Payload bits per slot.
    pub efficiency: f64,
}

pub fn frame_overhead(mode: &OperatingMode, payload_length: usize) -> FrameLayout {
    let phr = phr_section_len(mode.phy_type, mode.rll_code);
    let psdu = psdu_section_len(mode, MHR_LEN + payload_length);
    let total_bits = SHR_LEN + phr + psdu;
    FrameLayout {
        shr: SHR_LEN,
        phr,
        psdu,
        total_bits,
        efficiency: (8 * payload_length) as f64 / total_bits as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::list_modes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dimming(level: u8) -> DimmingConfig {
        DimmingConfig {
            target_level: level,
            ..DimmingConfig::default()
        }
    }

    #[test]
    fn crc_reference_value() {
        // CRC-16/CCITT-FALSE check value for "123456789".
        assert_eq!(crc16(BitSequence::from_bytes(b"123456789").iter()), 0x29b1);
    }

    #[test]
    fn m_sequence_is_maximal() {
        let seq = m_sequence();
        assert_eq!(seq.iter().filter(|&&b| b == 1).count(), 8);
        for shift in 1..TDP_PERIOD {
            let corr: i32 = (0..TDP_PERIOD)
                .map(|i| {
                    let a = 2 * seq[i] as i32 - 1;
                    let b = 2 * seq[(i + shift) % TDP_PERIOD] as i32 - 1;
                    a * b
                })
                .sum();
            assert_eq!(corr, -1);
        }
    }

    #[test]
    fn tdp_cross_correlation_is_small() {
        let pats: Vec<_> = Topology::all().map(tdp).collect();
        for i in 0..TOPOLOGIES {
            for j in 0..TOPOLOGIES {
                if i == j {
                    continue;
                }
                let corr: i32 = pats[i]
                    .iter()
                    .zip(pats[j].iter())
                    .map(|(a, b)| (2 * a as i32 - 1) * (2 * b as i32 - 1))
                    .sum();
                // Per 15-bit period the zero-lag correlation is -1.
                assert!(corr.abs() / TDP_REPEATS as i32 <= 7, "{i} {j}: {corr}");
            }
        }
        assert_eq!(shr(Topology::default()).len(), 124);
    }

    #[test]
    fn phr_examples() {
        let mode = list_modes()[0];
        let bits = build_phr(&mode, 0, &dimming(50)).unwrap();
        assert_eq!(bits.len(), 47);
        let phr = parse_phr(&bits).unwrap();
        assert_eq!(phr.psdu_length, 0);
        assert_eq!(phr.dimming_level, 50);

        let other = build_phr(&mode, 1234, &dimming(50)).unwrap();
        for i in 0..47 {
            let in_length = (7..23).contains(&i);
            let in_crc = i >= 31;
            if bits[i] != other[i] {
                assert!(in_length || in_crc, "bit {i} differs");
            }
        }
        assert!(matches!(
            build_phr(&mode, 70_000, &dimming(50)),
            Err(Error::Framing(_))
        ));
    }

    #[test]
    fn phr_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let mode = list_modes()[rng.random_range(0..23)];
            let len = rng.random_range(0..=MAX_PSDU_LEN);
            let mut d = dimming(rng.random_range(0..=100));
            if rng.random() {
                d.ook = OokDimming::CompensationSymbols;
            }
            let phr = parse_phr(&build_phr(&mode, len, &d).unwrap()).unwrap();
            assert_eq!(phr.mode().unwrap(), mode);
            assert_eq!(phr.psdu_length as usize, len);
            assert_eq!(phr.dimming_level, d.target_level);
            assert_eq!(
                phr.compensation,
                mode.modulation == Modulation::Ook && d.ook == OokDimming::CompensationSymbols
            );
        }
    }

    #[test]
    fn every_single_bit_flip_is_detected() {
        let bits = build_phr(&list_modes()[3], 777, &dimming(30)).unwrap();
        for i in 0..47 {
            let mut v = bits.as_slice().to_vec();
            v[i] ^= 1;
            assert_eq!(parse_phr(&BitSequence::from(v)), Err(Error::HeaderCorrupt));
        }
    }

    #[test]
    fn unknown_mcs() {
        let mut bits = phr_info_bits(PhyType::PhyI, 63, 10, 50, false);
        let crc = crc16(bits.iter());
        bits.push_word(crc as u64, 16);
        assert_eq!(
            parse_phr(&bits),
            Err(Error::UnknownMode { phy: 0, mcs: 63 })
        );
    }

    #[test]
    fn empty_payload_frame_length() {
        for mode in list_modes() {
            let f = assemble_frame(&[], mode, &dimming(50), &Mhr::default(), Topology::default())
                .unwrap();
            let layout = frame_overhead(mode, 0);
            assert_eq!(f.bits().len(), layout.total_bits);
            assert_eq!(layout.efficiency, 0.0);
            assert_eq!(f.psdu_coded.len(), psdu_section_len(mode, 3));
        }
    }

    #[test]
    fn uncoded_ook_psdu_length() {
        let mode = lookup_mode(PhyType::PhyI, 4).unwrap();
        for n in [0usize, 1, 100] {
            let f = assemble_frame(&vec![0xa5; n], &mode, &dimming(50), &Mhr::default(), Topology::default())
                .unwrap();
            assert_eq!(f.psdu_coded.len(), 2 * 8 * (3 + n));
        }
    }

    #[test]
    fn offsets_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let mode = list_modes()[rng.random_range(0..23)];
            let n = rng.random_range(0..300);
            let payload: Vec<u8> = (0..n).map(|_| rng.random()).collect();
            let f = assemble_frame(&payload, &mode, &dimming(50), &Mhr::default(), Topology::default())
                .unwrap();
            let layout = frame_overhead(&mode, n);
            assert_eq!(f.offsets(), (layout.shr, layout.shr + layout.phr, layout.total_bits));
        }
    }

    #[test]
    fn shr_is_mode_independent() {
        let a = assemble_frame(b"x", &list_modes()[0], &dimming(50), &Mhr::default(), Topology::default()).unwrap();
        for mode in list_modes() {
            let b = assemble_frame(b"x", mode, &dimming(70), &Mhr::default(), Topology::default()).unwrap();
            assert_eq!(a.shr, b.shr);
        }
    }

    #[test]
    fn efficiency_limit_and_monotonicity() {
        for mode in list_modes() {
            let layout = frame_overhead(mode, 100_000.min(MAX_PAYLOAD_LEN));
            let limit = *mode.spectral_efficiency().numer() as f64
                / *mode.spectral_efficiency().denom() as f64;
            assert!((layout.efficiency - limit).abs() / limit < 0.01, "{}", mode.describe());
            let mut prev = 0;
            for n in 0..200 {
                let total = frame_overhead(mode, n).total_bits;
                assert!(total >= prev);
                prev = total;
            }
        }
    }

    #[test]
    fn header_sections_decode() {
        for mode in list_modes() {
            let f = assemble_frame(b"abc", mode, &dimming(50), &Mhr::default(), Topology::default()).unwrap();
            let mut rd = DisparityState::Negative;
            let phr = decode_phr_section(&f.phr_coded, mode.phy_type, mode.rll_code, &mut rd).unwrap();
            assert_eq!(phr.mode().unwrap(), *mode);
            let (psdu, _) = decode_psdu_section(&f.psdu_coded, mode, phr.psdu_length as usize, &mut rd).unwrap();
            assert_eq!(&psdu[3..], b"abc");
        }
    }

    #[test]
    fn oversized_payload() {
        assert!(matches!(
            assemble_frame(&vec![0; MAX_PAYLOAD_LEN + 1], &list_modes()[4], &dimming(50), &Mhr::default(), Topology::default()),
            Err(Error::Framing(_))
        ));
    }

    #[test]
    fn dump_format() {
        let f = assemble_frame(&[], &list_modes()[4], &dimming(50), &Mhr::default(), Topology::default()).unwrap();
        let dump = f.dump();
        let mut lines = dump.lines();
        assert_eq!(lines.next(), Some("SHR 124 bits"));
        assert_eq!(lines.next(), Some("  000000: 5555555555555555"));
        assert!(dump.contains("PSDU 48 bits"));
    }
}
