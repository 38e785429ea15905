//! Forward error correction: RS outer code, block interleaver, convolutional
//! inner code.
//!
//! The transmit path for a coded mode is
//!
//! 1. pack bits into field symbols (4 bits for PHY I, 8 for PHY II), zero
//!    padding the last symbol and the last RS block;
//! 2. RS-encode each block of k symbols;
//! 3. interleave the frame's codewords with one matrix row per codeword, so
//!    consecutive channel symbols come from different codewords;
//! 4. convolutionally encode the result (PHY I modes with an inner code).
//!
//! Padding is never transmitted explicitly; the receiver recovers it from the
//! payload length in the PHY header.

pub mod cc;
pub mod gf;
pub mod interleave;
pub mod rs;

pub use cc::{cc_encode, viterbi_decode, CcCode};
pub use gf::GaloisField;
pub use interleave::{deinterleave, interleave};
pub use rs::{rs_decode, rs_encode, RsCode};

use crate::bits::{bits_to_symbols, symbols_to_bits, BitSequence};
use crate::error::{Error, Result};
use crate::mode::{CcRate, OperatingMode, PhyType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStatus {
    Corrected(usize),
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FecReport {
    pub blocks: Vec<BlockStatus>,
}

impl FecReport {
    pub fn corrected_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                BlockStatus::Corrected(n) => *n,
                BlockStatus::Failed => 0,
            })
            .sum()
    }

    pub fn failed_blocks(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| matches!(b, BlockStatus::Failed))
            .count()
    }

    pub fn is_ok(&self) -> bool {
        self.failed_blocks() == 0
    }
}

/// A concrete FEC configuration.
#[derive(Debug, Clone)]
pub struct FecScheme {
    pub rs: Option<RsCode>,
    pub cc: Option<CcCode>,
}

impl FecScheme {
    pub fn uncoded() -> Self {
        Self { rs: None, cc: None }
    }

    pub fn for_mode(mode: &OperatingMode) -> Self {
        let rs = mode.rs_params.map(|p| {
            let field = match mode.phy_type {
                PhyType::PhyI => GaloisField::gf16(),
                PhyType::PhyII => GaloisField::gf256(),
            };
            RsCode::new(p.n, p.k, field).expect("registered RS parameters are valid")
        });
        Self {
            rs,
            cc: mode.cc_rate.map(CcCode::new),
        }
    }

    /// The configuration used for the PHY header: the most robust code of
    /// each PHY.
    pub fn header(phy: PhyType) -> Self {
        match phy {
            PhyType::PhyI => Self {
                rs: Some(RsCode::new(15, 7, GaloisField::gf16()).unwrap()),
                cc: Some(CcCode::new(CcRate::OneQuarter)),
            },
            PhyType::PhyII => Self {
                rs: Some(RsCode::new(64, 32, GaloisField::gf256()).unwrap()),
                cc: None,
            },
        }
    }

    fn symbol_bits(rs: &RsCode) -> usize {
        rs.field().bits() as usize
    }

    /// Number of RS blocks needed for `payload_len` bits.
    pub fn rs_blocks(&self, payload_len: usize) -> usize {
        self.rs.as_ref().map_or(0, |rs| {
            let symbols = payload_len.div_ceil(Self::symbol_bits(rs));
            symbols.div_ceil(rs.k())
        })
    }

    fn rs_output_len(&self, payload_len: usize) -> usize {
        match &self.rs {
            Some(rs) => self.rs_blocks(payload_len) * rs.n() * Self::symbol_bits(rs),
            None => payload_len,
        }
    }

    pub fn encoded_len(&self, payload_len: usize) -> usize {
        let len = self.rs_output_len(payload_len);
        match &self.cc {
            Some(cc) => cc.encoded_len(len),
            None => len,
        }
    }

    pub fn encode(&self, bits: &BitSequence) -> BitSequence {
        let outer = match &self.rs {
            Some(rs) => {
                let m = Self::symbol_bits(rs);
                let blocks = self.rs_blocks(bits.len());
                let mut padded = bits.clone();
                padded.extend_from(&BitSequence::zeros(blocks * rs.k() * m - bits.len()));
                let symbols = bits_to_symbols(&padded, m);
                let mut coded = Vec::with_capacity(blocks * rs.n());
                for block in symbols.chunks(rs.k()) {
                    coded.extend(rs_encode(block, rs).expect("block has k symbols"));
                }
                let coded = interleave(&coded, rs.n()).expect("whole codewords");
                symbols_to_bits(&coded, m)
            }
            None => bits.clone(),
        };
        match &self.cc {
            Some(cc) => cc_encode(&outer, cc),
            None => outer,
        }
    }

    pub fn decode(&self, bits: &BitSequence, payload_len: usize) -> Result<(BitSequence, FecReport)> {
        let expected = self.encoded_len(payload_len);
        if bits.len() != expected {
            return Err(Error::framing(format!(
                "FEC input has {} bits, expected {expected} for a {payload_len}-bit payload",
                bits.len()
            )));
        }
        let inner = match &self.cc {
            Some(cc) => viterbi_decode(bits, cc)?,
            None => bits.clone(),
        };
        let Some(rs) = &self.rs else {
            let mut out = inner;
            out.truncate(payload_len);
            return Ok((out, FecReport::default()));
        };
        let m = Self::symbol_bits(rs);
        let symbols = deinterleave(&bits_to_symbols(&inner, m), rs.n())?;
        let mut report = FecReport::default();
        let mut message = Vec::with_capacity(symbols.len() / rs.n() * rs.k());
        for block in symbols.chunks(rs.n()) {
            match rs_decode(block, rs) {
                Ok((msg, corrected)) => {
                    report.blocks.push(BlockStatus::Corrected(corrected));
                    message.extend(msg);
                }
                Err(Error::DecodeFailure { .. }) => {
                    report.blocks.push(BlockStatus::Failed);
                    message.extend(&block[..rs.k()]);
                }
                Err(e) => return Err(e),
            }
        }
        if !report.is_ok() {
            return Err(Error::DecodeFailure { report });
        }
        let mut out = symbols_to_bits(&message, m);
        out.truncate(payload_len);
        Ok((out, report))
    }
}

pub fn fec_encode_path(bits: &BitSequence, mode: &OperatingMode) -> BitSequence {
    FecScheme::for_mode(mode).encode(bits)
}

pub fn fec_decode_path(
    bits: &BitSequence,
    mode: &OperatingMode,
    payload_len: usize,
) -> Result<(BitSequence, FecReport)> {
    FecScheme::for_mode(mode).decode(bits, payload_len)
}
