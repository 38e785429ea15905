//! Data-only 8B10B: a 5b/6b sub-block followed by a 3b/4b sub-block, each
//! chosen by the running disparity. Control characters are not produced and
//! are rejected by the decoder.
//!
//! A byte `HGFEDCBA` is taken MSB first from the input stream. `EDCBA` selects
//! the 6-bit sub-block `abcdei`, `HGF` the 4-bit sub-block `fghj`; the ten
//! bits are emitted in the order `abcdeifghj`.

use std::sync::OnceLock;

use crate::bits::BitSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DisparityState {
    #[default]
    Negative,
    Positive,
}

impl DisparityState {
    pub fn value(self) -> i8 {
        match self {
            DisparityState::Negative => -1,
            DisparityState::Positive => 1,
        }
    }

    fn flipped(self) -> Self {
        match self {
            DisparityState::Negative => DisparityState::Positive,
            DisparityState::Positive => DisparityState::Negative,
        }
    }
}

/// `abcdei` for running disparity -1.
const SIX_B_RD_NEG: [u8; 32] = [
    0b100111, 0b011101, 0b101101, 0b110001, 0b110101, 0b101001, 0b011001, 0b111000,
    0b111001, 0b100101, 0b010101, 0b110100, 0b001101, 0b101100, 0b011100, 0b010111,
    0b011011, 0b100011, 0b010011, 0b110010, 0b001011, 0b101010, 0b011010, 0b111010,
    0b110011, 0b100110, 0b010110, 0b110110, 0b001110, 0b101110, 0b011110, 0b101011,
];

/// `fghj` for running disparity -1; index 7 is the primary D.x.P7.
const FOUR_B_RD_NEG: [u8; 8] = [
    0b1011, 0b1001, 0b0101, 0b1100, 0b1101, 0b1010, 0b0110, 0b1110,
];

const FOUR_B_A7_RD_NEG: u8 = 0b0111;

fn six_b(x: usize, rd: DisparityState) -> u8 {
    let neg = SIX_B_RD_NEG[x];
    match rd {
        DisparityState::Negative => neg,
        DisparityState::Positive if neg.count_ones() != 3 || x == 7 => !neg & 0x3f,
        DisparityState::Positive => neg,
    }
}

fn four_b(x: usize, y: usize, rd: DisparityState) -> u8 {
    let use_alternate = y == 7
        && match rd {
            DisparityState::Negative => matches!(x, 17 | 18 | 20),
            DisparityState::Positive => matches!(x, 11 | 13 | 14),
        };
    let neg = if use_alternate {
        FOUR_B_A7_RD_NEG
    } else {
        FOUR_B_RD_NEG[y]
    };
    match rd {
        DisparityState::Negative => neg,
        DisparityState::Positive if neg.count_ones() != 2 || y == 3 => !neg & 0x0f,
        DisparityState::Positive => neg,
    }
}

fn after(rd: DisparityState, word: u8, width: u32) -> DisparityState {
    if 2 * word.count_ones() == width {
        rd
    } else {
        rd.flipped()
    }
}

/// Encodes one byte, returning the 10-bit block and the new running disparity.
fn encode_byte(byte: u8, rd: DisparityState) -> (u16, DisparityState) {
    let x = (byte & 0x1f) as usize;
    let y = (byte >> 5) as usize;
    let six = six_b(x, rd);
    let rd = after(rd, six, 6);
    let four = four_b(x, y, rd);
    let rd = after(rd, four, 4);
    (((six as u16) << 4) | four as u16, rd)
}

const NO_CODE: u16 = u16::MAX;

/// `(rd, block) -> byte` for every legal data character.
fn decode_table() -> &'static [[u16; 1024]; 2] {
    static TABLE: OnceLock<[[u16; 1024]; 2]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[NO_CODE; 1024]; 2];
        for (slot, rd) in [DisparityState::Negative, DisparityState::Positive]
            .into_iter()
            .enumerate()
        {
            for byte in 0..=255u8 {
                let (code, _) = encode_byte(byte, rd);
                t[slot][code as usize] = byte as u16;
            }
        }
        t
    })
}

fn slot(rd: DisparityState) -> usize {
    match rd {
        DisparityState::Negative => 0,
        DisparityState::Positive => 1,
    }
}

pub fn encode_8b10b(
    data: &BitSequence,
    state: DisparityState,
) -> Result<(BitSequence, DisparityState)> {
    if !data.len().is_multiple_of(8) {
        return Err(Error::framing(format!(
            "8B10B input length {} is not a multiple of 8",
            data.len()
        )));
    }
    let mut rd = state;
    let mut out = BitSequence::with_capacity(data.len() / 8 * 10);
    for i in 0..data.len() / 8 {
        let (code, next) = encode_byte(data.read_word(8 * i, 8) as u8, rd);
        out.push_word(code as u64, 10);
        rd = next;
    }
    Ok((out, rd))
}

/// Decodes blocks under the running disparity they were sent with. A block
/// that is not a data character for the current disparity (including a
/// valid character of the wrong polarity) is an `InvalidSymbol`.
pub fn decode_8b10b(
    coded: &BitSequence,
    state: DisparityState,
) -> Result<(BitSequence, DisparityState)> {
    if !coded.len().is_multiple_of(10) {
        return Err(Error::framing(format!(
            "8B10B coded length {} is not a multiple of 10",
            coded.len()
        )));
    }
    let table = decode_table();
    let mut rd = state;
    let mut out = BitSequence::with_capacity(coded.len() / 10 * 8);
    for i in 0..coded.len() / 10 {
        let code = coded.read_word(10 * i, 10) as u16;
        let byte = table[slot(rd)][code as usize];
        if byte == NO_CODE {
            return Err(Error::InvalidSymbol { position: 10 * i });
        }
        out.push_word(byte as u64, 8);
        rd = after(after(rd, (code >> 4) as u8, 6), (code & 0xf) as u8, 4);
    }
    Ok((out, rd))
}

/// Like [`decode_8b10b`] but never rejects a block. A valid character of
/// the other polarity is accepted and resynchronizes the running
/// disparity; anything else becomes the nearest character for the current
/// disparity. Returns the number of blocks repaired.
pub fn decode_8b10b_lenient(
    coded: &BitSequence,
    state: DisparityState,
) -> Result<(BitSequence, DisparityState, usize)> {
    if !coded.len().is_multiple_of(10) {
        return Err(Error::framing(format!(
            "8B10B coded length {} is not a multiple of 10",
            coded.len()
        )));
    }
    let table = decode_table();
    let mut rd = state;
    let mut repaired = 0;
    let mut out = BitSequence::with_capacity(coded.len() / 10 * 8);
    for i in 0..coded.len() / 10 {
        let code = coded.read_word(10 * i, 10) as u16;
        let byte = if table[slot(rd)][code as usize] != NO_CODE {
            table[slot(rd)][code as usize] as u8
        } else if table[slot(rd.flipped())][code as usize] != NO_CODE {
            repaired += 1;
            rd = rd.flipped();
            table[slot(rd)][code as usize] as u8
        } else {
            repaired += 1;
            (0..=255u8)
                .min_by_key(|&b| ((encode_byte(b, rd).0 ^ code).count_ones(), b))
                .expect("256 candidates")
        };
        let (_, next) = encode_byte(byte, rd);
        out.push_word(byte as u64, 8);
        rd = next;
    }
    Ok((out, rd, repaired))
}
