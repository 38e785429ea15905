use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// Nibble -> 6-bit codeword, each of Hamming weight 3. Concatenations never
/// run longer than 4 identical bits.
pub const CODE_TABLE: [u8; 16] = [
    0b001110, 0b001101, 0b010011, 0b010110, 0b010101, 0b100011, 0b100110, 0b100101,
    0b011001, 0b011010, 0b011100, 0b110001, 0b110010, 0b101001, 0b101010, 0b101100,
];

const INVALID: u8 = 0xff;

const fn build_decode_table() -> [u8; 64] {
    let mut t = [INVALID; 64];
    let mut i = 0;
    while i < 16 {
        t[CODE_TABLE[i] as usize] = i as u8;
        i += 1;
    }
    t
}

static DECODE_TABLE: [u8; 64] = build_decode_table();

pub fn encode_4b6b(data: &BitSequence) -> Result<BitSequence> {
    if !data.len().is_multiple_of(4) {
        return Err(Error::framing(format!(
            "4B6B input length {} is not a multiple of 4",
            data.len()
        )));
    }
    let mut out = BitSequence::with_capacity(data.len() / 4 * 6);
    for i in 0..data.len() / 4 {
        let nibble = data.read_word(4 * i, 4) as usize;
        out.push_word(CODE_TABLE[nibble] as u64, 6);
    }
    Ok(out)
}

pub fn decode_4b6b(coded: &BitSequence) -> Result<BitSequence> {
    if !coded.len().is_multiple_of(6) {
        return Err(Error::framing(format!(
            "4B6B coded length {} is not a multiple of 6",
            coded.len()
        )));
    }
    let mut out = BitSequence::with_capacity(coded.len() / 6 * 4);
    for i in 0..coded.len() / 6 {
        let word = coded.read_word(6 * i, 6) as usize;
        match DECODE_TABLE[word] {
            INVALID => return Err(Error::InvalidSymbol { position: 6 * i }),
            nibble => out.push_word(nibble as u64, 4),
        }
    }
    Ok(out)
}

/// Nearest codeword index for every 6-bit word; ties go to the lower
/// nibble.
fn nearest_nibble(word: u8) -> u8 {
    (0..16u8)
        .min_by_key(|&i| ((CODE_TABLE[i as usize] ^ word).count_ones(), i))
        .expect("table is non-empty")
}

/// Like [`decode_4b6b`] but maps an invalid word to the nearest codeword.
/// Returns the number of words repaired.
pub fn decode_4b6b_lenient(coded: &BitSequence) -> Result<(BitSequence, usize)> {
    if !coded.len().is_multiple_of(6) {
        return Err(Error::framing(format!(
            "4B6B coded length {} is not a multiple of 6",
            coded.len()
        )));
    }
    let mut repaired = 0;
    let mut out = BitSequence::with_capacity(coded.len() / 6 * 4);
    for i in 0..coded.len() / 6 {
        let word = coded.read_word(6 * i, 6) as u8;
        let nibble = match DECODE_TABLE[word as usize] {
            INVALID => {
                repaired += 1;
                nearest_nibble(word)
            }
            nibble => nibble,
        };
        out.push_word(nibble as u64, 4);
    }
    Ok((out, repaired))
}
