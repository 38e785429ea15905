//! Run-length-limited line codes.
//!
//! | code       | expansion | max run | disparity per block |
//! |------------|-----------|---------|---------------------|
//! | Manchester | 2         | 2       | 0                   |
//! | 4B6B       | 3/2       | 4       | 0                   |
//! | 8B10B      | 5/4       | 5       | -2, 0, +2           |
//!
//! Trailing partial blocks are rejected, never padded; callers that need a
//! whole number of blocks pad upstream with [`pad_len`].

mod eightb10b;
mod fourb6b;
mod manchester;

pub use eightb10b::{decode_8b10b, decode_8b10b_lenient, encode_8b10b, DisparityState};
pub use fourb6b::{decode_4b6b, decode_4b6b_lenient, encode_4b6b, CODE_TABLE as FOUR_B_SIX_B_TABLE};
pub use manchester::{manchester_decode, manchester_decode_lenient, manchester_encode};

use crate::bits::BitSequence;
use crate::error::Result;
use crate::mode::RllCode;

/// Zero bits to append so that `len` fills a whole number of input blocks.
pub fn pad_len(code: RllCode, len: usize) -> usize {
    let b = code.block_in();
    (b - len % b) % b
}

/// Channel bits produced for `len` input bits (after padding).
pub fn encoded_len(code: RllCode, len: usize) -> usize {
    (len + pad_len(code, len)) / code.block_in() * code.block_out()
}

/// Encodes with any of the line codes. `state` is only read and updated by
/// 8B10B.
pub fn rll_encode(
    code: RllCode,
    data: &BitSequence,
    state: &mut DisparityState,
) -> Result<BitSequence> {
    match code {
        RllCode::Manchester => Ok(manchester_encode(data)),
        RllCode::FourBSixB => encode_4b6b(data),
        RllCode::EightBTenB => {
            let (out, next) = encode_8b10b(data, *state)?;
            *state = next;
            Ok(out)
        }
    }
}

pub fn rll_decode(
    code: RllCode,
    coded: &BitSequence,
    state: &mut DisparityState,
) -> Result<BitSequence> {
    match code {
        RllCode::Manchester => manchester_decode(coded),
        RllCode::FourBSixB => decode_4b6b(coded),
        RllCode::EightBTenB => {
            let (out, next) = decode_8b10b(coded, *state)?;
            *state = next;
            Ok(out)
        }
    }
}

/// Decoder for noisy channels: invalid blocks are replaced by a best guess
/// instead of failing, leaving the errors to the FEC. Returns the number of
/// blocks repaired.
pub fn rll_decode_lenient(
    code: RllCode,
    coded: &BitSequence,
    state: &mut DisparityState,
) -> Result<(BitSequence, usize)> {
    match code {
        RllCode::Manchester => manchester_decode_lenient(coded),
        RllCode::FourBSixB => decode_4b6b_lenient(coded),
        RllCode::EightBTenB => {
            let (out, next, repaired) = decode_8b10b_lenient(coded, *state)?;
            *state = next;
            Ok((out, repaired))
        }
    }
}
