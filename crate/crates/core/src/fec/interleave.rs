//! Block interleaver.
//!
//! The input is written row by row into a matrix with `depth` columns and read
//! out column by column. A burst of up to `len / depth` consecutive output
//! symbols therefore touches each row of `depth` input symbols at most once.
//! With rows equal to RS codewords this spreads a burst across codewords.

use crate::error::{Error, Result};

fn check(len: usize, depth: usize) -> Result<usize> {
    if depth == 0 || !len.is_multiple_of(depth) {
        return Err(Error::framing(format!(
            "interleaver length {len} is not a multiple of depth {depth}"
        )));
    }
    Ok(len / depth)
}

pub fn interleave<T: Copy>(symbols: &[T], depth: usize) -> Result<Vec<T>> {
    let rows = check(symbols.len(), depth)?;
    let mut out = Vec::with_capacity(symbols.len());
    for col in 0..depth {
        for row in 0..rows {
            out.push(symbols[row * depth + col]);
        }
    }
    Ok(out)
}

pub fn deinterleave<T: Copy>(symbols: &[T], depth: usize) -> Result<Vec<T>> {
    let rows = check(symbols.len(), depth)?;
    let mut out = Vec::with_capacity(symbols.len());
    for row in 0..rows {
        for col in 0..depth {
            out.push(symbols[col * rows + row]);
        }
    }
    Ok(out)
}
