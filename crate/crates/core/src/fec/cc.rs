//! Constraint-length-7 convolutional code and hard-decision Viterbi decoder.
//!
//! The mother code is rate 1/3 with generators 133, 171, 165 (octal). The
//! other rates are derived from it with a periodic output pattern, listing for
//! each trellis step which generator outputs are sent and in what order:
//!
//! | rate | period | emitted per step            |
//! |------|--------|-----------------------------|
//! | 1/3  | 1      | `g0 g1 g2`                  |
//! | 1/4  | 1      | `g0 g1 g2 g0` (g0 repeated) |
//! | 2/3  | 2      | `g0 g1`, then `g0`          |
//!
//! The encoder is flushed with six zero tail bits so the trellis starts and
//! ends in state 0.

use crate::bits::BitSequence;
use crate::error::{Error, Result};
use crate::mode::CcRate;

pub const CONSTRAINT_LENGTH: usize = 7;
pub const GENERATORS: [u8; 3] = [0o133, 0o171, 0o165];
pub const TAIL_BITS: usize = CONSTRAINT_LENGTH - 1;
const STATES: usize = 1 << TAIL_BITS;

const PATTERN_ONE_THIRD: &[&[usize]] = &[&[0, 1, 2]];
const PATTERN_ONE_QUARTER: &[&[usize]] = &[&[0, 1, 2, 0]];
const PATTERN_TWO_THIRDS: &[&[usize]] = &[&[0, 1], &[0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CcCode {
    rate: CcRate,
}

impl CcCode {
    pub fn new(rate: CcRate) -> Self {
        Self { rate }
    }

    pub fn rate(&self) -> CcRate {
        self.rate
    }

    /// Generator indices emitted at each step of one pattern period.
    pub fn pattern(&self) -> &'static [&'static [usize]] {
        match self.rate {
            CcRate::OneThird => PATTERN_ONE_THIRD,
            CcRate::OneQuarter => PATTERN_ONE_QUARTER,
            CcRate::TwoThirds => PATTERN_TWO_THIRDS,
        }
    }

    fn emitted_after(&self, steps: usize) -> usize {
        let pattern = self.pattern();
        let per_period: usize = pattern.iter().map(|p| p.len()).sum();
        let full = steps / pattern.len() * per_period;
        full + pattern[..steps % pattern.len()]
            .iter()
            .map(|p| p.len())
            .sum::<usize>()
    }

    /// Output length for `input_len` information bits, tail included.
    pub fn encoded_len(&self, input_len: usize) -> usize {
        self.emitted_after(input_len + TAIL_BITS)
    }

    /// Inverse of [`encoded_len`](Self::encoded_len), if `coded_len` is
    /// reachable.
    pub fn decoded_len(&self, coded_len: usize) -> Option<usize> {
        let pattern = self.pattern();
        let per_period: usize = pattern.iter().map(|p| p.len()).sum();
        let approx = coded_len * pattern.len() / per_period;
        (approx.saturating_sub(pattern.len())..=approx + pattern.len())
            .filter(|&steps| steps >= TAIL_BITS)
            .find(|&steps| self.emitted_after(steps) == coded_len)
            .map(|steps| steps - TAIL_BITS)
    }
}

fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Mother-code outputs for a 7-bit register whose MSB is the newest input.
fn outputs(register: u8) -> [u8; 3] {
    GENERATORS.map(|g| parity(register & g))
}

pub fn cc_encode(bits: &BitSequence, code: &CcCode) -> BitSequence {
    let pattern = code.pattern();
    let mut out = BitSequence::with_capacity(code.encoded_len(bits.len()));
    let mut state = 0u8;
    let tail = std::iter::repeat_n(0u8, TAIL_BITS);
    for (step, u) in bits.iter().chain(tail).enumerate() {
        let register = (u << TAIL_BITS) | state;
        let y = outputs(register);
        for &g in pattern[step % pattern.len()] {
            out.push(y[g]);
        }
        state = register >> 1;
    }
    out
}

/// Maximum-likelihood (minimum Hamming distance) decoding of a terminated
/// codeword.
pub fn viterbi_decode(bits: &BitSequence, code: &CcCode) -> Result<BitSequence> {
    let input_len = code.decoded_len(bits.len()).ok_or_else(|| {
        Error::framing(format!(
            "{} coded bits is not a valid rate {} length",
            bits.len(),
            code.rate()
        ))
    })?;
    let steps = input_len + TAIL_BITS;
    let pattern = code.pattern();

    // Branch outputs for every (state, input) pair.
    let mut branch = [[[0u8; 3]; 2]; STATES];
    for (state, row) in branch.iter_mut().enumerate() {
        for u in 0..2u8 {
            row[u as usize] = outputs((u << TAIL_BITS) | state as u8);
        }
    }

    const UNREACHED: u32 = u32::MAX / 2;
    let mut metric = [UNREACHED; STATES];
    metric[0] = 0;
    // decisions[step] bit s: survivor into state s came from the predecessor
    // whose shifted-out bit is 1.
    let mut decisions = vec![0u64; steps];
    let mut pos = 0usize;
    let symbols = bits.as_slice();
    for (step, decision) in decisions.iter_mut().enumerate() {
        let emitted = pattern[step % pattern.len()];
        let received = &symbols[pos..pos + emitted.len()];
        pos += emitted.len();
        let mut next = [UNREACHED; STATES];
        // Tail steps force input 0.
        let inputs: &[u8] = if step < input_len { &[0, 1] } else { &[0] };
        for (ns, slot) in next.iter_mut().enumerate() {
            let u = (ns >> (TAIL_BITS - 1)) as u8;
            if !inputs.contains(&u) {
                continue;
            }
            let mut best = UNREACHED;
            let mut best_bit = 0u64;
            for lost in 0..2usize {
                let prev = ((ns << 1) & (STATES - 1)) | lost;
                if metric[prev] >= UNREACHED {
                    continue;
                }
                let y = &branch[prev][u as usize];
                let distance: u32 = emitted
                    .iter()
                    .zip(received)
                    .map(|(&g, &r)| (y[g] != r) as u32)
                    .sum();
                let candidate = metric[prev] + distance;
                if candidate < best {
                    best = candidate;
                    best_bit = lost as u64;
                }
            }
            *slot = best;
            *decision |= best_bit << ns;
        }
        metric = next;
    }

    let mut out = vec![0u8; input_len];
    let mut state = 0usize;
    for step in (0..steps).rev() {
        if step < input_len {
            out[step] = (state >> (TAIL_BITS - 1)) as u8;
        }
        let lost = ((decisions[step] >> state) & 1) as usize;
        state = ((state << 1) & (STATES - 1)) | lost;
    }
    Ok(BitSequence::from(out))
}
