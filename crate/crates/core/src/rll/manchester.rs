use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// 0 -> 01, 1 -> 10.
pub fn manchester_encode(data: &BitSequence) -> BitSequence {
    let mut out = BitSequence::with_capacity(data.len() * 2);
    for b in data.iter() {
        out.push(b);
        out.push(b ^ 1);
    }
    out
}

pub fn manchester_decode(chips: &BitSequence) -> Result<BitSequence> {
    if !chips.len().is_multiple_of(2) {
        return Err(Error::framing(format!(
            "Manchester stream has odd length {}",
            chips.len()
        )));
    }
    chips
        .as_slice()
        .chunks_exact(2)
        .enumerate()
        .map(|(i, pair)| match pair {
            [0, 1] => Ok(0),
            [1, 0] => Ok(1),
            _ => Err(Error::InvalidSymbol { position: 2 * i }),
        })
        .collect::<Result<Vec<u8>>>()
        .map(BitSequence::from)
}

/// Like [`manchester_decode`] but never rejects a pair: `00` and `11` are
/// read by their first chip. Returns the number of such pairs.
pub fn manchester_decode_lenient(chips: &BitSequence) -> Result<(BitSequence, usize)> {
    if !chips.len().is_multiple_of(2) {
        return Err(Error::framing(format!(
            "Manchester stream has odd length {}",
            chips.len()
        )));
    }
    let mut repaired = 0;
    let bits = chips
        .as_slice()
        .chunks_exact(2)
        .map(|pair| {
            repaired += (pair[0] == pair[1]) as usize;
            pair[0]
        })
        .collect();
    Ok((bits, repaired))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[u8]) -> BitSequence {
        BitSequence::from(v)
    }

    #[test]
    fn examples() {
        assert!(manchester_encode(&seq(&[])).is_empty());
        assert_eq!(manchester_encode(&seq(&[0])), seq(&[0, 1]));
        assert_eq!(manchester_encode(&seq(&[1, 0, 1])), seq(&[1, 0, 0, 1, 1, 0]));
        assert_eq!(manchester_decode(&seq(&[0, 1])).unwrap(), seq(&[0]));
        assert_eq!(manchester_decode(&seq(&[1, 0, 0, 1])).unwrap(), seq(&[1, 0]));
    }

    #[test]
    fn errors() {
        assert_eq!(
            manchester_decode(&seq(&[1, 1])),
            Err(Error::InvalidSymbol { position: 0 })
        );
        assert_eq!(
            manchester_decode(&seq(&[0, 1, 0, 0])),
            Err(Error::InvalidSymbol { position: 2 })
        );
        assert!(matches!(
            manchester_decode(&seq(&[0, 1, 0])),
            Err(Error::Framing(_))
        ));
    }

    #[test]
    fn exhaustive_up_to_twelve_bits() {
        for len in 0..=12usize {
            for word in 0..(1u64 << len) {
                let mut data = BitSequence::new();
                data.push_word(word, len);
                let chips = manchester_encode(&data);
                assert_eq!(chips.len(), 2 * len);
                assert_eq!(chips.count_ones(), len);
                assert!(chips.max_run() <= 2);
                assert_eq!(manchester_decode(&chips).unwrap(), data);
            }
        }
    }

    #[test]
    fn lenient_reads_first_chip() {
        let (bits, n) = manchester_decode_lenient(&seq(&[0, 1, 1, 1, 0, 0, 1, 0])).unwrap();
        assert_eq!(bits, seq(&[0, 1, 0, 1]));
        assert_eq!(n, 2);
    }
}
