//! OOK compensation symbols.
//!
//! The data stream is cut into sub-frames of `subframe_length` symbols and
//! each sub-frame is followed by a run of constant symbols at the
//! compensation brightness `b`. For a DC-balanced stream the average is
//! `0.5 * (1 - f) + b * f`, where `f` is the fraction of compensation time,
//! so `f = (t - 0.5) / (b - 0.5)`. A sub-frame of `s` data symbols gets
//! `round(s * f / (1 - f))` compensation symbols.
//!
//! The layout is a pure function of the data length and the dimming
//! configuration; the receiver rebuilds it from the PHR.

use super::DimmingConfig;
use crate::bits::BitSequence;
use crate::error::{Error, Result};

/// `f / (1 - f)` as an exact fraction `(num, den)`.
fn ratio(dimming: &DimmingConfig) -> Result<(usize, usize)> {
    dimming.validate()?;
    let t = dimming.target_level as usize;
    let (num, den) = match dimming.compensation_brightness {
        0 if t <= 50 => (50 - t, t),
        1 if t >= 50 => (t - 50, 100 - t),
        b => {
            return Err(Error::config(format!(
                "compensation brightness {b} cannot reach {t}%"
            )))
        }
    };
    if den == 0 {
        return Err(Error::config(format!(
            "{t}% is unreachable with compensation symbols"
        )));
    }
    Ok((num, den))
}

/// Fraction of air time spent on compensation symbols.
pub fn compensation_fraction(dimming: &DimmingConfig) -> Result<f64> {
    let (num, den) = ratio(dimming)?;
    Ok(num as f64 / (num + den) as f64)
}

fn run_len(data: usize, (num, den): (usize, usize)) -> usize {
    (2 * data * num + den) / (2 * den)
}

/// Where compensation runs sit in the transmitted stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompensationMap {
    /// `(start, length)` of each run, in output positions.
    pub runs: Vec<(usize, usize)>,
    pub brightness: u8,
    pub data_len: usize,
    pub total_len: usize,
}

impl CompensationMap {
    pub fn inserted(&self) -> usize {
        self.total_len - self.data_len
    }
}

pub fn compensation_map(data_len: usize, dimming: &DimmingConfig) -> Result<CompensationMap> {
    let r = ratio(dimming)?;
    let s = dimming.subframe_length;
    let mut runs = Vec::with_capacity(data_len.div_ceil(s));
    let mut pos = 0;
    let mut remaining = data_len;
    while remaining > 0 {
        let chunk = remaining.min(s);
        pos += chunk;
        remaining -= chunk;
        let c = run_len(chunk, r);
        if c > 0 {
            runs.push((pos, c));
            pos += c;
        }
    }
    Ok(CompensationMap {
        runs,
        brightness: dimming.compensation_brightness,
        data_len,
        total_len: pos,
    })
}

pub fn insert_compensation(
    chips: &BitSequence,
    dimming: &DimmingConfig,
) -> Result<(BitSequence, CompensationMap)> {
    let map = compensation_map(chips.len(), dimming)?;
    let mut out = BitSequence::with_capacity(map.total_len);
    let mut next = 0;
    for &(start, len) in &map.runs {
        let take = start - out.len();
        out.extend_from(&chips.slice(next, next + take));
        next += take;
        out.extend_from(&(0..len).map(|_| map.brightness).collect());
    }
    out.extend_from(&chips.slice(next, chips.len()));
    Ok((out, map))
}

pub fn strip_compensation(chips: &BitSequence, map: &CompensationMap) -> Result<BitSequence> {
    if chips.len() != map.total_len {
        return Err(Error::framing(format!(
            "compensated stream has {} chips, expected {}",
            chips.len(),
            map.total_len
        )));
    }
    let mut out = BitSequence::with_capacity(map.data_len);
    let mut pos = 0;
    for &(start, len) in &map.runs {
        out.extend_from(&chips.slice(pos, start));
        pos = start + len;
    }
    out.extend_from(&chips.slice(pos, chips.len()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rll::manchester_encode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn half_fraction_doubles_length() {
        // t = 0.25 with OFF symbols: f = (0.25 - 0.5) / (0 - 0.5) = 0.5.
        let d = DimmingConfig::compensation(25);
        assert_eq!(compensation_fraction(&d).unwrap(), 0.5);
        let chips = BitSequence::from([1, 0].repeat(512));
        let (out, map) = insert_compensation(&chips, &d).unwrap();
        assert_eq!(out.len(), 2048);
        assert_eq!(map.inserted(), 1024);
    }

    #[test]
    fn mean_tracks_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: BitSequence = (0..5000).map(|_| rng.random_range(0..2u8)).collect();
        let chips = manchester_encode(&data);
        for t in 1..100u8 {
            let d = DimmingConfig::compensation(t);
            let (out, _) = insert_compensation(&chips, &d).unwrap();
            let mean = out.count_ones() as f64 / out.len() as f64;
            // Rounding costs at most half a symbol per sub-frame.
            let subframes = chips.len().div_ceil(d.subframe_length) as f64;
            let tol = 0.5 * subframes / out.len() as f64 + 1e-12;
            assert!((mean - t as f64 / 100.0).abs() <= tol, "{t}: {mean}");
        }
    }

    #[test]
    fn unreachable_targets() {
        for t in [0, 100] {
            assert!(matches!(
                compensation_map(10, &DimmingConfig::compensation(t)),
                Err(Error::Config(_))
            ));
        }
        let mut d = DimmingConfig::compensation(70);
        d.compensation_brightness = 0;
        assert!(matches!(compensation_map(10, &d), Err(Error::Config(_))));
    }

    #[test]
    fn partial_last_subframe() {
        let mut d = DimmingConfig::compensation(25);
        d.subframe_length = 10;
        let map = compensation_map(25, &d).unwrap();
        assert_eq!(map.runs, vec![(10, 10), (30, 10), (45, 5)]);
        assert_eq!(map.total_len, 50);
    }

    proptest! {
        #[test]
        fn strip_inverts_insert(
            data in proptest::collection::vec(0u8..2, 0..700),
            t in 1u8..100,
            s in 1usize..300,
        ) {
            let mut d = DimmingConfig::compensation(t);
            d.subframe_length = s;
            let chips = BitSequence::from(data);
            let (out, map) = insert_compensation(&chips, &d).unwrap();
            prop_assert_eq!(out.len(), map.total_len);
            prop_assert_eq!(strip_compensation(&out, &map).unwrap(), chips);
        }
    }
}
