//! Systematic narrow-sense Reed–Solomon codes.
//!
//! The generator has roots alpha^1 .. alpha^(n-k). Codes with n below the
//! field's natural length are shortened: the missing leading message symbols
//! are implicit zeros, so the same encoder and decoder serve RS(15,k) over
//! GF(16) and RS(64,32) / RS(160,128) over GF(256).
//!
//! Decoding is Berlekamp–Massey, Chien search restricted to the n transmitted
//! positions, and Forney's formula, followed by a syndrome re-check of the
//! corrected word.

use super::gf::GaloisField;
use super::{BlockStatus, FecReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RsCode {
    n: usize,
    k: usize,
    field: &'static GaloisField,
    /// Generator polynomial, highest-degree coefficient first (monic).
    generator: Vec<u16>,
}

impl RsCode {
    pub fn new(n: usize, k: usize, field: &'static GaloisField) -> Result<Self> {
        if k == 0 || k >= n || n > field.group_order() {
            return Err(Error::config(format!(
                "RS({n},{k}) is not a valid code over GF({})",
                field.order()
            )));
        }
        let mut generator = vec![1u16];
        for i in 1..=(n - k) {
            let root = field.alpha_pow(i as i64);
            let mut next = vec![0u16; generator.len() + 1];
            for (j, &c) in generator.iter().enumerate() {
                next[j] ^= c;
                next[j + 1] ^= field.mul(c, root);
            }
            generator = next;
        }
        Ok(Self {
            n,
            k,
            field,
            generator,
        })
    }

    /// RS(n,k) over GF(16) when n fits, otherwise shortened from GF(256).
    pub fn with_default_field(n: usize, k: usize) -> Result<Self> {
        let field = if n <= GaloisField::gf16().group_order() {
            GaloisField::gf16()
        } else {
            GaloisField::gf256()
        };
        Self::new(n, k, field)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity_len(&self) -> usize {
        self.n - self.k
    }

    /// Guaranteed correctable symbol errors, floor((n-k)/2).
    pub fn t(&self) -> usize {
        (self.n - self.k) / 2
    }

    pub fn field(&self) -> &'static GaloisField {
        self.field
    }

    pub fn generator(&self) -> &[u16] {
        &self.generator
    }

    /// Syndromes S_1 .. S_(n-k) of a received word.
    pub fn syndromes(&self, word: &[u16]) -> Vec<u16> {
        (1..=self.parity_len())
            .map(|i| {
                self.field
                    .eval_high_first(word, self.field.alpha_pow(i as i64))
            })
            .collect()
    }
}

pub fn rs_encode(message: &[u16], code: &RsCode) -> Result<Vec<u16>> {
    if message.len() != code.k {
        return Err(Error::framing(format!(
            "RS({},{}) message has {} symbols",
            code.n,
            code.k,
            message.len()
        )));
    }
    let f = code.field;
    let mask = (f.order() - 1) as u16;
    let parity_len = code.parity_len();
    // Long division of m(x) * x^(n-k) by the monic generator.
    let mut remainder = vec![0u16; parity_len];
    for &m in message {
        let feedback = (m & mask) ^ remainder[0];
        remainder.rotate_left(1);
        remainder[parity_len - 1] = 0;
        if feedback != 0 {
            for (r, &g) in remainder.iter_mut().zip(&code.generator[1..]) {
                *r ^= f.mul(g, feedback);
            }
        }
    }
    let mut codeword: Vec<u16> = message.iter().map(|&m| m & mask).collect();
    codeword.extend(remainder);
    Ok(codeword)
}

fn failure() -> Error {
    Error::DecodeFailure {
        report: FecReport {
            blocks: vec![BlockStatus::Failed],
        },
    }
}

/// Returns the message and the number of corrected symbols.
pub fn rs_decode(received: &[u16], code: &RsCode) -> Result<(Vec<u16>, usize)> {
    if received.len() != code.n {
        return Err(Error::framing(format!(
            "RS({},{}) block has {} symbols",
            code.n,
            code.k,
            received.len()
        )));
    }
    let f = code.field;
    let syndromes = code.syndromes(received);
    if syndromes.iter().all(|&s| s == 0) {
        return Ok((received[..code.k].to_vec(), 0));
    }

    let locator = berlekamp_massey(f, &syndromes);
    let degree = locator.len() - 1;
    if degree == 0 || degree > code.t() {
        return Err(failure());
    }

    // Chien search over transmitted positions. Index j carries x^(n-1-j).
    let mut positions = Vec::with_capacity(degree);
    for j in 0..code.n {
        let power = (code.n - 1 - j) as i64;
        if f.eval_low_first(&locator, f.alpha_pow(-power)) == 0 {
            positions.push(j);
        }
    }
    if positions.len() != degree {
        return Err(failure());
    }

    // Omega = S(x) * Lambda(x) mod x^(n-k).
    let two_t = syndromes.len();
    let mut omega = vec![0u16; two_t];
    for (i, &s) in syndromes.iter().enumerate() {
        for (j, &l) in locator.iter().enumerate() {
            if i + j < two_t {
                omega[i + j] ^= f.mul(s, l);
            }
        }
    }
    // Formal derivative: odd-degree terms survive in characteristic 2.
    let derivative: Vec<u16> = locator
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();

    let mut corrected = received.to_vec();
    for &j in &positions {
        let power = (code.n - 1 - j) as i64;
        let x_inv = f.alpha_pow(-power);
        let denom = f.eval_low_first(&derivative, x_inv);
        if denom == 0 {
            return Err(failure());
        }
        let magnitude = f.div(f.eval_low_first(&omega, x_inv), denom);
        corrected[j] ^= magnitude;
    }

    if code.syndromes(&corrected).iter().any(|&s| s != 0) {
        return Err(failure());
    }
    corrected.truncate(code.k);
    Ok((corrected, positions.len()))
}

/// Error-locator polynomial, lowest-degree coefficient first, trimmed to its
/// degree.
fn berlekamp_massey(f: &GaloisField, syndromes: &[u16]) -> Vec<u16> {
    let n = syndromes.len();
    let mut c = vec![0u16; n + 1];
    let mut b = vec![0u16; n + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last = 1u16;
    for i in 0..n {
        let mut d = syndromes[i];
        for j in 1..=l {
            d ^= f.mul(c[j], syndromes[i - j]);
        }
        if d == 0 {
            m += 1;
            continue;
        }
        let coef = f.div(d, last);
        let prev = c.clone();
        for j in 0..=n - m {
            c[j + m] ^= f.mul(coef, b[j]);
        }
        if 2 * l <= i {
            l = i + 1 - l;
            b = prev;
            last = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    c.truncate(l + 1);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rs(n: usize, k: usize) -> RsCode {
        RsCode::with_default_field(n, k).unwrap()
    }

    fn random_message(code: &RsCode, rng: &mut impl Rng) -> Vec<u16> {
        let q = code.field().order() as u16;
        (0..code.k()).map(|_| rng.random_range(0..q)).collect()
    }

    #[test]
    fn zero_message_gives_zero_codeword() {
        let code = rs(15, 11);
        assert_eq!(rs_encode(&[0; 11], &code).unwrap(), vec![0; 15]);
    }

    #[test]
    fn systematic_and_divisible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, k) in [(15, 7), (15, 11), (15, 2), (15, 4), (64, 32), (160, 128)] {
            let code = rs(n, k);
            for _ in 0..20 {
                let msg = random_message(&code, &mut rng);
                let cw = rs_encode(&msg, &code).unwrap();
                assert_eq!(cw.len(), n);
                assert_eq!(&cw[..k], &msg[..]);
                // Independent check: evaluate the codeword at every root.
                let f = code.field();
                for i in 1..=(n - k) {
                    let root = f.alpha_pow(i as i64);
                    let mut acc = 0u16;
                    for &c in &cw {
                        acc = f.mul(acc, root) ^ c;
                    }
                    assert_eq!(acc, 0, "RS({n},{k}) root {i}");
                }
            }
        }
    }

    #[test]
    fn wrong_lengths() {
        let code = rs(15, 11);
        assert!(matches!(rs_encode(&[0; 10], &code), Err(Error::Framing(_))));
        assert!(matches!(rs_decode(&[0; 14], &code), Err(Error::Framing(_))));
        assert!(RsCode::with_default_field(15, 15).is_err());
        assert!(RsCode::new(300, 200, GaloisField::gf256()).is_err());
    }

    #[test]
    fn clean_word() {
        let code = rs(15, 11);
        let msg: Vec<u16> = (1..=11).collect();
        let cw = rs_encode(&msg, &code).unwrap();
        assert_eq!(rs_decode(&cw, &code).unwrap(), (msg, 0));
    }

    #[test]
    fn every_single_error_is_corrected() {
        let code = rs(15, 11);
        let msg: Vec<u16> = vec![3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5];
        let cw = rs_encode(&msg, &code).unwrap();
        for pos in 0..15 {
            for err in 1..16u16 {
                let mut rx = cw.clone();
                rx[pos] ^= err;
                assert_eq!(rs_decode(&rx, &code).unwrap(), (msg.clone(), 1));
            }
        }
    }

    #[test]
    fn corrects_up_to_t_in_shortened_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, k) in [(15, 2), (15, 4), (15, 7), (64, 32), (160, 128)] {
            let code = rs(n, k);
            let q = code.field().order() as u16;
            for _ in 0..50 {
                let msg = random_message(&code, &mut rng);
                let cw = rs_encode(&msg, &code).unwrap();
                let errors = rng.random_range(1..=code.t());
                let mut rx = cw.clone();
                let mut hit = std::collections::HashSet::new();
                while hit.len() < errors {
                    let p = rng.random_range(0..n);
                    if hit.insert(p) {
                        rx[p] ^= rng.random_range(1..q);
                    }
                }
                assert_eq!(rs_decode(&rx, &code).unwrap(), (msg, errors), "RS({n},{k})");
            }
        }
    }

    #[test]
    fn beyond_t_never_silently_returns_wrong_word_close_to_received() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let code = rs(15, 11);
        for _ in 0..10_000 {
            let msg = random_message(&code, &mut rng);
            let cw = rs_encode(&msg, &code).unwrap();
            let mut rx = cw.clone();
            let mut hit = std::collections::HashSet::new();
            while hit.len() < 3 {
                let p = rng.random_range(0..15);
                if hit.insert(p) {
                    rx[p] ^= rng.random_range(1..16);
                }
            }
            match rs_decode(&rx, &code) {
                Err(Error::DecodeFailure { .. }) => {}
                Ok((decoded, count)) => {
                    // A miscorrection lands on a different codeword within t
                    // of the received word; it cannot be the transmitted one.
                    assert_ne!(decoded, msg);
                    assert!(count <= code.t());
                    let re = rs_encode(&decoded, &code).unwrap();
                    let dist = re.iter().zip(&cw).filter(|(a, b)| a != b).count();
                    assert!(dist >= 5);
                }
                Err(e) => panic!("unexpected {e:?}"),
            }
        }
    }
}
