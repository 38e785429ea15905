use std::sync::OnceLock;

/// GF(2^m) arithmetic over exp/log tables. Elements are stored in `u16` so
/// both supported fields share one type.
#[derive(Debug)]
pub struct GaloisField {
    bits: u32,
    order: usize,
    primitive_poly: u32,
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl GaloisField {
    /// Builds the tables for GF(2^bits) with the given primitive polynomial
    /// (including the leading term). Panics if the polynomial is not
    /// primitive.
    pub fn new(bits: u32, primitive_poly: u32) -> Self {
        let order = 1usize << bits;
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order];
        let mut x = 1u32;
        for i in 0..order - 1 {
            assert!(
                i == 0 || x != 1,
                "polynomial {primitive_poly:#x} is not primitive"
            );
            exp[i] = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & order as u32 != 0 {
                x ^= primitive_poly;
            }
        }
        assert_eq!(x, 1, "polynomial {primitive_poly:#x} is not primitive");
        for i in order - 1..2 * order {
            exp[i] = exp[i - (order - 1)];
        }
        Self {
            bits,
            order,
            primitive_poly,
            exp,
            log,
        }
    }

    /// GF(16), x^4 + x + 1.
    pub fn gf16() -> &'static GaloisField {
        static F: OnceLock<GaloisField> = OnceLock::new();
        F.get_or_init(|| GaloisField::new(4, 0b1_0011))
    }

    /// GF(256), x^8 + x^4 + x^3 + x^2 + 1.
    pub fn gf256() -> &'static GaloisField {
        static F: OnceLock<GaloisField> = OnceLock::new();
        F.get_or_init(|| GaloisField::new(8, 0x11d))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn group_order(&self) -> usize {
        self.order - 1
    }

    /// alpha^i for any integer i.
    pub fn alpha_pow(&self, i: i64) -> u16 {
        let q = self.group_order() as i64;
        self.exp[i.rem_euclid(q) as usize]
    }

    pub fn log(&self, a: u16) -> usize {
        debug_assert!(a != 0);
        self.log[a as usize] as usize
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    pub fn div(&self, a: u16, b: u16) -> u16 {
        assert!(b != 0, "division by zero in GF(2^{})", self.bits);
        if a == 0 {
            0
        } else {
            let q = self.group_order();
            self.exp[self.log[a as usize] as usize + q - self.log[b as usize] as usize]
        }
    }

    pub fn inv(&self, a: u16) -> u16 {
        self.div(1, a)
    }

    pub fn pow(&self, a: u16, e: usize) -> u16 {
        if e == 0 {
            1
        } else if a == 0 {
            0
        } else {
            self.alpha_pow((self.log(a) * e) as i64)
        }
    }

    /// Evaluates a polynomial given highest-degree coefficient first.
    pub fn eval_high_first(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }

    /// Evaluates a polynomial given lowest-degree coefficient first.
    pub fn eval_low_first(&self, poly: &[u16], x: u16) -> u16 {
        poly.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}
