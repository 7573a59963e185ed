//! Polynomial remainders over GF(2).
//!
//! The remainder used throughout is the *plain* one: `data(x) mod g(x)`, with
//! no `x^m` pre-multiplication, a zero initial register, no bit reflection
//! and no final XOR. This differs from the defaults of most CRC libraries:
//! the remainder of the one-bit chunk `x^0` is `1`, not `x^m mod g`.

use std::fmt;

use super::{BitChunk, GdError};

/// Degree-`m` binary polynomial `x^m + low(x)`, stored as its `m` low
/// coefficients (`x^{m-1} .. x^0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorPolynomial {
    degree: u32,
    low_bits: u32,
}

/// Hamming generator polynomials by parity-bit count. Where two polynomials
/// are known for one `m`, the first is the default.
const REGISTRY: &[(u32, &[u32])] = &[
    (3, &[0x3]),
    (4, &[0x3]),
    (5, &[0x05, 0x17]),
    (6, &[0x03]),
    (7, &[0x09]),
    (8, &[0x1D]),
    // x^9+x^4+1 and x^9+x^8+x^7+x^6+x^5+x+1.
    (9, &[0x011, 0x1E3]),
    (10, &[0x009]),
    (11, &[0x005]),
    (12, &[0x053]),
    (13, &[0x01B]),
    (14, &[0x143]),
    (15, &[0x003]),
];

pub const MIN_M: u32 = 3;
pub const MAX_M: u32 = 15;

impl GeneratorPolynomial {
    pub fn new(degree: u32, low_bits: u32) -> Result<Self, GdError> {
        if !(1..=24).contains(&degree) || low_bits >> degree != 0 {
            return Err(GdError::BadPolynomial { degree, low_bits });
        }
        Ok(GeneratorPolynomial { degree, low_bits })
    }

    /// Default registry polynomial for `m`.
    pub fn hamming(m: u32) -> Result<Self, GdError> {
        Self::hamming_variant(m, 0)
    }

    /// The `variant`-th registry polynomial for `m` (0 = default).
    pub fn hamming_variant(m: u32, variant: usize) -> Result<Self, GdError> {
        let (_, polys) = REGISTRY
            .iter()
            .find(|(deg, _)| *deg == m)
            .ok_or(GdError::UnsupportedM(m))?;
        let low = polys
            .get(variant)
            .ok_or(GdError::UnsupportedVariant { m, variant })?;
        Self::new(m, *low)
    }

    /// Every registry entry, alternates included.
    pub fn registry() -> impl Iterator<Item = GeneratorPolynomial> {
        REGISTRY.iter().flat_map(|(m, polys)| {
            polys.iter().map(move |&low| GeneratorPolynomial {
                degree: *m,
                low_bits: low,
            })
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn low_bits(&self) -> u32 {
        self.low_bits
    }

    /// All `m + 1` coefficients, including the leading one.
    pub fn full(&self) -> u32 {
        (1 << self.degree) | self.low_bits
    }

    pub(crate) fn mask(&self) -> u32 {
        (1 << self.degree) - 1
    }

    /// One step of long division: `(rem * x + bit) mod g`.
    #[inline]
    pub(crate) fn push_bit(&self, rem: u32, bit: bool) -> u32 {
        let shifted = (rem << 1) | bit as u32;
        if shifted >> self.degree & 1 == 1 {
            shifted ^ self.full()
        } else {
            shifted
        }
    }
}

impl fmt::Display for GeneratorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{}", self.degree)?;
        for power in (0..self.degree).rev() {
            if self.low_bits >> power & 1 == 1 {
                match power {
                    0 => write!(f, "+1")?,
                    1 => write!(f, "+x")?,
                    _ => write!(f, "+x^{power}")?,
                }
            }
        }
        Ok(())
    }
}

/// `data(x) mod g(x)`, bit by bit. Total over every non-empty chunk.
pub fn poly_mod(data: &BitChunk, g: &GeneratorPolynomial) -> u32 {
    data.iter_msb_first()
        .fold(0, |rem, bit| g.push_bit(rem, bit))
}

/// Byte-at-a-time remainder engine for one generator.
///
/// `table[t] = t(x) * x^m mod g(x)` reduces the eight bits that overflow the
/// register after shifting a whole byte in.
#[derive(Clone, Debug)]
pub(crate) struct Reducer {
    g: GeneratorPolynomial,
    table: Box<[u32; 256]>,
}

impl Reducer {
    pub fn new(g: GeneratorPolynomial) -> Self {
        let mut table = Box::new([0u32; 256]);
        for (t, slot) in table.iter_mut().enumerate() {
            let mut rem = 0;
            for i in (0..8).rev() {
                rem = g.push_bit(rem, (t >> i) & 1 == 1);
            }
            for _ in 0..g.degree {
                rem = g.push_bit(rem, false);
            }
            *slot = rem;
        }
        Reducer { g, table }
    }

    #[inline]
    fn push_byte(&self, rem: u32, byte: u8) -> u32 {
        let m = self.g.degree;
        let wide = (rem << 8) | byte as u32;
        (wide & self.g.mask()) ^ self.table[(wide >> m) as usize]
    }

    /// Same value as [`poly_mod`].
    pub fn remainder(&self, data: &BitChunk) -> u32 {
        let len = data.len();
        let whole_bytes = len / 8;
        let mut rem = 0;
        for i in (whole_bytes * 8..len).rev() {
            rem = self.g.push_bit(rem, data.get(i));
        }
        for i in (0..whole_bytes).rev() {
            rem = self.push_byte(rem, data.byte(i));
        }
        rem
    }

    /// `rem(x) * x^shift mod g(x)`.
    pub fn shift(&self, mut rem: u32, shift: usize) -> u32 {
        for _ in 0..shift / 8 {
            rem = self.push_byte(rem, 0);
        }
        for _ in 0..shift % 8 {
            rem = self.g.push_bit(rem, false);
        }
        rem
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crc3() -> GeneratorPolynomial {
        GeneratorPolynomial::new(3, 0x3).unwrap()
    }

    fn chunk(s: &str) -> BitChunk {
        BitChunk::from_bit_str(s).unwrap()
    }

    #[test]
    fn plain_remainder_convention() {
        assert_eq!(poly_mod(&chunk("0000001"), &crc3()), 0b001);
        assert_eq!(poly_mod(&chunk("0000000"), &crc3()), 0b000);
        assert_eq!(poly_mod(&chunk("1000000"), &crc3()), 0b101);
        assert_eq!(poly_mod(&chunk("1000001"), &crc3()), 0b100);
    }

    #[test]
    fn registry_rejects_unknown_m() {
        assert!(matches!(
            GeneratorPolynomial::hamming(2),
            Err(GdError::UnsupportedM(2))
        ));
        assert!(matches!(
            GeneratorPolynomial::hamming(16),
            Err(GdError::UnsupportedM(16))
        ));
        assert_eq!(GeneratorPolynomial::hamming(5).unwrap().low_bits(), 0x05);
        assert_eq!(
            GeneratorPolynomial::hamming_variant(5, 1)
                .unwrap()
                .low_bits(),
            0x17
        );
        assert!(GeneratorPolynomial::hamming_variant(8, 1).is_err());
        assert_eq!(GeneratorPolynomial::registry().count(), 15);
    }

    #[test]
    fn registry_constant_terms_are_one() {
        for g in GeneratorPolynomial::registry() {
            assert_eq!(g.low_bits() & 1, 1, "{g}");
        }
    }

    #[test]
    fn display_matches_conventional_notation() {
        assert_eq!(crc3().to_string(), "x^3+x+1");
        assert_eq!(
            GeneratorPolynomial::hamming(8).unwrap().to_string(),
            "x^8+x^4+x^3+x^2+1"
        );
        assert_eq!(
            GeneratorPolynomial::hamming_variant(9, 1)
                .unwrap()
                .to_string(),
            "x^9+x^8+x^7+x^6+x^5+x+1"
        );
    }

    #[test]
    fn bad_polynomials() {
        assert!(GeneratorPolynomial::new(3, 0x8).is_err());
        assert!(GeneratorPolynomial::new(0, 0).is_err());
    }

    #[test]
    fn reducer_agrees_with_bitwise_division() {
        for g in GeneratorPolynomial::registry() {
            let reducer = Reducer::new(g);
            for len in [1usize, 7, 8, 9, 63, 64, 65, 255, 256] {
                let mut data = BitChunk::zeros(len).unwrap();
                for i in (0..len).step_by(3) {
                    data.set(i, true);
                }
                assert_eq!(
                    reducer.remainder(&data),
                    poly_mod(&data, &g),
                    "{g} len {len}"
                );
            }
        }
    }

    #[test]
    fn shift_is_multiplication_by_power_of_x() {
        let g = GeneratorPolynomial::hamming(8).unwrap();
        let reducer = Reducer::new(g);
        let data = BitChunk::from_u64(0xDEAD_BEEF, 40).unwrap();
        let widened = {
            let mut wide = BitChunk::zeros(51).unwrap();
            for i in 0..40 {
                wide.set(i + 11, data.get(i));
            }
            wide
        };
        assert_eq!(
            reducer.shift(poly_mod(&data, &g), 11),
            poly_mod(&widened, &g)
        );
    }
}
