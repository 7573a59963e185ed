use std::fmt;

use super::GdError;

/// A fixed-length string of bits with polynomial indexing: bit `i` is the
/// coefficient of `x^i`, so bit `len - 1` is the most significant one.
///
/// The `Display` form prints the most significant bit first, which makes
/// `"0000001"` the chunk with only bit 0 set.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitChunk {
    len: usize,
    words: Vec<u64>,
}

impl BitChunk {
    pub fn zeros(len: usize) -> Result<Self, GdError> {
        if len == 0 {
            return Err(GdError::EmptyChunk);
        }
        Ok(BitChunk {
            len,
            words: vec![0; len.div_ceil(64)],
        })
    }

    pub fn ones(len: usize) -> Result<Self, GdError> {
        let mut chunk = Self::zeros(len)?;
        chunk.words.iter_mut().for_each(|w| *w = u64::MAX);
        chunk.clear_tail();
        Ok(chunk)
    }

    /// Chunk of `len` bits holding the low `len` bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Result<Self, GdError> {
        let mut chunk = Self::zeros(len)?;
        chunk.words[0] = value;
        chunk.clear_tail();
        Ok(chunk)
    }

    /// Parses a string of `0`/`1` characters, most significant bit first.
    /// Underscores are ignored.
    pub fn from_bit_str(s: &str) -> Result<Self, GdError> {
        let digits: Vec<u8> = s.bytes().filter(|&c| c != b'_').collect();
        let mut chunk = Self::zeros(digits.len())?;
        for (offset, c) in digits.iter().enumerate() {
            let index = digits.len() - 1 - offset;
            match c {
                b'0' => {}
                b'1' => chunk.set(index, true),
                _ => return Err(GdError::BadBitString(s.to_string())),
            }
        }
        Ok(chunk)
    }

    /// Reads `len` bits from big-endian bytes: the value is right-aligned, so
    /// when `len` is a multiple of 8 bit `len - 1` is the MSB of byte 0.
    /// Unused leading bits of byte 0 must be zero.
    pub fn from_be_bytes(bytes: &[u8], len: usize) -> Result<Self, GdError> {
        let expected = len.div_ceil(8);
        if bytes.len() != expected {
            return Err(GdError::LengthMismatch {
                expected: expected * 8,
                actual: bytes.len() * 8,
            });
        }
        let mut chunk = Self::zeros(len)?;
        for (i, &byte) in bytes.iter().rev().enumerate() {
            let bit = i * 8;
            chunk.words[bit / 64] |= (byte as u64) << (bit % 64);
        }
        if chunk.words.last().copied() != Some(chunk.last_word_masked()) {
            return Err(GdError::NonZeroPadding);
        }
        Ok(chunk)
    }

    /// Inverse of [`BitChunk::from_be_bytes`].
    pub fn to_be_bytes(&self) -> Vec<u8> {
        let count = self.len.div_ceil(8);
        (0..count).rev().map(|i| self.byte(i)).collect()
    }

    /// Big-endian hex, `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        (0..digits)
            .rev()
            .map(|i| {
                let bit = i * 4;
                let nibble = (self.words[bit / 64] >> (bit % 64)) & 0xF;
                char::from_digit(nibble as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self, GdError> {
        let bad = || GdError::BadHex(s.to_string());
        if s.is_empty() || !s.is_ascii() {
            return Err(bad());
        }
        let mut chunk = Self::zeros(len)?;
        for (i, c) in s.chars().rev().enumerate() {
            let nibble = c.to_digit(16).ok_or_else(bad)? as u64;
            if nibble == 0 {
                continue;
            }
            let bit = i * 4;
            if bit + (64 - nibble.leading_zeros() as usize) > len {
                return Err(bad());
            }
            chunk.words[bit / 64] |= nibble << (bit % 64);
        }
        Ok(chunk)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.len,
            "bit {index} out of range for {} bits",
            self.len
        );
        (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(
            index < self.len,
            "bit {index} out of range for {} bits",
            self.len
        );
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, index: usize) {
        assert!(
            index < self.len,
            "bit {index} out of range for {} bits",
            self.len
        );
        self.words[index / 64] ^= 1u64 << (index % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Byte `i` counted from the least significant end (bits `8i..8i+7`).
    pub(crate) fn byte(&self, i: usize) -> u8 {
        let bit = i * 8;
        (self.words[bit / 64] >> (bit % 64)) as u8
    }

    /// Bits `start..start+width` as an integer, `width <= 64`.
    pub fn field(&self, start: usize, width: usize) -> u64 {
        debug_assert!(width <= 64 && start + width <= self.len);
        if width == 0 {
            return 0;
        }
        let word = start / 64;
        let shift = start % 64;
        let mut value = self.words[word] >> shift;
        if shift != 0 && shift + width > 64 {
            value |= self.words[word + 1] << (64 - shift);
        }
        if width < 64 {
            value &= (1u64 << width) - 1;
        }
        value
    }

    /// Writes the low `width` bits of `value` into bits `start..start+width`.
    pub fn set_field(&mut self, start: usize, width: usize, value: u64) {
        debug_assert!(width <= 64 && start + width <= self.len);
        for i in 0..width {
            self.set(start + i, (value >> i) & 1 == 1);
        }
    }

    /// The low `width` bits as a new chunk.
    pub fn low_bits(&self, width: usize) -> Result<BitChunk, GdError> {
        if width > self.len {
            return Err(GdError::LengthMismatch {
                expected: self.len,
                actual: width,
            });
        }
        let mut out = Self::zeros(width)?;
        let count = out.words.len();
        out.words.copy_from_slice(&self.words[..count]);
        out.clear_tail();
        Ok(out)
    }

    /// A `width`-bit chunk whose low bits are `self`; the new high bits are
    /// zero.
    pub fn widened(&self, width: usize) -> Result<BitChunk, GdError> {
        if width < self.len {
            return Err(GdError::LengthMismatch {
                expected: self.len,
                actual: width,
            });
        }
        let mut out = Self::zeros(width)?;
        out.words[..self.words.len()].copy_from_slice(&self.words);
        Ok(out)
    }

    pub fn xor_assign(&mut self, other: &BitChunk) -> Result<(), GdError> {
        if other.len != self.len {
            return Err(GdError::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        self.words
            .iter_mut()
            .zip(&other.words)
            .for_each(|(a, b)| *a ^= b);
        Ok(())
    }

    /// Iterates bits from the most significant down to bit 0.
    pub fn iter_msb_first(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).rev().map(move |i| self.get(i))
    }

    fn last_word_masked(&self) -> u64 {
        let last = *self.words.last().unwrap();
        match self.len % 64 {
            0 => last,
            used => last & ((1u64 << used) - 1),
        }
    }

    fn clear_tail(&mut self) {
        let masked = self.last_word_masked();
        *self.words.last_mut().unwrap() = masked;
    }
}

impl fmt::Display for BitChunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter_msb_first() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitChunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitChunk({self})")
        } else {
            write!(f, "BitChunk[{}](0x{})", self.len, self.to_hex())
        }
    }
}
