use super::poly::Reducer;
use super::{BitChunk, GdError, GeneratorPolynomial};

const NO_POSITION: u32 = u32::MAX;

/// A `(2^m - 1, 2^m - m - 1)` Hamming code realized through polynomial
/// remainders, with the table mapping each nonzero syndrome to the single
/// bit position that produces it.
#[derive(Clone, Debug)]
pub struct HammingCode {
    m: u32,
    n: usize,
    k: usize,
    generator: GeneratorPolynomial,
    /// Indexed by syndrome; entry 0 is unused.
    positions: Vec<u32>,
    reducer: Reducer,
}

/// Builds the code for `m` using the default registry polynomial.
pub fn build_code(m: u32) -> Result<HammingCode, GdError> {
    HammingCode::new(m)
}

impl HammingCode {
    pub fn new(m: u32) -> Result<Self, GdError> {
        Self::with_generator(GeneratorPolynomial::hamming(m)?)
    }

    /// Builds the code for an arbitrary degree-`m` generator. Fails with
    /// [`GdError::NotPerfect`] unless the single-bit remainders cover every
    /// nonzero syndrome exactly once, which holds iff `g` is primitive.
    pub fn with_generator(generator: GeneratorPolynomial) -> Result<Self, GdError> {
        let m = generator.degree();
        if !(2..=20).contains(&m) {
            return Err(GdError::UnsupportedM(m));
        }
        let n = (1usize << m) - 1;
        let mut positions = vec![NO_POSITION; 1 << m];
        // x^position mod g, advanced one power at a time.
        let mut remainder = 1u32;
        for position in 0..n {
            let syndrome = remainder as usize;
            if syndrome == 0 || positions[syndrome] != NO_POSITION {
                return Err(GdError::NotPerfect { generator });
            }
            positions[syndrome] = position as u32;
            remainder = generator.push_bit(remainder, false);
        }
        Ok(HammingCode {
            m,
            n,
            k: n - m as usize,
            generator,
            positions,
            reducer: Reducer::new(generator),
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Codeword length `2^m - 1`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Basis length `n - m`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Full chunk length `2^m`: the body plus its most significant bit.
    pub fn chunk_bits(&self) -> usize {
        self.n + 1
    }

    pub fn generator(&self) -> GeneratorPolynomial {
        self.generator
    }

    /// Bit position whose single-bit error yields `syndrome`; `None` for the
    /// zero syndrome.
    pub fn position_of(&self, syndrome: u32) -> Option<usize> {
        match self.positions.get(syndrome as usize) {
            Some(&p) if p != NO_POSITION => Some(p as usize),
            _ => None,
        }
    }

    /// `(syndrome, position)` pairs ordered by position.
    pub fn syndrome_table(&self) -> Vec<(u32, usize)> {
        let mut entries: Vec<(u32, usize)> = self
            .positions
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != NO_POSITION)
            .map(|(s, &p)| (s as u32, p as usize))
            .collect();
        entries.sort_by_key(|&(_, p)| p);
        entries
    }

    /// Text dump, one `syndrome -> position` line per entry with the
    /// syndrome in binary, ordered by position.
    pub fn table_dump(&self) -> String {
        let width = self.m as usize;
        self.syndrome_table()
            .into_iter()
            .map(|(s, p)| format!("{s:0width$b} -> {p}\n"))
            .collect()
    }

    /// Table-driven remainder of an arbitrary-length chunk.
    pub fn remainder(&self, data: &BitChunk) -> u32 {
        self.reducer.remainder(data)
    }

    pub(crate) fn shift_remainder(&self, rem: u32, shift: usize) -> u32 {
        self.reducer.shift(rem, shift)
    }
}
