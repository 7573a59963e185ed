//! Stateless generalized-deduplication codec over Hamming codes.
//!
//! A `2^m`-bit chunk is split into its top bit and an `n = 2^m - 1` bit body.
//! The body's remainder modulo the code's generator polynomial is the
//! syndrome; flipping the bit it points at yields the nearest codeword, whose
//! low `k` bits are the basis. Decoding recomputes the parity bits from the
//! basis and flips the same bit back.

mod bits;
mod code;
mod poly;
mod transform;

use thiserror::Error;

pub use bits::BitChunk;
pub use code::{build_code, HammingCode};
pub use poly::{poly_mod, GeneratorPolynomial, MAX_M, MIN_M};
pub use transform::{
    codeword_of, gd_decode, gd_encode, join_chunk, parity_of, split_chunk, EncodedChunk,
};

#[derive(Debug, Error)]
pub enum GdError {
    #[error("unsupported parameter m={0} (supported: 3..=15)")]
    UnsupportedM(u32),
    #[error("m={m} has no generator polynomial variant {variant}")]
    UnsupportedVariant { m: u32, variant: usize },
    #[error("invalid generator polynomial: degree {degree}, low bits {low_bits:#x}")]
    BadPolynomial { degree: u32, low_bits: u32 },
    #[error("generator {generator} does not give a perfect single-error code")]
    NotPerfect { generator: GeneratorPolynomial },
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("syndrome {syndrome:#x} does not fit in {m} bits")]
    BadSyndrome { syndrome: u32, m: u32 },
    #[error("chunks must hold at least one bit")]
    EmptyChunk,
    #[error("not a bit string: {0:?}")]
    BadBitString(String),
    #[error("not a hex value of the expected width: {0:?}")]
    BadHex(String),
    #[error("unused high bits of a byte-serialized chunk are set")]
    NonZeroPadding,
}
