use super::{BitChunk, GdError, HammingCode};

/// A chunk split into its deviation (syndrome), top bit and basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedChunk {
    pub syndrome: u32,
    pub msb: bool,
    pub basis: BitChunk,
}

fn check_len(chunk: &BitChunk, expected: usize) -> Result<(), GdError> {
    if chunk.len() != expected {
        return Err(GdError::LengthMismatch {
            expected,
            actual: chunk.len(),
        });
    }
    Ok(())
}

/// Splits an `n`-bit body into `(syndrome, basis)`: the syndrome locates the
/// one bit separating the body from its nearest codeword, and the basis is
/// the low `k` bits of that codeword.
pub fn gd_encode(body: &BitChunk, code: &HammingCode) -> Result<(u32, BitChunk), GdError> {
    check_len(body, code.n())?;
    let syndrome = code.remainder(body);
    let basis = match code.position_of(syndrome) {
        Some(position) if position < code.k() => {
            let mut basis = body.low_bits(code.k())?;
            basis.flip(position);
            basis
        }
        // Zero syndrome, or the flipped bit lies in the discarded parity bits.
        _ => body.low_bits(code.k())?,
    };
    Ok((syndrome, basis))
}

/// The `m` parity bits of the unique codeword whose low `k` bits are
/// `basis`: `basis(x) * x^m mod g(x)`.
pub fn parity_of(basis: &BitChunk, code: &HammingCode) -> Result<u32, GdError> {
    check_len(basis, code.k())?;
    Ok(code.shift_remainder(code.remainder(basis), code.m() as usize))
}

/// The full codeword `parity || basis`.
pub fn codeword_of(basis: &BitChunk, code: &HammingCode) -> Result<BitChunk, GdError> {
    let parity = parity_of(basis, code)?;
    let mut codeword = basis.widened(code.n())?;
    codeword.set_field(code.k(), code.m() as usize, parity as u64);
    Ok(codeword)
}

/// Inverse of [`gd_encode`].
pub fn gd_decode(syndrome: u32, basis: &BitChunk, code: &HammingCode) -> Result<BitChunk, GdError> {
    if syndrome >> code.m() != 0 {
        return Err(GdError::BadSyndrome {
            syndrome,
            m: code.m(),
        });
    }
    let mut body = codeword_of(basis, code)?;
    if let Some(position) = code.position_of(syndrome) {
        body.flip(position);
    }
    Ok(body)
}

/// Separates bit `2^m - 1` from the `n`-bit body below it.
pub fn split_chunk(chunk: &BitChunk, code: &HammingCode) -> Result<(bool, BitChunk), GdError> {
    check_len(chunk, code.chunk_bits())?;
    Ok((chunk.get(code.n()), chunk.low_bits(code.n())?))
}

pub fn join_chunk(msb: bool, body: &BitChunk, code: &HammingCode) -> Result<BitChunk, GdError> {
    check_len(body, code.n())?;
    let mut chunk = body.widened(code.chunk_bits())?;
    chunk.set(code.n(), msb);
    Ok(chunk)
}

impl HammingCode {
    /// Splits and encodes a full `2^m`-bit chunk.
    pub fn encode_chunk(&self, chunk: &BitChunk) -> Result<EncodedChunk, GdError> {
        let (msb, body) = split_chunk(chunk, self)?;
        let (syndrome, basis) = gd_encode(&body, self)?;
        Ok(EncodedChunk {
            syndrome,
            msb,
            basis,
        })
    }

    pub fn decode_chunk(&self, encoded: &EncodedChunk) -> Result<BitChunk, GdError> {
        let body = gd_decode(encoded.syndrome, &encoded.basis, self)?;
        join_chunk(encoded.msb, &body, self)
    }

    /// Basis of a full chunk, ignoring its syndrome and top bit.
    pub fn basis_of(&self, chunk: &BitChunk) -> Result<BitChunk, GdError> {
        self.encode_chunk(chunk).map(|e| e.basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdcore::build_code;

    fn chunk(s: &str) -> BitChunk {
        BitChunk::from_bit_str(s).unwrap()
    }

    #[test]
    fn encode_examples() {
        let code = build_code(3).unwrap();
        let cases = [
            ("0000100", 0b100, "0000"),
            ("1111111", 0b000, "1111"),
            ("0000000", 0b000, "0000"),
            ("1111011", 0b100, "1111"),
        ];
        for (body, syndrome, basis) in cases {
            assert_eq!(
                gd_encode(&chunk(body), &code).unwrap(),
                (syndrome, chunk(basis)),
                "{body}"
            );
        }
    }

    #[test]
    fn parity_examples() {
        let code = build_code(3).unwrap();
        assert_eq!(parity_of(&chunk("1111"), &code).unwrap(), 0b111);
        assert_eq!(parity_of(&chunk("0000"), &code).unwrap(), 0b000);
        assert_eq!(parity_of(&chunk("0001"), &code).unwrap(), 0b011);
        assert_eq!(
            codeword_of(&chunk("0001"), &code).unwrap(),
            chunk("0110001")
        );
    }

    #[test]
    fn decode_examples() {
        let code = build_code(3).unwrap();
        assert_eq!(
            gd_decode(0b100, &chunk("0000"), &code).unwrap(),
            chunk("0000100")
        );
        assert_eq!(
            gd_decode(0b000, &chunk("1111"), &code).unwrap(),
            chunk("1111111")
        );
        assert_eq!(
            gd_decode(0b110, &chunk("1111"), &code).unwrap(),
            chunk("1101111")
        );
        assert_eq!(
            gd_encode(&chunk("1101111"), &code).unwrap(),
            (0b110, chunk("1111"))
        );
    }

    #[test]
    fn length_and_syndrome_errors() {
        let code = build_code(3).unwrap();
        assert!(matches!(
            gd_encode(&chunk("000"), &code),
            Err(GdError::LengthMismatch {
                expected: 7,
                actual: 3
            })
        ));
        assert!(matches!(
            parity_of(&chunk("00000"), &code),
            Err(GdError::LengthMismatch { .. })
        ));
        assert!(matches!(
            gd_decode(0b1000, &chunk("0000"), &code),
            Err(GdError::BadSyndrome { .. })
        ));
        assert!(split_chunk(&chunk("0000000"), &code).is_err());
        assert!(join_chunk(true, &chunk("00000000"), &code).is_err());
    }

    #[test]
    fn split_join_examples() {
        let code3 = build_code(3).unwrap();
        assert_eq!(
            split_chunk(&chunk("10000001"), &code3).unwrap(),
            (true, chunk("0000001"))
        );
        assert_eq!(
            split_chunk(&chunk("00000000"), &code3).unwrap(),
            (false, chunk("0000000"))
        );
        assert_eq!(
            join_chunk(true, &chunk("0000001"), &code3).unwrap(),
            chunk("10000001")
        );
        assert_eq!(
            join_chunk(false, &chunk("0000000"), &code3).unwrap(),
            chunk("00000000")
        );

        let code8 = build_code(8).unwrap();
        let all_ones = BitChunk::ones(256).unwrap();
        let (msb, body) = split_chunk(&all_ones, &code8).unwrap();
        assert!(msb);
        assert_eq!(body, BitChunk::ones(255).unwrap());
        assert_eq!(join_chunk(msb, &body, &code8).unwrap(), all_ones);
    }

    #[test]
    fn exhaustive_roundtrip_m3_and_m4() {
        for m in [3, 4] {
            let code = build_code(m).unwrap();
            for value in 0..(1u64 << code.n()) {
                let body = BitChunk::from_u64(value, code.n()).unwrap();
                let (syndrome, basis) = gd_encode(&body, &code).unwrap();
                assert_eq!(gd_decode(syndrome, &basis, &code).unwrap(), body);
            }
        }
    }

    #[test]
    fn basis_classes_have_eight_members() {
        let code = build_code(3).unwrap();
        let mut class_sizes = [0usize; 16];
        for value in 0..128u64 {
            let body = BitChunk::from_u64(value, 7).unwrap();
            let (_, basis) = gd_encode(&body, &code).unwrap();
            class_sizes[basis.field(0, 4) as usize] += 1;
        }
        assert!(class_sizes.iter().all(|&size| size == 8));
    }

    #[test]
    fn zero_basis_class_matches_listing() {
        let code = build_code(3).unwrap();
        let zero_class = [
            "0000000", "0000001", "0000010", "0000100", "0001000", "0010000", "0100000", "1000000",
        ];
        let ones_class = [
            "1111111", "1111110", "1111101", "1111011", "1110111", "1101111", "1011111", "0111111",
        ];
        for body in zero_class {
            assert_eq!(gd_encode(&chunk(body), &code).unwrap().1, chunk("0000"));
        }
        for body in ones_class {
            assert_eq!(gd_encode(&chunk(body), &code).unwrap().1, chunk("1111"));
        }
    }

    #[test]
    fn chunk_level_helpers() {
        let code = build_code(3).unwrap();
        let encoded = code.encode_chunk(&chunk("00000100")).unwrap();
        assert_eq!(
            encoded,
            EncodedChunk {
                syndrome: 0b100,
                msb: false,
                basis: chunk("0000")
            }
        );
        assert_eq!(code.decode_chunk(&encoded).unwrap(), chunk("00000100"));
        assert_eq!(code.basis_of(&chunk("11111111")).unwrap(), chunk("1111"));
    }
}
