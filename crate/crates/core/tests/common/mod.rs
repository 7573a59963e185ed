//! Reference implementations used as test oracles. They work on plain
//! `Vec<bool>` and `u64` arithmetic and share no code with the library.

#![allow(dead_code)]

use gdline::BitChunk;

/// Bits of `chunk`, index i holding the coefficient of x^i.
pub fn to_bools(chunk: &BitChunk) -> Vec<bool> {
    (0..chunk.len()).map(|i| chunk.get(i)).collect()
}

/// Schoolbook long division over GF(2); `generator` includes the leading
/// coefficient x^m.
pub fn rem(bits: &[bool], generator: u64, m: u32) -> u32 {
    let mut work = bits.to_vec();
    for top in (m as usize..work.len()).rev() {
        if work[top] {
            for j in 0..=m as usize {
                if generator >> j & 1 == 1 {
                    let idx = top - m as usize + j;
                    work[idx] = !work[idx];
                }
            }
        }
    }
    (0..(m as usize).min(work.len()))
        .filter(|&i| work[i])
        .fold(0, |acc, i| acc | 1 << i)
}

/// Searches for the unique word within distance one of `body` that the
/// generator divides. Returns the syndrome and the low `n - m` bits of that
/// word.
pub fn encode(body: &[bool], generator: u64, m: u32) -> (u32, Vec<bool>) {
    let syndrome = rem(body, generator, m);
    let mut candidates = Vec::new();
    for flip in std::iter::once(None).chain((0..body.len()).map(Some)) {
        let mut word = body.to_vec();
        if let Some(i) = flip {
            word[i] = !word[i];
        }
        if rem(&word, generator, m) == 0 {
            candidates.push(word);
        }
    }
    assert_eq!(
        candidates.len(),
        1,
        "perfect code has exactly one nearest codeword"
    );
    let k = body.len() - m as usize;
    (syndrome, candidates.remove(0)[..k].to_vec())
}

/// True when x^0 .. x^(2^m - 2) all leave distinct nonzero remainders.
pub fn is_perfect(low_bits: u64, m: u32) -> bool {
    let n = (1u64 << m) - 1;
    let mut seen = vec![false; 1 << m];
    let mut r = 1u64;
    for _ in 0..n {
        if r == 0 || seen[r as usize] {
            return false;
        }
        seen[r as usize] = true;
        r <<= 1;
        if r >> m & 1 == 1 {
            r = (r ^ (1 << m)) ^ low_bits;
        }
    }
    true
}

/// Parses an MSB-first bit string into coefficient order.
pub fn bools(s: &str) -> Vec<bool> {
    s.chars().rev().map(|c| c == '1').collect()
}

pub fn bool_str(bits: &[bool]) -> String {
    bits.iter()
        .rev()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}
