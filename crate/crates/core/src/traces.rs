//! Chunk traces: synthetic generation, file chunking and the `GDTRACE`
//! binary format.
//!
//! File layout (little-endian integers):
//!
//! ```text
//! 0   8   magic "GDTRACE\0"
//! 8   4   chunk_bits
//! 12  4   chunk_count
//! 16  ..  chunk_count * chunk_bits / 8 bytes of chunks, MSB first
//! ..  8   optional: original byte length of a chunked file
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gdcore::{build_code, codeword_of, join_chunk, BitChunk, GdError};
use crate::pcap::{read_pcap, PcapError};

pub const MAGIC: &[u8; 8] = b"GDTRACE\0";
pub const HEADER_LEN: usize = 16;

/// Chunk count of the full-scale synthetic experiment.
pub const DEFAULT_CHUNK_COUNT: usize = 3_124_000;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("invalid trace spec: {0}")]
    InvalidSpec(String),
    #[error("chunk size must be a positive multiple of 8 bits, got {0}")]
    BadChunkBits(usize),
    #[error("input is empty")]
    EmptyInput,
    #[error("not a GDTRACE file")]
    BadMagic,
    #[error("trace file truncated or has trailing garbage")]
    TruncatedFile,
    #[error("chunk has {actual} bits, trace holds {expected}-bit chunks")]
    ChunkLength { expected: usize, actual: usize },
    #[error("packet {index} carries {len} payload bytes, fewer than one chunk")]
    ShortPacket { index: usize, len: usize },
    #[error(transparent)]
    Pcap(#[from] PcapError),
    #[error(transparent)]
    Codec(#[from] GdError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered sequence of equally sized chunks, stored back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    chunk_bits: usize,
    data: Vec<u8>,
    original_len: Option<u64>,
}

impl Trace {
    pub fn new(chunk_bits: usize) -> Result<Self, TraceError> {
        if chunk_bits == 0 || !chunk_bits.is_multiple_of(8) || chunk_bits > u32::MAX as usize {
            return Err(TraceError::BadChunkBits(chunk_bits));
        }
        Ok(Trace {
            chunk_bits,
            data: Vec::new(),
            original_len: None,
        })
    }

    pub fn chunk_bits(&self) -> usize {
        self.chunk_bits
    }

    pub fn chunk_bytes(&self) -> usize {
        self.chunk_bits / 8
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.chunk_bytes()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Byte length of the file this trace was chunked from, if any.
    pub fn original_len(&self) -> Option<u64> {
        self.original_len
    }

    pub fn push(&mut self, chunk: &BitChunk) -> Result<(), TraceError> {
        if chunk.len() != self.chunk_bits {
            return Err(TraceError::ChunkLength {
                expected: self.chunk_bits,
                actual: chunk.len(),
            });
        }
        self.data.extend(chunk.to_be_bytes());
        Ok(())
    }

    pub fn push_bytes(&mut self, bytes: &[u8]) -> Result<(), TraceError> {
        if bytes.len() != self.chunk_bytes() {
            return Err(TraceError::ChunkLength {
                expected: self.chunk_bits,
                actual: bytes.len() * 8,
            });
        }
        self.data.extend_from_slice(bytes);
        Ok(())
    }

    pub fn chunk_slice(&self, index: usize) -> &[u8] {
        let size = self.chunk_bytes();
        &self.data[index * size..(index + 1) * size]
    }

    pub fn chunk(&self, index: usize) -> BitChunk {
        BitChunk::from_be_bytes(self.chunk_slice(index), self.chunk_bits)
            .expect("stored chunks have the trace width")
    }

    pub fn iter(&self) -> impl Iterator<Item = BitChunk> + '_ {
        self.data
            .chunks_exact(self.chunk_bytes())
            .map(|bytes| BitChunk::from_be_bytes(bytes, self.chunk_bits).expect("whole chunk"))
    }

    /// All chunk payloads concatenated in trace order.
    pub fn payload_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Payloads trimmed to the original file length when known.
    pub fn reassembled(&self) -> &[u8] {
        match self.original_len {
            Some(len) => &self.data[..len as usize],
            None => &self.data,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() + 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.chunk_bits as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.data);
        if let Some(len) = self.original_len {
            out.extend_from_slice(&len.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TraceError> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(TraceError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(TraceError::TruncatedFile);
        }
        let chunk_bits = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let mut trace = Trace::new(chunk_bits)?;
        let body_len = count
            .checked_mul(trace.chunk_bytes())
            .ok_or(TraceError::TruncatedFile)?;
        let rest = &bytes[HEADER_LEN..];
        let original_len = match rest.len().checked_sub(body_len) {
            Some(0) => None,
            Some(8) => {
                let len = u64::from_le_bytes(rest[body_len..].try_into().unwrap());
                if len > body_len as u64 {
                    return Err(TraceError::TruncatedFile);
                }
                Some(len)
            }
            _ => return Err(TraceError::TruncatedFile),
        };
        trace.data = rest[..body_len].to_vec();
        trace.original_len = original_len;
        Ok(trace)
    }
}

pub fn write_trace(path: impl AsRef<Path>, trace: &Trace) -> Result<(), TraceError> {
    fs::write(path, trace.to_bytes())?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    Trace::from_bytes(&fs::read(path)?)
}

/// Splits `bytes` into `chunk_bits / 8`-byte chunks; the last chunk is
/// zero-filled at its end and the original length is kept for reassembly.
pub fn chunk_file(bytes: &[u8], chunk_bits: usize) -> Result<Trace, TraceError> {
    let mut trace = Trace::new(chunk_bits)?;
    if bytes.is_empty() {
        return Err(TraceError::EmptyInput);
    }
    let size = trace.chunk_bytes();
    trace.data.reserve(bytes.len().div_ceil(size) * size);
    trace.data.extend_from_slice(bytes);
    let padded = bytes.len().div_ceil(size) * size;
    trace.data.resize(padded, 0);
    trace.original_len = Some(bytes.len() as u64);
    Ok(trace)
}

/// Takes the first chunk of every Ethernet payload in a pcap capture.
pub fn chunk_pcap(pcap: &[u8], chunk_bits: usize) -> Result<Trace, TraceError> {
    let mut trace = Trace::new(chunk_bits)?;
    let size = trace.chunk_bytes();
    for (index, packet) in read_pcap(pcap)?.iter().enumerate() {
        let payload = packet.ethernet_payload().unwrap_or(&[]);
        if payload.len() < size {
            return Err(TraceError::ShortPacket {
                index,
                len: payload.len(),
            });
        }
        trace.push_bytes(&payload[..size])?;
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisDistribution {
    Uniform,
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsbPolicy {
    Random,
    Fixed(bool),
}

/// Parameters of the synthetic sensor-like trace model: a small set of
/// random bases, each chunk a codeword of one of them with at most one bit
/// flipped, plus an independent top bit.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSpec {
    pub seed: u64,
    pub chunk_count: usize,
    pub m: u32,
    pub distinct_bases: usize,
    /// Probability that a chunk is emitted with no bit flipped.
    pub codeword_prob: f64,
    pub basis_distribution: BasisDistribution,
    pub msb: MsbPolicy,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            seed: 0,
            chunk_count: DEFAULT_CHUNK_COUNT,
            m: 8,
            distinct_bases: 100,
            codeword_prob: 0.2,
            basis_distribution: BasisDistribution::Uniform,
            msb: MsbPolicy::Random,
        }
    }
}

impl TraceSpec {
    pub fn chunk_bits(&self) -> usize {
        1 << self.m
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let invalid = |s: String| Err(TraceError::InvalidSpec(s));
        if !(crate::gdcore::MIN_M..=crate::gdcore::MAX_M).contains(&self.m) {
            return invalid(format!("unsupported m={}", self.m));
        }
        if self.distinct_bases == 0 {
            return invalid("distinct_bases must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.codeword_prob) {
            return invalid(format!(
                "codeword_prob {} outside [0, 1]",
                self.codeword_prob
            ));
        }
        if self.chunk_count > u32::MAX as usize {
            return invalid("chunk_count exceeds the file format's 32-bit count".into());
        }
        let k = (1usize << self.m) - 1 - self.m as usize;
        if k < usize::BITS as usize - 1 && self.distinct_bases > 1usize << k {
            return invalid(format!(
                "{} distinct bases requested but only 2^{k} exist",
                self.distinct_bases
            ));
        }
        Ok(())
    }
}

/// Draws the spec's distinct random bases in generation order.
pub fn draw_bases(spec: &TraceSpec, rng: &mut impl RngCore) -> Result<Vec<BitChunk>, TraceError> {
    let code = build_code(spec.m)?;
    let k = code.k();
    let mut seen = HashSet::with_capacity(spec.distinct_bases);
    let mut bases = Vec::with_capacity(spec.distinct_bases);
    let mut bytes = vec![0u8; k.div_ceil(8)];
    while bases.len() < spec.distinct_bases {
        rng.fill_bytes(&mut bytes);
        if k % 8 != 0 {
            bytes[0] &= (1u8 << (k % 8)) - 1;
        }
        let basis = BitChunk::from_be_bytes(&bytes, k)?;
        if seen.insert(basis.clone()) {
            bases.push(basis);
        }
    }
    Ok(bases)
}

/// Deterministically generates the trace described by `spec`.
pub fn gen_synthetic(spec: &TraceSpec) -> Result<Trace, TraceError> {
    spec.validate()?;
    let code = build_code(spec.m).map_err(|e| TraceError::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bases = draw_bases(spec, &mut rng)?;
    let templates: Vec<Vec<u8>> = bases
        .iter()
        .map(|basis| {
            let body = codeword_of(basis, &code)?;
            Ok(join_chunk(false, &body, &code)?.to_be_bytes())
        })
        .collect::<Result<_, GdError>>()?;

    let mut trace = Trace::new(code.chunk_bits())?;
    let size = trace.chunk_bytes();
    trace.data.reserve(spec.chunk_count * size);
    for i in 0..spec.chunk_count {
        let which = match spec.basis_distribution {
            BasisDistribution::Uniform => rng.gen_range(0..bases.len()),
            BasisDistribution::RoundRobin => i % bases.len(),
        };
        let start = trace.data.len();
        trace.data.extend_from_slice(&templates[which]);
        let chunk = &mut trace.data[start..];
        if !rng.gen_bool(spec.codeword_prob) {
            let bit = rng.gen_range(0..code.n());
            chunk[size - 1 - bit / 8] ^= 1 << (bit % 8);
        }
        let msb = match spec.msb {
            MsbPolicy::Random => rng.gen_bool(0.5),
            MsbPolicy::Fixed(v) => v,
        };
        if msb {
            chunk[0] |= 0x80;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> TraceSpec {
        TraceSpec {
            seed: 7,
            chunk_count: 500,
            m: 4,
            distinct_bases: 5,
            ..TraceSpec::default()
        }
    }

    #[test]
    fn degenerate_spec_repeats_one_chunk() {
        let spec = TraceSpec {
            distinct_bases: 1,
            codeword_prob: 1.0,
            msb: MsbPolicy::Fixed(false),
            chunk_count: 50,
            ..TraceSpec::default()
        };
        let trace = gen_synthetic(&spec).unwrap();
        let first = trace.chunk(0);
        assert!(trace.iter().all(|c| c == first));
        assert!(!first.get(255));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_synthetic(&small_spec()).unwrap();
        let b = gen_synthetic(&small_spec()).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let other = gen_synthetic(&TraceSpec {
            seed: 8,
            ..small_spec()
        })
        .unwrap();
        assert_ne!(a.to_bytes(), other.to_bytes());
    }

    #[test]
    fn chunks_are_near_drawn_bases() {
        let spec = small_spec();
        let trace = gen_synthetic(&spec).unwrap();
        let bases = draw_bases(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        let code = build_code(spec.m).unwrap();
        for chunk in trace.iter() {
            assert!(bases.contains(&code.basis_of(&chunk).unwrap()));
        }
    }

    #[test]
    fn round_robin_cycles() {
        let spec = TraceSpec {
            basis_distribution: BasisDistribution::RoundRobin,
            codeword_prob: 1.0,
            msb: MsbPolicy::Fixed(true),
            ..small_spec()
        };
        let trace = gen_synthetic(&spec).unwrap();
        assert_eq!(trace.chunk(0), trace.chunk(5));
        assert_ne!(trace.chunk(0), trace.chunk(1));
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            TraceSpec {
                distinct_bases: 0,
                ..small_spec()
            },
            TraceSpec {
                codeword_prob: 1.5,
                ..small_spec()
            },
            TraceSpec {
                m: 3,
                distinct_bases: 17,
                ..small_spec()
            },
            TraceSpec {
                m: 2,
                ..small_spec()
            },
        ] {
            assert!(gen_synthetic(&spec).is_err(), "{spec:?}");
        }
        let all_sixteen = TraceSpec {
            m: 3,
            distinct_bases: 16,
            ..small_spec()
        };
        assert_eq!(gen_synthetic(&all_sixteen).unwrap().len(), 500);
    }

    #[test]
    fn chunking_files() {
        assert_eq!(chunk_file(&[7u8; 64], 256).unwrap().len(), 2);
        let dns = chunk_file(&[0xAB; 34], 256).unwrap();
        assert_eq!(dns.len(), 2);
        assert_eq!(&dns.chunk_slice(1)[..2], &[0xAB, 0xAB]);
        assert!(dns.chunk_slice(1)[2..].iter().all(|&b| b == 0));
        assert_eq!(dns.chunk_slice(1)[2..].len(), 30);
        assert_eq!(dns.reassembled(), &[0xAB; 34][..]);
        let zeros = chunk_file(&[0u8; 32], 256).unwrap();
        assert_eq!(zeros.len(), 1);
        assert_eq!(zeros.chunk(0), BitChunk::zeros(256).unwrap());
        assert!(matches!(chunk_file(&[], 256), Err(TraceError::EmptyInput)));
        assert!(matches!(
            chunk_file(&[1], 12),
            Err(TraceError::BadChunkBits(12))
        ));
    }

    #[test]
    fn file_format_sizes() {
        let empty = Trace::new(256).unwrap();
        assert_eq!(empty.to_bytes().len(), 16);
        let mut one = Trace::new(256).unwrap();
        one.push(&BitChunk::ones(256).unwrap()).unwrap();
        let bytes = one.to_bytes();
        assert_eq!(bytes.len(), 48);
        assert_eq!(&bytes[..8], b"GDTRACE\0");
        assert_eq!(&bytes[8..12], &256u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(Trace::from_bytes(&bytes).unwrap(), one);
    }

    #[test]
    fn file_format_errors() {
        let mut bytes = Trace::new(256).unwrap().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            Trace::from_bytes(&bytes),
            Err(TraceError::BadMagic)
        ));
        let mut one = Trace::new(256).unwrap();
        one.push(&BitChunk::ones(256).unwrap()).unwrap();
        let bytes = one.to_bytes();
        assert!(matches!(
            Trace::from_bytes(&bytes[..40]),
            Err(TraceError::TruncatedFile)
        ));
        assert!(matches!(
            Trace::from_bytes(&bytes[..12]),
            Err(TraceError::TruncatedFile)
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            Trace::from_bytes(&extra),
            Err(TraceError::TruncatedFile)
        ));
    }

    #[test]
    fn original_length_survives_file_roundtrip() {
        let trace = chunk_file(b"hello world", 64).unwrap();
        let bytes = trace.to_bytes();
        assert_eq!(bytes.len(), 16 + 16 + 8);
        let back = Trace::from_bytes(&bytes).unwrap();
        assert_eq!(back.reassembled(), b"hello world");
    }

    #[test]
    fn pcap_import_takes_first_chunk_of_each_payload() {
        use crate::pcap::PcapWriter;
        use crate::time::SimTime;
        let mut writer = PcapWriter::new(Vec::new()).unwrap();
        writer
            .write_ethernet(SimTime(0), 0x0800, &[1u8; 40])
            .unwrap();
        writer
            .write_ethernet(SimTime(1), 0x0800, &[2u8; 32])
            .unwrap();
        let bytes = writer.into_inner();
        let trace = chunk_pcap(&bytes, 256).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.chunk_slice(0), &[1u8; 32]);
        assert!(matches!(
            chunk_pcap(&bytes, 512),
            Err(TraceError::ShortPacket { index: 0, len: 40 })
        ));
    }
}
