//! Payload layouts of the three packet kinds.
//!
//! Fields are packed most significant bit first, in order, with zero bits
//! appended to reach a byte boundary:
//!
//! * `RAW`: the `2^m`-bit chunk, bit `2^m - 1` first.
//! * `SYN_BASIS`: syndrome (`m`), [8 zero bits when padding is on],
//!   msb (1), basis (`k`, bit `k - 1` first).
//! * `SYN_ID`: syndrome (`m`), msb (1), id (`id_width`).
//!
//! With `m = 8` and 15-bit ids these are 32, 32 (33 padded) and 3 bytes.

use std::fmt;

use crate::dictionary::BasisId;
use crate::gdcore::{BitChunk, HammingCode};
use crate::time::SimTime;

use super::PipelineError;

/// Packet kind; the discriminant is the on-wire type number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameKind {
    Raw = 1,
    SynBasis = 2,
    SynId = 3,
}

impl FrameKind {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(FrameKind::Raw),
            2 => Some(FrameKind::SynBasis),
            3 => Some(FrameKind::SynId),
            _ => None,
        }
    }

    /// EtherType used when frames are wrapped in Ethernet for capture files.
    pub fn ethertype(self) -> u16 {
        match self {
            FrameKind::Raw => 0x88B5,
            FrameKind::SynBasis => 0x88B6,
            FrameKind::SynId => 0x88B7,
        }
    }

    pub fn from_ethertype(ethertype: u16) -> Option<Self> {
        match ethertype {
            0x88B5 => Some(FrameKind::Raw),
            0x88B6 => Some(FrameKind::SynBasis),
            0x88B7 => Some(FrameKind::SynId),
            _ => None,
        }
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameKind::Raw => "RAW",
            FrameKind::SynBasis => "SYN_BASIS",
            FrameKind::SynId => "SYN_ID",
        })
    }
}

/// Decoded contents of a frame payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameFields {
    Raw {
        chunk: BitChunk,
    },
    SynBasis {
        syndrome: u32,
        msb: bool,
        basis: BitChunk,
    },
    SynId {
        syndrome: u32,
        msb: bool,
        id: BasisId,
    },
}

impl FrameFields {
    pub fn kind(&self) -> FrameKind {
        match self {
            FrameFields::Raw { .. } => FrameKind::Raw,
            FrameFields::SynBasis { .. } => FrameKind::SynBasis,
            FrameFields::SynId { .. } => FrameKind::SynId,
        }
    }
}

/// A serialized frame on the simulated link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub payload: Vec<u8>,
    pub timestamp: SimTime,
}

/// Field widths shared by both ends of the link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireFormat {
    pub m: u32,
    pub k: usize,
    pub id_width: u32,
    pub paper_padding: bool,
}

impl WireFormat {
    pub fn new(code: &HammingCode, id_width: u32, paper_padding: bool) -> Self {
        WireFormat {
            m: code.m(),
            k: code.k(),
            id_width,
            paper_padding,
        }
    }

    pub fn chunk_bits(&self) -> usize {
        1 << self.m
    }

    pub fn raw_bytes(&self) -> usize {
        self.chunk_bits().div_ceil(8)
    }

    pub fn syn_basis_bytes(&self) -> usize {
        let pad = if self.paper_padding { 8 } else { 0 };
        (self.m as usize + pad + 1 + self.k).div_ceil(8)
    }

    pub fn syn_id_bytes(&self) -> usize {
        (self.m as usize + 1 + self.id_width as usize).div_ceil(8)
    }

    pub fn payload_bytes(&self, kind: FrameKind) -> usize {
        match kind {
            FrameKind::Raw => self.raw_bytes(),
            FrameKind::SynBasis => self.syn_basis_bytes(),
            FrameKind::SynId => self.syn_id_bytes(),
        }
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    used: usize,
}

impl BitWriter {
    fn with_capacity(bytes: usize) -> Self {
        BitWriter {
            bytes: Vec::with_capacity(bytes),
            used: 0,
        }
    }

    fn push(&mut self, bit: bool) {
        if self.used.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.used % 8);
        }
        self.used += 1;
    }

    fn push_value(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    fn push_byte(&mut self, byte: u8) {
        let offset = self.used % 8;
        if offset == 0 {
            self.bytes.push(byte);
        } else {
            *self.bytes.last_mut().unwrap() |= byte >> offset;
            self.bytes.push(byte << (8 - offset));
        }
        self.used += 8;
    }

    fn push_chunk(&mut self, chunk: &BitChunk) {
        let bytes = chunk.to_be_bytes();
        let lead = bytes.len() * 8 - chunk.len();
        self.push_value(bytes[0] as u64, 8 - lead);
        bytes[1..].iter().for_each(|&b| self.push_byte(b));
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn bit(&mut self) -> bool {
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        bit
    }

    fn value(&mut self, width: usize) -> u64 {
        (0..width).fold(0, |acc, _| (acc << 1) | self.bit() as u64)
    }

    fn byte(&mut self) -> u8 {
        let (index, offset) = (self.pos / 8, self.pos % 8);
        self.pos += 8;
        if offset == 0 {
            self.bytes[index]
        } else {
            (self.bytes[index] << offset) | (self.bytes[index + 1] >> (8 - offset))
        }
    }

    fn chunk(&mut self, width: usize) -> BitChunk {
        let len = width.div_ceil(8);
        let mut out = Vec::with_capacity(len);
        out.push(self.value(width - (len - 1) * 8) as u8);
        (1..len).for_each(|_| out.push(self.byte()));
        BitChunk::from_be_bytes(&out, width).expect("byte count matches width")
    }

    fn rest_is_zero(&mut self) -> bool {
        while self.pos < self.bytes.len() * 8 {
            if self.bit() {
                return false;
            }
        }
        true
    }
}

fn malformed(kind: FrameKind, reason: impl Into<String>) -> PipelineError {
    PipelineError::MalformedFrame {
        kind,
        reason: reason.into(),
    }
}

pub fn serialize_frame(
    fields: &FrameFields,
    format: &WireFormat,
) -> Result<Vec<u8>, PipelineError> {
    let kind = fields.kind();
    let m = format.m as usize;
    let mut w = BitWriter::with_capacity(format.payload_bytes(kind));
    match fields {
        FrameFields::Raw { chunk } => {
            if chunk.len() != format.chunk_bits() {
                return Err(malformed(kind, format!("chunk has {} bits", chunk.len())));
            }
            w.push_chunk(chunk);
        }
        FrameFields::SynBasis {
            syndrome,
            msb,
            basis,
        } => {
            if *syndrome >> m != 0 {
                return Err(malformed(kind, "syndrome too wide"));
            }
            if basis.len() != format.k {
                return Err(malformed(kind, format!("basis has {} bits", basis.len())));
            }
            w.push_value(*syndrome as u64, m);
            if format.paper_padding {
                w.push_value(0, 8);
            }
            w.push(*msb);
            w.push_chunk(basis);
        }
        FrameFields::SynId { syndrome, msb, id } => {
            if *syndrome >> m != 0 {
                return Err(malformed(kind, "syndrome too wide"));
            }
            if id.width() != format.id_width {
                return Err(malformed(kind, format!("id is {} bits wide", id.width())));
            }
            w.push_value(*syndrome as u64, m);
            w.push(*msb);
            w.push_value(id.value() as u64, format.id_width as usize);
        }
    }
    let bytes = w.finish();
    debug_assert_eq!(bytes.len(), format.payload_bytes(kind));
    Ok(bytes)
}

pub fn parse_frame(
    kind: FrameKind,
    bytes: &[u8],
    format: &WireFormat,
) -> Result<FrameFields, PipelineError> {
    let expected = format.payload_bytes(kind);
    if bytes.len() != expected {
        return Err(malformed(
            kind,
            format!("payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let m = format.m as usize;
    let mut r = BitReader::new(bytes);
    let fields = match kind {
        FrameKind::Raw => FrameFields::Raw {
            chunk: r.chunk(format.chunk_bits()),
        },
        FrameKind::SynBasis => {
            let syndrome = r.value(m) as u32;
            if format.paper_padding && r.value(8) != 0 {
                return Err(malformed(kind, "nonzero padding byte"));
            }
            let msb = r.bit();
            let basis = r.chunk(format.k);
            FrameFields::SynBasis {
                syndrome,
                msb,
                basis,
            }
        }
        FrameKind::SynId => {
            let syndrome = r.value(m) as u32;
            let msb = r.bit();
            let value = r.value(format.id_width as usize) as u32;
            FrameFields::SynId {
                syndrome,
                msb,
                id: BasisId::new(value, format.id_width)
                    .ok_or_else(|| malformed(kind, "bad id width"))?,
            }
        }
    };
    if !r.rest_is_zero() {
        return Err(malformed(kind, "nonzero trailing bits"));
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdcore::build_code;

    fn m8(padding: bool) -> WireFormat {
        WireFormat::new(&build_code(8).unwrap(), 15, padding)
    }

    fn syn_id(syndrome: u32, msb: bool, id: u32) -> FrameFields {
        FrameFields::SynId {
            syndrome,
            msb,
            id: BasisId::new(id, 15).unwrap(),
        }
    }

    #[test]
    fn sizes_for_default_parameters() {
        let plain = m8(false);
        assert_eq!(plain.raw_bytes(), 32);
        assert_eq!(plain.syn_basis_bytes(), 32);
        assert_eq!(plain.syn_id_bytes(), 3);
        assert_eq!(m8(true).syn_basis_bytes(), 33);
    }

    #[test]
    fn syn_id_bit_packing() {
        let format = m8(false);
        assert_eq!(
            serialize_frame(&syn_id(0, false, 0), &format).unwrap(),
            vec![0x00, 0x00, 0x00]
        );
        assert_eq!(
            serialize_frame(&syn_id(0xA5, true, 0x7FFF), &format).unwrap(),
            vec![0xA5, 0xFF, 0xFF]
        );
        assert_eq!(
            serialize_frame(&syn_id(0x01, false, 0x0102), &format).unwrap(),
            vec![0x01, 0x01, 0x02]
        );
        assert_eq!(
            parse_frame(FrameKind::SynId, &[0xA5, 0xFF, 0xFF], &format).unwrap(),
            syn_id(0xA5, true, 0x7FFF)
        );
    }

    #[test]
    fn short_syn_id_rejected() {
        assert!(matches!(
            parse_frame(FrameKind::SynId, &[0x00, 0x00], &m8(false)),
            Err(PipelineError::MalformedFrame { .. })
        ));
    }

    #[test]
    fn syn_basis_layout() {
        let mut basis = BitChunk::zeros(247).unwrap();
        basis.set(246, true);
        basis.set(0, true);
        let fields = FrameFields::SynBasis {
            syndrome: 0x3C,
            msb: true,
            basis,
        };
        let plain = serialize_frame(&fields, &m8(false)).unwrap();
        assert_eq!(plain.len(), 32);
        assert_eq!(plain[0], 0x3C);
        assert_eq!(plain[1], 0b1100_0000);
        assert_eq!(plain[31], 0x01);

        let padded = serialize_frame(&fields, &m8(true)).unwrap();
        assert_eq!(padded.len(), 33);
        assert_eq!(padded[1], 0x00);
        assert_eq!(&padded[2..], &plain[1..]);
        assert_eq!(
            parse_frame(FrameKind::SynBasis, &padded, &m8(true)).unwrap(),
            fields
        );

        let mut dirty = padded.clone();
        dirty[1] = 0x10;
        assert!(parse_frame(FrameKind::SynBasis, &dirty, &m8(true)).is_err());
    }

    #[test]
    fn small_code_layouts_pad_at_the_end() {
        let format = WireFormat::new(&build_code(3).unwrap(), 15, false);
        assert_eq!(format.raw_bytes(), 1);
        assert_eq!(format.syn_basis_bytes(), 1);
        assert_eq!(format.syn_id_bytes(), 3);
        let fields = FrameFields::SynBasis {
            syndrome: 0b100,
            msb: false,
            basis: BitChunk::from_bit_str("1010").unwrap(),
        };
        assert_eq!(
            serialize_frame(&fields, &format).unwrap(),
            vec![0b1000_1010]
        );
        let id_frame = FrameFields::SynId {
            syndrome: 0b111,
            msb: true,
            id: BasisId::new(1, 15).unwrap(),
        };
        let bytes = serialize_frame(&id_frame, &format).unwrap();
        // 111 1 000000000000001 00000
        assert_eq!(bytes, vec![0xF0, 0x00, 0x20]);
        assert_eq!(
            parse_frame(FrameKind::SynId, &bytes, &format).unwrap(),
            id_frame
        );
        assert!(parse_frame(FrameKind::SynId, &[0xF0, 0x00, 0x21], &format).is_err());
    }

    #[test]
    fn width_mismatches_rejected() {
        let format = m8(false);
        let bad_basis = FrameFields::SynBasis {
            syndrome: 0,
            msb: false,
            basis: BitChunk::zeros(10).unwrap(),
        };
        assert!(serialize_frame(&bad_basis, &format).is_err());
        let bad_id = FrameFields::SynId {
            syndrome: 0,
            msb: false,
            id: BasisId::new(0, 14).unwrap(),
        };
        assert!(serialize_frame(&bad_id, &format).is_err());
        assert!(serialize_frame(&syn_id(0x100, false, 0), &format).is_err());
    }

    #[test]
    fn ethertypes() {
        for kind in [FrameKind::Raw, FrameKind::SynBasis, FrameKind::SynId] {
            assert_eq!(FrameKind::from_ethertype(kind.ethertype()), Some(kind));
            assert_eq!(FrameKind::from_number(kind.number()), Some(kind));
        }
        assert_eq!(FrameKind::SynId.ethertype(), 0x88B7);
        assert_eq!(FrameKind::from_number(4), None);
    }
}
