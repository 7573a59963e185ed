use std::collections::{HashMap, HashSet};

use crate::dictionary::BasisId;
use crate::gdcore::{BitChunk, EncodedChunk, HammingCode};
use crate::time::SimTime;

use super::frame::{parse_frame, serialize_frame, Frame, FrameFields, FrameKind, WireFormat};
use super::{Counters, PipelineError};

/// Notification to the control plane that the encoder saw a basis it has
/// no identifier for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digest {
    pub basis: BitChunk,
    pub emitted_at: SimTime,
}

#[derive(Clone, Debug)]
pub struct EncoderOutput {
    pub frame: Frame,
    pub digest: Option<Digest>,
    /// Basis that matched the compression table, if any.
    pub hit: Option<BitChunk>,
}

/// Source switch: turns raw chunks into `SYN_BASIS` or `SYN_ID` frames.
#[derive(Clone, Debug)]
pub struct EncoderNode {
    code: HammingCode,
    format: WireFormat,
    table: HashMap<BitChunk, BasisId>,
    /// Bases with a digest in flight; no second digest is sent for them.
    pending: HashSet<BitChunk>,
    pub counters: Counters,
}

impl EncoderNode {
    pub fn new(code: HammingCode, format: WireFormat) -> Self {
        EncoderNode {
            code,
            format,
            table: HashMap::new(),
            pending: HashSet::new(),
            counters: Counters::default(),
        }
    }

    pub fn process(&mut self, frame: &Frame, now: SimTime) -> Result<EncoderOutput, PipelineError> {
        if frame.kind != FrameKind::Raw {
            return Err(PipelineError::MalformedFrame {
                kind: frame.kind,
                reason: "encoder accepts RAW frames only".into(),
            });
        }
        let FrameFields::Raw { chunk } = parse_frame(FrameKind::Raw, &frame.payload, &self.format)?
        else {
            unreachable!("RAW payload parses to RAW fields");
        };
        self.counters.raw_in += 1;
        let EncodedChunk {
            syndrome,
            msb,
            basis,
        } = self.code.encode_chunk(&chunk)?;

        if let Some(&id) = self.table.get(&basis) {
            let payload = serialize_frame(&FrameFields::SynId { syndrome, msb, id }, &self.format)?;
            self.counters.out_syn_id += 1;
            return Ok(EncoderOutput {
                frame: Frame {
                    kind: FrameKind::SynId,
                    payload,
                    timestamp: now,
                },
                digest: None,
                hit: Some(basis),
            });
        }

        let fields = FrameFields::SynBasis {
            syndrome,
            msb,
            basis,
        };
        let payload = serialize_frame(&fields, &self.format)?;
        self.counters.out_syn_basis += 1;
        let FrameFields::SynBasis { basis, .. } = fields else {
            unreachable!()
        };
        let digest = if self.pending.contains(&basis) {
            None
        } else {
            self.pending.insert(basis.clone());
            self.counters.digests += 1;
            Some(Digest {
                basis,
                emitted_at: now,
            })
        };
        Ok(EncoderOutput {
            frame: Frame {
                kind: FrameKind::SynBasis,
                payload,
                timestamp: now,
            },
            digest,
            hit: None,
        })
    }

    pub fn install(&mut self, basis: BitChunk, id: BasisId) {
        self.pending.remove(&basis);
        self.table.insert(basis, id);
    }

    /// Forgets a mapping and any in-flight digest for `basis`.
    pub fn remove(&mut self, basis: &BitChunk) -> Option<BasisId> {
        self.pending.remove(basis);
        self.table.remove(basis)
    }

    pub fn clear_pending(&mut self, basis: &BitChunk) {
        self.pending.remove(basis);
    }

    pub fn lookup(&self, basis: &BitChunk) -> Option<BasisId> {
        self.table.get(basis).copied()
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> impl Iterator<Item = (&BitChunk, BasisId)> + '_ {
        self.table.iter().map(|(b, &id)| (b, id))
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}

/// Destination switch: restores raw chunks from `SYN_BASIS` and `SYN_ID`
/// frames.
#[derive(Clone, Debug)]
pub struct DecoderNode {
    code: HammingCode,
    format: WireFormat,
    table: Vec<Option<BitChunk>>,
    pub counters: Counters,
}

impl DecoderNode {
    pub fn new(code: HammingCode, format: WireFormat) -> Self {
        DecoderNode {
            code,
            table: vec![None; 1 << format.id_width],
            format,
            counters: Counters::default(),
        }
    }

    pub fn process(&mut self, frame: &Frame) -> Result<Frame, PipelineError> {
        let fields = parse_frame(frame.kind, &frame.payload, &self.format)?;
        let encoded = match fields {
            FrameFields::Raw { .. } => {
                return Err(PipelineError::MalformedFrame {
                    kind: frame.kind,
                    reason: "decoder accepts SYN_BASIS and SYN_ID frames only".into(),
                })
            }
            FrameFields::SynBasis {
                syndrome,
                msb,
                basis,
            } => {
                self.counters.in_syn_basis += 1;
                EncodedChunk {
                    syndrome,
                    msb,
                    basis,
                }
            }
            FrameFields::SynId { syndrome, msb, id } => {
                self.counters.in_syn_id += 1;
                let Some(basis) = self.table[id.value() as usize].clone() else {
                    self.counters.decode_miss += 1;
                    return Err(PipelineError::DecodeMiss(id.value()));
                };
                EncodedChunk {
                    syndrome,
                    msb,
                    basis,
                }
            }
        };
        let chunk = self.code.decode_chunk(&encoded)?;
        self.counters.restored_raw += 1;
        Ok(Frame {
            kind: FrameKind::Raw,
            payload: chunk.to_be_bytes(),
            timestamp: frame.timestamp,
        })
    }

    pub fn install(&mut self, id: BasisId, basis: BitChunk) {
        self.table[id.value() as usize] = Some(basis);
    }

    pub fn remove(&mut self, id: BasisId) -> Option<BitChunk> {
        self.table[id.value() as usize].take()
    }

    pub fn lookup(&self, id: BasisId) -> Option<&BitChunk> {
        self.table.get(id.value() as usize)?.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdcore::build_code;

    fn demo() -> (EncoderNode, DecoderNode, WireFormat) {
        let code = build_code(3).unwrap();
        let format = WireFormat::new(&code, 15, false);
        (
            EncoderNode::new(code.clone(), format),
            DecoderNode::new(code, format),
            format,
        )
    }

    fn raw(bits: &str) -> Frame {
        Frame {
            kind: FrameKind::Raw,
            payload: BitChunk::from_bit_str(bits).unwrap().to_be_bytes(),
            timestamp: SimTime::ZERO,
        }
    }

    fn chunk(bits: &str) -> BitChunk {
        BitChunk::from_bit_str(bits).unwrap()
    }

    #[test]
    fn unknown_basis_goes_out_with_digest() {
        let (mut enc, _, format) = demo();
        let out = enc.process(&raw("00000100"), SimTime::ZERO).unwrap();
        assert_eq!(out.frame.kind, FrameKind::SynBasis);
        assert_eq!(
            parse_frame(FrameKind::SynBasis, &out.frame.payload, &format).unwrap(),
            FrameFields::SynBasis {
                syndrome: 0b100,
                msb: false,
                basis: chunk("0000")
            }
        );
        assert_eq!(out.digest.unwrap().basis, chunk("0000"));
        // a pending basis is not reported twice
        let again = enc.process(&raw("00000100"), SimTime(5)).unwrap();
        assert!(again.digest.is_none());
        assert_eq!(enc.counters.digests, 1);
        assert_eq!(enc.counters.out_syn_basis, 2);
    }

    #[test]
    fn known_basis_is_compressed() {
        let (mut enc, _, format) = demo();
        enc.install(chunk("0000"), BasisId::new(0, 15).unwrap());
        enc.install(chunk("1111"), BasisId::new(1, 15).unwrap());
        let out = enc.process(&raw("00000100"), SimTime::ZERO).unwrap();
        assert_eq!(
            parse_frame(FrameKind::SynId, &out.frame.payload, &format).unwrap(),
            FrameFields::SynId {
                syndrome: 0b100,
                msb: false,
                id: BasisId::new(0, 15).unwrap()
            }
        );
        assert_eq!(out.hit, Some(chunk("0000")));
        let out = enc.process(&raw("11111111"), SimTime::ZERO).unwrap();
        assert_eq!(
            parse_frame(FrameKind::SynId, &out.frame.payload, &format).unwrap(),
            FrameFields::SynId {
                syndrome: 0,
                msb: true,
                id: BasisId::new(1, 15).unwrap()
            }
        );
    }

    #[test]
    fn decoder_restores_both_kinds() {
        let (_, mut dec, format) = demo();
        let basis_frame = Frame {
            kind: FrameKind::SynBasis,
            payload: serialize_frame(
                &FrameFields::SynBasis {
                    syndrome: 0b100,
                    msb: false,
                    basis: chunk("0000"),
                },
                &format,
            )
            .unwrap(),
            timestamp: SimTime::ZERO,
        };
        assert_eq!(
            dec.process(&basis_frame).unwrap().payload,
            chunk("00000100").to_be_bytes()
        );

        let id = BasisId::new(1, 15).unwrap();
        dec.install(id, chunk("1111"));
        let id_frame = Frame {
            kind: FrameKind::SynId,
            payload: serialize_frame(
                &FrameFields::SynId {
                    syndrome: 0,
                    msb: true,
                    id,
                },
                &format,
            )
            .unwrap(),
            timestamp: SimTime::ZERO,
        };
        assert_eq!(
            dec.process(&id_frame).unwrap().payload,
            chunk("11111111").to_be_bytes()
        );

        dec.remove(id);
        assert!(matches!(
            dec.process(&id_frame),
            Err(PipelineError::DecodeMiss(1))
        ));
        assert_eq!(dec.counters.decode_miss, 1);
    }

    #[test]
    fn nodes_reject_wrong_kinds() {
        let (mut enc, mut dec, _) = demo();
        let mut not_raw = raw("00000000");
        not_raw.kind = FrameKind::SynBasis;
        assert!(enc.process(&not_raw, SimTime::ZERO).is_err());
        assert!(dec.process(&raw("00000000")).is_err());
        let mut short = raw("00000000");
        short.payload.push(0);
        assert!(enc.process(&short, SimTime::ZERO).is_err());
    }
}
