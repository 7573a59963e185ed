//! Minimal classic pcap (microsecond, Ethernet link type) reading and
//! writing.

use std::io::{self, Write};

use thiserror::Error;

use crate::time::SimTime;

pub const MAGIC_MICROS: u32 = 0xA1B2_C3D4;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const ETHERNET_HEADER_LEN: usize = 14;
pub const SNAPLEN: u32 = 65535;

pub const DEMO_SRC_MAC: [u8; 6] = [0x02, 0, 0, 0, 0, 0x01];
pub const DEMO_DST_MAC: [u8; 6] = [0x02, 0, 0, 0, 0, 0x02];

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("not a microsecond pcap file (magic {0:#010x})")]
    BadMagic(u32),
    #[error("unsupported link type {0}")]
    LinkType(u32),
    #[error("pcap file truncated at offset {0}")]
    Truncated(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcapPacket {
    pub ts_sec: u32,
    pub ts_usec: u32,
    pub data: Vec<u8>,
}

impl PcapPacket {
    pub fn ethertype(&self) -> Option<u16> {
        let bytes = self.data.get(12..14)?;
        Some(u16::from_be_bytes([bytes[0], bytes[1]]))
    }

    pub fn ethernet_payload(&self) -> Option<&[u8]> {
        self.data.get(ETHERNET_HEADER_LEN..)
    }
}

/// Little-endian pcap writer.
pub struct PcapWriter<W: Write> {
    inner: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        inner.write_all(&MAGIC_MICROS.to_le_bytes())?;
        inner.write_all(&2u16.to_le_bytes())?;
        inner.write_all(&4u16.to_le_bytes())?;
        inner.write_all(&0i32.to_le_bytes())?;
        inner.write_all(&0u32.to_le_bytes())?;
        inner.write_all(&SNAPLEN.to_le_bytes())?;
        inner.write_all(&LINKTYPE_ETHERNET.to_le_bytes())?;
        Ok(PcapWriter { inner })
    }

    pub fn write_packet(&mut self, at: SimTime, data: &[u8]) -> io::Result<()> {
        let ns = at.as_nanos();
        let sec = u32::try_from(ns / 1_000_000_000)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "timestamp overflows pcap"))?;
        let usec = ((ns % 1_000_000_000) / 1_000) as u32;
        let len = data.len() as u32;
        self.inner.write_all(&sec.to_le_bytes())?;
        self.inner.write_all(&usec.to_le_bytes())?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(data)
    }

    /// Wraps `payload` in an Ethernet header with the fixed demo addresses.
    pub fn write_ethernet(
        &mut self,
        at: SimTime,
        ethertype: u16,
        payload: &[u8],
    ) -> io::Result<()> {
        let mut frame = Vec::with_capacity(ETHERNET_HEADER_LEN + payload.len());
        frame.extend_from_slice(&DEMO_DST_MAC);
        frame.extend_from_slice(&DEMO_SRC_MAC);
        frame.extend_from_slice(&ethertype.to_be_bytes());
        frame.extend_from_slice(payload);
        self.write_packet(at, &frame)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Parses a whole classic pcap file of either byte order.
pub fn read_pcap(bytes: &[u8]) -> Result<Vec<PcapPacket>, PcapError> {
    let header = bytes.get(..24).ok_or(PcapError::Truncated(0))?;
    let magic_le = u32::from_le_bytes(header[..4].try_into().unwrap());
    let big_endian = match magic_le {
        MAGIC_MICROS => false,
        m if m.swap_bytes() == MAGIC_MICROS => true,
        other => return Err(PcapError::BadMagic(other)),
    };
    let read_u32 = |b: &[u8]| {
        let arr: [u8; 4] = b.try_into().unwrap();
        if big_endian {
            u32::from_be_bytes(arr)
        } else {
            u32::from_le_bytes(arr)
        }
    };
    let linktype = read_u32(&header[20..24]);
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::LinkType(linktype));
    }
    let mut packets = Vec::new();
    let mut offset = 24;
    while offset < bytes.len() {
        let record = bytes
            .get(offset..offset + 16)
            .ok_or(PcapError::Truncated(offset))?;
        let caplen = read_u32(&record[8..12]) as usize;
        let data = bytes
            .get(offset + 16..offset + 16 + caplen)
            .ok_or(PcapError::Truncated(offset))?;
        packets.push(PcapPacket {
            ts_sec: read_u32(&record[..4]),
            ts_usec: read_u32(&record[4..8]),
            data: data.to_vec(),
        });
        offset += 16 + caplen;
    }
    Ok(packets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let mut writer = PcapWriter::new(Vec::new()).unwrap();
        writer
            .write_ethernet(SimTime(1_500_002_000), 0x88B7, &[0xA5, 0xFF, 0xFF])
            .unwrap();
        let bytes = writer.into_inner();
        assert_eq!(&bytes[..4], &[0xD4, 0xC3, 0xB2, 0xA1]);
        assert_eq!(bytes.len(), 24 + 16 + 17);
        let packets = read_pcap(&bytes).unwrap();
        assert_eq!(packets.len(), 1);
        assert_eq!(packets[0].ts_sec, 1);
        assert_eq!(packets[0].ts_usec, 500_002);
        assert_eq!(packets[0].ethertype(), Some(0x88B7));
        assert_eq!(packets[0].ethernet_payload(), Some(&[0xA5, 0xFF, 0xFF][..]));
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_pcap(&[0; 10]), Err(PcapError::Truncated(0))));
        assert!(matches!(read_pcap(&[0; 24]), Err(PcapError::BadMagic(0))));
        let mut bytes = PcapWriter::new(Vec::new()).unwrap().into_inner();
        bytes.extend_from_slice(&[0; 8]);
        assert!(matches!(read_pcap(&bytes), Err(PcapError::Truncated(24))));
    }

    #[test]
    fn big_endian_files() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC_MICROS.to_be_bytes());
        bytes.extend_from_slice(&2u16.to_be_bytes());
        bytes.extend_from_slice(&4u16.to_be_bytes());
        bytes.extend_from_slice(&[0; 8]);
        bytes.extend_from_slice(&SNAPLEN.to_be_bytes());
        bytes.extend_from_slice(&1u32.to_be_bytes());
        bytes.extend_from_slice(&7u32.to_be_bytes());
        bytes.extend_from_slice(&9u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0xAB, 0xCD]);
        let packets = read_pcap(&bytes).unwrap();
        assert_eq!(packets[0].ts_sec, 7);
        assert_eq!(packets[0].data, vec![0xAB, 0xCD]);
    }
}
