//! Basis to identifier mapping shared by the encoder and decoder.
//!
//! Identifiers come from a fixed pool of `2^id_width` values. While the pool
//! has unassigned identifiers they are handed out in release order; once it
//! is exhausted, learning a new basis recycles the identifier of the least
//! recently used one. Recency is an explicit timestamp per entry, refreshed
//! by encoder-side hits.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::gdcore::{BitChunk, GdError};
use crate::time::SimTime;

pub const DEFAULT_ID_WIDTH: u32 = 15;
pub const MAX_ID_WIDTH: u32 = 20;

#[derive(Debug, Error)]
pub enum DictError {
    #[error("basis is already mapped to id {0}")]
    AlreadyKnown(u32),
    #[error("identifier width {0} outside 1..={MAX_ID_WIDTH}")]
    BadIdWidth(u32),
    #[error("basis has {actual} bits, dictionary holds {expected}-bit bases")]
    BasisLength { expected: usize, actual: usize },
    #[error("snapshot line {line}: {reason}")]
    Snapshot { line: usize, reason: String },
}

/// A fixed-width basis identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisId {
    value: u32,
    width: u32,
}

impl BasisId {
    pub fn new(value: u32, width: u32) -> Option<Self> {
        if !(1..=MAX_ID_WIDTH).contains(&width) || value >> width != 0 {
            return None;
        }
        Some(BasisId { value, width })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnOutcome {
    pub assigned: BasisId,
    /// Present iff the pool was full and an entry had to be recycled.
    pub evicted_basis: Option<BitChunk>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Entry {
    id: u32,
    last_used: SimTime,
}

#[derive(Clone, Debug)]
pub struct DictionaryState {
    id_width: u32,
    basis_bits: usize,
    forward: HashMap<BitChunk, Entry>,
    reverse: Vec<Option<BitChunk>>,
    free_ids: VecDeque<u32>,
    /// `(last_used, id)` of every assigned entry; the first element is the
    /// next eviction victim.
    recency: BTreeSet<(SimTime, u32)>,
}

impl DictionaryState {
    pub fn new(id_width: u32, basis_bits: usize) -> Result<Self, DictError> {
        if !(1..=MAX_ID_WIDTH).contains(&id_width) {
            return Err(DictError::BadIdWidth(id_width));
        }
        let capacity = 1usize << id_width;
        Ok(DictionaryState {
            id_width,
            basis_bits,
            forward: HashMap::new(),
            reverse: vec![None; capacity],
            free_ids: (0..capacity as u32).collect(),
            recency: BTreeSet::new(),
        })
    }

    pub fn id_width(&self) -> u32 {
        self.id_width
    }

    pub fn basis_bits(&self) -> usize {
        self.basis_bits
    }

    pub fn capacity(&self) -> usize {
        self.reverse.len()
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn free_len(&self) -> usize {
        self.free_ids.len()
    }

    fn make_id(&self, value: u32) -> BasisId {
        BasisId {
            value,
            width: self.id_width,
        }
    }

    fn check_basis(&self, basis: &BitChunk) -> Result<(), DictError> {
        if basis.len() != self.basis_bits {
            return Err(DictError::BasisLength {
                expected: self.basis_bits,
                actual: basis.len(),
            });
        }
        Ok(())
    }

    /// Encoder-side lookup. A hit refreshes the entry's recency to `now`
    /// (never backwards).
    pub fn lookup_id(&mut self, basis: &BitChunk, now: SimTime) -> Option<BasisId> {
        let entry = self.forward.get_mut(basis)?;
        if now > entry.last_used {
            self.recency.remove(&(entry.last_used, entry.id));
            entry.last_used = now;
            self.recency.insert((now, entry.id));
        }
        Some(BasisId {
            value: entry.id,
            width: self.id_width,
        })
    }

    /// Lookup without touching recency.
    pub fn peek_id(&self, basis: &BitChunk) -> Option<BasisId> {
        self.forward.get(basis).map(|e| self.make_id(e.id))
    }

    pub fn last_used(&self, basis: &BitChunk) -> Option<SimTime> {
        self.forward.get(basis).map(|e| e.last_used)
    }

    /// Decoder-side lookup; never affects recency.
    pub fn lookup_basis(&self, id: BasisId) -> Option<&BitChunk> {
        if id.width != self.id_width {
            return None;
        }
        self.reverse.get(id.value as usize)?.as_ref()
    }

    /// Assigns an identifier to a new basis, recycling the least recently
    /// used entry (smallest id on ties) when the pool is exhausted.
    pub fn learn(&mut self, basis: &BitChunk, now: SimTime) -> Result<LearnOutcome, DictError> {
        self.check_basis(basis)?;
        if let Some(entry) = self.forward.get(basis) {
            return Err(DictError::AlreadyKnown(entry.id));
        }
        let (id, evicted_basis) = match self.free_ids.pop_front() {
            Some(id) => (id, None),
            None => {
                let (_, victim) = self
                    .recency
                    .pop_first()
                    .expect("full pool has at least one assigned entry");
                let old = self.reverse[victim as usize]
                    .take()
                    .expect("recency index and reverse map agree");
                self.forward.remove(&old);
                (victim, Some(old))
            }
        };
        self.forward
            .insert(basis.clone(), Entry { id, last_used: now });
        self.reverse[id as usize] = Some(basis.clone());
        self.recency.insert((now, id));
        Ok(LearnOutcome {
            assigned: self.make_id(id),
            evicted_basis,
        })
    }

    /// Drops a mapping and returns its identifier to the back of the free
    /// pool.
    pub fn remove(&mut self, basis: &BitChunk) -> Option<BasisId> {
        let entry = self.forward.remove(basis)?;
        self.reverse[entry.id as usize] = None;
        self.recency.remove(&(entry.last_used, entry.id));
        self.free_ids.push_back(entry.id);
        Some(self.make_id(entry.id))
    }

    /// Assigned `(id, basis)` pairs in id order.
    pub fn entries(&self) -> impl Iterator<Item = (BasisId, &BitChunk)> + '_ {
        self.reverse
            .iter()
            .enumerate()
            .filter_map(|(id, basis)| basis.as_ref().map(|b| (self.make_id(id as u32), b)))
    }

    /// Snapshot text: one `<id-decimal> <basis-hex>` line per entry, sorted
    /// by id.
    pub fn export_snapshot(&self) -> String {
        let mut out = String::new();
        for (id, basis) in self.entries() {
            let _ = writeln!(out, "{} {}", id.value(), basis.to_hex());
        }
        out
    }

    /// Rebuilds a dictionary from [`DictionaryState::export_snapshot`] text.
    /// Imported entries all get `last_used = now`; unlisted identifiers go to
    /// the free pool in ascending order. Blank lines and `#` comments are
    /// skipped.
    pub fn import_snapshot(
        text: &str,
        id_width: u32,
        basis_bits: usize,
        now: SimTime,
    ) -> Result<Self, DictError> {
        let mut state = Self::new(id_width, basis_bits)?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| DictError::Snapshot {
                line: index + 1,
                reason,
            };
            let mut parts = line.split_whitespace();
            let (Some(id_text), Some(hex), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(err("expected `<id> <basis-hex>`".into()));
            };
            let id: u32 = id_text
                .parse()
                .map_err(|_| err(format!("bad id {id_text:?}")))?;
            if id as usize >= state.capacity() {
                return Err(err(format!("id {id} exceeds {id_width}-bit range")));
            }
            let basis =
                BitChunk::from_hex(hex, basis_bits).map_err(|e: GdError| err(e.to_string()))?;
            if state.reverse[id as usize].is_some() {
                return Err(err(format!("duplicate id {id}")));
            }
            if state.forward.contains_key(&basis) {
                return Err(err(format!("duplicate basis {hex}")));
            }
            state
                .forward
                .insert(basis.clone(), Entry { id, last_used: now });
            state.reverse[id as usize] = Some(basis);
            state.recency.insert((now, id));
        }
        let reverse = &state.reverse;
        state.free_ids.retain(|&id| reverse[id as usize].is_none());
        Ok(state)
    }

    /// Verifies the bijection, conservation and recency-index invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.forward.len() + self.free_ids.len() != self.capacity() {
            return Err(format!(
                "conservation: {} assigned + {} free != {}",
                self.forward.len(),
                self.free_ids.len(),
                self.capacity()
            ));
        }
        if self.recency.len() != self.forward.len() {
            return Err("recency index size differs from forward map".into());
        }
        for (basis, entry) in &self.forward {
            if self.reverse[entry.id as usize].as_ref() != Some(basis) {
                return Err(format!("reverse map disagrees for id {}", entry.id));
            }
            if !self.recency.contains(&(entry.last_used, entry.id)) {
                return Err(format!("id {} missing from recency index", entry.id));
            }
        }
        let assigned = self.reverse.iter().filter(|b| b.is_some()).count();
        if assigned != self.forward.len() {
            return Err("reverse map has entries unknown to forward map".into());
        }
        for &id in &self.free_ids {
            if self.reverse[id as usize].is_some() {
                return Err(format!("free id {id} is also assigned"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(v: u64) -> BitChunk {
        BitChunk::from_u64(v, 4).unwrap()
    }

    fn t(ns: u64) -> SimTime {
        SimTime(ns)
    }

    #[test]
    fn empty_lookups_miss() {
        let mut dict = DictionaryState::new(15, 4).unwrap();
        assert_eq!(dict.lookup_id(&basis(3), t(0)), None);
        assert_eq!(dict.lookup_basis(BasisId::new(0, 15).unwrap()), None);
        assert_eq!(dict.capacity(), 32768);
    }

    #[test]
    fn free_pool_consumed_in_order() {
        let mut dict = DictionaryState::new(15, 4).unwrap();
        for (i, v) in [5u64, 9, 2].into_iter().enumerate() {
            let outcome = dict.learn(&basis(v), t(i as u64)).unwrap();
            assert_eq!(outcome.assigned.value(), i as u32);
            assert_eq!(outcome.evicted_basis, None);
        }
        assert_eq!(dict.lookup_id(&basis(5), t(10)).unwrap().value(), 0);
        assert_eq!(
            dict.lookup_basis(BasisId::new(2, 15).unwrap()),
            Some(&basis(2))
        );
    }

    #[test]
    fn lru_eviction_capacity_two() {
        let mut dict = DictionaryState::new(1, 4).unwrap();
        let b0 = basis(0);
        let b1 = basis(1);
        let b2 = basis(2);
        assert_eq!(dict.learn(&b0, t(0)).unwrap().assigned.value(), 0);
        assert_eq!(dict.learn(&b1, t(1)).unwrap().assigned.value(), 1);
        assert!(dict.lookup_id(&b1, t(2)).is_some());
        let outcome = dict.learn(&b2, t(3)).unwrap();
        assert_eq!(outcome.assigned.value(), 0);
        assert_eq!(outcome.evicted_basis, Some(b0.clone()));
        let id0 = BasisId::new(0, 1).unwrap();
        assert_eq!(dict.lookup_basis(id0), Some(&b2));
        assert_eq!(dict.peek_id(&b0), None);
        dict.check_invariants().unwrap();
    }

    #[test]
    fn ties_evict_smallest_id() {
        let mut dict = DictionaryState::new(1, 4).unwrap();
        dict.learn(&basis(7), t(5)).unwrap();
        dict.learn(&basis(8), t(5)).unwrap();
        let outcome = dict.learn(&basis(9), t(5)).unwrap();
        assert_eq!(outcome.assigned.value(), 0);
        assert_eq!(outcome.evicted_basis, Some(basis(7)));
    }

    #[test]
    fn decoder_reads_do_not_refresh() {
        let mut dict = DictionaryState::new(1, 4).unwrap();
        dict.learn(&basis(1), t(0)).unwrap();
        dict.learn(&basis(2), t(1)).unwrap();
        dict.lookup_basis(BasisId::new(0, 1).unwrap());
        let outcome = dict.learn(&basis(3), t(2)).unwrap();
        assert_eq!(outcome.evicted_basis, Some(basis(1)));
    }

    #[test]
    fn refresh_never_goes_backwards() {
        let mut dict = DictionaryState::new(4, 4).unwrap();
        dict.learn(&basis(1), t(10)).unwrap();
        dict.lookup_id(&basis(1), t(3));
        assert_eq!(dict.last_used(&basis(1)), Some(t(10)));
        dict.lookup_id(&basis(1), t(12));
        assert_eq!(dict.last_used(&basis(1)), Some(t(12)));
        dict.check_invariants().unwrap();
    }

    #[test]
    fn duplicate_learn_is_reported() {
        let mut dict = DictionaryState::new(4, 4).unwrap();
        dict.learn(&basis(1), t(0)).unwrap();
        assert!(matches!(
            dict.learn(&basis(1), t(1)),
            Err(DictError::AlreadyKnown(0))
        ));
        assert!(matches!(
            dict.learn(&BitChunk::zeros(5).unwrap(), t(1)),
            Err(DictError::BasisLength {
                expected: 4,
                actual: 5
            })
        ));
    }

    #[test]
    fn released_ids_go_to_back_of_pool() {
        let mut dict = DictionaryState::new(2, 4).unwrap();
        dict.learn(&basis(1), t(0)).unwrap();
        dict.learn(&basis(2), t(0)).unwrap();
        assert_eq!(dict.remove(&basis(1)).unwrap().value(), 0);
        // ids 2 and 3 were never used; they come before the released 0
        assert_eq!(dict.learn(&basis(3), t(1)).unwrap().assigned.value(), 2);
        assert_eq!(dict.learn(&basis(4), t(1)).unwrap().assigned.value(), 3);
        assert_eq!(dict.learn(&basis(5), t(1)).unwrap().assigned.value(), 0);
        dict.check_invariants().unwrap();
    }

    #[test]
    fn id_width_bounds() {
        assert!(DictionaryState::new(0, 4).is_err());
        assert!(DictionaryState::new(21, 4).is_err());
        assert!(BasisId::new(2, 1).is_none());
        let dict = DictionaryState::new(2, 4).unwrap();
        assert_eq!(dict.lookup_basis(BasisId::new(0, 3).unwrap()), None);
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut dict = DictionaryState::new(3, 247).unwrap();
        let a = BitChunk::ones(247).unwrap();
        let b = BitChunk::from_u64(0xABC, 247).unwrap();
        dict.learn(&a, t(0)).unwrap();
        dict.learn(&b, t(1)).unwrap();
        let text = dict.export_snapshot();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("0 7fff"));
        assert_eq!(text.lines().nth(1).unwrap(), format!("1 {:0>62}", "abc"));
        let restored = DictionaryState::import_snapshot(&text, 3, 247, t(0)).unwrap();
        assert_eq!(restored.export_snapshot(), text);
        assert_eq!(restored.free_len(), 6);
        restored.check_invariants().unwrap();
    }

    #[test]
    fn snapshot_errors() {
        let bad = ["0", "x 1", "8 1", "0 1\n0 2", "0 1\n1 1", "0 zz", "0 1 2"];
        for text in bad {
            assert!(
                DictionaryState::import_snapshot(text, 3, 4, t(0)).is_err(),
                "{text:?}"
            );
        }
        let ok = DictionaryState::import_snapshot("# comment\n\n3 f\n", 3, 4, t(0)).unwrap();
        assert_eq!(ok.peek_id(&basis(15)).unwrap().value(), 3);
        assert_eq!(ok.free_len(), 7);
    }
}
