use std::fmt;
use std::ops::AddAssign;

/// Per-classification packet counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub raw_in: u64,
    pub out_syn_basis: u64,
    pub out_syn_id: u64,
    pub in_syn_basis: u64,
    pub in_syn_id: u64,
    pub restored_raw: u64,
    pub digests: u64,
    pub installs: u64,
    pub evictions: u64,
    pub decode_miss: u64,
}

impl Counters {
    pub fn named(&self) -> [(&'static str, u64); 10] {
        [
            ("RAW_IN", self.raw_in),
            ("OUT_SYN_BASIS", self.out_syn_basis),
            ("OUT_SYN_ID", self.out_syn_id),
            ("IN_SYN_BASIS", self.in_syn_basis),
            ("IN_SYN_ID", self.in_syn_id),
            ("RESTORED_RAW", self.restored_raw),
            ("DIGESTS", self.digests),
            ("INSTALLS", self.installs),
            ("EVICTIONS", self.evictions),
            ("DECODE_MISS", self.decode_miss),
        ]
    }

    /// Parses the `NAME count` report produced by `Display`.
    pub fn parse(text: &str) -> Option<Counters> {
        let mut counters = Counters::default();
        let mut seen = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (name, value) = line.split_once(' ')?;
            let value: u64 = value.trim().parse().ok()?;
            let slot = match name {
                "RAW_IN" => &mut counters.raw_in,
                "OUT_SYN_BASIS" => &mut counters.out_syn_basis,
                "OUT_SYN_ID" => &mut counters.out_syn_id,
                "IN_SYN_BASIS" => &mut counters.in_syn_basis,
                "IN_SYN_ID" => &mut counters.in_syn_id,
                "RESTORED_RAW" => &mut counters.restored_raw,
                "DIGESTS" => &mut counters.digests,
                "INSTALLS" => &mut counters.installs,
                "EVICTIONS" => &mut counters.evictions,
                "DECODE_MISS" => &mut counters.decode_miss,
                _ => return None,
            };
            *slot = value;
            seen += 1;
        }
        (seen == 10).then_some(counters)
    }

    /// Checks the conservation laws between classifications.
    pub fn check(&self) -> Result<(), String> {
        if self.raw_in != self.out_syn_basis + self.out_syn_id {
            return Err(format!(
                "RAW_IN {} != OUT_SYN_BASIS {} + OUT_SYN_ID {}",
                self.raw_in, self.out_syn_basis, self.out_syn_id
            ));
        }
        if self.restored_raw + self.decode_miss != self.in_syn_basis + self.in_syn_id {
            return Err(format!(
                "RESTORED_RAW {} != IN_SYN_BASIS {} + IN_SYN_ID {} - DECODE_MISS {}",
                self.restored_raw, self.in_syn_basis, self.in_syn_id, self.decode_miss
            ));
        }
        Ok(())
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, other: Counters) {
        self.raw_in += other.raw_in;
        self.out_syn_basis += other.out_syn_basis;
        self.out_syn_id += other.out_syn_id;
        self.in_syn_basis += other.in_syn_basis;
        self.in_syn_id += other.in_syn_id;
        self.restored_raw += other.restored_raw;
        self.digests += other.digests;
        self.installs += other.installs;
        self.evictions += other.evictions;
        self.decode_miss += other.decode_miss;
    }
}

impl fmt::Display for Counters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.named() {
            writeln!(f, "{name} {value}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_roundtrip() {
        let counters = Counters {
            raw_in: 5,
            out_syn_basis: 2,
            out_syn_id: 3,
            in_syn_basis: 2,
            in_syn_id: 3,
            restored_raw: 5,
            digests: 1,
            installs: 1,
            ..Default::default()
        };
        let text = counters.to_string();
        assert!(text.starts_with("RAW_IN 5\nOUT_SYN_BASIS 2\n"));
        assert_eq!(text.lines().count(), 10);
        assert_eq!(Counters::parse(&text), Some(counters));
        counters.check().unwrap();
        assert_eq!(Counters::parse("RAW_IN 1\n"), None);
    }

    #[test]
    fn conservation_violations() {
        let bad = Counters {
            raw_in: 1,
            ..Default::default()
        };
        assert!(bad.check().is_err());
        let miss = Counters {
            in_syn_id: 2,
            restored_raw: 1,
            decode_miss: 1,
            raw_in: 2,
            out_syn_id: 2,
            ..Default::default()
        };
        miss.check().unwrap();
    }
}
