//! Compression run reports.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::pipeline::{Counters, RunSummary};

/// Which compression-table setup a run used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunMode {
    /// The table stays empty.
    NoTable,
    /// Every basis in the trace is installed before replay.
    Static,
    /// The table starts empty and is filled from digests.
    Dynamic,
}

impl RunMode {
    pub fn label(self) -> &'static str {
        match self {
            RunMode::NoTable => "no-table",
            RunMode::Static => "static",
            RunMode::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no-table" => Ok(RunMode::NoTable),
            "static" => Ok(RunMode::Static),
            "dynamic" => Ok(RunMode::Dynamic),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mode: RunMode,
    pub chunks: u64,
    pub raw_bytes: u64,
    pub encoded_bytes: u64,
    pub counters: Counters,
    /// Size of the payload file after an external general-purpose
    /// compressor, when supplied.
    pub external_bytes: Option<u64>,
}

impl RunReport {
    pub fn from_summary(mode: RunMode, summary: &RunSummary) -> Self {
        RunReport {
            mode,
            chunks: summary.chunks,
            raw_bytes: summary.raw_bytes,
            encoded_bytes: summary.encoded_bytes,
            counters: summary.counters,
            external_bytes: None,
        }
    }

    pub fn ratio(&self) -> f64 {
        ratio(self.encoded_bytes, self.raw_bytes)
    }

    pub fn savings_percent(&self) -> f64 {
        100.0 * (1.0 - self.ratio())
    }

    /// Stable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "case={}", self.mode);
        let _ = writeln!(out, "chunks={}", self.chunks);
        let _ = writeln!(out, "raw_bytes={}", self.raw_bytes);
        let _ = writeln!(out, "encoded_bytes={}", self.encoded_bytes);
        let _ = writeln!(out, "ratio={:.6}", self.ratio());
        let _ = writeln!(out, "savings_percent={:.3}", self.savings_percent());
        if let Some(external) = self.external_bytes {
            let _ = writeln!(out, "external_bytes={external}");
            let _ = writeln!(out, "external_ratio={:.6}", ratio(external, self.raw_bytes));
        }
        for (name, value) in self.counters.named() {
            let _ = writeln!(out, "counter.{name}={value}");
        }
        out
    }

    /// Human-readable comparison table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>14} {:>10}",
            "case", "payload bytes", "ratio"
        );
        let _ = writeln!(
            out,
            "{:<12} {:>14} {:>10.4}",
            "baseline", self.raw_bytes, 1.0
        );
        let _ = writeln!(
            out,
            "{:<12} {:>14} {:>10.4}",
            self.mode.label(),
            self.encoded_bytes,
            self.ratio()
        );
        if let Some(external) = self.external_bytes {
            let _ = writeln!(
                out,
                "{:<12} {:>14} {:>10.4}",
                "external",
                external,
                ratio(external, self.raw_bytes)
            );
        }
        out
    }
}

fn ratio(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Parses `key=value` report lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> RunReport {
        RunReport {
            mode: RunMode::Static,
            chunks: 1000,
            raw_bytes: 32_000,
            encoded_bytes: 3_000,
            counters: Counters::default(),
            external_bytes: None,
        }
    }

    #[test]
    fn key_values_are_stable() {
        let text = report().to_key_values();
        let kv = parse_key_values(&text);
        assert_eq!(kv[0], ("case".into(), "static".into()));
        assert!(text.contains("ratio=0.093750\n"));
        assert!(text.contains("savings_percent=90.625\n"));
        assert!(text.contains("counter.DECODE_MISS=0\n"));
        assert!(!text.contains("external"));
    }

    #[test]
    fn external_baseline_is_optional() {
        let mut r = report();
        r.external_bytes = Some(8_000);
        assert!(r.to_key_values().contains("external_ratio=0.250000"));
        assert!(r.to_table().contains("external"));
    }

    #[test]
    fn mode_parsing() {
        for mode in [RunMode::NoTable, RunMode::Static, RunMode::Dynamic] {
            assert_eq!(mode.label().parse::<RunMode>().unwrap(), mode);
        }
        assert!("gzip".parse::<RunMode>().is_err());
    }
}
