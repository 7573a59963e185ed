//! Generalized deduplication (GD) for line-rate packet payload compression.
//!
//! * [`gdcore`]: polynomial remainders over GF(2), Hamming code construction
//!   and the chunk transforms.
//! * [`dictionary`]: the basis to identifier mapping with LRU recycling.
//! * [`pipeline`]: wire frames and a discrete-event model of the encoder
//!   switch, decoder switch and control plane.
//! * [`traces`]: synthetic and file-backed chunk traces.
//! * [`cli`]: the `gdline` command-line tool.

pub mod cli;
pub mod dictionary;
pub mod gdcore;
pub mod pcap;
pub mod pipeline;
pub mod report;
pub mod time;
pub mod traces;

pub use dictionary::{BasisId, DictError, DictionaryState, LearnOutcome};
pub use gdcore::{BitChunk, EncodedChunk, GdError, GeneratorPolynomial, HammingCode};
pub use pipeline::{Counters, Pipeline, PipelineConfig, PipelineError, Schedule};
pub use report::{RunMode, RunReport};
pub use time::SimTime;
pub use traces::{Trace, TraceError, TraceSpec};
