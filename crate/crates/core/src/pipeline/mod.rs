//! Discrete-event model of the compression path: encoder switch, zero-delay
//! link, decoder switch, and the control plane that learns basis mappings
//! from digests.

mod counters;
mod frame;
mod nodes;
mod sim;

use thiserror::Error;

use crate::dictionary::DictError;
use crate::gdcore::{GdError, GeneratorPolynomial, HammingCode};
use crate::time::SimTime;

pub use counters::Counters;
pub use frame::{parse_frame, serialize_frame, Frame, FrameFields, FrameKind, WireFormat};
pub use nodes::{DecoderNode, Digest, EncoderNode, EncoderOutput};
pub use sim::{
    run_pipeline, ControlPlane, Install, InstallSide, Pipeline, PipelineRun, RunSummary, Schedule,
    StepOutcome,
};

/// Measured time to record and apply a new mapping on the hardware target.
pub const DEFAULT_LEARNING_DELAY: SimTime = SimTime(1_770_000);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("malformed {kind} frame: {reason}")]
    MalformedFrame { kind: FrameKind, reason: String },
    #[error("compressed frame references unmapped id {0}")]
    DecodeMiss(u32),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("schedule has no arrival time for chunk {0}")]
    ScheduleTooShort(usize),
    #[error("frame at {now} arrived before previous frame at {last}")]
    TimeWentBackwards { last: SimTime, now: SimTime },
    #[error("pipeline invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Codec(#[from] GdError),
    #[error(transparent)]
    Dictionary(#[from] DictError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub m: u32,
    /// Index into the generator registry for `m`; 0 is the default
    /// polynomial.
    pub generator_variant: usize,
    pub id_width: u32,
    /// Digest-to-install latency; `None` disables learning entirely.
    pub learning_delay: Option<SimTime>,
    /// Adds 8 zero bits after the syndrome of every `SYN_BASIS` frame.
    pub paper_padding: bool,
    /// Fraction of `learning_delay` after which the decoder-side mapping is
    /// live. The encoder side always goes live at the full delay; at 1.0
    /// both happen at the same instant, decoder first.
    pub decoder_install_lead: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: 8,
            generator_variant: 0,
            id_width: crate::dictionary::DEFAULT_ID_WIDTH,
            learning_delay: Some(DEFAULT_LEARNING_DELAY),
            paper_padding: false,
            decoder_install_lead: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.decoder_install_lead) {
            return Err(PipelineError::Config(format!(
                "decoder_install_lead {} outside [0, 1]",
                self.decoder_install_lead
            )));
        }
        if !(1..=crate::dictionary::MAX_ID_WIDTH).contains(&self.id_width) {
            return Err(PipelineError::Config(format!(
                "id width {} outside 1..={}",
                self.id_width,
                crate::dictionary::MAX_ID_WIDTH
            )));
        }
        Ok(())
    }

    pub fn code(&self) -> Result<HammingCode, PipelineError> {
        let generator = GeneratorPolynomial::hamming_variant(self.m, self.generator_variant)?;
        Ok(HammingCode::with_generator(generator)?)
    }
}
