use std::collections::VecDeque;

use crate::dictionary::{BasisId, DictError, DictionaryState};
use crate::gdcore::{BitChunk, HammingCode};
use crate::time::SimTime;
use crate::traces::Trace;

use super::frame::{Frame, FrameKind, WireFormat};
use super::nodes::{DecoderNode, Digest, EncoderNode};
use super::{Counters, PipelineConfig, PipelineError};

/// Which switch a mapping was made visible on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstallSide {
    Decoder,
    Encoder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Install {
    pub side: InstallSide,
    pub id: BasisId,
    pub basis: BitChunk,
    pub at: SimTime,
    /// Basis whose identifier was recycled, reported with the decoder-side
    /// install.
    pub evicted: Option<BitChunk>,
}

/// Owns the authoritative dictionary and turns digests into installs after
/// the configured delay: reverse mapping on the decoder first, forward
/// mapping on the encoder afterwards.
#[derive(Clone, Debug)]
pub struct ControlPlane {
    dict: DictionaryState,
    learning_delay: Option<SimTime>,
    decoder_lead: SimTime,
    learn_queue: VecDeque<(SimTime, Digest)>,
    encoder_queue: VecDeque<(SimTime, BitChunk, BasisId)>,
    pub counters: Counters,
}

impl ControlPlane {
    fn new(config: &PipelineConfig, basis_bits: usize) -> Result<Self, PipelineError> {
        let decoder_lead = config.learning_delay.map_or(SimTime::ZERO, |delay| {
            SimTime((delay.as_nanos() as f64 * config.decoder_install_lead).round() as u64)
        });
        Ok(ControlPlane {
            dict: DictionaryState::new(config.id_width, basis_bits)?,
            learning_delay: config.learning_delay,
            decoder_lead,
            learn_queue: VecDeque::new(),
            encoder_queue: VecDeque::new(),
            counters: Counters::default(),
        })
    }

    pub fn dictionary(&self) -> &DictionaryState {
        &self.dict
    }

    pub fn pending(&self) -> usize {
        self.learn_queue.len() + self.encoder_queue.len()
    }

    fn accept(&mut self, digest: Digest) {
        if self.learning_delay.is_some() {
            let due = digest.emitted_at.saturating_add(self.decoder_lead);
            self.learn_queue.push_back((due, digest));
        }
    }

    /// Due time of the earliest queued event.
    pub fn next_due(&self) -> Option<SimTime> {
        let learn = self.learn_queue.front().map(|e| e.0);
        let encoder = self.encoder_queue.front().map(|e| e.0);
        match (learn, encoder) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Applies every event due at or before `now`, in due order; at equal
    /// times decoder-side learning runs before encoder-side installs.
    pub fn step(
        &mut self,
        now: SimTime,
        encoder: &mut EncoderNode,
        decoder: &mut DecoderNode,
    ) -> Result<Vec<Install>, PipelineError> {
        let mut installs = Vec::new();
        loop {
            let learn_due = self.learn_queue.front().map(|e| e.0).filter(|&t| t <= now);
            let encoder_due = self
                .encoder_queue
                .front()
                .map(|e| e.0)
                .filter(|&t| t <= now);
            match (learn_due, encoder_due) {
                (Some(l), e) if e.is_none_or(|e| l <= e) => {
                    let (at, digest) = self.learn_queue.pop_front().unwrap();
                    if let Some(install) = self.learn(at, digest, encoder, decoder)? {
                        installs.push(install);
                    }
                }
                (_, Some(_)) => {
                    let (at, basis, id) = self.encoder_queue.pop_front().unwrap();
                    if let Some(install) = self.activate(at, basis, id, encoder, decoder)? {
                        installs.push(install);
                    }
                }
                _ => break,
            }
        }
        Ok(installs)
    }

    fn learn(
        &mut self,
        at: SimTime,
        digest: Digest,
        encoder: &mut EncoderNode,
        decoder: &mut DecoderNode,
    ) -> Result<Option<Install>, PipelineError> {
        let outcome = match self.dict.learn(&digest.basis, at) {
            Ok(outcome) => outcome,
            Err(DictError::AlreadyKnown(_)) => {
                encoder.clear_pending(&digest.basis);
                return Ok(None);
            }
            Err(e) => return Err(e.into()),
        };
        let id = outcome.assigned;
        if let Some(old) = &outcome.evicted_basis {
            // The encoder stops using the identifier before the decoder
            // learns its new meaning.
            encoder.remove(old);
            decoder.remove(id);
            self.counters.evictions += 1;
        }
        decoder.install(id, digest.basis.clone());
        self.counters.installs += 1;
        let encoder_due = digest
            .emitted_at
            .saturating_add(self.learning_delay.expect("learning enabled"));
        self.encoder_queue
            .push_back((encoder_due.max(at), digest.basis.clone(), id));
        Ok(Some(Install {
            side: InstallSide::Decoder,
            id,
            basis: digest.basis,
            at,
            evicted: outcome.evicted_basis,
        }))
    }

    fn activate(
        &mut self,
        at: SimTime,
        basis: BitChunk,
        id: BasisId,
        encoder: &mut EncoderNode,
        decoder: &mut DecoderNode,
    ) -> Result<Option<Install>, PipelineError> {
        if self.dict.peek_id(&basis) != Some(id) {
            // Recycled before the encoder side went live.
            encoder.clear_pending(&basis);
            return Ok(None);
        }
        if decoder.lookup(id) != Some(&basis) {
            return Err(PipelineError::Invariant(format!(
                "encoder install of id {} precedes decoder mapping",
                id.value()
            )));
        }
        encoder.install(basis.clone(), id);
        Ok(Some(Install {
            side: InstallSide::Encoder,
            id,
            basis,
            at,
            evicted: None,
        }))
    }
}

/// Arrival times of trace chunks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Chunk `i` arrives at `start + i * gap`.
    Uniform { start: SimTime, gap: SimTime },
    /// Explicit non-decreasing arrival times, one per chunk.
    Explicit(Vec<SimTime>),
}

impl Schedule {
    pub fn uniform(gap: SimTime) -> Self {
        Schedule::Uniform {
            start: SimTime::ZERO,
            gap,
        }
    }

    pub fn time_of(&self, index: usize) -> Option<SimTime> {
        match self {
            Schedule::Uniform { start, gap } => Some(SimTime(
                start
                    .as_nanos()
                    .checked_add(gap.as_nanos().checked_mul(index as u64)?)?,
            )),
            Schedule::Explicit(times) => times.get(index).copied(),
        }
    }
}

/// Result of pushing one chunk through encoder, link and decoder.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    /// Frame as it crossed the link.
    pub link_frame: Frame,
    /// Restored chunk; `None` when the decoder dropped the frame.
    pub restored: Option<BitChunk>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub chunks: u64,
    pub raw_bytes: u64,
    pub encoded_bytes: u64,
    /// Chunks that were dropped or restored incorrectly.
    pub mismatches: u64,
    pub counters: Counters,
}

impl RunSummary {
    pub fn ratio(&self) -> f64 {
        if self.raw_bytes == 0 {
            0.0
        } else {
            self.encoded_bytes as f64 / self.raw_bytes as f64
        }
    }

    pub fn lossless(&self) -> bool {
        self.mismatches == 0
    }
}

/// Encoder switch, zero-delay link, decoder switch and control plane.
///
/// The world is single-threaded and fully deterministic. Events at the same
/// instant are ordered data plane first: a frame arriving exactly when an
/// install becomes due is still processed against the old tables.
#[derive(Clone, Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    code: HammingCode,
    format: WireFormat,
    encoder: EncoderNode,
    decoder: DecoderNode,
    control: ControlPlane,
    last_time: SimTime,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let code = config.code()?;
        let format = WireFormat::new(&code, config.id_width, config.paper_padding);
        Ok(Pipeline {
            encoder: EncoderNode::new(code.clone(), format),
            decoder: DecoderNode::new(code.clone(), format),
            control: ControlPlane::new(&config, code.k())?,
            config,
            code,
            format,
            last_time: SimTime::ZERO,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn code(&self) -> &HammingCode {
        &self.code
    }

    pub fn format(&self) -> &WireFormat {
        &self.format
    }

    pub fn dictionary(&self) -> &DictionaryState {
        self.control.dictionary()
    }

    pub fn encoder(&self) -> &EncoderNode {
        &self.encoder
    }

    pub fn decoder(&self) -> &DecoderNode {
        &self.decoder
    }

    pub fn control_plane(&self) -> &ControlPlane {
        &self.control
    }

    /// Learns each basis (first occurrence wins) and makes it visible on both
    /// switches immediately.
    pub fn preload<'a>(
        &mut self,
        bases: impl IntoIterator<Item = &'a BitChunk>,
    ) -> Result<(), PipelineError> {
        for basis in bases {
            if self.control.dict.peek_id(basis).is_some() {
                continue;
            }
            let outcome = self.control.dict.learn(basis, self.last_time)?;
            if let Some(old) = &outcome.evicted_basis {
                self.encoder.remove(old);
                self.decoder.remove(outcome.assigned);
            }
            self.decoder.install(outcome.assigned, basis.clone());
            self.encoder.install(basis.clone(), outcome.assigned);
        }
        Ok(())
    }

    /// Preloads the basis of every chunk in `trace`.
    pub fn preload_trace(&mut self, trace: &Trace) -> Result<(), PipelineError> {
        let mut bases = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for chunk in trace.iter() {
            let basis = self.code.basis_of(&chunk)?;
            if seen.insert(basis.clone()) {
                bases.push(basis);
            }
        }
        self.preload(bases.iter())
    }

    /// Replaces the dictionary with `dict` and installs all its entries.
    pub fn preload_dictionary(&mut self, dict: DictionaryState) -> Result<(), PipelineError> {
        if dict.id_width() != self.config.id_width || dict.basis_bits() != self.code.k() {
            return Err(PipelineError::Config(format!(
                "dictionary holds {}-bit ids and {}-bit bases, pipeline expects {} and {}",
                dict.id_width(),
                dict.basis_bits(),
                self.config.id_width,
                self.code.k()
            )));
        }
        for (id, basis) in dict.entries() {
            self.decoder.install(id, basis.clone());
            self.encoder.install(basis.clone(), id);
        }
        self.control.dict = dict;
        Ok(())
    }

    /// Runs control-plane events due strictly before `now`.
    fn advance_before(&mut self, now: SimTime) -> Result<Vec<Install>, PipelineError> {
        let mut installs = Vec::new();
        while let Some(due) = self.control.next_due() {
            if due >= now {
                break;
            }
            installs.extend(self.control_plane_step(due)?);
        }
        Ok(installs)
    }

    /// Applies every control-plane event due at or before `now`.
    pub fn control_plane_step(&mut self, now: SimTime) -> Result<Vec<Install>, PipelineError> {
        self.control.step(now, &mut self.encoder, &mut self.decoder)
    }

    /// Feeds one RAW frame through the encoder, the link and the decoder.
    pub fn ingest(&mut self, raw: &Frame) -> Result<StepOutcome, PipelineError> {
        let now = raw.timestamp;
        if now < self.last_time {
            return Err(PipelineError::TimeWentBackwards {
                last: self.last_time,
                now,
            });
        }
        self.last_time = now;
        self.advance_before(now)?;
        let out = self.encoder.process(raw, now)?;
        if let Some(basis) = &out.hit {
            self.control.dict.lookup_id(basis, now);
        }
        if let Some(digest) = out.digest {
            self.control.accept(digest);
        }
        let restored = match self.decoder.process(&out.frame) {
            Ok(frame) => Some(
                BitChunk::from_be_bytes(&frame.payload, self.format.chunk_bits())
                    .expect("decoder emits whole chunks"),
            ),
            Err(PipelineError::DecodeMiss(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(StepOutcome {
            link_frame: out.frame,
            restored,
        })
    }

    /// Convenience wrapper around [`Pipeline::ingest`] for a chunk.
    pub fn ingest_chunk(
        &mut self,
        chunk: &BitChunk,
        now: SimTime,
    ) -> Result<StepOutcome, PipelineError> {
        let frame = Frame {
            kind: FrameKind::Raw,
            payload: chunk.to_be_bytes(),
            timestamp: now,
        };
        self.ingest(&frame)
    }

    /// Aggregated counters of all three members.
    pub fn counters(&self) -> Counters {
        let mut total = self.encoder.counters;
        total += self.decoder.counters;
        total += self.control.counters;
        total
    }

    /// Every forward mapping visible on the encoder is also visible, with
    /// the same identifier, on the decoder.
    pub fn check_visibility(&self) -> Result<(), String> {
        for (basis, id) in self.encoder.table() {
            if self.decoder.lookup(id) != Some(basis) {
                return Err(format!(
                    "encoder maps a basis to id {} unknown to the decoder",
                    id.value()
                ));
            }
        }
        Ok(())
    }

    /// Replays `trace` on `schedule`, comparing every restored chunk with
    /// its input. `observer` sees each link frame.
    pub fn run(
        &mut self,
        trace: &Trace,
        schedule: &Schedule,
        mut observer: impl FnMut(&Frame),
    ) -> Result<RunSummary, PipelineError> {
        self.run_inner(trace, schedule, &mut observer, |_| {})
    }

    fn run_inner(
        &mut self,
        trace: &Trace,
        schedule: &Schedule,
        observer: &mut dyn FnMut(&Frame),
        mut sink: impl FnMut(Option<BitChunk>),
    ) -> Result<RunSummary, PipelineError> {
        if trace.chunk_bits() != self.format.chunk_bits() {
            return Err(PipelineError::Config(format!(
                "trace has {}-bit chunks, code expects {}",
                trace.chunk_bits(),
                self.format.chunk_bits()
            )));
        }
        let mut summary = RunSummary::default();
        for (index, chunk) in trace.iter().enumerate() {
            let now = schedule
                .time_of(index)
                .ok_or(PipelineError::ScheduleTooShort(index))?;
            let outcome = self.ingest_chunk(&chunk, now)?;
            observer(&outcome.link_frame);
            summary.chunks += 1;
            summary.raw_bytes += self.format.raw_bytes() as u64;
            summary.encoded_bytes += outcome.link_frame.payload.len() as u64;
            if outcome.restored.as_ref() != Some(&chunk) {
                summary.mismatches += 1;
            }
            sink(outcome.restored);
        }
        summary.counters = self.counters();
        summary.counters.check().map_err(PipelineError::Invariant)?;
        Ok(summary)
    }
}

/// Output of [`run_pipeline`].
#[derive(Clone, Debug)]
pub struct PipelineRun {
    /// Restored chunks in arrival order; dropped frames are missing.
    pub output: Trace,
    pub summary: RunSummary,
}

/// Replays `trace` through a fresh pipeline and collects the decoder output.
pub fn run_pipeline(
    trace: &Trace,
    config: PipelineConfig,
    schedule: &Schedule,
) -> Result<PipelineRun, PipelineError> {
    let mut pipeline = Pipeline::new(config)?;
    let mut output =
        Trace::new(trace.chunk_bits()).map_err(|e| PipelineError::Config(e.to_string()))?;
    let summary = pipeline.run_inner(trace, schedule, &mut |_| {}, |restored| {
        if let Some(chunk) = restored {
            output
                .push(&chunk)
                .expect("restored chunks have the trace width");
        }
    })?;
    Ok(PipelineRun { output, summary })
}
