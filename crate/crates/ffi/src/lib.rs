//! C ABI over the `gdline` codec, dictionary and pipeline.
//!
//! Objects are opaque heap handles created by `*_new` and released by the
//! matching `*_free`. Every fallible call returns a [`GdStatus`]; on failure
//! a message is kept per thread and can be fetched with
//! [`gd_last_error_message`]. Chunks, bases and frames cross the boundary as
//! big-endian byte strings, right-aligned when the bit length is not a
//! multiple of 8.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gdline::dictionary::DictError;
use gdline::pipeline::{Counters, FrameKind, Pipeline, PipelineConfig, PipelineError};
use gdline::{
    BasisId, BitChunk, DictionaryState, EncodedChunk, GdError, GeneratorPolynomial, HammingCode,
    SimTime,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unsupported = 3,
    BufferTooSmall = 4,
    NotFound = 5,
    AlreadyKnown = 6,
    Malformed = 7,
    Invariant = 8,
    Panic = 9,
}

/// Passed as `learning_delay_ns` to disable learning.
pub const GD_NO_LEARNING: u64 = u64::MAX;

pub struct GdCode {
    code: HammingCode,
}

pub struct GdDictionary {
    dict: DictionaryState,
}

pub struct GdPipeline {
    pipeline: Pipeline,
}

/// Link frame produced for one chunk by [`gd_pipeline_process`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GdStep {
    /// 1 = RAW, 2 = SYN_BASIS, 3 = SYN_ID.
    pub frame_kind: u8,
    pub frame_bytes: u32,
    /// Whether the decoder restored a chunk into the output buffer.
    pub restored: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GdCounters {
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

impl From<Counters> for GdCounters {
    fn from(c: Counters) -> Self {
        GdCounters {
            raw_in: c.raw_in,
            out_syn_basis: c.out_syn_basis,
            out_syn_id: c.out_syn_id,
            in_syn_basis: c.in_syn_basis,
            in_syn_id: c.in_syn_id,
            restored_raw: c.restored_raw,
            digests: c.digests,
            installs: c.installs,
            evictions: c.evictions,
            decode_miss: c.decode_miss,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(GdStatus, String);

impl Failure {
    fn new(status: GdStatus, msg: impl Into<String>) -> Self {
        Failure(status, msg.into())
    }
}

impl From<GdError> for Failure {
    fn from(e: GdError) -> Self {
        let status = match e {
            GdError::UnsupportedM(_) | GdError::UnsupportedVariant { .. } => GdStatus::Unsupported,
            _ => GdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<DictError> for Failure {
    fn from(e: DictError) -> Self {
        let status = match e {
            DictError::AlreadyKnown(_) => GdStatus::AlreadyKnown,
            _ => GdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::MalformedFrame { .. } => GdStatus::Malformed,
            PipelineError::Invariant(_) => GdStatus::Invariant,
            PipelineError::Codec(GdError::UnsupportedM(_)) => GdStatus::Unsupported,
            _ => GdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GdStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|_| Err(Failure::new(GdStatus::Panic, "internal panic")));
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            GdStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

fn null() -> Failure {
    Failure::new(GdStatus::NullPointer, "null pointer argument")
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn input<'a>(p: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if p.is_null() {
        return if len == 0 { Ok(&[]) } else { Err(null()) };
    }
    Ok(slice::from_raw_parts(p, len))
}

fn bits(bytes: &[u8], len: usize) -> Result<BitChunk, Failure> {
    if bytes.len() != len.div_ceil(8) {
        return Err(Failure::new(
            GdStatus::InvalidArgument,
            format!(
                "expected {} bytes for {len} bits, got {}",
                len.div_ceil(8),
                bytes.len()
            ),
        ));
    }
    Ok(BitChunk::from_be_bytes(bytes, len)?)
}

unsafe fn write_bytes(bytes: &[u8], dst: *mut u8, cap: usize) -> Result<(), Failure> {
    if cap < bytes.len() {
        return Err(Failure::new(
            GdStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {cap}", bytes.len()),
        ));
    }
    if dst.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), dst, bytes.len());
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap`, and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn gd_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates the Hamming code for `m` using generator `variant` (0 unless an
/// alternative exists).
///
/// # Safety
/// `out_code` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_code_new(m: u32, variant: u32, out_code: *mut *mut GdCode) -> GdStatus {
    guard(|| {
        let slot = out(out_code)?;
        let generator = GeneratorPolynomial::hamming_variant(m, variant as usize)?;
        let code = HammingCode::with_generator(generator)?;
        *slot = Box::into_raw(Box::new(GdCode { code }));
        Ok(())
    })
}

/// # Safety
/// `code` must be null or a handle from [`gd_code_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gd_code_free(code: *mut GdCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Reports m, n = 2^m - 1, k = n - m and the generator's low bits.
///
/// # Safety
/// `code` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn gd_code_params(
    code: *const GdCode,
    m: *mut u32,
    n: *mut u32,
    k: *mut u32,
    generator_low_bits: *mut u32,
) -> GdStatus {
    guard(|| {
        let code = &handle(code)?.code;
        if let Some(m) = m.as_mut() {
            *m = code.m();
        }
        if let Some(n) = n.as_mut() {
            *n = code.n() as u32;
        }
        if let Some(k) = k.as_mut() {
            *k = code.k() as u32;
        }
        if let Some(g) = generator_low_bits.as_mut() {
            *g = code.generator().low_bits();
        }
        Ok(())
    })
}

/// Splits a 2^m-bit chunk into syndrome, msb and basis. The basis is
/// written as ceil(k/8) bytes.
///
/// # Safety
/// `chunk` must be valid for `chunk_len` bytes, `basis_out` for `basis_cap`
/// bytes, and the remaining outputs for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_code_encode(
    code: *const GdCode,
    chunk: *const u8,
    chunk_len: usize,
    syndrome: *mut u32,
    msb: *mut bool,
    basis_out: *mut u8,
    basis_cap: usize,
) -> GdStatus {
    guard(|| {
        let code = &handle(code)?.code;
        let (syndrome, msb) = (out(syndrome)?, out(msb)?);
        let chunk = bits(input(chunk, chunk_len)?, code.chunk_bits())?;
        let encoded = code.encode_chunk(&chunk)?;
        write_bytes(&encoded.basis.to_be_bytes(), basis_out, basis_cap)?;
        *syndrome = encoded.syndrome;
        *msb = encoded.msb;
        Ok(())
    })
}

/// Inverse of [`gd_code_encode`]; writes 2^m / 8 bytes.
///
/// # Safety
/// `basis` must be valid for `basis_len` bytes and `chunk_out` for
/// `chunk_cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn gd_code_decode(
    code: *const GdCode,
    syndrome: u32,
    msb: bool,
    basis: *const u8,
    basis_len: usize,
    chunk_out: *mut u8,
    chunk_cap: usize,
) -> GdStatus {
    guard(|| {
        let code = &handle(code)?.code;
        let basis = bits(input(basis, basis_len)?, code.k())?;
        let chunk = code.decode_chunk(&EncodedChunk {
            syndrome,
            msb,
            basis,
        })?;
        write_bytes(&chunk.to_be_bytes(), chunk_out, chunk_cap)
    })
}

/// # Safety
/// `out_dict` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_new(
    id_width: u32,
    basis_bits: u32,
    out_dict: *mut *mut GdDictionary,
) -> GdStatus {
    guard(|| {
        let slot = out(out_dict)?;
        let dict = DictionaryState::new(id_width, basis_bits as usize)?;
        *slot = Box::into_raw(Box::new(GdDictionary { dict }));
        Ok(())
    })
}

/// # Safety
/// `dict` must be null or a live handle from [`gd_dictionary_new`].
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_free(dict: *mut GdDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Number of installed mappings, or 0 for a null handle.
///
/// # Safety
/// `dict` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_len(dict: *const GdDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.dict.len())
}

/// Assigns an identifier to an unknown basis, recycling the least recently
/// used one when the pool is exhausted.
///
/// # Safety
/// `basis` must be valid for `basis_len` bytes; `id` and `evicted` for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_learn(
    dict: *mut GdDictionary,
    basis: *const u8,
    basis_len: usize,
    now_ns: u64,
    id: *mut u32,
    evicted: *mut bool,
) -> GdStatus {
    guard(|| {
        let dict = &mut handle_mut(dict)?.dict;
        let (id, evicted) = (out(id)?, out(evicted)?);
        let basis = bits(input(basis, basis_len)?, dict.basis_bits())?;
        let outcome = dict.learn(&basis, SimTime::from_nanos(now_ns))?;
        *id = outcome.assigned.value();
        *evicted = outcome.evicted_basis.is_some();
        Ok(())
    })
}

/// Finds the identifier of `basis` and marks it used at `now_ns`.
///
/// # Safety
/// `basis` must be valid for `basis_len` bytes and `id` for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_lookup_id(
    dict: *mut GdDictionary,
    basis: *const u8,
    basis_len: usize,
    now_ns: u64,
    id: *mut u32,
) -> GdStatus {
    guard(|| {
        let dict = &mut handle_mut(dict)?.dict;
        let id = out(id)?;
        let basis = bits(input(basis, basis_len)?, dict.basis_bits())?;
        let found = dict
            .lookup_id(&basis, SimTime::from_nanos(now_ns))
            .ok_or_else(|| Failure::new(GdStatus::NotFound, "basis not in dictionary"))?;
        *id = found.value();
        Ok(())
    })
}

/// # Safety
/// `basis_out` must be valid for `basis_cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn gd_dictionary_lookup_basis(
    dict: *const GdDictionary,
    id: u32,
    basis_out: *mut u8,
    basis_cap: usize,
) -> GdStatus {
    guard(|| {
        let dict = &handle(dict)?.dict;
        let basis = BasisId::new(id, dict.id_width())
            .and_then(|id| dict.lookup_basis(id))
            .ok_or_else(|| Failure::new(GdStatus::NotFound, format!("id {id} not assigned")))?;
        write_bytes(&basis.to_be_bytes(), basis_out, basis_cap)
    })
}

/// Creates an encoder/decoder/control-plane model. `learning_delay_ns` of
/// [`GD_NO_LEARNING`] keeps the table empty.
///
/// # Safety
/// `out_pipeline` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_pipeline_new(
    m: u32,
    id_width: u32,
    learning_delay_ns: u64,
    paper_padding: bool,
    out_pipeline: *mut *mut GdPipeline,
) -> GdStatus {
    guard(|| {
        let slot = out(out_pipeline)?;
        let config = PipelineConfig {
            m,
            id_width,
            learning_delay: (learning_delay_ns != GD_NO_LEARNING)
                .then(|| SimTime::from_nanos(learning_delay_ns)),
            paper_padding,
            ..PipelineConfig::default()
        };
        let pipeline = Pipeline::new(config)?;
        *slot = Box::into_raw(Box::new(GdPipeline { pipeline }));
        Ok(())
    })
}

/// # Safety
/// `pipeline` must be null or a live handle from [`gd_pipeline_new`].
#[no_mangle]
pub unsafe extern "C" fn gd_pipeline_free(pipeline: *mut GdPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Sends one chunk arriving at `now_ns` through encoder, link and decoder.
/// The restored chunk, if any, goes to `restored_out`.
///
/// # Safety
/// `chunk` must be valid for `chunk_len` bytes, `restored_out` for
/// `restored_cap` bytes and `step` for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_pipeline_process(
    pipeline: *mut GdPipeline,
    chunk: *const u8,
    chunk_len: usize,
    now_ns: u64,
    step: *mut GdStep,
    restored_out: *mut u8,
    restored_cap: usize,
) -> GdStatus {
    guard(|| {
        let pipeline = &mut handle_mut(pipeline)?.pipeline;
        let step = out(step)?;
        let chunk_bits = pipeline.format().chunk_bits();
        let chunk = bits(input(chunk, chunk_len)?, chunk_bits)?;
        if restored_cap < chunk_bits / 8 {
            return Err(Failure::new(
                GdStatus::BufferTooSmall,
                "restored buffer too small",
            ));
        }
        let outcome = pipeline.ingest_chunk(&chunk, SimTime::from_nanos(now_ns))?;
        *step = GdStep {
            frame_kind: outcome.link_frame.kind.number(),
            frame_bytes: outcome.link_frame.payload.len() as u32,
            restored: outcome.restored.is_some(),
        };
        if let Some(restored) = outcome.restored {
            write_bytes(&restored.to_be_bytes(), restored_out, restored_cap)?;
        }
        Ok(())
    })
}

/// # Safety
/// `counters` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gd_pipeline_counters(
    pipeline: *const GdPipeline,
    counters: *mut GdCounters,
) -> GdStatus {
    guard(|| {
        let pipeline = &handle(pipeline)?.pipeline;
        *out(counters)? = pipeline.counters().into();
        Ok(())
    })
}

/// EtherType of frames of `frame_kind`, or 0 for an unknown kind.
#[no_mangle]
pub extern "C" fn gd_frame_ethertype(frame_kind: u8) -> u16 {
    FrameKind::from_number(frame_kind).map_or(0, FrameKind::ethertype)
}
