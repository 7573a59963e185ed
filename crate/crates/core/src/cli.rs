//! `gdline` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a run violates an invariant (lossy
//! output, counter mismatch), 2 for usage and configuration errors.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::dictionary::{BasisId, DictionaryState};
use crate::gdcore::{BitChunk, GeneratorPolynomial, HammingCode, MAX_M, MIN_M};
use crate::pcap::PcapWriter;
use crate::pipeline::{
    parse_frame, serialize_frame, FrameFields, Pipeline, PipelineConfig, Schedule, WireFormat,
    DEFAULT_LEARNING_DELAY,
};
use crate::report::{RunMode, RunReport};
use crate::time::SimTime;
use crate::traces::{self, BasisDistribution, MsbPolicy, Trace, TraceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "gdline",
    version,
    about = "Generalized deduplication over Hamming codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    NoTable,
    Static,
    Dynamic,
}

impl From<ModeArg> for RunMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::NoTable => RunMode::NoTable,
            ModeArg::Static => RunMode::Static,
            ModeArg::Dynamic => RunMode::Dynamic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    Uniform,
    RoundRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MsbArg {
    Random,
    Zero,
    One,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print code parameters, generator polynomial and syndrome table.
    Tables {
        #[arg(long)]
        m: u32,
        /// Alternate generator polynomial where one exists (m=5, m=9).
        #[arg(long, default_value_t = 0)]
        variant: usize,
    },
    /// Generate a synthetic trace file.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = traces::DEFAULT_CHUNK_COUNT)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        m: u32,
        #[arg(long, default_value_t = 100)]
        bases: usize,
        #[arg(long, default_value_t = 0.2)]
        codeword_prob: f64,
        #[arg(long, value_enum, default_value_t = DistributionArg::Uniform)]
        distribution: DistributionArg,
        #[arg(long, value_enum, default_value_t = MsbArg::Random)]
        msb: MsbArg,
    },
    /// Cut an arbitrary file (or the payloads of a pcap capture) into a trace.
    Chunk {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        m: u32,
        /// Treat the input as a pcap capture and take one chunk per packet.
        #[arg(long)]
        pcap: bool,
    },
    /// Replay a trace through encoder, link and decoder.
    Run {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Dynamic)]
        mode: ModeArg,
        /// Digest-to-install latency in seconds.
        #[arg(long, default_value_t = DEFAULT_LEARNING_DELAY.as_secs_f64())]
        delay: f64,
        /// Inter-arrival time in seconds.
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
        /// Add 8 alignment bits to every SYN_BASIS frame.
        #[arg(long)]
        padding: bool,
        #[arg(long, default_value_t = crate::dictionary::DEFAULT_ID_WIDTH)]
        id_width: u32,
        #[arg(long, default_value_t = 0)]
        variant: usize,
        /// Fraction of the delay after which the decoder mapping is live.
        #[arg(long, default_value_t = 1.0)]
        decoder_lead: f64,
        /// Dictionary snapshot to load before replay.
        #[arg(long)]
        snapshot_in: Option<PathBuf>,
        /// Where to write the dictionary after replay.
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Capture of the link frames.
        #[arg(long)]
        pcap: Option<PathBuf>,
        /// Externally measured compressed size of the exported payloads.
        #[arg(long)]
        external_bytes: Option<u64>,
    },
    /// Software encode/decode throughput with a static table.
    Bench {
        trace: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long, default_value_t = 0)]
        variant: usize,
    },
    /// Write all chunk payloads of a trace back to back.
    ExportPayloads {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Tables { m, variant } => cmd_tables(m, variant),
        Command::Gen {
            out,
            seed,
            count,
            m,
            bases,
            codeword_prob,
            distribution,
            msb,
        } => {
            let spec = TraceSpec {
                seed,
                chunk_count: count,
                m,
                distinct_bases: bases,
                codeword_prob,
                basis_distribution: match distribution {
                    DistributionArg::Uniform => BasisDistribution::Uniform,
                    DistributionArg::RoundRobin => BasisDistribution::RoundRobin,
                },
                msb: match msb {
                    MsbArg::Random => MsbPolicy::Random,
                    MsbArg::Zero => MsbPolicy::Fixed(false),
                    MsbArg::One => MsbPolicy::Fixed(true),
                },
            };
            cmd_gen(&spec, &out)
        }
        Command::Chunk {
            input,
            out,
            m,
            pcap,
        } => cmd_chunk(&input, &out, m, pcap),
        Command::Run {
            trace,
            mode,
            delay,
            gap,
            padding,
            id_width,
            variant,
            decoder_lead,
            snapshot_in,
            snapshot_out,
            report,
            pcap,
            external_bytes,
        } => {
            let options = RunOptions {
                mode: mode.into(),
                delay: SimTime::from_secs_f64(delay)
                    .ok_or_else(|| usage(format!("bad --delay {delay}")))?,
                gap: SimTime::from_secs_f64(gap)
                    .ok_or_else(|| usage(format!("bad --gap {gap}")))?,
                padding,
                id_width,
                variant,
                decoder_lead,
                snapshot_in,
                snapshot_out,
                pcap,
                external_bytes,
            };
            let trace = traces::read_trace(&trace).map_err(usage)?;
            let report_out = cmd_run(&trace, &options)?;
            let text = format!("{}\n{}", report_out.to_table(), report_out.to_key_values());
            if let Some(path) = report {
                let commented: String = report_out
                    .to_table()
                    .lines()
                    .map(|l| format!("# {l}\n"))
                    .collect();
                fs::write(&path, commented + &report_out.to_key_values()).map_err(usage)?;
            }
            Ok(text)
        }
        Command::Bench {
            trace,
            threads,
            variant,
        } => {
            let trace = traces::read_trace(&trace).map_err(usage)?;
            let result = cmd_bench(&trace, threads, variant)?;
            Ok(result.to_key_values())
        }
        Command::ExportPayloads { trace, out } => {
            let trace = traces::read_trace(&trace).map_err(usage)?;
            cmd_export_payloads(&trace, &out)
        }
    }
}

fn m_for_chunk_bits(chunk_bits: usize) -> Result<u32, CliError> {
    (MIN_M..=MAX_M)
        .find(|&m| 1usize << m == chunk_bits)
        .ok_or_else(|| {
            usage(format!(
                "{chunk_bits}-bit chunks do not match any supported code"
            ))
        })
}

/// Renders the code header and its syndrome table. Codes short enough to
/// print get the single-bit sequence of each row as well.
pub fn cmd_tables(m: u32, variant: usize) -> Result<String, CliError> {
    let generator = GeneratorPolynomial::hamming_variant(m, variant).map_err(usage)?;
    let code = HammingCode::with_generator(generator).map_err(usage)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Hamming ({},{}) code, m={}, chunk {} bits",
        code.n(),
        code.k(),
        m,
        code.chunk_bits()
    );
    let _ = writeln!(
        out,
        "# generator {} (CRC-{} parameter {:#x})",
        generator,
        m,
        generator.low_bits()
    );
    let _ = writeln!(out, "# syndrome -> error bit position");
    let width = m as usize;
    for (syndrome, position) in code.syndrome_table() {
        let _ = write!(out, "{syndrome:0width$b} -> {position}");
        if code.n() <= 63 {
            let single = BitChunk::from_u64(1 << position, code.n()).expect("n > 0");
            let _ = write!(out, " ({single})");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_gen(spec: &TraceSpec, out: &Path) -> Result<String, CliError> {
    let trace = traces::gen_synthetic(spec).map_err(usage)?;
    traces::write_trace(out, &trace).map_err(usage)?;
    Ok(format!(
        "wrote {} chunks of {} bits to {}\n",
        trace.len(),
        trace.chunk_bits(),
        out.display()
    ))
}

pub fn cmd_chunk(input: &Path, out: &Path, m: u32, pcap: bool) -> Result<String, CliError> {
    if !(MIN_M..=MAX_M).contains(&m) {
        return Err(usage(format!("unsupported m={m}")));
    }
    let bytes = fs::read(input).map_err(usage)?;
    let chunk_bits = 1usize << m;
    let trace = if pcap {
        traces::chunk_pcap(&bytes, chunk_bits)
    } else {
        traces::chunk_file(&bytes, chunk_bits)
    }
    .map_err(usage)?;
    traces::write_trace(out, &trace).map_err(usage)?;
    Ok(format!(
        "wrote {} chunks to {}\n",
        trace.len(),
        out.display()
    ))
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: RunMode,
    pub delay: SimTime,
    pub gap: SimTime,
    pub padding: bool,
    pub id_width: u32,
    pub variant: usize,
    pub decoder_lead: f64,
    pub snapshot_in: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
    pub pcap: Option<PathBuf>,
    pub external_bytes: Option<u64>,
}

impl RunOptions {
    pub fn new(mode: RunMode) -> Self {
        RunOptions {
            mode,
            delay: DEFAULT_LEARNING_DELAY,
            gap: SimTime::from_micros(1),
            padding: false,
            id_width: crate::dictionary::DEFAULT_ID_WIDTH,
            variant: 0,
            decoder_lead: 1.0,
            snapshot_in: None,
            snapshot_out: None,
            pcap: None,
            external_bytes: None,
        }
    }
}

/// Replays `trace` and verifies the decoder restored it exactly. No report
/// is produced for a lossy run.
pub fn cmd_run(trace: &Trace, options: &RunOptions) -> Result<RunReport, CliError> {
    let m = m_for_chunk_bits(trace.chunk_bits())?;
    let config = PipelineConfig {
        m,
        generator_variant: options.variant,
        id_width: options.id_width,
        learning_delay: match options.mode {
            RunMode::NoTable => None,
            RunMode::Static | RunMode::Dynamic => Some(options.delay),
        },
        paper_padding: options.padding,
        decoder_install_lead: options.decoder_lead,
    };
    let mut pipeline = Pipeline::new(config).map_err(usage)?;
    if let Some(path) = &options.snapshot_in {
        let text = fs::read_to_string(path).map_err(usage)?;
        let dict = DictionaryState::import_snapshot(
            &text,
            options.id_width,
            pipeline.code().k(),
            SimTime::ZERO,
        )
        .map_err(usage)?;
        pipeline.preload_dictionary(dict).map_err(usage)?;
    } else if options.mode == RunMode::Static {
        pipeline.preload_trace(trace).map_err(usage)?;
    }

    let schedule = Schedule::uniform(options.gap);
    let summary = match &options.pcap {
        Some(path) => {
            let file = File::create(path).map_err(usage)?;
            let mut writer = PcapWriter::new(BufWriter::new(file)).map_err(usage)?;
            let mut io_error = None;
            let summary = pipeline.run(trace, &schedule, |frame| {
                if io_error.is_none() {
                    if let Err(e) = writer.write_ethernet(
                        frame.timestamp,
                        frame.kind.ethertype(),
                        &frame.payload,
                    ) {
                        io_error = Some(e);
                    }
                }
            });
            if let Some(e) = io_error {
                return Err(usage(e));
            }
            writer.flush().map_err(usage)?;
            summary
        }
        None => pipeline.run(trace, &schedule, |_| {}),
    }
    .map_err(|e| match e {
        crate::pipeline::PipelineError::Invariant(msg) => CliError::Invariant(msg),
        other => usage(other),
    })?;

    if !summary.lossless() || summary.counters.decode_miss != 0 {
        return Err(CliError::Invariant(format!(
            "{} of {} chunks were not restored exactly ({} decode misses)",
            summary.mismatches, summary.chunks, summary.counters.decode_miss
        )));
    }
    pipeline.check_visibility().map_err(CliError::Invariant)?;
    if let Some(path) = &options.snapshot_out {
        fs::write(path, pipeline.dictionary().export_snapshot()).map_err(usage)?;
    }
    let mut report = RunReport::from_summary(options.mode, &summary);
    report.external_bytes = options.external_bytes;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub threads: usize,
    pub chunks: u64,
    pub raw_bytes: u64,
    pub encoded_bytes: u64,
    pub elapsed_secs: f64,
}

impl BenchResult {
    pub fn chunks_per_sec(&self) -> f64 {
        self.chunks as f64 / self.elapsed_secs.max(f64::MIN_POSITIVE)
    }

    pub fn gbit_per_sec(&self) -> f64 {
        self.raw_bytes as f64 * 8.0 / self.elapsed_secs.max(f64::MIN_POSITIVE) / 1e9
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "threads={}\nchunks={}\nraw_bytes={}\nencoded_bytes={}\nelapsed_s={:.6}\nchunks_per_s={:.0}\ngbit_per_s={:.3}\n",
            self.threads,
            self.chunks,
            self.raw_bytes,
            self.encoded_bytes,
            self.elapsed_secs,
            self.chunks_per_sec(),
            self.gbit_per_sec()
        )
    }
}

/// Encodes and decodes every chunk against a static table built from the
/// trace, fanning contiguous ranges out to `threads` workers. The table is
/// read-only during the timed section.
pub fn cmd_bench(trace: &Trace, threads: usize, variant: usize) -> Result<BenchResult, CliError> {
    if threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let m = m_for_chunk_bits(trace.chunk_bits())?;
    let code = HammingCode::with_generator(
        GeneratorPolynomial::hamming_variant(m, variant).map_err(usage)?,
    )
    .map_err(usage)?;
    let id_width = crate::dictionary::DEFAULT_ID_WIDTH;
    let format = WireFormat::new(&code, id_width, false);

    let mut table: HashMap<BitChunk, BasisId> = HashMap::new();
    let mut reverse: Vec<BitChunk> = Vec::new();
    for chunk in trace.iter() {
        let basis = code.basis_of(&chunk).map_err(usage)?;
        if reverse.len() < 1 << id_width && !table.contains_key(&basis) {
            let id = BasisId::new(reverse.len() as u32, id_width).expect("within width");
            table.insert(basis.clone(), id);
            reverse.push(basis);
        }
    }

    let len = trace.len();
    let per_thread = len.div_ceil(threads).max(1);
    let start = Instant::now();
    let partials: Vec<Result<(u64, u64), String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (code, table, reverse, format) = (&code, &table, &reverse, &format);
                scope.spawn(move || {
                    let mut encoded_bytes = 0u64;
                    let mut chunks = 0u64;
                    for index in (t * per_thread)..((t + 1) * per_thread).min(len) {
                        let chunk = trace.chunk(index);
                        let encoded = code.encode_chunk(&chunk).map_err(|e| e.to_string())?;
                        let fields = match table.get(&encoded.basis) {
                            Some(&id) => FrameFields::SynId {
                                syndrome: encoded.syndrome,
                                msb: encoded.msb,
                                id,
                            },
                            None => FrameFields::SynBasis {
                                syndrome: encoded.syndrome,
                                msb: encoded.msb,
                                basis: encoded.basis,
                            },
                        };
                        let kind = fields.kind();
                        let payload =
                            serialize_frame(&fields, format).map_err(|e| e.to_string())?;
                        encoded_bytes += payload.len() as u64;
                        let restored =
                            match parse_frame(kind, &payload, format).map_err(|e| e.to_string())? {
                                FrameFields::SynId { syndrome, msb, id } => {
                                    crate::gdcore::EncodedChunk {
                                        syndrome,
                                        msb,
                                        basis: reverse[id.value() as usize].clone(),
                                    }
                                }
                                FrameFields::SynBasis {
                                    syndrome,
                                    msb,
                                    basis,
                                } => crate::gdcore::EncodedChunk {
                                    syndrome,
                                    msb,
                                    basis,
                                },
                                FrameFields::Raw { .. } => unreachable!(),
                            };
                        if code.decode_chunk(&restored).map_err(|e| e.to_string())? != chunk {
                            return Err(format!("chunk {index} did not survive the roundtrip"));
                        }
                        chunks += 1;
                    }
                    Ok((chunks, encoded_bytes))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });
    let elapsed_secs = start.elapsed().as_secs_f64();

    let mut result = BenchResult {
        threads,
        chunks: 0,
        raw_bytes: 0,
        encoded_bytes: 0,
        elapsed_secs,
    };
    for partial in partials {
        let (chunks, encoded) = partial.map_err(CliError::Invariant)?;
        result.chunks += chunks;
        result.encoded_bytes += encoded;
    }
    result.raw_bytes = result.chunks * format.raw_bytes() as u64;
    Ok(result)
}

pub fn cmd_export_payloads(trace: &Trace, out: &Path) -> Result<String, CliError> {
    fs::write(out, trace.payload_bytes()).map_err(usage)?;
    Ok(format!(
        "wrote {} bytes ({} chunks) to {}\n",
        trace.payload_bytes().len(),
        trace.len(),
        out.display()
    ))
}
