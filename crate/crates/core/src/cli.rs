//! Command-line front end: minimize, cross-check, generate, benchmark.
//!
//! Results go to stdout (or `--out`); diagnostics go to stderr, so pipelines
//! can consume partitions directly. Exit codes: 0 ok, 1 user/input error,
//! 2 internal-invariant or bound violation.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::coalgebra::{parse_coalgebra, partition_to_text, quotient_coalgebra, Encoding};
use crate::error::Error;
use crate::generator::{generate, GenConfig};
use crate::oracle::naive_refine;
use crate::refiner::{canonical_partition, refine, RunStats};
use crate::StateId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "corefine",
    about = "Partition refinement for labelled, weighted, probabilistic and polynomial transition systems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// The incremental engine.
    Refiner,
    /// The naive fixed-point oracle.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    /// One block of state names per line.
    Partition,
    /// The minimized system as a system file.
    Quotient,
    /// Key-value run statistics.
    Stats,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// System type expression, e.g. "P({a,b} x X)".
    #[arg(long)]
    functor: String,
    /// Number of declared states.
    #[arg(long)]
    states: usize,
    /// Average branching width.
    #[arg(long, default_value_t = 3)]
    density: usize,
    /// Magnitude bound for random weights.
    #[arg(long, default_value_t = 5)]
    weight_range: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn config(&self) -> GenConfig {
        GenConfig {
            functor: self.functor.clone(),
            states: self.states,
            density: self.density,
            weight_range: self.weight_range,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize a system file modulo behavioural equivalence.
    Minimize {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Refiner)]
        algorithm: Algorithm,
        #[arg(long, value_enum, default_value_t = OutputKind::Partition)]
        output: OutputKind,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both algorithms and verify they compute the same partition.
    Compare {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random system file.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the engine over generated or given systems; one CSV row per run.
    Bench {
        /// Input files; alternatively generate a ladder via --functor/--states.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        functor: Option<String>,
        /// Comma-separated list of state counts to generate.
        #[arg(long, value_delimiter = ',')]
        states: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        density: usize,
        #[arg(long, default_value_t = 5)]
        weight_range: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_result(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Misuse(_) => EXIT_USER,
        Error::Invariant(_) => EXIT_INVARIANT,
    }
}

fn read_input(path: &PathBuf) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USER
    })
}

fn parse_input(path: &PathBuf) -> Result<Encoding, i32> {
    let text = read_input(path)?;
    parse_coalgebra(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        exit_code_for(&e)
    })
}

fn stats_text(
    enc: &Encoding,
    stats: &RunStats,
    blocks: usize,
    root_blocks: usize,
    micros: u128,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states: {}", enc.n_states());
    let _ = writeln!(out, "root_states: {}", enc.root_count());
    let _ = writeln!(out, "edges: {}", enc.n_edges());
    let _ = writeln!(out, "blocks: {blocks}");
    let _ = writeln!(out, "root_blocks: {root_blocks}");
    let _ = writeln!(out, "iterations: {}", stats.iterations);
    let _ = writeln!(out, "max_splitter_entries: {}", stats.max_splitter_entries);
    let hist = stats
        .entry_histogram
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect::<Vec<_>>()
        .join(",");
    let _ = writeln!(out, "splitter_entry_histogram: {hist}");
    let _ = writeln!(out, "refine_micros: {micros}");
    out
}

/// Minimize one parsed system and render the requested output.
pub fn minimize_to_string(
    enc: &Encoding,
    algorithm: Algorithm,
    output: OutputKind,
) -> Result<String, Error> {
    let started = Instant::now();
    let (partition, stats) = match algorithm {
        Algorithm::Refiner => {
            let outcome = refine(enc)?;
            (outcome.partition, outcome.stats)
        }
        Algorithm::Naive => (naive_refine(enc), RunStats::default()),
    };
    let micros = started.elapsed().as_micros();
    Ok(match output {
        OutputKind::Partition => partition_to_text(enc, &partition),
        OutputKind::Quotient => quotient_coalgebra(enc, &partition)?,
        OutputKind::Stats => {
            let root_blocks = crate::coalgebra::root_blocks(enc, &partition).len();
            stats_text(enc, &stats, partition.len(), root_blocks, micros)
        }
    })
}

fn cmd_minimize(
    input: &PathBuf,
    algorithm: Algorithm,
    output: OutputKind,
    out: &Option<PathBuf>,
) -> i32 {
    let enc = match parse_input(input) {
        Ok(enc) => enc,
        Err(code) => return code,
    };
    match minimize_to_string(&enc, algorithm, output) {
        Ok(text) => {
            if let Err(e) = write_result(out, &text) {
                eprintln!("error: cannot write output: {e}");
                return EXIT_USER;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Compare the engine and the oracle on one encoding; `Ok` carries the
/// agreed partition, `Err` the first differing pair of state names.
pub fn compare_encoding(enc: &Encoding) -> Result<Vec<Vec<StateId>>, (String, String)> {
    let fast = canonical_partition(
        &refine(enc)
            .map_err(|e| (format!("engine failed: {e}"), String::new()))?
            .partition,
    );
    let slow = canonical_partition(&naive_refine(enc));
    if fast == slow {
        return Ok(fast);
    }
    // Find the first state whose block representative differs.
    let n = enc.n_states();
    let rep = |partition: &[Vec<StateId>]| {
        let mut rep = vec![0 as StateId; n];
        for block in partition {
            let least = *block.iter().min().unwrap();
            for x in block {
                rep[*x as usize] = least;
            }
        }
        rep
    };
    let fast_rep = rep(&fast);
    let slow_rep = rep(&slow);
    for x in 0..n {
        if fast_rep[x] != slow_rep[x] {
            let other = fast_rep[x].max(slow_rep[x]);
            return Err((enc.state_display(other), enc.state_display(x as StateId)));
        }
    }
    unreachable!("partitions differ but all representatives agree");
}

fn cmd_compare(inputs: &[PathBuf], out: &Option<PathBuf>) -> i32 {
    if inputs.is_empty() {
        eprintln!("error: compare needs at least one input file");
        return EXIT_USER;
    }
    let mut report = String::new();
    for input in inputs {
        let enc = match parse_input(input) {
            Ok(enc) => enc,
            Err(code) => return code,
        };
        match compare_encoding(&enc) {
            Ok(partition) => {
                let blocks = crate::coalgebra::root_blocks(&enc, &partition).len();
                let _ = writeln!(report, "{}: agree ({blocks} blocks)", input.display());
            }
            Err((a, b)) => {
                eprintln!(
                    "{}: partitions disagree on states {a} and {b}",
                    input.display()
                );
                return EXIT_INVARIANT;
            }
        }
    }
    if write_result(out, &report).is_err() {
        return EXIT_USER;
    }
    EXIT_OK
}

fn cmd_gen(gen: &GenArgs, out: &Option<PathBuf>) -> i32 {
    match generate(&gen.config()) {
        Ok(text) => {
            if let Err(e) = write_result(out, &text) {
                eprintln!("error: cannot write output: {e}");
                return EXIT_USER;
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USER
        }
    }
}

/// Largest `b` with `2^b <= n`; the per-state splitter-entry bound.
pub fn log2_floor(n: usize) -> u32 {
    (usize::BITS - 1).saturating_sub(n.leading_zeros())
}

/// One benchmark row: total states, edges, engine wall time, and the
/// largest per-state splitter-entry counter with its bound.
pub struct BenchRow {
    pub label: String,
    pub states: usize,
    pub edges: usize,
    pub millis: f64,
    pub max_entries: u32,
    pub bound: u32,
}

impl BenchRow {
    pub fn within_bound(&self) -> bool {
        self.max_entries <= self.bound
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.3},{},{}",
            self.label, self.states, self.edges, self.millis, self.max_entries, self.bound
        )
    }
}

/// Run the engine once and collect a row.
pub fn bench_encoding(label: String, enc: &Encoding) -> Result<BenchRow, Error> {
    let started = Instant::now();
    let outcome = refine(enc)?;
    let elapsed = started.elapsed();
    Ok(BenchRow {
        label,
        states: enc.n_states(),
        edges: enc.n_edges(),
        millis: elapsed.as_secs_f64() * 1e3,
        max_entries: outcome.stats.max_splitter_entries,
        bound: log2_floor(enc.n_states()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    inputs: &[PathBuf],
    functor: &Option<String>,
    states: &[usize],
    density: usize,
    weight_range: u64,
    seed: u64,
    out: &Option<PathBuf>,
) -> i32 {
    let mut encodings: Vec<(String, Encoding)> = Vec::new();
    for input in inputs {
        match parse_input(input) {
            Ok(enc) => encodings.push((input.display().to_string(), enc)),
            Err(code) => return code,
        }
    }
    if let Some(functor) = functor {
        for n in states {
            let cfg = GenConfig {
                functor: functor.clone(),
                states: *n,
                density,
                weight_range,
                seed,
            };
            let text = match generate(&cfg) {
                Ok(text) => text,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USER;
                }
            };
            match parse_coalgebra(&text) {
                Ok(enc) => encodings.push((format!("gen:{n}"), enc)),
                Err(e) => {
                    eprintln!("error: generated system failed to parse: {e}");
                    return EXIT_INVARIANT;
                }
            }
        }
    }
    if encodings.is_empty() {
        eprintln!("error: bench needs input files or --functor with --states");
        return EXIT_USER;
    }

    let mut rows = String::from("label,states,edges,refine_millis,max_splitter_entries,bound\n");
    let mut violation = false;
    for (label, enc) in &encodings {
        match bench_encoding(label.clone(), enc) {
            Ok(row) => {
                if !row.within_bound() {
                    eprintln!(
                        "error: {}: splitter-entry counter {} exceeds the bound {}",
                        row.label, row.max_entries, row.bound
                    );
                    violation = true;
                }
                rows.push_str(&row.csv());
                rows.push('\n');
            }
            Err(e) => {
                eprintln!("error: {label}: {e}");
                return exit_code_for(&e);
            }
        }
    }
    if write_result(out, &rows).is_err() {
        return EXIT_USER;
    }
    if violation {
        EXIT_INVARIANT
    } else {
        EXIT_OK
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits in clap's book-keeping.
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Minimize {
            input,
            algorithm,
            output,
            out,
        } => cmd_minimize(input, *algorithm, *output, out),
        Command::Compare { inputs, out } => cmd_compare(inputs, out),
        Command::Gen { gen, out } => cmd_gen(gen, out),
        Command::Bench {
            inputs,
            functor,
            states,
            density,
            weight_range,
            seed,
            out,
        } => cmd_bench(inputs, functor, states, *density, *weight_range, *seed, out),
    }
}
