//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage, 3 no collision,
//! 4 budget exceeded, 5 oracle out of contract, 6 verification failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bruteforce::{enumerate_lines, hj_lower_witness, hj_number_exact, Caps, WitnessOutcome};
use crate::certificate::{verify_certificate, Certificate};
use crate::error::HjError;
use crate::oracle::{make_oracle, CountingOracle, OracleError};
use crate::solver::{find_line, DEFAULT_BUDGET};
use crate::word::{block_structure, BlockStructure, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_COLLISION: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;
pub const EXIT_VERIFY: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "hjline", version, about = "Find and verify monochromatic combinatorial lines in [3]^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the block structure for r colours
    Params(BlockArgs),
    /// Run the induction and write a certificate
    FindLine(FindLineArgs),
    /// Replay a certificate against its oracle
    Verify(VerifyArgs),
    /// Exhaustive tools for small cubes
    #[command(subcommand)]
    Brute(BruteCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Paper,
    Minimal,
    Custom,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Minimal => Mode::Minimal,
            ModeArg::Custom => Mode::Custom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct BlockArgs {
    /// Number of colours
    #[arg(long)]
    r: u32,
    #[arg(long, value_enum, default_value = "paper")]
    mode: ModeArg,
    /// Comma-separated block sizes (custom mode only)
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

impl BlockArgs {
    fn block_structure(&self) -> Result<BlockStructure, HjError> {
        block_structure(self.r, self.mode.into(), self.sizes.as_deref())
    }
}

#[derive(Debug, Args)]
struct FindLineArgs {
    #[command(flatten)]
    blocks: BlockArgs,
    /// Oracle spec: const:c, count, hash:seed, table:path or exec:cmd
    #[arg(long)]
    oracle: String,
    /// Seed for the sampled internal consistency checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of distinct oracle evaluations
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Certificate output path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Certificate JSON file
    cert: PathBuf,
    /// Replay against this oracle instead of the one recorded
    #[arg(long)]
    oracle: Option<String>,
}

#[derive(Debug, Subcommand)]
enum BruteCommand {
    /// Count the combinatorial lines of [m]^n
    Lines {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        /// Also print every pattern
        #[arg(long)]
        list: bool,
    },
    /// Search for an r-colouring of [m]^n without monochromatic lines
    Witness {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        #[arg(long, default_value_t = Caps::default().max_nodes)]
        node_budget: u64,
        /// Table file to write the witness to
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest n such that every r-colouring of [m]^n has a monochromatic line
    Hj {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        n_max: u32,
        #[arg(long, default_value_t = Caps::default().max_nodes)]
        node_budget: u64,
    },
}

pub fn exit_code(err: &HjError) -> i32 {
    match err {
        HjError::InvalidArgument(_) | HjError::MalformedWord(_) | HjError::Overflow(_) => EXIT_USAGE,
        HjError::Io(_) | HjError::Json(_) => EXIT_USAGE,
        HjError::NoCollision { .. } => EXIT_NO_COLLISION,
        HjError::SearchBudget(_) => EXIT_BUDGET,
        HjError::Oracle(OracleError::Budget { .. }) => EXIT_BUDGET,
        HjError::Oracle(OracleError::Spec(_)) => EXIT_USAGE,
        HjError::Oracle(_) => EXIT_ORACLE,
        HjError::Invariant(_) => EXIT_INTERNAL,
    }
}

/// Parses `args` (program name first), runs the command, writes the human
/// summary to `out` and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Params(a) => cmd_params(&a, out),
        Command::FindLine(a) => cmd_find_line(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Brute(b) => cmd_brute(b, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_params(a: &BlockArgs, out: &mut dyn Write) -> Result<i32, HjError> {
    let bs = a.block_structure()?;
    let spaces = (0..bs.t()).map(|j| bs.colour_space_size(j)).collect::<Result<Vec<_>, _>>()?;
    match a.format {
        Format::Json => {
            let v = json!({
                "r": bs.r(),
                "t": bs.t(),
                "mode": bs.mode(),
                "block_sizes": bs.sizes().iter().map(u64::to_string).collect::<Vec<_>>(),
                "n": bs.n().to_string(),
                "colour_space": spaces.iter().map(u64::to_string).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Format::Text => {
            writeln!(out, "r = {}, t = {}, mode = {}", bs.r(), bs.t(), bs.mode())?;
            writeln!(out, "sizes = {}", join(bs.sizes()))?;
            writeln!(out, "n = {}", bs.n())?;
            for (j, s) in spaces.iter().enumerate() {
                writeln!(out, "level {j}: {s} composite colours, block {} has {} positions", j + 1, bs.block_size(j + 1))?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_find_line(a: &FindLineArgs, out: &mut dyn Write) -> Result<i32, HjError> {
    let bs = a.blocks.block_structure()?;
    let mut oracle = CountingOracle::with_budget(make_oracle(&a.oracle, bs.r())?, a.budget);
    let cert = find_line(&bs, &mut oracle, a.seed)?;
    let text = cert.to_json();
    if let Some(path) = &a.out {
        fs::write(path, &text)?;
    }
    if a.blocks.format == Format::Json && a.out.is_none() {
        write!(out, "{text}")?;
    } else {
        let (q1, q2) = cert.final_collision;
        writeln!(out, "r = {}, mode = {}, n = {}", cert.r, cert.mode, bs.n())?;
        let pairs: Vec<String> = cert.pair_table.iter().map(|(k, p1, p2)| format!("{k}:({p1},{p2})")).collect();
        writeln!(out, "pairs = {}", pairs.join(" "))?;
        writeln!(out, "final collision = ({q1}, {q2}), shared colour = {}", cert.shared_colour)?;
        writeln!(out, "active positions = {} in {} interval(s)", cert.line.active_size(), cert.line.active.len())?;
        writeln!(out, "oracle = {}, unique evaluations = {}, requests = {}", cert.oracle, cert.stats.unique, cert.stats.total)?;
        if let Some(path) = &a.out {
            writeln!(out, "certificate written to {}", path.display())?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, HjError> {
    let text = fs::read_to_string(&a.cert)
        .map_err(|e| HjError::invalid(format!("cannot read {}: {e}", a.cert.display())))?;
    let cert = Certificate::from_json(&text)?;
    let spec = a.oracle.as_deref().unwrap_or(&cert.oracle);
    let mut oracle = make_oracle(spec, cert.r)?;
    let report = verify_certificate(&cert, oracle.as_mut());
    write!(out, "{report}")?;
    if report.passed() {
        writeln!(out, "certificate OK")?;
        Ok(EXIT_OK)
    } else {
        let failed: Vec<String> = report.failed_ids().iter().map(|id| id.to_string()).collect();
        writeln!(out, "certificate REJECTED (failed checks: {})", failed.join(", "))?;
        Ok(EXIT_VERIFY)
    }
}

fn cmd_brute(cmd: BruteCommand, out: &mut dyn Write) -> Result<i32, HjError> {
    match cmd {
        BruteCommand::Lines { m, n, list } => {
            let caps = Caps::default();
            let mut count = 0u64;
            for p in enumerate_lines(m, n, &caps)? {
                if list {
                    writeln!(out, "{p}")?;
                }
                count += 1;
            }
            writeln!(out, "{count}")?;
        }
        BruteCommand::Witness { m, n, r, node_budget, out: path } => {
            let caps = Caps { max_nodes: node_budget, ..Caps::default() };
            let search = hj_lower_witness(m, n, r, &caps)?;
            match search.outcome {
                WitnessOutcome::Found(table) => {
                    writeln!(out, "witness found after {} nodes", search.nodes)?;
                    match path {
                        Some(p) => {
                            table.write(&p)?;
                            writeln!(out, "table written to {}", p.display())?;
                        }
                        None => write!(out, "{}", table.to_text())?,
                    }
                }
                WitnessOutcome::ProvenNone => {
                    writeln!(out, "no line-free {r}-colouring of [{m}]^{n} exists ({} nodes)", search.nodes)?;
                }
                WitnessOutcome::BudgetExhausted => return Err(HjError::SearchBudget(node_budget)),
            }
        }
        BruteCommand::Hj { m, r, n_max, node_budget } => {
            let caps = Caps { max_nodes: node_budget, ..Caps::default() };
            match hj_number_exact(m, r, n_max, &caps)? {
                Some(n) => writeln!(out, "HJ({m},{r}) = {n}")?,
                None => writeln!(out, "HJ({m},{r}) > {n_max} (unknown)")?,
            }
        }
    }
    Ok(EXIT_OK)
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}
