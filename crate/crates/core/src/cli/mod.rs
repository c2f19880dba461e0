//! The `sideinfo` command-line tool.
//!
//! Exit codes: 0 success, 2 validation or usage error, 3 a comparison
//! failed, 4 I/O error. `SIDEINFO_THREADS` sets the worker count.

pub mod output;
pub mod spec;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::codec::{CodeParams, DecoderConfig};
use crate::exponents::{sweep, Evaluator, ExponentQuery, Mode, Penalty, SweepAxis};
use crate::sim::{
    batch_codebook_seed, check_accounting, compare_to_bound, default_slack, empirical_exponent, run_trials,
    CodebookPolicy, MessagePolicy, Quantity, SimStats, TrialConfig,
};

use output::{
    read_manifest, BoundRecord, ExponentFile, ExponentParams, ExponentRecord, Format, Invocation, Manifest,
    QuantityRecord, SimulateParams, SimulationFile, Sweep,
};
use spec::ChannelSpecFile;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_COMPARISON: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Stream index reserved for deriving the codebook seed from the run seed.
const CODE_SEED_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Comparison(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Comparison(_) => EXIT_COMPARISON,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sideinfo",
    version,
    args_override_self = true,
    about = "Erasure/list decoding exponents and simulations for channels with encoder side information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute E1 and E2 on a lattice, optionally along a sweep.
    Exponent(ExponentArgs),
    /// Simulate the binning code and report error counts and exponents.
    Simulate(SimulateArgs),
    /// Check simulated exponents against computed bounds.
    Compare(CompareArgs),
    /// Regenerate a result file from its embedded manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Erasure,
    List,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Erasure => Mode::Erasure,
            ModeArg::List => Mode::List,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Rate,
    Threshold,
    Alpha,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MessageArg {
    Fixed,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CodebookArg {
    Fresh,
    Fixed,
}

#[derive(Debug, Args)]
struct DecoderArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Rate in bits per channel use.
    #[arg(long)]
    rate: f64,
    #[arg(long, allow_negative_numbers = true)]
    threshold: f64,
    #[arg(long)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExponentArgs {
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    decoder: DecoderArgs,
    /// Lattice denominator d.
    #[arg(long, default_value_t = 4)]
    lattice: u32,
    #[arg(long, value_enum, requires = "grid")]
    sweep: Option<AxisArg>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',', num_args = 0.., allow_negative_numbers = true, requires = "sweep")]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    decoder: DecoderArgs,
    #[arg(long)]
    blocklength: usize,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long)]
    trials: u64,
    /// Trials per batch; a fresh codebook is drawn per batch by default.
    #[arg(long, default_value_t = 1000)]
    batch_size: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "fixed")]
    message_policy: MessageArg,
    #[arg(long, value_enum, default_value = "fresh")]
    codebook_policy: CodebookArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Output of `sideinfo exponent`.
    #[arg(long)]
    exponent: PathBuf,
    /// Output of `sideinfo simulate`.
    #[arg(long)]
    simulation: PathBuf,
    /// Allowed shortfall in bits; defaults to |U||S||X||Y| log2(n+1)/n.
    #[arg(long)]
    slack: Option<f64>,
    /// Which quantities to compare.
    #[arg(long, value_enum, default_value = "all")]
    quantity: QuantityArg,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum QuantityArg {
    E1,
    E2,
    All,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// A result file written by `exponent` or `simulate`.
    file: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("SIDEINFO_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Exponent(a) => {
            let spec = read_spec(&a.spec)?;
            let params = ExponentParams {
                mode: a.decoder.mode.into(),
                rate: a.decoder.rate,
                threshold: a.decoder.threshold,
                alpha: a.decoder.alpha,
                lattice: a.lattice,
                sweep: match (a.sweep, a.grid) {
                    (Some(axis), Some(grid)) => Some(Sweep {
                        axis: match axis {
                            AxisArg::Rate => SweepAxis::Rate,
                            AxisArg::Threshold => SweepAxis::Threshold,
                            AxisArg::Alpha => SweepAxis::Alpha,
                        },
                        grid,
                    }),
                    _ => None,
                },
                format: a.output.format,
            };
            let text = execute(&Invocation::Exponent(params), spec)?;
            write_out(a.output.out.as_deref(), &text)
        }
        Command::Simulate(a) => {
            let spec = read_spec(&a.spec)?;
            let params = SimulateParams {
                mode: a.decoder.mode.into(),
                rate: a.decoder.rate,
                threshold: a.decoder.threshold,
                alpha: a.decoder.alpha,
                blocklength: a.blocklength,
                epsilon: a.epsilon,
                trials: a.trials,
                batch_size: a.batch_size,
                seed: a.seed,
                message_policy: match a.message_policy {
                    MessageArg::Fixed => MessagePolicy::Fixed,
                    MessageArg::Uniform => MessagePolicy::Uniform,
                },
                codebook_policy: match a.codebook_policy {
                    CodebookArg::Fresh => CodebookPolicy::FreshPerBatch,
                    CodebookArg::Fixed => CodebookPolicy::Fixed,
                },
                format: a.output.format,
            };
            let text = execute(&Invocation::Simulate(params), spec)?;
            write_out(a.output.out.as_deref(), &text)
        }
        Command::Compare(a) => {
            let report = compare(
                &read_text(&a.exponent)?,
                &read_text(&a.simulation)?,
                a.slack,
                a.quantity,
            )?;
            print!("{}", report.text);
            if report.all_pass {
                Ok(())
            } else {
                Err(CliError::Comparison(
                    "at least one simulated exponent fell below its bound".into(),
                ))
            }
        }
        Command::Replay(a) => {
            let manifest = read_manifest(&read_text(&a.file)?)?;
            if manifest.tool != output::TOOL {
                return Err(CliError::Validation(format!(
                    "manifest was written by `{}`",
                    manifest.tool
                )));
            }
            if manifest.version != env!("CARGO_PKG_VERSION") {
                eprintln!("warning: manifest version {} differs from this tool", manifest.version);
            }
            let text = execute(&manifest.invocation, manifest.spec)?;
            write_out(a.out.as_deref(), &text)
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<ChannelSpecFile, CliError> {
    ChannelSpecFile::parse(&read_text(path)?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs an invocation and renders its result file, manifest included.
pub fn execute(inv: &Invocation, spec: ChannelSpecFile) -> Result<String, CliError> {
    let resolved = spec.resolve()?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = Manifest::new(inv.clone(), spec);
    match inv {
        Invocation::Exponent(p) => {
            let query = ExponentQuery {
                channel: resolved.channel.clone(),
                u_size: resolved.u_size,
                rate: p.rate,
                threshold: p.threshold,
                alpha: p.alpha,
                mode: p.mode,
                lattice: p.lattice,
            };
            let records = match &p.sweep {
                None => {
                    query.validate()?;
                    let ev = Evaluator::new(&query.channel, query.u_size, query.lattice)?;
                    vec![record(
                        None,
                        None,
                        &query.penalty(),
                        p.lattice,
                        ev.evaluate(&query.penalty()),
                    )]
                }
                Some(s) => {
                    if s.grid.is_empty() {
                        return Err(CliError::Validation("sweep grid is empty".into()));
                    }
                    sweep(&query, s.axis, &s.grid)?
                        .into_iter()
                        .map(|pt| {
                            let mut pen = query.penalty();
                            match s.axis {
                                SweepAxis::Rate => pen.rate = pt.axis_value,
                                SweepAxis::Threshold => pen.threshold = pt.axis_value,
                                SweepAxis::Alpha => pen.alpha = pt.axis_value,
                            }
                            record(Some(s.axis), Some(pt.axis_value), &pen, p.lattice, pt.outcome)
                        })
                        .collect()
                }
            };
            Ok(ExponentFile { manifest, records }.render(p.format))
        }
        Invocation::Simulate(p) => {
            let decoder = DecoderConfig::new(p.mode, p.threshold, p.alpha)?;
            let ch = &resolved.channel;
            let code = CodeParams {
                n: p.blocklength,
                rate: p.rate,
                epsilon: p.epsilon,
                design: resolved.design.clone(),
                s_size: ch.s_size(),
                u_size: resolved.u_size,
                x_size: ch.x_size(),
                y_size: ch.y_size(),
                seed: batch_codebook_seed(p.seed, CODE_SEED_STREAM),
            };
            let cfg = TrialConfig {
                channel: ch.clone(),
                code,
                decoder,
                trials: p.trials,
                batch_size: p.batch_size,
                message_policy: p.message_policy,
                codebook_policy: p.codebook_policy,
                seed: p.seed,
            };
            let stats = run_trials(&cfg)?;
            let messages = cfg.code.messages()?;
            check_accounting(&stats, p.mode, messages)?;
            Ok(simulation_file(manifest, messages, &stats, p.blocklength)?.render(p.format))
        }
    }
}

fn record(
    axis: Option<SweepAxis>,
    axis_value: Option<f64>,
    pen: &Penalty,
    lattice: u32,
    outcome: crate::Result<crate::exponents::ExponentPair>,
) -> ExponentRecord {
    let (e1, e2, error) = match outcome {
        Ok(pair) => (
            Some(BoundRecord {
                value: output::Real(pair.e1.value),
                branch: pair.e1.branch,
                witness: (&pair.e1.witness).into(),
            }),
            Some(BoundRecord {
                value: output::Real(pair.e2.value),
                branch: None,
                witness: (&pair.e2.witness).into(),
            }),
            None,
        ),
        Err(e) => (None, None, Some(e.to_string())),
    };
    ExponentRecord {
        axis,
        axis_value,
        rate: pen.rate,
        threshold: pen.threshold,
        alpha: pen.alpha,
        lattice,
        e1,
        e2,
        error,
    }
}

fn simulation_file(manifest: Manifest, messages: usize, st: &SimStats, n: usize) -> Result<SimulationFile, CliError> {
    let t = st.n_trials;
    let q = |name: &str, count: u64| -> Result<QuantityRecord, CliError> {
        Ok(QuantityRecord::new(name, count, t, empirical_exponent(count, t, n)?))
    };
    Ok(SimulationFile {
        manifest,
        messages,
        stats: *st,
        mean_incorrect_list: st.mean_incorrect_list(),
        quantities: vec![
            q("e1", st.count_e1)?,
            q("e2", st.count_e2)?,
            q("incorrect_list", st.sum_incorrect_list)?,
            q("erased", st.count_erased)?,
            q("encoding_error", st.count_encoding_error)?,
        ],
    })
}

pub struct CompareReport {
    pub text: String,
    pub all_pass: bool,
}

/// Compares the simulated exponents in `sim_text` with the bounds in
/// `exp_text`. Refuses files describing different instances.
fn compare(exp_text: &str, sim_text: &str, slack: Option<f64>, which: QuantityArg) -> Result<CompareReport, CliError> {
    let exp = ExponentFile::parse(exp_text)?;
    let (sim_manifest, quantities) = SimulationFile::parse(sim_text)?;
    if exp.manifest.instance_hash != sim_manifest.instance_hash {
        return Err(CliError::Validation(format!(
            "manifests describe different instances ({} vs {})",
            exp.manifest.instance_hash, sim_manifest.instance_hash
        )));
    }
    let (Invocation::Exponent(ep), Invocation::Simulate(sp)) = (&exp.manifest.invocation, &sim_manifest.invocation)
    else {
        return Err(CliError::Validation(
            "expected an exponent file and a simulation file".into(),
        ));
    };
    if ep.mode != sp.mode {
        return Err(CliError::Validation(
            "exponent and simulation use different decoding modes".into(),
        ));
    }
    let rec = exp
        .records
        .iter()
        .find(|r| r.rate == sp.rate && r.threshold == sp.threshold && r.alpha == sp.alpha)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "no exponent record at rate {}, threshold {}, alpha {}",
                sp.rate, sp.threshold, sp.alpha
            ))
        })?;
    let get = |name: &str| {
        quantities
            .iter()
            .find(|q| q.quantity == name)
            .ok_or_else(|| CliError::Validation(format!("simulation file lacks `{name}`")))
    };
    let trials = get("e1")?.trials;
    let stats = SimStats {
        n_trials: trials,
        count_e1: get("e1")?.count,
        count_e2: get("e2")?.count,
        sum_incorrect_list: get("incorrect_list")?.count,
        ..SimStats::default()
    };
    let spec = &sim_manifest.spec;
    let n = sp.blocklength;
    let slack = slack.unwrap_or_else(|| default_slack([spec.u_size(), spec.s_size, spec.x_size, spec.y_size], n));

    let mut text = String::from("quantity,empirical,censored,bound,slack,pass\n");
    let mut all_pass = true;
    let second = match sp.mode {
        Mode::Erasure => Quantity::E2,
        Mode::List => Quantity::IncorrectList,
    };
    let mut rows = Vec::new();
    if which != QuantityArg::E2 {
        rows.push((Quantity::E1, "e1", &rec.e1));
    }
    if which != QuantityArg::E1 {
        rows.push((second, "e2", &rec.e2));
    }
    for (quantity, name, bound) in rows {
        let Some(bound) = bound else {
            return Err(CliError::Validation(format!("exponent record has no {name} value")));
        };
        let c = compare_to_bound(&stats, quantity, bound.value.0, n, slack)?;
        all_pass &= c.pass;
        text.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            output::Real(c.empirical.effective()).text(),
            c.empirical.censored,
            bound.value.text(),
            output::Real(slack).text(),
            if c.pass { "pass" } else { "fail" }
        ));
    }
    Ok(CompareReport { text, all_pass })
}
