//! `rice`: probe a black-box model, synthesize an explaining program,
//! render it and measure its agreement with the model.

mod pipeline;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rice_core::blackbox::{self, ExternalOracle, LightState, Mlp, Oracle, RuleOracle, TrainConfig};
use rice_core::cnp::{ArgName, Program, Valence};
use rice_core::exec::Parallelism;
use rice_core::jobfile::{self, SynthesisJob};
use rice_core::probing::{self, ProbeConfig};
use rice_core::synthesis::{self, SynthConfig};
use rice_core::translate::{self, Symbols};
use rice_core::validate::{self, Region};

#[derive(Parser)]
#[command(
    name = "rice",
    version,
    about = "Explain black-box models with relational programs"
)]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled traffic-light dataset as CSV.
    GenData {
        #[arg(long, default_value_t = 50_000)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the 4-11-11-1 network on a dataset and save its weights.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the distance for each light state and write a synthesis job.
    Probe {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = probing::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = States::Regular)]
        states: States,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep the observables matching fixed values and drop constant arguments.
    Slice {
        #[arg(long)]
        job: PathBuf,
        /// Fixed values as `name=value,...`.
        #[arg(long, default_value = "")]
        fix: String,
        /// Arguments to remove, comma separated.
        #[arg(long, default_value = "")]
        drop: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print consistent programs, smallest first, one per line.
    Synth {
        #[arg(long)]
        job: PathBuf,
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long, default_value_t = 1)]
        max_programs: usize,
    },
    /// Render a program as clauses or English.
    Explain {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long, value_enum, default_value_t = Format::Clauses)]
        format: Format,
        /// Use `:-`, `,` and `\+` instead of logic symbols.
        #[arg(long)]
        ascii: bool,
    },
    /// Estimate how often a program and an oracle disagree.
    Validate {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed features as `name=value,...`.
        #[arg(long, default_value = "")]
        region: String,
    },
    /// Train, probe, slice per light, synthesize, explain and validate.
    Pipeline(pipeline::PipelineArgs),
    /// Answer prediction requests on stdin, one feature vector per line.
    ServeOracle {
        #[command(flatten)]
        oracle: OracleArgs,
    },
}

#[derive(Args, Clone, Debug)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.005)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.9)]
    pub split: f64,
    /// Seed for initialization and shuffling; defaults to `--seed` in a
    /// pipeline and to 0 otherwise.
    #[arg(long)]
    pub train_seed: Option<u64>,
}

impl TrainArgs {
    pub fn config(&self, default_seed: u64) -> TrainConfig {
        TrainConfig {
            split: self.split,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            seed: self.train_seed.unwrap_or(default_seed),
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = synthesis::DEFAULT_MAX_SIZE)]
    pub max_size: usize,
    /// Seconds allowed for the search.
    #[arg(long, env = "RICE_TIME_BUDGET", default_value_t = synthesis::DEFAULT_TIME_BUDGET.as_secs_f64())]
    pub time_budget: f64,
    /// Leave `ore` out of the search space.
    #[arg(long)]
    pub no_ore: bool,
}

impl SynthArgs {
    pub fn config(&self, parallelism: Parallelism, max_programs: usize) -> Result<SynthConfig> {
        if !(self.time_budget.is_finite() && self.time_budget >= 0.0) {
            bail!("time budget must be a non-negative number of seconds");
        }
        Ok(SynthConfig {
            max_size: self.max_size,
            max_programs,
            time_budget: Duration::from_secs_f64(self.time_budget),
            allow_ore: !self.no_ore,
            parallelism,
            ..SynthConfig::default()
        })
    }
}

#[derive(Args, Clone, Debug)]
pub struct OracleArgs {
    /// Built-in oracle; the default when no other oracle is given.
    #[arg(long, value_enum)]
    oracle: Option<BuiltIn>,
    /// Weights file of a trained network.
    #[arg(long, conflicts_with_all = ["oracle", "external"])]
    weights: Option<PathBuf>,
    /// Command speaking the line protocol of `serve-oracle`.
    #[arg(long, conflicts_with = "oracle")]
    external: Option<String>,
    /// Per-request timeout for an external oracle, in milliseconds.
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BuiltIn {
    Rule,
}

impl OracleArgs {
    fn load(&self) -> Result<Box<dyn Oracle + Send>> {
        if let Some(path) = &self.weights {
            return Ok(Box::new(Mlp::load(path)?));
        }
        if let Some(cmd) = &self.external {
            let timeout = Duration::from_millis(self.timeout_ms);
            return Ok(Box::new(ExternalOracle::spawn_command(cmd, timeout)?));
        }
        Ok(Box::new(RuleOracle))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum States {
    Regular,
    AllCombinations,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Clauses,
    English,
}

#[derive(Args, Clone, Debug)]
struct ProgramArgs {
    /// Program text.
    #[arg(
        long,
        conflicts_with = "program_file",
        required_unless_present = "program_file"
    )]
    program: Option<String>,
    /// File whose first non-empty line is the program.
    #[arg(long)]
    program_file: Option<PathBuf>,
    /// Valence such as `rd:in,dist:in,go:out`.
    #[arg(long, conflicts_with = "job", required_unless_present = "job")]
    valence: Option<String>,
    /// Take the valence from a job file.
    #[arg(long)]
    job: Option<PathBuf>,
}

impl ProgramArgs {
    fn load(&self) -> Result<(Program, Valence)> {
        let text = match (&self.program, &self.program_file) {
            (Some(t), _) => t.clone(),
            (None, Some(path)) => read_program_text(path)?,
            (None, None) => bail!("no program given"),
        };
        let program: Program = text.parse().context("parsing program")?;
        let valence = match (&self.valence, &self.job) {
            (Some(spec), _) => Valence::from_spec(spec)?,
            (None, Some(path)) => SynthesisJob::from_file(path)?.valence().clone(),
            (None, None) => bail!("no valence given"),
        };
        Ok((program, valence))
    }
}

pub fn read_program_text(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('%'))
        .map(String::from)
        .with_context(|| format!("{} holds no program", path.display()))
}

/// Parses `name=value,...`.
fn parse_assignments(text: &str) -> Result<Vec<(ArgName, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|part| {
            let (n, v) = part
                .split_once('=')
                .with_context(|| format!("expected name=value, got `{part}`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("bad value in `{part}`"))?;
            Ok((ArgName::new(n.trim())?, v))
        })
        .collect()
}

fn parse_names(text: &str) -> Result<Vec<ArgName>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|n| Ok(ArgName::new(n)?))
        .collect()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let parallelism = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    match cli.command {
        Command::GenData {
            n,
            noise,
            seed,
            out,
        } => {
            let data = blackbox::generate_dataset(n, noise, seed)?;
            data.write_csv(&out)?;
            eprintln!(
                "wrote {} rows ({} flipped) to {}",
                data.len(),
                data.noisy_rows(),
                out.display()
            );
        }
        Command::Train { data, train, out } => {
            let data = blackbox::Dataset::read_csv(&data)?;
            let report = blackbox::train(&data, &train.config(0))?;
            report.model.save(&out)?;
            print!("{}", pipeline::train_summary(&report));
        }
        Command::Probe {
            oracle,
            steps,
            states,
            out,
        } => {
            let oracle = oracle.load()?;
            let cfg = ProbeConfig {
                steps,
                states: match states {
                    States::Regular => LightState::regular(),
                    States::AllCombinations => LightState::all_combinations(),
                },
                parallelism,
            };
            let job = probing::probe(&*oracle, &cfg)?;
            write_output(out.as_deref(), &jobfile::serialize(&job))?;
        }
        Command::Slice {
            job,
            fix,
            drop,
            out,
        } => {
            let job = SynthesisJob::from_file(&job)?;
            let sliced = jobfile::slice(&job, &parse_assignments(&fix)?, &parse_names(&drop)?)?;
            write_output(out.as_deref(), &jobfile::serialize(&sliced))?;
        }
        Command::Synth {
            job,
            synth,
            max_programs,
        } => {
            let job = SynthesisJob::from_file(&job)?;
            let cfg = synth.config(parallelism, max_programs)?;
            let mut found = 0usize;
            let stdout = io::stdout();
            let (exhausted, checked) = synthesis::enumerate_with(&job, &cfg, |c| {
                let mut out = stdout.lock();
                let _ = writeln!(out, "{}", c.program);
                let _ = out.flush();
                eprintln!("size {}", c.size);
                found += 1;
                if found >= max_programs.max(1) {
                    std::ops::ControlFlow::Break(())
                } else {
                    std::ops::ControlFlow::Continue(())
                }
            })?;
            eprintln!("checked {checked} complete programs");
            if let Some(reason) = exhausted {
                eprintln!("search ended: {reason}");
                if found == 0 {
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Explain {
            program,
            format,
            ascii,
        } => {
            let (p, valence) = program.load()?;
            match format {
                Format::Clauses => {
                    let symbols = if ascii {
                        Symbols::Ascii
                    } else {
                        Symbols::Unicode
                    };
                    print!("{}", translate::to_clauses(&p, &valence)?.render(symbols));
                }
                Format::English => println!("{}", translate::to_english(&p, &valence)?),
            }
        }
        Command::Validate {
            program,
            oracle,
            samples,
            seed,
            region,
        } => {
            let (p, valence) = program.load()?;
            let oracle = oracle.load()?;
            let region = Region::parse(&region)?;
            let report =
                validate::agreement(&p, &valence, &*oracle, samples, seed, &region, parallelism)?;
            print!("{report}");
        }
        Command::Pipeline(args) => return pipeline::run(&args, parallelism),
        Command::ServeOracle { oracle } => {
            let oracle = oracle.load()?;
            let stdin = io::stdin();
            blackbox::serve(&*oracle, stdin.lock(), io::stdout().lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
