//! The end-to-end run: train, probe, slice per light, synthesize, explain
//! and validate, with every artifact written to a run directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Args;

use rice_core::blackbox::{self, LightState, Mlp, TrainReport};
use rice_core::cnp::ArgName;
use rice_core::exec::{map_ordered, Parallelism};
use rice_core::jobfile::{self, SynthesisJob};
use rice_core::probing::{self, ProbeConfig};
use rice_core::synthesis::{self, Candidate};
use rice_core::translate::{self, Symbols};
use rice_core::validate::{self, AgreementReport, Region};

use crate::{SynthArgs, TrainArgs};

const LIGHTS: [&str; 3] = ["rd", "am", "gr"];

#[derive(Args, Clone, Debug)]
pub struct PipelineArgs {
    /// Run directory; created if missing.
    #[arg(long)]
    out_dir: PathBuf,
    /// Seed for data generation, training and validation sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50_000)]
    n: usize,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[command(flatten)]
    train: TrainArgs,
    /// Explain an already trained network instead of training one.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, default_value_t = probing::DEFAULT_STEPS)]
    steps: usize,
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Largest disagreement rate accepted for every light.
    #[arg(long, default_value_t = 0.02)]
    threshold: f64,
}

/// Timestamped progress lines; timestamps only ever go to this file.
struct Log {
    file: File,
}

impl Log {
    fn open(path: &Path) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Log { file })
    }

    fn line(&mut self, msg: &str) {
        let t = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        let _ = writeln!(
            self.file,
            "[{}.{:03}] {msg}",
            t.as_secs(),
            t.subsec_millis()
        );
        eprintln!("{msg}");
    }
}

pub fn train_summary(r: &TrainReport) -> String {
    format!(
        "train_rows={}\ntest_rows={}\nfinal_loss={}\ntest_accuracy={}\nclean_test_accuracy={}\n",
        r.train_rows, r.test_rows, r.final_loss, r.test_accuracy, r.clean_test_accuracy
    )
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Fixes one light to 1 and drops the other two.
pub fn slice_for(job: &SynthesisJob, light: &str) -> rice_core::Result<SynthesisJob> {
    let fixed = [(ArgName::new(light)?, 1.0)];
    let drop = LIGHTS
        .iter()
        .filter(|l| **l != light)
        .map(|l| ArgName::new(l))
        .collect::<rice_core::Result<Vec<_>>>()?;
    jobfile::slice(job, &fixed, &drop)
}

fn state_of(light: &str) -> LightState {
    match light {
        "rd" => LightState::RED,
        "am" => LightState::AMBER,
        _ => LightState::GREEN,
    }
}

pub fn run(args: &PipelineArgs, parallelism: Parallelism) -> Result<ExitCode> {
    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut log = Log::open(&dir.join("pipeline.log"))?;

    let model = match &args.weights {
        Some(path) => {
            log.line(&format!("loading weights from {}", path.display()));
            let model = Mlp::load(path).context("stage train")?;
            model.save(dir.join("weights.txt")).context("stage train")?;
            model
        }
        None => {
            log.line(&format!("generating {} rows, noise {}", args.n, args.noise));
            let data = blackbox::generate_dataset(args.n, args.noise, args.seed)
                .context("stage gen-data")?;
            data.write_csv(dir.join("dataset.csv"))
                .context("stage gen-data")?;
            log.line(&format!("training for {} epochs", args.train.epochs));
            let report =
                blackbox::train(&data, &args.train.config(args.seed)).context("stage train")?;
            report
                .model
                .save(dir.join("weights.txt"))
                .context("stage train")?;
            let summary = train_summary(&report);
            write(dir, "training.txt", &summary)?;
            log.line(summary.trim_end());
            report.model
        }
    };

    log.line(&format!("probing with {} steps", args.steps));
    let cfg = ProbeConfig {
        steps: args.steps,
        parallelism,
        ..ProbeConfig::default()
    };
    let job = probing::probe(&model, &cfg).context("stage probe")?;
    write(dir, "probe.pl", &jobfile::serialize(&job))?;

    let mut slices = Vec::new();
    for light in LIGHTS {
        let sliced = slice_for(&job, light).with_context(|| format!("stage slice ({light})"))?;
        write(dir, &format!("{light}.pl"), &jobfile::serialize(&sliced))?;
        slices.push((light, sliced));
    }

    log.line("synthesizing one program per light");
    let synth_cfg = args.synth.config(parallelism, 1).context("stage synth")?;
    let found: Vec<rice_core::Result<Candidate>> = map_ordered(parallelism, &slices, |(_, j)| {
        synthesis::first_explanation(j, &synth_cfg)
    });

    let mut ok = true;
    let mut validation = String::new();
    let mut summary = String::new();
    for ((light, sliced), result) in slices.iter().zip(found) {
        let cand = match result {
            Ok(c) => c,
            Err(e) => {
                ok = false;
                log.line(&format!("{light}: synthesis failed: {e}"));
                let _ = writeln!(summary, "{light}: synthesis failed: {e}");
                continue;
            }
        };
        let valence = sliced.valence();
        let p = &cand.program;
        log.line(&format!("{light}: size {} {p}", cand.size));
        write(
            dir,
            &format!("{light}.program"),
            &format!("{p}\n% size {}\n", cand.size),
        )?;
        let clauses = translate::to_clauses(p, valence)
            .with_context(|| format!("stage explain ({light})"))?;
        write(
            dir,
            &format!("{light}.clauses.txt"),
            &clauses.render(Symbols::Unicode),
        )?;
        let english = translate::to_english(p, valence)
            .with_context(|| format!("stage explain ({light})"))?;
        write(
            dir,
            &format!("{light}.english.txt"),
            &format!("{english}\n"),
        )?;

        let region = Region::light(state_of(light));
        let report: AgreementReport = validate::agreement(
            p,
            valence,
            &model,
            args.samples,
            args.seed,
            &region,
            parallelism,
        )
        .with_context(|| format!("stage validate ({light})"))?;
        let _ = write!(validation, "light={light}\n{report}\n");
        let rate = report.rate();
        let verdict = if rate <= args.threshold {
            "ok"
        } else {
            "above threshold"
        };
        if rate > args.threshold {
            ok = false;
        }
        log.line(&format!("{light}: disagreement_rate={rate} ({verdict})"));
        let _ = writeln!(summary, "{light}: {p} disagreement_rate={rate} {verdict}");
    }
    write(dir, "validation.txt", &validation)?;
    write(dir, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
