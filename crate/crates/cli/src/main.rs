//! Command-line front end for the smartcap toolkit.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! data errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use smartcap::capsule::{run_baseline, run_capsule, CapsuleConfig, SimResult};
use smartcap::cfa::{self, CfaPattern, RgbImage};
use smartcap::classifier::{
    calibrated_corpus_with, load_trace, save_trace, synth_study, BurstConfig, CorpusConfig,
    DwellModel, StudyTrace,
};
use smartcap::decoder::{viterbi_fixed, viterbi_float, WindowedDecoder};
use smartcap::lab::{self, GridSpec};
use smartcap::markov::{quantize, to_log, HmmConfig, Organ};
use smartcap::{Error, Result};

#[derive(Parser)]
#[command(
    name = "smartcap",
    version,
    about = "Capsule localization, decoding and energy experiments"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write synthetic study traces (CSV plus JSON sidecar).
    Synth(SynthArgs),
    /// Decode the organ sequence of a trace.
    Decode(DecodeArgs),
    /// Replay a trace through the smart capsule.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Replay a trace through the baseline capsule.
    Baseline {
        #[arg(long)]
        trace: PathBuf,
        /// Capsule config whose power table to use.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sweep window sizes and frame rates over a corpus.
    Grid(GridArgs),
    /// Bayer raster conversions.
    Bayer {
        #[arg(value_enum)]
        op: BayerOp,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Filter layout used by `extract`.
        #[arg(long, default_value = "RGGB")]
        pattern: CfaPattern,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    studies: usize,
    #[arg(long)]
    out: PathBuf,
    /// Mean dwell frames per organ. Without it the corpus is calibrated to
    /// the reference baseline energy.
    #[arg(long, value_delimiter = ',')]
    dwell: Option<Vec<f64>>,
    /// Burst starts per 1000 frames and mean burst length.
    #[arg(long, value_delimiter = ',')]
    burst: Option<Vec<f64>>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    hmm: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Stream through a sliding window and report the newest state per frame.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, conflicts_with = "float")]
    fixed: bool,
    #[arg(long)]
    float: bool,
    /// Write the path CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    fps: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BayerOp {
    /// PNG to `.bayer`.
    Extract,
    /// `.bayer` to PNG.
    Demosaic,
    /// `.bayer` to headerless bytes.
    Pack,
}

fn capsule_config(path: Option<&Path>) -> Result<CapsuleConfig> {
    match path {
        Some(p) => CapsuleConfig::load(p),
        None => Ok(CapsuleConfig::default()),
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn print_result(r: &SimResult, json: bool) -> Result<()> {
    if json {
        return print_json(&serde_json::to_value(r)?);
    }
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    println!("study            {}", r.study_id);
    println!(
        "detection frame  {}",
        opt(r.detection_frame.map(|d| d.to_string()))
    );
    println!(
        "first SI frame   {}",
        opt(r.first_si_frame.map(|d| d.to_string()))
    );
    println!(
        "delay            {}",
        opt(r.delay_frames.map(|d| format!("{d} frames")))
    );
    println!("energy pre-SI    {:.3} mJ", r.energy_pre_si.total_mj());
    println!("energy total     {:.3} mJ", r.energy_total.total_mj());
    println!("captured         {}", r.frames_captured);
    println!("transmitted      {}", r.frames_transmitted);
    Ok(())
}

fn synth(a: &SynthArgs, json: bool) -> Result<()> {
    if a.studies == 0 {
        return Err(Error::Usage("--studies must be at least 1".into()));
    }
    let mut burst = BurstConfig::default();
    if a.burst.as_ref().is_some_and(|b| b.len() != 2) {
        return Err(Error::Usage("--burst takes rate,mean_len".into()));
    }
    if a.dwell.as_ref().is_some_and(|d| d.len() != 4) {
        return Err(Error::Usage(
            "--dwell takes four comma-separated means".into(),
        ));
    }
    if let Some(b) = &a.burst {
        burst.rate = b[0];
        burst.mean_len = b[1];
    }
    let traces: Vec<StudyTrace> = match &a.dwell {
        Some(d) => {
            let dwell = DwellModel {
                mean_frames: [d[0], d[1], d[2], d[3]],
                ..DwellModel::default()
            };
            let hmm = HmmConfig::default().params()?;
            (0..a.studies as u64)
                .map(|i| synth_study(a.seed.wrapping_add(i), &dwell, &hmm, &burst))
                .collect::<Result<_>>()?
        }
        None => {
            let cfg = CorpusConfig {
                burst,
                ..CorpusConfig::default()
            };
            calibrated_corpus_with(a.seed, a.studies, &cfg)?
        }
    };
    fs::create_dir_all(&a.out)?;
    let mut files = Vec::new();
    for t in &traces {
        let path = a.out.join(format!("{}.csv", t.study_id));
        save_trace(&path, t)?;
        files.push(path.display().to_string());
    }
    if json {
        print_json(&json!({ "studies": traces.len(), "files": files }))
    } else {
        println!("wrote {} studies to {}", traces.len(), a.out.display());
        Ok(())
    }
}

fn decode(a: &DecodeArgs, json: bool) -> Result<()> {
    let cfg = HmmConfig::load(&a.hmm)?;
    let log = to_log(&cfg.params()?);
    let trace = load_trace(&a.trace)?;
    let obs: Vec<_> = trace.observations().collect();
    let use_float = a.float;
    let q = quantize(&log, cfg.format()?);

    let (states, metric): (Vec<Organ>, Option<f64>) = match a.window {
        None if use_float => {
            let p = viterbi_float(&log, &obs)?;
            (p.states, Some(p.metric))
        }
        None => {
            let qobs: Vec<_> = obs.iter().map(|o| o.quantized(q.format)).collect();
            let p = viterbi_fixed(&q, &qobs)?;
            (p.states, Some(q.format.dequantize(p.metric)))
        }
        Some(w) if use_float => {
            let mut d = WindowedDecoder::float(&log, w)?;
            let states = obs.iter().map(|&o| d.push(o).last().unwrap()).collect();
            (states, None)
        }
        Some(w) => {
            let mut d = WindowedDecoder::fixed(&q, w)?;
            let states = obs
                .iter()
                .map(|o| d.push(o.quantized(q.format)).last().unwrap())
                .collect();
            (states, None)
        }
    };

    if json && a.out.is_none() {
        let ids: Vec<usize> = states.iter().map(|s| s.index()).collect();
        return print_json(&json!({ "study_id": trace.study_id, "states": ids, "metric": metric }));
    }
    let mut csv = String::from("frame,state\n");
    for (i, s) in states.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", s.index()));
    }
    match &a.out {
        Some(p) => {
            fs::write(p, csv)?;
            if json {
                print_json(&json!({ "frames": states.len(), "out": p.display().to_string() }))?;
            }
            Ok(())
        }
        None => {
            io::stdout().lock().write_all(csv.as_bytes())?;
            Ok(())
        }
    }
}

fn grid(a: &GridArgs, json: bool) -> Result<()> {
    let mut spec = GridSpec {
        base_config: capsule_config(a.config.as_deref())?,
        ..GridSpec::default()
    };
    if let Some(w) = &a.windows {
        spec.window_sizes = w.clone();
    }
    if let Some(f) = &a.fps {
        spec.fps_values = f.clone();
    }
    let corpus = lab::load_corpus(&a.corpus)?;
    let outcome = lab::run_grid(&spec, &corpus)?;
    lab::report(&outcome, &a.out)?;
    if json {
        return print_json(&serde_json::to_value(outcome.grid.rounded())?);
    }
    println!(
        "baseline {:.3} mJ over {} studies",
        outcome.grid.baseline_avg_energy_mj,
        corpus.len()
    );
    for c in &outcome.grid.cells {
        println!(
            "W={:<3} fps={:<5} {:>9.3} mJ  savings {:>5.1}%  premature {}",
            c.window,
            c.fps,
            c.avg_energy_pre_si_mj,
            100.0 * outcome.grid.savings(c.window, c.fps).unwrap_or(f64::NAN),
            c.premature_count
        );
    }
    Ok(())
}

fn bayer(op: BayerOp, input: &Path, out: &Path, pattern: CfaPattern, json: bool) -> Result<()> {
    let (w, h) = match op {
        BayerOp::Extract => {
            let b = cfa::extract_cfa(&RgbImage::read_png(input)?, pattern)?;
            cfa::save_bayer(out, &b)?;
            (b.width(), b.height())
        }
        BayerOp::Demosaic => {
            let rgb = cfa::demosaic_bilinear(&cfa::load_bayer(input)?);
            rgb.write_png(out)?;
            (rgb.width(), rgb.height())
        }
        BayerOp::Pack => {
            let b = cfa::load_bayer(input)?;
            fs::write(out, cfa::pack_bytes(&b))?;
            (b.width(), b.height())
        }
    };
    if json {
        print_json(&json!({ "width": w, "height": h, "out": out.display().to_string() }))
    } else {
        println!("wrote {}x{} to {}", w, h, out.display());
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Synth(a) => synth(a, cli.json),
        Cmd::Decode(a) => decode(a, cli.json),
        Cmd::Simulate { trace, config } => {
            let cfg = capsule_config(config.as_deref())?;
            print_result(&run_capsule(&load_trace(trace)?, &cfg)?, cli.json)
        }
        Cmd::Baseline { trace, config } => {
            let cfg = capsule_config(config.as_deref())?;
            print_result(&run_baseline(&load_trace(trace)?, &cfg.power)?, cli.json)
        }
        Cmd::Grid(a) => grid(a, cli.json),
        Cmd::Bayer {
            op,
            input,
            out,
            pattern,
        } => bayer(*op, input, out, *pattern, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.is_usage() { 2 } else { 3 };
            if cli.json {
                println!("{}", json!({ "error": e.to_string(), "exit_code": code }));
            }
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
