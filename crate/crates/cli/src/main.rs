use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use kwsfe::dpp::{plan_filters, sweep, write_sweep_csv, LatencyModel};
use kwsfe::error::Error;
use kwsfe::pipeline::{
    analyze_corpus, load_wav_expecting, save_wav, write_features, FeatureFormat, FrontEnd,
    PipelineConfig,
};
use kwsfe::synth::{speech_like, SpeechParams};

/// Keyword-spotting front end: IIR mel features with sparsity-aware
/// striding, plus a filter-cluster timing model.
#[derive(Parser)]
#[command(name = "kwsfe", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract log2 band energies from one WAV file.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Write the run report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Aggregate reduction statistics over every WAV file in a directory.
    Analyze {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Also write the full per-clip report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Schedule one clip on `m` filters and print the timing summary.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        filters: u32,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the dispatch trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Find the smallest real-time and the lowest-energy filter counts.
    Plan {
        #[arg(long)]
        channels: u32,
        #[arg(long = "m-max")]
        m_max: u32,
        /// Use the closed-form latency curve instead of simulating a clip.
        #[arg(long)]
        analytic: bool,
        /// Clip whose stride plan drives the simulated latency model.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the per-m latency/power/energy table as CSV.
        #[arg(long)]
        sweep: Option<PathBuf>,
    },
    /// Write a seeded synthetic speech-like corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
    },
}

fn load_config(path: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn print_json(v: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::Extract {
            input,
            config,
            out,
            format,
            report,
        } => {
            let cfg = load_config(Some(&config))?;
            let clip = load_wav_expecting(&input, cfg.sample_rate)
                .with_context(|| format!("loading {}", input.display()))?;
            let ex = FrontEnd::new(cfg)?.extract(&clip)?;
            let fmt = match format {
                Format::Csv => FeatureFormat::Csv,
                Format::Bin => FeatureFormat::Binary,
            };
            let mut w = create(&out)?;
            write_features(&ex.features, fmt, &mut w)?;
            w.flush()?;
            if let Some(path) = report {
                let mut w = create(&path)?;
                serde_json::to_writer_pretty(&mut w, &ex.report)?;
                writeln!(w)?;
            }
            eprintln!(
                "{} rows x {} bands, reduction {:.2}%",
                ex.features.n_rows(),
                ex.features.n_bands,
                ex.report.reduction_pct
            );
        }
        Cmd::Analyze {
            corpus,
            config,
            report,
        } => {
            let cfg = load_config(Some(&config))?;
            let rep = analyze_corpus(&corpus, &cfg)?;
            if let Some(path) = report {
                let mut w = create(&path)?;
                serde_json::to_writer_pretty(&mut w, &rep)?;
                writeln!(w)?;
            }
            print_json(&json!({
                "n_clips": rep.n_clips,
                "mean_reduction_pct": rep.mean_reduction_pct,
                "pooled_reduction_pct": rep.pooled_reduction_pct,
                "min_reduction_pct": rep.min_reduction_pct,
                "max_reduction_pct": rep.max_reduction_pct,
                "stride_histogram": rep.stride_histogram,
                "all_feasible": rep.all_feasible,
            }))?;
        }
        Cmd::Simulate {
            input,
            filters,
            config,
            trace,
        } => {
            let cfg = load_config(config.as_deref())?;
            let clip = load_wav_expecting(&input, cfg.sample_rate)
                .with_context(|| format!("loading {}", input.display()))?;
            let fe = FrontEnd::new(cfg)?;
            let plan = fe.stride_plan(&clip)?;
            let tr = fe.schedule(&plan, filters)?;
            if let Some(path) = trace {
                let mut w = create(&path)?;
                tr.write_csv(&mut w)?;
                w.flush()?;
            }
            let cost = fe.config().cost_model();
            let prologue = cost.prologue_cycles(clip.len());
            let latency_s = cost.seconds(prologue + tr.makespan);
            print_json(&json!({
                "filters": filters,
                "tasks": tr.entries.len(),
                "prologue_cycles": prologue,
                "makespan_cycles": tr.makespan,
                "total_cycles": prologue + tr.makespan,
                "latency_s": latency_s,
                "utilization": tr.utilization(),
                "budget_s": fe.config().budget_s(),
                "feasible": latency_s <= fe.config().budget_s(),
            }))?;
        }
        Cmd::Plan {
            channels,
            m_max,
            analytic,
            input,
            config,
            sweep: sweep_out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let lat = if analytic {
                LatencyModel::default()
            } else {
                let Some(input) = input else {
                    bail!(Error::InvalidInput(
                        "simulated planning needs --in <wav>; pass --analytic otherwise".into()
                    ));
                };
                let clip = load_wav_expecting(&input, cfg.sample_rate)
                    .with_context(|| format!("loading {}", input.display()))?;
                let plan = FrontEnd::new(cfg.clone())?.stride_plan(&clip)?;
                LatencyModel::simulated(&plan, cfg.cost_model())
            };
            let pow = cfg.power_model();
            let res = plan_filters(channels, cfg.t_audio, m_max, &lat, &pow)?;
            if let Some(path) = sweep_out {
                let rows = sweep(1..=m_max.max(1), &lat, &pow)?;
                let mut w = create(&path)?;
                write_sweep_csv(&rows, &mut w)?;
                w.flush()?;
            }
            print_json(&serde_json::to_value(res)?)?;
            if !res.feasible {
                eprintln!(
                    "infeasible: no filter count up to {m_max} meets {:.6} s per channel",
                    res.budget_s
                );
                return Ok(ExitCode::from(3));
            }
        }
        Cmd::Synth { out, count, seed } => {
            std::fs::create_dir_all(&out)?;
            let p = SpeechParams::default();
            for i in 0..count {
                let clip = speech_like(seed + i as u64, &p);
                save_wav(&clip, out.join(format!("clip_{i:04}.wav")))?;
            }
            eprintln!("wrote {count} clips to {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Infeasible { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
