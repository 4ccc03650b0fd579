use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dns_hin::config::{EngineConfig, Mode};
use dns_hin::experiments::{label_sweep, noise_sweep, per_metapath, prepare, write_outputs};
use dns_hin::pipeline::{evaluate_verdicts, run};
use dns_hin::synth::{generate, labels_text, ScenarioSpec};
use dns_hin::{Error, Result};

#[derive(Parser)]
#[command(name = "dns-hin", version, about = "Malicious domain detection over a DNS heterogeneous graph")]
struct Cli {
    /// JSON engine config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    logs: Option<PathBuf>,
    #[arg(long, global = true)]
    pdns: Option<PathBuf>,
    /// Label list; repeat for several. Replaces the configured lists.
    #[arg(long = "labels", global = true)]
    labels: Vec<PathBuf>,
    #[arg(long, global = true)]
    segments: Option<PathBuf>,
    #[arg(long, global = true)]
    truth: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    classes: Option<usize>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    window_seconds: Option<i64>,
    #[arg(long, global = true)]
    repeats: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every window of the configured inputs.
    Run,
    /// Write a synthetic labeled scene and a config that points at it.
    Synth {
        /// Scenario spec as JSON; defaults otherwise.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        scene_seed: Option<u64>,
        /// Share of truth copied into the label list of the written config.
        #[arg(long, default_value_t = 0.7)]
        label_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy against the fraction of retained labels.
    SweepLabels {
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
    },
    /// Accuracy against the share of flipped labels.
    SweepNoise {
        #[arg(long, value_delimiter = ',')]
        percents: Option<Vec<f64>>,
    },
    /// Each metapath alone against the weighted combination.
    PerMetapath {
        #[arg(long)]
        keep: Option<f64>,
    },
    /// Score verdict CSVs against the truth list.
    Eval {
        #[arg(long = "verdicts", required = true)]
        verdicts: Vec<PathBuf>,
    },
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown mode {s:?}; expected binary, multiclass or two-stage"))
}

fn load_config(cli: &Cli) -> Result<EngineConfig> {
    let mut c = match &cli.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    };
    let o = &cli.overrides;
    let paths = &mut c.paths;
    for (slot, value) in [
        (&mut paths.logs, &o.logs),
        (&mut paths.pdns, &o.pdns),
        (&mut paths.segments, &o.segments),
        (&mut paths.truth, &o.truth),
    ] {
        if value.is_some() {
            *slot = value.clone();
        }
    }
    if !o.labels.is_empty() {
        paths.labels = o.labels.clone();
    }
    if let Some(v) = &o.output {
        paths.output = v.clone();
    }
    if let Some(v) = o.mode {
        c.mode = v;
    }
    if let Some(v) = o.classes {
        c.classes = v;
    }
    if let Some(v) = o.mu {
        c.classifier.mu = v;
    }
    if let Some(v) = o.theta {
        c.classifier.theta = v;
    }
    if let Some(v) = o.window_seconds {
        c.window_seconds = v;
    }
    if let Some(v) = o.repeats {
        c.experiments.repeats = v;
    }
    if let Some(v) = o.seed {
        c.experiments.seed = v;
    }
    Ok(c)
}

fn synth(spec: Option<&Path>, seed: Option<u64>, label_fraction: f64, out: &Path, base: EngineConfig) -> Result<()> {
    let mut spec = match spec {
        Some(path) => serde_json::from_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
        None => ScenarioSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let scene = generate(&spec)?;
    let paths = scene.write(out)?;
    let labels = out.join("labels.csv");
    let sample = labels_text(&scene.sample_labels(label_fraction, spec.seed));
    fs::write(&labels, sample).map_err(|e| Error::io(&labels, e))?;
    let mut config = base;
    config.paths.labels = vec![labels];
    config.classes = spec.class_count();
    config.paths.logs = Some(paths.logs);
    config.paths.pdns = Some(paths.pdns);
    config.paths.segments = Some(paths.segments);
    config.paths.truth = Some(paths.truth);
    config.paths.output = out.join("out");
    let path = out.join("config.json");
    fs::write(&path, config.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
    println!("scene written to {}; config at {}", out.display(), path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Run => {
            let report = run(&config)?;
            println!("{}: {} windows", report.status, report.windows.len());
            if let Some(m) = report.metrics {
                println!("accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}", m.accuracy, m.precision, m.recall, m.f1);
            }
        }
        Command::Synth {
            spec,
            scene_seed,
            label_fraction,
            out,
        } => synth(spec.as_deref(), scene_seed, label_fraction, &out, config)?,
        Command::SweepLabels { fractions } => {
            if let Some(f) = fractions {
                config.experiments.fractions = f;
            }
            let sweep = label_sweep(&prepare(&config)?, &config)?;
            let text = sweep.to_text();
            write_outputs(&config.paths.output, "sweep_labels", &sweep, &text)?;
            print!("{text}");
        }
        Command::SweepNoise { percents } => {
            if let Some(p) = percents {
                config.experiments.noise_percents = p;
            }
            let sweep = noise_sweep(&prepare(&config)?, &config)?;
            let text = sweep.to_text();
            write_outputs(&config.paths.output, "sweep_noise", &sweep, &text)?;
            print!("{text}");
        }
        Command::PerMetapath { keep } => {
            if let Some(k) = keep {
                config.experiments.per_metapath_keep_fraction = k;
            }
            let table = per_metapath(&prepare(&config)?, &config)?;
            let text = table.to_text();
            write_outputs(&config.paths.output, "per_metapath", &table, &text)?;
            print!("{text}");
        }
        Command::Eval { verdicts } => {
            let truth = config
                .paths
                .truth
                .clone()
                .ok_or_else(|| Error::Config("eval needs --truth".into()))?;
            let m = evaluate_verdicts(&verdicts, &truth, &config, &config.paths.output)?;
            println!(
                "n {} accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} auc {}",
                m.n,
                m.accuracy,
                m.precision,
                m.recall,
                m.f1,
                m.auc.map_or("-".into(), |a| format!("{a:.4}"))
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
