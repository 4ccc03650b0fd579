//! Accuracy as the share of retained labels shrinks, plus label noise and
//! the per-metapath comparison, with a few repeats.

use dns_hin::config::EngineConfig;
use dns_hin::experiments::{label_sweep, noise_sweep, per_metapath, prepare};
use dns_hin::synth::{generate, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    let dir = std::env::temp_dir().join("dns-hin-sweep");
    let spec = ScenarioSpec::default();
    let paths = generate(&spec)?.write(&dir)?;
    let mut config = EngineConfig {
        classes: spec.class_count(),
        ..EngineConfig::default()
    };
    config.paths.logs = Some(paths.logs);
    config.paths.pdns = Some(paths.pdns);
    config.paths.segments = Some(paths.segments);
    config.paths.truth = Some(paths.truth);
    config.experiments.repeats = 3;
    config.experiments.noise_percents = vec![0.0, 20.0, 40.0];

    let prepared = prepare(&config)?;
    print!("{}", label_sweep(&prepared, &config)?.to_text());
    print!("{}", noise_sweep(&prepared, &config)?.to_text());
    print!("{}", per_metapath(&prepared, &config)?.to_text());
    Ok(())
}
