//! Full run over a synthetic scene with 70% of the truth as labels:
//! verdicts, prune reports, weights, local lists and metrics on disk.

use std::fs;

use dns_hin::config::EngineConfig;
use dns_hin::pipeline::run;
use dns_hin::synth::{generate, labels_text, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    let dir = std::env::temp_dir().join("dns-hin-run");
    let spec = ScenarioSpec::default();
    let scene = generate(&spec)?;
    let paths = scene.write(&dir.join("scene"))?;
    let labels = dir.join("scene/labels.csv");
    fs::write(&labels, labels_text(&scene.sample_labels(0.7, 1))).map_err(|e| dns_hin::Error::io(&labels, e))?;

    let mut config = EngineConfig {
        classes: spec.class_count(),
        ..EngineConfig::default()
    };
    config.paths.logs = Some(paths.logs);
    config.paths.pdns = Some(paths.pdns);
    config.paths.segments = Some(paths.segments);
    config.paths.truth = Some(paths.truth);
    config.paths.labels = vec![labels];
    config.paths.output = dir.join("out");

    let report = run(&config)?;
    for w in &report.windows {
        println!("window {}: {:?}", w.window_start, w.verdicts);
    }
    if let Some(m) = &report.metrics {
        println!("unlabeled domains: accuracy {:.4} f1 {:.4} auc {:?}", m.accuracy, m.f1, m.auc);
    }
    println!("outputs in {}", config.paths.output.display());
    Ok(())
}
