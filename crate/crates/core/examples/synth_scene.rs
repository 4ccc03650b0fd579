//! Generate the default synthetic scene and write it as input files.

use dns_hin::synth::{generate, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    let spec = ScenarioSpec::default();
    let scene = generate(&spec)?;
    let mut counts = vec![0usize; spec.class_count()];
    for e in &scene.truth {
        counts[e.class_id] += 1;
    }
    println!(
        "{} log records, {} pDNS records, {} clients",
        scene.logs.len(),
        scene.pdns.len(),
        scene.segments.len()
    );
    println!("domains per class (benign, then {:?}): {counts:?}", spec.families.iter().map(|f| &f.name).collect::<Vec<_>>());

    let dir = std::env::temp_dir().join("dns-hin-scene");
    let paths = scene.write(&dir)?;
    println!("written: {paths:?}");
    Ok(())
}
