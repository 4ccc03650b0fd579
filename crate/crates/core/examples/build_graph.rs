//! Build the heterogeneous graph of one window: client-domain queries,
//! client segments, domain-IP resolutions, name clusters, CNAME links and
//! IP co-hosting.

use std::collections::BTreeMap;

use dns_hin::hin::{HinGraph, KMeansConfig};
use dns_hin::ingest::window;
use dns_hin::synth::{generate, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    let scene = generate(&ScenarioSpec::default())?;
    let segments: BTreeMap<String, String> = scene.segments.iter().cloned().collect();
    let batches = window(scene.logs, &scene.pdns, 3600)?;
    let (graph, stats) = HinGraph::build(&batches[0], &segments, &KMeansConfig::new(20, 0))?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    for (name, m) in [
        ("Q domain-client", &graph.q),
        ("N client-client", &graph.n),
        ("R domain-ip", &graph.r),
        ("S domain-domain (names)", &graph.s),
        ("C domain-domain (cname)", &graph.c),
        ("D ip-ip", &graph.d),
    ] {
        println!("{name:<24} {:>5} x {:<5} nnz {}", m.rows(), m.cols(), m.nnz());
    }
    Ok(())
}
