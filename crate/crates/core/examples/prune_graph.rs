//! Drop uninformative nodes ahead of the metapath products, keeping
//! labeled malicious domains and their neighbours.

use std::collections::BTreeMap;

use dns_hin::hin::{HinGraph, KMeansConfig};
use dns_hin::ingest::{window, ConflictPolicy, LabelIndex, Prior};
use dns_hin::prune::{prune, PruneConfig};
use dns_hin::synth::{generate, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    let scene = generate(&ScenarioSpec::default())?;
    let segments: BTreeMap<String, String> = scene.segments.iter().cloned().collect();
    let batches = window(scene.logs, &scene.pdns, 3600)?;
    let (graph, _) = HinGraph::build(&batches[0], &segments, &KMeansConfig::new(20, 0))?;
    let index = LabelIndex::new(&scene.truth, ConflictPolicy::default());
    let priors: Vec<Option<Prior>> = graph.registry.domains.names().iter().map(|d| index.prior(d)).collect();

    let pruned = prune(&graph, &priors, &PruneConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&pruned.report)?);
    println!("report reconciles: {}", pruned.report.reconciles());
    Ok(())
}
