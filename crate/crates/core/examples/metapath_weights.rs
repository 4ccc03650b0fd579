//! Weigh the six metapaths by Laplacian Score and combine their PathSim
//! matrices into one similarity.

use std::collections::BTreeMap;

use dns_hin::combine::{laplacian_score_on, scores_to_weights};
use dns_hin::hin::{HinGraph, KMeansConfig};
use dns_hin::ingest::window;
use dns_hin::pipeline::similarities;
use dns_hin::synth::{generate, ScenarioSpec};

fn main() -> dns_hin::Result<()> {
    // two disconnected triangles: the indicator of one scores 0
    let adjacency = vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4, 5], vec![3, 5], vec![3, 4]];
    let indicator = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    let mixed = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    println!(
        "toy scores: indicator {:.3}, mixed {:.3}",
        laplacian_score_on(&adjacency, &indicator),
        laplacian_score_on(&adjacency, &mixed)
    );
    let w = scores_to_weights(&[1.0, 2.0, 4.0, f64::INFINITY, f64::INFINITY, f64::INFINITY]);
    println!("weights for scores (1, 2, 4, inf, inf, inf): {:?}", w.weights);

    let scene = generate(&ScenarioSpec::default())?;
    let segments: BTreeMap<String, String> = scene.segments.iter().cloned().collect();
    let batches = window(scene.logs, &scene.pdns, 3600)?;
    let (graph, _) = HinGraph::build(&batches[0], &segments, &KMeansConfig::new(20, 0))?;
    let sims = similarities(&graph, 5)?;
    for (k, (score, weight)) in sims.weights.scores.iter().zip(sims.weights.weights).enumerate() {
        println!("P{}: score {score:.4}  weight {weight:.4}  nnz {}", k + 1, sims.pathsims[k].matrix.nnz());
    }
    println!("combined nnz {}", sims.combined.matrix.nnz());
    Ok(())
}
