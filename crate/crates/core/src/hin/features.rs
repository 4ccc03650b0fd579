use std::collections::{BTreeMap, BTreeSet};

use crate::sparse::SparseMatrix;

use super::NodeRegistry;

/// Character 1-gram and 2-gram counts per domain over a window-wide
/// vocabulary. Grams include the dot; names are featurized whole.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainFeatureMatrix {
    pub vocabulary: Vec<String>,
    /// `n_domains x vocabulary.len()` counts.
    pub counts: SparseMatrix,
}

fn grams(name: &str) -> impl Iterator<Item = String> + '_ {
    let chars: Vec<char> = name.chars().collect();
    let unigrams: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
    let bigrams: Vec<String> = chars.windows(2).map(|w| w.iter().collect()).collect();
    unigrams.into_iter().chain(bigrams)
}

pub fn featurize_domains(registry: &NodeRegistry) -> DomainFeatureMatrix {
    let names = registry.domains.names();
    let vocabulary: Vec<String> = names
        .iter()
        .flat_map(|n| grams(n))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let column: BTreeMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let triplets: Vec<(usize, usize, f64)> = names
        .iter()
        .enumerate()
        .flat_map(|(i, n)| grams(n).map(move |g| (i, g)))
        .map(|(i, g)| (i, column[g.as_str()], 1.0))
        .collect();
    let counts = SparseMatrix::from_triplets(names.len(), vocabulary.len(), triplets)
        .expect("gram columns come from the vocabulary");
    DomainFeatureMatrix { vocabulary, counts }
}
