//! The six symmetric domain-to-domain metapaths and their PathSim
//! similarities.
//!
//! | id | metapath               | commuting matrix |
//! |----|------------------------|------------------|
//! | P1 | d -S- d                | S + I            |
//! | P2 | d -C- d                | C + I            |
//! | P3 | d -Q- c -Qᵀ- d         | Q Qᵀ             |
//! | P4 | d -R- ip -Rᵀ- d        | R Rᵀ             |
//! | P5 | d -Q- c -N- c -Qᵀ- d   | Q N Qᵀ           |
//! | P6 | d -R- ip -D- ip -Rᵀ- d | R D Rᵀ           |
//!
//! The stored S and C relations have empty diagonals, which would make
//! PathSim's self-count denominator vanish for every pair. The one-hop
//! paths therefore count each domain as reaching itself.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hin::HinGraph;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetapathId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl MetapathId {
    pub const ALL: [MetapathId; 6] = [
        MetapathId::P1,
        MetapathId::P2,
        MetapathId::P3,
        MetapathId::P4,
        MetapathId::P5,
        MetapathId::P6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn formula(self) -> &'static str {
        match self {
            MetapathId::P1 => "S+I",
            MetapathId::P2 => "C+I",
            MetapathId::P3 => "QQ^T",
            MetapathId::P4 => "RR^T",
            MetapathId::P5 => "QNQ^T",
            MetapathId::P6 => "RDR^T",
        }
    }
}

impl fmt::Display for MetapathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Path-instance counts between domain pairs along `pid`.
pub fn commuting(graph: &HinGraph, pid: MetapathId) -> Result<SparseMatrix> {
    let n = graph.n_domains();
    match pid {
        MetapathId::P1 => graph.s.add(&SparseMatrix::identity(n)),
        MetapathId::P2 => graph.c.add(&SparseMatrix::identity(n)),
        MetapathId::P3 => graph.q.matmul(&graph.q.transpose()),
        MetapathId::P4 => graph.r.matmul(&graph.r.transpose()),
        MetapathId::P5 => graph.q.matmul(&graph.n)?.matmul(&graph.q.transpose()),
        MetapathId::P6 => graph.r.matmul(&graph.d)?.matmul(&graph.r.transpose()),
    }
}

/// All six commuting matrices, computed in parallel.
pub fn all_commuting(graph: &HinGraph) -> Result<Vec<SparseMatrix>> {
    MetapathId::ALL
        .par_iter()
        .map(|&pid| commuting(graph, pid))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub matrix: SparseMatrix,
    /// Entries whose raw value exceeded 1 and were clamped.
    pub clamped: usize,
}

/// `2 M(i,j) / (M(i,i) + M(j,j))`, zero where the denominator vanishes,
/// clamped to `[0, 1]`. Only nonzero entries of `m` are visited.
pub fn pathsim(m: &SparseMatrix) -> SimilarityMatrix {
    let diag = m.diagonal();
    let mut clamped = 0usize;
    let matrix = m.map_entries(|i, j, v| {
        let denom = diag[i] + diag[j];
        if denom <= 0.0 {
            return 0.0;
        }
        let s = 2.0 * v / denom;
        if s > 1.0 {
            clamped += 1;
            1.0
        } else {
            s.max(0.0)
        }
    });
    SimilarityMatrix { matrix, clamped }
}
