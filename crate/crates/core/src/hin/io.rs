//! Graph snapshots: `registry.json` plus one `row col value` file per
//! relation matrix.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::open;
use crate::sparse::SparseMatrix;

use super::{HinGraph, NodeRegistry};

#[derive(Serialize, Deserialize)]
struct MatrixEntry {
    rows: usize,
    cols: usize,
    nnz: usize,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(flatten)]
    registry: NodeRegistry,
    matrices: BTreeMap<String, MatrixEntry>,
}

fn matrices(g: &HinGraph) -> [(&'static str, &SparseMatrix); 6] {
    [
        ("Q", &g.q),
        ("N", &g.n),
        ("R", &g.r),
        ("S", &g.s),
        ("C", &g.c),
        ("D", &g.d),
    ]
}

pub fn write_graph(dir: &Path, graph: &HinGraph) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = BTreeMap::new();
    for (name, m) in matrices(graph) {
        let file = format!("{name}.coo");
        let path = dir.join(&file);
        let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        m.write_coo(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))?;
        entries.insert(
            name.to_string(),
            MatrixEntry {
                rows: m.rows(),
                cols: m.cols(),
                nnz: m.nnz(),
                file,
            },
        );
    }
    let manifest = Manifest {
        registry: graph.registry.clone(),
        matrices: entries,
    };
    let path = dir.join("registry.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_graph(dir: &Path) -> Result<HinGraph> {
    let path = dir.join("registry.json");
    let manifest: Manifest = serde_json::from_reader(open(&path)?)?;
    let load = |name: &str| -> Result<SparseMatrix> {
        let entry = manifest
            .matrices
            .get(name)
            .ok_or_else(|| Error::DimensionMismatch(format!("manifest lacks matrix {name}")))?;
        SparseMatrix::read_coo(open(&dir.join(&entry.file))?, entry.rows, entry.cols)
    };
    let graph = HinGraph {
        q: load("Q")?,
        n: load("N")?,
        r: load("R")?,
        s: load("S")?,
        c: load("C")?,
        d: load("D")?,
        registry: manifest.registry,
    };
    graph.check_invariants()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::KMeansConfig;
    use crate::ingest::{parse_log_line, WindowBatch};

    #[test]
    fn snapshot_round_trip() {
        let logs = [
            "1\tc1\ta.test\tA\t1.1.1.1",
            "1\tc1\tb.test\tA\t1.1.1.1",
            "1\tc2\tb.test\tCNAME\tc.test",
            "1\tc2\tc.test\tA\t1.1.1.2",
        ];
        let batch = WindowBatch {
            window_start: 0,
            window_end: 10,
            logs: logs.iter().map(|l| parse_log_line(l).unwrap()).collect(),
            pdns: vec![],
        };
        let seg = [("c1".to_string(), "s".to_string()), ("c2".to_string(), "s".to_string())]
            .into_iter()
            .collect();
        let (g, _) = HinGraph::build(&batch, &seg, &KMeansConfig::new(2, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_graph(dir.path(), &g).unwrap();
        assert_eq!(read_graph(dir.path()).unwrap(), g);
    }
}
