//! The heterogeneous DNS graph: clients, domains and IP addresses plus the
//! six relation matrices between them.
//!
//! | matrix | shape       | entry `(i, j) = 1` when                        |
//! |--------|-------------|------------------------------------------------|
//! | `q`    | n_d x n_c   | domain `i` is queried by client `j`            |
//! | `n`    | n_c x n_c   | clients `i`, `j` share a network segment       |
//! | `r`    | n_d x n_ip  | domain `i` resolves to IP `j`                  |
//! | `s`    | n_d x n_d   | domains `i`, `j` share a character cluster     |
//! | `c`    | n_d x n_d   | domains `i`, `j` appear in one CNAME record    |
//! | `d`    | n_ip x n_ip | IPs `i`, `j` were resolved from a common domain |
//!
//! `n`, `s`, `c` and `d` are symmetric with an empty diagonal.

mod features;
mod io;
mod kmeans;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, RecordType, WindowBatch};
use crate::sparse::SparseMatrix;

pub use features::{featurize_domains, DomainFeatureMatrix};
pub use io::{read_graph, write_graph};
pub use kmeans::{build_s, kmeans, Clustering, KMeansConfig};

/// Dense bidirectional name <-> index map for one node kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Interner {
    fn from(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, index }
    }
}

impl From<Interner> for Vec<String> {
    fn from(i: Interner) -> Self {
        i.names
    }
}

impl Interner {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Keeps the listed indices, in the given order.
    pub fn select(&self, keep: &[usize]) -> Interner {
        keep.iter()
            .map(|&i| self.names[i].clone())
            .collect::<Vec<_>>()
            .into()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRegistry {
    pub clients: Interner,
    pub domains: Interner,
    pub ips: Interner,
}

impl NodeRegistry {
    pub fn n_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn n_domains(&self) -> usize {
        self.domains.len()
    }

    pub fn n_ips(&self) -> usize {
        self.ips.len()
    }
}

/// pDNS CNAME records with either end among the logged domains.
fn pdns_cname_links<'a>(
    batch: &'a WindowBatch,
    log_domains: &'a BTreeSet<String>,
) -> impl Iterator<Item = &'a ingest::PassiveDnsRecord> + 'a {
    batch.pdns.iter().filter(move |p| match p.rtype {
        RecordType::Cname => log_domains.contains(&p.qname) || log_domains.contains(&p.rdata),
        _ => false,
    })
}

/// Registers every client, queried name, CNAME target and answer IP of a
/// batch, in lexicographic order. pDNS only enriches domains seen in the
/// logs; it never introduces an unrelated domain.
pub fn build_registry(batch: &WindowBatch) -> NodeRegistry {
    let mut clients = BTreeSet::new();
    let mut domains = BTreeSet::new();
    let mut ips = BTreeSet::new();
    for rec in &batch.logs {
        clients.insert(rec.client_id.clone());
        domains.insert(rec.qname.clone());
        for a in &rec.answers {
            match a.rtype {
                RecordType::Cname => {
                    domains.insert(a.rdata.clone());
                }
                _ => {
                    ips.insert(a.rdata.clone());
                }
            }
        }
    }
    let linked: Vec<(String, String)> = pdns_cname_links(batch, &domains)
        .map(|p| (p.qname.clone(), p.rdata.clone()))
        .collect();
    for (a, b) in linked {
        domains.insert(a);
        domains.insert(b);
    }
    for p in &batch.pdns {
        if p.rtype.is_address() && domains.contains(&p.qname) {
            ips.insert(p.rdata.clone());
        }
    }
    NodeRegistry {
        clients: clients.into_iter().collect::<Vec<_>>().into(),
        domains: domains.into_iter().collect::<Vec<_>>().into(),
        ips: ips.into_iter().collect::<Vec<_>>().into(),
    }
}

fn lookup(interner: &Interner, kind: &'static str, name: &str) -> Result<usize> {
    interner.get(name).ok_or_else(|| Error::UnknownNode {
        kind,
        name: name.to_string(),
    })
}

pub fn build_q(batch: &WindowBatch, registry: &NodeRegistry) -> Result<SparseMatrix> {
    let pairs = batch
        .logs
        .iter()
        .map(|rec| {
            Ok((
                lookup(&registry.domains, "domain", &rec.qname)?,
                lookup(&registry.clients, "client", &rec.client_id)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    SparseMatrix::indicator(registry.n_domains(), registry.n_clients(), pairs)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SegmentStats {
    pub segments: usize,
    pub missing_clients: usize,
}

/// Client-segment-client relation. Clients absent from the segment map are
/// their own singleton segment.
pub fn build_n(
    registry: &NodeRegistry,
    segments: &BTreeMap<String, String>,
) -> Result<(SparseMatrix, SegmentStats)> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut stats = SegmentStats::default();
    for (i, name) in registry.clients.names().iter().enumerate() {
        match segments.get(name) {
            Some(seg) => groups.entry(seg.as_str()).or_default().push(i),
            None => stats.missing_clients += 1,
        }
    }
    stats.segments = groups.len() + stats.missing_clients;
    let pairs = groups.values().flat_map(|members| {
        members.iter().flat_map(move |&a| {
            members
                .iter()
                .filter(move |&&b| b != a)
                .map(move |&b| (a, b))
        })
    });
    let n = registry.n_clients();
    Ok((SparseMatrix::indicator(n, n, pairs)?, stats))
}

pub fn build_r(batch: &WindowBatch, registry: &NodeRegistry) -> Result<SparseMatrix> {
    let mut pairs = Vec::new();
    for rec in &batch.logs {
        for a in rec.answers.iter().filter(|a| a.rtype.is_address()) {
            pairs.push((
                lookup(&registry.domains, "domain", &rec.qname)?,
                lookup(&registry.ips, "ip", &a.rdata)?,
            ));
        }
    }
    for p in batch.pdns.iter().filter(|p| p.rtype.is_address()) {
        if let (Some(d), Some(ip)) = (registry.domains.get(&p.qname), registry.ips.get(&p.rdata)) {
            pairs.push((d, ip));
        }
    }
    SparseMatrix::indicator(registry.n_domains(), registry.n_ips(), pairs)
}

/// Direct CNAME pairs only; chains are not transitively closed.
pub fn build_c(batch: &WindowBatch, registry: &NodeRegistry) -> Result<SparseMatrix> {
    let mut pairs = Vec::new();
    let mut push = |a: usize, b: usize| {
        if a != b {
            pairs.push((a, b));
            pairs.push((b, a));
        }
    };
    for rec in &batch.logs {
        for a in rec.answers.iter().filter(|a| a.rtype == RecordType::Cname) {
            push(
                lookup(&registry.domains, "domain", &rec.qname)?,
                lookup(&registry.domains, "domain", &a.rdata)?,
            );
        }
    }
    for p in batch.pdns.iter().filter(|p| p.rtype == RecordType::Cname) {
        if let (Some(a), Some(b)) = (registry.domains.get(&p.qname), registry.domains.get(&p.rdata)) {
            push(a, b);
        }
    }
    let n = registry.n_domains();
    SparseMatrix::indicator(n, n, pairs)
}

/// Zero-diagonal indicator of `RᵀR > 0`.
pub fn build_d(r: &SparseMatrix) -> Result<SparseMatrix> {
    let rtr = r.transpose().matmul(r)?;
    let pairs: Vec<(usize, usize)> = rtr
        .iter()
        .filter(|&(i, j, v)| i != j && v > 0.0)
        .map(|(i, j, _)| (i, j))
        .collect();
    SparseMatrix::indicator(r.cols(), r.cols(), pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HinGraph {
    pub registry: NodeRegistry,
    pub q: SparseMatrix,
    pub n: SparseMatrix,
    pub r: SparseMatrix,
    pub s: SparseMatrix,
    pub c: SparseMatrix,
    pub d: SparseMatrix,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BuildStats {
    pub clients: usize,
    pub domains: usize,
    pub ips: usize,
    pub segments: SegmentStats,
    pub vocabulary: usize,
    pub clusters: usize,
}

impl HinGraph {
    pub fn build(
        batch: &WindowBatch,
        segments: &BTreeMap<String, String>,
        kmeans_config: &KMeansConfig,
    ) -> Result<(HinGraph, BuildStats)> {
        let registry = build_registry(batch);
        let q = build_q(batch, &registry)?;
        let (n, seg_stats) = build_n(&registry, segments)?;
        let r = build_r(batch, &registry)?;
        let c = build_c(batch, &registry)?;
        let d = build_d(&r)?;
        let features = featurize_domains(&registry);
        let clustering = build_s(&features, kmeans_config);
        let stats = BuildStats {
            clients: registry.n_clients(),
            domains: registry.n_domains(),
            ips: registry.n_ips(),
            segments: seg_stats,
            vocabulary: features.vocabulary.len(),
            clusters: clustering.k,
        };
        Ok((
            HinGraph {
                registry,
                q,
                n,
                r,
                s: clustering.matrix,
                c,
                d,
            },
            stats,
        ))
    }

    pub fn n_domains(&self) -> usize {
        self.registry.n_domains()
    }

    /// Sub-graph on the listed surviving node indices (old indices, in new
    /// order).
    pub fn restrict(&self, clients: &[usize], domains: &[usize], ips: &[usize]) -> HinGraph {
        HinGraph {
            registry: NodeRegistry {
                clients: self.registry.clients.select(clients),
                domains: self.registry.domains.select(domains),
                ips: self.registry.ips.select(ips),
            },
            q: self.q.submatrix(domains, clients),
            n: self.n.submatrix(clients, clients),
            r: self.r.submatrix(domains, ips),
            s: self.s.submatrix(domains, domains),
            c: self.c.submatrix(domains, domains),
            d: self.d.submatrix(ips, ips),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let reg = &self.registry;
        let shapes = [
            ("Q", &self.q, reg.n_domains(), reg.n_clients()),
            ("N", &self.n, reg.n_clients(), reg.n_clients()),
            ("R", &self.r, reg.n_domains(), reg.n_ips()),
            ("S", &self.s, reg.n_domains(), reg.n_domains()),
            ("C", &self.c, reg.n_domains(), reg.n_domains()),
            ("D", &self.d, reg.n_ips(), reg.n_ips()),
        ];
        for (name, m, rows, cols) in shapes {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.values().iter().any(|&v| v != 1.0) {
                return Err(Error::DimensionMismatch(format!("{name} is not 0/1")));
            }
        }
        for (name, m) in [("N", &self.n), ("S", &self.s), ("C", &self.c), ("D", &self.d)] {
            if !m.is_symmetric() || m.diagonal().iter().any(|&v| v != 0.0) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be symmetric with zero diagonal"
                )));
            }
        }
        Ok(())
    }
}

/// Reads a `client_id,segment_label` CSV.
pub fn load_segments(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_segments(ingest::open(path)?)
}

pub fn parse_segments<R: std::io::Read>(input: R) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut out = BTreeMap::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::malformed(n + 1, "expected client_id,segment_label"));
        }
        out.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(out)
}
