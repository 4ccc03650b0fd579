//! Conservative node filtering ahead of the metapath products.
//!
//! Rules run once, in a fixed order, against degrees of the unpruned graph:
//! unusual domains, popular domains, large clients, inactive clients, rare
//! IPs. Domains with a clear malicious prior, together with the clients
//! that query them and the addresses they resolve to, are exempt from every
//! rule.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::HinGraph;
use crate::ingest::{LabelSource, Prior};

pub const DEFAULT_NAME_RULE: &str = r"^[a-z0-9_-]+(\.[a-z0-9_-]+)*$";
const MAX_NAME_LEN: usize = 253;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    /// Domains queried by more than this percentage of clients are dropped.
    pub k_d_percent: f64,
    /// Top percentage of clients by distinct domains queried to drop.
    pub k_a_percent: f64,
    /// Clients querying fewer distinct domains than this are dropped.
    pub k_c_min_domains: usize,
    pub name_rule: String,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            k_d_percent: 25.0,
            k_a_percent: 0.1,
            k_c_min_domains: 3,
            name_rule: DEFAULT_NAME_RULE.to_string(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("k_d_percent", self.k_d_percent), ("k_a_percent", self.k_a_percent)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 100], got {v}")));
            }
        }
        Regex::new(&self.name_rule)
            .map_err(|e| Error::Config(format!("name_rule: {e}")))?;
        Ok(())
    }
}

/// `ceil(percent% of n)`, tolerant of binary rounding (0.1% of 1000 is 1).
fn ceil_percent(percent: f64, n: usize) -> usize {
    let exact = percent * n as f64 / 100.0;
    (exact - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NodeCounts {
    pub clients: usize,
    pub domains: usize,
    pub ips: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RuleCounts {
    pub unusual_name: usize,
    pub single_client: usize,
    pub popular_domains: usize,
    pub large_clients: usize,
    pub inactive_clients: usize,
    pub rare_ips: usize,
}

impl RuleCounts {
    pub fn as_nodes(&self) -> NodeCounts {
        NodeCounts {
            clients: self.large_clients + self.inactive_clients,
            domains: self.unusual_name + self.single_client + self.popular_domains,
            ips: self.rare_ips,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Residuals {
    pub single_client_domains: usize,
    pub inactive_clients: usize,
    pub rare_ips: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PruneReport {
    pub original: NodeCounts,
    pub removed: RuleCounts,
    /// Survivors that no rule touched.
    pub kept: NodeCounts,
    /// Survivors that a rule matched but a malicious-label exception saved.
    pub kept_by_exception: NodeCounts,
    pub result: NodeCounts,
    pub popular_client_threshold: usize,
    pub large_client_quota: usize,
    /// Unprotected survivors violating a rule once degrees are recomputed
    /// on the pruned graph. A single pass does not chase these.
    pub residual: Residuals,
}

impl PruneReport {
    /// removed + kept + kept_by_exception == original, per node kind.
    pub fn reconciles(&self) -> bool {
        let r = self.removed.as_nodes();
        let sum = |f: fn(&NodeCounts) -> usize| f(&r) + f(&self.kept) + f(&self.kept_by_exception);
        sum(|c| c.clients) == self.original.clients
            && sum(|c| c.domains) == self.original.domains
            && sum(|c| c.ips) == self.original.ips
    }
}

#[derive(Debug, Clone)]
pub struct Pruned {
    pub graph: HinGraph,
    pub report: PruneReport,
    /// Surviving indices into the input graph, in their new order.
    pub kept_clients: Vec<usize>,
    pub kept_domains: Vec<usize>,
    pub kept_ips: Vec<usize>,
}

/// Whether a prior counts as a clear malicious label.
pub fn is_clear_malicious(prior: &Prior) -> bool {
    prior.class_id >= 1 && matches!(prior.source, LabelSource::Manual | LabelSource::Public)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fate {
    Keep,
    Removed,
    Excepted,
}

pub fn prune(graph: &HinGraph, priors: &[Option<Prior>], config: &PruneConfig) -> Result<Pruned> {
    config.validate()?;
    let reg = &graph.registry;
    let (n_c, n_d, n_ip) = (reg.n_clients(), reg.n_domains(), reg.n_ips());
    if priors.len() != n_d {
        return Err(Error::DimensionMismatch(format!(
            "{} priors for {n_d} domains",
            priors.len()
        )));
    }
    let name_rule = Regex::new(&config.name_rule)
        .map_err(|e| Error::Config(format!("name_rule: {e}")))?;

    let mut protected_domain = vec![false; n_d];
    let mut protected_client = vec![false; n_c];
    let mut protected_ip = vec![false; n_ip];
    for (d, prior) in priors.iter().enumerate() {
        if prior.as_ref().is_some_and(is_clear_malicious) {
            protected_domain[d] = true;
            for &c in graph.q.row(d).0 {
                protected_client[c] = true;
            }
            for &ip in graph.r.row(d).0 {
                protected_ip[ip] = true;
            }
        }
    }

    let domain_clients: Vec<usize> = (0..n_d).map(|d| graph.q.row_nnz(d)).collect();
    let qt = graph.q.transpose();
    let client_domains: Vec<usize> = (0..n_c).map(|c| qt.row_nnz(c)).collect();
    let rt = graph.r.transpose();
    let ip_domains: Vec<usize> = (0..n_ip).map(|ip| rt.row_nnz(ip)).collect();

    let mut removed = RuleCounts::default();
    let mut domain_fate = vec![Fate::Keep; n_d];
    let mut client_fate = vec![Fate::Keep; n_c];
    let mut ip_fate = vec![Fate::Keep; n_ip];

    let strike = |fate: &mut Fate, protected: bool, counter: &mut usize| {
        if *fate != Fate::Keep {
            return;
        }
        if protected {
            *fate = Fate::Excepted;
        } else {
            *fate = Fate::Removed;
            *counter += 1;
        }
    };

    // (1) unusual domains
    for d in 0..n_d {
        let name = reg.domains.name(d);
        if name.len() > MAX_NAME_LEN || !name_rule.is_match(name) {
            strike(&mut domain_fate[d], protected_domain[d], &mut removed.unusual_name);
        } else if domain_clients[d] == 1 {
            strike(&mut domain_fate[d], protected_domain[d], &mut removed.single_client);
        }
    }

    // (2) popular domains
    let popular_threshold = ceil_percent(config.k_d_percent, n_c);
    for d in 0..n_d {
        if domain_clients[d] > popular_threshold {
            strike(&mut domain_fate[d], protected_domain[d], &mut removed.popular_domains);
        }
    }

    // (3) large clients
    let quota = ceil_percent(config.k_a_percent, n_c);
    let mut by_activity: Vec<usize> = (0..n_c).collect();
    by_activity.sort_by(|&a, &b| client_domains[b].cmp(&client_domains[a]).then(a.cmp(&b)));
    for &c in by_activity.iter().take(quota) {
        strike(&mut client_fate[c], protected_client[c], &mut removed.large_clients);
    }

    // (4) inactive clients
    for c in 0..n_c {
        if client_domains[c] < config.k_c_min_domains {
            strike(&mut client_fate[c], protected_client[c], &mut removed.inactive_clients);
        }
    }

    // (5) rare IPs
    for ip in 0..n_ip {
        if ip_domains[ip] == 1 {
            strike(&mut ip_fate[ip], protected_ip[ip], &mut removed.rare_ips);
        }
    }

    let survivors = |fates: &[Fate]| -> Vec<usize> {
        (0..fates.len()).filter(|&i| fates[i] != Fate::Removed).collect()
    };
    let count = |fates: &[Fate], f: Fate| fates.iter().filter(|&&x| x == f).count();
    let kept_domains = survivors(&domain_fate);
    if kept_domains.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let kept_clients = survivors(&client_fate);
    let kept_ips = survivors(&ip_fate);
    let pruned = graph.restrict(&kept_clients, &kept_domains, &kept_ips);

    let residual = residuals(
        &pruned,
        &kept_domains.iter().map(|&d| protected_domain[d]).collect::<Vec<_>>(),
        &kept_clients.iter().map(|&c| protected_client[c]).collect::<Vec<_>>(),
        &kept_ips.iter().map(|&i| protected_ip[i]).collect::<Vec<_>>(),
        config,
    );

    let report = PruneReport {
        original: NodeCounts {
            clients: n_c,
            domains: n_d,
            ips: n_ip,
        },
        removed,
        kept: NodeCounts {
            clients: count(&client_fate, Fate::Keep),
            domains: count(&domain_fate, Fate::Keep),
            ips: count(&ip_fate, Fate::Keep),
        },
        kept_by_exception: NodeCounts {
            clients: count(&client_fate, Fate::Excepted),
            domains: count(&domain_fate, Fate::Excepted),
            ips: count(&ip_fate, Fate::Excepted),
        },
        result: NodeCounts {
            clients: kept_clients.len(),
            domains: kept_domains.len(),
            ips: kept_ips.len(),
        },
        popular_client_threshold: popular_threshold,
        large_client_quota: quota,
        residual,
    };
    debug_assert!(report.reconciles());
    Ok(Pruned {
        graph: pruned,
        report,
        kept_clients,
        kept_domains,
        kept_ips,
    })
}

fn residuals(
    g: &HinGraph,
    protected_domain: &[bool],
    protected_client: &[bool],
    protected_ip: &[bool],
    config: &PruneConfig,
) -> Residuals {
    let qt = g.q.transpose();
    let rt = g.r.transpose();
    Residuals {
        single_client_domains: (0..g.q.rows())
            .filter(|&d| !protected_domain[d] && g.q.row_nnz(d) == 1)
            .count(),
        inactive_clients: (0..qt.rows())
            .filter(|&c| !protected_client[c] && qt.row_nnz(c) < config.k_c_min_domains)
            .count(),
        rare_ips: (0..rt.rows())
            .filter(|&i| !protected_ip[i] && rt.row_nnz(i) <= 1)
            .count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{NodeRegistry, KMeansConfig};
    use crate::ingest::{parse_log_line, WindowBatch};

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i:03}")).collect()
    }

    /// Graph with `n_c` clients from an explicit (domain, client) list; no
    /// IPs, no segments.
    fn graph(n_c: usize, domains: &[&str], queries: &[(usize, usize)]) -> HinGraph {
        let reg = NodeRegistry {
            clients: names("c", n_c).into(),
            domains: domains.iter().map(|s| s.to_string()).collect::<Vec<_>>().into(),
            ips: Vec::<String>::new().into(),
        };
        let n_d = domains.len();
        HinGraph {
            q: crate::sparse::SparseMatrix::indicator(n_d, n_c, queries.iter().copied()).unwrap(),
            n: crate::sparse::SparseMatrix::zeros(n_c, n_c),
            r: crate::sparse::SparseMatrix::zeros(n_d, 0),
            s: crate::sparse::SparseMatrix::zeros(n_d, n_d),
            c: crate::sparse::SparseMatrix::zeros(n_d, n_d),
            d: crate::sparse::SparseMatrix::zeros(0, 0),
            registry: reg,
        }
    }

    fn malicious() -> Option<Prior> {
        Some(Prior {
            class_id: 1,
            source: LabelSource::Manual,
        })
    }

    fn lenient() -> PruneConfig {
        PruneConfig {
            k_d_percent: 100.0,
            k_a_percent: 0.0,
            k_c_min_domains: 0,
            ..PruneConfig::default()
        }
    }

    #[test]
    fn ceil_percent_is_rounding_safe() {
        assert_eq!(ceil_percent(0.1, 1000), 1);
        assert_eq!(ceil_percent(0.1, 1001), 2);
        assert_eq!(ceil_percent(25.0, 100), 25);
        assert_eq!(ceil_percent(0.1, 500), 1);
    }

    #[test]
    fn popular_boundary_is_strict() {
        // 100 clients; domain 0 queried by 26, domain 1 by 25
        let mut q = Vec::new();
        q.extend((0..26).map(|c| (0, c)));
        q.extend((0..25).map(|c| (1, c)));
        q.extend((0..100).map(|c| (2, c % 2)));
        let g = graph(100, &["a.test", "b.test", "c.test"], &q);
        let cfg = PruneConfig {
            k_d_percent: 25.0,
            ..lenient()
        };
        let out = prune(&g, &[None, None, None], &cfg).unwrap();
        assert_eq!(out.report.removed.popular_domains, 1);
        assert_eq!(out.graph.registry.domains.names(), &["b.test", "c.test"]);
    }

    #[test]
    fn single_client_domain_removed() {
        let g = graph(3, &["a.test", "b.test"], &[(0, 0), (1, 0), (1, 1)]);
        let out = prune(&g, &[None, None], &lenient()).unwrap();
        assert_eq!(out.report.removed.single_client, 1);
        assert_eq!(out.graph.registry.domains.names(), &["b.test"]);
    }

    #[test]
    fn labeled_malicious_single_client_domain_kept_with_client() {
        // client 2 queries only the malicious domain: inactive, but exempt
        let g = graph(3, &["a.test", "b.test"], &[(0, 2), (1, 0), (1, 1)]);
        let cfg = PruneConfig {
            k_c_min_domains: 3,
            ..lenient()
        };
        let out = prune(&g, &[malicious(), None], &cfg).unwrap();
        assert_eq!(out.graph.registry.domains.names(), &["a.test", "b.test"]);
        assert!(out.graph.registry.clients.get("c002").is_some());
        assert_eq!(out.report.kept_by_exception.domains, 1);
        assert!(out.report.kept_by_exception.clients >= 1);
        assert!(out.report.reconciles());
    }

    #[test]
    fn active_clients_untouched() {
        let doms = ["a.t", "b.t", "c.t"];
        let q: Vec<_> = (0..3).flat_map(|d| (0..4).map(move |c| (d, c))).collect();
        let cfg = PruneConfig {
            k_c_min_domains: 3,
            ..lenient()
        };
        let g = graph(4, &doms, &q);
        let out = prune(&g, &[None, None, None], &cfg).unwrap();
        assert_eq!(out.graph.registry.n_clients(), 4);
    }

    #[test]
    fn large_client_by_activity_rank() {
        // 10 domains; client 0 queries 9 of them, others 3 each
        let doms: Vec<String> = names("d", 10).into_iter().map(|d| format!("{d}.test")).collect();
        let refs: Vec<&str> = doms.iter().map(String::as_str).collect();
        let mut q: Vec<(usize, usize)> = (0..9).map(|d| (d, 0)).collect();
        for c in 1..10 {
            for k in 0..3 {
                q.push(((c + k) % 10, c));
            }
        }
        let g = graph(10, &refs, &q);
        let cfg = PruneConfig {
            k_a_percent: 10.0,
            k_d_percent: 100.0,
            k_c_min_domains: 3,
            ..PruneConfig::default()
        };
        // rank-by-activity oracle
        let mut activity: Vec<(usize, usize)> =
            (0..10).map(|c| (q.iter().filter(|&&(_, cc)| cc == c).count(), c)).collect();
        activity.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let out = prune(&g, &vec![None; 10], &cfg).unwrap();
        assert_eq!(out.report.removed.large_clients, 1);
        assert!(out.graph.registry.clients.get(&format!("c{:03}", activity[0].1)).is_none());
        assert_eq!(out.graph.registry.n_clients(), 9);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = graph(2, &["a.test"], &[(0, 0)]);
        assert!(matches!(prune(&g, &[None], &lenient()), Err(Error::EmptyGraph)));
    }

    #[test]
    fn unusual_name_rule() {
        let g = graph(
            2,
            &["icmsb2018(at)163.com", "ok.test"],
            &[(0, 0), (0, 1), (1, 0), (1, 1)],
        );
        let out = prune(&g, &[None, None], &lenient()).unwrap();
        assert_eq!(out.report.removed.unusual_name, 1);
        assert_eq!(out.graph.registry.domains.names(), &["ok.test"]);
    }

    #[test]
    fn pruned_matrices_stay_consistent() {
        let lines = [
            "1\tc1\ta.test\tA\t1.1.1.1",
            "1\tc2\ta.test\tA\t1.1.1.2",
            "1\tc1\tb.test\tA\t1.1.1.2",
            "1\tc2\tb.test\tCNAME\ta.test",
            "1\tc3\tb.test\tA\t1.1.1.3",
            "1\tc3\tsolo.test\tA\t1.1.1.9",
        ];
        let batch = WindowBatch {
            window_start: 0,
            window_end: 10,
            logs: lines.iter().map(|l| parse_log_line(l).unwrap()).collect(),
            pdns: vec![],
        };
        let seg = [("c1", "x"), ("c2", "x"), ("c3", "x")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let (g, _) = HinGraph::build(&batch, &seg, &KMeansConfig::new(2, 0)).unwrap();
        let priors = vec![None; g.n_domains()];
        let out = prune(&g, &priors, &lenient()).unwrap();
        out.graph.check_invariants().unwrap();
        assert!(out.graph.registry.domains.get("solo.test").is_none());
        assert!(out.report.reconciles());
    }
}
