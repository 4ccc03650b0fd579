//! Commuting matrices of the six domain-to-domain metapaths and their
//! PathSim normalization, on a hand-made graph.

use dns_hin::hin::{HinGraph, NodeRegistry};
use dns_hin::metapath::{commuting, pathsim, MetapathId};
use dns_hin::sparse::SparseMatrix;

fn main() -> dns_hin::Result<()> {
    // three domains, three clients, two IPs; a.test and b.test share
    // clients and an IP, c.test stands apart
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let graph = HinGraph {
        registry: NodeRegistry {
            clients: names(&["c0", "c1", "c2"]).into(),
            domains: names(&["a.test", "b.test", "c.test"]).into(),
            ips: names(&["10.0.0.1", "10.0.0.2"]).into(),
        },
        q: SparseMatrix::indicator(3, 3, [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)])?,
        n: SparseMatrix::indicator(3, 3, [(0, 1), (1, 0)])?,
        r: SparseMatrix::indicator(3, 2, [(0, 0), (1, 0), (2, 1)])?,
        s: SparseMatrix::indicator(3, 3, [(0, 1), (1, 0)])?,
        c: SparseMatrix::zeros(3, 3),
        d: SparseMatrix::zeros(2, 2),
    };
    for pid in MetapathId::ALL {
        let m = commuting(&graph, pid)?;
        let sim = pathsim(&m);
        println!("{pid} = {}", pid.formula());
        for (row, srow) in m.to_dense().iter().zip(sim.matrix.to_dense()) {
            println!("  {row:?}  ->  {srow:?}");
        }
    }
    Ok(())
}
