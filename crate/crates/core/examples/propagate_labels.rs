//! Transductive label propagation on a small similarity graph, checked
//! against the closed-form solution, then turned into verdicts.

use dns_hin::classify::{closed_form, normalize, propagate, verdicts, ClassifierConfig, LabelMatrix};
use dns_hin::sparse::SparseMatrix;

fn main() -> dns_hin::Result<()> {
    // two clusters {0,1,2} and {3,4,5} with one weak bridge 2-3
    let mut t = Vec::new();
    for (a, b, w) in [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 0.1)] {
        t.push((a, b, w));
        t.push((b, a, w));
    }
    let m = SparseMatrix::from_triplets(6, 6, t)?;
    let y = LabelMatrix::from_classes(&[Some(0), None, None, None, None, Some(1)], 2)?;
    let config = ClassifierConfig::default();
    let s = normalize(&m);
    let f = propagate(&s, &y, &config)?;
    let exact = closed_form(&s, &y, &config)?;
    println!("{} iterations, converged {}, max diff to closed form {:.2e}", f.iterations_used, f.converged, f.max_abs_diff(&exact));
    for (i, v) in verdicts(&f, config.theta).iter().enumerate() {
        let row = f.row(i);
        println!(
            "node {i}: F = ({:.4}, {:.4}) -> {} confidence {:.4}{}",
            row[0],
            row[1],
            if v.is_malicious() { "malicious" } else { "benign" },
            v.confidence,
            if v.solid { " (solid)" } else { "" }
        );
    }
    Ok(())
}
