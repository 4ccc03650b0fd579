//! Detection metrics, ROC and the support-weighted multi-class breakdown.

use dns_hin::classify::evaluate;

fn main() -> dns_hin::Result<()> {
    let truth = [0, 0, 0, 1, 1, 2, 2, 0];
    let predicted = [0, 0, 1, 1, 1, 2, 0, 0];
    let scores = [-0.8, -0.5, 0.1, 0.6, 0.7, 0.9, -0.1, -0.3];
    let m = evaluate(&predicted, Some(&scores), &truth, 3)?;
    println!(
        "accuracy {:.3} precision {:.3} recall {:.3} f1 {:.3} auc {:?}",
        m.accuracy, m.precision, m.recall, m.f1, m.auc
    );
    for p in &m.roc {
        println!("  fpr {:.3} tpr {:.3} at {}", p.fpr, p.tpr, p.threshold);
    }
    let mc = m.multiclass.expect("three classes");
    println!("confusion {:?}, weighted f1 {:.3}", mc.confusion, mc.weighted_f1);
    Ok(())
}
