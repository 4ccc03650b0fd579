//! Solid verdicts feed rolling local lists that expire after seven days.

use dns_hin::classify::{LocalListStore, Verdict};

fn verdict(class_id: usize, confidence: f64) -> Verdict {
    Verdict {
        class_id,
        confidence,
        solid: confidence >= 0.2,
    }
}

fn main() {
    let day = 24 * 3600;
    let mut store = LocalListStore::default();
    store.update([("a.test", &verdict(1, 0.5)), ("b.test", &verdict(0, 0.05))], day);
    println!("day 1: {} entries (weak verdict skipped)", store.len());
    store.update([("a.test", &verdict(0, 0.4)), ("c.test", &verdict(0, 0.3))], 2 * day);
    println!("day 2: a.test now {:?}", store.get("a.test").map(|e| e.class_id));
    print!("{}", store.to_csv());
    store.update(std::iter::empty(), 10 * day);
    println!("day 10: {} entries after purge", store.len());
}
