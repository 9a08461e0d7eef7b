use std::time::Instant;

use chainmail::checker::{check_run, CheckOptions};
use chainmail::corpus::exemplars;

#[test]
fn exemplars_meet_expected_verdicts() {
    let mut bad = Vec::new();
    for ex in exemplars() {
        let p = ex.parse().unwrap_or_else(|e| panic!("{}: {e}", ex.name));
        let t = Instant::now();
        let (v, trace) = check_run(&p.internal, &p.external, p.driver, &p.spec, &CheckOptions::default()).unwrap();
        println!(
            "{:<22} {:?} ({} positions, {}, {:.2?}) witnesses {:?}",
            ex.name,
            v.status,
            trace.len(),
            v.run.end,
            t.elapsed(),
            v.witnesses.iter().map(|w| (w.position, &w.assertion)).collect::<Vec<_>>()
        );
        if v.status != ex.expected {
            bad.push(ex.name);
        }
    }
    assert!(bad.is_empty(), "unexpected verdicts: {bad:?}");
}
