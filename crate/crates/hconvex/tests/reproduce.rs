use hconvex::Parallel;
use hconvex_core::corpus::{reproduce, ReproduceConfig, IDS};

/// Runs every fact of every corpus entry at the default configuration.
#[test]
fn every_entry_reproduces() {
    let exec = Parallel::new(None).unwrap();
    for id in IDS {
        let report = reproduce(id, &ReproduceConfig::default(), &exec).unwrap();
        let failed: Vec<&str> = report.facts.iter().filter(|f| !f.passed && !f.observational).map(|f| f.name.as_str()).collect();
        for f in &report.facts {
            println!("{id:24} {:28} {:5} {:+.4e} (expected {})", f.name, f.passed, f.observed, f.expected);
        }
        if id == "failure" {
            // The published midpoint inequality does not hold at t = 0.1; it
            // does at t = 0.09, which is checked as its own fact.
            assert_eq!(failed, ["midpoint_defect"]);
        } else {
            assert!(failed.is_empty(), "{id}: {failed:?}");
        }
    }
}
