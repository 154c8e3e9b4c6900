use hconvex_core::corpus::{self, corpus_list, reference_envelope_value, reproduce, Expect, ReproduceConfig, IDS};
use hconvex_core::envelope::Sequential;
use hconvex_core::fields::symmetry_defect;
use hconvex_core::{Error, GridBox, Point};

/// Entries whose facts do not need a full envelope iteration.
const CHEAP: [&str; 7] = [
    "failure",
    "no_symmetry",
    "no_symmetry2",
    "hconvex_sol",
    "euclid_convex_sol",
    "strong_concavity",
    "hconvex_right_example",
];

#[test]
fn every_id_has_an_entry_with_facts() {
    assert_eq!(corpus_list().len(), IDS.len());
    for id in IDS {
        let e = corpus::entry(id).unwrap();
        assert_eq!(e.id, id);
        assert!(!e.facts.is_empty(), "{id}");
        assert!(!e.description.is_empty());
    }
    assert!(matches!(corpus::entry("nope"), Err(Error::UnknownCorpusId)));
    assert!(matches!(corpus::field("nope"), Err(Error::UnknownCorpusId)));
}

#[test]
fn symmetry_flags_match_the_fields() {
    for id in IDS {
        let e = corpus::entry(id).unwrap();
        let d = symmetry_defect(&*e.field, GridBox::cube(2.0), 500, 5);
        assert_eq!(e.symmetric, d == 0.0, "{id}: defect {d}");
    }
}

#[test]
fn cheap_entries_reproduce() {
    for id in CHEAP {
        let e = corpus::entry(id).unwrap();
        assert!(e.facts.iter().all(|f| !matches!(
            f.expect,
            Expect::Iterations { .. } | Expect::PassValues { .. } | Expect::ReferenceError { .. } | Expect::Obstacle { .. }
        )));
        let report = reproduce(id, &ReproduceConfig::default(), &Sequential).unwrap();
        assert_eq!(report.facts.len(), e.facts.len());
        let failed: Vec<&str> = report.facts.iter().filter(|f| !f.passed && !f.observational).map(|f| f.name.as_str()).collect();
        if id == "failure" {
            // At t = 0.1 the computed defect is positive; see the README.
            assert_eq!(failed, ["midpoint_defect"]);
            assert!(!report.passed);
        } else {
            assert!(failed.is_empty(), "{id}: {failed:?}");
            assert!(report.passed);
        }
    }
}

#[test]
fn reproduce_is_deterministic() {
    for id in ["no_symmetry", "hconvex_right_example"] {
        let cfg = ReproduceConfig::default();
        let a = reproduce(id, &cfg, &Sequential).unwrap();
        let b = reproduce(id, &cfg, &Sequential).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn reference_envelopes() {
    assert_eq!(reference_envelope_value("one_step", Point::new(0.5, 0.0, 0.0)).unwrap(), 0.0);
    assert_eq!(reference_envelope_value("one_step", Point::new(2.0, 0.0, 0.0)).unwrap(), 9.0);
    assert_eq!(reference_envelope_value("two_step", Point::new(5.0, 0.0, 0.9)).unwrap(), 0.0);
    assert_eq!(reference_envelope_value("two_step", Point::new(0.0, 0.0, 2.0)).unwrap(), 9.0);
    assert!(matches!(reference_envelope_value("failure", Point::ORIGIN), Err(Error::NoReference(_))));
}

#[test]
fn config_round_trips_through_json() {
    let cfg = ReproduceConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<ReproduceConfig>(&text).unwrap(), cfg);
    let partial: ReproduceConfig = serde_json::from_str(r#"{"seed": 7}"#).unwrap();
    assert_eq!(partial.seed, 7);
    assert_eq!(partial.envelope, cfg.envelope);
}
