#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{poem, services};
use phraselette::session::{Actor, HistoryEntry, Session, SessionError, SCHEMA_VERSION};
use phraselette_core::constraints::{Constraint, ConstraintSpec, IntRange};
use phraselette_core::model::{CharRange, Document, WellConfig, WellId, WellKind};
use phraselette_core::orchestrator::{Orchestrator, RunTarget};
use phraselette_core::wells::WellRegistry;
use proptest::prelude::*;
use serde_json::json;

fn round_trip(s: &Session) -> Session {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    s.save(&path).unwrap();
    Session::load(&path).unwrap()
}

fn populated() -> Session {
    let (mut doc, inlet) = poem();
    doc.create_inlet(CharRange::new(40, 49)).unwrap();
    let configs = vec![
        WellConfig::new("words", WellKind::WORDS)
            .with_param("words_min", json!(1))
            .with_param("words_max", json!(3))
            .with_param("syllables_min", json!(2))
            .with_param("pos", json!("VERB ADP"))
            .with_param("pos_mode", json!("startsWith")),
        WellConfig::new("thesaurus", WellKind::THESAURUS).with_description("a romance novel's lexicon"),
        WellConfig::new("context", WellKind::CONTEXT)
            .with_param("band_max", json!(-2.5))
            .with_param("result_cap", json!(20)),
    ];
    let orch = Orchestrator::new(Arc::new(WellRegistry::builtin()), services());
    let job = orch.run_wells(&mut doc, &inlet, &configs, RunTarget::All, Some(11)).unwrap();
    let snap = orch.wait(&job, Duration::from_secs(60)).unwrap();
    assert!(snap.complete);
    let mut constraints = snap.constraints.clone();
    constraints.push(
        Constraint::new(
            "extra:words",
            WellId::from("words"),
            ConstraintSpec::WordCount(IntRange::new(2, 2).unwrap()),
        )
        .unwrap(),
    );
    assert_eq!(constraints.len(), 5);

    let mut s = Session::new(doc);
    s.well_configs = configs;
    s.constraints = constraints;
    s.history.push(HistoryEntry {
        inlet_id: inlet.clone(),
        job_id: job.to_string(),
        generation: snap.generation,
        cursor: snap.cursor,
        rephrasings: snap.rephrasings.clone(),
    });
    s.record(Actor::User, "createInlet", json!({"inletId": inlet}));
    s.record(Actor::User, "runWells", json!({"jobId": job.to_string()}));
    s.record(Actor::System, "poolSnapshot", json!({"cursor": snap.cursor}));
    s
}

#[test]
fn populated_session_round_trips() {
    let s = populated();
    assert_eq!(s.document.inlets().len(), 2);
    assert!(!s.history[0].rephrasings.is_empty());
    assert!(s.history[0].rephrasings.iter().any(|r| r.total_log_prob.is_some()));
    let back = round_trip(&s);
    assert_eq!(back, s);
    assert_eq!(back.to_json(), s.to_json());
}

#[test]
fn empty_document_round_trips() {
    let s = Session::new(Document::new("empty", ""));
    assert_eq!(round_trip(&s), s);
}

#[test]
fn schema_version_is_checked() {
    let good = serde_json::to_value(Session::new(Document::new("d", "text"))).unwrap();
    assert_eq!(good["schema_version"], SCHEMA_VERSION);
    for bad in [json!(SCHEMA_VERSION + 1), json!("1"), json!(null), json!(0)] {
        let mut v = good.clone();
        v["schema_version"] = bad;
        assert!(matches!(Session::from_value(v), Err(SessionError::SchemaVersionMismatch { .. })));
    }
    let mut v = good.clone();
    v.as_object_mut().unwrap().remove("schema_version");
    assert!(matches!(
        Session::from_value(v),
        Err(SessionError::SchemaVersionMismatch { found: None })
    ));
    assert!(Session::from_value(good).is_ok());
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        Session::load(&dir.path().join("absent.json")),
        Err(SessionError::Io { .. })
    ));
}

fn text() -> impl Strategy<Value = String> {
    "[a-z \\n\u{e9}\u{1f33f}]{0,40}"
}

fn well() -> impl Strategy<Value = WellConfig> {
    let kinds = vec![WellKind::WORDS, WellKind::THESAURUS, WellKind::READER, WellKind::CONTEXT, WellKind::SOUND];
    (
        "[a-z]{1,6}",
        proptest::sample::select(kinds),
        proptest::option::of("[a-z ']{0,20}"),
        proptest::collection::btree_map("[a-z_]{1,8}", -1e6f64..1e6, 0..4),
        any::<bool>(),
    )
        .prop_map(|(id, kind, desc, params, active)| {
            let mut cfg = WellConfig::new(id.as_str(), kind);
            if let Some(d) = desc {
                cfg = cfg.with_description(d);
            }
            for (k, v) in params {
                cfg = cfg.with_param(&k, json!(v));
            }
            cfg.active = active;
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn load_after_save_is_identity(
        body in text(),
        spans in proptest::collection::vec((0usize..40, 1usize..6), 0..4),
        wells in proptest::collection::vec(well(), 0..4),
        events in proptest::collection::vec(("[a-zA-Z]{1,12}", any::<bool>(), proptest::option::of(any::<i64>())), 0..8),
    ) {
        let mut doc = Document::new("doc", &body);
        for (start, len) in spans {
            // overlapping or out-of-range spans are simply refused
            let _ = doc.create_inlet(CharRange::new(start, start + len));
        }
        let mut s = Session::new(doc);
        s.well_configs = wells;
        for (kind, user, detail) in events {
            let actor = if user { Actor::User } else { Actor::System };
            s.record(actor, &kind, detail.map_or(serde_json::Value::Null, |d| json!({"n": d})));
        }
        prop_assert_eq!(round_trip(&s), s);
    }
}
