#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::{services, POEM};
use phraselette::api::{router, session_path, AppState};
use phraselette::session::Session;
use phraselette_core::model::WellConfig;
use phraselette_core::orchestrator::{Orchestrator, RunTarget};
use phraselette_core::wells::{Presets, WellRegistry, WellServices};
use phraselette_core::Execution;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app_with(services: WellServices, dir: Option<&Path>) -> Router {
    let orch = Orchestrator::new(Arc::new(WellRegistry::builtin()), services);
    let state = AppState::new(orch, Presets::bundled(), dir.map(Path::to_owned)).unwrap();
    router(Arc::new(state))
}

fn app() -> Router {
    app_with(services(), None)
}

async fn raw(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = raw(app, method, uri, body).await;
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn poll(app: &Router, job: &str) -> Value {
    for _ in 0..600 {
        let (status, v) = call(app, Method::GET, &format!("/jobs/{job}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if v["complete"] == json!(true) {
            return v;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    panic!("job {job} never completed");
}

fn well_bodies() -> Vec<Value> {
    vec![
        json!({"wellId": "thesaurus", "kind": "thesaurus", "promptDescription": "a romance novel's lexicon"}),
        json!({"wellId": "context", "kind": "context"}),
        json!({"wellId": "words", "kind": "words", "parameters": {"pos": "VERB ADP", "pos_mode": "exact"}}),
    ]
}

/// Document "poem" with an inlet on "glazed with" and the three wells.
async fn setup(app: &Router) -> String {
    let (s, _) = call(app, Method::POST, "/documents", Some(json!({"id": "poem", "text": POEM}))).await;
    assert_eq!(s, StatusCode::CREATED);
    for w in well_bodies() {
        let (s, v) = call(app, Method::POST, "/documents/poem/wells", Some(w)).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
    }
    let (s, inlet) = call(app, Method::POST, "/documents/poem/inlets", Some(json!({"start": 10, "end": 21}))).await;
    assert_eq!(s, StatusCode::CREATED);
    inlet["id"].as_str().unwrap().to_owned()
}

async fn run(app: &Router, inlet: &str, body: Value) -> String {
    let (s, v) = call(app, Method::POST, &format!("/documents/poem/inlets/{inlet}/run"), Some(body)).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    v["jobId"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn api_pool_matches_the_orchestrator() {
    let app = app();
    let inlet = setup(&app).await;
    let job = run(&app, &inlet, json!({"all": true, "seed": 42})).await;
    let snap = poll(&app, &job).await;

    let direct = Orchestrator::new(Arc::new(WellRegistry::builtin()), services());
    let (mut doc, id) = common::poem();
    let configs: Vec<WellConfig> = well_bodies()
        .into_iter()
        .map(|b| {
            let mut c = WellConfig::new(b["wellId"].as_str().unwrap(), b["kind"].as_str().unwrap());
            c.prompt_description = b["promptDescription"].as_str().map(str::to_owned);
            if let Some(p) = b["parameters"].as_object() {
                c.parameters = p.clone().into_iter().collect();
            }
            c
        })
        .collect();
    let job = direct.run_wells(&mut doc, &id, &configs, RunTarget::All, Some(42)).unwrap();
    let expected = direct.wait(&job, Duration::from_secs(60)).unwrap();
    assert_eq!(snap["rephrasings"], serde_json::to_value(&expected.rephrasings).unwrap());
    assert_eq!(snap["constraints"], serde_json::to_value(&expected.constraints).unwrap());
    assert_eq!(snap["wells"]["thesaurus"]["state"], "done");
}

#[tokio::test]
async fn overlapping_inlet_is_a_400_with_its_code() {
    let app = app();
    setup(&app).await;
    let (s, v) = call(&app, Method::POST, "/documents/poem/inlets", Some(json!({"start": 15, "end": 25}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "OverlappingInlet");
    for (start, end, code) in [(21, 10, "EmptyRange"), (40, 400, "OutOfBounds")] {
        let (s, v) = call(&app, Method::POST, "/documents/poem/inlets", Some(json!({"start": start, "end": end}))).await;
        assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, code));
    }
}

#[tokio::test]
async fn accept_places_text_and_stale_accept_conflicts() {
    let app = app();
    let inlet = setup(&app).await;
    let job = run(&app, &inlet, json!({"seed": 1})).await;
    let snap = poll(&app, &job).await;
    let pick = snap["rephrasings"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["text"] == "plasticized onto")
        .unwrap()
        .clone();
    let uri = format!("/inlets/{inlet}/accept");
    let (s, doc) = call(&app, Method::POST, &uri, Some(json!({"rephrasingId": pick["id"]}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(doc["text"].as_str().unwrap().starts_with("red wheel plasticized onto rain water"));
    let (s, v) = call(&app, Method::POST, &uri, Some(json!({"rephrasingId": pick["id"]}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "StaleGeneration");
    let (s, v) = call(&app, Method::POST, &uri, Some(json!({"rephrasingId": "r-nope"}))).await;
    assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::NOT_FOUND, "UnknownRephrasing"));
}

#[tokio::test]
async fn an_edit_elsewhere_makes_pending_suggestions_stale() {
    let app = app();
    let inlet = setup(&app).await;
    let job = run(&app, &inlet, json!({"seed": 1})).await;
    let snap = poll(&app, &job).await;
    let id = snap["rephrasings"][0]["id"].clone();
    let (s, doc) = call(&app, Method::PATCH, "/documents/poem", Some(json!({"start": 0, "end": 3, "text": "blue"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(doc["inlets"][0]["start"], 11);
    let (s, _) = call(&app, Method::POST, &format!("/inlets/{inlet}/accept"), Some(json!({"rephrasingId": id}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    setup(&app).await;
    let cases = [
        (Method::GET, "/documents/nope", None),
        (Method::PATCH, "/documents/nope", Some(json!({"start": 0, "end": 0, "text": "x"}))),
        (Method::POST, "/documents/nope/inlets", Some(json!({"start": 0, "end": 1}))),
        (Method::POST, "/documents/nope/wells", Some(json!({"kind": "context"}))),
        (Method::DELETE, "/inlets/nope", None),
        (Method::POST, "/inlets/nope/accept", Some(json!({"rephrasingId": "x"}))),
        (Method::PATCH, "/wells/nope", Some(json!({"active": false}))),
        (Method::GET, "/jobs/job-999", None),
        (Method::GET, "/sessions/nope", None),
        (Method::POST, "/documents/poem/inlets/nope/run", Some(json!({}))),
    ];
    for (m, uri, body) in cases {
        let (s, v) = call(&app, m.clone(), uri, body).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{m} {uri}: {v}");
        assert!(v["code"].is_string());
    }
}

#[tokio::test]
async fn validation_errors_are_400() {
    let app = app();
    let inlet = setup(&app).await;
    let cases = [
        ("/documents/poem/wells", json!({"kind": "thesaurus"}), "InvalidWellConfig"),
        ("/documents/poem/wells", json!({"kind": "oracle"}), "InvalidWellConfig"),
        ("/documents/poem/wells", json!({"kind": "context", "parameters": {"beam_width": "wide"}}), "InvalidWellConfig"),
        ("/documents/poem/wells", json!({"wellId": "context", "kind": "context"}), "DuplicateId"),
        ("/documents/poem/wells", json!({"wellId": "../x", "kind": "context"}), "InvalidId"),
        ("/documents/poem/wells", json!({"kind": 3}), "InvalidBody"),
        ("/documents", json!({"id": "poem", "text": "again"}), "DuplicateId"),
        ("/documents/poem/inlets", json!({"start": 0, "end": 3, "activeWellIds": ["ghost"]}), "UnknownWell"),
    ];
    for (uri, body, code) in cases {
        let (s, v) = call(&app, Method::POST, uri, Some(body.clone())).await;
        assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, code), "{body}");
    }
    let run_uri = format!("/documents/poem/inlets/{inlet}/run");
    let (s, v) = call(&app, Method::POST, &run_uri, Some(json!({"rerun": "ghost"}))).await;
    assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "InactiveWell"));
    let (s, _) = call(&app, Method::POST, &run_uri, Some(json!({"rerun": "context", "all": true}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn single_well_rerun_keeps_job_and_generation() {
    let app = app();
    let inlet = setup(&app).await;
    let uri = format!("/documents/poem/inlets/{inlet}/run");
    let (_, first) = call(&app, Method::POST, &uri, Some(json!({"seed": 3}))).await;
    poll(&app, first["jobId"].as_str().unwrap()).await;
    let (s, again) = call(&app, Method::POST, &uri, Some(json!({"rerun": "thesaurus", "seed": 4}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    assert_eq!(again, first);
    let snap = poll(&app, first["jobId"].as_str().unwrap()).await;
    assert_eq!(snap["cursor"], 4);
}

#[tokio::test]
async fn run_can_select_active_wells() {
    let app = app();
    let inlet = setup(&app).await;
    let job = run(&app, &inlet, json!({"wellIds": ["thesaurus"]})).await;
    let snap = poll(&app, &job).await;
    let wells: Vec<&String> = snap["wells"].as_object().unwrap().keys().collect();
    // words wells always take part
    assert_eq!(wells, ["thesaurus", "words"]);
    let (_, doc) = call(&app, Method::GET, "/documents/poem", None).await;
    assert_eq!(doc["inlets"][0]["activeWellIds"], json!(["thesaurus"]));
}

#[tokio::test]
async fn backend_outage_is_reported_per_well() {
    let mut s = services();
    s.instruct = None;
    let app = app_with(s, None);
    let inlet = setup(&app).await;
    let snap = poll(&app, &run(&app, &inlet, json!({})).await).await;
    assert_eq!(snap["wells"]["context"]["state"], "done");
    assert_eq!(snap["wells"]["thesaurus"]["state"], "failed");
    assert_eq!(snap["wells"]["thesaurus"]["backend"], true);
    assert!(!snap["rephrasings"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn patch_well_merges_parameters() {
    let app = app();
    setup(&app).await;
    let (_, before) = call(&app, Method::GET, "/documents/poem", None).await;
    let patch = json!({"promptDescription": "Shakespeare's lexicon", "parameters": {"max_items": 5}});
    let (s, w) = call(&app, Method::PATCH, "/wells/thesaurus", Some(patch)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(w["promptDescription"], "Shakespeare's lexicon");
    assert_eq!(w["parameters"]["max_items"], 5);
    let (_, w) = call(&app, Method::PATCH, "/wells/thesaurus", Some(json!({"parameters": {"max_items": null}}))).await;
    assert!(w["parameters"].as_object().unwrap().is_empty());
    let (s, _) = call(&app, Method::PATCH, "/wells/thesaurus", Some(json!({"promptDescription": null}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "thesaurus needs a description");
    let (_, after) = call(&app, Method::GET, "/documents/poem", None).await;
    assert_eq!(after["revision"].as_u64().unwrap(), before["revision"].as_u64().unwrap() + 2);
}

#[tokio::test]
async fn presets_list_kinds_and_descriptions() {
    let (s, v) = call(&app(), Method::GET, "/wells/presets", None).await;
    assert_eq!(s, StatusCode::OK);
    let kinds: Vec<&str> = v["descriptors"].as_array().unwrap().iter().map(|d| d["kind"].as_str().unwrap()).collect();
    for k in ["context", "dictionary", "reader", "sound", "thesaurus", "words"] {
        assert!(kinds.contains(&k), "{k}");
    }
    assert!(v["presets"]["thesaurus"]
        .as_array()
        .unwrap()
        .contains(&json!("a romance novel's lexicon")));
}

#[tokio::test]
async fn every_mutation_is_logged_once_and_bumps_the_revision() {
    let app = app();
    let mut revision = 0;
    let mut expect = Vec::new();
    let mut step = |kind: &str, rev: u64, bumps: bool| {
        expect.push(kind.to_owned());
        if bumps {
            assert!(rev > revision, "{kind} did not bump the revision");
        }
        revision = rev;
    };
    let (_, d) = call(&app, Method::POST, "/documents", Some(json!({"id": "poem", "text": POEM}))).await;
    step("createDocument", d["revision"].as_u64().unwrap(), false);
    let rev = |app: Router| async move { call(&app, Method::GET, "/documents/poem", None).await.1["revision"].as_u64().unwrap() };
    for w in well_bodies() {
        call(&app, Method::POST, "/documents/poem/wells", Some(w)).await;
        step("addWell", rev(app.clone()).await, true);
    }
    let (_, inlet) = call(&app, Method::POST, "/documents/poem/inlets", Some(json!({"start": 10, "end": 21}))).await;
    step("createInlet", rev(app.clone()).await, true);
    let inlet = inlet["id"].as_str().unwrap().to_owned();
    call(&app, Method::PATCH, "/wells/context", Some(json!({"parameters": {"result_cap": 20}}))).await;
    step("updateWell", rev(app.clone()).await, true);
    let job = run(&app, &inlet, json!({"seed": 9})).await;
    step("runWells", rev(app.clone()).await, true);
    let snap = poll(&app, &job).await;
    poll(&app, &job).await;
    let id = snap["rephrasings"][0]["id"].clone();
    call(&app, Method::POST, &format!("/inlets/{inlet}/accept"), Some(json!({"rephrasingId": id}))).await;
    step("accept", rev(app.clone()).await, true);
    call(&app, Method::PATCH, "/documents/poem", Some(json!({"start": 0, "end": 0, "text": "a "}))).await;
    step("editText", rev(app.clone()).await, true);
    call(&app, Method::DELETE, &format!("/inlets/{inlet}"), None).await;
    step("deleteInlet", rev(app.clone()).await, true);

    let (_, session) = call(&app, Method::GET, "/sessions/poem", None).await;
    let log = session["event_log"].as_array().unwrap();
    let user: Vec<&str> = log
        .iter()
        .filter(|e| e["actor"] == "user")
        .map(|e| e["kind"].as_str().unwrap())
        .collect();
    assert_eq!(user, expect);
    let system: Vec<&str> = log.iter().filter(|e| e["actor"] == "system").map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(system, ["poolSnapshot"], "repeated polls record one snapshot");
    let seqs: Vec<u64> = log.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (1..=log.len() as u64).collect::<Vec<_>>());
    assert_eq!(session["history"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn sessions_persist_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(services(), Some(dir.path()));
    let inlet = setup(&app).await;
    let job = run(&app, &inlet, json!({"seed": 5})).await;
    let snap = poll(&app, &job).await;
    let (_, session) = call(&app, Method::GET, "/sessions/poem", None).await;
    let on_disk = Session::load(&session_path(dir.path(), "poem")).unwrap();
    assert_eq!(serde_json::to_value(&on_disk).unwrap(), session);

    // a restarted server picks the session up and can still accept from history
    let restarted = app_with(services(), Some(dir.path()));
    let (s, doc) = call(&restarted, Method::GET, "/documents/poem", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(doc, session["document"]);
    let id = snap["rephrasings"][0]["id"].clone();
    let (s, _) = call(&restarted, Method::POST, &format!("/inlets/{inlet}/accept"), Some(json!({"rephrasingId": id}))).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn put_session_installs_and_checks_the_schema() {
    let app = app();
    setup(&app).await;
    let (_, mut session) = call(&app, Method::GET, "/sessions/poem", None).await;
    session["document"]["id"] = json!("copy");
    for inlet in session["document"]["inlets"].as_array_mut().unwrap() {
        inlet["id"] = json!("copy-i1");
    }
    for w in session["well_configs"].as_array_mut().unwrap() {
        let id = format!("copy-{}", w["wellId"].as_str().unwrap());
        w["wellId"] = json!(id);
    }
    let (s, put) = call(&app, Method::PUT, "/sessions/copy", Some(session.clone())).await;
    assert_eq!(s, StatusCode::OK, "{put}");
    assert_eq!(put["event_log"].as_array().unwrap().last().unwrap()["kind"], "loadSession");
    let (s, _) = call(&app, Method::POST, "/documents/copy/inlets/copy-i1/run", Some(json!({}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);

    let mut wrong = session.clone();
    wrong["schema_version"] = json!(2);
    let (s, v) = call(&app, Method::PUT, "/sessions/copy", Some(wrong)).await;
    assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "SchemaVersionMismatch"));
    let (s, v) = call(&app, Method::PUT, "/sessions/other", Some(session)).await;
    assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "IdMismatch"));
    let (_, original) = call(&app, Method::GET, "/sessions/poem", None).await;
    let (s, v) = call(&app, Method::PUT, "/sessions/poem", Some({
        let mut o = original.clone();
        o["well_configs"][0]["wellId"] = json!("copy-context");
        o
    }))
    .await;
    assert_eq!((s, v["code"].as_str().unwrap()), (StatusCode::BAD_REQUEST, "DuplicateId"));
}

#[tokio::test]
async fn identical_requests_give_identical_bytes() {
    let mut bodies = Vec::new();
    for exec in [Execution::Parallel, Execution::Sequential, Execution::Parallel] {
        let mut s = services();
        s.exec = exec;
        let app = app_with(s, None);
        let inlet = setup(&app).await;
        let job = run(&app, &inlet, json!({"seed": 11})).await;
        poll(&app, &job).await;
        let (_, bytes) = raw(&app, Method::GET, &format!("/jobs/{job}?cursor=3"), None).await;
        bodies.push(bytes);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
    let v: Value = serde_json::from_slice(&bodies[0]).unwrap();
    assert!(v["arrivals"].as_array().unwrap().is_empty(), "cursor at the end hides arrivals");
}
