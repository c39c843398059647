//! The bundled fixtures are canonical library output. Run with
//! `UPDATE_FIXTURES=1` to regenerate them.

mod common;

use anchorlabel_core::context::Trace;
use anchorlabel_core::profile::{DocumentProfile, SpatialProfile};
use anchorlabel_core::scenes::sample_kitchen;
use anchorlabel_core::tagging::KeyObjectVocabulary;
use common::*;

fn check(name: &str, expected: &str) {
    let path = fixture(name);
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        std::fs::write(&path, expected).unwrap();
    }
    let actual = std::fs::read_to_string(&path).unwrap();
    assert!(
        actual == expected,
        "{name} is stale; rerun with UPDATE_FIXTURES=1"
    );
}

#[test]
fn kitchen_fixture_is_current() {
    check("kitchen.json", &sample_kitchen().unwrap().to_json());
}

#[test]
fn t2_document_fixture_is_current() {
    check("t2_document.json", &tagged_t2().to_json());
}

#[test]
fn microwave_trace_fixture_is_current() {
    check(
        "microwave_fixation.jsonl",
        &synth("microwave_script.json", TRACE_SEED).to_jsonl(),
    );
}

#[test]
fn fixtures_round_trip() {
    let text = read("kitchen.json");
    assert_eq!(SpatialProfile::from_json(&text).unwrap().to_json(), text);
    let text = read("t2_document.json");
    assert_eq!(DocumentProfile::from_json(&text).unwrap().to_json(), text);
    let text = read("microwave_fixation.jsonl");
    assert_eq!(Trace::from_jsonl(&text).unwrap().to_jsonl(), text);
    let vocab = KeyObjectVocabulary::from_json(&read("vocabulary.json")).unwrap();
    assert_eq!(
        KeyObjectVocabulary::from_json(&vocab.to_json()).unwrap(),
        vocab
    );
}

#[test]
fn t2_document_validates_against_kitchen() {
    let doc = t2_document();
    assert_eq!(doc.len(), 13);
    assert!(doc.untagged().is_empty());
    doc.validate_against(&kitchen()).unwrap();
}
