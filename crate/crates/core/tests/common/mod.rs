#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use anchorlabel_core::context::{generate_synthetic_trace, Trace, TraceScript};
use anchorlabel_core::harness::{tag_text, Inputs};
use anchorlabel_core::profile::{DocumentProfile, SpatialProfile};
use anchorlabel_core::tagging::KeyObjectVocabulary;

pub const T2_TITLE: &str = "Quick Microwave-Poached Eggs on Avocado Toast";
pub const T3_TITLE: &str = "Instant Mac 'n' Cheese";
pub const TRACE_SEED: u64 = 7;

/// Author-assigned objects for the T2 steps the rule classifier leaves
/// untagged.
pub const T2_MANUAL: [(usize, &str); 7] = [
    (0, "countertop"),
    (2, "sink"),
    (3, "countertop"),
    (5, "countertop"),
    (10, "sink"),
    (11, "countertop"),
    (12, "countertop"),
];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn kitchen() -> SpatialProfile {
    SpatialProfile::load(fixture("kitchen.json")).unwrap()
}

pub fn vocabulary() -> KeyObjectVocabulary {
    KeyObjectVocabulary::load(fixture("vocabulary.json")).unwrap()
}

pub fn all_objects() -> BTreeSet<String> {
    vocabulary().ids()
}

pub fn tagged_t2() -> DocumentProfile {
    let mut doc = tag_text(T2_TITLE, &read("t2_recipe.txt"), &vocabulary(), None);
    for (i, id) in T2_MANUAL {
        let s = doc.step_mut(i).unwrap();
        assert!(s.key_object_id.is_none(), "step {i} is already tagged");
        s.key_object_id = Some(id.to_string());
        s.confidence = 1.0;
    }
    doc
}

pub fn t2_document() -> DocumentProfile {
    DocumentProfile::load(fixture("t2_document.json")).unwrap()
}

pub fn microwave_trace() -> Trace {
    Trace::load(fixture("microwave_fixation.jsonl")).unwrap()
}

pub fn synth(script: &str, seed: u64) -> Trace {
    let script = TraceScript::load(fixture(script)).unwrap();
    generate_synthetic_trace(&script, &kitchen(), seed).unwrap()
}

pub fn microwave_inputs() -> Inputs {
    Inputs::new(kitchen(), t2_document(), microwave_trace()).unwrap()
}

pub fn t2_inputs() -> Inputs {
    Inputs::new(
        kitchen(),
        t2_document(),
        synth("t2_script.json", TRACE_SEED),
    )
    .unwrap()
}
