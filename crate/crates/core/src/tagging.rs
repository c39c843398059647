//! Step segmentation, document editing and key-object tagging.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{
    from_json_with_path, to_canonical_json, DocumentProfile, InstructionStep, SCHEMA_VERSION,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierPrediction {
    pub key_object_id: String,
    pub confidence: f64,
}

/// Lowercased alphanumeric runs with their starting token position.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|ch: char| !ch.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabularyEntry {
    pub id: String,
    pub display_name: String,
    pub phrases: Vec<String>,
}

/// Exact-match phrases per key object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyDoc", into = "VocabularyDoc")]
pub struct KeyObjectVocabulary {
    entries: Vec<VocabularyEntry>,
    /// Tokenized phrase -> entry index.
    phrases: Vec<(Vec<String>, usize)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyDoc {
    schema_version: u32,
    objects: Vec<VocabularyEntry>,
}

impl From<KeyObjectVocabulary> for VocabularyDoc {
    fn from(v: KeyObjectVocabulary) -> Self {
        VocabularyDoc {
            schema_version: SCHEMA_VERSION,
            objects: v.entries,
        }
    }
}

impl TryFrom<VocabularyDoc> for KeyObjectVocabulary {
    type Error = Error;

    fn try_from(d: VocabularyDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    d.schema_version
                ),
            ));
        }
        KeyObjectVocabulary::new(d.objects)
    }
}

impl KeyObjectVocabulary {
    pub fn new(entries: Vec<VocabularyEntry>) -> Result<Self> {
        let mut owner: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.id.is_empty() || !ids.insert(e.id.as_str()) {
                return Err(Error::schema(
                    format!("objects[{i}].id"),
                    format!("`{}` is empty or repeated", e.id),
                ));
            }
            for (j, phrase) in e.phrases.iter().enumerate() {
                let tokens = tokenize(phrase);
                if tokens.is_empty() {
                    return Err(Error::schema(
                        format!("objects[{i}].phrases[{j}]"),
                        "phrase has no words",
                    ));
                }
                if let Some(&prev) = owner.get(&tokens) {
                    if prev != i {
                        return Err(Error::VocabularyCollision {
                            phrase: phrase.clone(),
                            first: entries[prev].id.clone(),
                            second: e.id.clone(),
                        });
                    }
                }
                owner.insert(tokens, i);
            }
        }
        let phrases = owner.into_iter().collect();
        Ok(KeyObjectVocabulary { entries, phrases })
    }

    pub fn entries(&self) -> &[VocabularyEntry] {
        &self.entries
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json_with_path(text)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Per object: matched-occurrence count and first match position.
    pub fn matches(&self, text: &str) -> Vec<(usize, usize, usize)> {
        let tokens = tokenize(text);
        let mut found: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (phrase, owner) in &self.phrases {
            if phrase.len() > tokens.len() {
                continue;
            }
            for (pos, window) in tokens.windows(phrase.len()).enumerate() {
                if window == phrase.as_slice() {
                    let e = found.entry(*owner).or_insert((0, pos));
                    e.0 += 1;
                    e.1 = e.1.min(pos);
                }
            }
        }
        found
            .into_iter()
            .map(|(i, (count, first))| (i, count, first))
            .collect()
    }
}

/// Swappable step classifier.
pub trait Classifier: Send + Sync {
    fn predict(&self, text: &str, available: &BTreeSet<String>) -> Option<ClassifierPrediction>;
}

/// Confidence is the object's match count over the largest match count of
/// any object; the pick is the most confident available object, earliest
/// first match on ties.
pub fn classify_rule_based(
    text: &str,
    vocabulary: &KeyObjectVocabulary,
    available: &BTreeSet<String>,
) -> Option<ClassifierPrediction> {
    let matches = vocabulary.matches(text);
    let max = matches.iter().map(|m| m.1).max()?;
    matches
        .iter()
        .filter(|(i, _, _)| available.contains(&vocabulary.entries[*i].id))
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)))
        .map(|&(i, count, _)| ClassifierPrediction {
            key_object_id: vocabulary.entries[i].id.clone(),
            confidence: count as f64 / max as f64,
        })
}

#[derive(Clone, Debug)]
pub struct RuleClassifier {
    pub vocabulary: KeyObjectVocabulary,
}

impl Classifier for RuleClassifier {
    fn predict(&self, text: &str, available: &BTreeSet<String>) -> Option<ClassifierPrediction> {
        classify_rule_based(text, &self.vocabulary, available)
    }
}

/// Paragraphs separated by blank lines, trimmed, empty ones dropped.
pub fn segment_document(text: &str) -> DocumentProfile {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current.join("\n"));
    }
    let steps = paragraphs
        .iter()
        .map(|p| p.trim())
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(i, p)| InstructionStep::new(i, p))
        .collect();
    DocumentProfile {
        title: String::new(),
        steps,
    }
}

/// Tags every step of `doc`, replacing earlier tags.
pub fn tag_document(
    doc: &mut DocumentProfile,
    classifier: &dyn Classifier,
    available: &BTreeSet<String>,
) {
    for step in &mut doc.steps {
        apply(step, classifier.predict(&step.text, available));
    }
}

fn apply(step: &mut InstructionStep, p: Option<ClassifierPrediction>) {
    match p {
        Some(p) => {
            step.key_object_id = Some(p.key_object_id);
            step.confidence = p.confidence;
        }
        None => {
            step.key_object_id = None;
            step.confidence = 0.0;
        }
    }
}

/// Split, merge, edit and delete on a document, re-predicting changed steps
/// when a classifier is attached.
pub struct DocumentEditor<'a> {
    pub doc: DocumentProfile,
    classifier: Option<(&'a dyn Classifier, BTreeSet<String>)>,
}

impl<'a> DocumentEditor<'a> {
    pub fn new(doc: DocumentProfile) -> Self {
        DocumentEditor {
            doc,
            classifier: None,
        }
    }

    pub fn with_classifier(
        doc: DocumentProfile,
        classifier: &'a dyn Classifier,
        available: BTreeSet<String>,
    ) -> Self {
        DocumentEditor {
            doc,
            classifier: Some((classifier, available)),
        }
    }

    pub fn into_document(self) -> DocumentProfile {
        self.doc
    }

    fn repredict(&mut self, index: usize) {
        if let Some((c, available)) = &self.classifier {
            let step = &mut self.doc.steps[index];
            let p = c.predict(&step.text, available);
            apply(step, p);
        }
    }

    fn check(&self, index: usize) -> Result<()> {
        self.doc.step(index).map(|_| ())
    }

    /// Splits step `index` at char offset `at` into two steps.
    pub fn split_step(&mut self, index: usize, at: usize) -> Result<()> {
        self.check(index)?;
        let text = &self.doc.steps[index].text;
        let Some((byte, _)) = text.char_indices().nth(at) else {
            return Err(Error::InvalidSplit {
                index,
                reason: format!("offset {at} is not inside the text"),
            });
        };
        let (head, tail) = (
            text[..byte].trim().to_string(),
            text[byte..].trim().to_string(),
        );
        if head.is_empty() || tail.is_empty() {
            return Err(Error::InvalidSplit {
                index,
                reason: "both parts must contain text".into(),
            });
        }
        self.doc.steps[index].text = head;
        self.doc
            .steps
            .insert(index + 1, InstructionStep::new(index + 1, tail));
        self.doc.reindex();
        self.repredict(index);
        self.repredict(index + 1);
        Ok(())
    }

    /// Merges `second` into `first`; they must be adjacent.
    pub fn merge_steps(&mut self, first: usize, second: usize) -> Result<()> {
        self.check(first)?;
        self.check(second)?;
        if second != first + 1 {
            return Err(Error::NonAdjacentMerge { first, second });
        }
        let tail = self.doc.steps.remove(second);
        let head = &mut self.doc.steps[first];
        head.text = format!("{} {}", head.text, tail.text);
        if head.preferred_position.is_none() {
            head.preferred_position = tail.preferred_position;
        }
        self.doc.reindex();
        self.repredict(first);
        Ok(())
    }

    pub fn edit_step(&mut self, index: usize, text: impl Into<String>) -> Result<()> {
        self.check(index)?;
        let text = text.into().trim().to_string();
        if text.is_empty() {
            return Err(Error::schema(
                format!("steps[{index}].text"),
                "must not be empty",
            ));
        }
        self.doc.steps[index].text = text;
        self.repredict(index);
        Ok(())
    }

    pub fn delete_step(&mut self, index: usize) -> Result<InstructionStep> {
        self.check(index)?;
        let removed = self.doc.steps.remove(index);
        self.doc.reindex();
        Ok(removed)
    }
}
