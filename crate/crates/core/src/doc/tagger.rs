use std::collections::BTreeSet;

use thiserror::Error;

use crate::diag::Diagnostic;

use super::{Sentence, SentenceClass, TaggedSentence, TaggedToken};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
}

/// Assigns tags 0/1/2 to the tokens of each sentence.
pub trait TaggerBackend: Sync {
    fn name(&self) -> String;
    fn tag(&self, sentences: &[Sentence]) -> Result<Vec<TaggedSentence>, BackendError>;
}

/// Assigns sentence classes.
pub trait ClassifierBackend: Sync {
    fn name(&self) -> String;
    fn classify(&self, sentences: &[Sentence]) -> Result<Vec<BTreeSet<SentenceClass>>, BackendError>;
}

/// Word and punctuation tokens with byte offsets. Hyphens and apostrophes
/// inside words and decimal points inside numbers stay in the token.
pub fn tokenize(text: &str) -> Vec<TaggedToken> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        if c.is_alphanumeric() {
            while j < chars.len() {
                let ch = chars[j].1;
                let joiner = matches!(ch, '-' | '\'' | '.')
                    && chars.get(j + 1).is_some_and(|n| n.1.is_alphanumeric())
                    && (ch != '.' || (chars[j - 1].1.is_ascii_digit() && chars[j + 1].1.is_ascii_digit()));
                if ch.is_alphanumeric() || ch == '_' || joiner {
                    j += 1;
                } else {
                    break;
                }
            }
        }
        let end = chars.get(j).map_or(text.len(), |(p, _)| *p);
        out.push(TaggedToken {
            text: text[start..end].to_string(),
            start,
            end,
            tag: 0,
        });
        i = j;
    }
    out
}

const CONTAINMENT_VERBS: [&[&str]; 8] = [
    &["is", "composed", "of"],
    &["are", "composed", "of"],
    &["consists", "of"],
    &["consist", "of"],
    &["comprises"],
    &["comprise"],
    &["contains"],
    &["contain"],
];

const CONNECTION_CUES: [&[&str]; 12] = [
    &["connected", "to"],
    &["connects"],
    &["linked", "to"],
    &["sends"],
    &["send"],
    &["transmits"],
    &["receives"],
    &["outputs"],
    &["feeds"],
    &["supplies"],
    &["forwards"],
    &["passes"],
];

const DETERMINERS: [&str; 4] = ["the", "a", "an", "its"];

fn lower(tokens: &[TaggedToken]) -> Vec<String> {
    tokens.iter().map(|t| t.text.to_lowercase()).collect()
}

fn find_phrase(words: &[String], phrases: &[&[&str]]) -> Option<(usize, usize)> {
    (0..words.len()).find_map(|i| {
        phrases.iter().find_map(|p| {
            let hit = i + p.len() <= words.len() && p.iter().zip(&words[i..]).all(|(a, b)| a == b);
            hit.then_some((i, i + p.len()))
        })
    })
}

/// Containment-verb pattern tagger.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleTagger;

impl RuleTagger {
    pub fn tag_one(&self, s: &Sentence) -> TaggedSentence {
        let mut tokens = tokenize(&s.text);
        let words = lower(&tokens);
        if let Some((vs, ve)) = find_phrase(&words, &CONTAINMENT_VERBS) {
            let subject: Vec<usize> = (0..vs)
                .skip_while(|&i| i + 1 < vs && DETERMINERS.contains(&words[i].as_str()))
                .filter(|&i| tokens[i].text.chars().any(char::is_alphanumeric))
                .collect();
            if !subject.is_empty() {
                for &i in &subject {
                    tokens[i].tag = 1;
                }
                let colon = words[ve..].iter().position(|w| w == ":").map(|p| ve + p);
                let list_start = colon.map_or(ve, |c| c + 1);
                let mut item_start = true;
                for i in list_start..tokens.len() {
                    let w = words[i].as_str();
                    if matches!(w, "." | "!" | "?") {
                        break;
                    }
                    if matches!(w, "," | ";" | "and" | "or" | "(" | ")") {
                        item_start = true;
                        continue;
                    }
                    let next_is_word = words
                        .get(i + 1)
                        .is_some_and(|n| n.chars().any(char::is_alphanumeric) && !matches!(n.as_str(), "and" | "or"));
                    if item_start && next_is_word && DETERMINERS.contains(&w) {
                        continue;
                    }
                    item_start = false;
                    if tokens[i].text.chars().any(char::is_alphanumeric) {
                        tokens[i].tag = 2;
                    }
                }
            }
        }
        TaggedSentence {
            id: s.id,
            text: s.text.clone(),
            tokens,
            classes: BTreeSet::new(),
        }
    }
}

impl TaggerBackend for RuleTagger {
    fn name(&self) -> String {
        "rule".into()
    }

    fn tag(&self, sentences: &[Sentence]) -> Result<Vec<TaggedSentence>, BackendError> {
        Ok(sentences.iter().map(|s| self.tag_one(s)).collect())
    }
}

/// Cue-word classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleClassifier;

impl RuleClassifier {
    pub fn classify_one(&self, text: &str) -> BTreeSet<SentenceClass> {
        let words = lower(&tokenize(text));
        let mut out = BTreeSet::new();
        if find_phrase(&words, &CONTAINMENT_VERBS).is_some() {
            out.insert(SentenceClass::Containment);
        }
        if find_phrase(&words, &CONNECTION_CUES).is_some() {
            out.insert(SentenceClass::ConnectionDesc);
        }
        if out.is_empty() {
            out.insert(SentenceClass::Irrelevant);
        }
        out
    }
}

impl ClassifierBackend for RuleClassifier {
    fn name(&self) -> String {
        "rule".into()
    }

    fn classify(&self, sentences: &[Sentence]) -> Result<Vec<BTreeSet<SentenceClass>>, BackendError> {
        Ok(sentences.iter().map(|s| self.classify_one(&s.text)).collect())
    }
}

/// Tags with `backend`, falling back to the rule tagger (with a warning)
/// when the backend fails.
pub fn tag_with_fallback(sentences: &[Sentence], backend: &dyn TaggerBackend) -> (Vec<TaggedSentence>, Vec<Diagnostic>) {
    match backend.tag(sentences) {
        Ok(t) => (t, Vec::new()),
        Err(e) => (
            RuleTagger.tag(sentences).expect("rule tagger is total"),
            vec![Diagnostic::warning(
                "TaggerFallback",
                format!("tagger `{}` failed ({e}); used the rule tagger", backend.name()),
            )],
        ),
    }
}

pub fn classify_with_fallback(
    sentences: &[Sentence],
    backend: &dyn ClassifierBackend,
) -> (Vec<BTreeSet<SentenceClass>>, Vec<Diagnostic>) {
    match backend.classify(sentences) {
        Ok(c) => (c, Vec::new()),
        Err(e) => (
            RuleClassifier.classify(sentences).expect("rule classifier is total"),
            vec![Diagnostic::warning(
                "ClassifierFallback",
                format!("classifier `{}` failed ({e}); used the rule classifier", backend.name()),
            )],
        ),
    }
}

/// The (parent, children) relation a tagged sentence states, if any.
pub fn relation(s: &TaggedSentence) -> Option<(String, Vec<String>)> {
    let spans = s.spans();
    let parent = spans.iter().find(|(t, _)| *t == 1)?.1.clone();
    let children: Vec<String> = spans.into_iter().filter(|(t, _)| *t == 2).map(|(_, x)| x).collect();
    (!children.is_empty()).then_some((parent, children))
}
