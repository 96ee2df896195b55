//! Design-document front end: sentence splitting, token tagging, sentence
//! classification, composition extraction and corpus slicing.

mod composition;
mod http;
mod slice;
mod tagger;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use composition::{
    apply_edits, build_composition, ComponentNode, CompositionError, Edit, EditOp, Provenance, SystemComposition,
};
pub use http::{HttpClassifier, HttpTagger};
pub use slice::{mentions, slice_corpus, CorpusSlice};
pub use tagger::{
    classify_with_fallback, relation, tag_with_fallback, tokenize, BackendError, ClassifierBackend, RuleClassifier,
    RuleTagger, TaggerBackend,
};

/// Abbreviations whose periods never end a sentence. Matching ignores
/// whitespace, so `A. B.` is covered by `A.B.`.
pub const DEFAULT_GUARDS: [&str; 8] = ["e.g.", "i.e.", "Fig.", "Figs.", "Eq.", "vs.", "approx.", "No."];

/// A sentence and its byte range in the source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceClass {
    Containment,
    ConnectionDesc,
    Irrelevant,
}

/// Tag values: 0 other, 1 parent system, 2 subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub tag: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub id: usize,
    pub text: String,
    pub tokens: Vec<TaggedToken>,
    pub classes: BTreeSet<SentenceClass>,
}

impl TaggedSentence {
    pub fn has_entities(&self) -> bool {
        self.tokens.iter().any(|t| t.tag != 0)
    }

    /// Maximal runs of tokens sharing a nonzero tag, as (tag, text) with the
    /// sentence's own spacing preserved.
    pub fn spans(&self) -> Vec<(u8, String)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.tokens.len() {
            let tag = self.tokens[i].tag;
            if tag == 0 {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < self.tokens.len() && self.tokens[j + 1].tag == tag {
                j += 1;
            }
            out.push((tag, self.text[self.tokens[i].start..self.tokens[j].end].to_string()));
            i = j + 1;
        }
        out
    }

    pub fn is_irrelevant_only(&self) -> bool {
        self.classes.iter().all(|c| *c == SentenceClass::Irrelevant)
    }
}

/// Byte ranges of periods protected by a guard occurrence.
fn guarded_positions(doc: &str, guards: &[&str]) -> BTreeSet<usize> {
    let compact: Vec<(usize, char)> = doc.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
    let mut protected = BTreeSet::new();
    for g in guards {
        let pat: Vec<char> = g.chars().filter(|c| !c.is_whitespace()).collect();
        if pat.is_empty() || pat.len() > compact.len() {
            continue;
        }
        for s in 0..=compact.len() - pat.len() {
            let hit = compact[s..s + pat.len()].iter().zip(&pat).all(|((_, a), b)| a == b);
            if !hit {
                continue;
            }
            let at_boundary = doc[..compact[s].0]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric());
            if at_boundary {
                protected.extend(compact[s..s + pat.len()].iter().filter(|(_, c)| *c == '.').map(|(i, _)| *i));
            }
        }
    }
    protected
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text, and on
/// blank lines. Whitespace between sentences is the only text dropped.
pub fn split_sentences(doc: &str, guards: &[&str]) -> Vec<Sentence> {
    let protected = guarded_positions(doc, guards);
    let chars: Vec<(usize, char)> = doc.char_indices().collect();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |s: usize, e: usize, out: &mut Vec<Sentence>| {
        let text = doc[s..e].trim_end();
        if !text.is_empty() {
            out.push(Sentence {
                id: out.len(),
                text: text.to_string(),
                start: s,
                end: s + text.len(),
            });
        }
    };
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            if c == '\n' {
                let mut j = i + 1;
                while j < chars.len() && chars[j].1.is_whitespace() && chars[j].1 != '\n' {
                    j += 1;
                }
                if j < chars.len() && chars[j].1 == '\n' {
                    if let Some(s) = start.take() {
                        push(s, pos, &mut out);
                    }
                }
            }
            i += 1;
            continue;
        }
        if start.is_none() {
            start = Some(pos);
        }
        let terminal = matches!(c, '.' | '!' | '?') && !protected.contains(&pos);
        let followed_by_space = chars.get(i + 1).is_none_or(|(_, n)| n.is_whitespace());
        if terminal && followed_by_space {
            let s = start.take().expect("sentence started");
            push(s, pos + c.len_utf8(), &mut out);
        }
        i += 1;
    }
    if let Some(s) = start {
        push(s, doc.len(), &mut out);
    }
    out
}

/// Drops common markdown markup: heading and list markers, emphasis,
/// inline code ticks and link targets. List items become paragraphs.
pub fn strip_markup(doc: &str) -> String {
    let mut out = String::new();
    let mut in_fence = false;
    for line in doc.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        let mut l = trimmed.trim_start_matches('#').trim_start();
        let mut is_item = false;
        for marker in ["- ", "* ", "+ "] {
            if let Some(rest) = l.strip_prefix(marker) {
                l = rest;
                is_item = true;
            }
        }
        let mut text = String::new();
        let mut rest = l;
        while let Some(open) = rest.find('[') {
            let after = &rest[open + 1..];
            match after.find("](").and_then(|close| after[close..].find(')').map(|end| (close, close + end))) {
                Some((close, end)) => {
                    text.push_str(&rest[..open]);
                    text.push_str(&after[..close]);
                    rest = &after[end + 1..];
                }
                None => {
                    text.push_str(&rest[..=open]);
                    rest = after;
                }
            }
        }
        text.push_str(rest);
        let text = text.replace("**", "").replace("__", "").replace('`', "");
        if is_item && !out.ends_with("\n\n") && !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&text);
        out.push('\n');
        if is_item {
            out.push('\n');
        }
    }
    out
}
