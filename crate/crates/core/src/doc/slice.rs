use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::names::words;

use super::composition::SystemComposition;
use super::{SentenceClass, TaggedSentence};

/// Sentence ids grouped by purpose. Every list is ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSlice {
    pub model_corpus: Vec<usize>,
    pub connection_corpus: Vec<usize>,
    pub component_corpora: BTreeMap<String, Vec<usize>>,
}

impl CorpusSlice {
    /// Texts of `ids`, looked up in `tagged`.
    pub fn texts<'a>(tagged: &'a [TaggedSentence], ids: &[usize]) -> Vec<&'a str> {
        ids.iter()
            .filter_map(|id| tagged.iter().find(|s| s.id == *id))
            .map(|s| s.text.as_str())
            .collect()
    }
}

/// True when the words of `name` occur contiguously in `text`, comparing
/// normalized words.
pub fn mentions(text: &str, name: &str) -> bool {
    let needle = words(name);
    let hay = words(text);
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// A sentence survives when it carries entity tags, a class other than
/// irrelevant, or a component mention. Surviving connection descriptions
/// form the connection corpus; surviving mentions feed component corpora.
pub fn slice_corpus(tagged: &[TaggedSentence], composition: &SystemComposition) -> CorpusSlice {
    let names = composition.component_names();
    let mut slice = CorpusSlice {
        component_corpora: names.iter().map(|n| (n.clone(), Vec::new())).collect(),
        ..CorpusSlice::default()
    };
    let mut ordered: Vec<&TaggedSentence> = tagged.iter().collect();
    ordered.sort_by_key(|s| s.id);
    for s in ordered {
        let hits: Vec<&String> = names.iter().filter(|n| mentions(&s.text, n)).collect();
        let relevant = s.has_entities() || !s.is_irrelevant_only() || !hits.is_empty();
        if !relevant {
            continue;
        }
        slice.model_corpus.push(s.id);
        if s.classes.contains(&SentenceClass::ConnectionDesc) {
            slice.connection_corpus.push(s.id);
        }
        for n in hits {
            slice.component_corpora.get_mut(n).expect("seeded").push(s.id);
        }
    }
    slice
}
