//! Remote tagger and classifier over `POST /tag` and `POST /classify`.

use std::collections::BTreeSet;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::http::{join_url, JsonClient};

use super::tagger::{tokenize, BackendError, ClassifierBackend, TaggerBackend};
use super::{Sentence, SentenceClass, TaggedSentence};

#[derive(Serialize)]
struct Request<'a> {
    sentences: Vec<&'a str>,
}

#[derive(Deserialize)]
struct TagSpan {
    start: usize,
    end: usize,
    tag: u8,
}

#[derive(Deserialize)]
struct TagResponse {
    tags: Vec<Vec<TagSpan>>,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    classes: Vec<Vec<SentenceClass>>,
}

/// Splits `items` into batches and runs `f` on up to `in_flight` batches
/// at a time, preserving order.
fn batched<T: Sync, R: Send>(
    items: &[T],
    batch: usize,
    in_flight: usize,
    f: impl Fn(&[T]) -> Result<Vec<R>, BackendError> + Sync,
) -> Result<Vec<R>, BackendError> {
    let chunks: Vec<&[T]> = items.chunks(batch.max(1)).collect();
    let mut out = Vec::with_capacity(items.len());
    for group in chunks.chunks(in_flight.max(1)) {
        let results: Vec<Result<Vec<R>, BackendError>> = thread::scope(|s| {
            let handles: Vec<_> = group.iter().map(|c| s.spawn(|| f(c))).collect();
            handles.into_iter().map(|h| h.join().expect("request thread")).collect()
        });
        for r in results {
            out.extend(r?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HttpTagger {
    pub base_url: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub client: JsonClient,
}

impl HttpTagger {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpTagger {
            base_url: base_url.into(),
            batch_size: 16,
            max_in_flight: 4,
            client: JsonClient::default(),
        }
    }

    fn tag_batch(&self, batch: &[Sentence]) -> Result<Vec<TaggedSentence>, BackendError> {
        let req = Request {
            sentences: batch.iter().map(|s| s.text.as_str()).collect(),
        };
        let resp: TagResponse = self
            .client
            .post(&join_url(&self.base_url, "tag"), &req)
            .map_err(BackendError::Unavailable)?;
        if resp.tags.len() != batch.len() {
            return Err(BackendError::Malformed(format!(
                "{} tag lists for {} sentences",
                resp.tags.len(),
                batch.len()
            )));
        }
        batch
            .iter()
            .zip(resp.tags)
            .map(|(s, spans)| {
                let mut tokens = tokenize(&s.text);
                for span in spans {
                    if span.tag > 2 || span.start > span.end {
                        return Err(BackendError::Malformed(format!(
                            "bad span {}..{} tag {}",
                            span.start, span.end, span.tag
                        )));
                    }
                    for t in tokens.iter_mut().filter(|t| t.start < span.end && span.start < t.end) {
                        t.tag = span.tag;
                    }
                }
                Ok(TaggedSentence {
                    id: s.id,
                    text: s.text.clone(),
                    tokens,
                    classes: BTreeSet::new(),
                })
            })
            .collect()
    }
}

impl TaggerBackend for HttpTagger {
    fn name(&self) -> String {
        format!("http:{}", self.base_url)
    }

    fn tag(&self, sentences: &[Sentence]) -> Result<Vec<TaggedSentence>, BackendError> {
        batched(sentences, self.batch_size, self.max_in_flight, |b| self.tag_batch(b))
    }
}

#[derive(Debug, Clone)]
pub struct HttpClassifier {
    pub base_url: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub client: JsonClient,
}

impl HttpClassifier {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpClassifier {
            base_url: base_url.into(),
            batch_size: 16,
            max_in_flight: 4,
            client: JsonClient::default(),
        }
    }

    fn classify_batch(&self, batch: &[Sentence]) -> Result<Vec<BTreeSet<SentenceClass>>, BackendError> {
        let req = Request {
            sentences: batch.iter().map(|s| s.text.as_str()).collect(),
        };
        let resp: ClassifyResponse = self
            .client
            .post(&join_url(&self.base_url, "classify"), &req)
            .map_err(BackendError::Unavailable)?;
        if resp.classes.len() != batch.len() {
            return Err(BackendError::Malformed(format!(
                "{} class lists for {} sentences",
                resp.classes.len(),
                batch.len()
            )));
        }
        Ok(resp
            .classes
            .into_iter()
            .map(|c| {
                let set: BTreeSet<SentenceClass> = c.into_iter().collect();
                if set.is_empty() {
                    [SentenceClass::Irrelevant].into()
                } else {
                    set
                }
            })
            .collect())
    }
}

impl ClassifierBackend for HttpClassifier {
    fn name(&self) -> String {
        format!("http:{}", self.base_url)
    }

    fn classify(&self, sentences: &[Sentence]) -> Result<Vec<BTreeSet<SentenceClass>>, BackendError> {
        batched(sentences, self.batch_size, self.max_in_flight, |b| self.classify_batch(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::testing::serve;

    fn sentences() -> Vec<Sentence> {
        ["X contains Y.", "Nothing here."]
            .iter()
            .enumerate()
            .map(|(id, t)| Sentence {
                id,
                text: t.to_string(),
                start: 0,
                end: t.len(),
            })
            .collect()
    }

    #[test]
    fn tag_protocol() {
        let (url, rx) = serve(vec![r#"{"tags":[[{"start":0,"end":1,"tag":1},{"start":11,"end":12,"tag":2}],[]]}"#.into()]);
        let tagged = HttpTagger::new(url).tag(&sentences()).unwrap();
        let tags: Vec<u8> = tagged[0].tokens.iter().map(|t| t.tag).collect();
        assert_eq!(tags, [1, 0, 2, 0]);
        assert!(!tagged[1].has_entities());
        let (path, body) = rx.recv().unwrap();
        assert_eq!(path, "/tag");
        let body: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(body, serde_json::json!({"sentences": ["X contains Y.", "Nothing here."]}));
    }

    #[test]
    fn classify_protocol() {
        let (url, _rx) = serve(vec![r#"{"classes":[["containment"],[]]}"#.into()]);
        let classes = HttpClassifier::new(url).classify(&sentences()).unwrap();
        assert_eq!(classes[0], [SentenceClass::Containment].into());
        assert_eq!(classes[1], [SentenceClass::Irrelevant].into());
    }

    #[test]
    fn bounded_batches_keep_order() {
        let items: Vec<usize> = (0..10).collect();
        let out = batched(&items, 3, 2, |b| Ok(b.iter().map(|x| x * 2).collect())).unwrap();
        assert_eq!(out, (0..10).map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn unreachable_server_is_unavailable() {
        let t = HttpTagger::new("http://127.0.0.1:1");
        assert!(matches!(t.tag(&sentences()), Err(BackendError::Unavailable(_))));
    }
}
