use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::doc::BackendError;
use crate::http::JsonClient;
use crate::model::{print_section, print_unit, ModelUnit, Section, UnitKind};
use crate::names::same_name;
use crate::template::Hole;

use super::prompt::{PromptBundle, Purpose, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_tokens: 2048,
            temperature: 0.0,
            seed: 0,
        }
    }
}

/// Text completion over a prompt bundle.
pub trait GeneratorBackend: Sync {
    fn name(&self) -> String;
    fn complete(&self, bundle: &PromptBundle, limits: &Limits) -> Result<String, BackendError>;
}

/// Hex SHA-256 of the rendered prompt.
pub fn prompt_hash(bundle: &PromptBundle) -> String {
    hex::encode(Sha256::digest(bundle.render().as_bytes()))
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    messages: Vec<ChatMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
    seed: u64,
}

#[derive(Deserialize)]
struct ChatResponse {
    content: String,
}

/// Chat endpoint taking `{messages, max_tokens, temperature, seed}` and
/// answering `{content}`.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    pub url: String,
    pub model: Option<String>,
    pub client: JsonClient,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, client: JsonClient) -> Self {
        HttpGenerator {
            url: url.into(),
            model: None,
            client,
        }
    }
}

impl GeneratorBackend for HttpGenerator {
    fn name(&self) -> String {
        format!("http:{}", self.url)
    }

    fn complete(&self, bundle: &PromptBundle, limits: &Limits) -> Result<String, BackendError> {
        let req = ChatRequest {
            model: self.model.as_deref(),
            messages: bundle
                .messages
                .iter()
                .map(|m| ChatMessage {
                    role: match m.role {
                        Role::User => "user",
                        Role::System => "system",
                    },
                    content: &m.content,
                })
                .collect(),
            max_tokens: limits.max_tokens,
            temperature: limits.temperature,
            seed: limits.seed,
        };
        let resp: ChatResponse = self.client.post(&self.url, &req).map_err(BackendError::Unavailable)?;
        Ok(resp.content)
    }
}

/// Answers from a directory of `<prompt hash>.txt` files.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    pub dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend { dir: dir.into() }
    }

    pub fn path_for(dir: &Path, bundle: &PromptBundle) -> PathBuf {
        dir.join(format!("{}.txt", prompt_hash(bundle)))
    }
}

impl GeneratorBackend for ReplayBackend {
    fn name(&self) -> String {
        format!("replay:{}", self.dir.display())
    }

    fn complete(&self, bundle: &PromptBundle, _: &Limits) -> Result<String, BackendError> {
        let path = Self::path_for(&self.dir, bundle);
        fs::read_to_string(&path).map_err(|e| BackendError::Unavailable(format!("no replay at {}: {e}", path.display())))
    }
}

/// Forwards to `inner` and stores every answer under the prompt hash, so
/// the directory can later serve a [`ReplayBackend`].
pub struct RecordingBackend<B> {
    pub inner: B,
    pub dir: PathBuf,
}

impl<B: GeneratorBackend> GeneratorBackend for RecordingBackend<B> {
    fn name(&self) -> String {
        format!("record:{}", self.inner.name())
    }

    fn complete(&self, bundle: &PromptBundle, limits: &Limits) -> Result<String, BackendError> {
        let out = self.inner.complete(bundle, limits)?;
        fs::create_dir_all(&self.dir).map_err(|e| BackendError::Unavailable(e.to_string()))?;
        fs::write(ReplayBackend::path_for(&self.dir, bundle), &out).map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(out)
    }
}

/// Returns queued answers in order, then repeats `fallback`.
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<String>>,
    pub fallback: Option<String>,
    pub calls: Mutex<Vec<PromptBundle>>,
}

impl ScriptedBackend {
    pub fn new(answers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        ScriptedBackend {
            queue: Mutex::new(answers.into_iter().map(Into::into).collect()),
            fallback: None,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn always(answer: impl Into<String>) -> Self {
        let mut s = ScriptedBackend::new(Vec::<String>::new());
        s.fallback = Some(answer.into());
        s
    }

    pub fn prompts(&self) -> Vec<PromptBundle> {
        self.calls.lock().expect("lock").clone()
    }
}

impl GeneratorBackend for ScriptedBackend {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, bundle: &PromptBundle, _: &Limits) -> Result<String, BackendError> {
        self.calls.lock().expect("lock").push(bundle.clone());
        let next = self.queue.lock().expect("lock").pop_front();
        next.or_else(|| self.fallback.clone())
            .ok_or_else(|| BackendError::Unavailable("script exhausted".into()))
    }
}

/// Deterministic backend answering from a reference model set: hole
/// prompts get the matching unit's sections, function prompts the library
/// function, connection prompts the couple's connections.
#[derive(Debug, Clone, Default)]
pub struct StubBackend {
    units: BTreeMap<String, ModelUnit>,
    /// Port types answered for port-type prompts, keyed `part.port`.
    pub port_types: BTreeMap<String, String>,
}

impl StubBackend {
    pub fn new(units: impl IntoIterator<Item = ModelUnit>) -> Self {
        StubBackend {
            units: units.into_iter().map(|u| (u.name.clone(), u)).collect(),
            port_types: BTreeMap::new(),
        }
    }

    fn find(&self, name: &str) -> Option<&ModelUnit> {
        self.units.get(name).or_else(|| self.units.values().find(|u| same_name(&u.name, name)))
    }
}

impl GeneratorBackend for StubBackend {
    fn name(&self) -> String {
        "stub".into()
    }

    fn complete(&self, bundle: &PromptBundle, _: &Limits) -> Result<String, BackendError> {
        let missing = |what: &str| BackendError::Unavailable(format!("stub has no answer for {what}"));
        match &bundle.purpose {
            Purpose::Hole { unit, hole } => {
                let u = self.find(unit).ok_or_else(|| missing(unit))?;
                let mut out = String::from("```x\n");
                if matches!(hole, Hole::State | Hole::Equation) && u.section_present(Section::Value) {
                    out.push_str(&print_section(u, Section::Value));
                }
                out.push_str(&print_section(u, hole.section()));
                out.push_str("```\n");
                Ok(out)
            }
            Purpose::Connections { system } => {
                let u = self.find(system).ok_or_else(|| missing(system))?;
                Ok(u.connections.iter().map(|c| format!("{c}\n")).collect())
            }
            Purpose::Function { name, .. } => {
                let u = self.find(name).filter(|u| u.kind == UnitKind::Function).ok_or_else(|| missing(name))?;
                Ok(format!("```x\n{}```\n", print_unit(u)))
            }
            Purpose::PortType { part, port } => Ok(self
                .port_types
                .get(&format!("{part}.{port}"))
                .cloned()
                .or_else(|| {
                    let u = self.find(part)?;
                    u.port(port).map(|p| p.port_type.clone())
                })
                .unwrap_or_else(|| "Real".into())),
            Purpose::Augment { kind, .. } => {
                let u = self.units.values().find(|u| u.kind == *kind).ok_or_else(|| missing("augmentation"))?;
                Ok(format!("```x\n{}```\n", print_unit(u)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::prompt::Label;
    use crate::http::testing::serve;
    use crate::model::parse_unit;

    fn bundle(unit: &str) -> PromptBundle {
        let mut b = PromptBundle::new(Purpose::Hole {
            unit: unit.into(),
            hole: Hole::Equation,
        });
        b.push(Role::User, Label::Introduction, "write it");
        b
    }

    fn battery() -> ModelUnit {
        parse_unit("continuous Battery\nparameter:\n  Real v0 = 28.5;\nport:\n  output Real volt;\nequation:\n  volt = v0;\nend;\n").unwrap()
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        assert_eq!(prompt_hash(&bundle("A")), prompt_hash(&bundle("A")));
        let mut other = bundle("A");
        other.messages[0].content.push('!');
        assert_ne!(prompt_hash(&bundle("A")), prompt_hash(&other));
        assert_eq!(prompt_hash(&bundle("A")).len(), 64);
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RecordingBackend {
            inner: StubBackend::new([battery()]),
            dir: dir.path().to_path_buf(),
        };
        let live = rec.complete(&bundle("Battery"), &Limits::default()).unwrap();
        assert!(live.contains("volt = v0;"));
        let replay = ReplayBackend::new(dir.path());
        assert_eq!(replay.complete(&bundle("Battery"), &Limits::default()).unwrap(), live);
        let mut other = bundle("Battery");
        other.messages[0].content = "write another".into();
        assert!(matches!(
            replay.complete(&other, &Limits::default()),
            Err(BackendError::Unavailable(_))
        ));
    }

    #[test]
    fn scripted_order() {
        let s = ScriptedBackend::new(["a", "b"]);
        let l = Limits::default();
        assert_eq!(s.complete(&bundle("x"), &l).unwrap(), "a");
        assert_eq!(s.complete(&bundle("x"), &l).unwrap(), "b");
        assert!(s.complete(&bundle("x"), &l).is_err());
        assert_eq!(s.prompts().len(), 3);
    }

    #[test]
    fn http_protocol() {
        let (url, rx) = serve(vec![r#"{"content":"ok"}"#.into()]);
        let g = HttpGenerator::new(format!("{url}/v1/complete"), JsonClient::default());
        let limits = Limits {
            max_tokens: 10,
            temperature: 0.0,
            seed: 7,
        };
        assert_eq!(g.complete(&bundle("x"), &limits).unwrap(), "ok");
        let (path, body) = rx.recv().unwrap();
        assert_eq!(path, "/v1/complete");
        let body: serde_json::Value = serde_json::from_str(&body).unwrap();
        assert_eq!(
            body,
            serde_json::json!({"messages":[{"role":"user","content":"write it"}],"max_tokens":10,"temperature":0.0,"seed":7})
        );
    }
}
