//! Document to model set: composition extraction, couple construction,
//! atomic hole filling and function generation, plus the files a run
//! writes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PipelineSettings;
use crate::diag::Diagnostic;
use crate::doc::{
    apply_edits, build_composition, classify_with_fallback, mentions, slice_corpus, split_sentences, strip_markup,
    tag_with_fallback, BackendError, ClassifierBackend, ComponentNode, CompositionError, CorpusSlice, Edit, EditOp,
    SystemComposition, TaggedSentence, TaggerBackend, DEFAULT_GUARDS,
};
use crate::gen::{
    fill_hole, generate_missing_functions, infer_connections, prompt_hash, ExampleLibrary, FillContext, GenError,
    GeneratorBackend, GeneratorTypeReasoner, HeuristicTypeReasoner, Limits, PromptBundle, Purpose, RepairReport,
};
use crate::model::{print_unit, ModelUnit, PartDecl, PortDecl, UnitKind};
use crate::names::{normalize, to_class_ident, to_instance_ident};
use crate::template::{
    bidirectional_ports, build_couple, extract_subsystem_ports, make_atomic_skeleton, Hole, PortConvention, PortSpec,
    TemplateError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{unit}: {source}")]
    Generation { unit: String, source: GenError },
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Composition(e) => e.code(),
            PipelineError::Template(_) => "TemplateError",
            PipelineError::Generation { source, .. } => source.code(),
        }
    }
}

/// One prompt and its answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub purpose: Purpose,
    pub prompt_hash: String,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Repair history of one generated section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitReport {
    pub unit: String,
    pub target: String,
    pub report: RepairReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub composition: SystemComposition,
    pub slice: CorpusSlice,
    /// Couples in pre-order, then atomic units, then functions.
    pub units: Vec<ModelUnit>,
    pub reports: Vec<UnitReport>,
    /// Units whose generation failed, with the reason.
    pub failures: BTreeMap<String, String>,
    pub transcript: Vec<TranscriptEntry>,
    pub diagnostics: Vec<Diagnostic>,
}

impl PipelineRun {
    pub fn unit(&self, name: &str) -> Option<&ModelUnit> {
        self.units.iter().find(|u| u.name == name)
    }
}

/// Logs every call made through it.
struct Transcribing<'a> {
    inner: &'a dyn GeneratorBackend,
    log: Mutex<Vec<TranscriptEntry>>,
}

impl GeneratorBackend for Transcribing<'_> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn complete(&self, bundle: &PromptBundle, limits: &Limits) -> Result<String, BackendError> {
        let out = self.inner.complete(bundle, limits);
        self.log.lock().expect("lock").push(TranscriptEntry {
            purpose: bundle.purpose.clone(),
            prompt_hash: prompt_hash(bundle),
            prompt: bundle.render(),
            response: out.as_ref().ok().cloned(),
            error: out.as_ref().err().map(ToString::to_string),
        });
        out
    }
}

/// Everything a run needs besides the document.
pub struct Pipeline<'a> {
    pub backend: &'a dyn GeneratorBackend,
    pub tagger: &'a dyn TaggerBackend,
    pub classifier: &'a dyn ClassifierBackend,
    pub library: ExampleLibrary,
    pub settings: PipelineSettings,
    pub convention: PortConvention,
    pub limits: Limits,
}

struct AtomicJob {
    node_name: String,
    part: PartDecl,
    kind: UnitKind,
    ports: Vec<PortSpec>,
    couple_text: String,
    atomic_text: String,
}

enum JobOutcome {
    Done(Box<(ModelUnit, RepairReport)>),
    Failed(GenError),
}

/// Names each final component was known by before renames.
fn aliases(edits: &[Edit]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for e in edits.iter().filter(|e| e.op == EditOp::Rename) {
        let old = e.path.rsplit('/').next().unwrap_or(&e.path).trim().to_string();
        let mut names = out.remove(&normalize(&old)).unwrap_or_default();
        names.insert(old);
        out.entry(normalize(&e.name)).or_default().extend(names);
    }
    out
}

fn texts_mentioning(tagged: &[TaggedSentence], ids: &[usize], names: &BTreeSet<String>) -> String {
    CorpusSlice::texts(tagged, ids)
        .into_iter()
        .filter(|t| names.iter().any(|n| mentions(t, n)))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Pipeline<'_> {
    /// Tags and classifies the document and builds the edited composition.
    pub fn analyze(
        &self,
        document: &str,
        edits: &[Edit],
    ) -> Result<(Vec<TaggedSentence>, SystemComposition, CorpusSlice, Vec<Diagnostic>), PipelineError> {
        let text = strip_markup(document);
        let sentences = split_sentences(&text, &DEFAULT_GUARDS);
        let (mut tagged, mut diags) = tag_with_fallback(&sentences, self.tagger);
        let (classes, d) = classify_with_fallback(&sentences, self.classifier);
        diags.extend(d);
        for (t, c) in tagged.iter_mut().zip(classes) {
            t.classes = c;
        }
        let raw = build_composition(&tagged)?;
        let slice = slice_corpus(&tagged, &raw);
        let composition = apply_edits(&raw, edits)?;
        diags.extend(composition.diagnostics.iter().cloned());
        Ok((tagged, composition, slice, diags))
    }

    pub fn run(&self, document: &str, edits: &[Edit]) -> Result<PipelineRun, PipelineError> {
        let (tagged, composition, slice, mut diagnostics) = self.analyze(document, edits)?;
        let backend = Transcribing {
            inner: self.backend,
            log: Mutex::new(Vec::new()),
        };
        let alias = aliases(edits);
        let names_of = |n: &ComponentNode| -> BTreeSet<String> {
            let mut s = alias.get(&n.key()).cloned().unwrap_or_default();
            s.insert(n.name.clone());
            s
        };
        let budget = self.settings.repair_budget;
        let connection_corpus: Vec<String> = CorpusSlice::texts(&tagged, &slice.connection_corpus)
            .into_iter()
            .map(String::from)
            .collect();

        let mut couples: Vec<ModelUnit> = Vec::new();
        let mut jobs: Vec<AtomicJob> = Vec::new();
        let mut child_ports: BTreeMap<String, Vec<PortSpec>> = BTreeMap::new();
        for node in composition.root.composites() {
            let system = to_class_ident(&node.name);
            let child_names: BTreeSet<String> = node.children.iter().flat_map(&names_of).collect();
            let corpus: Vec<String> = connection_corpus
                .iter()
                .filter(|t| child_names.iter().any(|n| mentions(t, n)))
                .cloned()
                .collect();
            let (connections, d) = infer_connections(&corpus, node, &backend, &self.limits, budget)
                .map_err(|source| PipelineError::Generation {
                    unit: system.clone(),
                    source,
                })?;
            diagnostics.extend(d);
            let couple = build_couple(node, &connections)?.filled;
            let couple_text = texts_mentioning(&tagged, &slice.model_corpus, &names_of(node));
            for child in &node.children {
                let instance = to_instance_ident(&child.name);
                let part = couple.part(&instance).expect("built from the same node").clone();
                let atomic_text = texts_mentioning(&tagged, &slice.model_corpus, &names_of(child));
                let reasoner = GeneratorTypeReasoner {
                    backend: &backend,
                    limits: self.limits,
                    description: atomic_text.clone(),
                    fallback: HeuristicTypeReasoner {
                        description: atomic_text.clone(),
                    },
                };
                let ports = extract_subsystem_ports(&couple.connections, &instance, &reasoner, self.convention);
                diagnostics.extend(bidirectional_ports(&instance, &ports));
                if child.children.is_empty() {
                    jobs.push(AtomicJob {
                        node_name: child.name.clone(),
                        kind: self.settings.kind_of(&part.class_name, &child.name),
                        part,
                        ports,
                        couple_text: couple_text.clone(),
                        atomic_text,
                    });
                } else {
                    child_ports.insert(part.class_name.clone(), ports);
                }
            }
            couples.push(couple);
        }
        for couple in &mut couples {
            if let Some(ports) = child_ports.get(&couple.name) {
                couple.ports = ports.iter().map(port_decl).collect();
            }
        }

        let outcomes = self.fill_all(&jobs, &backend);
        let mut units = couples;
        let mut reports = Vec::new();
        let mut failures = BTreeMap::new();
        let mut atomics = Vec::new();
        for (job, outcome) in jobs.iter().zip(outcomes) {
            let name = job.part.class_name.clone();
            let target = hole_for(job.kind).name().to_string();
            match outcome {
                JobOutcome::Done(done) => {
                    let (unit, report) = *done;
                    reports.push(UnitReport {
                        unit: name,
                        target,
                        report,
                        error: None,
                    });
                    atomics.push(unit);
                }
                JobOutcome::Failed(e) => {
                    let report = match &e {
                        GenError::Exhausted { report } => report.clone(),
                        _ => RepairReport::default(),
                    };
                    diagnostics.push(Diagnostic::error(
                        e.code(),
                        format!("{name} ({}): {e}", job.node_name),
                    ));
                    failures.insert(name.clone(), e.to_string());
                    reports.push(UnitReport {
                        unit: name,
                        target,
                        report,
                        error: Some(e.to_string()),
                    });
                }
            }
        }

        let mut functions: Vec<ModelUnit> = Vec::new();
        for unit in &atomics {
            match generate_missing_functions(unit, &functions, &backend, &self.limits, budget) {
                Ok((made, d)) => {
                    diagnostics.extend(d);
                    functions.extend(made);
                }
                Err(e) => {
                    diagnostics.push(Diagnostic::error(e.code(), format!("functions of {}: {e}", unit.name)));
                    failures.insert(format!("{} functions", unit.name), e.to_string());
                }
            }
        }
        units.extend(atomics);
        units.extend(functions);

        let mut transcript = backend.log.into_inner().expect("lock");
        transcript.sort_by_cached_key(|t| serde_json::to_string(&t.purpose).expect("purpose serializes"));
        Ok(PipelineRun {
            composition,
            slice,
            units,
            reports,
            failures,
            transcript,
            diagnostics,
        })
    }

    fn fill_one(&self, job: &AtomicJob, backend: &dyn GeneratorBackend) -> JobOutcome {
        let skeleton = make_atomic_skeleton(&job.part, &job.ports, job.kind);
        let ctx = FillContext {
            couple_text: job.couple_text.clone(),
            atomic_text: job.atomic_text.clone(),
            notes: Vec::new(),
            library: self.library.clone(),
        };
        match fill_hole(&skeleton, hole_for(job.kind), &ctx, backend, &self.limits, self.settings.repair_budget) {
            Ok(done) => JobOutcome::Done(Box::new(done)),
            Err(e) => JobOutcome::Failed(e),
        }
    }

    /// Fills every job, at most `max_in_flight` at a time, keeping job
    /// order in the result.
    fn fill_all(&self, jobs: &[AtomicJob], backend: &dyn GeneratorBackend) -> Vec<JobOutcome> {
        let mut out = Vec::with_capacity(jobs.len());
        for chunk in jobs.chunks(self.settings.max_in_flight.max(1)) {
            let done: Vec<JobOutcome> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk.iter().map(|j| s.spawn(move || self.fill_one(j, backend))).collect();
                handles.into_iter().map(|h| h.join().expect("fill thread")).collect()
            });
            out.extend(done);
        }
        out
    }
}

fn hole_for(kind: UnitKind) -> Hole {
    if kind == UnitKind::Continuous {
        Hole::Equation
    } else {
        Hole::State
    }
}

fn port_decl(p: &PortSpec) -> PortDecl {
    PortDecl {
        direction: Some(p.direction),
        port_type: p.port_type.clone(),
        name: p.name.clone(),
        initial: None,
        span: Default::default(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance of one command run. Holds no timestamps, so identical runs
/// give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub backend: String,
    pub seed: u64,
    pub port_convention: PortConvention,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: String, backend: String, seed: u64, port_convention: PortConvention) -> Self {
        RunManifest {
            tool: "xgen".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash,
            backend,
            seed,
            port_convention,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.insert(name.into(), sha256_hex(bytes));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    reports: &'a [UnitReport],
    failures: &'a BTreeMap<String, String>,
    diagnostics: &'a [Diagnostic],
}

/// Writes `models/<Unit>.x`, `composition.json`, `transcripts.jsonl`,
/// `repair_reports.json` and `manifest.json` under `out`, replacing `.x`
/// files left in `models/` by earlier runs.
pub fn write_run(run: &PipelineRun, out: &Path, mut manifest: RunManifest) -> std::io::Result<RunManifest> {
    let models = out.join("models");
    fs::create_dir_all(&models)?;
    for entry in fs::read_dir(&models)? {
        let p = entry?.path();
        if p.extension().is_some_and(|x| x == "x") {
            fs::remove_file(p)?;
        }
    }
    let mut files: Vec<(String, String)> = run
        .units
        .iter()
        .map(|u| (format!("models/{}.x", u.name), print_unit(u)))
        .collect();
    files.push(("composition.json".into(), run.composition.to_json() + "\n"));
    let transcript: String = run
        .transcript
        .iter()
        .map(|t| serde_json::to_string(t).expect("entry serializes") + "\n")
        .collect();
    files.push(("transcripts.jsonl".into(), transcript));
    let report = RunReport {
        reports: &run.reports,
        failures: &run.failures,
        diagnostics: &run.diagnostics,
    };
    files.push((
        "repair_reports.json".into(),
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    ));
    for (name, text) in &files {
        fs::write(out.join(name), text)?;
        manifest.outputs.insert(name.clone(), sha256_hex(text.as_bytes()));
    }
    fs::write(out.join("manifest.json"), manifest.to_json())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{RuleClassifier, RuleTagger};
    use crate::fixtures;
    use crate::gen::{ScriptedBackend, StubBackend};
    use crate::model::Direction;

    fn pipeline<'a>(backend: &'a dyn GeneratorBackend, convention: PortConvention) -> Pipeline<'a> {
        let mut settings = PipelineSettings::default();
        settings.kinds.insert("Battery".into(), UnitKind::Continuous);
        settings.kinds.insert("Thrust".into(), UnitKind::Continuous);
        Pipeline {
            backend,
            tagger: &RuleTagger,
            classifier: &RuleClassifier,
            library: ExampleLibrary::new(fixtures::library_units(), 2),
            settings,
            convention,
            limits: Limits::default(),
        }
    }

    #[test]
    fn stub_run_rebuilds_the_reference() {
        let stub = StubBackend::new(fixtures::aircraft_reference());
        let run = pipeline(&stub, PortConvention::Dataflow)
            .run(fixtures::AIRCRAFT_DOCUMENT, &fixtures::aircraft_edits())
            .unwrap();
        assert!(run.failures.is_empty(), "{:?}", run.failures);
        let reference = fixtures::aircraft_reference();
        assert_eq!(run.units.len(), reference.len());
        for r in &reference {
            let g = run.unit(&r.name).unwrap_or_else(|| panic!("missing {}", r.name));
            assert_eq!(print_unit(g), print_unit(r), "{}", r.name);
        }
        assert!(run.reports.iter().all(|r| r.report.accepted && r.report.attempts.len() == 1));
    }

    #[test]
    fn runs_are_repeatable() {
        let stub = StubBackend::new(fixtures::aircraft_reference());
        let p = pipeline(&stub, PortConvention::Dataflow);
        let a = p.run(fixtures::AIRCRAFT_DOCUMENT, &fixtures::aircraft_edits()).unwrap();
        let b = p.run(fixtures::AIRCRAFT_DOCUMENT, &fixtures::aircraft_edits()).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let m = || RunManifest::new("pipeline", "h".into(), "stub".into(), 0, PortConvention::Dataflow);
        let ma = write_run(&a, dir.path(), m()).unwrap();
        let mb = write_run(&b, dir.path(), m()).unwrap();
        assert_eq!(ma, mb);
        assert!(dir.path().join("models/Battery.x").is_file());
        assert!(ma.outputs.contains_key("transcripts.jsonl"));
    }

    #[test]
    fn paper_literal_flips_port_directions() {
        let stub = StubBackend::new(fixtures::aircraft_reference());
        let edits = fixtures::aircraft_edits();
        let p = pipeline(&stub, PortConvention::Dataflow);
        let (_, comp, ..) = p.analyze(fixtures::AIRCRAFT_DOCUMENT, &edits).unwrap();
        assert_eq!(comp.root.children.len(), 6);
        let a = p.run(fixtures::AIRCRAFT_DOCUMENT, &edits).unwrap();
        let b = pipeline(&stub, PortConvention::PaperLiteral)
            .run(fixtures::AIRCRAFT_DOCUMENT, &edits)
            .unwrap();
        let dir = |run: &PipelineRun, unit: &str, port: &str| {
            run.unit(unit).and_then(|u| u.port(port)).and_then(|p| p.direction)
        };
        assert_eq!(dir(&a, "Battery", "volt"), Some(Direction::Output));
        assert_eq!(dir(&b, "Battery", "volt"), Some(Direction::Input));
    }

    #[test]
    fn failed_fill_is_reported_not_fatal() {
        let answers = fixtures::aircraft_reference()
            .into_iter()
            .find(|u| u.name == "AircraftElectricalSystem")
            .unwrap()
            .connections
            .iter()
            .map(|c| format!("{c}\n"))
            .collect::<String>();
        let backend = ScriptedBackend::new([answers]);
        let run = pipeline(&backend, PortConvention::Dataflow)
            .run(fixtures::AIRCRAFT_DOCUMENT, &fixtures::aircraft_edits())
            .unwrap();
        assert_eq!(run.units.len(), 1);
        assert_eq!(run.failures.len(), 6);
        assert!(run.diagnostics.iter().any(|d| d.code == "BackendFailure"));
    }

    #[test]
    fn no_relations_is_an_error() {
        let stub = StubBackend::new(fixtures::aircraft_reference());
        let e = pipeline(&stub, PortConvention::Dataflow)
            .run("The radar scans. The battery is charged.", &[])
            .unwrap_err();
        assert_eq!(e.code(), "NoRelations");
    }

    #[test]
    fn aliases_follow_rename_chains() {
        let edits = vec![
            Edit {
                op: EditOp::Rename,
                path: "s/power supply".into(),
                name: "Battery".into(),
            },
            Edit {
                op: EditOp::Rename,
                path: "s/Battery".into(),
                name: "Cell".into(),
            },
        ];
        let a = aliases(&edits);
        let names: Vec<&str> = a[&normalize("Cell")].iter().map(String::as_str).collect();
        assert_eq!(names, ["Battery", "power supply"]);
    }
}
