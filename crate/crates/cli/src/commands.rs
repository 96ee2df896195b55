use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use xgen_core::config::{load_sources, load_units, BackendConfig, RunConfig};
use xgen_core::diag::diagnostics_to_json;
use xgen_core::doc::{CorpusSlice, Edit};
use xgen_core::eval::{evaluate_batch, to_csv, Annotations, EvalReport, GeneratedSet, Reference, SourceFile};
use xgen_core::fixtures;
use xgen_core::gen::{build_mask_dataset, to_jsonl, ExampleLibrary, DEFAULT_PARAPHRASES};
use xgen_core::kernel::simulate;
use xgen_core::pipeline::{sha256_hex, write_run, Pipeline, RunManifest};
use xgen_core::{link_model_set, parse_source, Diagnostic, ModelUnit};

use crate::{Cli, Command, TraceFormat};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Check { paths, top } => check(cli, paths, top.as_deref()),
        Command::Simulate {
            paths,
            top,
            end_time,
            step,
            format,
            out,
        } => {
            let mut sim = cfg.evaluation.simulation.clone();
            if let Some(t) = end_time {
                sim.end_time = *t;
            }
            if let Some(s) = step {
                sim.continuous_step = *s;
            }
            sim.seed = cfg.seed;
            sim.validate().map_err(|e| anyhow!(e))?;
            let units = read_units(paths)?;
            let model = link_model_set(&units, top.as_deref()).map_err(|errs| {
                anyhow!(errs.iter().map(|e| e.to_diagnostic().to_string()).collect::<Vec<_>>().join("\n"))
            })?;
            let trace = simulate(&model, &sim).map_err(|f| anyhow!("{f}"))?;
            let text = match format {
                TraceFormat::Tsv => trace.to_tsv(),
                TraceFormat::Json => trace.to_json() + "\n",
            };
            emit(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Extract { document, edits, out } => extract(cli, &cfg, document, edits.as_deref(), out.as_deref()),
        Command::Pipeline { document, edits, out } => pipeline(cli, &cfg, document, edits.as_deref(), out),
        Command::Dataset {
            paths,
            paraphrases,
            out,
        } => {
            let pool: Vec<String> = match paraphrases {
                Some(p) => read(p)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect(),
                None => DEFAULT_PARAPHRASES.iter().map(|s| s.to_string()).collect(),
            };
            let units: Vec<ModelUnit> = read_units(paths)?.into_iter().filter(|u| u.kind.is_atomic()).collect();
            let samples = build_mask_dataset(&units, &pool, cfg.seed).map_err(|e| anyhow!("{e}"))?;
            emit(out.as_deref(), &to_jsonl(&samples))?;
            if out.is_some() && !cli.json {
                eprintln!("{} samples from {} units", samples.len(), units.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            models,
            reference,
            annotations,
            out,
        } => evaluate(cli, &cfg, models, reference, annotations.as_deref(), out.as_deref()),
        Command::Report { report, out } => {
            let text = read(report)?;
            let reports: Vec<EvalReport> = match serde_json::from_str::<Vec<EvalReport>>(&text) {
                Ok(v) => v,
                Err(_) => vec![serde_json::from_str(&text).with_context(|| format!("{} is not an evaluation report", report.display()))?],
            };
            let mut csv = String::new();
            for (i, r) in reports.iter().enumerate() {
                let table = to_csv(&r.tree);
                csv.push_str(if i == 0 { &table } else { table.split_once('\n').map_or("", |(_, rest)| rest) });
            }
            emit(out.as_deref(), &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.port_convention {
        cfg.port_convention = c;
    }
    if let Some(b) = &cli.backend {
        let mut flag = BackendConfig::from_flag(b, &cfg.backend)?;
        let cwd = std::env::current_dir()?;
        if let BackendConfig::Record { inner, .. } = &mut flag {
            anchor(inner, &cfg.base_dir);
        }
        anchor(&mut flag, &cwd);
        cfg.backend = flag;
    }
    Ok(cfg)
}

/// Resolves relative backend paths against `base`. Paths already absolute
/// are left alone.
fn anchor(b: &mut BackendConfig, base: &Path) {
    match b {
        BackendConfig::Stub { reference } => *reference = base.join(&*reference),
        BackendConfig::Replay { dir } => *dir = base.join(&*dir),
        BackendConfig::Record { dir, inner } => {
            *dir = base.join(&*dir);
            anchor(inner, base);
        }
        BackendConfig::Http { .. } => {}
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sources(paths: &[PathBuf]) -> Result<Vec<(PathBuf, SourceFile)>> {
    let mut out = Vec::new();
    for p in paths {
        for f in load_sources(p)? {
            let full = if p.is_dir() { p.join(&f.name) } else { p.clone() };
            out.push((full, f));
        }
    }
    Ok(out)
}

fn read_units(paths: &[PathBuf]) -> Result<Vec<ModelUnit>> {
    let mut units = Vec::new();
    for p in paths {
        units.extend(load_units(p)?);
    }
    Ok(units)
}

fn report_diagnostics(cli: &Cli, diags: &[Diagnostic]) {
    if cli.json {
        println!("{}", diagnostics_to_json(diags));
    } else {
        for d in diags {
            eprintln!("{d}");
        }
    }
}

fn check(cli: &Cli, paths: &[PathBuf], top: Option<&str>) -> Result<ExitCode> {
    let mut diags = Vec::new();
    let mut units = Vec::new();
    let mut origin: BTreeMap<String, PathBuf> = BTreeMap::new();
    for (path, f) in sources(paths)? {
        let out = parse_source(&f.text);
        diags.extend(out.errors.iter().map(|e| {
            let d = e.to_diagnostic();
            let span = d.span.clone().unwrap_or_default().with_file(&path);
            d.at(span)
        }));
        for u in out.units {
            origin.entry(u.name.clone()).or_insert_with(|| path.clone());
            units.push(u);
        }
    }
    let linked = if diags.is_empty() { Some(link_model_set(&units, top)) } else { None };
    match linked {
        None => {}
        Some(Ok(model)) => diags.extend(model.warnings),
        Some(Err(errs)) => diags.extend(errs.iter().map(|e| {
            let d = e.to_diagnostic();
            match origin.get(&e.unit) {
                Some(p) => {
                    let span = d.span.clone().unwrap_or_default().with_file(p);
                    d.at(span)
                }
                None => d,
            }
        })),
    }
    report_diagnostics(cli, &diags);
    let failed = diags.iter().any(Diagnostic::is_error);
    if !cli.json && !failed {
        eprintln!("ok: {} units", units.len());
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn load_edits(cfg: &RunConfig, flag: Option<&Path>) -> Result<(Vec<Edit>, Option<String>)> {
    let path = match (flag, &cfg.pipeline.edits) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => return Ok((Vec::new(), None)),
    };
    let text = read(&path)?;
    let edits = serde_json::from_str(&text).with_context(|| format!("{} is not a list of edits", path.display()))?;
    Ok((edits, Some(text)))
}

fn make_pipeline<'a>(
    cfg: &RunConfig,
    backend: &'a dyn xgen_core::gen::GeneratorBackend,
    tagger: &'a dyn xgen_core::doc::TaggerBackend,
    classifier: &'a dyn xgen_core::doc::ClassifierBackend,
) -> Result<(Pipeline<'a>, String)> {
    let (library, digest) = match &cfg.pipeline.examples {
        Some(p) => {
            let path = cfg.resolve(p);
            let files = load_sources(&path)?;
            let all: String = files.iter().map(|f| f.text.as_str()).collect();
            (load_units(&path)?, sha256_hex(all.as_bytes()))
        }
        None => {
            let all: String = fixtures::CORPUS.iter().map(|(_, t)| *t).collect();
            (fixtures::library_units(), sha256_hex(all.as_bytes()))
        }
    };
    Ok((
        Pipeline {
            backend,
            tagger,
            classifier,
            library: ExampleLibrary::new(library, cfg.pipeline.shots),
            settings: cfg.pipeline.clone(),
            convention: cfg.port_convention,
            limits: cfg.limits(),
        },
        digest,
    ))
}

fn extract(cli: &Cli, cfg: &RunConfig, document: &Path, edits: Option<&Path>, out: Option<&Path>) -> Result<ExitCode> {
    let text = read(document)?;
    let (edits, _) = load_edits(cfg, edits)?;
    let (tagger, classifier) = cfg.tagger.build();
    let stub = xgen_core::gen::StubBackend::default();
    let (p, _) = make_pipeline(cfg, &stub, tagger.as_ref(), classifier.as_ref())?;
    let (tagged, composition, slice, diags) = match p.analyze(&text, &edits) {
        Ok(x) => x,
        Err(e) => {
            report_diagnostics(cli, &[Diagnostic::error(e.code(), e.to_string())]);
            return Ok(ExitCode::from(1));
        }
    };
    let texts = |ids: &[usize]| -> Vec<String> { CorpusSlice::texts(&tagged, ids).into_iter().map(String::from).collect() };
    let corpus = serde_json::json!({
        "model_corpus": texts(&slice.model_corpus),
        "connection_corpus": texts(&slice.connection_corpus),
        "component_corpora": slice
            .component_corpora
            .iter()
            .map(|(k, v)| (k.clone(), texts(v)))
            .collect::<BTreeMap<_, _>>(),
    });
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("composition.json"), composition.to_json() + "\n")?;
            fs::write(dir.join("tagged.json"), serde_json::to_string_pretty(&tagged)? + "\n")?;
            fs::write(dir.join("corpus.json"), serde_json::to_string_pretty(&corpus)? + "\n")?;
        }
        None => println!("{}", composition.to_json()),
    }
    if !diags.is_empty() && !cli.json {
        report_diagnostics(cli, &diags);
    }
    Ok(ExitCode::SUCCESS)
}

fn pipeline(cli: &Cli, cfg: &RunConfig, document: &Path, edits: Option<&Path>, out: &Path) -> Result<ExitCode> {
    let doc = read(document)?;
    let (edits, edits_text) = load_edits(cfg, edits)?;
    let backend = cfg.backend.build(&cfg.base_dir)?;
    let (tagger, classifier) = cfg.tagger.build();
    let (p, library_digest) = make_pipeline(cfg, backend.as_ref(), tagger.as_ref(), classifier.as_ref())?;
    let run = match p.run(&doc, &edits) {
        Ok(r) => r,
        Err(e) => {
            report_diagnostics(cli, &[Diagnostic::error(e.code(), e.to_string())]);
            return Ok(ExitCode::from(1));
        }
    };
    fs::create_dir_all(out)?;
    let mut manifest = RunManifest::new("pipeline", cfg.hash(), backend.name(), cfg.seed, cfg.port_convention);
    manifest.add_input("document", doc.as_bytes());
    if let Some(t) = &edits_text {
        manifest.add_input("edits", t.as_bytes());
    }
    manifest.inputs.insert("examples".into(), library_digest);
    let manifest = write_run(&run, out, manifest)?;
    if cli.json {
        println!("{}", manifest.to_json().trim_end());
    } else {
        for d in &run.diagnostics {
            eprintln!("{d}");
        }
        eprintln!(
            "{} units written to {} ({} failed)",
            run.units.len(),
            out.join("models").display(),
            run.failures.len()
        );
    }
    Ok(if run.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// `dir/models` when a pipeline output directory is given.
fn model_path(p: &Path) -> PathBuf {
    let models = p.join("models");
    if models.is_dir() {
        models
    } else {
        p.to_path_buf()
    }
}

fn evaluate(
    cli: &Cli,
    cfg: &RunConfig,
    models: &[PathBuf],
    reference: &Path,
    annotations: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mut sim = cfg.evaluation.simulation.clone();
    sim.seed = cfg.seed;
    let reference = Reference::new(load_units(&model_path(reference))?, &sim).map_err(|e| anyhow!("{e}"))?;
    let shared: Option<Annotations> = match annotations {
        Some(p) => Some(serde_json::from_str(&read(p)?).with_context(|| format!("{} is not an annotations file", p.display()))?),
        None => None,
    };
    let mut sets = Vec::new();
    for m in models {
        let files = load_sources(&model_path(m))?;
        let own = m.join("annotations.json");
        let ann = match &shared {
            Some(a) => Some(a.clone()),
            None if own.is_file() => Some(serde_json::from_str(&read(&own)?)?),
            None => None,
        };
        sets.push((GeneratedSet::parse(&files), ann));
    }
    let reports = evaluate_batch(&sets, &reference, &cfg.evaluation).map_err(|e| anyhow!("{}: {e}", e.code()))?;
    let json = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports)?
    } + "\n";
    if let Some(p) = out {
        emit(Some(p), &json)?;
    }
    if cli.json {
        if out.is_none() {
            print!("{json}");
        }
    } else {
        for (m, r) in models.iter().zip(&reports) {
            println!("{}\t{:.6}", m.display(), r.score());
            for row in xgen_core::eval::flat_rows(&r.tree) {
                let flags = if row.flags.is_empty() { String::new() } else { format!("\t[{}]", row.flags) };
                println!("  {}\tA={:.6}\tP={:.6}{flags}", row.path, row.a, row.p);
            }
            for d in &r.diagnostics {
                eprintln!("{d}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
