//! Acceptance criteria. Prints one PASS or FAIL line per criterion and exits
//! nonzero when any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xgen_core::config::{load_units, RunConfig};
use xgen_core::doc::{relation, split_sentences, strip_markup, TaggerBackend, DEFAULT_GUARDS, RuleTagger};
use xgen_core::eval::{
    attenuation, behavior_similarity, entropy_weights, evaluate_model_set, Annotation, Annotations, AtomicWeights,
    EvalConfig, ErrorCounts, GeneratedSet, PenaltyConfig, Reference, SourceFile,
};
use xgen_core::fixtures::{self, AIRCRAFT_REFERENCE, AIRCRAFT_RELATIONS, CORPUS};
use xgen_core::gen::{mask_unit, unmask, ExampleLibrary, MASK};
use xgen_core::kernel::{simulate, EventKind, SimulationConfig, SimulationTrace, Value};
use xgen_core::names::normalize;
use xgen_core::pipeline::{write_run, Pipeline, PipelineRun, RunManifest};
use xgen_core::{link_model_set, parse_unit, parse_units, print_unit, UnitKind};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

const KEYWORDS: [&str; 34] = [
    "couple", "discrete", "continuous", "function", "import", "end", "connect", "when", "then", "initial", "state",
    "transform", "statehold", "input", "output", "and", "or", "not", "true", "false", "inf", "entry", "timeout",
    "der", "parameter:", "value:", "port:", "part:", "connection:", "equation:", "algorithm:", "state:", "to",
    "time",
];

fn round_trip() -> Outcome {
    let start = Instant::now();
    let units = fixtures::corpus_units();
    ensure(units.len() >= 25, || format!("only {} corpus units", units.len()))?;
    for u in &units {
        let text = print_unit(u);
        let again = parse_unit(&text).map_err(|e| format!("{}: reprint does not parse: {e}", u.name))?;
        ensure(&again == u, || format!("{}: parse(print(u)) differs from u", u.name))?;
        ensure(print_unit(&again) == text, || format!("{}: printing is not stable", u.name))?;
    }
    let words: BTreeSet<String> = CORPUS
        .iter()
        .chain(AIRCRAFT_REFERENCE.iter())
        .flat_map(|(_, t)| t.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == ':')))
        .map(String::from)
        .collect();
    let missing: Vec<&str> = KEYWORDS.iter().copied().filter(|k| !words.contains(*k)).collect();
    ensure(missing.is_empty(), || format!("keywords never used: {missing:?}"))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))
}

#[derive(Debug, Clone)]
struct Generator {
    holds: Vec<u32>,
    values: Vec<i64>,
}

#[derive(Debug, Clone)]
struct RandomModel {
    generators: Vec<Generator>,
    listener: Option<i64>,
    end_time: u32,
}

impl RandomModel {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let generators = (0..rng.random_range(1..=2))
            .map(|_| {
                let k = rng.random_range(1..=3);
                Generator {
                    holds: (0..k).map(|_| rng.random_range(1..=3)).collect(),
                    values: (0..k).map(|_| rng.random_range(0..=5)).collect(),
                }
            })
            .collect();
        RandomModel {
            generators,
            listener: rng.random_bool(0.7).then(|| rng.random_range(0..=6)),
            end_time: rng.random_range(1..=30),
        }
    }

    fn source(&self) -> String {
        let mut src = String::new();
        for (i, g) in self.generators.iter().enumerate() {
            src.push_str(&format!("discrete G{i}\nport:\n  output Int y;\nstate:\n"));
            for (s, (h, v)) in g.holds.iter().zip(&g.values).enumerate() {
                let init = if s == 0 { "initial " } else { "" };
                let next = (s + 1) % g.holds.len();
                src.push_str(&format!(
                    "{init}state S{s}\n  when entry() then\n    statehold({h});\n    y = {v};\n  end;\n  \
                     when timeout() then\n    transform to S{next};\n  end;\nend;\n"
                ));
            }
            src.push_str("end;\n\n");
        }
        let two = self.generators.len() == 2;
        if let Some(thr) = self.listener {
            let (w_port, sum) = if two { ("  input Int w;\n", "x + w") } else { ("", "x") };
            src.push_str(&format!(
                "discrete Listener\nvalue:\n  Int count = 0;\nport:\n  input Int x;\n{w_port}  output Int z;\n\
                 state:\ninitial state Wait\n  when entry() then\n    statehold(inf);\n  end;\n  \
                 when {sum} > {thr} then\n    count = count + 1;\n    z = count * 10 + {sum};\n    \
                 transform to Wait;\n  end;\nend;\nend;\n\n"
            ));
        }
        src.push_str("couple Top\n");
        for i in 0..self.generators.len() {
            src.push_str(&format!("  import G{i};\n"));
        }
        if self.listener.is_some() {
            src.push_str("  import Listener;\n");
        }
        src.push_str("part:\n");
        for i in 0..self.generators.len() {
            src.push_str(&format!("  G{i} g{i};\n"));
        }
        if self.listener.is_some() {
            src.push_str("  Listener l0;\n");
        }
        src.push_str("port:\n  Int out;\nconnection:\n");
        if self.listener.is_some() {
            src.push_str("  connect(g0.y, l0.x);\n");
            if two {
                src.push_str("  connect(g1.y, l0.w);\n");
            }
            src.push_str("  connect(l0.z, out);\n");
        } else {
            src.push_str("  connect(g0.y, out);\n");
        }
        src.push_str("end;\n");
        src
    }

    /// Flat event calendar over integer times.
    fn oracle(&self) -> Vec<(f64, String, String, String, EventKind)> {
        let mut out = Vec::new();
        let n = self.generators.len();
        let mut state = vec![0usize; n];
        let mut next: Vec<u32> = vec![0; n];
        let mut inputs = [0i64; 2];
        let mut count = 0i64;
        loop {
            let t = *next.iter().min().expect("a generator");
            if t > self.end_time {
                break;
            }
            let tf = t as f64;
            let mut delivered = false;
            for i in 0..n {
                if next[i] != t {
                    continue;
                }
                let g = &self.generators[i];
                if t > 0 {
                    state[i] = (state[i] + 1) % g.holds.len();
                }
                let v = g.values[state[i]];
                next[i] = t + g.holds[state[i]];
                out.push((tf, format!("Top.g{i}"), "y".into(), v.to_string(), EventKind::Output));
                if self.listener.is_some() {
                    let port = if i == 0 { "x" } else { "w" };
                    out.push((tf, "Top.l0".into(), port.into(), v.to_string(), EventKind::Input));
                    inputs[i] = v;
                    delivered = true;
                } else if i == 0 {
                    out.push((tf, "Top".into(), "out".into(), v.to_string(), EventKind::Input));
                }
            }
            if let (Some(thr), true) = (self.listener, delivered) {
                let sum = inputs[..n].iter().sum::<i64>();
                if sum > thr {
                    count += 1;
                    let z = (count * 10 + sum).to_string();
                    out.push((tf, "Top.l0".into(), "z".into(), z.clone(), EventKind::Output));
                    out.push((tf, "Top".into(), "out".into(), z, EventKind::Input));
                }
            }
        }
        out
    }
}

fn kernel_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_events = 0;
    for case in 0..50 {
        let mut m = RandomModel::draw(&mut rng);
        while m.end_time > 0 && m.oracle().len() > 20 {
            m.end_time -= 1;
        }
        let expected = m.oracle();
        max_events = max_events.max(expected.len());
        let units = parse_units(&m.source()).map_err(|e| format!("case {case}: {e}"))?;
        let linked = link_model_set(&units, Some("Top")).map_err(|e| format!("case {case}: {e:?}"))?;
        let cfg = SimulationConfig {
            end_time: m.end_time as f64,
            ..SimulationConfig::default()
        };
        let trace = simulate(&linked, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let got: Vec<_> = trace
            .events
            .iter()
            .map(|e| (e.time, e.part_path.clone(), e.port.clone(), e.value.to_string(), e.kind))
            .collect();
        ensure(got == expected, || format!("case {case} ({m:?}):\n kernel {got:?}\n oracle {expected:?}"))?;
    }
    ensure(max_events <= 20, || format!("{max_events} events in one case"))
}

fn aircraft_sim() -> SimulationConfig {
    SimulationConfig {
        end_time: 100.0,
        continuous_step: 0.1,
        ..SimulationConfig::default()
    }
}

fn battery_constant() -> Outcome {
    let linked = link_model_set(&fixtures::aircraft_reference(), None).map_err(|e| format!("{e:?}"))?;
    let trace = simulate(&linked, &aircraft_sim()).map_err(|e| e.to_string())?;
    let samples: Vec<_> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Output && e.key() == "AircraftElectricalSystem.battery.volt")
        .collect();
    ensure(samples.len() == 1001, || format!("{} battery samples", samples.len()))?;
    ensure(close(samples.last().unwrap().time, 100.0, 1e-9), || "last sample is not at t=100".into())?;
    let bad: Vec<_> = samples.iter().filter(|e| e.value != Value::Real(28.5)).collect();
    ensure(bad.is_empty(), || format!("{} samples differ from 28.5, first {:?}", bad.len(), bad.first()))
}

/// (class, instance, text, changed text) for each atomic reference unit.
const FAULTS: [(&str, &str, &str, &str); 6] = [
    ("AutoPilot", "auto_pilot", "2.5 * rudder_cmd", "2.0 * rudder_cmd"),
    ("BallisticSceneControl", "ballistic_scene_control", "0.4 * phase", "0.3 * phase"),
    ("Battery", "battery", "28.5", "24.0"),
    ("Control", "control", "statehold(10)", "statehold(12)"),
    ("Radar", "radar", "40.0 * time()", "45.0 * time()"),
    ("Thrust", "thrust", "0.5 * thrust_cmd", "0.6 * thrust_cmd"),
];

fn reference_text(class: &str) -> &'static str {
    AIRCRAFT_REFERENCE
        .iter()
        .find(|(f, _)| f.strip_suffix(".x") == Some(class))
        .map(|(_, t)| *t)
        .expect("reference file")
}

/// Kind and behavior length counted from the source text.
fn shape(text: &str) -> (bool, usize) {
    let continuous = text.starts_with("continuous ");
    let len = if continuous {
        let body = &text[text.find("equation:\n").expect("equations") + 10..];
        body.lines().take_while(|l| l.starts_with("  ")).count()
    } else {
        text.lines().filter(|l| l.starts_with("state ") || l.starts_with("initial state ")).count()
    };
    (continuous, len.max(1))
}

fn faulted_sources(value_faults: &BTreeSet<&str>) -> Vec<SourceFile> {
    AIRCRAFT_REFERENCE
        .iter()
        .map(|(name, text)| {
            let class = name.trim_end_matches(".x");
            let text = match FAULTS.iter().find(|f| f.0 == class && value_faults.contains(class)) {
                Some(f) => text.replacen(f.2, f.3, 1),
                None => text.to_string(),
            };
            SourceFile {
                name: name.to_string(),
                text,
            }
        })
        .collect()
}

fn trace_of(sources: &[SourceFile]) -> SimulationTrace {
    let units: Vec<_> = sources.iter().flat_map(|s| parse_units(&s.text).expect("parses")).collect();
    simulate(&link_model_set(&units, None).expect("links"), &aircraft_sim()).expect("simulates")
}

fn same_events(a: &SimulationTrace, b: &SimulationTrace) -> bool {
    a.events.len() == b.events.len()
        && a.events.iter().zip(&b.events).all(|(x, y)| {
            x.part_path == y.part_path && x.port == y.port && x.kind == y.kind && x.time == y.time && x.value == y.value
        })
}

fn faults_change_traces() -> Outcome {
    let clean = trace_of(&faulted_sources(&BTreeSet::new()));
    for f in FAULTS {
        ensure(reference_text(f.0).contains(f.2), || format!("`{}` not in {}", f.2, f.0))?;
        let t = trace_of(&faulted_sources(&BTreeSet::from([f.0])));
        ensure(!same_events(&clean, &t), || format!("changing {} leaves the trace unchanged", f.0))?;
    }
    Ok(())
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn metric_oracle() -> Outcome {
    faults_change_traces()?;
    let reference = Reference::new(fixtures::aircraft_reference(), &aircraft_sim()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..50 {
        let k = random_simplex(&mut rng, 4);
        let weights = AtomicWeights {
            k_h: k[0],
            k_d: k[1],
            k_s: k[2],
            k_e: k[3],
        };
        let c = random_simplex(&mut rng, FAULTS.len());
        let mut cfg = EvalConfig {
            atomic_weights: weights,
            simulation: aircraft_sim(),
            ..EvalConfig::default()
        };
        cfg.subsystem_weights = FAULTS.iter().zip(&c).map(|(f, w)| (f.1.to_string(), *w)).collect();

        let mut value_faults = BTreeSet::new();
        let mut m_of = BTreeMap::new();
        let mut n_of = BTreeMap::new();
        for f in FAULTS {
            if !rng.random_bool(0.5) {
                continue;
            }
            match rng.random_range(0..4) {
                0 => {
                    value_faults.insert(f.0);
                }
                1 => {
                    m_of.insert(f.0, rng.random_range(1..=3usize));
                }
                2 => {
                    n_of.insert(f.0, rng.random_range(1..=3usize));
                }
                _ => {
                    value_faults.insert(f.0);
                    m_of.insert(f.0, rng.random_range(1..=3usize));
                    n_of.insert(f.0, rng.random_range(1..=3usize));
                }
            }
        }
        let mut generated = GeneratedSet::parse(&faulted_sources(&value_faults));
        for (unit, m) in &m_of {
            generated.syntax_errors.insert(unit.to_string(), *m);
        }
        let mut annotations: Annotations = fixtures::aircraft_annotations();
        for (unit, n) in &n_of {
            annotations.insert(unit.to_string(), Annotation { n: *n, notes: String::new() });
        }
        let report = evaluate_model_set(&generated, &reference, Some(&annotations), &cfg).map_err(|e| e.to_string())?;

        let mut top = 0.0;
        for (f, ci) in FAULTS.iter().zip(&c) {
            let (continuous, len) = shape(reference_text(f.0));
            let m = m_of.get(f.0).copied().unwrap_or(0);
            let n = n_of.get(f.0).copied().unwrap_or(0);
            let expected = if !value_faults.contains(f.0) && m == 0 && n == 0 {
                1.0
            } else {
                let b = if continuous { weights.k_e } else { weights.k_s };
                let s = weights.k_h + weights.k_d + b;
                let alpha = 0.2f64.powf(1.0 / len as f64);
                let beta = 0.1f64.powf(1.0 / len as f64);
                let behavior = alpha.powi(m as i32) * beta.powi(n as i32);
                0.8 * (weights.k_h / s + weights.k_d / s + b / s * behavior)
            };
            let node = report.tree.find(f.0).ok_or_else(|| format!("case {case}: no node {}", f.0))?;
            ensure(close(node.a, expected, 1e-9), || {
                format!("case {case}: {} A = {} expected {expected} (m={m}, n={n}, len={len})", f.0, node.a)
            })?;
            top += ci * expected;
        }
        ensure(close(report.score(), top, 1e-9), || format!("case {case}: final {} expected {top}", report.score()))?;
    }
    Ok(())
}

fn attenuation_spots() -> Outcome {
    let (a4, _) = attenuation(0.2, 0.1, 1.0, 4);
    let (_, b2) = attenuation(0.2, 0.1, 1.0, 2);
    ensure(close(a4, 0.2f64.powf(0.25), 1e-12), || format!("alpha at len 4 = {a4}"))?;
    ensure(close(b2, 0.1f64.powf(0.5), 1e-12), || format!("beta at len 2 = {b2}"))?;
    let (a1, b1) = attenuation(0.2, 0.1, 1.0, 1);
    ensure(close(a1, 0.2, 1e-12) && close(b1, 0.1, 1e-12), || format!("len 1 gives ({a1}, {b1})"))
}

fn length_invariance() -> Outcome {
    let cfg = PenaltyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let (m, n, len) = (rng.random_range(0..5usize), rng.random_range(0..5usize), rng.random_range(1..7usize));
        let k = rng.random_range(1..=5usize);
        let base = behavior_similarity(&ErrorCounts { m, n, len }, &cfg);
        let scaled = behavior_similarity(
            &ErrorCounts {
                m: k * m,
                n: k * n,
                len: k * len,
            },
            &cfg,
        );
        let direct = 0.2f64.powf(m as f64 / len as f64) * 0.1f64.powf(n as f64 / len as f64);
        ensure(close(base, scaled, 1e-12) && close(base, direct, 1e-12), || {
            format!("case {case}: m={m} n={n} len={len} k={k}: {base} {scaled} {direct}")
        })?;
    }
    Ok(())
}

fn ewm_oracle(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let cols = rows[0].len();
    let d: Vec<f64> = (0..cols)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let s: f64 = col.iter().sum();
            let e: f64 = col.iter().map(|x| x / s).map(|p| if p > 0.0 { -p * p.ln() } else { 0.0 }).sum::<f64>() / n.ln();
            (1.0 - e).max(0.0)
        })
        .collect();
    let total: f64 = d.iter().sum();
    d.iter().map(|x| x / total).collect()
}

fn ewm_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..500 {
        let (n, m) = (rng.random_range(2..9), rng.random_range(2..7));
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
        let constant = rng.random_range(0..m);
        let level = rng.random_range(0.1..1.0);
        rows.iter_mut().for_each(|r| r[constant] = level);
        let (w, _) = entropy_weights(&rows).map_err(|e| format!("case {case}: {e}"))?;
        let sum: f64 = w.iter().sum();
        ensure(close(sum, 1.0, 1e-12), || format!("case {case}: weights sum to {sum}"))?;
        ensure(w[constant].abs() < 1e-12, || format!("case {case}: constant column weight {}", w[constant]))?;
        let oracle = ewm_oracle(&rows);
        ensure(w.iter().zip(&oracle).all(|(a, b)| close(*a, *b, 1e-9)), || format!("case {case}: {w:?} vs {oracle:?}"))?;

        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let (ws, _) = entropy_weights(&shuffled).map_err(|e| e.to_string())?;
        ensure(w.iter().zip(&ws).all(|(a, b)| close(*a, *b, 1e-12)), || format!("case {case}: row order matters"))?;

        let j = rng.random_range(0..m);
        let factor = rng.random_range(0.1..10.0);
        let scaled: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, x)| if i == j { x * factor } else { *x }).collect())
            .collect();
        let (wc, _) = entropy_weights(&scaled).map_err(|e| e.to_string())?;
        ensure(w.iter().zip(&wc).all(|(a, b)| close(*a, *b, 1e-9)), || format!("case {case}: column scale matters"))?;
    }
    Ok(())
}

fn aircraft_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/aircraft")
}

fn run_replay(cfg: &RunConfig, out: &Path) -> Result<PipelineRun, String> {
    let backend = cfg.backend.build(&cfg.base_dir).map_err(|e| e.to_string())?;
    let (tagger, classifier) = cfg.tagger.build();
    let examples = cfg.resolve(cfg.pipeline.examples.as_ref().ok_or("no examples configured")?);
    let pipeline = Pipeline {
        backend: backend.as_ref(),
        tagger: tagger.as_ref(),
        classifier: classifier.as_ref(),
        library: ExampleLibrary::new(load_units(&examples).map_err(|e| e.to_string())?, cfg.pipeline.shots),
        settings: cfg.pipeline.clone(),
        convention: cfg.port_convention,
        limits: cfg.limits(),
    };
    let run = pipeline
        .run(fixtures::AIRCRAFT_DOCUMENT, &fixtures::aircraft_edits())
        .map_err(|e| e.to_string())?;
    let manifest = RunManifest::new("pipeline", cfg.hash(), backend.name(), cfg.seed, cfg.port_convention);
    write_run(&run, out, manifest).map_err(|e| e.to_string())?;
    Ok(run)
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable") {
            let p = entry.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).expect("readable"));
            }
        }
    }
    out
}

fn replay_pipeline() -> Outcome {
    let cfg = RunConfig::load(&aircraft_dir().join("pipeline.toml")).map_err(|e| e.to_string())?;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let run = run_replay(&cfg, a.path())?;
    run_replay(&cfg, b.path())?;
    ensure(run.failures.is_empty(), || format!("failures: {:?}", run.failures))?;
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    ensure(fa == fb, || "two runs differ".into())?;
    for (name, text) in AIRCRAFT_REFERENCE {
        let got = fa.get(&Path::new("models").join(name)).ok_or_else(|| format!("{name} not generated"))?;
        ensure(got.as_slice() == text.as_bytes(), || format!("{name} differs from the reference"))?;
    }

    let reference = Reference::new(fixtures::aircraft_reference(), &cfg.evaluation.simulation).map_err(|e| e.to_string())?;
    let annotations = fixtures::aircraft_annotations();
    let sources: Vec<SourceFile> = run
        .units
        .iter()
        .map(|u| SourceFile {
            name: format!("{}.x", u.name),
            text: print_unit(u),
        })
        .collect();
    let clean = evaluate_model_set(&GeneratedSet::parse(&sources), &reference, Some(&annotations), &cfg.evaluation)
        .map_err(|e| e.to_string())?;
    ensure(clean.score() == 1.0, || format!("self score {}", clean.score()))?;

    for f in FAULTS {
        let faulted: Vec<SourceFile> = sources
            .iter()
            .map(|s| SourceFile {
                name: s.name.clone(),
                text: if s.name == format!("{}.x", f.0) { s.text.replacen(f.2, f.3, 1) } else { s.text.clone() },
            })
            .collect();
        let r = evaluate_model_set(&GeneratedSet::parse(&faulted), &reference, Some(&annotations), &cfg.evaluation)
            .map_err(|e| e.to_string())?;
        ensure(r.score() < 1.0, || format!("{} fault leaves the score at 1", f.0))?;
        for other in FAULTS {
            let a = r.tree.find(other.0).ok_or_else(|| format!("no node {}", other.0))?.a;
            if other.0 == f.0 {
                ensure(a <= 0.8, || format!("{} fault gives A = {a}", f.0))?;
            } else {
                ensure(a == 1.0, || format!("{} fault lowers {} to {a}", f.0, other.0))?;
            }
        }
    }
    Ok(())
}

fn mask_splice() -> Outcome {
    let mut checked = 0;
    for u in fixtures::corpus_units().iter().filter(|u| matches!(u.kind, UnitKind::Discrete | UnitKind::Continuous)) {
        let (input, output) = mask_unit(u).ok_or_else(|| format!("{} cannot be masked", u.name))?;
        let masks = input.lines().filter(|l| *l == MASK).count();
        ensure(masks == 2, || format!("{}: {masks} mask lines", u.name))?;
        let restored = unmask(&input, &output).ok_or_else(|| format!("{}: unmask failed", u.name))?;
        ensure(restored == print_unit(u), || format!("{}: restored text differs", u.name))?;
        let parsed = parse_unit(&restored).map_err(|e| format!("{}: {e}", u.name))?;
        ensure(&parsed == u, || format!("{}: restored unit differs", u.name))?;
        checked += 1;
    }
    ensure(checked > 0, || "no atomic units".into())
}

fn tagger_recall() -> Outcome {
    let sentences = split_sentences(&strip_markup(fixtures::AIRCRAFT_DOCUMENT), &DEFAULT_GUARDS);
    let tagged = RuleTagger.tag(&sentences).map_err(|e| e.to_string())?;
    let found: BTreeSet<(String, String)> = tagged
        .iter()
        .filter_map(relation)
        .flat_map(|(p, cs)| cs.into_iter().map(move |c| (normalize(&p), normalize(&c))))
        .collect();
    let missed: Vec<_> = AIRCRAFT_RELATIONS
        .iter()
        .filter(|(p, c)| !found.contains(&(normalize(p), normalize(c))))
        .collect();
    ensure(missed.is_empty(), || {
        format!("recall {}/{}; missed {missed:?}", AIRCRAFT_RELATIONS.len() - missed.len(), AIRCRAFT_RELATIONS.len())
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("parse-print round trip over the corpus", round_trip),
        ("kernel agrees with an event-calendar oracle on 50 random models", kernel_vs_oracle),
        ("battery voltage is 28.5 at every sample to t=100", battery_constant),
        ("scores of 50 fault-injected model sets match the metric oracle", metric_oracle),
        ("attenuation spot values", attenuation_spots),
        ("behavior similarity is invariant to length scaling", length_invariance),
        ("entropy weight properties on 500 matrices", ewm_properties),
        ("replay pipeline reproduces and scores the reference", replay_pipeline),
        ("masked samples splice back to their units", mask_splice),
        ("rule tagger recalls every aircraft containment relation", tagger_recall),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
