use std::collections::{BTreeMap, BTreeSet};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::kernel::{compare_traces, simulate, SimulationConfig, SimulationTrace};
use crate::model::{link_model_set, parse_source, Endpoint, ModelUnit, UnitKind};
use crate::names::{normalize, same_name};

use super::consistency::{consistency_tallies, find_unit, UnitTally};
use super::metrics::{
    atomic_similarity, behavior_similarity, couple_similarity, element_similarity, entropy_weights, match_f1,
    score_couple, simulation_correctness, AtomicParts, AtomicWeights, CoupleWeights, ErrorCounts, PenaltyConfig,
};
use super::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsSource {
    #[default]
    Explicit,
    Ewm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub penalties: PenaltyConfig,
    pub couple_weights: CoupleWeights,
    pub atomic_weights: AtomicWeights,
    /// Subsystem weights keyed by part instance or class name. Empty means
    /// uniform weights within each couple.
    pub subsystem_weights: BTreeMap<String, f64>,
    pub weights_source: WeightsSource,
    pub simulation: SimulationConfig,
    /// Absolute tolerance for trace comparison.
    pub tolerance: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            penalties: PenaltyConfig::default(),
            couple_weights: CoupleWeights::default(),
            atomic_weights: AtomicWeights::default(),
            subsystem_weights: BTreeMap::new(),
            weights_source: WeightsSource::Explicit,
            simulation: SimulationConfig::default(),
            tolerance: 1e-9,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.penalties.validate()?;
        self.couple_weights.validate()?;
        self.atomic_weights.validate()?;
        self.simulation.validate().map_err(EvalError::InvalidConfig)?;
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(EvalError::InvalidConfig(format!("tolerance {} must be nonnegative", self.tolerance)));
        }
        if self.subsystem_weights.values().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(EvalError::InvalidWeights("subsystem weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Manually identified simulation-logic errors of one unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub n: usize,
    #[serde(default)]
    pub notes: String,
}

/// Keyed by unit name.
pub type Annotations = BTreeMap<String, Annotation>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

/// Parsed generated units with syntax-error counts per unit.
#[derive(Debug, Clone, Default)]
pub struct GeneratedSet {
    pub units: Vec<ModelUnit>,
    pub syntax_errors: BTreeMap<String, usize>,
    pub diagnostics: Vec<Diagnostic>,
}

impl GeneratedSet {
    /// Parses with recovery. Each error is charged to the unit whose span
    /// contains it, or else to the closest unit above it in the same file.
    pub fn parse(files: &[SourceFile]) -> Self {
        let mut set = GeneratedSet::default();
        for f in files {
            let out = parse_source(&f.text);
            for e in &out.errors {
                let line = e.span.start_line;
                let owner = out
                    .units
                    .iter()
                    .find(|u| u.span.start_line <= line && line <= u.span.end_line)
                    .or_else(|| out.units.iter().rfind(|u| u.span.start_line <= line));
                match owner {
                    Some(u) => *set.syntax_errors.entry(u.name.clone()).or_default() += 1,
                    None => set.diagnostics.push(
                        Diagnostic::warning("UnattributedSyntaxError", format!("{}: {}", f.name, e))
                            .at(e.span.clone().with_file(&f.name)),
                    ),
                }
            }
            for u in out.units {
                if set.units.iter().any(|v| v.name == u.name) {
                    set.diagnostics
                        .push(Diagnostic::warning("DuplicateName", format!("{}: `{}` is defined again; ignored", f.name, u.name)));
                } else {
                    set.units.push(u);
                }
            }
        }
        set
    }

    pub fn from_units(units: Vec<ModelUnit>) -> Self {
        GeneratedSet {
            units,
            ..GeneratedSet::default()
        }
    }

    /// The named couple, else the only couple no other couple instantiates.
    fn top(&self, expected: &str) -> Option<&ModelUnit> {
        if let Some(u) = find_unit(&self.units, expected).filter(|u| u.kind == UnitKind::Couple) {
            return Some(u);
        }
        let roots: Vec<&ModelUnit> = self
            .units
            .iter()
            .filter(|u| u.kind == UnitKind::Couple)
            .filter(|u| {
                !self
                    .units
                    .iter()
                    .any(|c| c.parts.iter().any(|p| same_name(&p.class_name, &u.name)))
            })
            .collect();
        match roots.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }
}

/// Linked and simulated reference model set.
#[derive(Debug, Clone)]
pub struct Reference {
    pub units: Vec<ModelUnit>,
    pub top: String,
    pub trace: SimulationTrace,
}

impl Reference {
    pub fn new(units: Vec<ModelUnit>, simulation: &SimulationConfig) -> Result<Self, EvalError> {
        let linked = link_model_set(&units, None).map_err(|errs| {
            EvalError::BadReference(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
        })?;
        if linked.top_unit().kind != UnitKind::Couple {
            return Err(EvalError::BadReference(format!("top unit `{}` is not a couple", linked.top)));
        }
        let trace = simulate(&linked, simulation).map_err(|f| EvalError::BadReference(f.to_string()))?;
        Ok(Reference {
            top: linked.top.clone(),
            units,
            trace,
        })
    }

    fn unit(&self, name: &str) -> Option<&ModelUnit> {
        self.units.iter().find(|u| u.name == name)
    }
}

/// Component similarities of a node. Couples fill header, attribute and
/// connection; atomic units fill header, definition and state or equation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub header: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribute: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connection: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTree {
    /// Reference class name.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    /// Name of the generated unit scored here, if one was found.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
    pub kind: UnitKind,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "P")]
    pub p: f64,
    pub fully_correct: bool,
    pub components: Components,
    pub weights: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ErrorCounts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ScoreTree>,
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub final_score: Option<f64>,
}

impl ScoreTree {
    /// Score for couples, A for atomic units.
    pub fn value(&self) -> f64 {
        self.final_score.unwrap_or(self.a)
    }

    pub fn walk(&self) -> Vec<&ScoreTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    pub fn find(&self, name: &str) -> Option<&ScoreTree> {
        self.walk().into_iter().find(|t| t.name == name || t.instance.as_deref() == Some(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tree: ScoreTree,
    pub weights_source: WeightsSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl EvalReport {
    pub fn score(&self) -> f64 {
        self.tree.value()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
struct Assessed {
    name: String,
    instance: Option<String>,
    kind: UnitKind,
    generated: Option<String>,
    trace_ok: bool,
    tally: UnitTally,
    counts: ErrorCounts,
    f1_part: f64,
    f1_connection: f64,
    flags: Vec<String>,
    children: Vec<Assessed>,
}

impl Assessed {
    fn missing(name: &str, instance: Option<&str>, kind: UnitKind) -> Self {
        Assessed {
            name: name.to_string(),
            instance: instance.map(str::to_string),
            kind,
            generated: None,
            trace_ok: false,
            tally: UnitTally::default(),
            counts: ErrorCounts::default(),
            f1_part: 0.0,
            f1_connection: 0.0,
            flags: vec!["missing".into()],
            children: Vec::new(),
        }
    }

    fn atomic_parts(&self, cfg: &PenaltyConfig) -> AtomicParts {
        let b = behavior_similarity(&self.counts, cfg);
        AtomicParts {
            header: element_similarity(&self.tally.header, cfg.eps_header),
            definition: element_similarity(&self.tally.definition, cfg.eps_definition),
            state: (self.kind == UnitKind::Discrete).then_some(b),
            equation: (self.kind == UnitKind::Continuous).then_some(b),
        }
    }

    fn couple_parts(&self, cfg: &PenaltyConfig) -> (f64, f64, f64) {
        let header = element_similarity(&self.tally.header, cfg.eps_header);
        let port = element_similarity(&self.tally.port, cfg.eps_port);
        (header, self.f1_part * port, self.f1_connection)
    }

    fn atomics(&self) -> Vec<&Assessed> {
        let mut out = Vec::new();
        for c in &self.children {
            if c.generated.is_some() && c.kind.is_atomic() {
                out.push(c);
            }
            out.extend(c.atomics());
        }
        out
    }
}

struct Ctx<'a> {
    generated: &'a GeneratedSet,
    reference: &'a Reference,
    annotations: Option<&'a Annotations>,
    tallies: BTreeMap<String, UnitTally>,
    cfg: &'a EvalConfig,
    /// Generated names that match some reference unit by name.
    reserved: BTreeSet<String>,
    taken: BTreeSet<String>,
}

fn endpoint_key(owner: &ModelUnit, ep: &Endpoint) -> (String, String) {
    let class = match &ep.part {
        Some(inst) => match owner.part(inst) {
            Some(p) => normalize(&p.class_name),
            None => format!("?{}", normalize(inst)),
        },
        None => String::new(),
    };
    (class, normalize(&ep.port))
}

fn connection_set(u: &ModelUnit) -> BTreeSet<(String, String, String, String)> {
    u.connections
        .iter()
        .map(|c| {
            let (a, b) = endpoint_key(u, &c.from);
            let (x, y) = endpoint_key(u, &c.to);
            (a, b, x, y)
        })
        .collect()
}

impl Ctx<'_> {
    fn find_generated(&mut self, r: &ModelUnit) -> Option<&ModelUnit> {
        let units = &self.generated.units;
        if let Some(u) = find_unit(units, &r.name) {
            return Some(u);
        }
        let ref_ports: BTreeSet<String> = r.ports.iter().map(|p| normalize(&p.name)).collect();
        let best = units
            .iter()
            .filter(|u| u.kind == r.kind && !self.reserved.contains(&u.name) && !self.taken.contains(&u.name))
            .map(|u| (u.ports.iter().filter(|p| ref_ports.contains(&normalize(&p.name))).count(), u))
            .filter(|(n, _)| *n > 0)
            .fold(None::<(usize, &ModelUnit)>, |acc, (n, u)| match acc {
                Some((m, _)) if m >= n => acc,
                _ => Some((n, u)),
            })?;
        self.taken.insert(best.1.name.clone());
        Some(best.1)
    }

    fn splice_matches(&self, reference_name: &str, unit: &ModelUnit) -> bool {
        let mut spliced: Vec<ModelUnit> = self
            .reference
            .units
            .iter()
            .filter(|u| u.name != reference_name)
            .cloned()
            .collect();
        let mut own = unit.clone();
        own.name = reference_name.to_string();
        spliced.push(own);
        for f in self.generated.units.iter().filter(|u| u.kind == UnitKind::Function) {
            if !spliced.iter().any(|u| u.name == f.name) {
                spliced.push(f.clone());
            }
        }
        let Ok(linked) = link_model_set(&spliced, Some(&self.reference.top)) else {
            return false;
        };
        let Ok(trace) = simulate(&linked, &self.cfg.simulation) else {
            return false;
        };
        compare_traces(&trace, &self.reference.trace, self.cfg.tolerance).is_ok_and(|d| d.all_match())
    }

    fn counts(&self, reference_name: &str, unit: &ModelUnit, flags: &mut Vec<String>) -> ErrorCounts {
        let len = match unit.kind {
            UnitKind::Discrete => unit.states.as_ref().map_or(0, |s| s.states.len()),
            UnitKind::Continuous => unit.equations.len(),
            _ => 0,
        };
        let n = match self
            .annotations
            .and_then(|a| a.get(reference_name).or_else(|| a.get(&unit.name)))
        {
            Some(a) => a.n,
            None => {
                flags.push("n_assumed_zero".into());
                0
            }
        };
        ErrorCounts {
            m: self.generated.syntax_errors.get(&unit.name).copied().unwrap_or(0),
            n,
            len: len.max(1),
        }
    }

    fn assess(&mut self, r: &ModelUnit, generated: Option<&ModelUnit>, instance: Option<&str>) -> Assessed {
        let Some(g) = generated else {
            return Assessed::missing(&r.name, instance, r.kind);
        };
        let g = g.clone();
        if g.kind.is_atomic() != r.kind.is_atomic() {
            let mut a = Assessed::missing(&r.name, instance, r.kind);
            a.flags = vec!["kind_mismatch".into()];
            return a;
        }
        let mut flags = Vec::new();
        if g.kind != r.kind {
            flags.push("kind_mismatch".into());
        }
        let counts = self.counts(&r.name, &g, &mut flags);
        let trace_ok = self.splice_matches(&r.name, &g);
        let tally = self.tallies.get(&g.name).copied().unwrap_or_default();
        let mut out = Assessed {
            name: r.name.clone(),
            instance: instance.map(str::to_string),
            kind: g.kind,
            generated: Some(g.name.clone()),
            trace_ok,
            tally,
            counts,
            f1_part: 0.0,
            f1_connection: 0.0,
            flags,
            children: Vec::new(),
        };
        if r.kind == UnitKind::Couple {
            let gen_parts: BTreeSet<String> = g.parts.iter().map(|p| normalize(&p.class_name)).collect();
            let ref_parts: BTreeSet<String> = r.parts.iter().map(|p| normalize(&p.class_name)).collect();
            out.f1_part = match_f1(&gen_parts, &ref_parts);
            out.f1_connection = match_f1(&connection_set(&g), &connection_set(r));
            for part in &r.parts {
                let Some(child_ref) = self.reference.unit(&part.class_name).cloned() else {
                    continue;
                };
                let child_gen = self.find_generated(&child_ref).cloned();
                let child = self.assess(&child_ref, child_gen.as_ref(), Some(&part.instance_name));
                out.children.push(child);
            }
        }
        out
    }
}

fn assess_set(
    generated: &GeneratedSet,
    reference: &Reference,
    annotations: Option<&Annotations>,
    cfg: &EvalConfig,
) -> Result<(Assessed, Vec<Diagnostic>), EvalError> {
    if generated.units.iter().all(|u| u.kind == UnitKind::Function) {
        return Err(EvalError::NoModels);
    }
    let mut diagnostics = generated.diagnostics.clone();
    if annotations.is_none() {
        diagnostics.push(Diagnostic::warning(
            "AnnotationsMissing",
            "no annotations given; simulation-logic error counts are assumed to be 0",
        ));
    }
    let top_ref = reference.unit(&reference.top).expect("reference top exists");
    let top_gen = generated.top(&reference.top);
    let tallies = consistency_tallies(&generated.units, top_gen.map(|u| u.name.as_str()), Some(&reference.top));
    let reserved = generated
        .units
        .iter()
        .filter(|g| reference.units.iter().any(|r| same_name(&r.name, &g.name)))
        .map(|g| g.name.clone())
        .collect();
    let mut ctx = Ctx {
        generated,
        reference,
        annotations,
        tallies,
        cfg,
        reserved,
        taken: BTreeSet::new(),
    };
    if let Some(t) = top_gen {
        ctx.taken.insert(t.name.clone());
    }
    let tree = ctx.assess(top_ref, top_gen, None);
    Ok((tree, diagnostics))
}

struct Weights {
    couple: CoupleWeights,
    atomic: AtomicWeights,
    /// Top-level subsystem weights replacing the configured ones.
    top_override: Option<Vec<f64>>,
}

fn subsystem_weights(node: &Assessed, configured: &BTreeMap<String, f64>) -> Result<Vec<f64>, EvalError> {
    let k = node.children.len();
    if configured.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let found: Vec<Option<f64>> = node
        .children
        .iter()
        .map(|c| {
            c.instance
                .as_ref()
                .and_then(|i| configured.get(i))
                .or_else(|| configured.get(&c.name))
                .copied()
        })
        .collect();
    if found.iter().all(Option::is_none) {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let ws: Vec<f64> = found
        .iter()
        .zip(&node.children)
        .map(|(w, c)| w.ok_or_else(|| EvalError::InvalidWeights(format!("no subsystem weight for `{}` in `{}`", c.name, node.name))))
        .collect::<Result<_, _>>()?;
    let s: f64 = ws.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(EvalError::InvalidWeights(format!("subsystem weights of `{}` sum to {s}, not 1", node.name)));
    }
    Ok(ws)
}

fn score(node: &Assessed, w: &Weights, cfg: &EvalConfig, top: bool) -> Result<ScoreTree, EvalError> {
    let pen = &cfg.penalties;
    let mut tree = ScoreTree {
        name: node.name.clone(),
        instance: node.instance.clone(),
        generated: node.generated.clone(),
        kind: node.kind,
        a: 0.0,
        p: 0.0,
        fully_correct: false,
        components: Components::default(),
        weights: BTreeMap::new(),
        counts: None,
        flags: node.flags.clone(),
        children: Vec::new(),
        final_score: None,
    };
    if node.generated.is_none() {
        if node.kind == UnitKind::Couple {
            tree.final_score = Some(0.0);
        }
        return Ok(tree);
    }
    let t = &node.tally;
    tree.fully_correct =
        node.trace_ok && node.counts.m == 0 && node.counts.n == 0 && t.header.ie + t.port.ie + t.definition.ie == 0;
    if node.kind == UnitKind::Couple {
        let (header, attribute, connection) = node.couple_parts(pen);
        tree.components = Components {
            header: Some(header),
            attribute: Some(attribute),
            connection: Some(connection),
            ..Components::default()
        };
        tree.p = couple_similarity(header, node.f1_part, element_similarity(&node.tally.port, pen.eps_port), node.f1_connection, &w.couple);
        tree.counts = Some(node.counts);
        tree.a = simulation_correctness(tree.fully_correct, tree.p, pen.epsilon);
        tree.weights = BTreeMap::from([
            ("k_h".to_string(), w.couple.k_h),
            ("k_a".to_string(), w.couple.k_a),
            ("k_c".to_string(), w.couple.k_c),
        ]);
        for c in &node.children {
            tree.children.push(score(c, w, cfg, false)?);
        }
        let cs = match (&w.top_override, top) {
            (Some(o), true) => o.clone(),
            _ => subsystem_weights(node, &cfg.subsystem_weights)?,
        };
        for (c, wt) in tree.children.iter().zip(&cs) {
            tree.weights.insert(c.instance.clone().unwrap_or_else(|| c.name.clone()), *wt);
        }
        let values: Vec<f64> = tree.children.iter().map(ScoreTree::value).collect();
        tree.final_score = Some(if values.is_empty() {
            tree.a
        } else {
            score_couple(tree.a, &cs, &values)?
        });
    } else {
        let parts = node.atomic_parts(pen);
        tree.components = Components {
            header: Some(parts.header),
            definition: Some(parts.definition),
            state: parts.state,
            equation: parts.equation,
            ..Components::default()
        };
        tree.p = atomic_similarity(&parts, node.kind, &w.atomic)?;
        tree.counts = Some(node.counts);
        tree.a = simulation_correctness(tree.fully_correct, tree.p, pen.epsilon);
        let (h, d, b) = w.atomic.active(node.kind);
        let bk = if node.kind == UnitKind::Continuous { "k_e" } else { "k_s" };
        tree.weights = BTreeMap::from([("k_h".to_string(), h), ("k_d".to_string(), d), (bk.to_string(), b)]);
    }
    Ok(tree)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Entropy weights for the component groups, then for the top-level
/// subsystems, each over the batch's rows.
fn ewm_weights(assessed: &[Assessed], cfg: &EvalConfig, diags: &mut Vec<Diagnostic>) -> Result<Weights, EvalError> {
    let pen = &cfg.penalties;
    let atomic_rows: Vec<Vec<f64>> = assessed
        .iter()
        .map(|a| {
            let parts: Vec<AtomicParts> = a.atomics().iter().map(|u| u.atomic_parts(pen)).collect();
            vec![
                mean(parts.iter().map(|p| p.header)),
                mean(parts.iter().map(|p| p.definition)),
                mean(parts.iter().filter_map(|p| p.state)),
                mean(parts.iter().filter_map(|p| p.equation)),
            ]
        })
        .collect();
    let couple_rows: Vec<Vec<f64>> = assessed
        .iter()
        .map(|a| {
            let (h, at, c) = a.couple_parts(pen);
            vec![h, at, c]
        })
        .collect();
    let collect = |rows: &[Vec<f64>], what: &str, diags: &mut Vec<Diagnostic>| -> Result<Vec<f64>, EvalError> {
        let (w, d) = entropy_weights(rows)?;
        diags.extend(d.into_iter().map(|mut x| {
            x.message = format!("{what}: {}", x.message);
            x
        }));
        Ok(w)
    };
    let aw = collect(&atomic_rows, "atomic component weights", diags)?;
    let cw = collect(&couple_rows, "couple component weights", diags)?;
    let mut w = Weights {
        couple: CoupleWeights { k_h: cw[0], k_a: cw[1], k_c: cw[2] },
        atomic: AtomicWeights { k_h: aw[0], k_d: aw[1], k_s: aw[2], k_e: aw[3] },
        top_override: None,
    };
    if w.atomic.k_h + w.atomic.k_d + w.atomic.k_s <= 0.0 || w.atomic.k_h + w.atomic.k_d + w.atomic.k_e <= 0.0 {
        diags.push(Diagnostic::warning(
            "EwmFallback",
            "entropy weights leave an atomic kind without weight; configured atomic weights are used",
        ));
        w.atomic = cfg.atomic_weights;
    }
    if assessed[0].children.is_empty() {
        return Ok(w);
    }
    let trees: Vec<ScoreTree> = assessed.iter().map(|a| score(a, &w, cfg, true)).collect::<Result<_, _>>()?;
    let rows: Vec<Vec<f64>> = trees.iter().map(|t| t.children.iter().map(ScoreTree::value).collect()).collect();
    w.top_override = Some(collect(&rows, "subsystem weights", diags)?);
    Ok(w)
}

/// Scores a batch of generated sets against one reference. With
/// [`WeightsSource::Ewm`] and at least two sets, component and top-level
/// subsystem weights come from the entropy weights of the batch; otherwise
/// the configured weights are used.
pub fn evaluate_batch(
    sets: &[(GeneratedSet, Option<Annotations>)],
    reference: &Reference,
    cfg: &EvalConfig,
) -> Result<Vec<EvalReport>, EvalError> {
    cfg.validate()?;
    if sets.is_empty() {
        return Err(EvalError::NoModels);
    }
    let assessed: Vec<Result<(Assessed, Vec<Diagnostic>), EvalError>> = thread::scope(|s| {
        let handles: Vec<_> = sets
            .iter()
            .map(|(g, a)| s.spawn(move || assess_set(g, reference, a.as_ref(), cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("assessment thread")).collect()
    });
    let (assessed, mut diags): (Vec<Assessed>, Vec<Vec<Diagnostic>>) = assessed.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    let mut shared = Vec::new();
    let (weights, source) = match cfg.weights_source {
        WeightsSource::Ewm if assessed.len() >= 2 => (ewm_weights(&assessed, cfg, &mut shared)?, WeightsSource::Ewm),
        WeightsSource::Ewm => {
            shared.push(Diagnostic::warning(
                "EwmFallback",
                "entropy weighting needs at least two model sets; configured weights are used",
            ));
            (explicit(cfg), WeightsSource::Explicit)
        }
        WeightsSource::Explicit => (explicit(cfg), WeightsSource::Explicit),
    };
    assessed
        .iter()
        .zip(diags.iter_mut())
        .map(|(a, d)| {
            let mut diagnostics = std::mem::take(d);
            diagnostics.extend(shared.iter().cloned());
            Ok(EvalReport {
                tree: score(a, &weights, cfg, true)?,
                weights_source: source,
                diagnostics,
            })
        })
        .collect()
}

fn explicit(cfg: &EvalConfig) -> Weights {
    Weights {
        couple: cfg.couple_weights,
        atomic: cfg.atomic_weights,
        top_override: None,
    }
}

/// Scores one generated set; entropy weighting falls back to the
/// configured weights.
pub fn evaluate_model_set(
    generated: &GeneratedSet,
    reference: &Reference,
    annotations: Option<&Annotations>,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let mut reports = evaluate_batch(&[(generated.clone(), annotations.cloned())], reference, cfg)?;
    Ok(reports.remove(0))
}
