use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::doc::{BackendError, ComponentNode};
use crate::model::{
    link_model_set, parse_unit, print_unit, Connection, Endpoint, LinkErrorKind, ModelUnit, ParseError, Section,
    UnitKind,
};
use crate::names::{normalize, same_name, to_class_ident, to_instance_ident, words};
use crate::template::{Hole, PortTypeReasoner, TemplateInstance};

use super::backend::{GeneratorBackend, Limits};
use super::extract::{extract_code, extract_connections};
use super::prompt::{build_state_prompt, ExampleLibrary, Label, PromptBundle, Purpose, Role, X_BNF};
use super::GenError;

/// Diagnostic families a repair note can address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteClass {
    Syntax,
    UnknownIdentifier,
    MissingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub generated_text: String,
    pub diagnostics: Vec<Diagnostic>,
    pub note_added: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub attempts: Vec<Attempt>,
    pub accepted: bool,
}

/// Why an answer was rejected.
pub struct Rejection {
    pub class: NoteClass,
    pub diagnostics: Vec<Diagnostic>,
}

fn note_for(class: NoteClass, target: &str, diagnostics: &[Diagnostic]) -> String {
    let first = diagnostics.first().map_or(String::new(), |d| d.message.clone());
    match class {
        NoteClass::Syntax => format!(
            "The previous output was not valid X language code ({first}). Output only the code for the keyword {target}, ending every statement with `;` and every block with `end;`."
        ),
        NoteClass::UnknownIdentifier => {
            let names: Vec<&str> = diagnostics.iter().map(|d| d.message.as_str()).collect();
            format!(
                "The previous output used undeclared identifiers ({}). Use only declared parameters, values and ports, and declare new variables in the keyword Value.",
                names.join("; ")
            )
        }
        NoteClass::MissingSection => format!(
            "The previous output did not contain the keyword {target}. Start the output with `{}:`.",
            target.to_lowercase()
        ),
    }
}

/// Calls the backend until `validate` accepts, adding one note line per
/// rejection. At most `budget` calls are made.
pub fn repair_loop<T>(
    base: &PromptBundle,
    initial_notes: &[String],
    target: &str,
    backend: &dyn GeneratorBackend,
    limits: &Limits,
    budget: usize,
    mut validate: impl FnMut(&str) -> Result<T, Rejection>,
) -> Result<(T, RepairReport), GenError> {
    let mut notes: Vec<String> = initial_notes.to_vec();
    let mut report = RepairReport::default();
    for i in 0..budget {
        let bundle = base.with_notes(&notes);
        let text = backend.complete(&bundle, limits).map_err(GenError::Backend)?;
        match validate(&text) {
            Ok(v) => {
                report.attempts.push(Attempt {
                    generated_text: text,
                    diagnostics: Vec::new(),
                    note_added: None,
                });
                report.accepted = true;
                return Ok((v, report));
            }
            Err(r) => {
                let note = (i + 1 < budget).then(|| note_for(r.class, target, &r.diagnostics));
                if let Some(n) = &note {
                    notes.push(n.clone());
                }
                report.attempts.push(Attempt {
                    generated_text: text,
                    diagnostics: r.diagnostics,
                    note_added: note,
                });
            }
        }
    }
    Err(GenError::Exhausted { report })
}

fn syntax(e: ParseError) -> Rejection {
    Rejection {
        class: NoteClass::Syntax,
        diagnostics: vec![e.to_diagnostic()],
    }
}

/// Links `unit` with the library functions; unknown functions are left for
/// [`generate_missing_functions`].
fn check_links(unit: &ModelUnit, functions: &[&ModelUnit]) -> Result<(), Rejection> {
    let mut set: Vec<ModelUnit> = vec![unit.clone()];
    set.extend(functions.iter().filter(|f| f.name != unit.name).map(|f| (*f).clone()));
    let Err(errors) = link_model_set(&set, Some(&unit.name)) else {
        return Ok(());
    };
    let errors: Vec<_> = errors
        .into_iter()
        .filter(|e| !matches!(e.kind, LinkErrorKind::UnknownFunction(_)))
        .collect();
    if errors.is_empty() {
        return Ok(());
    }
    let unknown: Vec<Diagnostic> = errors
        .iter()
        .filter(|e| matches!(e.kind, LinkErrorKind::UnknownIdentifier(_)))
        .map(|e| e.to_diagnostic())
        .collect();
    if !unknown.is_empty() {
        return Err(Rejection {
            class: NoteClass::UnknownIdentifier,
            diagnostics: unknown,
        });
    }
    Err(Rejection {
        class: NoteClass::Syntax,
        diagnostics: errors.iter().map(|e| e.to_diagnostic()).collect(),
    })
}

/// Places `code` into the skeleton at `hole` and parses the result. A
/// complete unit in `code` contributes only its behavior sections.
pub fn splice(skeleton: &TemplateInstance, hole: Hole, code: &str) -> Result<ModelUnit, Rejection> {
    let first = code.trim_start();
    let is_unit = ["discrete", "continuous", "function", "couple"]
        .iter()
        .any(|k| first.strip_prefix(k).is_some_and(|r| r.starts_with(char::is_whitespace)));
    let donor_text = if is_unit {
        let donor = parse_unit(code).map_err(syntax)?;
        let mut sections = String::new();
        for sec in [Section::Value, hole.section()] {
            if donor.section_present(sec) {
                sections.push_str(&crate::model::print_section(&donor, sec));
            }
        }
        sections
    } else {
        code.to_string()
    };
    let kw = hole.section().keyword();
    let mut body = donor_text.trim_end().to_string();
    if !body.trim_start().starts_with(&format!("{kw}:")) && !body.contains(&format!("\n{kw}:")) {
        if body.trim_start().starts_with("value:") {
            return Err(Rejection {
                class: NoteClass::MissingSection,
                diagnostics: vec![Diagnostic::error("MissingSection", format!("no `{kw}:` section in the output"))],
            });
        }
        body = format!("{kw}:\n{body}");
    }
    let mut text = skeleton.print();
    for h in &skeleton.holes {
        let block = format!("{}:\n  {}\n", h.section().keyword(), h.marker());
        let replacement = if *h == hole { format!("{body}\n") } else { String::new() };
        text = text.replace(&block, &replacement);
    }
    let unit = parse_unit(&text).map_err(syntax)?;
    if !unit.section_present(hole.section()) {
        return Err(Rejection {
            class: NoteClass::MissingSection,
            diagnostics: vec![Diagnostic::error("MissingSection", format!("the `{kw}:` section is empty"))],
        });
    }
    Ok(unit)
}

/// Texts and few-shot examples shared by hole fills.
#[derive(Debug, Clone, Default)]
pub struct FillContext {
    pub couple_text: String,
    pub atomic_text: String,
    pub notes: Vec<String>,
    pub library: ExampleLibrary,
}

/// Generates the code for `hole`, splices it into the skeleton and checks
/// that the unit parses and links, retrying with notes up to `budget`
/// times. A value section in the answer fills the value hole as well.
pub fn fill_hole(
    skeleton: &TemplateInstance,
    hole: Hole,
    ctx: &FillContext,
    backend: &dyn GeneratorBackend,
    limits: &Limits,
    budget: usize,
) -> Result<(ModelUnit, RepairReport), GenError> {
    if !skeleton.holes.contains(&hole) {
        return Err(GenError::HoleNotOpen(hole));
    }
    let base = build_state_prompt(&ctx.couple_text, &ctx.atomic_text, skeleton, &[], &ctx.library);
    let base = PromptBundle {
        purpose: Purpose::Hole {
            unit: skeleton.filled.name.clone(),
            hole,
        },
        ..base
    };
    let functions = ctx.library.functions();
    let target = match hole {
        Hole::FunctionBody => "Algorithm",
        h => h.name(),
    };
    repair_loop(&base, &ctx.notes, target, backend, limits, budget, |text| {
        let code = extract_code(text).ok_or_else(|| Rejection {
            class: NoteClass::MissingSection,
            diagnostics: vec![Diagnostic::error("NoCode", "no code found in the output")],
        })?;
        let unit = splice(skeleton, hole, &code)?;
        check_links(&unit, &functions)?;
        let mut inst = skeleton.clone();
        inst.fill(hole, &unit).expect("hole checked open");
        for extra in inst.holes.clone() {
            inst.fill(extra, &unit).expect("open hole");
        }
        Ok(inst.close().expect("all holes filled"))
    })
}

/// Resolves a name from model output to an instance name of the couple.
fn resolve_part(name: &str, parts: &BTreeMap<String, String>) -> Option<String> {
    parts.get(&normalize(name)).cloned()
}

/// Asks the backend for the connections among the children of `node`,
/// keeping only lines that name known parts.
pub fn infer_connections(
    connection_corpus: &[String],
    node: &ComponentNode,
    backend: &dyn GeneratorBackend,
    limits: &Limits,
    budget: usize,
) -> Result<(Vec<Connection>, Vec<Diagnostic>), GenError> {
    if node.children.is_empty() {
        return Err(GenError::EmptyComposition);
    }
    if connection_corpus.is_empty() {
        return Ok((
            Vec::new(),
            vec![Diagnostic::warning("EmptyConnectionCorpus", "no connection sentences; the couple has no connections")],
        ));
    }
    let mut parts: BTreeMap<String, String> = BTreeMap::new();
    let mut listing = String::new();
    for c in &node.children {
        let instance = to_instance_ident(&c.name);
        let class = to_class_ident(&c.name);
        for alias in [&c.name, &instance, &class] {
            parts.insert(normalize(alias), instance.clone());
        }
        listing.push_str(&format!("{instance}: {class} ({})\n", c.name));
    }
    let system = to_class_ident(&node.name);
    let mut base = PromptBundle::new(Purpose::Connections { system: system.clone() });
    base.push(
        Role::User,
        Label::Introduction,
        format!(
            "Based on the connection descriptions and the composition of the system {system}, list the connections between its subsystems. \
             Write one line per connection in the form connect(part1.port1, part2.port2), where data flows from part1 to part2, using only the part names listed."
        ),
    );
    base.push(Role::User, Label::CoupleText, listing);
    base.push(Role::User, Label::Input, connection_corpus.join("\n"));
    repair_loop(&base, &[], "Connection", backend, limits, budget, |text| {
        let (found, bad) = extract_connections(text);
        if found.is_empty() {
            return Err(Rejection {
                class: NoteClass::Syntax,
                diagnostics: vec![Diagnostic::error("UnparseableOutput", "no `connect(a.p, b.q)` line in the output")],
            });
        }
        let mut diags: Vec<Diagnostic> = bad
            .iter()
            .map(|l| Diagnostic::warning("UnparseableLine", format!("ignored `{l}`")))
            .collect();
        let mut out: Vec<Connection> = Vec::new();
        for c in found {
            let map = |ep: &Endpoint| -> Result<Endpoint, String> {
                match &ep.part {
                    None => Ok(ep.clone()),
                    Some(p) => resolve_part(p, &parts).map(|i| Endpoint::new(i, ep.port.clone())).ok_or_else(|| p.clone()),
                }
            };
            match (map(&c.from), map(&c.to)) {
                (Ok(from), Ok(to)) => {
                    let c = Connection::new(from, to);
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
                (Err(p), _) | (_, Err(p)) => diags.push(Diagnostic::warning(
                    "UnknownPartDropped",
                    format!("dropped `{c}`: `{p}` is not a part of {system}"),
                )),
            }
        }
        Ok((out, diags))
    })
    .map(|(v, _)| v)
}

fn function_prompt(name: &str, caller: &ModelUnit) -> PromptBundle {
    let mut b = PromptBundle::new(Purpose::Function {
        name: name.to_string(),
        caller: caller.name.clone(),
    });
    b.push(Role::User, Label::Bnf, X_BNF);
    b.push(
        Role::User,
        Label::Introduction,
        format!(
            "The atomic class model below calls the function `{name}`, which is not defined. \
             Write the function class model `{name}` of X language: its input ports are the arguments in call order, its first output port is the result, and the keyword Algorithm assigns the result. \
             Output only the code of the function class model."
        ),
    );
    b.push(Role::User, Label::GeneratedCode, print_unit(caller));
    b
}

/// One function unit per call in `unit` that neither the builtins nor
/// `library` define. Functions that themselves call undefined functions
/// are kept with a diagnostic; no further generation happens.
pub fn generate_missing_functions(
    unit: &ModelUnit,
    library: &[ModelUnit],
    backend: &dyn GeneratorBackend,
    limits: &Limits,
    budget: usize,
) -> Result<(Vec<ModelUnit>, Vec<Diagnostic>), GenError> {
    let known: BTreeSet<&str> = library
        .iter()
        .filter(|u| u.kind == UnitKind::Function)
        .map(|u| u.name.as_str())
        .collect();
    let missing: Vec<String> = unit.called_functions().into_iter().filter(|f| !known.contains(f.as_str())).collect();
    let mut out: Vec<ModelUnit> = Vec::new();
    let mut diags = Vec::new();
    for name in &missing {
        let base = function_prompt(name, unit);
        let (f, _) = repair_loop(&base, &[], "Algorithm", backend, limits, budget, |text| {
            let code = extract_code(text).ok_or_else(|| Rejection {
                class: NoteClass::MissingSection,
                diagnostics: vec![Diagnostic::error("NoCode", "no code found in the output")],
            })?;
            let f = parse_unit(&code).map_err(syntax)?;
            if f.kind != UnitKind::Function || f.name != *name {
                return Err(Rejection {
                    class: NoteClass::Syntax,
                    diagnostics: vec![Diagnostic::error(
                        "WrongUnit",
                        format!("expected `function {name}`, got `{} {}`", f.kind.keyword(), f.name),
                    )],
                });
            }
            if f.body.is_empty() {
                return Err(Rejection {
                    class: NoteClass::MissingSection,
                    diagnostics: vec![Diagnostic::error("MissingSection", "the function has no algorithm")],
                });
            }
            Ok(f)
        })?;
        let nested: Vec<String> = f
            .called_functions()
            .into_iter()
            .filter(|g| !known.contains(g.as_str()) && !missing.contains(g))
            .collect();
        for g in nested {
            diags.push(Diagnostic::warning(
                "NestedMissingFunction",
                format!("generated function `{name}` calls undefined `{g}`; not generated"),
            ));
        }
        out.push(f);
    }
    Ok((out, diags))
}

/// Port types from naming conventions and the description text: ports
/// whose words suggest a switch are `Bool`, counters and modes are `Int`,
/// the rest `Real`. A type named right after the port in the text wins.
#[derive(Debug, Clone, Default)]
pub struct HeuristicTypeReasoner {
    pub description: String,
}

impl PortTypeReasoner for HeuristicTypeReasoner {
    fn reason(&self, _part: &str, port: &str) -> String {
        let target = words(port);
        let text = words(&self.description);
        for (i, w) in text.windows(target.len().max(1)).enumerate() {
            if w == target.as_slice() {
                match text.get(i + target.len()).map(String::as_str) {
                    Some("bool" | "boolean") => return "Bool".into(),
                    Some("int" | "integer") => return "Int".into(),
                    Some("string" | "text") => return "String".into(),
                    Some("real") => return "Real".into(),
                    _ => {}
                }
            }
        }
        let bools = ["on", "enable", "enabled", "flag", "active", "switch", "is", "ready", "fault", "alarm"];
        let ints = ["count", "mode", "id", "index", "level", "num"];
        if target.iter().any(|w| bools.contains(&w.as_str())) {
            "Bool".into()
        } else if target.iter().any(|w| ints.contains(&w.as_str())) {
            "Int".into()
        } else {
            "Real".into()
        }
    }
}

/// Asks the generator for each port type, falling back to the heuristic
/// when the answer is not a type name.
pub struct GeneratorTypeReasoner<'a> {
    pub backend: &'a dyn GeneratorBackend,
    pub limits: Limits,
    pub description: String,
    pub fallback: HeuristicTypeReasoner,
}

impl PortTypeReasoner for GeneratorTypeReasoner<'_> {
    fn reason(&self, part: &str, port: &str) -> String {
        let mut b = PromptBundle::new(Purpose::PortType {
            part: part.to_string(),
            port: port.to_string(),
        });
        b.push(
            Role::User,
            Label::Introduction,
            format!("Which value type does port `{port}` of subsystem `{part}` carry? Answer with exactly one of Real, Int, Bool, String."),
        );
        b.push(Role::User, Label::AtomicText, self.description.clone());
        self.backend
            .complete(&b, &self.limits)
            .ok()
            .and_then(|a| {
                let a = a.trim().trim_end_matches('.');
                ["Real", "Int", "Bool", "String"].into_iter().find(|t| same_name(t, a)).map(String::from)
            })
            .unwrap_or_else(|| self.fallback.reason(part, port))
    }
}

impl From<BackendError> for GenError {
    fn from(e: BackendError) -> Self {
        GenError::Backend(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::backend::{ScriptedBackend, StubBackend};
    use crate::model::{Direction, PartDecl};
    use crate::template::{make_atomic_skeleton, PortSpec};

    const AUTOPILOT: &str = "discrete AutoPilot\nvalue:\n  Real level = 0.0;\nport:\n  input Real alt;\n  output Real cmd;\nstate:\n  initial state Hold\n    when entry() then statehold(1); cmd = level; end;\n    when alt > 100.0 then level = 1.0; transform to Hold; end;\n    when timeout() then transform to Hold; end;\n  end;\nend;\n";

    fn skeleton() -> TemplateInstance {
        let part = PartDecl {
            class_name: "AutoPilot".into(),
            instance_name: "auto_pilot".into(),
            span: Default::default(),
        };
        let ports = [
            PortSpec { direction: Direction::Input, port_type: "Real".into(), name: "alt".into() },
            PortSpec { direction: Direction::Output, port_type: "Real".into(), name: "cmd".into() },
        ];
        make_atomic_skeleton(&part, &ports, UnitKind::Discrete)
    }

    fn reference() -> ModelUnit {
        parse_unit(AUTOPILOT).unwrap()
    }

    #[test]
    fn stub_fill_passes_first_time() {
        let stub = StubBackend::new([reference()]);
        let (unit, report) =
            fill_hole(&skeleton(), Hole::State, &FillContext::default(), &stub, &Limits::default(), 3).unwrap();
        assert_eq!(report.attempts.len(), 1);
        assert!(report.accepted);
        assert_eq!(unit, reference());
    }

    #[test]
    fn prose_wrapped_answer() {
        let answer = "Here is the State section.\nstate:\n  initial state Hold\n    when timeout() then transform to Hold; end;\n  end;\nIt idles.";
        let s = ScriptedBackend::new([answer]);
        let (unit, _) = fill_hole(&skeleton(), Hole::State, &FillContext::default(), &s, &Limits::default(), 1).unwrap();
        assert_eq!(unit.states.unwrap().initial_state, "Hold");
    }

    #[test]
    fn budget_law() {
        let s = ScriptedBackend::always("I am not sure.");
        match fill_hole(&skeleton(), Hole::State, &FillContext::default(), &s, &Limits::default(), 2) {
            Err(GenError::Exhausted { report }) => {
                assert_eq!(report.attempts.len(), 2);
                assert!(!report.accepted);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(s.prompts().len(), 2);
    }

    #[test]
    fn notes_grow_one_per_retry() {
        let bad_ident = "state:\n  initial state A\n    when entry() then statehold(1); cmd = ghost; end;\n  end;\n";
        let s = ScriptedBackend::new([
            "state:\n  initial state A\n    when entry() then statehold(1) end;\n  end;\n",
            bad_ident,
            "nothing",
        ]);
        let r = fill_hole(&skeleton(), Hole::State, &FillContext::default(), &s, &Limits::default(), 3);
        assert!(matches!(r, Err(GenError::Exhausted { .. })));
        let prompts = s.prompts();
        let note = |p: &PromptBundle| p.message(Label::Note).map(|m| m.content.clone());
        assert_eq!(note(&prompts[0]), None);
        let n1 = note(&prompts[1]).unwrap();
        let n2 = note(&prompts[2]).unwrap();
        assert!(n1.contains("not valid X language"));
        assert!(n2.starts_with(&n1) && n2.lines().count() == 2);
        assert!(n2.contains("undeclared identifiers"));
        assert!(prompts[2].render().starts_with(prompts[0].render().as_str()));
    }

    #[test]
    fn missing_state_section_is_classified() {
        let s = ScriptedBackend::new(["value:\n  Real x = 1.0;\n"]);
        match fill_hole(&skeleton(), Hole::State, &FillContext::default(), &s, &Limits::default(), 1) {
            Err(GenError::Exhausted { report }) => assert_eq!(report.attempts[0].diagnostics[0].code, "MissingSection"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn whole_unit_answer_contributes_sections() {
        let s = ScriptedBackend::new([format!("```\n{AUTOPILOT}```")]);
        let (unit, _) = fill_hole(&skeleton(), Hole::State, &FillContext::default(), &s, &Limits::default(), 1).unwrap();
        assert_eq!(unit, reference());
    }

    fn node() -> ComponentNode {
        ComponentNode {
            name: "plant".into(),
            children: vec![ComponentNode::leaf("radar"), ComponentNode::leaf("control bus")],
            provenance: vec![],
        }
    }

    #[test]
    fn connections_filtered_to_parts() {
        let s = ScriptedBackend::new(["connect(ControlBus.track, radar.track)\nconnect(Ghost.p, radar.q)\n"]);
        let (conns, diags) =
            infer_connections(&["The control bus sends tracks to the radar.".into()], &node(), &s, &Limits::default(), 2)
                .unwrap();
        assert_eq!(conns, [Connection::new(Endpoint::new("control_bus", "track"), Endpoint::new("radar", "track"))]);
        assert_eq!(diags[0].code, "UnknownPartDropped");
    }

    #[test]
    fn empty_corpus_gives_nothing() {
        let s = ScriptedBackend::new(Vec::<String>::new());
        let (conns, diags) = infer_connections(&[], &node(), &s, &Limits::default(), 1).unwrap();
        assert!(conns.is_empty());
        assert_eq!(diags[0].code, "EmptyConnectionCorpus");
        assert!(s.prompts().is_empty());
    }

    #[test]
    fn unparseable_connections_exhaust() {
        let s = ScriptedBackend::always("The bus talks to the radar.");
        let r = infer_connections(&["x".into()], &node(), &s, &Limits::default(), 2);
        assert!(matches!(r, Err(GenError::Exhausted { .. })));
    }

    const CLAMP: &str = "function clamp\nport:\n  input Real x;\n  input Real lo;\n  input Real hi;\n  output Real y;\nalgorithm:\n  y = min(max(x, lo), hi);\nend;\n";

    fn caller(calls: &str) -> ModelUnit {
        parse_unit(&format!(
            "continuous C\nport:\n  input Real u;\n  output Real y;\nequation:\n  y = {calls};\nend;\n"
        ))
        .unwrap()
    }

    #[test]
    fn missing_functions() {
        let stub = StubBackend::new([parse_unit(CLAMP).unwrap()]);
        let (fs, diags) =
            generate_missing_functions(&caller("clamp(u, 0.0, 1.0)"), &[], &stub, &Limits::default(), 1).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].name, "clamp");
        assert!(diags.is_empty());

        let (none, _) = generate_missing_functions(&caller("abs(u) + sin(u)"), &[], &stub, &Limits::default(), 1).unwrap();
        assert!(none.is_empty());

        let two = ScriptedBackend::new([
            "function f\nport:\n  input Real x;\n  output Real y;\nalgorithm:\n  y = x;\nend;",
            "function g\nport:\n  input Real x;\n  output Real y;\nalgorithm:\n  y = h(x);\nend;",
        ]);
        let (fs, diags) = generate_missing_functions(&caller("f(u) + g(u)"), &[], &two, &Limits::default(), 1).unwrap();
        assert_eq!(fs.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), ["f", "g"]);
        assert_eq!(two.prompts().len(), 2);
        assert_eq!(diags[0].code, "NestedMissingFunction");
    }

    #[test]
    fn type_reasoners() {
        let h = HeuristicTypeReasoner {
            description: "The radar reports track count int and power_on.".into(),
        };
        assert_eq!(h.reason("radar", "track_count"), "Int");
        assert_eq!(h.reason("radar", "power_on"), "Bool");
        assert_eq!(h.reason("radar", "volt"), "Real");
        let s = ScriptedBackend::new(["Bool", "a number"]);
        let g = GeneratorTypeReasoner {
            backend: &s,
            limits: Limits::default(),
            description: String::new(),
            fallback: HeuristicTypeReasoner::default(),
        };
        assert_eq!(g.reason("radar", "x"), "Bool");
        assert_eq!(g.reason("radar", "mode"), "Int");
    }
}
