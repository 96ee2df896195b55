use serde::{Deserialize, Serialize};

use crate::model::{print_section, ModelUnit, Section, UnitKind};
use crate::template::{Hole, TemplateInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Bnf,
    StateSpec,
    StateResponse,
    Introduction,
    CoupleText,
    AtomicText,
    GeneratedCode,
    Note,
    Input,
    Task,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub label: Label,
    pub content: String,
}

/// What a prompt asks for. Not sent to the model; lets deterministic
/// backends answer without parsing prose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Purpose {
    Hole { unit: String, hole: Hole },
    Connections { system: String },
    Function { name: String, caller: String },
    PortType { part: String, port: String },
    Augment { kind: UnitKind, description: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub purpose: Purpose,
    pub messages: Vec<Message>,
}

impl PromptBundle {
    pub fn new(purpose: Purpose) -> Self {
        PromptBundle {
            purpose,
            messages: Vec::new(),
        }
    }

    pub fn push(&mut self, role: Role, label: Label, content: impl Into<String>) {
        self.messages.push(Message {
            role,
            label,
            content: content.into(),
        });
    }

    pub fn labels(&self) -> Vec<Label> {
        self.messages.iter().map(|m| m.label).collect()
    }

    pub fn message(&self, label: Label) -> Option<&Message> {
        self.messages.iter().find(|m| m.label == label)
    }

    /// Copy with `notes` as one trailing Note message, newline-joined.
    pub fn with_notes(&self, notes: &[String]) -> PromptBundle {
        let mut out = self.clone();
        out.messages.retain(|m| m.label != Label::Note);
        if !notes.is_empty() {
            out.push(Role::User, Label::Note, notes.join("\n"));
        }
        out
    }

    /// Text sent to the model, one block per message; the replay key.
    pub fn render(&self) -> String {
        self.messages
            .iter()
            .map(|m| {
                let role = match m.role {
                    Role::User => "user",
                    Role::System => "system",
                };
                format!("[{role}:{:?}]\n{}\n", m.label, m.content)
            })
            .collect()
    }
}

pub const X_BNF: &str = r#"<model>     ::= <unit>+
<unit>      ::= <kind> <Name> <import>* <section>* "end" ";"
<kind>      ::= "couple" | "discrete" | "continuous" | "function"
<import>    ::= "import" <Name> ";"
<section>   ::= "part:" <part>* | "parameter:" <binding>* | "value:" <binding>*
              | "port:" <port>* | "connection:" <connect>* | "state:" <state>*
              | "equation:" <equation>* | "algorithm:" <assign>*
<part>      ::= <Class> <instance> ";"
<binding>   ::= <Type> <name> [ "=" <literal> ] ";"
<port>      ::= [ "input" | "output" ] <Type> <name> [ "=" <literal> ] ";"
<connect>   ::= "connect" "(" <endpoint> "," <endpoint> ")" ";"
<endpoint>  ::= [ <instance> "." ] <port>
<state>     ::= [ "initial" ] "state" <Name> <entry>? <when>* "end" ";"
<entry>     ::= "when" "entry" "(" ")" "then" [ "statehold" "(" ( <number> | "inf" ) ")" ";" ] <assign>* "end" ";"
<when>      ::= "when" <expr> "then" <assign>* "transform" "to" <Name> ";" "end" ";"
<assign>    ::= <name> "=" <expr> ";"
<equation>  ::= ( <name> | "der" "(" <name> ")" ) "=" <expr> ";"
<expr>      ::= <expr> ( "or" | "and" | "==" | "!=" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "/" ) <expr>
              | ( "-" | "not" ) <expr> | <literal> | <name> | <name> "(" [ <expr> { "," <expr> } ] ")" | "(" <expr> ")"
<Type>      ::= "Real" | "Int" | "Bool" | "String"
<literal>   ::= <number> | "true" | "false" | <string>"#;

pub const STATE_INTRODUCTION: &str = "Drawing on the textual descriptions of both the system model and the subsystem model, please develop the code for the keyword State of the discrete class subsystem model in accordance with the modeling specifications for the keyword State and the preceding code parts of the discrete class model. Note that only the code of the keyword State should be included in your output.";

pub const EQUATION_INTRODUCTION: &str = "Drawing on the textual descriptions of both the system model and the subsystem model, please develop the code for the keyword Equation of the continuous class subsystem model in accordance with the modeling specifications for the keyword Equation and the preceding code parts of the continuous class model. Note that only the code of the keyword Equation should be included in your output.";

const STATE_SPEC: &str = "The keyword State describes the behavior of a discrete class model as a set of named states, exactly one of them marked `initial`. \
A state may open with `when entry() then ... end;`, which sets how long the model stays (`statehold(t)` or `statehold(inf)`) and may assign values and output ports. \
Each further `when <condition> then ... transform to <State>; end;` block is a transition: `timeout()` is true when the hold time has elapsed, and input ports hold the value just received. \
Values used by the states are declared in the keyword Value. Examples:";

const STATE_RESPONSE: &str = "Understood. I will write `state:` followed by the states, mark one state `initial`, use `statehold` only inside `when entry()` blocks, end every transition with `transform to <State>;`, close each block with `end;`, and declare any new variables in the keyword Value.";

const EQUATION_SPEC: &str = "The keyword Equation describes a continuous class model as equations over its values and ports. \
`der(x) = <expr>;` gives the rate of change of a value `x`; `y = <expr>;` defines an output port or value algebraically. \
Values are declared with their initial condition in the keyword Value. Examples:";

const EQUATION_RESPONSE: &str = "Understood. I will write `equation:` followed by one equation per line, use `der(x)` only for declared values, define every output port, and declare any new variables in the keyword Value.";

/// Few-shot source: library units whose behavior sections serve as
/// examples.
#[derive(Debug, Clone, Default)]
pub struct ExampleLibrary {
    pub units: Vec<ModelUnit>,
    pub shots: usize,
}

impl ExampleLibrary {
    pub fn new(mut units: Vec<ModelUnit>, shots: usize) -> Self {
        units.sort_by(|a, b| a.name.cmp(&b.name));
        ExampleLibrary { units, shots }
    }

    /// Value and behavior sections of the first few units of `kind`,
    /// skipping `exclude`.
    pub fn examples(&self, kind: UnitKind, exclude: &str) -> Vec<String> {
        let behavior = if kind == UnitKind::Continuous {
            Section::Equation
        } else {
            Section::State
        };
        self.units
            .iter()
            .filter(|u| u.kind == kind && u.name != exclude && u.section_present(behavior))
            .take(self.shots)
            .map(|u| {
                let mut s = String::new();
                if u.section_present(Section::Value) {
                    s.push_str(&print_section(u, Section::Value));
                }
                s.push_str(&print_section(u, behavior));
                s
            })
            .collect()
    }

    pub fn functions(&self) -> Vec<&ModelUnit> {
        self.units.iter().filter(|u| u.kind == UnitKind::Function).collect()
    }
}

/// The skeleton printed without its open holes.
pub fn generated_code(skeleton: &TemplateInstance) -> String {
    let mut text = skeleton.print();
    for h in &skeleton.holes {
        text = text.replace(&format!("{}:\n  {}\n", h.section().keyword(), h.marker()), "");
    }
    text
}

/// Prompt for the behavior hole of an atomic skeleton: BNF, behavior
/// specification with examples, the fixed response, the instruction, both
/// descriptions, the code so far and any notes.
pub fn build_state_prompt(
    couple_text: &str,
    atomic_text: &str,
    skeleton: &TemplateInstance,
    notes: &[String],
    library: &ExampleLibrary,
) -> PromptBundle {
    let continuous = skeleton.kind == UnitKind::Continuous;
    let hole = if continuous { Hole::Equation } else { Hole::State };
    let (spec, response, intro) = if continuous {
        (EQUATION_SPEC, EQUATION_RESPONSE, EQUATION_INTRODUCTION)
    } else {
        (STATE_SPEC, STATE_RESPONSE, STATE_INTRODUCTION)
    };
    let mut spec_text = spec.to_string();
    for ex in library.examples(skeleton.kind, &skeleton.filled.name) {
        spec_text.push_str("\n\n");
        spec_text.push_str(&ex);
    }
    let mut b = PromptBundle::new(Purpose::Hole {
        unit: skeleton.filled.name.clone(),
        hole,
    });
    b.push(Role::User, Label::Bnf, X_BNF);
    b.push(Role::User, Label::StateSpec, spec_text);
    b.push(Role::System, Label::StateResponse, response);
    b.push(Role::User, Label::Introduction, intro);
    b.push(Role::User, Label::CoupleText, couple_text);
    b.push(Role::User, Label::AtomicText, atomic_text);
    b.push(Role::User, Label::GeneratedCode, generated_code(skeleton));
    b.with_notes(notes)
}
