//! X-language model units: AST, parser, printer and model-set linker.

pub mod expr;
mod lexer;
pub mod link;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diag::Span;

pub use expr::{BinOp, Expr, UnOp};
pub use link::{link_model_set, LinkError, LinkErrorKind, LinkedModel};
pub use parser::{parse_expr, parse_source, parse_unit, parse_units, ParseError, ParseErrorKind, ParseOutcome};
pub use printer::{print_section, print_unit, print_units};
pub(crate) use printer::section_order;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Couple,
    Discrete,
    Continuous,
    Function,
}

impl UnitKind {
    pub fn keyword(self) -> &'static str {
        match self {
            UnitKind::Couple => "couple",
            UnitKind::Discrete => "discrete",
            UnitKind::Continuous => "continuous",
            UnitKind::Function => "function",
        }
    }

    pub fn from_keyword(s: &str) -> Option<UnitKind> {
        match s {
            "couple" => Some(UnitKind::Couple),
            "discrete" => Some(UnitKind::Discrete),
            "continuous" => Some(UnitKind::Continuous),
            "function" => Some(UnitKind::Function),
            _ => None,
        }
    }

    pub fn is_atomic(self) -> bool {
        matches!(self, UnitKind::Discrete | UnitKind::Continuous)
    }

    /// Sections a unit of this kind may carry.
    pub fn allows(self, section: Section) -> bool {
        use Section::*;
        match self {
            UnitKind::Couple => matches!(section, Part | Parameter | Port | Value | Connection),
            UnitKind::Discrete => matches!(section, Parameter | Value | Port | State),
            UnitKind::Continuous => matches!(section, Parameter | Value | Port | Equation),
            UnitKind::Function => matches!(section, Parameter | Value | Port | Algorithm),
        }
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Keyword-introduced sections, in canonical (template) print order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Part,
    Parameter,
    Port,
    Value,
    Connection,
    State,
    Equation,
    Algorithm,
}

impl Section {
    pub const ALL: [Section; 8] = [
        Section::Part,
        Section::Parameter,
        Section::Port,
        Section::Value,
        Section::Connection,
        Section::State,
        Section::Equation,
        Section::Algorithm,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Section::Part => "part",
            Section::Parameter => "parameter",
            Section::Port => "port",
            Section::Value => "value",
            Section::Connection => "connection",
            Section::State => "state",
            Section::Equation => "equation",
            Section::Algorithm => "algorithm",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Section> {
        Section::ALL.into_iter().find(|sec| sec.keyword() == s)
    }
}

/// Value types known to the language. `Integer` and `Boolean` are accepted
/// spellings of `Int` and `Bool`.
pub const TYPE_TABLE: [&str; 6] = ["Real", "Int", "Integer", "Bool", "Boolean", "String"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueType {
    Real,
    Int,
    Bool,
    Str,
}

impl ValueType {
    pub fn from_name(name: &str) -> Option<ValueType> {
        match name {
            "Real" => Some(ValueType::Real),
            "Int" | "Integer" => Some(ValueType::Int),
            "Bool" | "Boolean" => Some(ValueType::Bool),
            "String" => Some(ValueType::Str),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Real => "Real",
            ValueType::Int => "Int",
            ValueType::Bool => "Bool",
            ValueType::Str => "String",
        }
    }

    /// Whether a literal may initialize a slot of this type.
    pub fn accepts(self, lit: &Literal) -> bool {
        matches!(
            (self, lit),
            (ValueType::Real, Literal::Real(_) | Literal::Int(_))
                | (ValueType::Int, Literal::Int(_))
                | (ValueType::Bool, Literal::Bool(_))
                | (ValueType::Str, Literal::Str(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Real(r) => f.write_str(&format_real(*r)),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Shortest round-trip decimal form that still reads back as a real
/// (`2.0`, not `2`).
pub fn format_real(r: f64) -> String {
    let s = format!("{r}");
    if s.contains(['.', 'e', 'E']) || !r.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Import {
    pub name: String,
    pub span: Span,
}

/// `<DataType> <Name> = <Value>;` in `parameter:` and `value:` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedBinding {
    pub data_type: String,
    pub name: String,
    pub initial: Option<Literal>,
    pub span: Span,
}

impl TypedBinding {
    pub fn value_type(&self) -> ValueType {
        ValueType::from_name(&self.data_type).unwrap_or(ValueType::Real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
        }
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::Input => Direction::Output,
            Direction::Output => Direction::Input,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Port declaration. Couple ports usually omit the direction; it is then
/// inferred from connection usage when the model set is linked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortDecl {
    pub direction: Option<Direction>,
    pub port_type: String,
    pub name: String,
    pub initial: Option<Literal>,
    pub span: Span,
}

impl PortDecl {
    pub fn value_type(&self) -> ValueType {
        ValueType::from_name(&self.port_type).unwrap_or(ValueType::Real)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartDecl {
    pub class_name: String,
    pub instance_name: String,
    pub span: Span,
}

/// One side of a `connect(...)`. `part == None` names a port of the
/// enclosing couple itself (external coupling).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub part: Option<String>,
    pub port: String,
}

impl Endpoint {
    pub fn new(part: impl Into<String>, port: impl Into<String>) -> Self {
        Endpoint {
            part: Some(part.into()),
            port: port.into(),
        }
    }

    pub fn own(port: impl Into<String>) -> Self {
        Endpoint {
            part: None,
            port: port.into(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.part {
            Some(p) => write!(f, "{p}.{}", self.port),
            None => f.write_str(&self.port),
        }
    }
}

/// `connect(from, to)`; data flows from the first endpoint to the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub from: Endpoint,
    pub to: Endpoint,
    pub span: Span,
}

impl Connection {
    pub fn new(from: Endpoint, to: Endpoint) -> Self {
        Connection {
            from,
            to,
            span: Span::default(),
        }
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "connect({}, {})", self.from, self.to)
    }
}

/// `target = expr;`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub target: String,
    pub expr: Expr,
    pub span: Span,
}

/// Time a state persists before its internal transition. `None` on a
/// state means no `statehold` was declared, which behaves as infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hold {
    Finite(f64),
    Infinite,
}

impl Hold {
    pub fn as_f64(self) -> f64 {
        match self {
            Hold::Finite(t) => t,
            Hold::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub condition: Expr,
    pub target: String,
    pub actions: Vec<Action>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDef {
    pub name: String,
    pub statehold: Option<Hold>,
    pub entry_actions: Vec<Action>,
    pub transforms: Vec<Transform>,
    pub span: Span,
}

impl StateDef {
    pub fn hold_time(&self) -> f64 {
        self.statehold.map_or(f64::INFINITY, Hold::as_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMachine {
    pub initial_state: String,
    pub states: Vec<StateDef>,
}

impl StateMachine {
    pub fn state(&self, name: &str) -> Option<&StateDef> {
        self.states.iter().find(|s| s.name == name)
    }
}

/// `lhs = rhs;` where `lhs` is a variable or `der(variable)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
    pub span: Span,
}

impl Equation {
    /// The state variable if this is a `der(x) = ...` equation.
    pub fn derivative_of(&self) -> Option<&str> {
        match &self.lhs {
            Expr::Call(name, args) if name == "der" && args.len() == 1 => match &args[0] {
                Expr::Var(v) => Some(v),
                _ => None,
            },
            _ => None,
        }
    }

    /// The assigned variable if this is an algebraic equation.
    pub fn assigned(&self) -> Option<&str> {
        match &self.lhs {
            Expr::Var(v) => Some(v),
            _ => None,
        }
    }
}

/// One X-language class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUnit {
    pub kind: UnitKind,
    pub name: String,
    pub imports: Vec<Import>,
    pub parameters: Vec<TypedBinding>,
    pub values: Vec<TypedBinding>,
    pub ports: Vec<PortDecl>,
    pub parts: Vec<PartDecl>,
    pub connections: Vec<Connection>,
    pub states: Option<StateMachine>,
    pub equations: Vec<Equation>,
    pub body: Vec<Action>,
    pub span: Span,
}

impl ModelUnit {
    pub fn new(kind: UnitKind, name: impl Into<String>) -> Self {
        ModelUnit {
            kind,
            name: name.into(),
            imports: Vec::new(),
            parameters: Vec::new(),
            values: Vec::new(),
            ports: Vec::new(),
            parts: Vec::new(),
            connections: Vec::new(),
            states: None,
            equations: Vec::new(),
            body: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn part(&self, instance: &str) -> Option<&PartDecl> {
        self.parts.iter().find(|p| p.instance_name == instance)
    }

    pub fn has_import(&self, name: &str) -> bool {
        self.imports.iter().any(|i| i.name == name)
    }

    pub fn add_import(&mut self, name: &str) {
        if !self.has_import(name) {
            self.imports.push(Import {
                name: name.to_string(),
                span: Span::default(),
            });
        }
    }

    /// Whether the given section has any content.
    pub fn section_present(&self, section: Section) -> bool {
        match section {
            Section::Part => !self.parts.is_empty(),
            Section::Parameter => !self.parameters.is_empty(),
            Section::Port => !self.ports.is_empty(),
            Section::Value => !self.values.is_empty(),
            Section::Connection => !self.connections.is_empty(),
            Section::State => self.states.is_some(),
            Section::Equation => !self.equations.is_empty(),
            Section::Algorithm => !self.body.is_empty(),
        }
    }

    /// Every expression in the unit, for identifier and call scans.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        if let Some(sm) = &self.states {
            for st in &sm.states {
                out.extend(st.entry_actions.iter().map(|a| &a.expr));
                for tr in &st.transforms {
                    out.push(&tr.condition);
                    out.extend(tr.actions.iter().map(|a| &a.expr));
                }
            }
        }
        for eq in &self.equations {
            out.push(&eq.lhs);
            out.push(&eq.rhs);
        }
        out.extend(self.body.iter().map(|a| &a.expr));
        out
    }

    /// Names of functions called anywhere in the unit, sorted and deduplicated.
    pub fn called_functions(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .expressions()
            .into_iter()
            .flat_map(|e| e.calls())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Number of states (discrete) or equations (continuous); the length
    /// used to normalize error attenuation.
    pub fn behavior_len(&self) -> usize {
        match self.kind {
            UnitKind::Discrete => self.states.as_ref().map_or(0, |s| s.states.len()),
            UnitKind::Continuous => self.equations.len(),
            _ => 0,
        }
    }
}

impl fmt::Display for ModelUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_unit(self))
    }
}
