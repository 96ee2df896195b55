//! Recursive-descent parser for X-language text.
//!
//! A unit is a kind keyword and name, optional `import` lines, then any
//! number of keyword-introduced sections (`part:`, `parameter:`, `port:`,
//! `value:`, `connection:`, `state:`, `equation:`, `algorithm:`) in any
//! order, closed by `end;`. Items inside sections are `;`-terminated.
//!
//! The parser recovers at item and statement boundaries, so one pass
//! reports every error it can find. [`parse_source`] returns what it could
//! build together with all errors; [`parse_unit`] and [`parse_units`] are
//! the strict entry points.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::diag::{Diagnostic, Span};

use super::expr::{BinOp, Expr, UnOp};
use super::lexer::{tokenize, Tok, Token};
use super::{
    Action, Connection, Direction, Endpoint, Equation, Hold, Import, Literal, ModelUnit, PartDecl,
    PortDecl, Section, StateDef, StateMachine, Transform, TypedBinding, UnitKind, ValueType, TYPE_TABLE,
};

const RESERVED: [&str; 20] = [
    "couple", "discrete", "continuous", "function", "import", "end", "connect", "when", "then", "initial",
    "state", "transform", "statehold", "input", "output", "and", "or", "not", "true", "false",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax { expected: String, found: String },
    MissingEnd { unit: String },
    SectionNotAllowed { section: Section, kind: UnitKind },
    UnknownType(String),
    LiteralType { data_type: String, literal: String },
    DuplicateName { what: &'static str, name: String },
    UnknownState(String),
    NoInitialState,
    MultipleInitialStates,
    PartNotImported { class: String },
    InvalidEquation(String),
    NegativeStatehold,
    ExpectedSingleUnit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub span: Span,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn syntax(span: Span, expected: impl Into<String>, found: &Tok) -> Self {
        ParseError {
            span,
            kind: ParseErrorKind::Syntax {
                expected: expected.into(),
                found: found.describe(),
            },
        }
    }

    pub fn code(&self) -> &'static str {
        match self.kind {
            ParseErrorKind::Syntax { .. } => "ParseError",
            ParseErrorKind::MissingEnd { .. } => "MissingEnd",
            ParseErrorKind::SectionNotAllowed { .. } => "SectionNotAllowed",
            ParseErrorKind::UnknownType(_) => "UnknownType",
            ParseErrorKind::LiteralType { .. } => "LiteralTypeMismatch",
            ParseErrorKind::DuplicateName { .. } => "DuplicateName",
            ParseErrorKind::UnknownState(_) => "UnknownState",
            ParseErrorKind::NoInitialState => "NoInitialState",
            ParseErrorKind::MultipleInitialStates => "MultipleInitialStates",
            ParseErrorKind::PartNotImported { .. } => "PartNotImported",
            ParseErrorKind::InvalidEquation(_) => "InvalidEquation",
            ParseErrorKind::NegativeStatehold => "NegativeStatehold",
            ParseErrorKind::ExpectedSingleUnit(_) => "ExpectedSingleUnit",
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code(), self.to_string()).at(self.span.clone())
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => write!(f, "expected {expected}, found {found}"),
            ParseErrorKind::MissingEnd { unit } => write!(f, "unit `{unit}` is missing its closing `end;`"),
            ParseErrorKind::SectionNotAllowed { section, kind } => {
                write!(f, "section `{}:` is not permitted in a {kind} class", section.keyword())
            }
            ParseErrorKind::UnknownType(t) => write!(f, "unknown data type `{t}`"),
            ParseErrorKind::LiteralType { data_type, literal } => {
                write!(f, "literal `{literal}` is not a valid {data_type}")
            }
            ParseErrorKind::DuplicateName { what, name } => write!(f, "duplicate {what} `{name}`"),
            ParseErrorKind::UnknownState(s) => write!(f, "transform targets unknown state `{s}`"),
            ParseErrorKind::NoInitialState => f.write_str("state section declares no `initial state`"),
            ParseErrorKind::MultipleInitialStates => f.write_str("state section declares more than one initial state"),
            ParseErrorKind::PartNotImported { class } => write!(f, "part class `{class}` is not imported"),
            ParseErrorKind::InvalidEquation(lhs) => {
                write!(f, "equation left-hand side `{lhs}` must be a variable or der(variable)")
            }
            ParseErrorKind::NegativeStatehold => f.write_str("statehold duration must be nonnegative"),
            ParseErrorKind::ExpectedSingleUnit(n) => write!(f, "expected exactly one unit, found {n}"),
        }
    }
}

impl std::error::Error for ParseError {}

/// Everything a recovering parse produced.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub units: Vec<ModelUnit>,
    pub errors: Vec<ParseError>,
}

impl ParseOutcome {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses every unit in `src`, recovering from errors where possible.
pub fn parse_source(src: &str) -> ParseOutcome {
    let mut p = Parser::new(src);
    let units = p.units();
    ParseOutcome { units, errors: p.errors }
}

pub fn parse_units(src: &str) -> Result<Vec<ModelUnit>, ParseError> {
    let mut out = parse_source(src);
    if out.errors.is_empty() {
        Ok(out.units)
    } else {
        Err(out.errors.swap_remove(0))
    }
}

/// Parses text holding exactly one unit.
pub fn parse_unit(src: &str) -> Result<ModelUnit, ParseError> {
    let mut units = parse_units(src)?;
    if units.len() != 1 {
        return Err(ParseError {
            span: units.get(1).map(|u| u.span.clone()).unwrap_or_default(),
            kind: ParseErrorKind::ExpectedSingleUnit(units.len()),
        });
    }
    Ok(units.remove(0))
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(ParseError::syntax(p.span(), "end of expression", p.peek()));
    }
    Ok(e)
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
}

enum WhenBlock {
    Entry(Option<Hold>, Vec<Action>),
    Transform(Transform),
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser {
            toks: tokenize(src),
            pos: 0,
            errors: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span.clone()
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(ParseError::syntax(self.span(), format!("`{sym}`"), self.peek()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            Err(ParseError::syntax(self.span(), format!("`{kw}`"), self.peek()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            other => Err(ParseError::syntax(self.span(), what, &other)),
        }
    }

    fn at_unit_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if UnitKind::from_keyword(s).is_some())
            && matches!(self.peek_at(1), Tok::Ident(_))
    }

    fn at_section_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if Section::from_keyword(s).is_some())
            && matches!(self.peek_at(1), Tok::Sym(":"))
    }

    fn at_end_semi(&self) -> bool {
        self.is_kw("end") && matches!(self.peek_at(1), Tok::Sym(";"))
    }

    /// Skips to just past the next `;`, stopping early (without consuming)
    /// at `end`, a section or unit start, or end of input.
    fn skip_item(&mut self) {
        let start = self.pos;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Sym(";") => {
                    self.advance();
                    return;
                }
                _ if self.pos > start && (self.is_kw("end") || self.at_section_start() || self.at_unit_start()) => {
                    return
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    /// Skips through the next `end;`.
    fn skip_block(&mut self) {
        while !matches!(self.peek(), Tok::Eof) {
            if self.at_end_semi() {
                self.advance();
                self.advance();
                return;
            }
            if self.at_section_start() || self.at_unit_start() {
                return;
            }
            self.advance();
        }
    }

    fn units(&mut self) -> Vec<ModelUnit> {
        let mut units = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            if self.at_unit_start() {
                units.push(self.unit());
            } else {
                let err = ParseError::syntax(
                    self.span(),
                    "`couple`, `discrete`, `continuous` or `function`",
                    self.peek(),
                );
                self.errors.push(err);
                self.advance();
                while !matches!(self.peek(), Tok::Eof) && !self.at_unit_start() {
                    self.advance();
                }
            }
        }
        units
    }

    fn unit(&mut self) -> ModelUnit {
        let start = self.span();
        let kind = match self.advance() {
            Tok::Ident(k) => UnitKind::from_keyword(&k).expect("checked by at_unit_start"),
            _ => unreachable!(),
        };
        let name = match self.ident("unit name") {
            Ok(n) => n,
            Err(e) => {
                self.errors.push(e);
                match self.advance() {
                    Tok::Ident(s) => s,
                    _ => String::from("_"),
                }
            }
        };
        let mut unit = ModelUnit::new(kind, name);
        let mut state_defs: Vec<(bool, StateDef)> = Vec::new();
        let mut saw_state_section = false;

        loop {
            if matches!(self.peek(), Tok::Eof) || self.at_unit_start() {
                self.errors.push(ParseError {
                    span: self.span(),
                    kind: ParseErrorKind::MissingEnd { unit: unit.name.clone() },
                });
                break;
            }
            if self.at_end_semi() {
                self.advance();
                self.advance();
                break;
            }
            if self.is_kw("import") {
                match self.import() {
                    Ok(i) => unit.imports.push(i),
                    Err(e) => {
                        self.errors.push(e);
                        self.skip_item();
                    }
                }
                continue;
            }
            if self.at_section_start() {
                let sec_span = self.span();
                let section = match self.advance() {
                    Tok::Ident(s) => Section::from_keyword(&s).expect("checked"),
                    _ => unreachable!(),
                };
                self.advance();
                let allowed = kind.allows(section);
                if !allowed {
                    self.errors.push(ParseError {
                        span: sec_span,
                        kind: ParseErrorKind::SectionNotAllowed { section, kind },
                    });
                }
                let mut scratch = ModelUnit::new(kind, "");
                let target = if allowed { &mut unit } else { &mut scratch };
                if section == Section::State {
                    saw_state_section = true;
                    let defs = self.state_section();
                    if allowed {
                        state_defs.extend(defs);
                    }
                } else {
                    self.section_items(section, target);
                }
                continue;
            }
            let err = ParseError::syntax(self.span(), "section keyword or `end;`", self.peek());
            self.errors.push(err);
            self.skip_item();
        }
        unit.span = start.to(&self.prev_span());
        if saw_state_section && !state_defs.is_empty() {
            unit.states = self.build_state_machine(state_defs, &unit.span);
        }
        self.validate(&unit);
        unit
    }

    fn import(&mut self) -> PResult<Import> {
        let start = self.span();
        self.expect_kw("import")?;
        let name = self.ident("imported class name")?;
        let span = start.to(&self.prev_span());
        self.eat_sym(";");
        Ok(Import { name, span })
    }

    fn section_items(&mut self, section: Section, unit: &mut ModelUnit) {
        loop {
            if matches!(self.peek(), Tok::Eof)
                || self.at_section_start()
                || self.at_unit_start()
                || self.at_end_semi()
                || self.is_kw("import")
            {
                return;
            }
            let res = match section {
                Section::Part => self.part().map(|p| unit.parts.push(p)),
                Section::Parameter => self.binding().map(|b| unit.parameters.push(b)),
                Section::Value => self.binding().map(|b| unit.values.push(b)),
                Section::Port => self.port().map(|p| unit.ports.push(p)),
                Section::Connection => self.connection().map(|c| unit.connections.push(c)),
                Section::Equation => self.equation().map(|e| unit.equations.push(e)),
                Section::Algorithm => self.assignment().map(|a| unit.body.push(a)),
                Section::State => unreachable!("state handled separately"),
            };
            if let Err(e) = res {
                self.errors.push(e);
                self.skip_item();
            }
        }
    }

    fn part(&mut self) -> PResult<PartDecl> {
        let start = self.span();
        let class_name = self.ident("part class name")?;
        let instance_name = self.ident("part instance name")?;
        self.expect_sym(";")?;
        Ok(PartDecl {
            class_name,
            instance_name,
            span: start.to(&self.prev_span()),
        })
    }

    fn literal(&mut self) -> PResult<Literal> {
        let neg = self.eat_sym("-");
        let lit = match self.peek().clone() {
            Tok::Int(i) => Literal::Int(if neg { -i } else { i }),
            Tok::Real(r) => Literal::Real(if neg { -r } else { r }),
            Tok::Ident(s) if !neg && s == "true" => Literal::Bool(true),
            Tok::Ident(s) if !neg && s == "false" => Literal::Bool(false),
            Tok::Str(s) if !neg => Literal::Str(s),
            other => return Err(ParseError::syntax(self.span(), "literal value", &other)),
        };
        self.advance();
        Ok(lit)
    }

    fn binding(&mut self) -> PResult<TypedBinding> {
        let start = self.span();
        let data_type = self.ident("data type")?;
        let name = self.ident("variable name")?;
        let initial = if self.eat_sym("=") { Some(self.literal()?) } else { None };
        self.expect_sym(";")?;
        Ok(TypedBinding {
            data_type,
            name,
            initial,
            span: start.to(&self.prev_span()),
        })
    }

    fn port(&mut self) -> PResult<PortDecl> {
        let start = self.span();
        let direction = if self.is_kw("input") {
            self.advance();
            Some(Direction::Input)
        } else if self.is_kw("output") {
            self.advance();
            Some(Direction::Output)
        } else {
            None
        };
        let port_type = self.ident("port type")?;
        let name = self.ident("port name")?;
        let initial = if self.eat_sym("=") { Some(self.literal()?) } else { None };
        self.expect_sym(";")?;
        Ok(PortDecl {
            direction,
            port_type,
            name,
            initial,
            span: start.to(&self.prev_span()),
        })
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let first = self.ident("part or port name")?;
        if self.eat_sym(".") {
            let port = self.ident("port name")?;
            Ok(Endpoint::new(first, port))
        } else {
            Ok(Endpoint::own(first))
        }
    }

    fn connection(&mut self) -> PResult<Connection> {
        let start = self.span();
        self.expect_kw("connect")?;
        self.expect_sym("(")?;
        let from = self.endpoint()?;
        self.expect_sym(",")?;
        let to = self.endpoint()?;
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(Connection {
            from,
            to,
            span: start.to(&self.prev_span()),
        })
    }

    fn equation(&mut self) -> PResult<Equation> {
        let start = self.span();
        let lhs = self.expr()?;
        self.expect_sym("=")?;
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        let eq = Equation {
            lhs,
            rhs,
            span: start.to(&self.prev_span()),
        };
        if eq.assigned().is_none() && eq.derivative_of().is_none() {
            return Err(ParseError {
                span: eq.span.clone(),
                kind: ParseErrorKind::InvalidEquation(eq.lhs.to_string()),
            });
        }
        Ok(eq)
    }

    fn assignment(&mut self) -> PResult<Action> {
        let start = self.span();
        let target = self.ident("assignment target")?;
        self.expect_sym("=")?;
        let expr = self.expr()?;
        self.expect_sym(";")?;
        Ok(Action {
            target,
            expr,
            span: start.to(&self.prev_span()),
        })
    }

    fn state_section(&mut self) -> Vec<(bool, StateDef)> {
        let mut defs = Vec::new();
        loop {
            if self.is_kw("initial") || (self.is_kw("state") && !matches!(self.peek_at(1), Tok::Sym(":"))) {
                match self.state_def() {
                    Ok(d) => defs.push(d),
                    Err(e) => {
                        self.errors.push(e);
                        self.skip_block();
                    }
                }
                continue;
            }
            if matches!(self.peek(), Tok::Eof)
                || self.at_section_start()
                || self.at_unit_start()
                || self.at_end_semi()
                || self.is_kw("import")
            {
                return defs;
            }
            let err = ParseError::syntax(self.span(), "`state` or `initial state`", self.peek());
            self.errors.push(err);
            self.skip_item();
        }
    }

    fn state_def(&mut self) -> PResult<(bool, StateDef)> {
        let start = self.span();
        let initial = if self.is_kw("initial") {
            self.advance();
            true
        } else {
            false
        };
        self.expect_kw("state")?;
        let name = self.ident("state name")?;
        let mut def = StateDef {
            name,
            statehold: None,
            entry_actions: Vec::new(),
            transforms: Vec::new(),
            span: Span::default(),
        };
        loop {
            if self.at_end_semi() {
                self.advance();
                self.advance();
                break;
            }
            if matches!(self.peek(), Tok::Eof) || self.at_section_start() || self.at_unit_start() {
                return Err(ParseError::syntax(self.span(), "`end;` closing the state", self.peek()));
            }
            if self.is_kw("when") {
                match self.when_block() {
                    WhenBlock::Entry(hold, actions) => {
                        if hold.is_some() {
                            def.statehold = hold;
                        }
                        def.entry_actions.extend(actions);
                    }
                    WhenBlock::Transform(t) => def.transforms.push(t),
                }
                continue;
            }
            if self.is_kw("initial") || self.is_kw("state") {
                return Err(ParseError::syntax(self.span(), "`end;` closing the state", self.peek()));
            }
            let err = ParseError::syntax(self.span(), "`when` block or `end;`", self.peek());
            self.errors.push(err);
            self.skip_item();
        }
        def.span = start.to(&self.prev_span());
        Ok((initial, def))
    }

    fn when_block(&mut self) -> WhenBlock {
        let start = self.span();
        self.advance(); // when
        let is_entry = self.is_kw("entry")
            && matches!(self.peek_at(1), Tok::Sym("("))
            && matches!(self.peek_at(2), Tok::Sym(")"));
        let condition = if is_entry {
            self.advance();
            self.advance();
            self.advance();
            None
        } else {
            match self.expr() {
                Ok(c) => Some(c),
                Err(e) => {
                    self.errors.push(e);
                    while !matches!(self.peek(), Tok::Eof) && !self.is_kw("then") && !self.at_end_semi() {
                        self.advance();
                    }
                    Some(Expr::Lit(Literal::Bool(false)))
                }
            }
        };
        if let Err(e) = self.expect_kw("then") {
            self.errors.push(e);
        }

        let mut hold = None;
        let mut actions = Vec::new();
        let mut target: Option<String> = None;
        loop {
            if self.at_end_semi() {
                self.advance();
                self.advance();
                break;
            }
            if matches!(self.peek(), Tok::Eof)
                || self.at_section_start()
                || self.at_unit_start()
                || self.is_kw("when")
                || self.is_kw("initial")
                || self.is_kw("state")
            {
                let err = ParseError::syntax(self.span(), "`end;` closing the `when` block", self.peek());
                self.errors.push(err);
                break;
            }
            let res = self.block_statement(is_entry, &mut hold, &mut actions, &mut target);
            if let Err(e) = res {
                self.errors.push(e);
                self.skip_item();
            }
        }
        let span = start.to(&self.prev_span());
        match condition {
            None => WhenBlock::Entry(hold, actions),
            Some(condition) => {
                let target = target.unwrap_or_else(|| {
                    self.errors.push(ParseError::syntax(
                        span.clone(),
                        "`transform to <State>;` in the `when` block",
                        &Tok::Ident("end".into()),
                    ));
                    String::new()
                });
                WhenBlock::Transform(Transform {
                    condition,
                    target,
                    actions,
                    span,
                })
            }
        }
    }

    fn block_statement(
        &mut self,
        is_entry: bool,
        hold: &mut Option<Hold>,
        actions: &mut Vec<Action>,
        target: &mut Option<String>,
    ) -> PResult<()> {
        if self.is_kw("statehold") {
            if !is_entry {
                return Err(ParseError::syntax(self.span(), "action or `transform to`", self.peek()));
            }
            let start = self.span();
            self.advance();
            self.expect_sym("(")?;
            let h = if self.is_kw("inf") {
                self.advance();
                Hold::Infinite
            } else {
                let neg = self.eat_sym("-");
                let v = match self.peek().clone() {
                    Tok::Int(i) => i as f64,
                    Tok::Real(r) => r,
                    other => return Err(ParseError::syntax(self.span(), "duration or `inf`", &other)),
                };
                self.advance();
                if neg && v != 0.0 {
                    return Err(ParseError {
                        span: start.to(&self.prev_span()),
                        kind: ParseErrorKind::NegativeStatehold,
                    });
                }
                Hold::Finite(v)
            };
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            *hold = Some(h);
            return Ok(());
        }
        if self.is_kw("transform") {
            if is_entry {
                return Err(ParseError::syntax(self.span(), "action or `statehold`", self.peek()));
            }
            self.advance();
            if self.is_kw("to") && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.advance();
            }
            let name = self.ident("target state name")?;
            self.expect_sym(";")?;
            if target.is_some() {
                return Err(ParseError::syntax(self.prev_span(), "a single `transform to`", &Tok::Ident(name)));
            }
            *target = Some(name);
            return Ok(());
        }
        actions.push(self.assignment()?);
        Ok(())
    }

    fn build_state_machine(&mut self, defs: Vec<(bool, StateDef)>, span: &Span) -> Option<StateMachine> {
        let initials: Vec<&StateDef> = defs.iter().filter(|(i, _)| *i).map(|(_, d)| d).collect();
        let initial_state = match initials.as_slice() {
            [one] => one.name.clone(),
            [] => {
                self.errors.push(ParseError {
                    span: span.clone(),
                    kind: ParseErrorKind::NoInitialState,
                });
                defs[0].1.name.clone()
            }
            [_, second, ..] => {
                self.errors.push(ParseError {
                    span: second.span.clone(),
                    kind: ParseErrorKind::MultipleInitialStates,
                });
                initials[0].name.clone()
            }
        };
        Some(StateMachine {
            initial_state,
            states: defs.into_iter().map(|(_, d)| d).collect(),
        })
    }

    /// Unit-local invariants that are not purely syntactic.
    fn validate(&mut self, unit: &ModelUnit) {
        let mut errs = Vec::new();
        let check_type = |t: &str, span: &Span, errs: &mut Vec<ParseError>| {
            if !TYPE_TABLE.contains(&t) {
                errs.push(ParseError {
                    span: span.clone(),
                    kind: ParseErrorKind::UnknownType(t.to_string()),
                });
            }
        };
        let check_lit = |t: &str, lit: &Option<Literal>, span: &Span, errs: &mut Vec<ParseError>| {
            if let (Some(vt), Some(lit)) = (ValueType::from_name(t), lit) {
                if !vt.accepts(lit) {
                    errs.push(ParseError {
                        span: span.clone(),
                        kind: ParseErrorKind::LiteralType {
                            data_type: t.to_string(),
                            literal: lit.to_string(),
                        },
                    });
                }
            }
        };

        let mut names = HashSet::new();
        for b in unit.parameters.iter().chain(&unit.values) {
            check_type(&b.data_type, &b.span, &mut errs);
            check_lit(&b.data_type, &b.initial, &b.span, &mut errs);
            if !names.insert(b.name.clone()) {
                errs.push(dup(&b.span, "variable", &b.name));
            }
        }
        for p in &unit.ports {
            check_type(&p.port_type, &p.span, &mut errs);
            check_lit(&p.port_type, &p.initial, &p.span, &mut errs);
            if !names.insert(p.name.clone()) {
                errs.push(dup(&p.span, "port", &p.name));
            }
        }
        let mut instances = HashSet::new();
        for part in &unit.parts {
            if !instances.insert(part.instance_name.clone()) {
                errs.push(dup(&part.span, "part", &part.instance_name));
            }
            if !unit.has_import(&part.class_name) {
                errs.push(ParseError {
                    span: part.span.clone(),
                    kind: ParseErrorKind::PartNotImported {
                        class: part.class_name.clone(),
                    },
                });
            }
        }
        if let Some(sm) = &unit.states {
            let declared: BTreeSet<&str> = sm.states.iter().map(|s| s.name.as_str()).collect();
            let mut seen = HashSet::new();
            for st in &sm.states {
                if !seen.insert(st.name.as_str()) {
                    errs.push(dup(&st.span, "state", &st.name));
                }
                for tr in &st.transforms {
                    if !tr.target.is_empty() && !declared.contains(tr.target.as_str()) {
                        errs.push(ParseError {
                            span: tr.span.clone(),
                            kind: ParseErrorKind::UnknownState(tr.target.clone()),
                        });
                    }
                }
            }
        }
        self.errors.extend(errs);
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.is_kw("or") {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.is_kw("and") {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            self.advance();
            let e = self.not_expr()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.comparison()
    }

    fn comparison_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym("==") => Some(BinOp::Eq),
            Tok::Sym("!=") => Some(BinOp::Ne),
            Tok::Sym("<") => Some(BinOp::Lt),
            Tok::Sym("<=") => Some(BinOp::Le),
            Tok::Sym(">") => Some(BinOp::Gt),
            Tok::Sym(">=") => Some(BinOp::Ge),
            _ => None,
        }
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        if let Some(op) = self.comparison_op() {
            self.advance();
            let rhs = self.additive()?;
            if self.comparison_op().is_some() {
                return Err(ParseError::syntax(self.span(), "operand (comparisons do not chain)", self.peek()));
            }
            return Ok(Expr::binary(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.advance();
            match self.peek().clone() {
                Tok::Int(i) => {
                    self.advance();
                    return Ok(Expr::Lit(Literal::Int(-i)));
                }
                Tok::Real(r) => {
                    self.advance();
                    return Ok(Expr::Lit(Literal::Real(-r)));
                }
                _ => {
                    let e = self.unary()?;
                    return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
                }
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Lit(Literal::Int(i)))
            }
            Tok::Real(r) => {
                self.advance();
                Ok(Expr::Lit(Literal::Real(r)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Lit(Literal::Str(s)))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::Lit(Literal::Bool(s == "true")))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.advance();
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    if !self.eat_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_sym(")") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    Ok(Expr::Call(s, args))
                } else {
                    Ok(Expr::Var(s))
                }
            }
            other => Err(ParseError::syntax(self.span(), "expression", &other)),
        }
    }
}

fn dup(span: &Span, what: &'static str, name: &str) -> ParseError {
    ParseError {
        span: span.clone(),
        kind: ParseErrorKind::DuplicateName {
            what,
            name: name.to_string(),
        },
    }
}
