//! Resolution of a set of units into one linked model tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diag::{Diagnostic, Span};

use super::expr::{is_builtin, Expr};
use super::{Direction, Endpoint, ModelUnit, UnitKind, ValueType};

#[derive(Debug, Clone, PartialEq)]
pub enum LinkErrorKind {
    DuplicateName(String),
    NoTopLevel,
    AmbiguousTop(Vec<String>),
    UnknownClass(String),
    UnknownPart(String),
    UnknownPort { owner: String, port: String },
    DirectionMismatch { endpoint: String, detail: String },
    TypeMismatch { from: String, to: String, from_type: String, to_type: String },
    UnknownFunction(String),
    UnknownIdentifier(String),
    NotInstantiable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkError {
    pub unit: String,
    pub span: Span,
    pub kind: LinkErrorKind,
}

impl LinkError {
    fn new(unit: &str, span: &Span, kind: LinkErrorKind) -> Self {
        LinkError {
            unit: unit.to_string(),
            span: span.clone(),
            kind,
        }
    }

    pub fn code(&self) -> &'static str {
        match self.kind {
            LinkErrorKind::DuplicateName(_) => "DuplicateName",
            LinkErrorKind::NoTopLevel => "NoTopLevel",
            LinkErrorKind::AmbiguousTop(_) => "AmbiguousTop",
            LinkErrorKind::UnknownClass(_) => "UnknownClass",
            LinkErrorKind::UnknownPart(_) => "UnknownPart",
            LinkErrorKind::UnknownPort { .. } => "UnknownPort",
            LinkErrorKind::DirectionMismatch { .. } => "DirectionMismatch",
            LinkErrorKind::TypeMismatch { .. } => "TypeMismatch",
            LinkErrorKind::UnknownFunction(_) => "UnknownFunction",
            LinkErrorKind::UnknownIdentifier(_) => "UnknownIdentifier",
            LinkErrorKind::NotInstantiable(_) => "NotInstantiable",
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code(), self.to_string()).at(self.span.clone())
    }
}

impl fmt::Display for LinkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "in `{}`: ", self.unit)?;
        match &self.kind {
            LinkErrorKind::DuplicateName(n) => write!(f, "unit `{n}` is defined more than once"),
            LinkErrorKind::NoTopLevel => f.write_str("no top-level unit found"),
            LinkErrorKind::AmbiguousTop(c) => write!(f, "several top-level candidates: {}", c.join(", ")),
            LinkErrorKind::UnknownClass(c) => write!(f, "unknown class `{c}`"),
            LinkErrorKind::UnknownPart(p) => write!(f, "unknown part `{p}`"),
            LinkErrorKind::UnknownPort { owner, port } => write!(f, "`{owner}` has no port `{port}`"),
            LinkErrorKind::DirectionMismatch { endpoint, detail } => write!(f, "`{endpoint}`: {detail}"),
            LinkErrorKind::TypeMismatch {
                from,
                to,
                from_type,
                to_type,
            } => write!(f, "connection {from} ({from_type}) -> {to} ({to_type}) changes type"),
            LinkErrorKind::UnknownFunction(n) => write!(f, "call to undefined function `{n}`"),
            LinkErrorKind::UnknownIdentifier(n) => write!(f, "unknown identifier `{n}`"),
            LinkErrorKind::NotInstantiable(c) => write!(f, "function class `{c}` cannot be used as a part"),
        }
    }
}

impl std::error::Error for LinkError {}

/// A fully resolved unit set. Port directions left implicit in the source
/// are filled in from connection usage.
#[derive(Debug, Clone)]
pub struct LinkedModel {
    pub top: String,
    pub units: BTreeMap<String, ModelUnit>,
    pub warnings: Vec<Diagnostic>,
}

impl LinkedModel {
    pub fn unit(&self, name: &str) -> Option<&ModelUnit> {
        self.units.get(name)
    }

    pub fn top_unit(&self) -> &ModelUnit {
        &self.units[&self.top]
    }

    pub fn functions(&self) -> impl Iterator<Item = &ModelUnit> {
        self.units.values().filter(|u| u.kind == UnitKind::Function)
    }

    /// Units reachable from the top through parts, depth-first, each once.
    pub fn reachable(&self) -> Vec<&ModelUnit> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.top.clone()];
        while let Some(name) = stack.pop() {
            if !seen.insert(name.clone()) {
                continue;
            }
            if let Some(u) = self.units.get(&name) {
                out.push(u);
                for p in u.parts.iter().rev() {
                    stack.push(p.class_name.clone());
                }
            }
        }
        out
    }
}

/// Links `units`. With `top == None` the top is the single couple that no
/// other couple instantiates (or the single non-function unit when there
/// are no couples).
pub fn link_model_set(units: &[ModelUnit], top: Option<&str>) -> Result<LinkedModel, Vec<LinkError>> {
    let mut errors = Vec::new();
    let mut map: BTreeMap<String, ModelUnit> = BTreeMap::new();
    for u in units {
        if map.contains_key(&u.name) {
            errors.push(LinkError::new(&u.name, &u.span, LinkErrorKind::DuplicateName(u.name.clone())));
        } else {
            map.insert(u.name.clone(), u.clone());
        }
    }

    let top = match top {
        Some(t) => {
            if !map.contains_key(t) {
                errors.push(LinkError::new(t, &Span::default(), LinkErrorKind::UnknownClass(t.to_string())));
            }
            t.to_string()
        }
        None => match find_top(&map) {
            Ok(t) => t,
            Err(e) => {
                errors.push(e);
                String::new()
            }
        },
    };

    infer_directions(&mut map);

    let mut warnings = Vec::new();
    for u in map.values() {
        match u.kind {
            UnitKind::Couple => check_couple(u, &map, &mut errors),
            _ => check_behavior(u, &map, &mut errors),
        }
        for p in &u.ports {
            if p.direction.is_none() {
                warnings.push(
                    Diagnostic::warning(
                        "UnusedPort",
                        format!("port `{}.{}` is never connected; treated as input", u.name, p.name),
                    )
                    .at(p.span.clone()),
                );
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    for u in map.values_mut() {
        for p in &mut u.ports {
            p.direction.get_or_insert(Direction::Input);
        }
    }
    Ok(LinkedModel {
        top,
        units: map,
        warnings,
    })
}

fn find_top(map: &BTreeMap<String, ModelUnit>) -> Result<String, LinkError> {
    let used: BTreeSet<&str> = map
        .values()
        .flat_map(|u| u.parts.iter().map(|p| p.class_name.as_str()))
        .collect();
    let mut candidates: Vec<String> = map
        .values()
        .filter(|u| u.kind == UnitKind::Couple && !used.contains(u.name.as_str()))
        .map(|u| u.name.clone())
        .collect();
    if candidates.is_empty() && !map.values().any(|u| u.kind == UnitKind::Couple) {
        candidates = map
            .values()
            .filter(|u| u.kind != UnitKind::Function)
            .map(|u| u.name.clone())
            .collect();
    }
    match candidates.len() {
        0 => Err(LinkError::new("", &Span::default(), LinkErrorKind::NoTopLevel)),
        1 => Ok(candidates.remove(0)),
        _ => Err(LinkError::new("", &Span::default(), LinkErrorKind::AmbiguousTop(candidates))),
    }
}

/// Direction an endpoint's port must have for the connection to carry data
/// from `from` to `to`. A couple's own port acts reversed from inside.
fn required_direction(ep: &Endpoint, is_source: bool) -> Direction {
    let d = if is_source { Direction::Output } else { Direction::Input };
    if ep.part.is_none() {
        d.flipped()
    } else {
        d
    }
}

fn infer_directions(map: &mut BTreeMap<String, ModelUnit>) {
    for _ in 0..=map.len() {
        let mut assignments: Vec<(String, String, Direction)> = Vec::new();
        for u in map.values().filter(|u| u.kind == UnitKind::Couple) {
            for c in &u.connections {
                for (ep, is_source) in [(&c.from, true), (&c.to, false)] {
                    let owner = match &ep.part {
                        None => Some(u.name.clone()),
                        Some(p) => u.part(p).map(|pd| pd.class_name.clone()),
                    };
                    if let Some(owner) = owner {
                        assignments.push((owner, ep.port.clone(), required_direction(ep, is_source)));
                    }
                }
            }
        }
        // Ports assigned to by behavior are outputs even when unconnected.
        for u in map.values().filter(|u| u.kind != UnitKind::Couple) {
            for target in assigned_targets(u) {
                assignments.push((u.name.clone(), target, Direction::Output));
            }
        }
        let mut changed = false;
        for (owner, port, dir) in assignments {
            if let Some(p) = map
                .get_mut(&owner)
                .and_then(|u| u.ports.iter_mut().find(|p| p.name == port))
            {
                if p.direction.is_none() {
                    p.direction = Some(dir);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn assigned_targets(u: &ModelUnit) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(sm) = &u.states {
        for st in &sm.states {
            out.extend(st.entry_actions.iter().map(|a| a.target.clone()));
            for tr in &st.transforms {
                out.extend(tr.actions.iter().map(|a| a.target.clone()));
            }
        }
    }
    out.extend(u.equations.iter().filter_map(|e| e.assigned().map(str::to_string)));
    out.extend(u.body.iter().map(|a| a.target.clone()));
    out
}

fn check_couple(u: &ModelUnit, map: &BTreeMap<String, ModelUnit>, errors: &mut Vec<LinkError>) {
    for part in &u.parts {
        match map.get(&part.class_name) {
            None => errors.push(LinkError::new(
                &u.name,
                &part.span,
                LinkErrorKind::UnknownClass(part.class_name.clone()),
            )),
            Some(c) if c.kind == UnitKind::Function => errors.push(LinkError::new(
                &u.name,
                &part.span,
                LinkErrorKind::NotInstantiable(part.class_name.clone()),
            )),
            Some(_) => {}
        }
    }
    for c in &u.connections {
        let mut resolved = Vec::new();
        for (ep, is_source) in [(&c.from, true), (&c.to, false)] {
            let owner = match &ep.part {
                None => Some(u),
                Some(p) => match u.part(p) {
                    None => {
                        errors.push(LinkError::new(&u.name, &c.span, LinkErrorKind::UnknownPart(p.clone())));
                        None
                    }
                    Some(pd) => map.get(&pd.class_name),
                },
            };
            let Some(owner) = owner else { continue };
            let Some(port) = owner.port(&ep.port) else {
                errors.push(LinkError::new(
                    &u.name,
                    &c.span,
                    LinkErrorKind::UnknownPort {
                        owner: ep.part.clone().unwrap_or_else(|| u.name.clone()),
                        port: ep.port.clone(),
                    },
                ));
                continue;
            };
            let need = required_direction(ep, is_source);
            if let Some(d) = port.direction {
                if d != need {
                    let role = if is_source { "source" } else { "destination" };
                    errors.push(LinkError::new(
                        &u.name,
                        &c.span,
                        LinkErrorKind::DirectionMismatch {
                            endpoint: ep.to_string(),
                            detail: format!("{d} port used as connection {role}"),
                        },
                    ));
                }
            }
            resolved.push((ep, port));
        }
        if let [(fe, fp), (te, tp)] = resolved.as_slice() {
            let (ft, tt) = (fp.value_type(), tp.value_type());
            let widening = ft == ValueType::Int && tt == ValueType::Real;
            if ft != tt && !widening {
                errors.push(LinkError::new(
                    &u.name,
                    &c.span,
                    LinkErrorKind::TypeMismatch {
                        from: fe.to_string(),
                        to: te.to_string(),
                        from_type: fp.port_type.clone(),
                        to_type: tp.port_type.clone(),
                    },
                ));
            }
        }
    }
}

fn check_behavior(u: &ModelUnit, map: &BTreeMap<String, ModelUnit>, errors: &mut Vec<LinkError>) {
    for imp in &u.imports {
        if !map.contains_key(&imp.name) {
            errors.push(LinkError::new(&u.name, &imp.span, LinkErrorKind::UnknownClass(imp.name.clone())));
        }
    }
    let known: BTreeSet<&str> = u
        .ports
        .iter()
        .map(|p| p.name.as_str())
        .chain(u.values.iter().map(|v| v.name.as_str()))
        .chain(u.parameters.iter().map(|v| v.name.as_str()))
        .collect();
    let mut reported = BTreeSet::new();
    let mut check_expr = |e: &Expr, span: &Span, errors: &mut Vec<LinkError>| {
        for v in e.vars() {
            if !known.contains(v.as_str()) && reported.insert(v.clone()) {
                errors.push(LinkError::new(&u.name, span, LinkErrorKind::UnknownIdentifier(v)));
            }
        }
        for f in e.all_calls() {
            let defined = is_builtin(&f) || map.get(&f).is_some_and(|c| c.kind == UnitKind::Function);
            if !defined && reported.insert(format!("{f}()")) {
                errors.push(LinkError::new(&u.name, span, LinkErrorKind::UnknownFunction(f)));
            }
        }
    };
    let check_target = |t: &str, span: &Span, errors: &mut Vec<LinkError>| {
        if !known.contains(t) {
            errors.push(LinkError::new(&u.name, span, LinkErrorKind::UnknownIdentifier(t.to_string())));
        }
    };
    if let Some(sm) = &u.states {
        for st in &sm.states {
            for a in &st.entry_actions {
                check_target(&a.target, &a.span, errors);
                check_expr(&a.expr, &a.span, errors);
            }
            for tr in &st.transforms {
                check_expr(&tr.condition, &tr.span, errors);
                for a in &tr.actions {
                    check_target(&a.target, &a.span, errors);
                    check_expr(&a.expr, &a.span, errors);
                }
            }
        }
    }
    for eq in &u.equations {
        let target = eq.assigned().or(eq.derivative_of()).unwrap_or_default();
        check_target(target, &eq.span, errors);
        check_expr(&eq.rhs, &eq.span, errors);
    }
    for a in &u.body {
        check_target(&a.target, &a.span, errors);
        check_expr(&a.expr, &a.span, errors);
    }
}
