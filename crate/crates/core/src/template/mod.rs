//! Scalable templates: couple skeletons from a system composition, atomic
//! skeletons with ports derived from the couple's connections, and
//! explicitly marked holes for the generator to complete.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::doc::ComponentNode;
use crate::model::{
    print_section, section_order, Connection, Direction, Endpoint, ModelUnit, PartDecl, PortDecl, Section, UnitKind,
};
use crate::names::{normalize, same_name, to_class_ident, to_instance_ident};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hole {
    Value,
    State,
    Equation,
    FunctionBody,
}

impl Hole {
    pub fn section(self) -> Section {
        match self {
            Hole::Value => Section::Value,
            Hole::State => Section::State,
            Hole::Equation => Section::Equation,
            Hole::FunctionBody => Section::Algorithm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hole::Value => "Value",
            Hole::State => "State",
            Hole::Equation => "Equation",
            Hole::FunctionBody => "FunctionBody",
        }
    }

    /// `/*HOLE:Value*/` etc.
    pub fn marker(self) -> String {
        format!("/*HOLE:{}*/", self.name())
    }

    pub fn from_section(section: Section) -> Option<Hole> {
        match section {
            Section::Value => Some(Hole::Value),
            Section::State => Some(Hole::State),
            Section::Equation => Some(Hole::Equation),
            Section::Algorithm => Some(Hole::FunctionBody),
            _ => None,
        }
    }
}

impl fmt::Display for Hole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("connection endpoint `{0}` names no child of the composition")]
    UnknownPart(String),
    #[error("composition node `{0}` has no children")]
    NoChildren(String),
    #[error("hole {0} is not open in this template")]
    HoleNotOpen(Hole),
    #[error("template still has open holes: {0:?}")]
    HolesRemaining(Vec<Hole>),
}

/// A partially filled unit. Sections listed in `holes` are left for the
/// generator and are empty in `filled`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateInstance {
    pub kind: UnitKind,
    pub filled: ModelUnit,
    pub holes: BTreeSet<Hole>,
}

impl TemplateInstance {
    pub fn new(filled: ModelUnit, holes: impl IntoIterator<Item = Hole>) -> Self {
        TemplateInstance {
            kind: filled.kind,
            filled,
            holes: holes.into_iter().collect(),
        }
    }

    /// X text with each open hole printed as its section keyword followed
    /// by a hole marker.
    pub fn print(&self) -> String {
        let u = &self.filled;
        let mut out = format!("{} {}\n", u.kind.keyword(), u.name);
        for imp in &u.imports {
            out.push_str(&format!("  import {};\n", imp.name));
        }
        for &sec in section_order(u.kind) {
            match Hole::from_section(sec).filter(|h| self.holes.contains(h)) {
                Some(h) => out.push_str(&format!("{}:\n  {}\n", sec.keyword(), h.marker())),
                None if sec == Section::Port || u.section_present(sec) => out.push_str(&print_section(u, sec)),
                None => {}
            }
        }
        out.push_str("end;\n");
        out
    }

    /// The filled part alone, as printed by the canonical printer.
    pub fn print_filled(&self) -> String {
        crate::model::print_unit(&self.filled)
    }

    /// Copies the section belonging to `hole` from `source` and closes it.
    pub fn fill(&mut self, hole: Hole, source: &ModelUnit) -> Result<(), TemplateError> {
        if !self.holes.remove(&hole) {
            return Err(TemplateError::HoleNotOpen(hole));
        }
        match hole {
            Hole::Value => self.filled.values = source.values.clone(),
            Hole::State => self.filled.states = source.states.clone(),
            Hole::Equation => self.filled.equations = source.equations.clone(),
            Hole::FunctionBody => self.filled.body = source.body.clone(),
        }
        Ok(())
    }

    /// The finished unit; fails while holes remain.
    pub fn close(self) -> Result<ModelUnit, TemplateError> {
        if self.holes.is_empty() {
            Ok(self.filled)
        } else {
            Err(TemplateError::HolesRemaining(self.holes.into_iter().collect()))
        }
    }
}

/// Builds the couple for a composition node: one import and one part per
/// child, and the given connections with endpoints resolved to instance
/// names.
pub fn build_couple(node: &ComponentNode, connections: &[Connection]) -> Result<TemplateInstance, TemplateError> {
    if node.children.is_empty() {
        return Err(TemplateError::NoChildren(node.name.clone()));
    }
    let mut unit = ModelUnit::new(UnitKind::Couple, to_class_ident(&node.name));
    let mut by_key: BTreeMap<String, String> = BTreeMap::new();
    for child in &node.children {
        let class = to_class_ident(&child.name);
        let instance = to_instance_ident(&child.name);
        unit.add_import(&class);
        by_key.insert(normalize(&child.name), instance.clone());
        unit.parts.push(PartDecl {
            class_name: class,
            instance_name: instance,
            span: Default::default(),
        });
    }
    for c in connections {
        let resolve = |ep: &Endpoint| -> Result<Endpoint, TemplateError> {
            let part = ep
                .part
                .as_deref()
                .and_then(|p| by_key.get(&normalize(p)))
                .ok_or_else(|| TemplateError::UnknownPart(ep.to_string()))?;
            Ok(Endpoint::new(part.clone(), ep.port.clone()))
        };
        let from = resolve(&c.from)?;
        let to = resolve(&c.to)?;
        unit.connections.push(Connection::new(from, to));
    }
    Ok(TemplateInstance::new(unit, []))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortSpec {
    pub direction: Direction,
    pub port_type: String,
    pub name: String,
}

impl fmt::Display for PortSpec {
    /// `input Real cmd`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.direction, self.port_type, self.name)
    }
}

/// Supplies the value type carried by a part's port.
pub trait PortTypeReasoner {
    fn reason(&self, part: &str, port: &str) -> String;
}

/// Lookup table keyed by `part.port` or bare `port`, with a fallback type.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StaticTypeReasoner {
    pub types: BTreeMap<String, String>,
    pub default_type: Option<String>,
}

impl StaticTypeReasoner {
    pub fn new(types: impl IntoIterator<Item = (String, String)>) -> Self {
        StaticTypeReasoner {
            types: types.into_iter().collect(),
            default_type: None,
        }
    }
}

impl PortTypeReasoner for StaticTypeReasoner {
    fn reason(&self, part: &str, port: &str) -> String {
        let qualified = format!("{part}.{port}");
        self.types
            .iter()
            .find(|(k, _)| same_name(k, &qualified) || (k.split_once('.').is_some_and(|(p, q)| same_name(p, part) && q == port)))
            .or_else(|| self.types.iter().find(|(k, _)| k.as_str() == port))
            .map(|(_, v)| v.clone())
            .or_else(|| self.default_type.clone())
            .unwrap_or_else(|| "Real".to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortConvention {
    /// First endpoint is the data source, so it is an output of its part.
    #[default]
    Dataflow,
    /// First endpoint labelled `input`, second `output`.
    PaperLiteral,
}

impl std::str::FromStr for PortConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dataflow" => Ok(PortConvention::Dataflow),
            "paper-literal" => Ok(PortConvention::PaperLiteral),
            other => Err(format!("unknown port convention `{other}` (expected dataflow or paper-literal)")),
        }
    }
}

/// Ports of `part_name` implied by the couple's connections, deduplicated
/// and sorted.
pub fn extract_subsystem_ports(
    connections: &[Connection],
    part_name: &str,
    reasoner: &dyn PortTypeReasoner,
    convention: PortConvention,
) -> Vec<PortSpec> {
    let (first_dir, second_dir) = match convention {
        PortConvention::Dataflow => (Direction::Output, Direction::Input),
        PortConvention::PaperLiteral => (Direction::Input, Direction::Output),
    };
    let mut out = BTreeSet::new();
    let is_part = |ep: &Endpoint| ep.part.as_deref().is_some_and(|p| same_name(p, part_name));
    for c in connections {
        if is_part(&c.from) {
            out.insert(PortSpec {
                direction: first_dir,
                port_type: reasoner.reason(part_name, &c.from.port),
                name: c.from.port.clone(),
            });
        }
        if is_part(&c.to) {
            out.insert(PortSpec {
                direction: second_dir,
                port_type: reasoner.reason(part_name, &c.to.port),
                name: c.to.port.clone(),
            });
        }
    }
    out.into_iter().collect()
}

/// One warning per port name that was extracted in both directions.
pub fn bidirectional_ports(part_name: &str, ports: &[PortSpec]) -> Vec<Diagnostic> {
    let mut dirs: BTreeMap<&str, BTreeSet<Direction>> = BTreeMap::new();
    for p in ports {
        dirs.entry(&p.name).or_default().insert(p.direction);
    }
    dirs.into_iter()
        .filter(|(_, d)| d.len() > 1)
        .map(|(name, _)| {
            Diagnostic::warning(
                "BidirectionalPort",
                format!("port `{part_name}.{name}` is used as both source and destination; emitted twice"),
            )
        })
        .collect()
}

/// Header and ports of an atomic unit; the behavior sections are holes.
pub fn make_atomic_skeleton(part: &PartDecl, ports: &[PortSpec], kind: UnitKind) -> TemplateInstance {
    let mut unit = ModelUnit::new(kind, part.class_name.clone());
    for p in ports {
        unit.ports.push(PortDecl {
            direction: Some(p.direction),
            port_type: p.port_type.clone(),
            name: p.name.clone(),
            initial: None,
            span: Default::default(),
        });
    }
    let holes = match kind {
        UnitKind::Continuous => vec![Hole::Value, Hole::Equation],
        UnitKind::Function => vec![Hole::FunctionBody],
        _ => vec![Hole::Value, Hole::State],
    };
    TemplateInstance::new(unit, holes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_unit;

    fn node(name: &str, children: &[&str]) -> ComponentNode {
        ComponentNode {
            name: name.into(),
            children: children.iter().map(|c| ComponentNode::leaf(*c)).collect(),
            provenance: vec![],
        }
    }

    fn conn(a: &str, p: &str, b: &str, q: &str) -> Connection {
        Connection::new(Endpoint::new(a, p), Endpoint::new(b, q))
    }

    #[test]
    fn couple_from_composition() {
        let t = build_couple(
            &node("flight system", &["Control", "AutoPilot"]),
            &[conn("Control", "cmd", "AutoPilot", "cmd_in")],
        )
        .unwrap();
        assert!(t.holes.is_empty());
        let u = &t.filled;
        assert_eq!(u.name, "FlightSystem");
        assert_eq!(u.imports.len(), 2);
        assert_eq!(u.parts[1].instance_name, "auto_pilot");
        assert_eq!(u.connections[0].to, Endpoint::new("auto_pilot", "cmd_in"));
        assert_eq!(parse_unit(&t.print()).unwrap(), *u);
    }

    #[test]
    fn minimal_couple_and_unknown_part() {
        let t = build_couple(&node("S", &["A"]), &[]).unwrap();
        assert!(t.filled.connections.is_empty());
        assert!(parse_unit(&t.print()).is_ok());
        let err = build_couple(&node("S", &["A"]), &[conn("A", "p", "Ghost", "q")]).unwrap_err();
        assert_eq!(err, TemplateError::UnknownPart("Ghost.q".into()));
    }

    #[test]
    fn dataflow_and_paper_literal_ports() {
        let cs = [conn("Control", "cmd", "AutoPilot", "cmd_in")];
        let r = StaticTypeReasoner::new([("cmd_in".to_string(), "Int".to_string())]);
        let ap = extract_subsystem_ports(&cs, "AutoPilot", &r, PortConvention::Dataflow);
        assert_eq!(
            ap,
            vec![PortSpec {
                direction: Direction::Input,
                port_type: "Int".into(),
                name: "cmd_in".into()
            }]
        );
        let ctl = extract_subsystem_ports(&cs, "Control", &r, PortConvention::PaperLiteral);
        assert_eq!(ctl[0].to_string(), "input Real cmd");
        assert!(extract_subsystem_ports(&cs, "Radar", &r, PortConvention::Dataflow).is_empty());
    }

    #[test]
    fn both_positions_flagged() {
        let cs = [conn("A", "x", "B", "y"), conn("B", "x", "A", "x")];
        let ports = extract_subsystem_ports(&cs, "A", &StaticTypeReasoner::default(), PortConvention::Dataflow);
        assert_eq!(ports.len(), 2);
        assert_eq!(bidirectional_ports("A", &ports).len(), 1);
    }

    #[test]
    fn skeleton_holes_and_closure() {
        let part = PartDecl {
            class_name: "AutoPilot".into(),
            instance_name: "auto_pilot".into(),
            span: Default::default(),
        };
        let ports = [
            PortSpec {
                direction: Direction::Input,
                port_type: "Int".into(),
                name: "cmd".into(),
            },
            PortSpec {
                direction: Direction::Output,
                port_type: "Real".into(),
                name: "rudder".into(),
            },
        ];
        let mut t = make_atomic_skeleton(&part, &ports, UnitKind::Discrete);
        let text = t.print();
        assert!(text.contains("/*HOLE:Value*/") && text.contains("/*HOLE:State*/"), "{text}");
        assert!(parse_unit(&text).is_ok());

        let c = make_atomic_skeleton(&part, &[], UnitKind::Continuous);
        assert_eq!(c.holes, [Hole::Value, Hole::Equation].into_iter().collect());
        assert!(parse_unit(&c.print()).is_ok());

        let src = parse_unit(
            "discrete X\nvalue:\n Real gain = 1.0;\nstate:\ninitial state Hold\nwhen entry() then statehold(inf); end;\nend;\nend;",
        )
        .unwrap();
        t.fill(Hole::Value, &src).unwrap();
        t.fill(Hole::State, &src).unwrap();
        assert_eq!(t.fill(Hole::State, &src), Err(TemplateError::HoleNotOpen(Hole::State)));
        let u = t.close().unwrap();
        assert_eq!(parse_unit(&crate::model::print_unit(&u)).unwrap(), u);
    }
}
