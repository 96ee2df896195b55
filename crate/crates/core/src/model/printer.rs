//! Canonical text form. Sections print in template order for the unit's
//! kind; empty sections are omitted.

use std::fmt::Write;

use super::{Action, Hold, ModelUnit, Section, StateDef, TypedBinding, UnitKind};

/// Section order used when printing a unit of the given kind.
pub(crate) fn section_order(kind: UnitKind) -> &'static [Section] {
    use Section::*;
    match kind {
        UnitKind::Couple => &[Part, Parameter, Port, Value, Connection],
        UnitKind::Discrete => &[Parameter, Value, Port, State],
        UnitKind::Continuous => &[Parameter, Value, Port, Equation],
        UnitKind::Function => &[Parameter, Value, Port, Algorithm],
    }
}

pub fn print_unit(unit: &ModelUnit) -> String {
    let mut out = format!("{} {}\n", unit.kind.keyword(), unit.name);
    for imp in &unit.imports {
        let _ = writeln!(out, "  import {};", imp.name);
    }
    for &sec in section_order(unit.kind) {
        if unit.section_present(sec) {
            out.push_str(&print_section(unit, sec));
        }
    }
    out.push_str("end;\n");
    out
}

pub fn print_units(units: &[ModelUnit]) -> String {
    units.iter().map(print_unit).collect::<Vec<_>>().join("\n")
}

fn binding(out: &mut String, b: &TypedBinding) {
    let _ = write!(out, "  {} {}", b.data_type, b.name);
    if let Some(v) = &b.initial {
        let _ = write!(out, " = {v}");
    }
    out.push_str(";\n");
}

fn actions(out: &mut String, acts: &[Action], indent: &str) {
    for a in acts {
        let _ = writeln!(out, "{indent}{} = {};", a.target, a.expr);
    }
}

fn hold_text(h: Hold) -> String {
    match h {
        Hold::Infinite => "inf".to_string(),
        Hold::Finite(t) => format!("{t}"),
    }
}

fn state(out: &mut String, st: &StateDef, initial: bool) {
    let _ = writeln!(out, "{}state {}", if initial { "initial " } else { "" }, st.name);
    if st.statehold.is_some() || !st.entry_actions.is_empty() {
        out.push_str("  when entry() then\n");
        if let Some(h) = st.statehold {
            let _ = writeln!(out, "    statehold({});", hold_text(h));
        }
        actions(out, &st.entry_actions, "    ");
        out.push_str("  end;\n");
    }
    for tr in &st.transforms {
        let _ = writeln!(out, "  when {} then", tr.condition);
        actions(out, &tr.actions, "    ");
        let _ = writeln!(out, "    transform to {};", tr.target);
        out.push_str("  end;\n");
    }
    out.push_str("end;\n");
}

/// One section with its keyword header, or just the header when empty.
pub fn print_section(unit: &ModelUnit, section: Section) -> String {
    let mut out = format!("{}:\n", section.keyword());
    match section {
        Section::Part => {
            for p in &unit.parts {
                let _ = writeln!(out, "  {} {};", p.class_name, p.instance_name);
            }
        }
        Section::Parameter => unit.parameters.iter().for_each(|b| binding(&mut out, b)),
        Section::Value => unit.values.iter().for_each(|b| binding(&mut out, b)),
        Section::Port => {
            for p in &unit.ports {
                out.push_str("  ");
                if let Some(d) = p.direction {
                    let _ = write!(out, "{} ", d.keyword());
                }
                let _ = write!(out, "{} {}", p.port_type, p.name);
                if let Some(v) = &p.initial {
                    let _ = write!(out, " = {v}");
                }
                out.push_str(";\n");
            }
        }
        Section::Connection => {
            for c in &unit.connections {
                let _ = writeln!(out, "  {c};");
            }
        }
        Section::State => {
            if let Some(sm) = &unit.states {
                for st in &sm.states {
                    state(&mut out, st, st.name == sm.initial_state);
                }
            }
        }
        Section::Equation => {
            for e in &unit.equations {
                let _ = writeln!(out, "  {} = {};", e.lhs, e.rhs);
            }
        }
        Section::Algorithm => actions(&mut out, &unit.body, "  "),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_unit, Direction, Literal, PortDecl};
    use super::*;
    use crate::diag::Span;

    #[test]
    fn zero_imports_prints_no_import_line() {
        let u = ModelUnit::new(UnitKind::Continuous, "C");
        let text = print_unit(&u);
        assert!(!text.contains("import"));
        assert_eq!(text, "continuous C\nend;\n");
    }

    #[test]
    fn reals_keep_their_type() {
        let mut u = ModelUnit::new(UnitKind::Discrete, "D");
        u.ports.push(PortDecl {
            direction: Some(Direction::Output),
            port_type: "Real".into(),
            name: "y".into(),
            initial: Some(Literal::Real(2.0)),
            span: Span::default(),
        });
        let text = print_unit(&u);
        assert!(text.contains("output Real y = 2.0;"), "{text}");
        assert_eq!(parse_unit(&text).unwrap(), u);
    }

    #[test]
    fn state_round_trip() {
        let src = "discrete D\nport:\n output Int y;\n input Int x;\nstate:\ninitial state A\nwhen entry() then statehold(0.5); y = 1; end;\nwhen x > 0 and not x == 3 then y = -x; transform to A; end;\nend;\nend;";
        let u = parse_unit(src).unwrap();
        let printed = print_unit(&u);
        assert_eq!(parse_unit(&printed).unwrap(), u, "{printed}");
        assert_eq!(print_unit(&parse_unit(&printed).unwrap()), printed);
    }
}
