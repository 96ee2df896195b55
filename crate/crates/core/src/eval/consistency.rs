use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Direction, Endpoint, LinkedModel, ModelUnit, UnitKind, ValueType};
use crate::names::same_name;

use super::metrics::ConsistencyTally;

/// Header, port and definition tallies of one unit. Couples use `port`,
/// atomic units use `definition`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTally {
    pub header: ConsistencyTally,
    pub port: ConsistencyTally,
    pub definition: ConsistencyTally,
}

pub(crate) fn find_unit<'a>(units: &'a [ModelUnit], name: &str) -> Option<&'a ModelUnit> {
    units.iter().find(|u| u.name == name).or_else(|| units.iter().find(|u| same_name(&u.name, name)))
}

fn type_agrees(from: ValueType, to: ValueType) -> bool {
    from == to || (from == ValueType::Int && to == ValueType::Real)
}

/// The port an endpoint names, with the direction it must have for data to
/// flow along the connection.
fn resolve<'a>(units: &'a [ModelUnit], couple: &ModelUnit, ep: &Endpoint, source: bool) -> Option<(&'a ModelUnit, Direction)> {
    match &ep.part {
        Some(inst) => {
            let part = couple.part(inst)?;
            let class = find_unit(units, &part.class_name)?;
            Some((class, if source { Direction::Output } else { Direction::Input }))
        }
        None => {
            let own = find_unit(units, &couple.name)?;
            Some((own, if source { Direction::Input } else { Direction::Output }))
        }
    }
}

fn couple_ports(units: &[ModelUnit], couple: &ModelUnit) -> ConsistencyTally {
    let mut t = ConsistencyTally::default();
    for c in &couple.connections {
        let from = resolve(units, couple, &c.from, true).and_then(|(u, d)| Some((u.port(&c.from.port)?, d)));
        let to = resolve(units, couple, &c.to, false).and_then(|(u, d)| Some((u.port(&c.to.port)?, d)));
        let types_ok = match (from, to) {
            (Some((f, _)), Some((g, _))) => type_agrees(f.value_type(), g.value_type()),
            _ => true,
        };
        for side in [from, to] {
            t.add(match side {
                Some((p, want)) => p.direction.is_none_or(|d| d == want) && types_ok,
                None => false,
            });
        }
    }
    t
}

fn written_names(u: &ModelUnit) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Some(sm) = &u.states {
        for st in &sm.states {
            out.extend(st.entry_actions.iter().map(|a| a.target.clone()));
            for tr in &st.transforms {
                out.extend(tr.actions.iter().map(|a| a.target.clone()));
            }
        }
    }
    for eq in &u.equations {
        if let Some(v) = eq.assigned().or(eq.derivative_of()) {
            out.insert(v.to_string());
        }
    }
    out.extend(u.body.iter().map(|a| a.target.clone()));
    out
}

fn atomic_definition(units: &[ModelUnit], u: &ModelUnit) -> ConsistencyTally {
    let mut t = ConsistencyTally::default();
    let written = written_names(u);
    for p in &u.ports {
        t.add(match p.direction {
            Some(Direction::Output) => written.contains(&p.name),
            Some(Direction::Input) => !written.contains(&p.name),
            None => false,
        });
    }
    for f in u.called_functions() {
        t.add(units.iter().any(|g| g.kind == UnitKind::Function && g.name == f));
    }
    // Parent connection endpoints naming a port this unit lacks.
    for couple in units.iter().filter(|c| c.kind == UnitKind::Couple) {
        for c in &couple.connections {
            for ep in [&c.from, &c.to] {
                let Some(inst) = &ep.part else { continue };
                let Some(part) = couple.part(inst) else { continue };
                if same_name(&part.class_name, &u.name) && u.port(&ep.port).is_none() {
                    t.add(false);
                }
            }
        }
    }
    t
}

/// Tallies for every couple and atomic unit of `units`. A unit's header is
/// consistent when a couple instantiates it by name; `top` is consistent
/// when it matches `expected_top` (or always, without one).
pub fn consistency_tallies(units: &[ModelUnit], top: Option<&str>, expected_top: Option<&str>) -> BTreeMap<String, UnitTally> {
    let mut out = BTreeMap::new();
    for u in units.iter().filter(|u| u.kind != UnitKind::Function) {
        let mut tally = UnitTally::default();
        let is_top = top.is_some_and(|t| t == u.name);
        tally.header.add(if is_top {
            expected_top.is_none_or(|e| same_name(e, &u.name))
        } else {
            units
                .iter()
                .filter(|c| c.kind == UnitKind::Couple)
                .any(|c| c.parts.iter().any(|p| same_name(&p.class_name, &u.name)))
        });
        if u.kind == UnitKind::Couple {
            tally.port = couple_ports(units, u);
        } else {
            tally.definition = atomic_definition(units, u);
        }
        out.insert(u.name.clone(), tally);
    }
    out
}

/// Tallies over a linked model set.
pub fn consistency_check(model: &LinkedModel) -> BTreeMap<String, UnitTally> {
    let units: Vec<ModelUnit> = model.units.values().cloned().collect();
    consistency_tallies(&units, Some(&model.top), None)
}
