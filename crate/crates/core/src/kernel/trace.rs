use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EventKind, PortEvent, Value};

/// Everything a run emitted, in processing order, plus the set of ports
/// (`path.port`) the model declares.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub events: Vec<PortEvent>,
    pub ports: BTreeSet<String>,
}

impl SimulationTrace {
    /// `time<TAB>part_path<TAB>port<TAB>value` per event.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", e.time, e.part_path, e.port, e.value);
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            events: &'a [PortEvent],
        }
        serde_json::to_string_pretty(&Doc { events: &self.events }).expect("trace serializes")
    }

    /// Events on one port, in order.
    pub fn port_events(&self, key: &str) -> Vec<&PortEvent> {
        self.events.iter().filter(|e| e.key() == key).collect()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &PortEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Output)
    }

    /// Events grouped by port key.
    pub fn by_port(&self) -> BTreeMap<String, Vec<&PortEvent>> {
        let mut map: BTreeMap<String, Vec<&PortEvent>> = self.ports.iter().map(|p| (p.clone(), Vec::new())).collect();
        for e in &self.events {
            map.entry(e.key()).or_default().push(e);
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("port sets differ: only in actual {only_actual:?}, only in reference {only_reference:?}")]
    PortSetMismatch {
        only_actual: Vec<String>,
        only_reference: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortVerdict {
    pub matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TraceDiff {
    pub ports: BTreeMap<String, PortVerdict>,
}

impl TraceDiff {
    pub fn all_match(&self) -> bool {
        self.ports.values().all(|v| v.matches)
    }

    pub fn mismatched(&self) -> Vec<&str> {
        self.ports
            .iter()
            .filter(|(_, v)| !v.matches)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn values_match(a: &Value, b: &Value, tol: f64) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => a == b,
    }
}

/// Per-port comparison. Event counts and times must agree exactly;
/// numeric values within `tol`.
pub fn compare_traces(actual: &SimulationTrace, reference: &SimulationTrace, tol: f64) -> Result<TraceDiff, TraceError> {
    if actual.ports != reference.ports {
        return Err(TraceError::PortSetMismatch {
            only_actual: actual.ports.difference(&reference.ports).cloned().collect(),
            only_reference: reference.ports.difference(&actual.ports).cloned().collect(),
        });
    }
    let a = actual.by_port();
    let r = reference.by_port();
    let keys: BTreeSet<&String> = a.keys().chain(r.keys()).collect();
    let empty = Vec::new();
    let mut diff = TraceDiff::default();
    for key in keys {
        let (ea, er) = (a.get(key).unwrap_or(&empty), r.get(key).unwrap_or(&empty));
        let reason = if ea.len() != er.len() {
            Some(format!("{} events vs {} in reference", ea.len(), er.len()))
        } else {
            ea.iter().zip(er.iter()).enumerate().find_map(|(i, (x, y))| {
                if x.time != y.time {
                    Some(format!("event {i} at t={} vs t={}", x.time, y.time))
                } else if !values_match(&x.value, &y.value, tol) {
                    Some(format!("event {i} value {} vs {}", x.value, y.value))
                } else {
                    None
                }
            })
        };
        diff.ports.insert(
            key.clone(),
            PortVerdict {
                matches: reason.is_none(),
                reason,
            },
        );
    }
    Ok(diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, port: &str, v: f64) -> PortEvent {
        PortEvent {
            time: t,
            part_path: "top.b".into(),
            port: port.into(),
            value: Value::Real(v),
            kind: EventKind::Output,
        }
    }

    fn trace(events: Vec<PortEvent>) -> SimulationTrace {
        SimulationTrace {
            events,
            ports: ["top.b.volt".to_string(), "top.b.amp".to_string()].into_iter().collect(),
        }
    }

    #[test]
    fn reflexive() {
        let t = trace(vec![ev(0.0, "volt", 28.5), ev(0.0, "amp", 1.0)]);
        assert!(compare_traces(&t, &t, 0.0).unwrap().all_match());
    }

    #[test]
    fn tolerance() {
        let a = trace(vec![ev(0.0, "volt", 28.5)]);
        let b = trace(vec![ev(0.0, "volt", 28.5000004)]);
        assert!(compare_traces(&a, &b, 1e-6).unwrap().all_match());
        assert!(!compare_traces(&a, &b, 0.0).unwrap().all_match());
    }

    #[test]
    fn count_mismatch_is_local() {
        let a = trace(vec![ev(0.0, "volt", 1.0), ev(1.0, "volt", 1.0), ev(0.0, "amp", 2.0)]);
        let b = trace(vec![ev(0.0, "volt", 1.0), ev(0.0, "amp", 2.0)]);
        let d = compare_traces(&a, &b, 0.0).unwrap();
        assert_eq!(d.mismatched(), vec!["top.b.volt"]);
    }

    #[test]
    fn port_set_mismatch() {
        let a = trace(vec![]);
        let mut b = trace(vec![]);
        b.ports.insert("top.x.y".into());
        assert!(matches!(compare_traces(&a, &b, 0.0), Err(TraceError::PortSetMismatch { .. })));
    }

    #[test]
    fn tsv_format() {
        let t = trace(vec![ev(0.5, "volt", 28.5)]);
        assert_eq!(t.to_tsv(), "0.5\ttop.b\tvolt\t28.5\n");
        assert!(t.to_json().contains("\"events\""));
    }
}
