//! DEVS simulation of linked models.
//!
//! The model tree is flattened to its atomic leaves, and couplings are
//! resolved through intermediate couple ports into a leaf-to-leaf routing
//! table. Each time instant is processed as:
//!
//! 1. continuous leaves integrate up to the instant and, on grid points,
//!    sample their outputs;
//! 2. imminent discrete leaves run internal transitions in path order;
//! 3. emitted outputs are routed, and each receiving discrete leaf runs
//!    one external transition; its outputs form the next round, until no
//!    more events are produced at this instant.

mod atomic;
mod continuous;
mod eval;
mod trace;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{Direction, LinkedModel, ModelUnit, UnitKind};

pub use atomic::{step_atomic, AtomicRuntime};
pub use continuous::ContinuousRuntime;
pub use eval::{eval, initial_env, EvalCtx, EvalError, FunctionLib};
pub use trace::{compare_traces, PortVerdict, SimulationTrace, TraceDiff, TraceError};
pub use value::Value;

const MAX_ROUNDS: usize = 1_000;
const MAX_STEPS_PER_INSTANT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Emitted by a leaf on one of its output ports.
    Output,
    /// Delivered to a leaf input port or a top-level output port.
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortEvent {
    pub time: f64,
    pub part_path: String,
    pub port: String,
    pub value: Value,
    pub kind: EventKind,
}

impl PortEvent {
    /// `path.port`
    pub fn key(&self) -> String {
        format!("{}.{}", self.part_path, self.port)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    DivisionByZero,
    Domain,
    TypeError,
    Arity,
    UnknownFunction,
    UnknownIdentifier,
    UnknownTransformTarget,
    Recursion,
    AlgebraicLoop,
    NonConvergence,
    TimeReversal,
    InvalidConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeFault {
    pub time: f64,
    pub part_path: String,
    pub kind: FaultKind,
    pub cause: String,
}

impl fmt::Display for RuntimeFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "runtime fault at t={} in `{}`: {}", self.time, self.part_path, self.cause)
    }
}

impl std::error::Error for RuntimeFault {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    ExplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub end_time: f64,
    pub continuous_step: f64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Recorded for provenance; the kernel itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            end_time: 10.0,
            continuous_step: 0.1,
            integrator: Integrator::ExplicitEuler,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.continuous_step > 0.0 && self.continuous_step.is_finite()) {
            return Err(format!("continuous_step must be positive, got {}", self.continuous_step));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return Err(format!("end_time must be nonnegative, got {}", self.end_time));
        }
        Ok(())
    }
}

enum Leaf {
    Discrete(AtomicRuntime),
    Continuous(ContinuousRuntime),
}

type Node = (String, String);

/// Leaves plus the leaf-to-destination routing table.
struct Flat {
    leaves: BTreeMap<String, Leaf>,
    routes: BTreeMap<Node, Vec<Node>>,
    ports: BTreeSet<String>,
}

fn flatten(model: &LinkedModel) -> Result<Flat, RuntimeFault> {
    let lib: Arc<FunctionLib> = Arc::new(
        model
            .functions()
            .map(|u| (u.name.clone(), u.clone()))
            .collect(),
    );
    let mut leaves = BTreeMap::new();
    let mut edges: BTreeMap<Node, Vec<Node>> = BTreeMap::new();
    let mut ports = BTreeSet::new();
    let top = model.top_unit();
    for p in &top.ports {
        ports.insert(format!("{}.{}", top.name, p.name));
    }

    let mut stack: Vec<(String, &ModelUnit)> = vec![(top.name.clone(), top)];
    while let Some((path, unit)) = stack.pop() {
        match unit.kind {
            UnitKind::Couple => {
                let node = |ep: &crate::model::Endpoint| -> Node {
                    match &ep.part {
                        Some(p) => (format!("{path}.{p}"), ep.port.clone()),
                        None => (path.clone(), ep.port.clone()),
                    }
                };
                for c in &unit.connections {
                    edges.entry(node(&c.from)).or_default().push(node(&c.to));
                }
                for part in &unit.parts {
                    let child = &model.units[&part.class_name];
                    stack.push((format!("{path}.{}", part.instance_name), child));
                }
            }
            UnitKind::Discrete | UnitKind::Continuous => {
                for p in &unit.ports {
                    ports.insert(format!("{path}.{}", p.name));
                }
                let shared = Arc::new(unit.clone());
                let leaf = if unit.kind == UnitKind::Discrete {
                    Leaf::Discrete(AtomicRuntime::new(path.clone(), shared, Arc::clone(&lib), 0.0)?)
                } else {
                    Leaf::Continuous(ContinuousRuntime::new(path.clone(), shared, Arc::clone(&lib), 0.0)?)
                };
                leaves.insert(path, leaf);
            }
            UnitKind::Function => {}
        }
    }

    let top_outputs: BTreeSet<Node> = top
        .ports
        .iter()
        .filter(|p| p.direction == Some(Direction::Output))
        .map(|p| (top.name.clone(), p.name.clone()))
        .collect();
    let mut routes = BTreeMap::new();
    for (path, leaf) in &leaves {
        let unit = match leaf {
            Leaf::Discrete(rt) => &rt.unit,
            Leaf::Continuous(rt) => &rt.unit,
        };
        for p in unit.ports.iter().filter(|p| p.direction == Some(Direction::Output)) {
            let start = (path.clone(), p.name.clone());
            let mut dests = BTreeSet::new();
            let mut seen = BTreeSet::new();
            let mut frontier = vec![start.clone()];
            while let Some(n) = frontier.pop() {
                for next in edges.get(&n).into_iter().flatten() {
                    if !seen.insert(next.clone()) {
                        continue;
                    }
                    if leaves.contains_key(&next.0) || top_outputs.contains(next) {
                        dests.insert(next.clone());
                    } else {
                        frontier.push(next.clone());
                    }
                }
            }
            routes.insert(start, dests.into_iter().collect());
        }
    }
    Ok(Flat { leaves, routes, ports })
}

/// Runs `model` from t=0 to `config.end_time`.
pub fn simulate(model: &LinkedModel, config: &SimulationConfig) -> Result<SimulationTrace, RuntimeFault> {
    config.validate().map_err(|cause| RuntimeFault {
        time: 0.0,
        part_path: model.top.clone(),
        kind: FaultKind::InvalidConfig,
        cause,
    })?;
    let Flat {
        mut leaves,
        routes,
        ports,
    } = flatten(model)?;
    let mut trace = SimulationTrace {
        events: Vec::new(),
        ports,
    };
    let has_continuous = leaves.values().any(|l| matches!(l, Leaf::Continuous(_)));
    let h = config.continuous_step;
    let grid_last = (config.end_time / h + 1e-9).floor() as u64;
    let grid = |k: u64| (k as f64 * h).min(config.end_time);
    let mut k = 0u64;

    let mut initial: Vec<PortEvent> = Vec::new();
    for leaf in leaves.values_mut() {
        if let Leaf::Discrete(rt) = leaf {
            initial.append(&mut rt.pending_outputs);
        }
    }
    let mut first = true;
    let mut last_t = f64::NEG_INFINITY;
    let mut same_instant = 0usize;

    loop {
        let t_int = leaves
            .values()
            .filter_map(|l| match l {
                Leaf::Discrete(rt) => Some(rt.next_internal_time()),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        let t_grid = if has_continuous && k <= grid_last {
            grid(k)
        } else {
            f64::INFINITY
        };
        let t = if first { 0.0 } else { t_int.min(t_grid) };
        if !t.is_finite() || t > config.end_time {
            break;
        }
        if t == last_t {
            same_instant += 1;
            if same_instant > MAX_STEPS_PER_INSTANT {
                return Err(RuntimeFault {
                    time: t,
                    part_path: model.top.clone(),
                    kind: FaultKind::NonConvergence,
                    cause: "too many transitions at one instant".into(),
                });
            }
        } else {
            same_instant = 0;
            last_t = t;
        }

        let mut round = Vec::new();
        for leaf in leaves.values_mut() {
            if let Leaf::Continuous(rt) = leaf {
                rt.advance(t, config.integrator)?;
                if t == t_grid {
                    round.extend(rt.sample(t));
                }
            }
        }
        if t == t_grid {
            k += 1;
        }
        if first {
            round.append(&mut initial);
            first = false;
        }
        for leaf in leaves.values_mut() {
            if let Leaf::Discrete(rt) = leaf {
                if rt.next_internal_time() <= t {
                    rt.internal(t, &mut round)?;
                }
            }
        }

        let mut rounds = 0;
        while !round.is_empty() {
            rounds += 1;
            if rounds > MAX_ROUNDS {
                return Err(RuntimeFault {
                    time: t,
                    part_path: model.top.clone(),
                    kind: FaultKind::NonConvergence,
                    cause: format!("event exchange did not settle after {MAX_ROUNDS} rounds"),
                });
            }
            let mut deliveries: BTreeMap<String, Vec<PortEvent>> = BTreeMap::new();
            for ev in round.drain(..) {
                let dests = routes
                    .get(&(ev.part_path.clone(), ev.port.clone()))
                    .cloned()
                    .unwrap_or_default();
                let value = ev.value.clone();
                trace.events.push(ev);
                for (path, port) in dests {
                    let d = PortEvent {
                        time: t,
                        part_path: path.clone(),
                        port,
                        value: value.clone(),
                        kind: EventKind::Input,
                    };
                    trace.events.push(d.clone());
                    if leaves.contains_key(&path) {
                        deliveries.entry(path).or_default().push(d);
                    }
                }
            }
            for (path, inputs) in deliveries {
                match leaves.get_mut(&path).expect("delivery to a leaf") {
                    Leaf::Discrete(rt) => rt.external(&inputs, t, &mut round)?,
                    Leaf::Continuous(rt) => rt.receive(&inputs, t)?,
                }
            }
        }
    }
    Ok(trace)
}
