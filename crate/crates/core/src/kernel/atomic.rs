//! Discrete (DEVS atomic) unit runtime.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::{Action, Direction, ModelUnit, Transform};

use super::eval::{assign, eval, initial_env, EvalCtx, EvalError, FunctionLib};
use super::{EventKind, FaultKind, PortEvent, RuntimeFault, Value};

/// State of one discrete unit instance.
#[derive(Debug, Clone)]
pub struct AtomicRuntime {
    pub part_path: String,
    pub unit: Arc<ModelUnit>,
    pub lib: Arc<FunctionLib>,
    pub current_state: String,
    pub value_env: BTreeMap<String, Value>,
    pub time_of_last_event: f64,
    pub time_advance: f64,
    pub pending_outputs: Vec<PortEvent>,
}

impl AtomicRuntime {
    /// Creates the runtime at time `now` and enters the initial state; the
    /// initial entry actions' outputs are left in `pending_outputs`.
    pub fn new(
        part_path: impl Into<String>,
        unit: Arc<ModelUnit>,
        lib: Arc<FunctionLib>,
        now: f64,
    ) -> Result<Self, RuntimeFault> {
        let value_env = initial_env(&unit);
        let initial = unit
            .states
            .as_ref()
            .map(|sm| sm.initial_state.clone())
            .unwrap_or_default();
        let mut rt = AtomicRuntime {
            part_path: part_path.into(),
            unit,
            lib,
            current_state: initial.clone(),
            value_env,
            time_of_last_event: now,
            time_advance: f64::INFINITY,
            pending_outputs: Vec::new(),
        };
        if rt.unit.states.is_some() {
            let mut out = Vec::new();
            rt.enter(&initial, now, &mut out)?;
            rt.pending_outputs = out;
        }
        Ok(rt)
    }

    pub fn next_internal_time(&self) -> f64 {
        self.time_of_last_event + self.time_advance
    }

    fn fault(&self, now: f64, e: EvalError) -> RuntimeFault {
        RuntimeFault {
            time: now,
            part_path: self.part_path.clone(),
            kind: e.kind,
            cause: e.message,
        }
    }

    fn run_actions(&mut self, actions: &[Action], now: f64, out: &mut Vec<PortEvent>) -> Result<(), RuntimeFault> {
        for a in actions {
            let v = {
                let ctx = EvalCtx {
                    vars: &self.value_env,
                    lib: &self.lib,
                    time: now,
                    timeout: false,
                    depth: 0,
                };
                eval(&a.expr, &ctx).map_err(|e| self.fault(now, e))?
            };
            assign(&self.unit, &mut self.value_env, &a.target, v).map_err(|e| self.fault(now, e))?;
            let is_output = self
                .unit
                .port(&a.target)
                .is_some_and(|p| p.direction == Some(Direction::Output));
            if is_output {
                out.push(PortEvent {
                    time: now,
                    part_path: self.part_path.clone(),
                    port: a.target.clone(),
                    value: self.value_env[&a.target].clone(),
                    kind: EventKind::Output,
                });
            }
        }
        Ok(())
    }

    fn enter(&mut self, state: &str, now: f64, out: &mut Vec<PortEvent>) -> Result<(), RuntimeFault> {
        let unit = Arc::clone(&self.unit);
        let def = unit.states.as_ref().and_then(|sm| sm.state(state)).ok_or_else(|| RuntimeFault {
            time: now,
            part_path: self.part_path.clone(),
            kind: FaultKind::UnknownTransformTarget,
            cause: format!("no state `{state}`"),
        })?;
        self.current_state = state.to_string();
        self.time_of_last_event = now;
        self.time_advance = def.hold_time();
        self.run_actions(&def.entry_actions, now, out)
    }

    /// First transform of the current state whose condition holds.
    fn select(&self, now: f64, timeout: bool) -> Result<Option<Transform>, RuntimeFault> {
        let Some(def) = self.unit.states.as_ref().and_then(|sm| sm.state(&self.current_state)) else {
            return Ok(None);
        };
        let ctx = EvalCtx {
            vars: &self.value_env,
            lib: &self.lib,
            time: now,
            timeout,
            depth: 0,
        };
        for tr in &def.transforms {
            match eval(&tr.condition, &ctx).map_err(|e| self.fault(now, e))? {
                Value::Bool(true) => return Ok(Some(tr.clone())),
                Value::Bool(false) => {}
                other => {
                    return Err(self.fault(
                        now,
                        EvalError {
                            kind: FaultKind::TypeError,
                            message: format!("transform condition evaluated to {}", other.type_name()),
                        },
                    ))
                }
            }
        }
        Ok(None)
    }

    fn fire(&mut self, tr: &Transform, now: f64, out: &mut Vec<PortEvent>) -> Result<(), RuntimeFault> {
        self.run_actions(&tr.actions, now, out)?;
        self.enter(&tr.target, now, out)
    }

    pub(crate) fn internal(&mut self, now: f64, out: &mut Vec<PortEvent>) -> Result<(), RuntimeFault> {
        match self.select(now, true)? {
            Some(tr) => self.fire(&tr, now, out),
            None => {
                self.time_of_last_event = now;
                self.time_advance = f64::INFINITY;
                Ok(())
            }
        }
    }

    pub(crate) fn external(&mut self, inputs: &[PortEvent], now: f64, out: &mut Vec<PortEvent>) -> Result<(), RuntimeFault> {
        for ev in inputs {
            let unit = Arc::clone(&self.unit);
            assign(&unit, &mut self.value_env, &ev.port, ev.value.clone()).map_err(|e| self.fault(now, e))?;
        }
        if let Some(tr) = self.select(now, false)? {
            self.fire(&tr, now, out)?;
        }
        Ok(())
    }
}

/// One DEVS step. When `now` reaches the scheduled internal time the
/// internal transition runs first; any `inputs` are then applied as an
/// external transition.
pub fn step_atomic(
    mut rt: AtomicRuntime,
    inputs: &[PortEvent],
    now: f64,
) -> Result<(AtomicRuntime, Vec<PortEvent>), RuntimeFault> {
    let mut out = std::mem::take(&mut rt.pending_outputs);
    if now < rt.time_of_last_event {
        return Err(RuntimeFault {
            time: now,
            part_path: rt.part_path.clone(),
            kind: FaultKind::TimeReversal,
            cause: format!("step at {now} precedes last event at {}", rt.time_of_last_event),
        });
    }
    if now >= rt.next_internal_time() {
        rt.internal(now, &mut out)?;
    }
    if !inputs.is_empty() {
        rt.external(inputs, now, &mut out)?;
    }
    Ok((rt, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_unit;

    const AUTOPILOT: &str = r#"
discrete AutoPilot
port:
  input Int cmd;
  output Real rudder;
state:
  initial state Hold
    when entry() then
      statehold(5);
      rudder = 0.0;
    end;
    when cmd == 1 then
      transform to Adjust;
    end;
    when timeout() then
      transform to Hold;
    end;
  end;
  state Adjust
    when entry() then
      statehold(2);
      rudder = 1.5;
    end;
    when timeout() then
      transform to Hold;
    end;
  end;
end;
"#;

    fn rt() -> AtomicRuntime {
        AtomicRuntime::new("top.ap", Arc::new(parse_unit(AUTOPILOT).unwrap()), Arc::default(), 0.0).unwrap()
    }

    fn input(v: i64, t: f64) -> PortEvent {
        PortEvent {
            time: t,
            part_path: "top.ap".into(),
            port: "cmd".into(),
            value: Value::Int(v),
            kind: EventKind::Input,
        }
    }

    #[test]
    fn entry_outputs_and_hold() {
        let r = rt();
        assert_eq!(r.pending_outputs.len(), 1);
        assert_eq!(r.time_advance, 5.0);
    }

    #[test]
    fn internal_fires_at_ta_expiry() {
        let (r, out) = step_atomic(rt(), &[], 0.0).unwrap();
        assert_eq!(out.len(), 1);
        let (r, out) = step_atomic(r, &[], 5.0).unwrap();
        assert_eq!(r.current_state, "Hold");
        assert_eq!(r.time_of_last_event, 5.0);
        assert_eq!(out[0].value, Value::Real(0.0));
    }

    #[test]
    fn external_transition_when_condition_holds() {
        let (r, _) = step_atomic(rt(), &[], 0.0).unwrap();
        let (r, out) = step_atomic(r, &[input(1, 1.0)], 1.0).unwrap();
        assert_eq!(r.current_state, "Adjust");
        assert_eq!(r.next_internal_time(), 3.0);
        assert_eq!(out[0].value, Value::Real(1.5));
    }

    #[test]
    fn external_without_firing_keeps_clock() {
        let (r, _) = step_atomic(rt(), &[], 0.0).unwrap();
        let (r, out) = step_atomic(r, &[input(0, 1.0)], 1.0).unwrap();
        assert_eq!(r.current_state, "Hold");
        assert_eq!(r.next_internal_time(), 5.0);
        assert!(out.is_empty());
        assert_eq!(r.value_env["cmd"], Value::Int(0));
    }
}
