//! Continuous unit runtime: causal equation ordering and fixed-step
//! integration with inputs held constant across a step.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::model::{Direction, ModelUnit};

use super::eval::{assign, eval, initial_env, EvalCtx, EvalError, FunctionLib};
use super::{EventKind, FaultKind, Integrator, PortEvent, RuntimeFault, Value};

#[derive(Debug, Clone)]
pub struct ContinuousRuntime {
    pub part_path: String,
    pub unit: Arc<ModelUnit>,
    pub lib: Arc<FunctionLib>,
    pub value_env: BTreeMap<String, Value>,
    pub last_time: f64,
    algebraic: Vec<usize>,
    derivatives: Vec<(String, usize)>,
}

impl ContinuousRuntime {
    pub fn new(
        part_path: impl Into<String>,
        unit: Arc<ModelUnit>,
        lib: Arc<FunctionLib>,
        now: f64,
    ) -> Result<Self, RuntimeFault> {
        let part_path = part_path.into();
        let order = algebraic_order(&unit).map_err(|cycle| RuntimeFault {
            time: now,
            part_path: part_path.clone(),
            kind: FaultKind::AlgebraicLoop,
            cause: format!("algebraic loop through {}", cycle.join(", ")),
        })?;
        let derivatives = unit
            .equations
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.derivative_of().map(|v| (v.to_string(), i)))
            .collect();
        let mut rt = ContinuousRuntime {
            part_path,
            value_env: initial_env(&unit),
            unit,
            lib,
            last_time: now,
            algebraic: order,
            derivatives,
        };
        let mut env = std::mem::take(&mut rt.value_env);
        rt.solve_algebraic(&mut env, now)?;
        rt.value_env = env;
        Ok(rt)
    }

    fn fault(&self, now: f64, e: EvalError) -> RuntimeFault {
        RuntimeFault {
            time: now,
            part_path: self.part_path.clone(),
            kind: e.kind,
            cause: e.message,
        }
    }

    fn solve_algebraic(&self, env: &mut BTreeMap<String, Value>, t: f64) -> Result<(), RuntimeFault> {
        for &i in &self.algebraic {
            let eq = &self.unit.equations[i];
            let v = {
                let ctx = EvalCtx {
                    vars: env,
                    lib: &self.lib,
                    time: t,
                    timeout: false,
                    depth: 0,
                };
                eval(&eq.rhs, &ctx).map_err(|e| self.fault(t, e))?
            };
            let target = eq.assigned().expect("algebraic equations assign a variable");
            assign(&self.unit, env, target, v).map_err(|e| self.fault(t, e))?;
        }
        Ok(())
    }

    /// Derivatives of the state variables at `(env, t)`.
    fn rates(&self, env: &BTreeMap<String, Value>, t: f64) -> Result<Vec<f64>, RuntimeFault> {
        let mut env = env.clone();
        self.solve_algebraic(&mut env, t)?;
        let ctx = EvalCtx {
            vars: &env,
            lib: &self.lib,
            time: t,
            timeout: false,
            depth: 0,
        };
        self.derivatives
            .iter()
            .map(|(_, i)| {
                let v = eval(&self.unit.equations[*i].rhs, &ctx).map_err(|e| self.fault(t, e))?;
                v.as_f64().ok_or_else(|| {
                    self.fault(
                        t,
                        EvalError {
                            kind: FaultKind::TypeError,
                            message: "derivative is not numeric".into(),
                        },
                    )
                })
            })
            .collect()
    }

    fn with_states(&self, base: &BTreeMap<String, Value>, xs: &[f64]) -> Result<BTreeMap<String, Value>, RuntimeFault> {
        let mut env = base.clone();
        for ((name, _), x) in self.derivatives.iter().zip(xs) {
            if !x.is_finite() {
                return Err(self.fault(
                    self.last_time,
                    EvalError {
                        kind: FaultKind::Domain,
                        message: format!("state `{name}` diverged"),
                    },
                ));
            }
            assign(&self.unit, &mut env, name, Value::Real(*x)).map_err(|e| self.fault(self.last_time, e))?;
        }
        Ok(env)
    }

    fn states(&self) -> Vec<f64> {
        self.derivatives
            .iter()
            .map(|(n, _)| self.value_env.get(n).and_then(Value::as_f64).unwrap_or(0.0))
            .collect()
    }

    /// Integrates from `last_time` to `t` in one step.
    pub fn advance(&mut self, t: f64, integrator: Integrator) -> Result<(), RuntimeFault> {
        let dt = t - self.last_time;
        if dt <= 0.0 {
            return Ok(());
        }
        let t0 = self.last_time;
        let x0 = self.states();
        let x1: Vec<f64> = match integrator {
            Integrator::ExplicitEuler => {
                let k1 = self.rates(&self.value_env, t0)?;
                x0.iter().zip(&k1).map(|(x, k)| x + dt * k).collect()
            }
            Integrator::Rk4 => {
                let stage = |k: &[f64], h: f64| -> Vec<f64> { x0.iter().zip(k).map(|(x, k)| x + h * k).collect() };
                let k1 = self.rates(&self.value_env, t0)?;
                let k2 = self.rates(&self.with_states(&self.value_env, &stage(&k1, dt / 2.0))?, t0 + dt / 2.0)?;
                let k3 = self.rates(&self.with_states(&self.value_env, &stage(&k2, dt / 2.0))?, t0 + dt / 2.0)?;
                let k4 = self.rates(&self.with_states(&self.value_env, &stage(&k3, dt))?, t)?;
                (0..x0.len())
                    .map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        self.last_time = t;
        let mut env = self.with_states(&self.value_env, &x1)?;
        self.solve_algebraic(&mut env, t)?;
        self.value_env = env;
        Ok(())
    }

    /// Sets delivered input values; algebraic outputs are refreshed at the
    /// next sample.
    pub fn receive(&mut self, inputs: &[PortEvent], now: f64) -> Result<(), RuntimeFault> {
        for ev in inputs {
            let unit = Arc::clone(&self.unit);
            assign(&unit, &mut self.value_env, &ev.port, ev.value.clone()).map_err(|e| self.fault(now, e))?;
        }
        Ok(())
    }

    /// Current value of every output port, in declaration order.
    pub fn sample(&self, now: f64) -> Vec<PortEvent> {
        self.unit
            .ports
            .iter()
            .filter(|p| p.direction == Some(Direction::Output))
            .map(|p| PortEvent {
                time: now,
                part_path: self.part_path.clone(),
                port: p.name.clone(),
                value: self.value_env[&p.name].clone(),
                kind: EventKind::Output,
            })
            .collect()
    }
}

/// Order in which algebraic equations must be evaluated, or the variables
/// on a dependency cycle.
fn algebraic_order(unit: &ModelUnit) -> Result<Vec<usize>, Vec<String>> {
    let alg: Vec<(usize, &str)> = unit
        .equations
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.assigned().map(|v| (i, v)))
        .collect();
    let producer: BTreeMap<&str, usize> = alg.iter().map(|(i, v)| (*v, *i)).collect();
    let mut order = Vec::new();
    let mut done = BTreeSet::new();
    let mut visiting = Vec::new();

    fn visit<'a>(
        i: usize,
        unit: &'a ModelUnit,
        producer: &BTreeMap<&'a str, usize>,
        done: &mut BTreeSet<usize>,
        visiting: &mut Vec<usize>,
        order: &mut Vec<usize>,
    ) -> Result<(), Vec<String>> {
        if done.contains(&i) {
            return Ok(());
        }
        if let Some(pos) = visiting.iter().position(|&j| j == i) {
            return Err(visiting[pos..]
                .iter()
                .filter_map(|&j| unit.equations[j].assigned().map(str::to_string))
                .collect());
        }
        visiting.push(i);
        for v in unit.equations[i].rhs.vars() {
            if let Some(&j) = producer.get(v.as_str()) {
                visit(j, unit, producer, done, visiting, order)?;
            }
        }
        visiting.pop();
        done.insert(i);
        order.push(i);
        Ok(())
    }

    for (i, _) in &alg {
        visit(*i, unit, &producer, &mut done, &mut visiting, &mut order)?;
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_unit;

    fn runtime(src: &str) -> Result<ContinuousRuntime, RuntimeFault> {
        ContinuousRuntime::new("c", Arc::new(parse_unit(src).unwrap()), Arc::default(), 0.0)
    }

    #[test]
    fn algebraic_equations_are_ordered() {
        let rt = runtime("continuous C\nport:\n output Real y;\nvalue:\n Real a;\nequation:\n y = a * 2;\n a = 3.0;\nend;")
            .unwrap();
        assert_eq!(rt.value_env["y"], Value::Real(6.0));
    }

    #[test]
    fn algebraic_loop_is_a_fault() {
        let err = runtime("continuous C\nvalue:\n Real a;\n Real b;\nequation:\n a = b;\n b = a + 1;\nend;").unwrap_err();
        assert_eq!(err.kind, FaultKind::AlgebraicLoop);
    }

    #[test]
    fn euler_constant_rate_is_exact() {
        let mut rt = runtime("continuous C\nvalue:\n Real x = 0.0;\nequation:\n der(x) = 1;\nend;").unwrap();
        for k in 1..=10 {
            rt.advance(k as f64 * 0.1, Integrator::ExplicitEuler).unwrap();
        }
        assert_eq!(rt.value_env["x"], Value::Real(1.0));
    }

    #[test]
    fn rk4_beats_euler_on_exponential() {
        let src = "continuous C\nvalue:\n Real x = 1.0;\nequation:\n der(x) = x;\nend;";
        let run = |integ| {
            let mut rt = runtime(src).unwrap();
            for k in 1..=10 {
                rt.advance(k as f64 * 0.1, integ).unwrap();
            }
            rt.value_env["x"].as_f64().unwrap()
        };
        let e = std::f64::consts::E;
        assert!((run(Integrator::Rk4) - e).abs() < (run(Integrator::ExplicitEuler) - e).abs());
        assert!((run(Integrator::Rk4) - e).abs() < 1e-5);
    }
}
