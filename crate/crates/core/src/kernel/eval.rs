//! Expression evaluation shared by discrete, continuous and function units.

use std::collections::BTreeMap;

use crate::model::{BinOp, Direction, Expr, ModelUnit, UnOp};

use super::{FaultKind, Value};

const MAX_CALL_DEPTH: usize = 32;

/// Function units available to calls, by name.
pub type FunctionLib = BTreeMap<String, ModelUnit>;

/// Evaluation failure, lifted into a `RuntimeFault` by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub kind: FaultKind,
    pub message: String,
}

impl EvalError {
    fn new(kind: FaultKind, message: impl Into<String>) -> Self {
        EvalError {
            kind,
            message: message.into(),
        }
    }
}

pub struct EvalCtx<'a> {
    pub vars: &'a BTreeMap<String, Value>,
    pub lib: &'a FunctionLib,
    pub time: f64,
    pub timeout: bool,
    pub depth: usize,
}

fn num(v: &Value, what: &str) -> Result<f64, EvalError> {
    v.as_f64()
        .ok_or_else(|| EvalError::new(FaultKind::TypeError, format!("{what} needs a number, got {}", v.type_name())))
}

fn boolean(v: &Value, what: &str) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(EvalError::new(
            FaultKind::TypeError,
            format!("{what} needs a Bool, got {}", other.type_name()),
        )),
    }
}

fn finite(x: f64, what: &str) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::Real(x))
    } else {
        Err(EvalError::new(FaultKind::Domain, format!("{what} produced a non-finite result")))
    }
}

pub fn eval(e: &Expr, ctx: &EvalCtx<'_>) -> Result<Value, EvalError> {
    match e {
        Expr::Lit(l) => Ok(Value::from_literal(l)),
        Expr::Var(v) => ctx
            .vars
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::new(FaultKind::UnknownIdentifier, format!("unknown identifier `{v}`"))),
        Expr::Unary(UnOp::Neg, a) => match eval(a, ctx)? {
            Value::Int(i) => i
                .checked_neg()
                .map(Value::Int)
                .ok_or_else(|| EvalError::new(FaultKind::Domain, "integer overflow")),
            Value::Real(r) => Ok(Value::Real(-r)),
            other => Err(EvalError::new(FaultKind::TypeError, format!("cannot negate {}", other.type_name()))),
        },
        Expr::Unary(UnOp::Not, a) => Ok(Value::Bool(!boolean(&eval(a, ctx)?, "not")?)),
        Expr::Binary(op, a, b) => binary(*op, a, b, ctx),
        Expr::Call(name, args) => call(name, args, ctx),
    }
}

fn binary(op: BinOp, a: &Expr, b: &Expr, ctx: &EvalCtx<'_>) -> Result<Value, EvalError> {
    if matches!(op, BinOp::And | BinOp::Or) {
        let l = boolean(&eval(a, ctx)?, op.symbol())?;
        if (op == BinOp::And && !l) || (op == BinOp::Or && l) {
            return Ok(Value::Bool(l));
        }
        return Ok(Value::Bool(boolean(&eval(b, ctx)?, op.symbol())?));
    }
    let l = eval(a, ctx)?;
    let r = eval(b, ctx)?;
    if op.is_comparison() {
        let ord = match (&l, &r) {
            (Value::Bool(x), Value::Bool(y)) => x.partial_cmp(y),
            (Value::Str(x), Value::Str(y)) => x.partial_cmp(y),
            _ => num(&l, op.symbol())?.partial_cmp(&num(&r, op.symbol())?),
        };
        let ord = ord.ok_or_else(|| EvalError::new(FaultKind::Domain, "unordered comparison"))?;
        use std::cmp::Ordering::*;
        let res = match op {
            BinOp::Eq => ord == Equal,
            BinOp::Ne => ord != Equal,
            BinOp::Lt => ord == Less,
            BinOp::Le => ord != Greater,
            BinOp::Gt => ord == Greater,
            BinOp::Ge => ord != Less,
            _ => unreachable!(),
        };
        return Ok(Value::Bool(res));
    }
    if let (Value::Int(x), Value::Int(y)) = (&l, &r) {
        let (x, y) = (*x, *y);
        let res = match op {
            BinOp::Add => x.checked_add(y),
            BinOp::Sub => x.checked_sub(y),
            BinOp::Mul => x.checked_mul(y),
            BinOp::Div => {
                if y == 0 {
                    return Err(EvalError::new(FaultKind::DivisionByZero, "integer division by zero"));
                }
                x.checked_div(y)
            }
            _ => unreachable!(),
        };
        return res
            .map(Value::Int)
            .ok_or_else(|| EvalError::new(FaultKind::Domain, "integer overflow"));
    }
    let (x, y) = (num(&l, op.symbol())?, num(&r, op.symbol())?);
    let res = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(EvalError::new(FaultKind::DivisionByZero, "division by zero"));
            }
            x / y
        }
        _ => unreachable!(),
    };
    finite(res, op.symbol())
}

fn arity(name: &str, args: &[Expr], n: usize) -> Result<(), EvalError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(EvalError::new(
            FaultKind::Arity,
            format!("`{name}` takes {n} argument(s), got {}", args.len()),
        ))
    }
}

fn call(name: &str, args: &[Expr], ctx: &EvalCtx<'_>) -> Result<Value, EvalError> {
    match name {
        "time" => {
            arity(name, args, 0)?;
            return Ok(Value::Real(ctx.time));
        }
        "timeout" => {
            arity(name, args, 0)?;
            return Ok(Value::Bool(ctx.timeout));
        }
        "der" => {
            return Err(EvalError::new(
                FaultKind::TypeError,
                "der() may only appear on an equation's left-hand side",
            ))
        }
        _ => {}
    }
    let vals = args.iter().map(|a| eval(a, ctx)).collect::<Result<Vec<_>, _>>()?;
    let unary = |f: fn(f64) -> f64| -> Result<Value, EvalError> {
        arity(name, args, 1)?;
        finite(f(num(&vals[0], name)?), name)
    };
    match name {
        "sin" => unary(f64::sin),
        "cos" => unary(f64::cos),
        "exp" => unary(f64::exp),
        "log" => {
            arity(name, args, 1)?;
            let x = num(&vals[0], name)?;
            if x <= 0.0 {
                return Err(EvalError::new(FaultKind::Domain, format!("log of nonpositive value {x}")));
            }
            finite(x.ln(), name)
        }
        "abs" => {
            arity(name, args, 1)?;
            match &vals[0] {
                Value::Int(i) => i
                    .checked_abs()
                    .map(Value::Int)
                    .ok_or_else(|| EvalError::new(FaultKind::Domain, "integer overflow")),
                v => finite(num(v, name)?.abs(), name),
            }
        }
        "min" | "max" => {
            arity(name, args, 2)?;
            let pick_first = {
                let (x, y) = (num(&vals[0], name)?, num(&vals[1], name)?);
                if name == "min" {
                    x <= y
                } else {
                    x >= y
                }
            };
            let chosen = if pick_first { &vals[0] } else { &vals[1] };
            match (&vals[0], &vals[1]) {
                (Value::Int(_), Value::Int(_)) => Ok(chosen.clone()),
                _ => Ok(Value::Real(num(chosen, name)?)),
            }
        }
        _ => call_function_unit(name, vals, ctx),
    }
}

fn call_function_unit(name: &str, args: Vec<Value>, ctx: &EvalCtx<'_>) -> Result<Value, EvalError> {
    let unit = ctx
        .lib
        .get(name)
        .ok_or_else(|| EvalError::new(FaultKind::UnknownFunction, format!("call to undefined function `{name}`")))?;
    if ctx.depth >= MAX_CALL_DEPTH {
        return Err(EvalError::new(FaultKind::Recursion, format!("call depth exceeded in `{name}`")));
    }
    let inputs: Vec<_> = unit.ports.iter().filter(|p| p.direction != Some(Direction::Output)).collect();
    if inputs.len() != args.len() {
        return Err(EvalError::new(
            FaultKind::Arity,
            format!("`{name}` takes {} argument(s), got {}", inputs.len(), args.len()),
        ));
    }
    let mut env = initial_env(unit);
    for (p, v) in inputs.iter().zip(args) {
        let v = v.coerce(p.value_type()).ok_or_else(|| {
            EvalError::new(FaultKind::TypeError, format!("argument `{}` of `{name}` has the wrong type", p.name))
        })?;
        env.insert(p.name.clone(), v);
    }
    for a in &unit.body {
        let inner = EvalCtx {
            vars: &env,
            lib: ctx.lib,
            time: ctx.time,
            timeout: ctx.timeout,
            depth: ctx.depth + 1,
        };
        let v = eval(&a.expr, &inner)?;
        assign(unit, &mut env, &a.target, v)?;
    }
    let out = unit
        .ports
        .iter()
        .find(|p| p.direction == Some(Direction::Output))
        .ok_or_else(|| EvalError::new(FaultKind::TypeError, format!("function `{name}` declares no output port")))?;
    Ok(env[&out.name].clone())
}

/// Parameters, values and ports of `unit` at their declared initial values.
pub fn initial_env(unit: &ModelUnit) -> BTreeMap<String, Value> {
    let mut env = BTreeMap::new();
    for b in unit.parameters.iter().chain(&unit.values) {
        let v = b
            .initial
            .as_ref()
            .and_then(|l| Value::from_literal(l).coerce(b.value_type()))
            .unwrap_or_else(|| Value::default_for(b.value_type()));
        env.insert(b.name.clone(), v);
    }
    for p in &unit.ports {
        let v = p
            .initial
            .as_ref()
            .and_then(|l| Value::from_literal(l).coerce(p.value_type()))
            .unwrap_or_else(|| Value::default_for(p.value_type()));
        env.insert(p.name.clone(), v);
    }
    env
}

/// Stores `v` into slot `target`, converting to the slot's declared type.
pub fn assign(unit: &ModelUnit, env: &mut BTreeMap<String, Value>, target: &str, v: Value) -> Result<(), EvalError> {
    let ty = unit
        .ports
        .iter()
        .find(|p| p.name == target)
        .map(|p| p.value_type())
        .or_else(|| {
            unit.values
                .iter()
                .chain(&unit.parameters)
                .find(|b| b.name == target)
                .map(|b| b.value_type())
        })
        .ok_or_else(|| EvalError::new(FaultKind::UnknownIdentifier, format!("unknown assignment target `{target}`")))?;
    let found = v.type_name();
    let v = v.coerce(ty).ok_or_else(|| {
        EvalError::new(
            FaultKind::TypeError,
            format!("cannot store {found} into `{target}` of type {}", ty.name()),
        )
    })?;
    env.insert(target.to_string(), v);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_expr, parse_unit};

    fn run(src: &str, vars: &[(&str, Value)]) -> Result<Value, EvalError> {
        let vars: BTreeMap<String, Value> = vars.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let lib = FunctionLib::new();
        let ctx = EvalCtx {
            vars: &vars,
            lib: &lib,
            time: 2.5,
            timeout: false,
            depth: 0,
        };
        eval(&parse_expr(src).unwrap(), &ctx)
    }

    #[test]
    fn arithmetic_and_typing() {
        assert_eq!(run("7 / 2", &[]).unwrap(), Value::Int(3));
        assert_eq!(run("7 / 2.0", &[]).unwrap(), Value::Real(3.5));
        assert_eq!(run("x * 2 + 1", &[("x", Value::Real(1.5))]).unwrap(), Value::Real(4.0));
        assert_eq!(run("max(2, 3)", &[]).unwrap(), Value::Int(3));
        assert_eq!(run("time() > 2", &[]).unwrap(), Value::Bool(true));
        assert_eq!(run("not timeout() and 1 < 2", &[]).unwrap(), Value::Bool(true));
    }

    #[test]
    fn faults() {
        assert_eq!(run("1 / 0", &[]).unwrap_err().kind, FaultKind::DivisionByZero);
        assert_eq!(run("1.0 / 0.0", &[]).unwrap_err().kind, FaultKind::DivisionByZero);
        assert_eq!(run("log(0)", &[]).unwrap_err().kind, FaultKind::Domain);
        assert_eq!(run("nope(1)", &[]).unwrap_err().kind, FaultKind::UnknownFunction);
        assert_eq!(run("true + 1", &[]).unwrap_err().kind, FaultKind::TypeError);
        assert_eq!(run("y", &[]).unwrap_err().kind, FaultKind::UnknownIdentifier);
    }

    #[test]
    fn short_circuit() {
        assert_eq!(run("false and 1 / 0 > 0", &[]).unwrap(), Value::Bool(false));
    }

    #[test]
    fn function_units_are_called_positionally() {
        let clamp = parse_unit(
            "function clamp\nport:\n input Real x;\n input Real hi;\n output Real y;\nalgorithm:\n y = min(x, hi);\nend;",
        )
        .unwrap();
        let mut lib = FunctionLib::new();
        lib.insert("clamp".into(), clamp);
        let vars = BTreeMap::new();
        let ctx = EvalCtx {
            vars: &vars,
            lib: &lib,
            time: 0.0,
            timeout: false,
            depth: 0,
        };
        let v = eval(&parse_expr("clamp(5, 3.5)").unwrap(), &ctx).unwrap();
        assert_eq!(v, Value::Real(3.5));
        assert_eq!(eval(&parse_expr("clamp(1)").unwrap(), &ctx).unwrap_err().kind, FaultKind::Arity);
    }
}
